//! Symbols g_{q+r}, the δ-map and δ-cohomology.

use std::collections::BTreeMap;

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::exactalg::{rank, Echelon, Scalar, ScalarMatrix, SparseRow};
use crate::jetspace::{jets_of_order, JetVar};
use crate::pdesys::{prolong, top_part, SolvedSystem};

/// Basis of g_level, one vector per parametric jet of that order.
///
/// Every basis vector has value 1 at its own parametric jet and 0 at the
/// other parametric jets, so coordinates are read off parametric values.
#[derive(Clone, Debug)]
pub struct SymbolSpace {
    pub level: u32,
    pub parametric: Vec<JetVar>,
    pub basis: Vec<SparseRow<JetVar>>,
}

impl SymbolSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a vector of g_level in this basis.
    pub fn coordinates(&self, v: &SparseRow<JetVar>) -> Vec<Scalar> {
        self.parametric.iter().map(|p| v.get(p).cloned().unwrap_or_else(Scalar::zero)).collect()
    }

    /// Dense columns over all jets of the level, ascending.
    pub fn dense(&self, n: usize, m: usize) -> Vec<Vec<Scalar>> {
        let jets = jets_of_order(n, m, self.level);
        self.basis
            .iter()
            .map(|b| jets.iter().map(|j| b.get(j).cloned().unwrap_or_else(Scalar::zero)).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaComplexReport {
    pub level: u32,
    pub s: usize,
    pub z: usize,
    pub b: usize,
    pub h: usize,
}

/// Symbol at an arbitrary level; below q it is the full S_level T*⊗E.
pub fn symbol_at(s: &SolvedSystem, level: u32) -> SymbolSpace {
    let (n, m, q) = (s.n(), s.m(), s.q());
    let mut ech: Echelon<JetVar> = Echelon::new();
    if level >= q {
        let p = prolong(&s.base, level - q);
        for e in &p.equations {
            let t = top_part(e, level);
            if !t.is_empty() {
                ech.insert(t);
            }
        }
    }
    let parametric: Vec<JetVar> = jets_of_order(n, m, level).into_iter().filter(|j| !ech.is_pivot(j)).collect();
    let basis = parametric
        .iter()
        .map(|p| {
            let mut v = SparseRow::new();
            v.insert(p.clone(), Scalar::one());
            for (piv, row) in ech.rows() {
                if let Some(c) = row.get(p) {
                    v.insert(piv.clone(), -c);
                }
            }
            v
        })
        .collect();
    SymbolSpace { level, parametric, basis }
}

/// g_{q+r}.
pub fn symbol(s: &SolvedSystem, r: u32) -> SymbolSpace {
    symbol_at(s, s.q() + r)
}

/// Increasing s-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, s, &mut Vec::new(), &mut out);
    out
}

fn delta_between(upper: &SymbolSpace, lower: &SymbolSpace, n: usize, s: usize) -> ScalarMatrix {
    let src = subsets(n, s);
    let dst = subsets(n, s + 1);
    let src_pos: BTreeMap<&Vec<usize>, usize> = src.iter().enumerate().map(|(k, i)| (i, k)).collect();
    let du = upper.dim();
    let dl = lower.dim();
    let mut mat = ScalarMatrix::zeros(dst.len() * dl, src.len() * du);
    for (jk, jset) in dst.iter().enumerate() {
        for (pos, &i) in jset.iter().enumerate() {
            let rest: Vec<usize> = jset.iter().copied().filter(|&k| k != i).collect();
            let ik = src_pos[&rest];
            let sign = if pos % 2 == 0 { Scalar::one() } else { Scalar::from_int(-1) };
            for (b, p) in lower.parametric.iter().enumerate() {
                let shifted = p.plus(i);
                for (a, vec) in upper.basis.iter().enumerate() {
                    if let Some(c) = vec.get(&shifted) {
                        let (row, col) = (jk * dl + b, ik * du + a);
                        let v = mat.get(row, col) + &(&sign * c);
                        mat.set(row, col, v);
                    }
                }
            }
        }
    }
    mat
}

/// δ: ∧^s T*⊗g_{level+1} → ∧^{s+1} T*⊗g_level.
pub fn delta_map(s: &SolvedSystem, form_degree: usize, level: u32) -> ScalarMatrix {
    let upper = symbol_at(s, level + 1);
    let lower = symbol_at(s, level);
    delta_between(&upper, &lower, s.n(), form_degree)
}

/// Cohomology at ∧^s T*⊗g_level.
pub fn delta_cohomology(s: &SolvedSystem, form_degree: usize, level: u32) -> DeltaComplexReport {
    let n = s.n();
    let here = symbol_at(s, level);
    let cols = binomial(n, form_degree) * here.dim();
    let z = if form_degree >= n || level == 0 {
        cols
    } else {
        let below = symbol_at(s, level - 1);
        cols - rank(&delta_between(&here, &below, n, form_degree))
    };
    let b = if form_degree == 0 {
        0
    } else {
        let above = symbol_at(s, level + 1);
        rank(&delta_between(&above, &here, n, form_degree - 1))
    };
    DeltaComplexReport { level, s: form_degree, z, b, h: z - b }
}

/// First r ≤ r_cap with g_{q+r} = 0.
pub fn finite_type(s: &SolvedSystem, r_cap: u32) -> Option<u32> {
    (0..=r_cap).find(|&r| symbol(s, r).dim() == 0)
}

/// Symbol involutivity by cohomology, checked at levels q and q+1.
pub fn symbol_is_involutive(s: &SolvedSystem) -> bool {
    (0..=1).all(|r| (1..=s.n()).all(|k| delta_cohomology(s, k, s.q() + r).h == 0))
}
