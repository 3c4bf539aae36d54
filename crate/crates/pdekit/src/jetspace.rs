//! Multi-indices, jet variables and the canonical jet ordering.
//!
//! Variable and unknown indices are 0-based in code; classes are the
//! 0-based index of the first nonzero exponent. Rendering adds 1.

use std::cmp::Ordering;
use std::fmt;

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::monomial_cmp;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(i: usize, n: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Smallest i with μ_i ≠ 0, or `None` for the zero index.
    pub fn class(&self) -> Option<usize> {
        self.0.iter().position(|&e| e != 0)
    }

    pub fn add_unit(&self, i: usize) -> Result<MultiIndex> {
        if i >= self.n() {
            return Err(PdeError::IndexOutOfRange { index: i, bound: self.n() });
        }
        let mut v = self.0.clone();
        v[i] += 1;
        Ok(MultiIndex(v))
    }

    /// μ + 1_i; panics when i is out of range.
    pub fn plus(&self, i: usize) -> MultiIndex {
        self.add_unit(i).expect("variable index in range")
    }

    pub fn sub_unit(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(MultiIndex(v))
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    /// μ − ν when ν ≤ μ componentwise.
    pub fn sub(&self, o: &MultiIndex) -> Option<MultiIndex> {
        let mut v = Vec::with_capacity(self.n());
        for (a, b) in self.0.iter().zip(&o.0) {
            if b > a {
                return None;
            }
            v.push(a - b);
        }
        Some(MultiIndex(v))
    }

    pub fn divides(&self, o: &MultiIndex) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    /// Π C(μ_i, λ_i).
    pub fn binomial_over(&self, lambda: &MultiIndex) -> u64 {
        self.0
            .iter()
            .zip(&lambda.0)
            .map(|(&m, &l)| binomial(m as u64, l as u64))
            .product()
    }

    /// All multi-indices of order exactly q in n variables, ascending.
    pub fn of_order(n: usize, q: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            let n = cur.len();
            if i + 1 == n {
                cur[i] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[i] = e;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            if q == 0 {
                out.push(MultiIndex(vec![]));
            }
            return out;
        }
        rec(0, q, &mut cur, &mut out);
        out.sort();
        out
    }

    pub fn up_to_order(n: usize, q: u32) -> Vec<MultiIndex> {
        (0..=q).flat_map(|k| MultiIndex::of_order(n, k)).collect()
    }

    /// Concatenated digits: (2,0,1) → "113"; zero index → "".
    pub fn digits(&self, labels: &[usize]) -> String {
        let mut s = String::new();
        for (i, &e) in self.0.iter().enumerate() {
            let l = labels.get(i).copied().unwrap_or(i + 1);
            for _ in 0..e {
                s.push_str(&l.to_string());
            }
        }
        s
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, o: &Self) -> Ordering {
        monomial_cmp(&self.0, &o.0)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Jet coordinate y^k_μ with 0-based unknown k.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetVar {
    pub unknown: usize,
    pub index: MultiIndex,
}

impl JetVar {
    pub fn new(unknown: usize, index: MultiIndex) -> Self {
        JetVar { unknown, index }
    }

    pub fn base(unknown: usize, n: usize) -> Self {
        JetVar { unknown, index: MultiIndex::zero(n) }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }

    pub fn class(&self) -> Option<usize> {
        self.index.class()
    }

    pub fn plus(&self, i: usize) -> JetVar {
        JetVar { unknown: self.unknown, index: self.index.plus(i) }
    }

    pub fn render(&self, names: &[String]) -> String {
        let name = names.get(self.unknown).cloned().unwrap_or_else(|| format!("y{}", self.unknown + 1));
        format!("{}{}", name, self.index)
    }
}

/// Total order: order, then class (class n greatest), then reverse lex on
/// the exponents, then the LOWER unknown index is greater.
pub fn jet_compare(a: &JetVar, b: &JetVar) -> Ordering {
    a.index.cmp(&b.index).then_with(|| b.unknown.cmp(&a.unknown))
}

impl Ord for JetVar {
    fn cmp(&self, o: &Self) -> Ordering {
        jet_compare(self, o)
    }
}

impl PartialOrd for JetVar {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}{}", self.unknown + 1, self.index)
    }
}

/// m·C(n+q, q)
pub fn count_jets(n: usize, m: usize, q: u32) -> usize {
    m * binomial(n + q as usize, q as usize)
}

/// m·C(n+q−1, q)
pub fn count_symbol(n: usize, m: usize, q: u32) -> usize {
    if n == 0 {
        return if q == 0 { m } else { 0 };
    }
    m * binomial(n + q as usize - 1, q as usize)
}

/// Jets of order exactly q, ascending.
pub fn jets_of_order(n: usize, m: usize, q: u32) -> Vec<JetVar> {
    let mut out: Vec<JetVar> = MultiIndex::of_order(n, q)
        .into_iter()
        .flat_map(|mu| (0..m).map(move |k| JetVar::new(k, mu.clone())))
        .collect();
    out.sort();
    out
}

/// Jets of order ≤ q, ascending.
pub fn jets_up_to(n: usize, m: usize, q: u32) -> Vec<JetVar> {
    (0..=q).flat_map(|k| jets_of_order(n, m, k)).collect()
}

/// Unknown names used when none are declared.
pub fn default_unknown_names(m: usize) -> Vec<String> {
    if m == 1 {
        vec!["y".to_string()]
    } else {
        (1..=m).map(|k| format!("y{}", k)).collect()
    }
}
