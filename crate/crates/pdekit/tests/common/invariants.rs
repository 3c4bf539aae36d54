//! Structural invariants checked on any system that completes.

use pdekit::exactalg::Scalar;
use pdekit::involution::{complete_to_involution, direct_dimension, hilbert_function, Caps};
use pdekit::inversesys::{section_basis, spencer_apply};
use pdekit::jetspace::{JetVar, MultiIndex};
use pdekit::modanalysis::adjoint;
use pdekit::pdesys::{prolong, Equation, Field, System};
use pdekit::sequences::{janet_sequence, OperatorMatrix};
use pdekit::symbolcalc::delta_map;
use rand::Rng;

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub systems: usize,
    pub skipped: usize,
    pub checks: usize,
}

/// Small random system: n ≤ 3, m ≤ 2, order ≤ 2, integer coefficients, and
/// optionally polynomial coefficients in the first variable.
pub fn random_system<R: Rng>(rng: &mut R, allow_x: bool) -> System {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=2);
    let q = rng.gen_range(1..=2u32);
    let field = if allow_x && rng.gen_bool(0.25) { Field::QX } else { Field::Q };
    let rows = rng.gen_range(1..=3);
    let mut eqs = Vec::new();
    for _ in 0..rows {
        let terms = rng.gen_range(1..=3);
        let mut pairs = Vec::new();
        for t in 0..terms {
            let ord = if t == 0 { q } else { rng.gen_range(0..=q) };
            let all = MultiIndex::of_order(n, ord);
            let idx = all[rng.gen_range(0..all.len())].clone();
            let mut c = Scalar::from_int(*[-2i64, -1, 1, 2].get(rng.gen_range(0..4)).unwrap());
            if field == Field::QX && rng.gen_bool(0.3) {
                c = &c * &Scalar::var(0, n);
            }
            pairs.push((JetVar::new(rng.gen_range(0..m), idx), c));
        }
        let e = Equation::from_pairs(pairs);
        if !e.is_zero() {
            eqs.push(e);
        }
    }
    if eqs.is_empty() {
        eqs.push(Equation::from_pairs([(JetVar::new(0, MultiIndex::unit(0, n)), Scalar::one())]));
    }
    System::new(n, m, field, eqs)
}

/// ad∘ad on the operator itself; needs no completion.
pub fn check_adjoint(s: &System) -> Result<usize, String> {
    let op = OperatorMatrix::from_system(s);
    if adjoint(&adjoint(&op)).rows != op.rows {
        return Err("ad∘ad differs from the identity".into());
    }
    Ok(1)
}

/// Every invariant; Ok(None) when completion stays out of reach of the caps.
pub fn check_all(s: &System, caps: &Caps) -> Result<Option<usize>, String> {
    let mut checks = check_adjoint(s)?;
    let inv = match complete_to_involution(s, caps) {
        Ok(inv) => inv,
        Err(_) => return Ok(None),
    };
    let sol = &inv.solved;
    let (n, q) = (inv.n(), inv.q());

    for level in q..=q + 1 {
        for k in 0..n.saturating_sub(1) {
            let outer = delta_map(sol, k + 1, level);
            let inner = delta_map(sol, k, level + 1);
            if outer.cols != inner.rows {
                return Err(format!("δ shapes disagree at level {} degree {}", level, k));
            }
            if !outer.mul_mat(&inner).is_zero() {
                return Err(format!("δ² ≠ 0 at level {} degree {}", level, k));
            }
            checks += 1;
        }
    }

    for r in 0..=3 {
        let (h, d) = (hilbert_function(&inv, r), direct_dimension(&inv, r));
        if h != d {
            return Err(format!("dim R_(q+{}): characters give {}, direct count {}", r, h, d));
        }
        checks += 1;
    }

    let js = janet_sequence(&inv).map_err(|e| format!("janet sequence: {}", e))?;
    for w in js.operators.windows(2) {
        let c = w[1].compose(&w[0]).map_err(|e| e.to_string())?;
        if !c.is_zero() {
            return Err("consecutive Janet operators do not compose to zero".into());
        }
        checks += 1;
    }
    let top = inv.characters.alpha[n - 1];
    if js.euler != top {
        return Err(format!("Euler sum {} but top character {}", js.euler, top));
    }
    checks += 1;

    for r in 0..=2u32 {
        let b = section_basis(sol, r);
        let p = prolong(&sol.base, r);
        for f in &b.sections {
            for e in &p.equations {
                if !f.contract(e).is_zero() {
                    return Err(format!("section not orthogonal at truncation {}", q + r));
                }
            }
            checks += 1;
        }
        if r == 2 {
            for f in &b.sections {
                for i in 0..n {
                    for j in i + 1..n {
                        let a = spencer_apply(&spencer_apply(f, i).unwrap(), j).unwrap();
                        let c = spencer_apply(&spencer_apply(f, j).unwrap(), i).unwrap();
                        if a != c {
                            return Err(format!("d{} d{} ≠ d{} d{} on a section", i + 1, j + 1, j + 1, i + 1));
                        }
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(Some(checks))
}

pub fn small_caps(s: &System) -> Caps {
    Caps { max_order: Some(s.q + 3), ..Caps::default() }
}
