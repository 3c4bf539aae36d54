//! Linear systems in jet variables: prolongation, projection, solved forms
//! and the formal-integrability step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::{axpy, default_names, scale_row, Echelon, Scalar, SparseRow};
use crate::jetspace::{default_unknown_names, jets_up_to, JetVar, MultiIndex};

/// Coefficient field together with its derivations.
///
/// `QX` is ℚ(x1..xn) with ∂_i acting on coefficient variable i. `Params(k)`
/// is ℚ(χ1..χk) where every derivation kills the coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Q,
    QX,
    Params(usize),
}

impl Field {
    pub fn coeff_vars(&self, n: usize) -> usize {
        match self {
            Field::Q => 0,
            Field::QX => n,
            Field::Params(k) => *k,
        }
    }

    /// ∂_i of a coefficient.
    pub fn derive(&self, c: &Scalar, i: usize) -> Scalar {
        match self {
            Field::QX => c.partial_derivative(i).unwrap_or_else(|_| Scalar::zero()),
            _ => Scalar::zero(),
        }
    }

    pub fn coeff_names(&self, var_names: &[String]) -> Vec<String> {
        match self {
            Field::Q => Vec::new(),
            Field::QX => var_names.to_vec(),
            Field::Params(k) => default_names("chi", *k),
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Field::QX)
    }

    pub fn label(&self) -> String {
        match self {
            Field::Q => "Q".to_string(),
            Field::QX => "Q(x)".to_string(),
            Field::Params(k) => format!("Q(chi1..chi{})", k),
        }
    }
}

/// Σ c·y^k_μ = 0.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Equation {
    pub terms: SparseRow<JetVar>,
}

impl Equation {
    pub fn new(terms: SparseRow<JetVar>) -> Self {
        Equation { terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (JetVar, Scalar)>) -> Self {
        let mut terms = SparseRow::new();
        for (j, c) in pairs {
            let e = terms.entry(j.clone()).or_insert_with(Scalar::zero);
            *e = &*e + &c;
            if e.is_zero() {
                terms.remove(&j);
            }
        }
        Equation { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|j| j.order()).max().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<&JetVar> {
        self.terms.keys().next_back()
    }

    pub fn coeff(&self, j: &JetVar) -> Scalar {
        self.terms.get(j).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn scale(&self, c: &Scalar) -> Equation {
        Equation { terms: scale_row(&self.terms, c) }
    }

    /// self − c·other
    pub fn sub_scaled(&self, c: &Scalar, other: &Equation) -> Equation {
        let mut t = self.terms.clone();
        axpy(&mut t, c, &other.terms);
        Equation { terms: t }
    }

    pub fn add(&self, other: &Equation) -> Equation {
        self.sub_scaled(&Scalar::from_int(-1), other)
    }

    /// Scale so that the leading coefficient is 1.
    pub fn monic(&self) -> Equation {
        match self.terms.values().next_back() {
            Some(c) => self.scale(&c.inv().expect("nonzero")),
            None => self.clone(),
        }
    }

    /// Formal derivative d_i.
    pub fn derive(&self, i: usize, field: Field) -> Equation {
        let mut out = SparseRow::new();
        for (j, c) in &self.terms {
            add_into(&mut out, j.plus(i), c.clone());
            let dc = field.derive(c, i);
            if !dc.is_zero() {
                add_into(&mut out, j.clone(), dc);
            }
        }
        Equation { terms: out }
    }

    /// d_ν applied repeatedly.
    pub fn derive_multi(&self, nu: &MultiIndex, field: Field) -> Equation {
        let mut e = self.clone();
        for (i, &k) in nu.0.iter().enumerate() {
            for _ in 0..k {
                e = e.derive(i, field);
            }
        }
        e
    }

    pub fn max_unknown(&self) -> Option<usize> {
        self.terms.keys().map(|j| j.unknown).max()
    }

    /// Terms descending in jet order, e.g. "y[0,2] - x1*y[1,0]".
    pub fn render(&self, unknowns: &[String], coeff_names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (j, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.leading_sign_negative() && !c.is_compound();
            let mag = if neg { -c } else { c.clone() };
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let jet = j.render(unknowns);
            if mag.is_one() {
                out.push_str(&jet);
            } else {
                let cs = mag.render_with(coeff_names);
                if mag.is_compound() {
                    out.push_str(&format!("({})*{}", cs, jet));
                } else {
                    out.push_str(&format!("{}*{}", cs, jet));
                }
            }
        }
        out
    }
}

fn add_into(row: &mut SparseRow<JetVar>, j: JetVar, c: Scalar) {
    match row.get_mut(&j) {
        Some(v) => {
            let nv = &*v + &c;
            if nv.is_zero() {
                row.remove(&j);
            } else {
                *v = nv;
            }
        }
        None => {
            if !c.is_zero() {
                row.insert(j, c);
            }
        }
    }
}

/// A finite list of homogeneous linear equations of order ≤ q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    pub field: Field,
    pub equations: Vec<Equation>,
    pub var_names: Vec<String>,
    pub unknown_names: Vec<String>,
}

impl System {
    pub fn new(n: usize, m: usize, field: Field, equations: Vec<Equation>) -> Self {
        let q = equations.iter().map(|e| e.order()).max().unwrap_or(0);
        System {
            n,
            m,
            q,
            field,
            equations: equations.into_iter().filter(|e| !e.is_zero()).collect(),
            var_names: default_names("x", n),
            unknown_names: default_unknown_names(m),
        }
    }

    pub fn with_order(mut self, q: u32) -> Self {
        self.q = self.q.max(q);
        self
    }

    /// Same shape and names, other equations; the order is recomputed but never below `min_q`.
    pub fn with_equations(&self, equations: Vec<Equation>, min_q: u32) -> System {
        let q = equations.iter().map(|e| e.order()).max().unwrap_or(0).max(min_q);
        System {
            n: self.n,
            m: self.m,
            q,
            field: self.field,
            equations: equations.into_iter().filter(|e| !e.is_zero()).collect(),
            var_names: self.var_names.clone(),
            unknown_names: self.unknown_names.clone(),
        }
    }

    pub fn coeff_names(&self) -> Vec<String> {
        self.field.coeff_names(&self.var_names)
    }

    pub fn render_equations(&self) -> Vec<String> {
        let cn = self.coeff_names();
        self.equations.iter().map(|e| e.render(&self.unknown_names, &cn)).collect()
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.field.is_constant()
            || self.equations.iter().all(|e| e.terms.values().all(|c| c.is_constant()))
    }
}

/// All d_ν-derivatives (|ν| ≤ r) of one equation.
fn derivatives_of(e: &Equation, n: usize, r: u32, field: Field) -> Vec<Equation> {
    let mut out = vec![e.clone()];
    let mut frontier = vec![(e.clone(), 0usize)];
    for _ in 0..r {
        let mut next = Vec::new();
        for (eq, last) in &frontier {
            for i in *last..n {
                let d = eq.derive(i, field);
                out.push(d.clone());
                next.push((d, i));
            }
        }
        frontier = next;
    }
    out
}

/// System of order q+r with all derivatives of order ≤ r of every equation.
pub fn prolong(s: &System, r: u32) -> System {
    let mut eqs = Vec::new();
    for e in &s.equations {
        eqs.extend(derivatives_of(e, s.n, r, s.field));
    }
    s.with_equations(eqs, s.q + r)
}

/// Autoreduced echelon form: principal jets are the pivots.
#[derive(Clone, Debug)]
pub struct SolvedSystem {
    pub base: System,
    /// (principal jet, row with that jet's coefficient 1), principal descending.
    pub principal: Vec<(JetVar, Equation)>,
    /// Every non-principal jet of order ≤ q, ascending.
    pub parametric: Vec<JetVar>,
}

impl SolvedSystem {
    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn m(&self) -> usize {
        self.base.m
    }

    pub fn q(&self) -> u32 {
        self.base.q
    }

    pub fn field(&self) -> Field {
        self.base.field
    }

    pub fn rows(&self) -> impl Iterator<Item = &Equation> {
        self.principal.iter().map(|(_, e)| e)
    }

    pub fn echelon(&self) -> Echelon<JetVar> {
        let mut e = Echelon::new();
        for (i, (_, eq)) in self.principal.iter().enumerate() {
            let tag: SparseRow<usize> = [(i, Scalar::one())].into_iter().collect();
            e.insert_tagged(eq.terms.clone(), tag);
        }
        e
    }

    pub fn is_principal(&self, j: &JetVar) -> bool {
        self.principal.iter().any(|(p, _)| p == j)
    }

    /// Number of parametric jets of order ≤ k.
    pub fn parametric_up_to(&self, k: u32) -> usize {
        self.parametric.iter().filter(|j| j.order() <= k).count()
    }

    /// Rows of strictly lower order than q.
    pub fn lower_order_rows(&self) -> usize {
        self.principal.iter().filter(|(p, _)| p.order() < self.q()).count()
    }
}

/// Gaussian elimination in jet order.
pub fn solved_form(s: &System) -> SolvedSystem {
    let mut ech: Echelon<JetVar> = Echelon::new();
    for e in &s.equations {
        ech.insert(e.terms.clone());
    }
    solved_from_echelon(s, &ech)
}

pub(crate) fn solved_from_echelon(s: &System, ech: &Echelon<JetVar>) -> SolvedSystem {
    let q = ech.pivots().map(|p| p.order()).max().unwrap_or(0).max(s.q);
    let mut principal: Vec<(JetVar, Equation)> = ech
        .rows()
        .map(|(p, r)| (p.clone(), Equation { terms: r.clone() }))
        .collect();
    principal.reverse();
    let parametric = jets_up_to(s.n, s.m, q).into_iter().filter(|j| !ech.is_pivot(j)).collect();
    let base = s.with_equations(principal.iter().map(|(_, e)| e.clone()).collect(), q);
    SolvedSystem { base, principal, parametric }
}

/// Equations of order ≤ q_target in the row space of `s`.
pub fn project(s: &System, q_target: u32) -> System {
    let solved = solved_form(s);
    let eqs = solved
        .principal
        .iter()
        .filter(|(p, _)| p.order() <= q_target)
        .map(|(_, e)| e.clone())
        .collect();
    s.with_equations(eqs, 0).capped(q_target)
}

impl System {
    fn capped(mut self, q: u32) -> System {
        self.q = q;
        self
    }
}

/// One prolong-then-project round at the current order.
pub fn fi_step(s: &System) -> (bool, System) {
    let base = solved_form(s);
    let ech = base.echelon();
    let proj = project(&prolong(s, 1), s.q);
    let mut fresh: Echelon<JetVar> = Echelon::new();
    for e in &proj.equations {
        let r = ech.reduce(e.terms.clone());
        if !r.is_empty() {
            fresh.insert(r);
        }
    }
    let mut eqs: Vec<Equation> = fresh.rows().map(|(_, r)| Equation { terms: r.clone() }).collect();
    eqs.reverse();
    let closed = eqs.is_empty();
    (closed, s.with_equations(eqs, 0).capped(s.q))
}

/// Solved form of R_q: every equation prolonged up to the system order.
pub fn saturate(s: &System) -> SolvedSystem {
    let mut ech: Echelon<JetVar> = Echelon::new();
    for e in &s.equations {
        let r = s.q.saturating_sub(e.order());
        for d in derivatives_of(e, s.n, r, s.field) {
            ech.insert(d.terms);
        }
    }
    solved_from_echelon(s, &ech)
}

/// Repeat fi_step until closed, saturating at each round. Returns R_q and the number of rounds.
pub fn make_formally_integrable(s: &System, mut log: impl FnMut(usize)) -> SolvedSystem {
    let mut cur = saturate(s);
    loop {
        let (closed, new) = fi_step(&cur.base);
        if closed {
            return cur;
        }
        log(new.equations.len());
        let mut eqs = cur.base.equations.clone();
        eqs.extend(new.equations);
        cur = saturate(&cur.base.with_equations(eqs, cur.q()));
    }
}

/// Reduce an equation modulo a solved system.
pub fn normal_form(s: &SolvedSystem, e: &Equation) -> Equation {
    Equation { terms: s.echelon().reduce(e.terms.clone()) }
}

/// Checks `rows` all lie in the row space of `s` prolonged far enough.
pub fn in_row_space(s: &System, extra: u32, rows: &[Equation]) -> bool {
    let p = prolong(s, extra);
    let solved = solved_form(&p);
    let ech = solved.echelon();
    rows.iter().all(|e| ech.reduce(e.terms.clone()).is_empty())
}

pub fn check_arity(s: &System) -> Result<()> {
    for e in &s.equations {
        for j in e.terms.keys() {
            if j.index.n() != s.n || j.unknown >= s.m {
                return Err(PdeError::Precondition(format!("jet {} does not fit n={}, m={}", j, s.n, s.m)));
            }
        }
    }
    Ok(())
}

/// Coefficients of the order-k part of an equation.
pub fn top_part(e: &Equation, k: u32) -> BTreeMap<JetVar, Scalar> {
    e.terms.iter().filter(|(j, _)| j.order() == k).map(|(j, c)| (j.clone(), c.clone())).collect()
}
