//! Operator matrices, compatibility conditions, Janet sequences, graded
//! resolutions and Spencer forms.

use std::collections::BTreeMap;

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::{rank, Echelon, Scalar, SparseRow};
use crate::involution::{involution_check, janet_board, multiplicative_span, InvolutiveSystem, JanetBoard};
use crate::jetspace::{jets_of_order, JetVar, MultiIndex};
use crate::pdesys::{prolong, saturate, solved_form, Equation, Field, SolvedSystem, System};
use crate::symbolcalc::{delta_cohomology, delta_map};

/// Matrix of operators; row r is Σ a·d_μ applied to source unknown k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    pub n: usize,
    pub field: Field,
    /// Number of unknowns the operator acts on.
    pub source: usize,
    pub rows: Vec<Equation>,
}

impl OperatorMatrix {
    pub fn new(n: usize, field: Field, source: usize, rows: Vec<Equation>) -> Self {
        OperatorMatrix { n, field, source, rows }
    }

    pub fn from_system(s: &System) -> Self {
        OperatorMatrix { n: s.n, field: s.field, source: s.m, rows: s.equations.clone() }
    }

    pub fn target(&self) -> usize {
        self.rows.len()
    }

    pub fn order(&self) -> u32 {
        self.rows.iter().map(|e| e.order()).max().unwrap_or(0)
    }

    /// self ∘ inner: substitute inner's rows for self's unknowns.
    pub fn compose(&self, inner: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.source != inner.target() {
            return Err(PdeError::DimensionMismatch(format!(
                "outer acts on {} unknowns, inner has {} rows",
                self.source,
                inner.target()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = Equation::default();
                for (j, c) in &row.terms {
                    let d = inner.rows[j.unknown].derive_multi(&j.index, self.field);
                    acc = acc.sub_scaled(&-c, &d);
                }
                acc
            })
            .collect();
        Ok(OperatorMatrix { n: self.n, field: self.field, source: inner.source, rows })
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_zero())
    }

    pub fn as_system(&self, unknown_names: Vec<String>, var_names: Vec<String>) -> System {
        let mut s = System::new(self.n, self.source, self.field, self.rows.clone());
        s.unknown_names = unknown_names;
        s.var_names = var_names;
        s
    }
}

/// Unknown names of stage k: y, Phi, Psi, Omega, then Theta_k.
pub fn stage_names(stage: usize, count: usize) -> Vec<String> {
    let letter = match stage {
        0 => "Phi".to_string(),
        1 => "Psi".to_string(),
        2 => "Omega".to_string(),
        k => format!("Theta{}_", k),
    };
    (1..=count).map(|k| format!("{}{}", letter, k)).collect()
}

/// One stage of compatibility conditions.
#[derive(Clone, Debug)]
pub struct CcStage {
    /// The conditions as a solved system in the previous stage's unknowns.
    pub solved: SolvedSystem,
    pub board: JanetBoard,
    /// 1-based name of each solved row, in `solved.principal` order.
    pub names: Vec<usize>,
    /// False when reduction changed the generated rows, in which case names
    /// follow the board from the top.
    pub names_preserved: bool,
    /// Generated conditions; row k−1 carries name k.
    pub operator: OperatorMatrix,
}

/// Conditions from the non-multiplicative prolongations of an involutive
/// solved system. `unknown_of_row[r]` is the unknown standing for board row r.
fn cc_stage(s: &SolvedSystem, unknown_of_row: &[usize], names: Vec<String>) -> Result<CcStage> {
    let n = s.n();
    let field = s.field();
    let board = janet_board(s);
    let span = multiplicative_span(s, &board);
    let p = s.principal.len();
    let zero = MultiIndex::zero(n);
    let mut generated: Vec<Equation> = Vec::new();
    for r in &board.rows {
        let e = &s.principal[r.eq].1;
        for j in (0..n).rev() {
            if r.multiplicative.contains(&j) {
                continue;
            }
            let (rem, comb) = span.express(e.derive(j, field).terms);
            if !rem.is_empty() {
                return Err(PdeError::NotInvolutive(format!(
                    "row {} prolonged by d{} does not reduce",
                    r.eq + 1,
                    j + 1
                )));
            }
            let mut pairs = vec![(JetVar::new(unknown_of_row[r.eq], MultiIndex::unit(j, n)), Scalar::one())];
            for (tag, c) in comb {
                let (t, idx) = if tag < p { (tag, zero.clone()) } else { (tag % p, MultiIndex::unit(tag / p - 1, n)) };
                pairs.push((JetVar::new(unknown_of_row[t], idx), -c));
            }
            generated.push(Equation::from_pairs(pairs));
        }
    }
    let total = generated.len();
    let mut sys = System::new(n, p, field, generated.clone());
    sys.var_names = s.base.var_names.clone();
    sys.unknown_names = names;
    let solved = solved_form(&sys);
    let board = janet_board(&solved);
    if total > 0 && !involution_check(&solved).involutive {
        return Err(PdeError::NotInvolutive("compatibility conditions are not involutive".into()));
    }
    let mut row_names = Vec::new();
    for (piv, row) in &solved.principal {
        let hit = generated
            .iter()
            .position(|g| g.leading() == Some(piv) && g.monic() == *row)
            .map(|k| total - k);
        row_names.push(hit);
    }
    let names_preserved = row_names.iter().all(|h| h.is_some());
    let names: Vec<usize> = if names_preserved {
        row_names.into_iter().map(|h| h.expect("checked")).collect()
    } else {
        (0..solved.principal.len()).map(|k| solved.principal.len() - k).collect()
    };
    let mut op_rows = vec![Equation::default(); total];
    if names_preserved {
        for (k, g) in generated.into_iter().enumerate() {
            op_rows[total - 1 - k] = g;
        }
    } else {
        for (k, (_, row)) in solved.principal.iter().enumerate() {
            op_rows[names[k] - 1] = row.clone();
        }
        op_rows.truncate(solved.principal.len());
    }
    let operator = OperatorMatrix { n, field, source: p, rows: op_rows };
    Ok(CcStage { solved, board, names, names_preserved, operator })
}

/// Φ unknown for each board row: numbering runs from p at the top to 1 at the bottom.
fn first_stage_unknowns(p: usize) -> Vec<usize> {
    (0..p).map(|r| p - 1 - r).collect()
}

/// The system as an operator whose row u is Φ^{u+1}.
pub fn system_operator(inv: &InvolutiveSystem) -> OperatorMatrix {
    let p = inv.solved.principal.len();
    let mut rows = vec![Equation::default(); p];
    for (r, (_, e)) in inv.solved.principal.iter().enumerate() {
        rows[p - 1 - r] = e.clone();
    }
    OperatorMatrix { n: inv.n(), field: inv.field(), source: inv.m(), rows }
}

/// First-order compatibility conditions 𝒟₁ of an involutive system.
pub fn compatibility_conditions(inv: &InvolutiveSystem) -> Result<CcStage> {
    let p = inv.solved.principal.len();
    cc_stage(&inv.solved, &first_stage_unknowns(p), stage_names(0, p))
}

#[derive(Clone, Debug)]
pub struct JanetSequence {
    /// F_0, F_1, … (fiber dimensions after E).
    pub fiber_dims: Vec<usize>,
    /// 𝒟, 𝒟₁, 𝒟₂, …
    pub operators: Vec<OperatorMatrix>,
    /// Board of the system, then of each stage of conditions.
    pub boards: Vec<JanetBoard>,
    pub names_preserved: Vec<bool>,
    /// m − F_0 + F_1 − …
    pub euler: i64,
    pub compositions_vanish: bool,
}

impl JanetSequence {
    /// Rendered rows of operator k, using the stage letters.
    pub fn render_operator(&self, k: usize, y_names: &[String], coeff_names: &[String]) -> Vec<String> {
        let op = &self.operators[k];
        let names = if k == 0 { y_names.to_vec() } else { stage_names(k - 1, op.source) };
        op.rows.iter().map(|r| r.render(&names, coeff_names)).collect()
    }
}

pub fn janet_sequence(inv: &InvolutiveSystem) -> Result<JanetSequence> {
    let n = inv.n();
    let p = inv.solved.principal.len();
    let mut fiber_dims = vec![p];
    let mut operators = vec![system_operator(inv)];
    let mut boards = vec![inv.board.clone()];
    let mut names_preserved = Vec::new();
    if p > 0 {
        let mut stage = compatibility_conditions(inv)?;
        for k in 0..n {
            if stage.solved.principal.is_empty() {
                break;
            }
            fiber_dims.push(stage.operator.target());
            boards.push(stage.board.clone());
            names_preserved.push(stage.names_preserved);
            operators.push(stage.operator.clone());
            let unknowns: Vec<usize> = stage.names.iter().map(|&k| k - 1).collect();
            let count = stage.operator.target();
            stage = cc_stage(&stage.solved, &unknowns, stage_names(k + 1, count))?;
        }
    }
    let mut euler = inv.m() as i64;
    for (k, f) in fiber_dims.iter().enumerate() {
        euler += if k % 2 == 0 { -(*f as i64) } else { *f as i64 };
    }
    let mut compositions_vanish = true;
    for w in operators.windows(2) {
        if !w[1].compose(&w[0])?.is_zero() {
            compositions_vanish = false;
        }
    }
    Ok(JanetSequence { fiber_dims, operators, boards, names_preserved, euler, compositions_vanish })
}

/// Graded free resolution ranks read off the δ-cohomology of the symbol.
///
/// This is the formally-integrable path: the system need not be involutive,
/// only homogeneous of one order, constant-coefficient and formally integrable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeResolution {
    /// β_0 = m, β_1, … β_n.
    pub ranks: Vec<usize>,
    /// For each homological degree, (degree, count) of the generators.
    pub shifts: Vec<Vec<(u32, usize)>>,
    pub euler: i64,
    /// Levels summed over.
    pub levels: u32,
    pub involutive: bool,
}

pub fn free_resolution(s: &SolvedSystem) -> Result<FreeResolution> {
    let (n, q) = (s.n(), s.q());
    if !s.base.is_constant_coefficient() {
        return Err(PdeError::NotConstantCoefficients);
    }
    if s.principal.iter().any(|(_, e)| e.terms.keys().any(|j| j.order() != q)) {
        return Err(PdeError::Precondition("every equation must be homogeneous of the system order".into()));
    }
    if !crate::pdesys::fi_step(&s.base).0 {
        return Err(PdeError::NotFormallyIntegrable { order: q });
    }
    let involutive = involution_check(s).involutive;
    let cap = q + 10;
    let quiet = |level: u32| (1..=n).all(|k| delta_cohomology(s, k, level).h == 0);
    let mut top = q;
    while top < cap && !(quiet(top) && quiet(top + 1)) {
        top += 1;
    }
    let mut ranks = vec![0usize; n + 1];
    let mut shifts = vec![Vec::new(); n + 1];
    for level in 0..=top + 1 {
        for (k, slot) in ranks.iter_mut().enumerate() {
            let h = delta_cohomology(s, k, level).h;
            if h > 0 {
                *slot += h;
                shifts[k].push((level + k as u32, h));
            }
        }
    }
    let euler = ranks.iter().enumerate().map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum();
    Ok(FreeResolution { ranks, shifts, euler, levels: top + 1, involutive })
}

/// First-order system in new unknowns z, each standing for one jet of y.
#[derive(Clone, Debug)]
pub struct SpencerForm {
    pub unknowns: Vec<JetVar>,
    pub solved: SolvedSystem,
}

impl SpencerForm {
    /// "z3 = y[0,1]" style legend.
    pub fn legend(&self, y_names: &[String]) -> Vec<String> {
        self.unknowns
            .iter()
            .enumerate()
            .map(|(k, j)| format!("z{} = {}", k + 1, j.render(y_names)))
            .collect()
    }
}

fn spencer_system(n: usize, field: Field, var_names: &[String], count: usize, eqs: Vec<Equation>) -> SolvedSystem {
    let mut sys = System::new(n, count, field, eqs).with_order(1);
    sys.var_names = var_names.to_vec();
    sys.unknown_names = (1..=count).map(|k| format!("z{}", k)).collect();
    solved_form(&sys)
}

/// R_{q+1} ⊂ J_1(R_q) written in the parametric jets of R_q.
pub fn spencer_form(inv: &InvolutiveSystem) -> Result<SpencerForm> {
    let n = inv.n();
    let field = inv.field();
    let unknowns = inv.solved.parametric.clone();
    let next = saturate(&prolong(&inv.solved.base, 1));
    let ech = next.echelon();
    let nf = |j: &JetVar| ech.reduce([(j.clone(), Scalar::one())].into_iter().collect());
    let mut coords: Echelon<JetVar> = Echelon::new();
    let mut relations = Vec::new();
    let zero = MultiIndex::zero(n);
    for (k, jet) in unknowns.iter().enumerate() {
        for slot in 0..=n {
            let image = if slot == 0 { nf(jet) } else { nf(&jet.plus(slot - 1)) };
            let tag: SparseRow<usize> = [(k * (n + 1) + slot, Scalar::one())].into_iter().collect();
            let (rem, tag) = coords.reduce_tagged(image, tag);
            if rem.is_empty() {
                relations.push(tag);
            } else {
                coords.insert_tagged(rem, tag);
            }
        }
    }
    let eqs = relations
        .into_iter()
        .map(|t| {
            Equation::from_pairs(t.into_iter().map(|(c, v)| {
                let (k, slot) = (c / (n + 1), c % (n + 1));
                let idx = if slot == 0 { zero.clone() } else { MultiIndex::unit(slot - 1, n) };
                (JetVar::new(k, idx), v)
            }))
        })
        .collect();
    let solved = spencer_system(n, field, &inv.solved.base.var_names, unknowns.len(), eqs);
    Ok(SpencerForm { unknowns, solved })
}

/// Replace every top-order jet y_μ by d_c z^{μ−1_c} (c = class of μ) and add
/// the commutation relations among the z of order q−1.
pub fn derivative_reduction(inv: &InvolutiveSystem) -> Result<SpencerForm> {
    let (n, m, q) = (inv.n(), inv.m(), inv.q());
    if q == 0 {
        return Err(PdeError::Precondition("order must be positive".into()));
    }
    if inv.solved.principal.iter().any(|(_, e)| e.terms.keys().any(|j| j.order() != q)) {
        return Err(PdeError::Precondition("every equation must be homogeneous of the system order".into()));
    }
    let unknowns = jets_of_order(n, m, q - 1);
    let pos: BTreeMap<JetVar, usize> = unknowns.iter().enumerate().map(|(k, j)| (j.clone(), k)).collect();
    let lift = |j: &JetVar, i: usize| -> JetVar {
        let base = JetVar::new(j.unknown, j.index.sub_unit(i).expect("positive exponent"));
        JetVar::new(pos[&base], MultiIndex::unit(i, n))
    };
    let mut eqs: Vec<Equation> = inv
        .solved
        .principal
        .iter()
        .map(|(_, e)| {
            Equation::from_pairs(e.terms.iter().map(|(j, c)| (lift(j, j.class().expect("positive order")), c.clone())))
        })
        .collect();
    for top in jets_of_order(n, m, q) {
        let c = top.class().expect("positive order");
        for i in c + 1..n {
            if top.index.get(i) > 0 {
                eqs.push(Equation::from_pairs([(lift(&top, i), Scalar::one()), (lift(&top, c), Scalar::from_int(-1))]));
            }
        }
    }
    let solved = spencer_system(n, inv.field(), &inv.solved.base.var_names, unknowns.len(), eqs);
    Ok(SpencerForm { unknowns, solved })
}

/// Spencer form after absorbing the class-n parametric unknowns.
#[derive(Clone, Debug)]
pub struct ReducedSpencer {
    pub solved: SolvedSystem,
    /// y^k = Σ … in the new unknowns, one row per unknown.
    pub substitution: OperatorMatrix,
    /// Class-n rows use y^{β+1..m} only through lower-class jets and the
    /// other classes do not use them at all.
    pub reduced: bool,
}

pub fn reduce_spencer_form(s: &SolvedSystem) -> Result<ReducedSpencer> {
    let (n, m) = (s.n(), s.m());
    if s.q() != 1 {
        return Err(PdeError::NotFirstOrder);
    }
    if s.principal.iter().any(|(p, _)| p.order() == 0) {
        return Err(PdeError::Precondition("zero-order equations present".into()));
    }
    if !involution_check(s).involutive {
        return Err(PdeError::NotInvolutive("spencer form".into()));
    }
    let field = s.field();
    let top = n - 1;
    let board = janet_board(s);
    let beta = board.beta[top];
    let class_n: Vec<&(JetVar, Equation)> = s.principal.iter().filter(|(p, _)| p.class() == Some(top)).collect();
    if class_n.iter().any(|(p, _)| p.unknown >= beta) {
        return Err(PdeError::Precondition("class-n principal unknowns are not the first ones".into()));
    }
    let zero = MultiIndex::zero(n);
    let mut subs: Vec<Equation> = (0..m).map(|k| Equation::from_pairs([(JetVar::new(k, zero.clone()), Scalar::one())])).collect();
    for (p, e) in &class_n {
        let mut pairs = vec![(JetVar::new(p.unknown, zero.clone()), Scalar::one())];
        for (j, c) in &e.terms {
            if j.unknown >= beta && j.class() == Some(top) && j.order() == 1 {
                pairs.push((JetVar::new(j.unknown, zero.clone()), -c));
            }
        }
        subs[p.unknown] = Equation::from_pairs(pairs);
    }
    let substitution = OperatorMatrix { n, field, source: m, rows: subs };
    let rows = OperatorMatrix { n, field, source: m, rows: s.base.equations.clone() }.compose(&substitution)?;
    let mut sys = s.base.with_equations(rows.rows, 1);
    sys.q = 1;
    let solved = solved_form(&sys);
    let reduced = solved.principal.iter().all(|(p, e)| {
        e.terms.keys().filter(|j| j.unknown >= beta).all(|j| p.class() == Some(top) && j.class() != Some(top))
    });
    Ok(ReducedSpencer { solved, substitution, reduced })
}

/// dim C_r for r = 0..n.
pub fn spencer_bundle_dims(inv: &InvolutiveSystem) -> Vec<usize> {
    let n = inv.n();
    let q = inv.q();
    let rq = inv.solved.parametric.len();
    let mut out = vec![rq];
    for r in 1..=n {
        let delta = delta_map(&inv.solved, r - 1, q);
        out.push(binomial(n, r) * rq - rank(&delta));
    }
    out
}
