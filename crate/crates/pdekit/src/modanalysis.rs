//! Module-side analysis: adjoint operators, codimension, torsion, relative
//! localization and the purity filtration.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::{Echelon, MultiPoly, Scalar, SparseRow};
use crate::involution::{complete_to_involution, Caps, InvolutiveSystem};
use crate::jetspace::{JetVar, MultiIndex};
use crate::pdesys::{prolong, saturate, Equation, Field, System};
use crate::sequences::{spencer_form, OperatorMatrix};

/// ad(a·d_μ) = (−1)^{|μ|} d_μ∘a, transposed: rows indexed by the source unknowns.
pub fn adjoint(op: &OperatorMatrix) -> OperatorMatrix {
    let n = op.n;
    let mut rows = vec![Equation::default(); op.source];
    for (tau, row) in op.rows.iter().enumerate() {
        for (j, a) in &row.terms {
            let mu = &j.index;
            let sign = if mu.order() % 2 == 0 { Scalar::one() } else { Scalar::from_int(-1) };
            for lambda in MultiIndex::up_to_order(n, mu.order()) {
                let Some(rest) = mu.sub(&lambda) else { continue };
                let mut c = a.clone();
                for (i, &k) in rest.0.iter().enumerate() {
                    for _ in 0..k {
                        c = op.field.derive(&c, i);
                    }
                }
                if c.is_zero() {
                    continue;
                }
                let coef = &(&sign * &c) * &Scalar::from_int(mu.binomial_over(&lambda) as i64);
                let term = Equation::from_pairs([(JetVar::new(tau, lambda), coef)]);
                rows[j.unknown] = rows[j.unknown].add(&term);
            }
        }
    }
    OperatorMatrix { n, field: op.field, source: op.target(), rows }
}

/// The adjoint as a system in λ^1..λ^p.
pub fn adjoint_system(s: &System) -> System {
    let op = adjoint(&OperatorMatrix::from_system(s));
    let mut out = System::new(s.n, op.source, s.field, op.rows);
    out.var_names = s.var_names.clone();
    out.unknown_names = (1..=op.source).map(|k| format!("lambda{}", k)).collect();
    out
}

/// Jet key for block elimination: every block-1 jet is above every block-0 jet.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BlockJet {
    block: u8,
    jet: JetVar,
}

impl Ord for BlockJet {
    fn cmp(&self, o: &Self) -> Ordering {
        self.block.cmp(&o.block).then_with(|| self.jet.cmp(&o.jet))
    }
}

impl PartialOrd for BlockJet {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn lift(e: &Equation, block: u8) -> SparseRow<BlockJet> {
    e.terms.iter().map(|(j, c)| (BlockJet { block, jet: j.clone() }, c.clone())).collect()
}

/// w^j − P_j(v) = 0 plus relations among the v; the w-only consequences are wanted.
struct Elimination<'a> {
    n: usize,
    field: Field,
    w: usize,
    links: &'a [Equation],
    relations: &'a [Equation],
}

#[derive(Clone, Debug)]
pub struct Eliminated {
    pub rows: Vec<Equation>,
    /// Highest total order used.
    pub order: u32,
    /// No new rows for two consecutive orders before the cap.
    pub stabilized: bool,
}

const ELIMINATION_SPAN: u32 = 10;

fn fits(e: &Equation, bound: &[u32]) -> bool {
    e.terms.keys().all(|j| j.order() <= bound[j.unknown])
}

fn derivatives_within(e: &Equation, n: usize, field: Field, bound: &[u32]) -> Vec<Equation> {
    let mut out = Vec::new();
    let mut frontier = vec![(e.clone(), 0usize)];
    if fits(e, bound) {
        out.push(e.clone());
    }
    loop {
        let mut next = Vec::new();
        for (eq, last) in &frontier {
            for i in *last..n {
                let d = eq.derive(i, field);
                if fits(&d, bound) {
                    out.push(d.clone());
                    next.push((d, i));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

impl Elimination<'_> {
    fn bounds(&self, t: u32) -> Vec<u32> {
        self.links.iter().map(|p| t.saturating_sub(p.order())).collect()
    }

    fn w_rows_at(&self, t: u32) -> Vec<Equation> {
        let mut ech: Echelon<BlockJet> = Echelon::new();
        for r in self.relations {
            for d in prolong(&System::new(self.n, 1, self.field, vec![]).with_equations(vec![r.clone()], 0), t.saturating_sub(r.order())).equations {
                ech.insert(lift(&d, 1));
            }
        }
        let bounds = self.bounds(t);
        for (j, p) in self.links.iter().enumerate() {
            let mut frontier = vec![(MultiIndex::zero(self.n), p.clone(), 0usize)];
            let mut all = vec![(MultiIndex::zero(self.n), p.clone())];
            for _ in 0..bounds[j] {
                let mut next = Vec::new();
                for (nu, e, last) in &frontier {
                    for i in *last..self.n {
                        let d = e.derive(i, self.field);
                        all.push((nu.plus(i), d.clone()));
                        next.push((nu.plus(i), d, i));
                    }
                }
                frontier = next;
            }
            for (nu, e) in all {
                let mut row = lift(&e, 1);
                crate::exactalg::axpy(&mut row, &Scalar::from_int(-1), &lift(&Equation::from_pairs([(JetVar::new(j, nu), Scalar::one())]), 0));
                ech.insert(row);
            }
        }
        ech.rows()
            .filter(|(p, _)| p.block == 0)
            .map(|(_, r)| Equation::from_pairs(r.iter().map(|(k, c)| (k.jet.clone(), c.clone()))))
            .collect()
    }

    fn run(&self) -> Eliminated {
        let t0 = self.links.iter().chain(self.relations).map(|e| e.order()).max().unwrap_or(0);
        // Generators of order up to the relation order may appear late.
        let q_rel = self.relations.iter().chain(self.links).map(|e| e.order()).max().unwrap_or(0);
        let t_min = t0 + (q_rel + 1).max(2);
        let mut found: Vec<Equation> = Vec::new();
        let mut quiet = 0;
        let mut t = t0;
        let mut stabilized = false;
        while t <= t0 + ELIMINATION_SPAN {
            let bounds = self.bounds(t);
            let mut span: Echelon<JetVar> = Echelon::new();
            for f in &found {
                for d in derivatives_within(f, self.n, self.field, &bounds) {
                    span.insert(d.terms);
                }
            }
            let mut fresh = false;
            let mut rows = self.w_rows_at(t);
            rows.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.leading().cmp(&b.leading())));
            for r in rows {
                if !span.contains(&r.terms) {
                    for d in derivatives_within(&r, self.n, self.field, &bounds) {
                        span.insert(d.terms);
                    }
                    found.push(r.monic());
                    fresh = true;
                }
            }
            quiet = if fresh { 0 } else { quiet + 1 };
            if quiet >= 2 && t >= t_min {
                stabilized = true;
                break;
            }
            t += 1;
        }
        let order = t.min(t0 + ELIMINATION_SPAN);
        Eliminated { rows: prune(found, self.n, self.field, &self.bounds(order)), order, stabilized }
    }
}

/// Drop rows implied by prolongations of the others (lowest order first).
fn prune(mut rows: Vec<Equation>, n: usize, field: Field, bounds: &[u32]) -> Vec<Equation> {
    rows.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.leading().cmp(&b.leading())));
    let mut kept: Vec<Equation> = Vec::new();
    let mut span: Echelon<JetVar> = Echelon::new();
    for r in rows {
        if span.contains(&r.terms) {
            continue;
        }
        for d in derivatives_within(&r, n, field, bounds) {
            span.insert(d.terms);
        }
        kept.push(r);
    }
    kept
}

/// Generating compatibility conditions of an operator, by elimination.
pub fn cc_operator(op: &OperatorMatrix) -> Result<(OperatorMatrix, bool)> {
    let el = Elimination { n: op.n, field: op.field, w: op.target(), links: &op.rows, relations: &[] };
    let out = el.run();
    let _ = el.w;
    Ok((OperatorMatrix { n: op.n, field: op.field, source: op.target(), rows: out.rows }, out.stabilized))
}

/// n − (largest class with a nonzero character); n for finite type.
pub fn codimension(inv: &InvolutiveSystem) -> usize {
    let n = inv.n();
    match inv.characters.alpha.iter().rposition(|&a| a != 0) {
        Some(c) => n - (c + 1),
        None => n,
    }
}

/// An equation written in the original coordinates, moved to the completed system's.
pub fn to_completed_coordinates(inv: &InvolutiveSystem, e: &Equation) -> Equation {
    if inv.change.is_identity() {
        e.clone()
    } else {
        inv.change.apply_to_equation(e, inv.field())
    }
}

/// Reduce modulo R_t with t = max(order, q); `e` in completed coordinates.
pub fn reduce_modulo(inv: &InvolutiveSystem, e: &Equation) -> Equation {
    let q = inv.q();
    let t = e.order().max(q);
    let sat = saturate(&prolong(&inv.solved.base, t - q));
    Equation { terms: sat.echelon().reduce(e.terms.clone()) }
}

/// Membership in the module of equations; `e` in original coordinates.
pub fn in_module(inv: &InvolutiveSystem, e: &Equation) -> bool {
    reduce_modulo(inv, &to_completed_coordinates(inv, e)).is_zero()
}

#[derive(Clone, Debug)]
pub struct ElementReport {
    pub cd: usize,
    /// Operators P with P(z) = 0 in M, completed to involution.
    pub annihilator: System,
    pub alpha: Vec<i64>,
    pub stabilized: bool,
}

/// cd(Dz) for z given in the completed system's coordinates.
pub fn element_codimension_in(inv: &InvolutiveSystem, z: &Equation, caps: &Caps) -> Result<ElementReport> {
    let n = inv.n();
    let field = inv.field();
    if reduce_modulo(inv, z).is_zero() {
        return Err(PdeError::ElementIsZero);
    }
    let rels: Vec<Equation> = inv.solved.rows().cloned().collect();
    let links = [z.clone()];
    let el = Elimination { n, field, w: 1, links: &links, relations: &rels };
    let out = el.run();
    let mut w = System::new(n, 1, field, out.rows.clone());
    w.var_names = inv.solved.base.var_names.clone();
    w.unknown_names = vec!["w".to_string()];
    if w.equations.is_empty() {
        return Ok(ElementReport { cd: 0, annihilator: w, alpha: vec![1; n], stabilized: out.stabilized });
    }
    let done = complete_to_involution(&w, caps)?;
    Ok(ElementReport {
        cd: codimension(&done),
        annihilator: done.solved.base.clone(),
        alpha: done.characters.alpha.clone(),
        stabilized: out.stabilized,
    })
}

/// cd(Dz) for z in the original coordinates.
pub fn element_codimension(inv: &InvolutiveSystem, z: &Equation, caps: &Caps) -> Result<ElementReport> {
    element_codimension_in(inv, &to_completed_coordinates(inv, z), caps)
}

#[derive(Clone, Debug)]
pub struct TorsionReport {
    /// Residues generating t(M), in the original coordinates.
    pub generators: Vec<Equation>,
    pub torsion_free: bool,
    /// ad of the conditions of the adjoint: a candidate parametrization.
    pub parametrization: OperatorMatrix,
    /// Conditions of the parametrization (contain the original rows).
    pub double_dual: OperatorMatrix,
    pub stabilized: bool,
}

/// t(M) by double duality: rows of CC(ad(CC(ad 𝒟))) outside the module.
pub fn torsion_submodule(s: &System, inv: &InvolutiveSystem) -> Result<TorsionReport> {
    let d1 = OperatorMatrix::from_system(s);
    let ad = adjoint(&d1);
    let (q, st1) = cc_operator(&ad)?;
    let param = adjoint(&q);
    let (dd, st2) = if param.rows.iter().all(|r| r.is_zero()) || param.source == 0 {
        // No conditions on the adjoint: every element of D^m is torsion modulo
        // nothing, so compare against the zero operator.
        let zero = MultiIndex::zero(s.n);
        let rows = (0..s.m).map(|k| Equation::from_pairs([(JetVar::new(k, zero.clone()), Scalar::one())])).collect();
        (OperatorMatrix { n: s.n, field: s.field, source: s.m, rows }, true)
    } else {
        let (dd, st) = cc_operator(&param)?;
        (dd, st)
    };
    let mut generators: Vec<Equation> = Vec::new();
    let mut seen: Echelon<JetVar> = Echelon::new();
    for row in &dd.rows {
        let reduced = reduce_modulo(inv, &to_completed_coordinates(inv, row));
        if reduced.is_zero() {
            continue;
        }
        if seen.insert(reduced.terms).is_some() {
            generators.push(row.clone());
        }
    }
    let torsion_free = generators.is_empty();
    Ok(TorsionReport { generators, torsion_free, parametrization: param, double_dual: dd, stabilized: st1 && st2 })
}

#[derive(Clone, Debug)]
pub struct LocalizedSystem {
    pub r: usize,
    /// System in the last r variables over ℚ(χ_1..χ_{n−r}).
    pub system: System,
    pub completed: InvolutiveSystem,
    pub dim: usize,
}

/// d_i → χ_i for the first n − r derivations of a constant-coefficient system.
pub fn localize_equation(e: &Equation, n: usize, r: usize) -> Equation {
    let k = n - r;
    Equation::from_pairs(e.terms.iter().map(|(j, c)| {
        let mono = MultiPoly::from_terms(k, [(j.index.0[..k].to_vec(), crate::exactalg::rat(1))]);
        let coef = c.as_rational().map(Scalar::from_rational).unwrap_or_else(|| c.clone());
        let coef = &coef * &Scalar::from_poly(mono);
        (JetVar::new(j.unknown, MultiIndex(j.index.0[k..].to_vec())), coef)
    }))
}

/// Clear denominators and replace χ_i by d_i.
pub fn delocalize_equation(e: &Equation, n: usize, r: usize) -> Equation {
    let k = n - r;
    let mut l = MultiPoly::one(k);
    for c in e.terms.values() {
        let d = c.denominator().clone().with_nvars(k);
        let g = MultiPoly::gcd(&l, &d);
        l = (&l * &d).div_exact(&g).expect("gcd divides");
    }
    let lc = Scalar::from_poly(l);
    let mut pairs = Vec::new();
    for (j, c) in &e.terms {
        let p = (&lc * c).numerator().clone().with_nvars(k);
        for (mono, coef) in p.terms() {
            let mut idx = mono.clone();
            idx.extend_from_slice(&j.index.0);
            pairs.push((JetVar::new(j.unknown, MultiIndex(idx)), Scalar::from_rational(coef.clone())));
        }
    }
    Equation::from_pairs(pairs)
}

/// Localize the completed system (δ-regular coordinates) at the first n − r derivations.
pub fn relative_localization(inv: &InvolutiveSystem, r: usize, caps: &Caps) -> Result<LocalizedSystem> {
    let s = inv.system();
    if !s.is_constant_coefficient() {
        return Err(PdeError::NotConstantCoefficients);
    }
    let cd = codimension(inv);
    if cd != r {
        return Err(PdeError::WrongCodimension { expected: r, found: cd });
    }
    let n = s.n;
    if r == 0 || r > n {
        return Err(PdeError::Precondition("localization needs 1 ≤ r ≤ n".into()));
    }
    let eqs: Vec<Equation> = s.equations.iter().map(|e| localize_equation(e, n, r)).collect();
    let mut loc = System::new(r, s.m, Field::Params(n - r), eqs);
    loc.var_names = s.var_names[n - r..].to_vec();
    loc.unknown_names = s.unknown_names.clone();
    let completed = complete_to_involution(&loc, caps)?;
    if completed.characters.alpha.iter().any(|&a| a != 0) {
        return Err(PdeError::Precondition("localized system is not of finite type".into()));
    }
    let dim = completed.solved.parametric.len();
    Ok(LocalizedSystem { r, system: loc, completed, dim })
}

/// Image of y_μ in k(χ')⊗M, written on the parametric jets of the localized system.
fn localized_image(loc: &LocalizedSystem, j: &JetVar, n: usize) -> SparseRow<JetVar> {
    let e = localize_equation(&Equation::from_pairs([(j.clone(), Scalar::one())]), n, loc.r);
    let l = &loc.completed;
    let t = e.order().max(l.q());
    let sat = saturate(&prolong(&l.solved.base, t - l.q()));
    let e = if l.change.is_identity() { e } else { l.change.apply_to_equation(&e, l.field()) };
    sat.echelon().reduce(e.terms)
}

/// A nonzero element of M of order ≤ `max_order` killed by the localization,
/// in the completed system's coordinates.
pub fn localization_kernel(inv: &InvolutiveSystem, loc: &LocalizedSystem, max_order: u32) -> Option<Equation> {
    let n = inv.n();
    let k = n - loc.r;
    let q = inv.q();
    let jets: Vec<JetVar> = if max_order <= q {
        inv.solved.parametric.iter().filter(|j| j.order() <= max_order).cloned().collect()
    } else {
        saturate(&prolong(&inv.solved.base, max_order - q)).parametric
    };
    let images: Vec<SparseRow<JetVar>> = jets.iter().map(|j| localized_image(loc, j, n)).collect();
    let mut l = MultiPoly::one(k);
    for img in &images {
        for c in img.values() {
            let d = c.denominator().clone().with_nvars(k);
            let g = MultiPoly::gcd(&l, &d);
            l = (&l * &d).div_exact(&g).expect("gcd divides");
        }
    }
    let lc = Scalar::from_poly(l);
    // k-linear relations: expand every entry over the monomials of χ'.
    let mut ech: Echelon<(JetVar, Vec<u32>)> = Echelon::new();
    for (idx, img) in images.iter().enumerate() {
        let mut row = SparseRow::new();
        for (pj, c) in img {
            let p = (&lc * c).numerator().clone().with_nvars(k);
            for (mono, coef) in p.terms() {
                row.insert((pj.clone(), mono), Scalar::from_rational(coef.clone()));
            }
        }
        let tag: SparseRow<usize> = [(idx, Scalar::one())].into_iter().collect();
        let (rem, tag) = ech.reduce_tagged(row, tag);
        if rem.is_empty() {
            return Some(Equation::from_pairs(tag.into_iter().map(|(t, c)| (jets[t].clone(), c))).monic());
        }
        ech.insert_tagged(rem, tag);
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiltrationStatus {
    Zero,
    EqualsM,
    EqualsNext,
    StrictlyBetween,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certainty {
    Certified,
    Probe,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationLevel {
    pub s: usize,
    pub status: FiltrationStatus,
    pub certainty: Certainty,
}

#[derive(Clone, Debug)]
pub struct PurityReport {
    pub cd: usize,
    pub pure: bool,
    /// How purity was decided.
    pub method: String,
    /// An element of t_cd(M) when not pure, in the completed system's coordinates.
    pub witness: Option<Equation>,
    pub levels: Vec<FiltrationLevel>,
    /// (probe, cd(D·probe)) in completed coordinates.
    pub probes: Vec<(Equation, usize)>,
    pub chain: String,
    /// s with t_{s−1} = t_s, 1 ≤ s ≤ n (probe-based unless certified).
    pub gaps: Vec<usize>,
}

/// Torsion of the class ≤ n−r part of the Spencer form, read back on y.
pub fn spencer_criterion(inv: &InvolutiveSystem, r: usize, caps: &Caps) -> Result<Option<Equation>> {
    let n = inv.n();
    let k = n - r;
    let sf = spencer_form(inv)?;
    let rows: Vec<Equation> = sf
        .solved
        .principal
        .iter()
        .filter(|(p, _)| p.class().map_or(false, |c| c < k))
        .map(|(_, e)| e.clone())
        .collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let count = sf.unknowns.len();
    let sub = if inv.field().is_constant() {
        let cut: Vec<Equation> = rows
            .iter()
            .map(|e| Equation::from_pairs(e.terms.iter().map(|(j, c)| (JetVar::new(j.unknown, MultiIndex(j.index.0[..k].to_vec())), c.clone()))))
            .collect();
        System::new(k, count, inv.field(), cut)
    } else {
        System::new(n, count, inv.field(), rows)
    };
    let sub_inv = complete_to_involution(&sub, caps)?;
    let t = torsion_submodule(&sub, &sub_inv)?;
    let Some(g) = t.generators.first() else { return Ok(None) };
    // z^k_ν stands for y_{jet_k + ν}.
    let width = inv.n();
    let pairs = g.terms.iter().map(|(j, c)| {
        let base = &sf.unknowns[j.unknown];
        let mut idx = j.index.0.clone();
        idx.resize(width, 0);
        (JetVar::new(base.unknown, base.index.add(&MultiIndex(idx))), c.clone())
    });
    Ok(Some(Equation::from_pairs(pairs)))
}

fn render_chain(n: usize, levels: &[FiltrationLevel]) -> String {
    let st = |s: usize| levels[s].status;
    let mut out = format!("0 = t_{}", n);
    for s in (0..n).rev() {
        let eq = st(s) == FiltrationStatus::Zero
            || st(s) == FiltrationStatus::EqualsNext
            || (st(s) == FiltrationStatus::EqualsM && st(s + 1) == FiltrationStatus::EqualsM);
        out.push_str(if eq { " = " } else { " < " });
        out.push_str(&format!("t_{}", s));
    }
    out.push_str(" = t(M)");
    out.push_str(if st(0) == FiltrationStatus::EqualsM { " = M" } else { " < M" });
    out
}

/// Orders searched beyond q for a kernel element of the localization.
pub const KERNEL_SEARCH_EXTRA: u32 = 1;

pub fn purity_report(s: &System, caps: &Caps) -> Result<PurityReport> {
    let inv = complete_to_involution(s, caps)?;
    purity_report_of(&inv, caps)
}

pub fn purity_report_of(inv: &InvolutiveSystem, caps: &Caps) -> Result<PurityReport> {
    let n = inv.n();
    let cd = codimension(inv);
    let (pure, method, witness) = if cd == n {
        (true, "finite type".to_string(), None)
    } else if cd == 0 {
        let t = torsion_submodule(inv.system(), inv)?;
        let w = t.generators.first().cloned();
        (w.is_none(), "torsion by double duality".to_string(), w)
    } else if inv.system().is_constant_coefficient() {
        let loc = relative_localization(inv, cd, caps)?;
        let w = localization_kernel(inv, &loc, inv.q() + KERNEL_SEARCH_EXTRA);
        (w.is_none(), "localization kernel".to_string(), w)
    } else {
        let w = spencer_criterion(inv, cd, caps)?;
        (w.is_none(), "spencer form subsystem".to_string(), w)
    };
    let mut probes: Vec<(Equation, usize)> = Vec::new();
    if !pure {
        let q = inv.q();
        let mut candidates: Vec<Equation> = inv
            .solved
            .parametric
            .iter()
            .filter(|j| j.order() <= q)
            .map(|j| Equation::from_pairs([(j.clone(), Scalar::one())]))
            .collect();
        if let Some(w) = &witness {
            if !candidates.contains(w) {
                candidates.push(w.clone());
            }
        }
        for z in candidates {
            match element_codimension_in(inv, &z, caps) {
                Ok(rep) => probes.push((z, rep.cd)),
                Err(PdeError::ElementIsZero) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let above = |s: usize| -> Vec<usize> { probes.iter().enumerate().filter(|(_, (_, c))| *c > s).map(|(k, _)| k).collect() };
    let mut levels = vec![FiltrationLevel { s: n, status: FiltrationStatus::Zero, certainty: Certainty::Certified }; n + 1];
    for s_ in (0..n).rev() {
        let (status, certainty) = if s_ < cd {
            (FiltrationStatus::EqualsM, Certainty::Certified)
        } else if pure {
            (FiltrationStatus::Zero, Certainty::Certified)
        } else {
            let here = above(s_);
            if here.is_empty() {
                (FiltrationStatus::Zero, Certainty::Probe)
            } else if here == above(s_ + 1) {
                (FiltrationStatus::EqualsNext, Certainty::Probe)
            } else {
                // a probe lies in t_s but not in t_{s+1}
                (FiltrationStatus::StrictlyBetween, Certainty::Certified)
            }
        };
        levels[s_] = FiltrationLevel { s: s_, status, certainty };
    }
    let chain = render_chain(n, &levels);
    let gaps = (1..=n)
        .filter(|&s_| {
            let a = levels[s_ - 1].status;
            let b = levels[s_].status;
            a == FiltrationStatus::EqualsNext
                || (a == FiltrationStatus::Zero && b == FiltrationStatus::Zero)
                || (a == FiltrationStatus::EqualsM && b == FiltrationStatus::EqualsM)
        })
        .collect();
    Ok(PurityReport { cd, pure, method, witness, levels, probes, chain, gaps })
}
