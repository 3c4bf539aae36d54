//! Inverse systems: truncated sections of R, the Spencer operator acting on
//! them, modular equations and finite generating sets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::{rat, Echelon, MultiPoly, Rational, Scalar, SparseRow};
use crate::jetspace::{jets_up_to, JetVar, MultiIndex};
use crate::pdesys::{prolong, saturate, solved_form, Equation, Field, SolvedSystem, System};

/// Values f^k_μ of a section for every jet of order ≤ truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub n: usize,
    pub m: usize,
    pub truncation: u32,
    pub field: Field,
    /// Nonzero values only.
    pub values: SparseRow<JetVar>,
}

impl Section {
    pub fn zero(n: usize, m: usize, truncation: u32, field: Field) -> Self {
        Section { n, m, truncation, field, values: SparseRow::new() }
    }

    pub fn get(&self, j: &JetVar) -> Scalar {
        self.values.get(j).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn truncate(&self, t: u32) -> Section {
        let values = self.values.iter().filter(|(j, _)| j.order() <= t).map(|(j, c)| (j.clone(), c.clone())).collect();
        Section { truncation: t.min(self.truncation), values, ..self.clone() }
    }

    /// self + c·other at the smaller truncation.
    pub fn add_scaled(&self, c: &Scalar, other: &Section) -> Section {
        let t = self.truncation.min(other.truncation);
        let mut out = self.truncate(t).values;
        crate::exactalg::axpy(&mut out, &-c, &other.truncate(t).values);
        Section { truncation: t, values: out, ..self.clone() }
    }

    pub fn scale(&self, c: &Scalar) -> Section {
        Section { values: crate::exactalg::scale_row(&self.values, c), ..self.clone() }
    }

    /// Contraction Σ a^μ_k f^k_μ with an equation of order ≤ truncation.
    pub fn contract(&self, e: &Equation) -> Scalar {
        let mut acc = Scalar::zero();
        for (j, c) in &e.terms {
            acc = &acc + &(c * &self.get(j));
        }
        acc
    }

    /// Values listed over all jets of order ≤ truncation, ascending.
    pub fn row(&self) -> Vec<Scalar> {
        jets_up_to(self.n, self.m, self.truncation).iter().map(|j| self.get(j)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SectionBasis {
    pub truncation: u32,
    /// Parametric jets of order ≤ truncation, ascending; section k is 1 at jet k.
    pub parametric: Vec<JetVar>,
    pub sections: Vec<Section>,
}

/// Basis of R_{q+r}: one section per parametric jet, principal values from
/// the solved form. `s` must be formally integrable.
pub fn section_basis(s: &SolvedSystem, r: u32) -> SectionBasis {
    let (n, m, q) = (s.n(), s.m(), s.q());
    let t = q + r;
    let full = saturate(&prolong(&s.base, r));
    let sections = full
        .parametric
        .iter()
        .map(|p| {
            let mut values = SparseRow::new();
            values.insert(p.clone(), Scalar::one());
            for (pri, row) in &full.principal {
                if let Some(c) = row.terms.get(p) {
                    values.insert(pri.clone(), -c);
                }
            }
            Section { n, m, truncation: t, field: s.field(), values }
        })
        .collect();
    SectionBasis { truncation: t, parametric: full.parametric.clone(), sections }
}

/// (d_i f)_μ = ∂_i f_μ − f_{μ+1_i} for |μ| < truncation.
pub fn spencer_apply(f: &Section, i: usize) -> Result<Section> {
    if f.truncation == 0 {
        return Err(PdeError::TruncationExhausted(0));
    }
    if i >= f.n {
        return Err(PdeError::IndexOutOfRange { index: i, bound: f.n });
    }
    let t = f.truncation - 1;
    let mut values = SparseRow::new();
    for j in jets_up_to(f.n, f.m, t) {
        let v = &f.field.derive(&f.get(&j), i) - &f.get(&j.plus(i));
        if !v.is_zero() {
            values.insert(j, v);
        }
    }
    Ok(Section { truncation: t, values, ..f.clone() })
}

/// d_ν f.
pub fn spencer_shift(f: &Section, nu: &MultiIndex) -> Result<Section> {
    let mut g = f.clone();
    for (i, &k) in nu.0.iter().enumerate() {
        for _ in 0..k {
            g = spencer_apply(&g, i)?;
        }
    }
    Ok(g)
}

/// A section is a formal solution when every d_i f vanishes.
pub fn is_formal_solution(f: &Section) -> Result<bool> {
    for i in 0..f.n {
        if !spencer_apply(f, i)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Variable labels taken from trailing digits of the names ("x3" → 3).
pub fn var_labels(var_names: &[String]) -> Vec<usize> {
    var_names
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let d: String = s.chars().rev().take_while(|c| c.is_ascii_digit()).collect::<Vec<_>>().into_iter().rev().collect();
            d.parse().unwrap_or(i + 1)
        })
        .collect()
}

fn poly_lcm(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let g = MultiPoly::gcd(a, b);
    (a * b).div_exact(&g).expect("gcd divides")
}

/// Values as polynomials with integer coefficients and no common factor,
/// the first nonzero value having a positive leading coefficient.
pub fn normalized_values(f: &Section) -> Vec<(JetVar, MultiPoly)> {
    let vals: Vec<(&JetVar, &Scalar)> = f.values.iter().collect();
    if vals.is_empty() {
        return Vec::new();
    }
    let nv = vals[0].1.nvars();
    let mut l = MultiPoly::one(nv);
    for (_, v) in &vals {
        l = poly_lcm(&l, &v.denominator().clone().with_nvars(nv));
    }
    let mut polys: Vec<(JetVar, MultiPoly)> = vals
        .iter()
        .map(|(j, v)| {
            let p = (&Scalar::from_poly(l.clone()) * v).numerator().clone().with_nvars(nv);
            ((*j).clone(), p)
        })
        .collect();
    let mut g = polys[0].1.clone();
    for (_, p) in &polys[1..] {
        g = MultiPoly::gcd(&g, p);
    }
    for (_, p) in polys.iter_mut() {
        *p = p.div_exact(&g).expect("gcd divides");
    }
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    for (_, p) in &polys {
        for (_, c) in p.terms() {
            den = den.lcm(c.denom());
        }
    }
    for (_, p) in &polys {
        for (_, c) in p.terms() {
            let v = c * Rational::from_integer(den.clone());
            num = num.gcd(v.numer());
        }
    }
    let mut factor = Rational::new(den, if num.is_zero() { BigInt::one() } else { num });
    if polys[0].1.leading_coefficient().map_or(false, |c| c.is_negative()) {
        factor = -factor;
    }
    polys.into_iter().map(|(j, p)| (j, p.scale(&factor))).collect()
}

/// "E ≡ chi2^3*a^333 + chi1^3*a^444 + … = 0" style modular equation.
pub fn modular_render(f: &Section, labels: &[usize], coeff_names: &[String]) -> String {
    let terms = normalized_values(f);
    if terms.is_empty() {
        return "0 = 0".to_string();
    }
    let mut out = String::new();
    for (idx, (j, p)) in terms.iter().enumerate() {
        let d = j.index.digits(labels);
        let mut a = if d.is_empty() { "a".to_string() } else { format!("a^{}", d) };
        if f.m > 1 {
            a.push_str(&format!("_{}", j.unknown + 1));
        }
        let single = p.num_terms() == 1;
        let neg = single && p.leading_coefficient().map_or(false, |c| c.is_negative());
        let mag = if neg { p.scale(&rat(-1)) } else { p.clone() };
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let c = mag.render_with(coeff_names);
        if c == "1" {
            out.push_str(&a);
        } else if single {
            out.push_str(&format!("{}*{}", c, a));
        } else {
            out.push_str(&format!("({})*{}", c, a));
        }
    }
    out.push_str(" = 0");
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateLevel {
    pub truncation: u32,
    /// dim R_truncation.
    pub dim: usize,
    /// (generator, ν) whose truncated shifts d_ν g form a basis.
    pub shifts: Vec<(usize, MultiIndex)>,
}

#[derive(Clone, Debug)]
pub struct GeneratingBasis {
    pub generators: Vec<Section>,
    /// Jet of the candidate each generator started from.
    pub seeds: Vec<JetVar>,
    pub certificate: Vec<CertificateLevel>,
    pub generation_truncation: u32,
}

struct Spanner {
    n: usize,
    q: u32,
    r_max: u32,
    top: u32,
    /// parametric jets of order ≤ truncation, per level
    coords: Vec<Vec<JetVar>>,
}

impl Spanner {
    fn levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.q..=self.q + self.r_max
    }

    fn shifts(&self, g: &Section) -> Result<Vec<(MultiIndex, Section)>> {
        let depth = self.top - self.q;
        let mut out = vec![(MultiIndex::zero(self.n), g.clone())];
        let mut frontier = vec![(MultiIndex::zero(self.n), g.clone(), 0usize)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (nu, s, last) in &frontier {
                for i in *last..self.n {
                    let d = spencer_apply(s, i)?;
                    let nu2 = nu.plus(i);
                    out.push((nu2.clone(), d.clone()));
                    next.push((nu2, d, i));
                }
            }
            frontier = next;
        }
        Ok(out)
    }

    fn vector(&self, level: usize, s: &Section) -> SparseRow<JetVar> {
        self.coords[level].iter().filter_map(|j| s.values.get(j).map(|v| (j.clone(), v.clone()))).collect()
    }

    /// Echelon of the truncated shifts at each level.
    fn spans(&self, gens: &[Section]) -> Result<Vec<(Echelon<JetVar>, Vec<(usize, MultiIndex)>)>> {
        let all: Vec<Vec<(MultiIndex, Section)>> = gens.iter().map(|g| self.shifts(g)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for (li, t) in self.levels().enumerate() {
            let mut ech = Echelon::new();
            let mut used = Vec::new();
            for (gi, shifts) in all.iter().enumerate() {
                for (nu, s) in shifts {
                    if s.truncation < t {
                        continue;
                    }
                    if ech.insert(self.vector(li, &s.truncate(t))).is_some() {
                        used.push((gi, nu.clone()));
                    }
                }
            }
            out.push((ech, used));
        }
        Ok(out)
    }

    fn ranks(&self, gens: &[Section]) -> Result<Vec<usize>> {
        Ok(self.spans(gens)?.iter().map(|(e, _)| e.rank()).collect())
    }

    fn contains(&self, gens: &[Section], cand: &Section) -> Result<bool> {
        let spans = self.spans(gens)?;
        Ok(self.levels().enumerate().all(|(li, t)| spans[li].0.contains(&self.vector(li, &cand.truncate(t)))))
    }

    fn dims(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c.len()).collect()
    }
}

/// A small set of sections whose Spencer shifts span R_{q+r} for r ≤ r_max.
///
/// Candidates are the basis sections of the parametric jets of order ≤ q,
/// taken from the largest jet down. A candidate outside the current span is
/// first merged into an existing generator as h + c·cand, then kept on its
/// own if no merge covers it. Redundant generators are dropped at the end.
fn spanner(s: &SolvedSystem, r_max: u32) -> (Spanner, SectionBasis) {
    let (n, q) = (s.n(), s.q());
    let top = q + 2 * r_max;
    let basis = section_basis(s, top - q);
    let coords: Vec<Vec<JetVar>> =
        (q..=q + r_max).map(|t| basis.parametric.iter().filter(|j| j.order() <= t).cloned().collect()).collect();
    (Spanner { n, q, r_max, top, coords }, basis)
}

fn certificate(sp: &Spanner, gens: &[Section]) -> Result<Vec<CertificateLevel>> {
    let spans = sp.spans(gens)?;
    let dims = sp.dims();
    let mut out = Vec::new();
    for (li, t) in sp.levels().enumerate() {
        let (ech, used) = &spans[li];
        if ech.rank() != dims[li] {
            return Err(PdeError::CertificateFailed { truncation: t, deficit: dims[li] - ech.rank() });
        }
        out.push(CertificateLevel { truncation: t, dim: dims[li], shifts: used.clone() });
    }
    Ok(out)
}

/// Check that given sections (truncation ≥ q + 2·r_max) generate R_t for q ≤ t ≤ q + r_max.
pub fn certify_generators(s: &SolvedSystem, gens: &[Section], r_max: u32) -> Result<Vec<CertificateLevel>> {
    let (sp, _) = spanner(s, r_max);
    if gens.iter().any(|g| g.truncation < sp.top) {
        return Err(PdeError::TruncationExhausted(sp.top));
    }
    certificate(&sp, gens)
}

pub fn generating_sections(s: &SolvedSystem, r_max: u32) -> Result<GeneratingBasis> {
    let q = s.q();
    let (sp, basis) = spanner(s, r_max);
    let top = sp.top;
    let mut cands: Vec<(JetVar, Section)> = basis
        .parametric
        .iter()
        .zip(&basis.sections)
        .filter(|(j, _)| j.order() <= q)
        .map(|(j, f)| (j.clone(), f.clone()))
        .collect();
    cands.reverse();
    let mut gens: Vec<Section> = Vec::new();
    let mut seeds: Vec<JetVar> = Vec::new();
    let dims = sp.dims();
    for (jet, cand) in cands {
        if !gens.is_empty() && sp.ranks(&gens)? == dims {
            break;
        }
        if !gens.is_empty() && sp.contains(&gens, &cand)? {
            continue;
        }
        let mut with_cand = gens.clone();
        with_cand.push(cand.clone());
        let target = sp.ranks(&with_cand)?;
        let mut merged = false;
        'outer: for k in (0..gens.len()).rev() {
            for c in [1i64, -1, 2, -2] {
                let mut trial = gens.clone();
                trial[k] = gens[k].add_scaled(&Scalar::from_int(c), &cand);
                if sp.ranks(&trial)? == target {
                    gens = trial;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            gens.push(cand);
            seeds.push(jet);
        }
    }
    let mut k = gens.len();
    while k > 0 {
        k -= 1;
        if gens.len() == 1 {
            break;
        }
        let mut rest = gens.clone();
        rest.remove(k);
        if sp.ranks(&rest)? == dims {
            gens = rest;
            seeds.remove(k);
        }
    }
    let certificate = certificate(&sp, &gens)?;
    Ok(GeneratingBasis { generators: gens, seeds, certificate, generation_truncation: top })
}

/// A finite-dimensional subsystem given by its sections at one truncation.
#[derive(Clone, Debug)]
pub struct SubsystemResult {
    pub dim: usize,
    pub truncation: u32,
    pub sections: Vec<Section>,
    /// Equations of order ≤ truncation annihilating the sections, pruned to
    /// generators.
    pub system: System,
}

fn all_sections(s: &SolvedSystem, truncation: u32) -> Result<Vec<Section>> {
    if truncation < s.q() {
        return Err(PdeError::Precondition("truncation below the system order".into()));
    }
    Ok(section_basis(s, truncation - s.q()).sections)
}

fn check_shape(a: &SolvedSystem, b: &SolvedSystem) -> Result<()> {
    if a.n() != b.n() || a.m() != b.m() || a.field() != b.field() {
        return Err(PdeError::DimensionMismatch("subsystems live on different jet spaces".into()));
    }
    Ok(())
}

fn annihilator(template: &System, sections: &[Section], t: u32) -> System {
    let (n, m) = (template.n, template.m);
    let jets = jets_up_to(n, m, t);
    let mut ech: Echelon<JetVar> = Echelon::new();
    for f in sections {
        ech.insert(f.values.clone());
    }
    // A form Σ a_j y_j vanishes on every section iff a·v = 0 for each echelon row.
    let rows: Vec<(JetVar, SparseRow<JetVar>)> = ech.rows().map(|(p, r)| (p.clone(), r.clone())).collect();
    let free: Vec<JetVar> = jets.iter().filter(|j| !ech.is_pivot(j)).cloned().collect();
    let mut found = Vec::new();
    for f in &free {
        // a_f = 1, other free a = 0, a_piv = −row_f.
        let mut pairs = vec![(f.clone(), Scalar::one())];
        for (piv, row) in &rows {
            if let Some(c) = row.get(f) {
                pairs.push((piv.clone(), -c));
            }
        }
        found.push(Equation::from_pairs(pairs));
    }
    prune_generators(template, found, t)
}

/// Keep the rows not implied by prolongations of lower rows, within order t.
fn prune_generators(template: &System, rows: Vec<Equation>, t: u32) -> System {
    let mut sorted = solved_form(&template.with_equations(rows, 0)).principal;
    sorted.reverse();
    let mut kept: Vec<Equation> = Vec::new();
    let mut span: Echelon<JetVar> = Echelon::new();
    for (_, e) in sorted {
        if span.contains(&e.terms) {
            continue;
        }
        kept.push(e.clone());
        let one = template.with_equations(vec![e.clone()], 0);
        let k = t.saturating_sub(e.order());
        for d in prolong(&one, k).equations {
            if d.order() <= t {
                span.insert(d.terms);
            }
        }
    }
    let mut sys = template.with_equations(kept, 0);
    sys.q = sys.equations.iter().map(|e| e.order()).max().unwrap_or(0);
    sys
}

/// R′ + R″.
pub fn subsystem_sum(a: &SolvedSystem, b: &SolvedSystem, truncation: u32) -> Result<SubsystemResult> {
    check_shape(a, b)?;
    let mut ech: Echelon<JetVar> = Echelon::new();
    let mut sections = Vec::new();
    for f in all_sections(a, truncation)?.into_iter().chain(all_sections(b, truncation)?) {
        if ech.insert(f.values.clone()).is_some() {
            sections.push(f);
        }
    }
    let system = annihilator(&a.base, &sections, truncation);
    Ok(SubsystemResult { dim: sections.len(), truncation, sections, system })
}

/// R′ ∩ R″.
pub fn subsystem_intersect(a: &SolvedSystem, b: &SolvedSystem, truncation: u32) -> Result<SubsystemResult> {
    check_shape(a, b)?;
    let sa = all_sections(a, truncation)?;
    let sb = all_sections(b, truncation)?;
    let na = sa.len();
    let mut ech: Echelon<JetVar> = Echelon::new();
    for (k, f) in sa.iter().enumerate() {
        ech.insert_tagged(f.values.clone(), [(k, Scalar::one())].into_iter().collect());
    }
    let mut sections: Vec<Section> = Vec::new();
    let mut seen: Echelon<JetVar> = Echelon::new();
    for (k, f) in sb.iter().enumerate() {
        let (rem, tag) = ech.reduce_tagged(f.values.clone(), [(na + k, Scalar::one())].into_iter().collect());
        if rem.is_empty() {
            let mut v = Section::zero(a.n(), a.m(), truncation, a.field());
            for (t, c) in &tag {
                if *t < na {
                    v = v.add_scaled(c, &sa[*t]);
                }
            }
            if !v.is_zero() && seen.insert(v.values.clone()).is_some() {
                sections.push(v);
            }
        } else {
            ech.insert_tagged(rem, tag);
        }
    }
    let system = annihilator(&a.base, &sections, truncation);
    Ok(SubsystemResult { dim: sections.len(), truncation, sections, system })
}

/// Rows of a section table: "f1: 1 0 x 1 …" over all jets of the truncation.
pub fn render_table(sections: &[Section], coeff_names: &[String]) -> Vec<String> {
    sections
        .iter()
        .map(|f| f.row().iter().map(|v| v.render_with(coeff_names)).collect::<Vec<_>>().join(" "))
        .collect()
}

/// Dimension per truncation of a set of sections' span.
pub fn span_dimension(sections: &[Section]) -> usize {
    let mut ech: Echelon<JetVar> = Echelon::new();
    sections.iter().filter(|f| ech.insert(f.values.clone()).is_some()).count()
}
