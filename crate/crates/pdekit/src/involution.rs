//! Janet boards, characters, the involution test, δ-regular coordinates and
//! completion to involution.

use std::collections::BTreeMap;

use num_integer::binomial;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::exactalg::{rat, Echelon, MultiPoly, Rational, Scalar, SparseRow};
use crate::jetspace::{JetVar, MultiIndex};
use crate::pdesys::{
    fi_step, make_formally_integrable, project, prolong, saturate, solved_form, Equation, Field, SolvedSystem,
    System,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardRow {
    /// Index into the solved system's principal list.
    pub eq: usize,
    pub principal: JetVar,
    /// 0-based class; `None` for rows below top order (all dots).
    pub class: Option<usize>,
    /// 0-based multiplicative variables.
    pub multiplicative: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JanetBoard {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    pub rows: Vec<BoardRow>,
    /// β per 0-based class.
    pub beta: Vec<usize>,
}

impl JanetBoard {
    /// Rows as "1 2 •" strings, as in a hand-drawn board.
    pub fn render_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                (0..self.n)
                    .map(|i| if r.multiplicative.contains(&i) { (i + 1).to_string() } else { "•".to_string() })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    /// Number of dots in each column (0-based variable).
    pub fn dots_per_column(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for r in &self.rows {
            for (i, x) in d.iter_mut().enumerate() {
                if !r.multiplicative.contains(&i) {
                    *x += 1;
                }
            }
        }
        d
    }

    pub fn total_dots(&self) -> usize {
        self.dots_per_column().iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Characters {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    /// α per 0-based class.
    pub alpha: Vec<i64>,
    pub beta: Vec<usize>,
}

impl Characters {
    /// α^i with 1-based i.
    pub fn alpha_at(&self, i: usize) -> i64 {
        self.alpha[i - 1]
    }
}

pub fn janet_board(s: &SolvedSystem) -> JanetBoard {
    let q = s.q();
    let n = s.n();
    let mut beta = vec![0; n];
    let rows = s
        .principal
        .iter()
        .enumerate()
        .map(|(i, (p, _))| {
            if p.order() == q && q > 0 {
                let c = p.class().expect("positive order");
                beta[c] += 1;
                BoardRow { eq: i, principal: p.clone(), class: Some(c), multiplicative: (0..=c).collect() }
            } else {
                BoardRow { eq: i, principal: p.clone(), class: None, multiplicative: Vec::new() }
            }
        })
        .collect();
    JanetBoard { n, m: s.m(), q, rows, beta }
}

/// Number of class-c (0-based) multi-indices of order q in n variables, times m.
pub fn class_slots(n: usize, m: usize, q: u32, c: usize) -> usize {
    if q == 0 {
        return 0;
    }
    m * binomial(q as usize + n - c - 2, q as usize - 1)
}

pub fn characters(b: &JanetBoard) -> Characters {
    let alpha = (0..b.n)
        .map(|c| class_slots(b.n, b.m, b.q, c) as i64 - b.beta[c] as i64)
        .collect();
    Characters { n: b.n, m: b.m, q: b.q, alpha, beta: b.beta.clone() }
}

/// Linear change of the independent variables.
///
/// The matrix T acts on symbols by χ_i → Σ_j T_ij χ_j, so d_i = Σ_j T_ij d̄_j,
/// and coefficients by x → A⁻¹x̄ with A = Tᵗ. A transvection labelled
/// "x1 -> x1 + x2" is χ1 → χ1 + χ2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateChange {
    pub matrix: Vec<Vec<Rational>>,
    pub steps: Vec<String>,
}

impl CoordinateChange {
    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { rat(1) } else { rat(0) }).collect())
            .collect();
        CoordinateChange { matrix, steps: Vec::new() }
    }

    pub fn from_integer_rows(rows: &[Vec<i64>], label: &str) -> Self {
        CoordinateChange {
            matrix: rows.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect(),
            steps: vec![label.to_string()],
        }
    }

    /// x^i → x^i + x^j (0-based i, j).
    pub fn transvection(i: usize, j: usize, n: usize) -> Self {
        let mut c = Self::identity(n);
        c.matrix[i][j] = rat(1);
        c.steps = vec![format!("x{} -> x{} + x{}", i + 1, i + 1, j + 1)];
        c
    }

    /// x^i ↔ x^{n+1−i}.
    pub fn reversal(n: usize) -> Self {
        let mut c = Self::identity(n);
        for i in 0..n {
            for j in 0..n {
                c.matrix[i][j] = if j == n - 1 - i { rat(1) } else { rat(0) };
            }
        }
        c.steps = vec![format!("reverse x1..x{}", n)];
        c
    }

    pub fn n(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n()) || self.matrix == Self::identity(self.n()).matrix
    }

    /// self followed by other: total matrix self·other.
    pub fn then(&self, other: &CoordinateChange) -> CoordinateChange {
        let n = self.n();
        let mut m = vec![vec![rat(0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = rat(0);
                for k in 0..n {
                    acc += &self.matrix[i][k] * &other.matrix[k][j];
                }
                m[i][j] = acc;
            }
        }
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        CoordinateChange { matrix: m, steps }
    }

    pub fn inverse(&self) -> CoordinateChange {
        let n = self.n();
        let mut a: Vec<Vec<Rational>> = self.matrix.clone();
        let mut inv = Self::identity(n).matrix;
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("invertible change");
            a.swap(col, p);
            inv.swap(col, p);
            let pv = a[col][col].clone();
            for j in 0..n {
                a[col][j] = &a[col][j] / &pv;
                inv[col][j] = &inv[col][j] / &pv;
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for j in 0..n {
                        let t = &f * &a[col][j];
                        a[r][j] -= t;
                        let t = &f * &inv[col][j];
                        inv[r][j] -= t;
                    }
                }
            }
        }
        CoordinateChange { matrix: inv, steps: vec!["inverse".to_string()] }
    }

    fn jet_image(&self, mu: &MultiIndex) -> Vec<(MultiIndex, Rational)> {
        let n = self.n();
        let mut p = MultiPoly::one(n);
        for (i, &e) in mu.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let lin = MultiPoly::from_terms(
                n,
                (0..n).filter(|&j| !self.matrix[i][j].is_zero()).map(|j| {
                    let mut v = vec![0; n];
                    v[j] = 1;
                    (v, self.matrix[i][j].clone())
                }),
            );
            p = &p * &lin.pow(e);
        }
        p.terms().map(|(e, c)| (MultiIndex(e), c.clone())).collect()
    }

    fn coefficient_substitution(&self) -> Vec<MultiPoly> {
        // x = A⁻¹ x̄ with A = Tᵗ, so (A⁻¹)_ij = (T⁻¹)_ji.
        let n = self.n();
        let tinv = self.inverse();
        (0..n)
            .map(|i| {
                MultiPoly::from_terms(
                    n,
                    (0..n).filter(|&j| !tinv.matrix[j][i].is_zero()).map(|j| {
                        let mut v = vec![0; n];
                        v[j] = 1;
                        (v, tinv.matrix[j][i].clone())
                    }),
                )
            })
            .collect()
    }

    pub fn apply_to_equation(&self, e: &Equation, field: Field) -> Equation {
        let subs = if field == Field::QX { Some(self.coefficient_substitution()) } else { None };
        self.apply_with(e, subs.as_deref())
    }

    fn apply_with(&self, e: &Equation, subs: Option<&[MultiPoly]>) -> Equation {
        let n = self.n();
        let mut cache: BTreeMap<MultiIndex, Vec<(MultiIndex, Rational)>> = BTreeMap::new();
        let mut pairs = Vec::new();
        for (j, c) in &e.terms {
            let c = match subs {
                Some(s) => c.substitute(s, n),
                None => c.clone(),
            };
            let img = cache.entry(j.index.clone()).or_insert_with(|| self.jet_image(&j.index));
            for (nu, k) in img.iter() {
                pairs.push((JetVar::new(j.unknown, nu.clone()), c.scale_rational(k)));
            }
        }
        Equation::from_pairs(pairs)
    }

    pub fn apply_to_system(&self, s: &System) -> System {
        let subs = if s.field == Field::QX { Some(self.coefficient_substitution()) } else { None };
        let eqs = s.equations.iter().map(|e| self.apply_with(e, subs.as_deref())).collect();
        s.with_equations(eqs, s.q)
    }

    pub fn integer_rows(&self) -> Vec<Vec<String>> {
        self.matrix
            .iter()
            .map(|r| r.iter().map(crate::exactalg::render_rational).collect())
            .collect()
    }
}

/// Outcome of [`involution_test`].
#[derive(Clone, Debug)]
pub struct InvolutionOutcome {
    pub involutive: bool,
    /// (row index, 0-based variable, non-reducing remainder)
    pub witness: Option<(usize, usize, Equation)>,
}

/// Span of all rows plus their multiplicative prolongations, tagged.
/// Tag layout: row index t for Φ^t; rows.len()·(1+i)+t for d_iΦ^t.
pub(crate) fn multiplicative_span(s: &SolvedSystem, board: &JanetBoard) -> Echelon<JetVar> {
    let p = s.principal.len();
    let mut ech = Echelon::new();
    for (t, (_, e)) in s.principal.iter().enumerate() {
        ech.insert_tagged(e.terms.clone(), tag1(t));
    }
    for r in &board.rows {
        let e = &s.principal[r.eq].1;
        for &i in &r.multiplicative {
            ech.insert_tagged(e.derive(i, s.field()).terms, tag1(p * (1 + i) + r.eq));
        }
    }
    ech
}

fn tag1(k: usize) -> SparseRow<usize> {
    [(k, Scalar::one())].into_iter().collect()
}

/// Non-multiplicative prolongations must reduce to multiplicative ones.
pub fn involution_test(s: &SolvedSystem) -> Result<InvolutionOutcome> {
    if !fi_step(&s.base).0 {
        return Err(PdeError::NotFormallyIntegrable { order: s.q() });
    }
    Ok(involution_check(s))
}

pub(crate) fn involution_check(s: &SolvedSystem) -> InvolutionOutcome {
    let board = janet_board(s);
    let span = multiplicative_span(s, &board);
    for r in &board.rows {
        let e = &s.principal[r.eq].1;
        for j in 0..s.n() {
            if r.multiplicative.contains(&j) {
                continue;
            }
            let rem = span.reduce(e.derive(j, s.field()).terms);
            if !rem.is_empty() {
                return InvolutionOutcome { involutive: false, witness: Some((r.eq, j, Equation { terms: rem })) };
            }
        }
    }
    InvolutionOutcome { involutive: true, witness: None }
}

fn beta_key(s: &SolvedSystem) -> Vec<usize> {
    let b = janet_board(s);
    b.beta.iter().rev().cloned().collect()
}

/// Lexicographic upper bound for (β^n, …, β^1).
fn beta_bound(s: &SolvedSystem) -> Vec<usize> {
    let q = s.q();
    let mut left = s.principal.iter().filter(|(p, _)| p.order() == q && q > 0).count();
    let mut out = Vec::new();
    for c in (0..s.n()).rev() {
        let b = left.min(class_slots(s.n(), s.m(), q, c));
        out.push(b);
        left -= b;
    }
    out
}

/// Result of [`delta_regular_search`].
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub change: CoordinateChange,
    pub solved: SolvedSystem,
    pub tries: usize,
}

fn random_unimodular(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    loop {
        let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        let ops = rng.gen_range(1..=2 * n);
        for _ in 0..ops {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            if n > 1 {
                while j == i {
                    j = rng.gen_range(0..n);
                }
            }
            let c: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
            if i != j {
                for k in 0..n {
                    m[i][k] += c * m[j][k];
                }
            }
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        m.swap(a, b);
        if m.iter().flatten().all(|v| v.abs() <= 3) {
            return m;
        }
    }
}

/// Lexicographic maximization of (β^n, …, β^1) over a deterministic
/// candidate stream: identity, the reversal x^i ↔ x^{n+1−i}, single
/// transvections, greedy composition of transvections, then seeded random
/// unimodular matrices until 5 consecutive candidates fail to improve.
pub fn delta_regular_search(s: &SolvedSystem, seed: u64, max_tries: usize) -> Result<SearchResult> {
    let n = s.n();
    let bound = beta_bound(s);
    let mut best = CoordinateChange::identity(n);
    let mut best_solved = s.clone();
    let mut best_key = beta_key(s);
    let mut tries = 1usize;
    if best_key == bound || n == 1 {
        return Ok(SearchResult { change: best, solved: best_solved, tries });
    }
    let eval = |c: &CoordinateChange| solved_form(&c.apply_to_system(&s.base));
    let mut fixed: Vec<CoordinateChange> = vec![CoordinateChange::reversal(n)];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                fixed.push(CoordinateChange::transvection(i, j, n));
            }
        }
    }
    for c in fixed {
        if tries >= max_tries {
            return Err(PdeError::SearchExhausted { tries });
        }
        tries += 1;
        let cand = eval(&c);
        let key = beta_key(&cand);
        if key > best_key {
            best_key = key;
            best = c;
            best_solved = cand;
            if best_key == bound {
                return Ok(SearchResult { change: best, solved: best_solved, tries });
            }
        }
    }
    'climb: loop {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if tries >= max_tries {
                    return Err(PdeError::SearchExhausted { tries });
                }
                tries += 1;
                let c = best.then(&CoordinateChange::transvection(i, j, n));
                let cand = eval(&c);
                let key = beta_key(&cand);
                if key > best_key {
                    best_key = key;
                    best = c;
                    best_solved = cand;
                    if best_key == bound {
                        return Ok(SearchResult { change: best, solved: best_solved, tries });
                    }
                    continue 'climb;
                }
            }
        }
        break;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quiet = 0;
    while quiet < 5 {
        if tries >= max_tries {
            return Err(PdeError::SearchExhausted { tries });
        }
        tries += 1;
        let rows = random_unimodular(n, &mut rng);
        let c = CoordinateChange::from_integer_rows(&rows, &format!("random {:?}", rows));
        let cand = eval(&c);
        let key = beta_key(&cand);
        if key > best_key {
            best_key = key;
            best = c;
            best_solved = cand;
            quiet = 0;
            if best_key == bound {
                break;
            }
        } else {
            quiet += 1;
        }
    }
    Ok(SearchResult { change: best, solved: best_solved, tries })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogStep {
    pub action: String,
    pub order: u32,
}

#[derive(Clone, Debug)]
pub struct Caps {
    /// Highest order completion may reach; `None` means input order + 6.
    pub max_order: Option<u32>,
    pub seed: u64,
    pub max_tries: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_order: None, seed: 0, max_tries: 500 }
    }
}

#[derive(Clone, Debug)]
pub struct InvolutiveSystem {
    pub solved: SolvedSystem,
    pub board: JanetBoard,
    pub characters: Characters,
    pub change: CoordinateChange,
    pub log: Vec<LogStep>,
}

impl InvolutiveSystem {
    pub fn n(&self) -> usize {
        self.solved.n()
    }
    pub fn m(&self) -> usize {
        self.solved.m()
    }
    pub fn q(&self) -> u32 {
        self.solved.q()
    }
    pub fn field(&self) -> Field {
        self.solved.field()
    }
    pub fn system(&self) -> &System {
        &self.solved.base
    }

    /// Wrap an already involutive solved system (no search, identity change).
    pub fn from_solved(solved: SolvedSystem) -> Result<Self> {
        let out = involution_test(&solved)?;
        if !out.involutive {
            return Err(PdeError::NotInvolutive("non-multiplicative prolongation does not reduce".into()));
        }
        let board = janet_board(&solved);
        let characters = characters(&board);
        let n = solved.n();
        Ok(InvolutiveSystem { solved, board, characters, change: CoordinateChange::identity(n), log: Vec::new() })
    }
}

/// Formal integrability, δ-regular search and involution test, prolonging
/// until the symbol becomes involutive.
pub fn complete_to_involution(s: &System, caps: &Caps) -> Result<InvolutiveSystem> {
    let cap = caps.max_order.unwrap_or(s.q + 6);
    let mut log = Vec::new();
    let mut cur = s.clone();
    if cur.q == 0 {
        cur = prolong(&cur, 1);
        log.push(LogStep { action: "prolong to first order".into(), order: 1 });
    }
    let mut total = CoordinateChange::identity(s.n);
    loop {
        let q = cur.q;
        let solved = make_formally_integrable(&cur, |k| {
            log.push(LogStep { action: format!("projection added {} equation(s)", k), order: q })
        });
        log.push(LogStep { action: format!("saturated: {} equations", solved.principal.len()), order: q });
        let found = delta_regular_search(&solved, caps.seed, caps.max_tries)?;
        if !found.change.is_identity() {
            log.push(LogStep { action: format!("coordinate change {}", found.change.steps.join(", ")), order: q });
            total = total.then(&found.change);
        }
        let solved = found.solved;
        let outcome = involution_check(&solved);
        if outcome.involutive {
            log.push(LogStep { action: "involutive".into(), order: q });
            let board = janet_board(&solved);
            let characters = characters(&board);
            return Ok(lower_order(&InvolutiveSystem { solved, board, characters, change: total, log }));
        }
        if q + 1 > cap {
            log.push(LogStep { action: format!("order cap {} reached", cap), order: q });
            return Err(PdeError::OrderCapExceeded { cap });
        }
        log.push(LogStep { action: "symbol not involutive: prolong".into(), order: q + 1 });
        cur = prolong(&solved.base, 1);
    }
}

/// Lower the order while the projection stays involutive and prolongs back to R_q.
pub fn lower_order(inv: &InvolutiveSystem) -> InvolutiveSystem {
    let mut cur = inv.clone();
    while cur.q() > 1 {
        let q = cur.q();
        let proj = project(&cur.solved.base, q - 1);
        let low = saturate(&proj);
        let back = saturate(&prolong(&low.base, 1));
        if back.principal.len() != cur.solved.principal.len() {
            break;
        }
        let out = involution_check(&low);
        if !out.involutive || !fi_step(&low.base).0 {
            break;
        }
        let board = janet_board(&low);
        let characters = characters(&board);
        let mut log = cur.log.clone();
        log.push(LogStep { action: "lowered order".into(), order: q - 1 });
        cur = InvolutiveSystem { solved: low, board, characters, change: cur.change.clone(), log };
    }
    cur
}

/// dim R_{q+r} from the characters.
pub fn hilbert_function(inv: &InvolutiveSystem, r: u32) -> usize {
    let q = inv.q();
    let base = if q == 0 { 0 } else { inv.solved.parametric_up_to(q - 1) };
    let mut total = base as i64;
    for (c, a) in inv.characters.alpha.iter().enumerate() {
        let i = c + 1;
        total += binomial(r as i64 + i as i64, i as i64) * a;
    }
    total as usize
}

/// dim R_{q+r} by counting parametric jets of the prolongation.
pub fn direct_dimension(inv: &InvolutiveSystem, r: u32) -> usize {
    let p = saturate(&prolong(&inv.solved.base, r));
    p.parametric.len()
}

/// Parametric jets of order q with no multiplicative variable, plus all
/// lower-order parametric jets.
pub fn parametric_without_multiplicative(inv: &InvolutiveSystem) -> usize {
    let q = inv.q();
    inv.solved.parametric.iter().filter(|j| j.order() < q).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_n_row() {
        let e = Equation::from_pairs(vec![(JetVar::new(0, MultiIndex(vec![0, 0, 2])), Scalar::one())]);
        let s = saturate(&System::new(3, 1, Field::Q, vec![e]));
        let b = janet_board(&s);
        assert_eq!(b.rows.len(), 1);
        assert_eq!(b.rows[0].multiplicative, vec![0, 1, 2]);
    }

    #[test]
    fn change_inverse_roundtrip() {
        let c = CoordinateChange::transvection(0, 2, 3).then(&CoordinateChange::reversal(3));
        let id = c.then(&c.inverse());
        assert!(id.is_identity());
    }

    #[test]
    fn unimodular_entries_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_unimodular(3, &mut rng);
            assert!(m.iter().flatten().all(|v| v.abs() <= 3));
        }
    }
}
