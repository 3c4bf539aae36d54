//! Exact scalars over ℚ and ℚ(x1..xn), and exact linear algebra over them.
//!
//! Rational functions are kept in lowest terms with a lex-monic denominator.
//! Elimination is fraction-free on polynomial rows; a sparse echelon with
//! provenance tracking backs every system-level reduction.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{PdeError, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Canonical rational text: "p" or "p/q".
pub fn render_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn exp_at(v: &[u32], i: usize) -> u32 {
    v.get(i).copied().unwrap_or(0)
}

/// Graded order on exponent vectors shared with the jet ordering: total
/// degree, then class (larger class greater), then reverse lex.
pub fn monomial_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    if da != db {
        return da.cmp(&db);
    }
    let ca = a.iter().position(|&e| e != 0);
    let cb = b.iter().position(|&e| e != 0);
    if ca != cb {
        return ca.cmp(&cb);
    }
    let len = a.len().max(b.len());
    for i in (0..len).rev() {
        let (x, y) = (exp_at(a, i), exp_at(b, i));
        if x != y {
            return x.cmp(&y);
        }
    }
    Ordering::Equal
}

/// Sparse multivariate polynomial with rational coefficients.
///
/// Exponent keys are stored with trailing zeros removed, so lexicographic
/// comparison of keys is lex order with x1 most significant.
#[derive(Clone, Debug)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}
impl Eq for MultiPoly {}

impl Hash for MultiPoly {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.terms.hash(state);
    }
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(c: Rational, nvars: usize) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        MultiPoly { nvars, terms }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(rat(1), nvars)
    }

    /// The variable with 0-based index `i`.
    pub fn var(i: usize, nvars: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(e, rat(1));
        MultiPoly { nvars: nvars.max(i + 1), terms }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = MultiPoly::zero(nvars);
        for (mut e, c) in terms {
            trim(&mut e);
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn with_nvars(mut self, n: usize) -> Self {
        self.nvars = n;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|k| k.is_empty())
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(rat(0));
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Vec::new()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms with exponent vectors padded to `nvars`.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<u32>, &Rational)> {
        let n = self.nvars;
        self.terms.iter().map(move |(k, c)| {
            let mut e = k.clone();
            e.resize(n.max(k.len()), 0);
            (e, c)
        })
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|k| exp_at(k, v)).max().unwrap_or(0)
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter(|k| !k.is_empty()).map(|k| k.len() - 1).max()
    }

    /// Lex-leading coefficient.
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.values().next_back()
    }

    fn leading_term(&self) -> Option<(&Vec<u32>, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    /// Divide by the lex-leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading_coefficient() {
            Some(c) => {
                let inv = c.recip();
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }

    fn mul_monomial(&self, e: &[u32], c: &Rational) -> Self {
        let mut out = MultiPoly::zero(self.nvars);
        for (k, v) in &self.terms {
            let len = k.len().max(e.len());
            let mut s: Vec<u32> = (0..len).map(|i| exp_at(k, i) + exp_at(e, i)).collect();
            trim(&mut s);
            out.terms.insert(s, v * c);
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = MultiPoly::zero(self.nvars);
        for (k, v) in &self.terms {
            let d = exp_at(k, i);
            if d == 0 {
                continue;
            }
            let mut e = k.clone();
            e[i] -= 1;
            trim(&mut e);
            out.add_term(e, v * rat(d as i64));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = MultiPoly::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitute polynomial `subs[i]` for variable i.
    pub fn substitute(&self, subs: &[MultiPoly], nvars_out: usize) -> Self {
        let mut out = MultiPoly::zero(nvars_out);
        for (k, c) in &self.terms {
            let mut t = MultiPoly::constant(c.clone(), nvars_out);
            for (i, &e) in k.iter().enumerate() {
                if e > 0 {
                    t = &t * &subs[i].pow(e);
                }
            }
            out = &out + &t;
        }
        out.nvars = nvars_out;
        out
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (de, dc) = d.leading_term().map(|(e, c)| (e.clone(), c.clone()))?;
        let mut q = MultiPoly::zero(self.nvars.max(d.nvars));
        let mut r = self.clone();
        while let Some((re, rc)) = r.leading_term().map(|(e, c)| (e.clone(), c.clone())) {
            let len = re.len().max(de.len());
            let mut e = Vec::with_capacity(len);
            for i in 0..len {
                let (a, b) = (exp_at(&re, i), exp_at(&de, i));
                if a < b {
                    return None;
                }
                e.push(a - b);
            }
            trim(&mut e);
            let c = &rc / &dc;
            r = &r - &d.mul_monomial(&e, &c);
            q.add_term(e, c);
        }
        Some(q)
    }

    fn coeffs_in(&self, v: usize) -> BTreeMap<u32, MultiPoly> {
        let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (k, c) in &self.terms {
            let d = exp_at(k, v);
            let mut e = k.clone();
            if v < e.len() {
                e[v] = 0;
            }
            trim(&mut e);
            out.entry(d).or_insert_with(|| MultiPoly::zero(self.nvars)).add_term(e, c.clone());
        }
        out
    }

    fn lc_in(&self, v: usize) -> MultiPoly {
        let d = self.degree_in(v);
        self.coeffs_in(v).remove(&d).unwrap_or_else(|| MultiPoly::zero(self.nvars))
    }

    fn prem(f: &MultiPoly, g: &MultiPoly, v: usize) -> MultiPoly {
        let dg = g.degree_in(v);
        let lcg = g.lc_in(v);
        let mut r = f.clone();
        while !r.is_zero() && r.degree_in(v) >= dg {
            let dr = r.degree_in(v);
            let lcr = r.lc_in(v);
            let mut e = vec![0; v + 1];
            e[v] = dr - dg;
            trim(&mut e);
            r = &(&lcg * &r) - &(&lcr * &g.mul_monomial(&e, &rat(1)));
        }
        r
    }

    fn content_in(&self, v: usize) -> MultiPoly {
        let mut g = MultiPoly::zero(self.nvars);
        for c in self.coeffs_in(v).into_values() {
            g = MultiPoly::gcd(&g, &c);
            if g.is_constant() && !g.is_zero() {
                return MultiPoly::one(self.nvars);
            }
        }
        g
    }

    /// Greatest common divisor over ℚ, lex-monic; gcd(0, 0) = 0.
    pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
        let n = a.nvars.max(b.nvars);
        if a.is_zero() {
            return b.monic().with_nvars(n);
        }
        if b.is_zero() {
            return a.monic().with_nvars(n);
        }
        if a.is_constant() || b.is_constant() {
            return MultiPoly::one(n);
        }
        if a == b {
            return a.monic().with_nvars(n);
        }
        let v = a.max_var().max(b.max_var()).expect("nonconstant");
        let (da, db) = (a.degree_in(v), b.degree_in(v));
        if da == 0 {
            return MultiPoly::gcd(a, &b.content_in(v)).with_nvars(n);
        }
        if db == 0 {
            return MultiPoly::gcd(&a.content_in(v), b).with_nvars(n);
        }
        let ca = a.content_in(v);
        let cb = b.content_in(v);
        let c = MultiPoly::gcd(&ca, &cb);
        let pa = a.div_exact(&ca).expect("content divides");
        let pb = b.div_exact(&cb).expect("content divides");
        let (mut f, mut g) = if da >= db { (pa, pb) } else { (pb, pa) };
        loop {
            let r = MultiPoly::prem(&f, &g, v);
            if r.is_zero() {
                break;
            }
            if r.degree_in(v) == 0 {
                return c.monic().with_nvars(n);
            }
            let cr = r.content_in(v);
            f = g;
            g = r.div_exact(&cr).expect("content divides").monic();
        }
        let cg = g.content_in(v);
        let pg = g.div_exact(&cg).expect("content divides");
        (&c * &pg).monic().with_nvars(n)
    }

    /// Render with the given variable names, graded order descending.
    pub fn render_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().collect();
        keys.sort_by(|a, b| monomial_cmp(b, a));
        let mut out = String::new();
        for (idx, k) in keys.iter().enumerate() {
            let c = &self.terms[*k];
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = render_monomial(k, names);
            if mono.is_empty() {
                out.push_str(&render_rational(&a));
            } else if a.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&render_rational(&a));
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

fn render_monomial(e: &[u32], names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &d) in e.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let name = names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1));
        if d == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{}^{}", name, d));
        }
    }
    parts.join("*")
}

pub fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{}{}", prefix, i)).collect()
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_with(&default_names("x", self.nvars)))
    }
}

impl<'a> Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out.nvars = self.nvars.max(o.nvars);
        for (k, c) in &o.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out.nvars = self.nvars.max(o.nvars);
        for (k, c) in &o.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn mul(self, o: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars.max(o.nvars));
        for (k, c) in &o.terms {
            let t = self.mul_monomial(k, c);
            for (e, v) in t.terms {
                out.add_term(e, v);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&rat(-1))
    }
}

/// Field the scalar lives in: plain rationals, or rational functions in n variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldTag {
    ConstantQ,
    RationalFunctions(usize),
}

/// Exact element of ℚ or ℚ(x1..xn).
///
/// A scalar with no variables embeds in every field, so it mixes freely.
/// Operators panic on a genuine mismatch; use the `try_` forms to get
/// [`PdeError::FieldMismatch`] instead.
#[derive(Clone, Debug)]
pub struct Scalar {
    num: MultiPoly,
    den: MultiPoly,
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}
impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.num.hash(state);
        self.den.hash(state);
    }
}

fn compat(a: usize, b: usize) -> Result<usize> {
    if a == b || a == 0 || b == 0 {
        Ok(a.max(b))
    } else {
        Err(PdeError::FieldMismatch(a, b))
    }
}

impl Scalar {
    pub fn from_rational(r: Rational) -> Self {
        Scalar { num: MultiPoly::constant(r, 0), den: MultiPoly::one(0) }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(ratio(n, d))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        let n = p.nvars;
        Scalar { num: p, den: MultiPoly::one(n) }
    }

    /// The coefficient variable with 0-based index i in ℚ(x1..xn).
    pub fn var(i: usize, nvars: usize) -> Self {
        Self::from_poly(MultiPoly::var(i, nvars))
    }

    pub fn from_parts(num: MultiPoly, den: MultiPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(PdeError::DivisionByZero);
        }
        let n = compat(num.nvars, den.nvars)?;
        Ok(Self::normalize(num.with_nvars(n), den.with_nvars(n)))
    }

    fn normalize(num: MultiPoly, den: MultiPoly) -> Self {
        let n = num.nvars.max(den.nvars);
        if num.is_zero() {
            return Scalar { num: MultiPoly::zero(n), den: MultiPoly::one(n) };
        }
        if let Some(c) = den.constant_value() {
            let inv = c.recip();
            return Scalar { num: num.scale(&inv).with_nvars(n), den: MultiPoly::one(n) };
        }
        let g = MultiPoly::gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let lc = den.leading_coefficient().expect("nonzero").recip();
        Scalar { num: num.scale(&lc).with_nvars(n), den: den.scale(&lc).with_nvars(n) }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn numerator(&self) -> &MultiPoly {
        &self.num
    }

    pub fn denominator(&self) -> &MultiPoly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars.max(self.den.nvars)
    }

    pub fn field_tag(&self) -> FieldTag {
        match self.nvars() {
            0 => FieldTag::ConstantQ,
            n => FieldTag::RationalFunctions(n),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_constant() && self.num.constant_value().map_or(false, |c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.den.is_constant() {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// Sign of the lex-leading numerator coefficient.
    pub fn leading_sign_negative(&self) -> bool {
        self.num.leading_coefficient().map_or(false, |c| c.is_negative())
    }

    pub fn try_add(&self, o: &Scalar) -> Result<Scalar> {
        compat(self.nvars(), o.nvars())?;
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.den == o.den {
            return Ok(Self::normalize(&self.num + &o.num, self.den.clone()));
        }
        let num = &(&self.num * &o.den) + &(&o.num * &self.den);
        Ok(Self::normalize(num, &self.den * &o.den))
    }

    pub fn try_sub(&self, o: &Scalar) -> Result<Scalar> {
        self.try_add(&o.neg_ref())
    }

    pub fn try_mul(&self, o: &Scalar) -> Result<Scalar> {
        compat(self.nvars(), o.nvars())?;
        if self.is_zero() || o.is_zero() {
            return Ok(Scalar::zero());
        }
        if self.den.is_constant() && o.den.is_constant() {
            return Ok(Scalar { num: &self.num * &o.num, den: MultiPoly::one(self.nvars().max(o.nvars())) });
        }
        Ok(Self::normalize(&self.num * &o.num, &self.den * &o.den))
    }

    pub fn try_div(&self, o: &Scalar) -> Result<Scalar> {
        compat(self.nvars(), o.nvars())?;
        if o.is_zero() {
            return Err(PdeError::DivisionByZero);
        }
        self.try_mul(&o.inv()?)
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(PdeError::DivisionByZero);
        }
        Ok(Self::normalize(self.den.clone(), self.num.clone()))
    }

    fn neg_ref(&self) -> Scalar {
        Scalar { num: -&self.num, den: self.den.clone() }
    }

    pub fn scale_rational(&self, c: &Rational) -> Scalar {
        if c.is_zero() {
            return Scalar::zero();
        }
        Scalar { num: self.num.scale(c), den: self.den.clone() }
    }

    /// ∂/∂x_i with 0-based i; constants give 0.
    pub fn partial_derivative(&self, i: usize) -> Result<Scalar> {
        let n = self.nvars();
        if n == 0 {
            return Ok(Scalar::zero());
        }
        if i >= n {
            return Err(PdeError::IndexOutOfRange { index: i, bound: n });
        }
        let dn = self.num.derivative(i);
        if self.den.is_constant() {
            return Ok(Self::normalize(dn, self.den.clone()));
        }
        let dd = self.den.derivative(i);
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Ok(Self::normalize(num, &self.den * &self.den))
    }

    /// Replace x_i by `subs[i]` (polynomials in `nvars_out` variables).
    pub fn substitute(&self, subs: &[MultiPoly], nvars_out: usize) -> Scalar {
        if self.is_constant() {
            return self.clone();
        }
        Self::normalize(self.num.substitute(subs, nvars_out), self.den.substitute(subs, nvars_out))
    }

    pub fn render_with(&self, names: &[String]) -> String {
        if self.den.is_one_poly() {
            return self.num.render_with(names);
        }
        let num = self.num.render_with(names);
        let num_wrapped = if self.num.num_terms() > 1 || (!self.num.is_constant() && !self.num.leading_coefficient().map_or(true, |c| c.abs().is_one())) || self.num.constant_value().map_or(false, |c| !c.is_integer()) {
            format!("({})", num)
        } else {
            num
        };
        let den = self.den.render_with(names);
        let den_wrapped = if self.den.num_terms() > 1 || den.contains('*') { format!("({})", den) } else { den };
        format!("{}/{}", num_wrapped, den_wrapped)
    }

    /// True when this scalar needs parentheses as a product factor.
    pub fn is_compound(&self) -> bool {
        self.num.num_terms() > 1 || !self.den.is_one_poly()
    }
}

impl MultiPoly {
    fn is_one_poly(&self) -> bool {
        self.constant_value().map_or(false, |c| c.is_one())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_with(&default_names("x", self.nvars())))
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl<'a> $tr<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                self.$f(o).expect("scalar operation")
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$f(&o).expect("scalar operation")
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$f(o).expect("scalar operation")
            }
        }
    };
}

scalar_binop!(Add, add, try_add);
scalar_binop!(Sub, sub, try_sub);
scalar_binop!(Mul, mul, try_mul);
scalar_binop!(Div, div, try_div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

impl Zero for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

impl One for Scalar {
    fn one() -> Self {
        Scalar::one()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

/// Dense matrix of scalars, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Scalar>,
}

impl ScalarMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ScalarMatrix { rows, cols, entries: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            entries.extend(row);
        }
        ScalarMatrix { rows: r, cols: c, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_mat(&self, o: &ScalarMatrix) -> ScalarMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = ScalarMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j) + &(a * b);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        (0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for j in 0..self.cols {
                    if !self.get(i, j).is_zero() && !v[j].is_zero() {
                        acc = acc + self.get(i, j) * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> ScalarMatrix {
        let mut out = ScalarMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }
}

/// Result of [`row_reduce`].
#[derive(Clone, Debug)]
pub struct RowReduction {
    pub rank: usize,
    pub reduced: ScalarMatrix,
    pub pivot_cols: Vec<usize>,
}

fn poly_row_content(row: &[MultiPoly]) -> MultiPoly {
    let mut g = MultiPoly::zero(0);
    for e in row {
        if e.is_zero() {
            continue;
        }
        g = MultiPoly::gcd(&g, e);
        if g.is_constant() {
            break;
        }
    }
    g
}

fn lcm(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let g = MultiPoly::gcd(a, b);
    (a * b).div_exact(&g).expect("gcd divides")
}

/// Reduced row-echelon form with pivots taken in `pivot_order`.
///
/// Rows are cleared to polynomials, eliminated division-free with content
/// reduction, then back-substituted so every pivot is 1.
pub fn row_reduce(m: &ScalarMatrix, pivot_order: &[usize]) -> RowReduction {
    let all_q = m.entries.iter().all(|e| e.is_constant());
    let mut prows: Vec<Vec<MultiPoly>> = Vec::new();
    for i in 0..m.rows {
        let row = m.row(i);
        if row.iter().all(|e| e.is_zero()) {
            continue;
        }
        let mut l = MultiPoly::one(0);
        if !all_q {
            for e in row {
                if !e.den.is_constant() {
                    l = lcm(&l, &e.den);
                }
            }
        }
        let pr: Vec<MultiPoly> = row
            .iter()
            .map(|e| {
                if e.is_zero() {
                    MultiPoly::zero(0)
                } else if l.is_constant() {
                    e.num.clone()
                } else {
                    (&e.num * &l).div_exact(&e.den).expect("lcm clears denominators")
                }
            })
            .collect();
        prows.push(pr);
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for &col in pivot_order {
        if r >= prows.len() {
            break;
        }
        let mut best: Option<usize> = None;
        for i in r..prows.len() {
            if !prows[i][col].is_zero() {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (x, y) = (&prows[i][col], &prows[b][col]);
                        (x.total_degree(), x.num_terms()) < (y.total_degree(), y.num_terms())
                    }
                };
                if better {
                    best = Some(i);
                }
            }
        }
        let Some(b) = best else { continue };
        prows.swap(r, b);
        let p = prows[r][col].clone();
        for i in r + 1..prows.len() {
            if prows[i][col].is_zero() {
                continue;
            }
            let a = prows[i][col].clone();
            let newrow: Vec<MultiPoly> = (0..m.cols)
                .map(|j| &(&p * &prows[i][j]) - &(&a * &prows[r][j]))
                .collect();
            let g = poly_row_content(&newrow);
            prows[i] = if g.is_zero() || g.is_constant() {
                let lc = newrow.iter().find(|e| !e.is_zero()).and_then(|e| e.leading_coefficient().cloned());
                match lc {
                    Some(c) if all_q => newrow.iter().map(|e| e.scale(&c.recip())).collect(),
                    _ => newrow,
                }
            } else {
                newrow.iter().map(|e| e.div_exact(&g).expect("content divides")).collect()
            };
        }
        pivots.push(col);
        r += 1;
    }
    prows.truncate(r);
    let mut srows: Vec<Vec<Scalar>> = prows
        .into_iter()
        .map(|row| row.into_iter().map(Scalar::from_poly).collect())
        .collect();
    for k in (0..r).rev() {
        let pc = pivots[k];
        let inv = srows[k][pc].inv().expect("pivot nonzero");
        for j in 0..m.cols {
            if !srows[k][j].is_zero() {
                srows[k][j] = &srows[k][j] * &inv;
            }
        }
        for i in 0..k {
            if srows[i][pc].is_zero() {
                continue;
            }
            let f = srows[i][pc].clone();
            for j in 0..m.cols {
                if !srows[k][j].is_zero() {
                    srows[i][j] = &srows[i][j] - &(&f * &srows[k][j]);
                }
            }
        }
    }
    let mut reduced = ScalarMatrix::zeros(r, m.cols);
    for (i, row) in srows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            reduced.set(i, j, v);
        }
    }
    RowReduction { rank: r, reduced, pivot_cols: pivots }
}

pub fn rank(m: &ScalarMatrix) -> usize {
    let order: Vec<usize> = (0..m.cols).collect();
    row_reduce(m, &order).rank
}

/// Basis of the right null space, one vector per free column in `pivot_order`'s complement.
pub fn nullspace_with_order(m: &ScalarMatrix, pivot_order: &[usize]) -> Vec<Vec<Scalar>> {
    let rr = row_reduce(m, pivot_order);
    let mut is_pivot = vec![false; m.cols];
    for &c in &rr.pivot_cols {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for f in 0..m.cols {
        if is_pivot[f] {
            continue;
        }
        let mut v = vec![Scalar::zero(); m.cols];
        v[f] = Scalar::one();
        for (k, &pc) in rr.pivot_cols.iter().enumerate() {
            let e = rr.reduced.get(k, f);
            if !e.is_zero() {
                v[pc] = -e;
            }
        }
        basis.push(v);
    }
    basis
}

pub fn solve_nullspace(m: &ScalarMatrix) -> Vec<Vec<Scalar>> {
    let order: Vec<usize> = (0..m.cols).collect();
    nullspace_with_order(m, &order)
}

/// Sparse row keyed by an ordered index.
pub type SparseRow<K> = BTreeMap<K, Scalar>;

/// `row -= c * other`, dropping zeros.
pub fn axpy<K: Ord + Clone>(row: &mut SparseRow<K>, c: &Scalar, other: &SparseRow<K>) {
    if c.is_zero() {
        return;
    }
    for (k, v) in other {
        let t = c * v;
        match row.get_mut(k) {
            Some(x) => {
                let nv = &*x - &t;
                if nv.is_zero() {
                    row.remove(k);
                } else {
                    *x = nv;
                }
            }
            None => {
                row.insert(k.clone(), -t);
            }
        }
    }
}

pub fn scale_row<K: Ord + Clone>(row: &SparseRow<K>, c: &Scalar) -> SparseRow<K> {
    if c.is_zero() {
        return SparseRow::new();
    }
    row.iter().map(|(k, v)| (k.clone(), v * c)).collect()
}

#[derive(Clone, Debug)]
struct EchelonRow<K: Ord + Clone> {
    row: SparseRow<K>,
    tag: SparseRow<usize>,
}

/// Fully reduced sparse echelon basis; the pivot of a row is its greatest key.
///
/// Every stored row carries a tag: its expression as a combination of the
/// tagged inputs, so reductions can report how a row was obtained.
#[derive(Clone, Debug)]
pub struct Echelon<K: Ord + Clone> {
    rows: BTreeMap<K, EchelonRow<K>>,
}

impl<K: Ord + Clone> Default for Echelon<K> {
    fn default() -> Self {
        Echelon { rows: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> Echelon<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = &K> {
        self.rows.keys()
    }

    pub fn is_pivot(&self, k: &K) -> bool {
        self.rows.contains_key(k)
    }

    pub fn row(&self, pivot: &K) -> Option<&SparseRow<K>> {
        self.rows.get(pivot).map(|r| &r.row)
    }

    pub fn tag(&self, pivot: &K) -> Option<&SparseRow<usize>> {
        self.rows.get(pivot).map(|r| &r.tag)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&K, &SparseRow<K>)> {
        self.rows.iter().map(|(k, r)| (k, &r.row))
    }

    /// Reduce `row` completely; `tag` is updated alongside.
    pub fn reduce_tagged(&self, mut row: SparseRow<K>, mut tag: SparseRow<usize>) -> (SparseRow<K>, SparseRow<usize>) {
        let mut bound: Option<K> = None;
        loop {
            let next = {
                let mut it: Box<dyn Iterator<Item = (&K, &Scalar)>> = match &bound {
                    None => Box::new(row.iter().rev()),
                    Some(b) => Box::new(row.range(..b.clone()).rev()),
                };
                it.find(|(k, _)| self.rows.contains_key(*k)).map(|(k, c)| (k.clone(), c.clone()))
            };
            let Some((k, c)) = next else { break };
            let er = &self.rows[&k];
            axpy(&mut row, &c, &er.row);
            axpy(&mut tag, &c, &er.tag);
            bound = Some(k);
        }
        (row, tag)
    }

    /// Write `row` as `Σ c·input + remainder`; returns (remainder, c).
    pub fn express(&self, row: SparseRow<K>) -> (SparseRow<K>, SparseRow<usize>) {
        let (rem, tag) = self.reduce_tagged(row, SparseRow::new());
        (rem, tag.into_iter().map(|(k, v)| (k, -v)).collect())
    }

    pub fn reduce(&self, row: SparseRow<K>) -> SparseRow<K> {
        self.reduce_tagged(row, SparseRow::new()).0
    }

    pub fn contains(&self, row: &SparseRow<K>) -> bool {
        self.reduce(row.clone()).is_empty()
    }

    /// Insert; returns the new pivot when the row was independent.
    pub fn insert_tagged(&mut self, row: SparseRow<K>, tag: SparseRow<usize>) -> Option<K> {
        let (row, tag) = self.reduce_tagged(row, tag);
        let (pk, pc) = row.iter().next_back().map(|(k, c)| (k.clone(), c.clone()))?;
        let inv = pc.inv().expect("pivot nonzero");
        let row = scale_row(&row, &inv);
        let tag = scale_row(&tag, &inv);
        let others: Vec<K> = self
            .rows
            .iter()
            .filter(|(_, r)| r.row.contains_key(&pk))
            .map(|(k, _)| k.clone())
            .collect();
        for k in others {
            let er = self.rows.get_mut(&k).expect("present");
            let c = er.row[&pk].clone();
            axpy(&mut er.row, &c, &row);
            axpy(&mut er.tag, &c, &tag);
        }
        self.rows.insert(pk.clone(), EchelonRow { row, tag });
        Some(pk)
    }

    pub fn insert(&mut self, row: SparseRow<K>) -> Option<K> {
        self.insert_tagged(row, SparseRow::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize, n: usize) -> Scalar {
        Scalar::var(i, n)
    }

    #[test]
    fn rational_sum() {
        let s = Scalar::from_ratio(1, 2) + Scalar::from_ratio(1, 3);
        assert_eq!(s, Scalar::from_ratio(5, 6));
        assert_eq!(s.to_string(), "5/6");
    }

    #[test]
    fn quotient_cancels() {
        let a = &x(0, 1) * &x(0, 1);
        assert_eq!(&a / &x(0, 1), x(0, 1));
        let p = (x(0, 1) + Scalar::one()) * (x(0, 1) - Scalar::one());
        assert_eq!(p.to_string(), "x1^2 - 1");
    }

    #[test]
    fn derivatives() {
        let xy = &x(0, 2) * &x(1, 2);
        assert_eq!(xy.partial_derivative(0).unwrap(), x(1, 2));
        let inv = Scalar::one() / x(0, 2);
        let d = inv.partial_derivative(0).unwrap();
        assert_eq!(d, -(Scalar::one() / (&x(0, 2) * &x(0, 2))));
        assert!(Scalar::from_int(7).partial_derivative(1).unwrap().is_zero());
        assert!(x(0, 2).partial_derivative(5).is_err());
    }

    #[test]
    fn gcd_multivariate() {
        let n = 2;
        let a = MultiPoly::var(0, n);
        let b = MultiPoly::var(1, n);
        let f = &(&a + &b) * &(&a - &b);
        let g = &(&a + &b) * &(&a * &b);
        let h = MultiPoly::gcd(&f, &g);
        assert_eq!(h, (&a + &b).monic());
    }

    #[test]
    fn mismatch_reported() {
        let a = x(0, 1);
        let b = x(0, 2);
        assert_eq!(a.try_add(&b), Err(PdeError::FieldMismatch(1, 2)));
        assert!(a.try_add(&Scalar::from_int(3)).is_ok());
    }

    #[test]
    fn rendering() {
        let n = 2;
        let p = &(&x(0, n) * &x(0, n)) * &x(1, n) - Scalar::from_ratio(1, 3);
        assert_eq!(p.to_string(), "x1^2*x2 - 1/3");
        let q = (&x(0, n) * &x(0, n)) / x(1, n);
        assert_eq!(q.to_string(), "x1^2/x2");
        assert_eq!(Scalar::from_ratio(-3, 2).to_string(), "-3/2");
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&ScalarMatrix::identity(2)), 2);
        let xv = x(0, 1);
        let m = ScalarMatrix::from_rows(vec![vec![xv.clone(), Scalar::one()], vec![&xv * &xv, xv.clone()]]);
        assert_eq!(rank(&m), 1);
        assert_eq!(rank(&ScalarMatrix::zeros(3, 2)), 0);
    }

    #[test]
    fn nullspace_examples() {
        assert!(solve_nullspace(&ScalarMatrix::identity(3)).is_empty());
        let m = ScalarMatrix::from_rows(vec![vec![Scalar::one(), Scalar::one()]]);
        let b = solve_nullspace(&m);
        assert_eq!(b, vec![vec![Scalar::from_int(-1), Scalar::one()]]);
    }

    #[test]
    fn echelon_tracks_tags() {
        let mut e: Echelon<u32> = Echelon::new();
        let r1: SparseRow<u32> = [(2, Scalar::one()), (1, Scalar::one())].into_iter().collect();
        let r2: SparseRow<u32> = [(2, Scalar::one()), (0, Scalar::one())].into_iter().collect();
        e.insert_tagged(r1.clone(), [(0, Scalar::one())].into_iter().collect());
        e.insert_tagged(r2.clone(), [(1, Scalar::one())].into_iter().collect());
        let target: SparseRow<u32> = [(1, Scalar::from_int(2)), (0, Scalar::from_int(-2))].into_iter().collect();
        let (rem, tag) = e.express(target);
        assert!(rem.is_empty());
        // target = 2 r1 - 2 r2
        assert_eq!(tag.get(&0), Some(&Scalar::from_int(2)));
        assert_eq!(tag.get(&1), Some(&Scalar::from_int(-2)));
    }
}
