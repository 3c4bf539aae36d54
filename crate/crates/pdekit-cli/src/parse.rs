//! Line-oriented system files.
//!
//! ```text
//! field Q(x)
//! vars x
//! unknowns y
//! eq y[2] - x*y[0] = 0
//! ```

use std::collections::BTreeMap;

use pdekit::exactalg::{rat, Scalar};
use pdekit::jetspace::{JetVar, MultiIndex};
use pdekit::pdesys::{Equation, Field, System};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{name}` at {line}:{col}")]
    UndeclaredSymbol { line: usize, col: usize, name: String },
    #[error("inconsistent arity at {line}:{col}: expected {expected} indices, found {found}")]
    InconsistentArity { line: usize, col: usize, expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
}

fn tokenize(s: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        let col = col0 + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            let v = t
                .parse()
                .map_err(|_| ParseError::Syntax { line, col, msg: format!("integer `{}` too large", t) })?;
            out.push((Tok::Int(v), col));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(cs[st..i].iter().collect()), col));
        } else if "+-*/^()[],=".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(ParseError::Syntax { line, col, msg: format!("unexpected character `{}`", c) });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum Val {
    Coef(Scalar),
    Lin(BTreeMap<JetVar, Scalar>),
}

struct Ctx<'a> {
    vars: &'a [String],
    unknowns: &'a [String],
    field: Field,
    line: usize,
}

struct P<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: Ctx<'a>,
    end_col: usize,
}

impl<'a> P<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.ctx.line, col: self.col(), msg: msg.into() }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Val, ParseError> {
        let mut v = self.term()?;
        loop {
            let col = self.col();
            if self.eat('+') {
                let r = self.term()?;
                v = self.combine(v, r, false, col)?;
            } else if self.eat('-') {
                let r = self.term()?;
                v = self.combine(v, r, true, col)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn combine(&self, a: Val, b: Val, sub: bool, col: usize) -> Result<Val, ParseError> {
        let sign = if sub { Scalar::from_int(-1) } else { Scalar::one() };
        match (a, b) {
            (Val::Coef(x), Val::Coef(y)) => Ok(Val::Coef(&x + &(&sign * &y))),
            (Val::Lin(mut x), Val::Lin(y)) => {
                for (j, c) in y {
                    let e = x.entry(j.clone()).or_insert_with(Scalar::zero);
                    *e = &*e + &(&sign * &c);
                    if e.is_zero() {
                        x.remove(&j);
                    }
                }
                Ok(Val::Lin(x))
            }
            (Val::Lin(x), Val::Coef(c)) | (Val::Coef(c), Val::Lin(x)) if c.is_zero() => {
                let _ = c;
                Ok(Val::Lin(x))
            }
            _ => Err(ParseError::Syntax {
                line: self.ctx.line,
                col,
                msg: "term without unknown: equations must be homogeneous".into(),
            }),
        }
    }

    fn term(&mut self) -> Result<Val, ParseError> {
        let mut v = self.unary()?;
        loop {
            let col = self.col();
            if self.eat('*') {
                let r = self.unary()?;
                v = match (v, r) {
                    (Val::Coef(a), Val::Coef(b)) => Val::Coef(&a * &b),
                    (Val::Coef(a), Val::Lin(l)) | (Val::Lin(l), Val::Coef(a)) => Val::Lin(scale(l, &a)),
                    _ => return Err(ParseError::Syntax { line: self.ctx.line, col, msg: "product of two unknowns".into() }),
                };
            } else if self.eat('/') {
                let r = self.unary()?;
                let d = match r {
                    Val::Coef(d) => d,
                    Val::Lin(_) => {
                        return Err(ParseError::Syntax { line: self.ctx.line, col, msg: "division by an unknown".into() })
                    }
                };
                let inv = d
                    .inv()
                    .map_err(|_| ParseError::Syntax { line: self.ctx.line, col, msg: "division by zero".into() })?;
                v = match v {
                    Val::Coef(a) => Val::Coef(&a * &inv),
                    Val::Lin(l) => Val::Lin(scale(l, &inv)),
                };
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<Val, ParseError> {
        if self.eat('-') {
            let v = self.unary()?;
            return Ok(match v {
                Val::Coef(c) => Val::Coef(-c),
                Val::Lin(l) => Val::Lin(scale(l, &Scalar::from_int(-1))),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Val, ParseError> {
        let base = self.atom()?;
        let col = self.col();
        if self.eat('^') {
            let neg = self.eat('-');
            let k = match self.peek() {
                Some(Tok::Int(k)) => *k,
                _ => return Err(self.err("expected integer exponent")),
            };
            self.pos += 1;
            let c = match base {
                Val::Coef(c) => c,
                Val::Lin(_) => return Err(ParseError::Syntax { line: self.ctx.line, col, msg: "power of an unknown".into() }),
            };
            let mut acc = Scalar::one();
            for _ in 0..k {
                acc = &acc * &c;
            }
            if neg {
                acc = acc.inv().map_err(|_| ParseError::Syntax { line: self.ctx.line, col, msg: "division by zero".into() })?;
            }
            return Ok(Val::Coef(acc));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Val, ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Int(k)) => {
                self.pos += 1;
                Ok(Val::Coef(Scalar::from_rational(rat(k))))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(v)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(k) = self.ctx.unknowns.iter().position(|u| *u == name) {
                    if !self.eat('[') {
                        return Err(self.err("expected `[` after unknown"));
                    }
                    let mut idx = Vec::new();
                    if !self.eat(']') {
                        loop {
                            match self.peek() {
                                Some(Tok::Int(v)) if *v >= 0 => {
                                    idx.push(*v as u32);
                                    self.pos += 1;
                                }
                                _ => return Err(self.err("expected non-negative integer index")),
                            }
                            if self.eat(']') {
                                break;
                            }
                            if !self.eat(',') {
                                return Err(self.err("expected `,` or `]`"));
                            }
                        }
                    }
                    let n = self.ctx.vars.len();
                    if idx.len() != n {
                        return Err(ParseError::InconsistentArity { line: self.ctx.line, col, expected: n, found: idx.len() });
                    }
                    let mut m = BTreeMap::new();
                    m.insert(JetVar::new(k, MultiIndex(idx)), Scalar::one());
                    return Ok(Val::Lin(m));
                }
                if let Some(i) = self.ctx.vars.iter().position(|v| *v == name) {
                    if self.ctx.field != Field::QX {
                        return Err(ParseError::Syntax {
                            line: self.ctx.line,
                            col,
                            msg: format!("variable `{}` in a coefficient requires `field Q(x)`", name),
                        });
                    }
                    return Ok(Val::Coef(Scalar::var(i, self.ctx.vars.len())));
                }
                Err(ParseError::UndeclaredSymbol { line: self.ctx.line, col, name })
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

fn scale(l: BTreeMap<JetVar, Scalar>, c: &Scalar) -> BTreeMap<JetVar, Scalar> {
    if c.is_zero() {
        return BTreeMap::new();
    }
    l.into_iter().map(|(j, v)| (j, &v * c)).collect()
}

/// Parse a system file.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut field = Field::Q;
    let mut vars: Option<Vec<String>> = None;
    let mut unknowns: Option<Vec<String>> = None;
    let mut eqs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let lead = content.len() - trimmed.len();
        let (kw, rest) = match trimmed.find(char::is_whitespace) {
            Some(p) => (&trimmed[..p], &trimmed[p..]),
            None => (trimmed, ""),
        };
        let rest_col = lead + kw.len();
        match kw {
            "field" => {
                field = match rest.split_whitespace().collect::<String>().as_str() {
                    "Q" => Field::Q,
                    "Q(x)" => Field::QX,
                    other => {
                        return Err(ParseError::Syntax {
                            line,
                            col: rest_col + 2,
                            msg: format!("unknown field `{}` (use Q or Q(x))", other),
                        })
                    }
                }
            }
            "vars" | "unknowns" => {
                let names: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if names.is_empty() {
                    return Err(ParseError::Syntax { line, col: rest_col + 1, msg: format!("`{}` needs at least one name", kw) });
                }
                for (i, nm) in names.iter().enumerate() {
                    let ok = nm.chars().next().map_or(false, |c| c.is_alphabetic() || c == '_')
                        && nm.chars().all(|c| c.is_alphanumeric() || c == '_');
                    if !ok || names[..i].contains(nm) {
                        return Err(ParseError::Syntax { line, col: rest_col + 1, msg: format!("bad or repeated name `{}`", nm) });
                    }
                }
                if kw == "vars" {
                    vars = Some(names);
                } else {
                    unknowns = Some(names);
                }
            }
            "eq" => {
                let (v, u) = match (&vars, &unknowns) {
                    (Some(v), Some(u)) => (v, u),
                    _ => {
                        return Err(ParseError::Syntax { line, col: lead + 1, msg: "`vars` and `unknowns` must precede equations".into() })
                    }
                };
                if let Some(bad) = u.iter().find(|n| v.contains(n)) {
                    return Err(ParseError::Syntax { line, col: lead + 1, msg: format!("`{}` is both a variable and an unknown", bad) });
                }
                let toks = tokenize(rest, line, rest_col)?;
                let end_col = rest_col + rest.chars().count() + 1;
                let mut p = P { toks, pos: 0, ctx: Ctx { vars: v, unknowns: u, field, line }, end_col };
                let val = p.expr()?;
                if !p.eat('=') {
                    return Err(p.err("expected `= 0`"));
                }
                match p.peek() {
                    Some(Tok::Int(0)) => p.pos += 1,
                    _ => return Err(p.err("right-hand side must be 0")),
                }
                if p.peek().is_some() {
                    return Err(p.err("trailing input"));
                }
                let lin = match val {
                    Val::Lin(l) => l,
                    Val::Coef(c) if c.is_zero() => BTreeMap::new(),
                    Val::Coef(_) => return Err(ParseError::Syntax { line, col: rest_col + 1, msg: "equation has no unknown".into() }),
                };
                eqs.push(Equation::from_pairs(lin));
            }
            other => {
                return Err(ParseError::Syntax { line, col: lead + 1, msg: format!("unknown directive `{}`", other) });
            }
        }
    }
    let vars = vars.ok_or(ParseError::Syntax { line: 0, col: 0, msg: "missing `vars`".into() })?;
    let unknowns = unknowns.ok_or(ParseError::Syntax { line: 0, col: 0, msg: "missing `unknowns`".into() })?;
    let mut s = System::new(vars.len(), unknowns.len(), field, eqs);
    s.var_names = vars;
    s.unknown_names = unknowns;
    Ok(s)
}

/// A linear differential expression in the unknowns of `s`, e.g. `y2[0,0,2] - y1[0,1,1]`.
pub fn parse_expression(text: &str, s: &System) -> Result<Equation, ParseError> {
    let toks = tokenize(text, 1, 0)?;
    let end_col = text.chars().count() + 1;
    let mut p = P { toks, pos: 0, ctx: Ctx { vars: &s.var_names, unknowns: &s.unknown_names, field: s.field, line: 1 }, end_col };
    let val = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    match val {
        Val::Lin(l) => Ok(Equation::from_pairs(l)),
        Val::Coef(_) => Err(ParseError::Syntax { line: 1, col: 1, msg: "expression has no unknown".into() }),
    }
}

/// Canonical file text for a system; `parse_system` reads it back unchanged.
pub fn render_system(s: &System) -> String {
    let mut out = String::new();
    out.push_str(match s.field {
        Field::QX => "field Q(x)\n",
        _ => "field Q\n",
    });
    out.push_str(&format!("vars {}\n", s.var_names.join(" ")));
    out.push_str(&format!("unknowns {}\n", s.unknown_names.join(" ")));
    for e in s.render_equations() {
        out.push_str(&format!("eq {} = 0\n", e));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variable_coefficient() {
        let s = parse_system("field Q(x)\nvars x\nunknowns y\neq y[2] - x*y[0] = 0").unwrap();
        assert_eq!(s.q, 2);
        assert_eq!(s.render_equations(), vec!["y[2] - x*y[0]"]);
    }

    #[test]
    fn arity_is_checked() {
        let e = parse_system("field Q\nvars x1 x2\nunknowns y\neq y[0,0,1] = 0").unwrap_err();
        assert!(matches!(e, ParseError::InconsistentArity { expected: 2, found: 3, .. }));
    }

    #[test]
    fn undeclared_unknown() {
        let e = parse_system("field Q\nvars x1 x2\nunknowns y\neq z[0,1] = 0").unwrap_err();
        assert!(matches!(e, ParseError::UndeclaredSymbol { .. }));
    }

    #[test]
    fn rejects_inhomogeneous() {
        assert!(parse_system("field Q\nvars x\nunknowns y\neq y[1] + 1 = 0").is_err());
    }

    #[test]
    fn roundtrip_with_fractions() {
        let t = "field Q(x)\nvars x1 x2\nunknowns u v\neq (x1+1)/x2*u[1,0] - 1/2*v[0,1] + x1^2*u[0,0] = 0\n";
        let s = parse_system(t).unwrap();
        let back = parse_system(&render_system(&s)).unwrap();
        assert_eq!(s, back);
    }
}
