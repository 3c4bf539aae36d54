//! Cauchy–Kowalevski data: which parametric functions of how many variables
//! determine a formal solution.

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{PdeError, Result};
use crate::involution::{involution_check, InvolutiveSystem};
use crate::jetspace::{JetVar, MultiIndex};
use crate::pdesys::SolvedSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CkForm {
    /// One block per unknown of a first-order system.
    FirstOrder,
    /// A point of R_{q−1} plus class-i parametric jets of order q.
    Characters,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CkBlock {
    pub unknown: usize,
    /// Number of leading variables the data depend on; 0 for constants.
    pub var_count: usize,
    /// Jets carried by the block.
    pub jets: Vec<JetVar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CkData {
    pub form: CkForm,
    pub n: usize,
    pub m: usize,
    pub q: u32,
    pub blocks: Vec<CkBlock>,
}

impl CkData {
    /// "f2(x1,0)"; the letter is followed by the unknown index when m > 1.
    pub fn render(&self, letter: &str) -> Vec<String> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let args: Vec<String> =
                (0..self.n).map(|i| if i < b.var_count { format!("x{}", i + 1) } else { "0".to_string() }).collect();
            let name = if self.m > 1 { format!("{}{}", letter, b.unknown + 1) } else { letter.to_string() };
            match self.form {
                CkForm::FirstOrder => out.push(format!("{}({})", name, args.join(","))),
                CkForm::Characters => {
                    for j in &b.jets {
                        let d = j.index.digits(&[]);
                        let tag = if d.is_empty() { String::new() } else { format!("_{}", d) };
                        out.push(format!("{}{}({})", name, tag, args.join(",")));
                    }
                }
            }
        }
        out
    }

    /// Number of (block, jet) functions of each variable count 0..=n.
    pub fn series_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n + 1];
        for b in &self.blocks {
            c[b.var_count] += b.jets.len();
        }
        c
    }

    /// Taylor coefficients up to the truncation matching R_{q+r}.
    pub fn truncated_dimension(&self, r: u32) -> usize {
        let mut total = 0;
        for b in &self.blocks {
            let i = b.var_count;
            let per = match self.form {
                CkForm::FirstOrder => binomial(self.q as usize + r as usize + i, i),
                CkForm::Characters => {
                    if i == 0 {
                        1
                    } else {
                        binomial(r as usize + i, i)
                    }
                }
            };
            total += per * b.jets.len();
        }
        total
    }
}

/// First-order involutive system with no zero-order equations.
pub fn ck_data_first_order(s: &SolvedSystem) -> Result<CkData> {
    let (n, m) = (s.n(), s.m());
    if s.q() != 1 {
        return Err(PdeError::NotFirstOrder);
    }
    if s.principal.iter().any(|(p, _)| p.order() == 0) {
        return Err(PdeError::Precondition("zero-order equations present".into()));
    }
    if !involution_check(s).involutive {
        return Err(PdeError::NotInvolutive("first-order system".into()));
    }
    let mut blocks: Vec<CkBlock> = (0..m)
        .map(|k| {
            let var_count = (0..n)
                .filter(|&i| !s.is_principal(&JetVar::new(k, MultiIndex::unit(i, n))))
                .map(|i| i + 1)
                .max()
                .unwrap_or(0);
            CkBlock { unknown: k, var_count, jets: vec![JetVar::base(k, n)] }
        })
        .collect();
    blocks.sort_by_key(|b| (b.var_count, b.unknown));
    Ok(CkData { form: CkForm::FirstOrder, n, m, q: 1, blocks })
}

/// CK data of an involutive system; first-order systems without zero-order
/// equations use one block per unknown.
pub fn ck_data(inv: &InvolutiveSystem) -> Result<CkData> {
    let s = &inv.solved;
    let (n, m, q) = (s.n(), s.m(), s.q());
    if q == 1 && s.principal.iter().all(|(p, _)| p.order() == 1) {
        return ck_data_first_order(s);
    }
    let mut blocks = Vec::new();
    for k in 0..m {
        let point: Vec<JetVar> =
            s.parametric.iter().filter(|j| j.unknown == k && j.order() < q).cloned().collect();
        if !point.is_empty() {
            blocks.push(CkBlock { unknown: k, var_count: 0, jets: point });
        }
    }
    for c in 0..n {
        for k in 0..m {
            let jets: Vec<JetVar> = s
                .parametric
                .iter()
                .filter(|j| j.unknown == k && j.order() == q && j.class() == Some(c))
                .cloned()
                .collect();
            if !jets.is_empty() {
                blocks.push(CkBlock { unknown: k, var_count: c + 1, jets });
            }
        }
    }
    Ok(CkData { form: CkForm::Characters, n, m, q, blocks })
}
