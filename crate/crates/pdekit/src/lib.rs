//! Exact analysis of linear systems of partial differential equations.
//!
//! Systems with coefficients in ℚ or ℚ(x1..xn) are completed to involution,
//! described by Janet boards and characters, resolved by compatibility
//! conditions, and dualized to their inverse systems of sections.

pub mod error;
pub mod ckdata;
pub mod exactalg;

pub use error::{PdeError, Result};
pub use exactalg::{Rational, Scalar};
pub mod inversesys;
pub mod involution;
pub mod jetspace;
pub mod modanalysis;
pub mod pdesys;
pub mod sequences;
pub mod symbolcalc;
