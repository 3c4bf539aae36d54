//! Parser, reports and command dispatch behind the `pdekit` binary.

pub mod cli;
pub mod commands;
pub mod envelope;
pub mod parse;
