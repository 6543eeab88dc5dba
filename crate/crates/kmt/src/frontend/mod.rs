//! Parser for the term grammar and the command-line interface.

pub mod cli;
pub mod parser;

pub use parser::{parse, parse_test};
