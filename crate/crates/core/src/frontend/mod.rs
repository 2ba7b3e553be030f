//! Solidity subset front end: lexing, parsing and call-form normalization.

pub mod ast;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod render;

pub use ast::*;
pub use normalize::normalize_call_forms;
pub use parser::{parse_bytes, parse_source, parse_source_with, ParseError, ParseOptions};
