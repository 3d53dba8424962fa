//! NDF: a small textual language for describing concrete data models and
//! the field mappings between them.
//!
//! ```text
//! package cooperate.demo;
//!
//! Room {
//!   String roomName;
//! }
//!
//! StandardRoom { String identifier; }
//! StandardRoom.identifier := Room.roomName | AnotherRoom.roomID;
//! ```
//!
//! The pipeline is [`parse`] → [`check_context_conditions`] (or [`analyze`],
//! which also returns the resolved mapping rules) → registration into a
//! [`SymbolTable`]. [`pretty_print`] renders a model back into canonical text.

mod ast;
mod check;
mod diagnostic;
mod lexer;
mod parser;
mod pretty;
mod symbols;

pub use ast::{FieldDef, FieldType, MappingRule, NdfModel, Pos, QualifiedField, TypeDef};
pub use check::{analyze, check_context_conditions, CheckedModel, ResolvedRule, ResolvedSource};
pub use diagnostic::{Code, Diagnostic, Severity};
pub use parser::{parse, parse_bytes, MAX_NESTING_DEPTH};
pub use pretty::pretty_print;
pub use symbols::{resolve_name, ResolveError, Symbol, SymbolTable};
