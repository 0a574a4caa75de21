//! Four ways to evaluate an algebraic expression: natively compiled
//! black-box routines, binary expression trees, n-ary expression trees and
//! direct string interpretation. The crate cross-checks the four against each
//! other and times them on a fixed suite of two-variable functions.

pub mod bench;
pub mod cli;
pub mod eval;
pub mod expr;
pub mod parser;
pub mod transform;

pub use eval::{
    blackbox_lookup, eval, eval_binary, eval_nary, Bindings, BlackBoxId, EvalError, EvalMethod,
    EvalOutcome, FaultMode, Source,
};
pub use expr::{ExprError, ExprNode, OpKind, UnaryFn};
pub use parser::{eval_string, parse_to_tree, tokenize, ParseError, ParseErrorKind, SymbolTable};
pub use transform::{flatten, flatten_stats};
