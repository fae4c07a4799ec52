//! The core calculus: syntax, substitution and evaluation.

pub mod eval;
mod print;
pub mod subst;
pub mod term;
pub mod types;

pub use eval::{evaluate, step, EvalError, DEFAULT_FUEL};
pub use subst::{substitute_term, substitute_type_in_term};
pub use term::{PrimOp, Side, TermExpr};
pub use types::{fresh_name, TypeExpr, TypeSubst};
