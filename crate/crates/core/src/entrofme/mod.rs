//! Symbolic entropy expressions, linear rate-inequality systems and
//! Fourier–Motzkin elimination.
//!
//! Expressions are stored in joint-entropy coordinates: a map from a
//! non-empty variable set `S` to the rational coefficient of `H(S)`, plus a
//! rational constant. Conditional entropies and (conditional) mutual
//! informations are expanded on parse, so two expressions are equal exactly
//! when their canonical maps are equal.
//!
//! # Grammar
//!
//! ```text
//! expr     := ['+'|'-'] term (('+'|'-') term)*
//! term     := number ['*'] item | item | number
//! item     := 'H(' vars ['|' vars] ')'
//!           | 'I(' vars ';' vars ['|' vars] ')'
//!           | rate                         (system files only)
//! vars     := var ([','] var)*
//! var      := UPPER ['~' | U+0303 | '\tilde{..}'] [['_'] digits] ["'"...]
//! number   := digits ['.' digits] ['/' digits]
//! ```
//!
//! Concatenated variables denote the joint variable (`H(UXY)`), and
//! precomposed letters such as `Ỹ` are read as `Y~`. A system file has one
//! statement per line:
//!
//! ```text
//! # comment
//! rates: R, R~
//! R + R~ < H(U|X)
//! eq: I(U;Y|X) = 0
//! ```

mod compare;
mod expr;
mod fm;
mod implied;
mod system;

pub mod fixtures;

pub use compare::{region_equal, RegionComparison, Relation};
pub use expr::{eval_expr, parse_expr, EntropyExpr, VarSet};
pub use fm::{fm_eliminate, FmOptions};
pub use implied::{Certificate, ImplicationChecker, Justification};
pub use system::{parse_system, IneqSystem, LinIneq, NormIneq, Sense};

use thiserror::Error;

use crate::probkit::ProbError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("rate variable `{0}` is not declared")]
    UnknownRate(String),
    #[error("variable `{0}` is not a rate of this system")]
    NotARate(String),
    #[error("too many random variables ({0}); at most 20 are supported")]
    TooManyVariables(usize),
    #[error("incompatible systems: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, EntropyError>;
