//! Brute-force semantic checking of relaxed noninterference.
//!
//! Secret inputs are drawn from a bounded integer interval. Every pair of
//! input substitutions allowed by the policy is run through the program, and
//! the two results are compared under the relational interpretation of the
//! requested type.

use num_bigint::BigInt;
use thiserror::Error;

use crate::lang::{EvalError, TypeExpr};
use crate::policy::PolicyError;

pub mod laws;
mod relation;
mod trni;

pub use relation::{Mismatch, Outcome, RelDescriptor, RelEnv, Relator};
pub use trni::{
    enumerate_substitution_pairs, observer_env, preconditions, rho_pol, semantic_trni,
    semantic_trni_per_observer, Counterexample, OracleOptions, SubstitutionPair, Verdict,
};

/// Inclusive interval of integers that secret inputs range over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Domain {
    pub lo: i64,
    pub hi: i64,
}

impl Domain {
    pub fn new(lo: i64, hi: i64) -> Self {
        Domain {
            lo: lo.min(hi),
            hi: lo.max(hi),
        }
    }

    /// `[-n, n]`.
    pub fn symmetric(n: u32) -> Self {
        Domain {
            lo: -i64::from(n),
            hi: i64::from(n),
        }
    }

    /// The domain's integers, highest first. This fixes the sweep order.
    pub fn values(&self) -> Vec<BigInt> {
        (self.lo..=self.hi).rev().map(BigInt::from).collect()
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

/// Limits on a single sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumBudget {
    /// Maximum number of substitution pairs (and of related pairs per type).
    pub max_pairs: usize,
    /// Maximum reduction steps per evaluation.
    pub fuel: u64,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget {
            max_pairs: 1_000_000,
            fuel: crate::lang::DEFAULT_FUEL,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("cannot enumerate related pairs at type {0}")]
    UnenumerableDomain(TypeExpr),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("evaluation ran out of fuel ({0} steps)")]
    FuelExhausted(u64),
    #[error("evaluation got stuck: {0}")]
    Stuck(String),
    #[error("type variable {0} has no relational interpretation")]
    UnboundTypeVar(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("declassifier {name} divides by zero on {value}; the domain does not fit the policy")]
    PartialDeclassifier { name: String, value: String },
    #[error("unknown observer level {0}")]
    UnknownObserver(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl OracleError {
    /// Errors that make the verdict unavailable rather than indicating bad
    /// input.
    pub fn is_unsupported(&self) -> bool {
        matches!(
            self,
            OracleError::UnenumerableDomain(_)
                | OracleError::BudgetExceeded(_)
                | OracleError::FuelExhausted(_)
        )
    }
}

impl From<EvalError> for OracleError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::FuelExhausted(n) => OracleError::FuelExhausted(n),
            EvalError::StuckTerm(s) => OracleError::Stuck(s),
            EvalError::DivisionByZero => OracleError::Stuck("division by zero".into()),
        }
    }
}
