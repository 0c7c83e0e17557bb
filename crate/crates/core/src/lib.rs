//! Stochastic first-order optimization on quasar-convex, quadratic-growth and
//! restricted-secant function classes.
//!
//! The crate builds the hard instance families used in minimax lower bounds,
//! checks their class certificates numerically, runs SGD and a 1-D dichotomic
//! search against noisy gradient oracles, and audits divergence-decomposition
//! lower bounds.

pub mod algorithms;
pub mod functions;
pub mod linalg;
pub mod lowerbound;
pub mod oracle;
pub mod properties;
pub mod seeding;

pub use functions::{
    Certificate, ClassTag, FamilyKind, FunctionError, HardFamily, HardFamilyParams, MinimizerSet,
    Objective,
};
pub use oracle::{GaussianOracle, OracleConfig, OracleError, QueryLog};
