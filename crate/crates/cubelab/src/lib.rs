//! Verification laboratory for negatively dependent measures on the discrete cube.
//!
//! The crate centers on the law of independent Bernoulli variables conditioned
//! on their sum (`pi(p, k)`, a.k.a. conditional Poisson sampling) and provides:
//!
//! - exact pmf / sampling / conditioning for `pi(p, k)` with interchangeable
//!   float and rational arithmetic ([`cond_bernoulli`]),
//! - the monotone coupling between `pi(p, k)` and `pi(p, k-1)` ([`coupling`]),
//! - reversible flip-swap rate matrices, including the recursive construction
//!   with stationary measure `pi(p, k)` ([`generator`]),
//! - Dirichlet forms, entropy, spectral gaps and a multi-start estimator for
//!   the modified log-Sobolev constant ([`functional`]),
//! - exact martingale increments for three revelation schemes and the
//!   Azuma/Freedman-type tail evaluators built on them ([`martingale`]),
//! - the convex distance as a simplex QP and the associated self-bounding
//!   functional checks ([`talagrand`]),
//! - multilinear (tetrahedral) polynomials, derivative tensors, injective
//!   tensor norms and the higher-order tail evaluator ([`poly`]),
//! - Hermitian matrix utilities, variance proxies and matrix tail bounds
//!   ([`matrix`]),
//! - a config-driven experiment harness with deterministic seeding
//!   ([`config`], [`experiments`], [`report`]).
//!
//! Everything enumerable is checked against enumeration; everything sampled is
//! checked against exact tails with Clopper-Pearson intervals.

pub mod cond_bernoulli;
pub mod config;
pub mod coupling;
pub mod cube;
pub mod experiments;
pub mod functional;
pub mod generator;
pub mod instances;
pub mod martingale;
pub mod matrix;
pub mod numeric;
pub mod poly;
pub mod report;
pub mod talagrand;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension {n} exceeds guard {guard} for {what}")]
    GuardExceeded { what: &'static str, n: usize, guard: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probability vector entry {index} = {value} is outside (0, 1)")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("negative weight at index {0}")]
    NegativeWeight(usize),
    #[error("k = {k} out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("conditioning event is infeasible: {0}")]
    Infeasible(String),
    #[error("event has probability zero")]
    ZeroProbabilityEvent,
    #[error("generator is reducible on its support")]
    ReducibleGenerator,
    #[error("all optimizer restarts degenerated: {0}")]
    DegenerateOptimization(String),
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("hypothesis violated: {0}")]
    HypothesisFailed(String),
    #[error("empty set not allowed: {0}")]
    EmptySet(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
