//! Samplers and diagnostics for studying Harris recurrence of MCMC chains.
//!
//! The crate has three layers:
//!
//! - **Samplers**: full-dimensional Metropolis-Hastings ([`metropolis`]),
//!   Metropolis-within-Gibbs with random or deterministic scans ([`mwg`]),
//!   and coordinate-preserving trans-dimensional chains ([`transdim`]).
//! - **Pathologies** ([`pathologies`]): ready-made chains that converge to
//!   stationarity from almost every starting point but not from a null set
//!   of starting states, with closed-form escape probabilities where known.
//! - **Diagnostics** ([`diagnostics`]): Monte Carlo escape estimation with
//!   Wilson intervals, exact total-variation curves on finite kernels,
//!   communicating classes and period, first-passage probabilities,
//!   hyperplane integrability checks, minorization and drift conditions,
//!   and coordinate-coverage reports.
//!
//! All chain numerics are generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases at the crate root pin `f64`, which is
//! what the CLI and the test suites use. Density arithmetic is done entirely
//! in the log domain: a log-density of negative infinity is the single
//! representation of "outside the support", and acceptance tests compare
//! `log u` against `log alpha` so that astronomically small ratios never
//! underflow.
//!
//! Every sampler draws from an explicitly seeded [`RngStream`]; replaying a
//! run with the same `(seed, stream_id)` and configuration reproduces the
//! identical trace byte for byte.

pub mod diagnostics;
mod error;
pub mod metropolis;
pub mod mwg;
pub mod pathologies;
mod point;
mod rng;
mod scalar;
mod target;
mod trace;
pub mod transdim;

pub use error::{Error, Result};
pub use point::Point;
pub use rng::{derive_stream, RngStream};
pub use scalar::Scalar;
pub use target::{standard_normal, TargetDensity};
pub use trace::{Move, StepEvent, Trace};

/// `f64` aliases for the generic core types.
pub type Point64 = Point<f64>;
pub type TargetDensity64 = TargetDensity<f64>;
pub type Trace64 = Trace<f64>;
pub type ProposalKernel64 = metropolis::ProposalKernel<f64>;
pub type CoordinateProposal64 = mwg::CoordinateProposal<f64>;
pub type DiscreteKernel64 = diagnostics::DiscreteKernel<f64>;
