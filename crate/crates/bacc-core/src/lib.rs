//! Straggler-resistant approximate coded computing over the reals.
//!
//! A master node encodes `K` data matrices into `N+1` coded shares using a
//! pole-free barycentric rational combination anchored at Chebyshev points of
//! the first kind. Workers apply an arbitrary real function to their share and
//! return the result; the master rebuilds approximations of `f(X_0..X_{K-1})`
//! from *whatever subset of results arrives*, with no recovery threshold —
//! accuracy degrades gracefully as stragglers accumulate.
//!
//! Module map:
//!
//! - [`pointsets`] — Chebyshev / equidistant node families and barycentric
//!   weights.
//! - [`interpolants`] — Lagrange, barycentric polynomial, barycentric
//!   rational, and alternating-sign rational interpolants for scalar- and
//!   matrix-valued samples.
//! - [`diagnostics`] — Lebesgue functions/constants, well-spaced-points
//!   constants, worst-case straggler patterns, and closed-form error bounds.
//! - [`bacc`] — the encode/decode protocol itself, plus the exact
//!   polynomial-coded baseline (recovery threshold, Vandermonde instability).
//! - [`simulator`] — deterministic master/worker straggler experiments.
//! - [`gradcode`] — coded distributed gradient computation on a toy network.

pub mod bacc;
pub mod diagnostics;
mod error;
pub mod gradcode;
pub mod interpolants;
pub mod pointsets;
pub mod simulator;

pub use error::{Error, Result};
pub use ndarray::{self, Array2};

pub use bacc::{decode, CodedShare, DecodeInput, Encoder};
pub use diagnostics::{
    error_bound, lebesgue_constant, lebesgue_function, theoretical_lebesgue_bound,
    worst_case_pattern, LebesgueReport, MeshParams, PatternModel, StragglerPattern,
    WellSpacedReport,
};
pub use interpolants::{berrut_denominator, Interpolant, SampleSet, Scheme};
pub use pointsets::{weights_explicit, weights_general, NodeKind, NodeSet, WeightVector};
pub use simulator::{ErrorStats, FunctionRegistry, FunctionSpec, NodeFamily};
