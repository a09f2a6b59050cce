//! Smooth Beta Process (SBP) and Contextual Smooth Beta Process (CSBP).
//!
//! Both learn a smooth success-probability function `π: [0,1]^d → [0,1]` from
//! point-wise Bernoulli tests. The posterior at a query point is built from
//! the tests within an ℓ∞ box of half-width `Δ ∝ t^(−1/(d+2))`, which makes
//! point-wise inference linear in the number of tests.
//!
//! - [`static_sbp`]: plain tests `s ~ Bernoulli(π(x))`, posterior
//!   `Beta(α + successes, β + failures)`.
//! - [`dynamic`]: contextual tests `s ~ Bernoulli(A·π(x) + B)`, posterior a
//!   normalized mixture of Betas.
//! - [`classify`]: thresholded posterior means and Bayes risk.
//! - [`harness`]: synthetic targets, samplers, convergence sweeps and the
//!   rehabilitation case study.

pub mod beta;
pub mod classify;
pub mod dynamic;
pub mod error;
pub mod harness;
pub mod io;
pub mod neighbor;
pub mod quadrature;
pub mod static_sbp;

pub use beta::{BetaMixture, BetaParams};
pub use dynamic::{
    exact_posterior_moments, posterior_csbp, posterior_csbp_mirrored, posterior_csbp_scheduled,
    posterior_general, posterior_simplified, update_single, Coefficients, ContextualOutcome,
    DynamicDataset, DynamicExperiment,
};
pub use error::{Error, Result};
pub use neighbor::{delta_schedule, KernelWidth, NeighborIndex, PointSet};
pub use static_sbp::{
    posterior_static, posterior_static_scheduled, DeltaMode, StaticDataset, StaticExperiment,
};
