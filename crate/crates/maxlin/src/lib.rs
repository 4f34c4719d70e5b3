//! Max-linear regression toolkit.
//!
//! A max-linear model maps `x` to `max_j <beta_j, x>`, the pointwise maximum
//! of `k` linear components. This crate estimates the component vectors from
//! noisy observations with two methods and ships the analysis tooling around
//! them:
//!
//! - [`ce`]: the anchored convex estimator, a linear program that maximizes
//!   `<theta, beta>` subject to a one-sided residual budget, where the anchor
//!   `theta` is the averaged half-subgradient at an initial estimate;
//! - [`lspa`]: the classical least-square partition algorithm, alternating
//!   cone assignment and per-partition least squares;
//! - [`lp`]: a self-contained two-phase revised simplex solver used by the
//!   convex estimator, with verifiable optimality;
//! - [`theory`]: Monte Carlo estimates of the cone probabilities and the
//!   recovery margins (`zeta`, `varrho`) that govern when the convex
//!   estimator succeeds, plus exact two-dimensional closed forms;
//! - [`grid`]: a deterministic Monte Carlo harness for phase-transition
//!   heatmaps and noise sweeps;
//! - [`io`] / [`svg`]: CSV schemas and self-contained SVG renderings.
//!
//! All randomness flows through explicitly seeded generators in [`synth`];
//! every experiment artifact is a pure function of its configuration.

pub mod ce;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod lspa;
pub mod model;
pub mod svg;
pub mod synth;
pub mod theory;

pub use error::{Error, LpFailure, Result};
pub use model::{Dataset, ParamBlocks};
