//! Probabilistic forecasts of semisubmersible heave response.
//!
//! A physics model turns directional wave spectra and a heave RAO into a
//! significant heave forecast (`2 √m0`). A Bayesian linear adjustment with
//! AR(2) lagged residuals and forecast-scaled noise then corrects bias and
//! produces calibrated predictive distributions, which are verified with
//! RMSE and CRPS.
//!
//! Modules follow the pipeline order:
//!
//! - [`spectral`]: RAO generation, spectrum interpolation, spectral moments.
//! - [`motion`]: high-pass filtering and rolling `m0` of raw heave records.
//! - [`dataset`]: per-horizon forecast series, alignment, chronological split.
//! - [`model`]: likelihoods, Metropolis sampler, posterior predictive.
//! - [`scoring`]: RMSE and CRPS.
//! - [`diagnostics`]: PACF and heteroskedasticity summaries.
//! - [`synthetic`]: ground-truth campaigns for testing and demos.
//! - [`io`] and [`pipeline`]: file formats and the command implementations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::single_range_in_vec_init)]

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod model;
pub mod motion;
pub mod pipeline;
pub mod scoring;
pub mod spectral;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};

/// UTC instant used throughout.
pub type Timestamp = chrono::DateTime<chrono::Utc>;
