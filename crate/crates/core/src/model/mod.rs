//! Bayesian linear adjustment of the physics forecast.
//!
//! Two models are supported for the measured significant heave `y` given the
//! physics forecast `x` at horizon `h`:
//!
//! - **Basic**: `y = β0 + β1 x + ε`, `ε ~ N(0, σ²)` independently.
//! - **Hybrid**: `y = β0 + β1 x + φ1 ε₁ + φ2 ε₂ + x η`, `η ~ N(0, σ²)`,
//!   where `ε₁`, `ε₂` are the regression residuals `y - β0 - β1 x` of the
//!   two most recent measurements available when the forecast was issued,
//!   i.e. at valid times `h + 1` and `h + 2` hours before the target.
//!
//! Lagged residuals are looked up by valid time. Rows whose lags fall before
//! the start of the data are conditioned on (they only provide lags); lags
//! missing because of a gap are set to zero or the row is dropped, per
//! [`GapPolicy`].

mod likelihood;
mod predictive;
mod sampler;

pub use likelihood::{log_posterior, log_prior, residuals, LagRef, PreparedData};
pub use predictive::{
    credible_interval, histogram_mode, map_sigma, posterior_predictive, PredictiveDistribution, PredictiveOptions,
    DEFAULT_LEVELS,
};
pub use sampler::{effective_sample_size, fit, split_rhat, ParamDiagnostics, PosteriorSamples, SamplerConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which error structure to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Basic,
    Hybrid,
}

impl ModelKind {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Basic => &["beta0", "beta1", "sigma"],
            ModelKind::Hybrid => &["beta0", "beta1", "phi1", "phi2", "sigma"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Basic => "basic",
            ModelKind::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(ModelKind::Basic),
            "hybrid" => Ok(ModelKind::Hybrid),
            other => Err(Error::Parameter(format!("unknown model kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prior hyperparameters. Variances are variances, not standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSet {
    pub beta0_mean: f64,
    pub beta0_variance: f64,
    /// Gaussian truncated to `β1 > 0`.
    pub beta1_mean: f64,
    pub beta1_variance: f64,
    /// Independent Gaussians on φ1 and φ2, jointly truncated to the AR(2)
    /// stationarity triangle.
    pub phi_mean: f64,
    pub phi_variance: f64,
    /// Half-Gaussian scale for σ.
    pub sigma_scale: f64,
}

impl Default for PriorSet {
    fn default() -> Self {
        Self {
            beta0_mean: 0.0,
            beta0_variance: 3.0,
            beta1_mean: 1.0,
            beta1_variance: 3.0,
            phi_mean: 0.0,
            phi_variance: 1.0,
            sigma_scale: 1.0,
        }
    }
}

impl PriorSet {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.beta0_mean,
            self.beta0_variance,
            self.beta1_mean,
            self.beta1_variance,
            self.phi_mean,
            self.phi_variance,
            self.sigma_scale,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("prior hyperparameters must be finite".into()));
        }
        if self.beta0_variance <= 0.0
            || self.beta1_variance <= 0.0
            || self.phi_variance <= 0.0
            || self.sigma_scale <= 0.0
        {
            return Err(Error::Parameter("prior variances and scales must be > 0".into()));
        }
        Ok(())
    }
}

/// Handling of lagged residuals that are missing because of a data gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Use zero, the unconditional mean of the residual process.
    #[default]
    ResetToZero,
    /// Leave the row out of the likelihood.
    DropRows,
}

/// Everything that defines a model for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub priors: PriorSet,
    pub horizon: u32,
    /// Lower bound on `x` in the heteroskedastic scale `max(x, x_floor) σ`.
    pub x_floor: f64,
    pub gap_policy: GapPolicy,
}

pub const DEFAULT_X_FLOOR: f64 = 0.01;

impl ModelSpec {
    pub fn new(kind: ModelKind, horizon: u32) -> Self {
        Self { kind, priors: PriorSet::default(), horizon, x_floor: DEFAULT_X_FLOOR, gap_policy: GapPolicy::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        if !(self.x_floor > 0.0 && self.x_floor.is_finite()) {
            return Err(Error::Parameter(format!("x_floor must be > 0, got {}", self.x_floor)));
        }
        Ok(())
    }

    /// Hours between a target valid time and its two lagged residuals.
    pub fn lag_offsets(&self) -> [i64; 2] {
        let h = self.horizon as i64;
        [h + 1, h + 2]
    }
}

/// Parameter vector. `phi1` and `phi2` are zero for the Basic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta0: f64,
    pub beta1: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub sigma: f64,
}

impl Params {
    pub fn basic(beta0: f64, beta1: f64, sigma: f64) -> Self {
        Self { beta0, beta1, phi1: 0.0, phi2: 0.0, sigma }
    }

    pub fn to_vec(&self, kind: ModelKind) -> Vec<f64> {
        match kind {
            ModelKind::Basic => vec![self.beta0, self.beta1, self.sigma],
            ModelKind::Hybrid => vec![self.beta0, self.beta1, self.phi1, self.phi2, self.sigma],
        }
    }

    pub fn from_slice(kind: ModelKind, v: &[f64]) -> Self {
        match kind {
            ModelKind::Basic => Self::basic(v[0], v[1], v[2]),
            ModelKind::Hybrid => Self { beta0: v[0], beta1: v[1], phi1: v[2], phi2: v[3], sigma: v[4] },
        }
    }
}

/// Strict AR(2) stationarity: `|φ2| < 1`, `φ2 + φ1 < 1`, `φ2 - φ1 < 1`.
pub fn is_stationary(phi1: f64, phi2: f64) -> bool {
    phi2 > -1.0 && phi2 < 1.0 && phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity_triangle() {
        assert!(is_stationary(0.6, 0.3));
        assert!(is_stationary(0.0, 0.0));
        assert!(is_stationary(-1.5, -0.6));
        assert!(!is_stationary(1.0, 0.0));
        assert!(!is_stationary(0.5, 0.5));
        assert!(!is_stationary(0.0, -1.0));
        assert!(!is_stationary(-1.2, 1.1));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Hybrid".parse::<ModelKind>().unwrap(), ModelKind::Hybrid);
        assert!("arima".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::Basic.param_names(), &["beta0", "beta1", "sigma"]);
    }

    #[test]
    fn params_round_trip() {
        let p = Params { beta0: 0.1, beta1: 1.2, phi1: 0.5, phi2: -0.1, sigma: 0.3 };
        assert_eq!(Params::from_slice(ModelKind::Hybrid, &p.to_vec(ModelKind::Hybrid)), p);
        let b = Params::from_slice(ModelKind::Basic, &p.to_vec(ModelKind::Basic));
        assert_eq!((b.phi1, b.phi2, b.sigma), (0.0, 0.0, 0.3));
    }

    #[test]
    fn prior_validation() {
        assert!(PriorSet::default().validate().is_ok());
        let bad = PriorSet { beta1_variance: 0.0, ..PriorSet::default() };
        assert!(bad.validate().is_err());
        let spec = ModelSpec { x_floor: 0.0, ..ModelSpec::new(ModelKind::Hybrid, 0) };
        assert!(spec.validate().is_err());
    }
}
