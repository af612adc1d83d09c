//! RMSE and CRPS for deterministic and sample-based forecasts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, std_normal_pdf};

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Root mean squared error of forecast means.
pub fn rmse(forecast_means: &[f64], obs: &[f64]) -> Result<f64> {
    mse(forecast_means, obs).map(f64::sqrt)
}

/// Mean squared error (RMSE without the root).
pub fn mse(forecast_means: &[f64], obs: &[f64]) -> Result<f64> {
    check_pairs(forecast_means.len(), obs.len())?;
    let ss: f64 = forecast_means.iter().zip(obs).map(|(f, y)| (f - y) * (f - y)).sum();
    Ok(ss / obs.len() as f64)
}

fn check_pairs(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!("{a} forecasts but {b} observations")));
    }
    if a == 0 {
        return Err(Error::InvalidInput("nothing to score".into()));
    }
    Ok(())
}

/// Closed-form CRPS of `N(mu, sigma²)` at `y`; absolute error when `sigma = 0`.
pub fn crps_gaussian(mu: f64, sigma: f64, y: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok((y - mu).abs());
    }
    let z = (y - mu) / sigma;
    Ok(sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - INV_SQRT_PI))
}

/// Sample CRPS `(1/m) Σ|x_i - y| - (1/2m²) Σ_i Σ_j |x_i - x_j|`.
///
/// The double sum is evaluated from the sorted draws in `O(m log m)`.
pub fn crps_samples(draws: &[f64], y: f64) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::InvalidInput("CRPS needs at least one draw".into()));
    }
    let m = draws.len() as f64;
    let first = draws.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    // Σ_i Σ_j |x_i - x_j| = 2 Σ_k (2k - m + 1) x_(k) for 0-based sorted k.
    let pair: f64 = s.iter().enumerate().map(|(k, x)| (2.0 * k as f64 - m + 1.0) * x).sum::<f64>() * 2.0;
    Ok((first - pair / (2.0 * m * m)).max(0.0))
}

/// A forecast for one valid time.
#[derive(Debug, Clone, PartialEq)]
pub enum Forecast {
    Point(f64),
    Samples(Vec<f64>),
}

impl Forecast {
    pub fn mean(&self) -> f64 {
        match self {
            Forecast::Point(v) => *v,
            Forecast::Samples(d) => crate::stats::mean(d),
        }
    }

    /// A point forecast is scored as a point mass.
    pub fn crps(&self, y: f64) -> Result<f64> {
        match self {
            Forecast::Point(v) => Ok((v - y).abs()),
            Forecast::Samples(d) => crps_samples(d, y),
        }
    }
}

/// Forecasts of one model at one horizon with their observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub model_label: String,
    pub horizon: u32,
    pub forecasts: Vec<Forecast>,
    pub obs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub horizon: u32,
    pub model_label: String,
    /// RMSE, or MSE when requested.
    pub rmse: f64,
    pub crps_mean: f64,
    pub n: usize,
}

/// Score every non-empty set; empty or mismatched sets are skipped and their
/// descriptions returned as warnings. Rows come out sorted by horizon, then
/// by model label.
pub fn score_table(sets: &[ForecastSet], squared: bool) -> Result<(Vec<ScoreReport>, Vec<String>)> {
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for set in sets {
        if set.forecasts.is_empty() || set.forecasts.len() != set.obs.len() {
            warnings.push(format!(
                "skipping {} at h={}: {} forecasts for {} observations",
                set.model_label,
                set.horizon,
                set.forecasts.len(),
                set.obs.len()
            ));
            continue;
        }
        let means: Vec<f64> = set.forecasts.iter().map(Forecast::mean).collect();
        let err = if squared { mse(&means, &set.obs)? } else { rmse(&means, &set.obs)? };
        let crps: Vec<f64> = set.forecasts.iter().zip(&set.obs).map(|(f, &y)| f.crps(y)).collect::<Result<_>>()?;
        reports.push(ScoreReport {
            horizon: set.horizon,
            model_label: set.model_label.clone(),
            rmse: err,
            crps_mean: crate::stats::mean(&crps),
            n: set.obs.len(),
        });
    }
    reports.sort_by(|a, b| a.horizon.cmp(&b.horizon).then_with(|| a.model_label.cmp(&b.model_label)));
    Ok((reports, warnings))
}

/// Fixed-width text table with 3 decimal places.
pub fn format_table(reports: &[ScoreReport], squared: bool) -> String {
    let err_name = if squared { "MSE" } else { "RMSE" };
    let label_w = reports.iter().map(|r| r.model_label.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:>7}  {:<label_w$}  {:>8}  {:>8}  {:>6}\n", "horizon", "model", err_name, "CRPS", "n");
    for r in reports {
        out += &format!(
            "{:>7}  {:<label_w$}  {:>8.3}  {:>8.3}  {:>6}\n",
            r.horizon, r.model_label, r.rmse, r.crps_mean, r.n
        );
    }
    out
}
