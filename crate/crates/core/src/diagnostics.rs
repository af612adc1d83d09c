//! Residual diagnostics: partial autocorrelation and heteroskedasticity.

use serde::Serialize;

use crate::dataset::HorizonDataset;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Params, PreparedData};
use crate::stats;
use crate::Timestamp;

/// Two-sided 95% normal quantile used for the PACF band.
pub const BAND_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacfResult {
    /// `1..=max_lag`.
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Half-width `1.96 / √N` of the white-noise band.
    pub band: f64,
}

impl PacfResult {
    /// Lags whose coefficient lies outside the band.
    pub fn significant_lags(&self) -> Vec<usize> {
        self.lags.iter().zip(&self.coefficients).filter(|(_, c)| c.abs() > self.band).map(|(&l, _)| l).collect()
    }
}

/// Partial autocorrelations by the Durbin-Levinson recursion on biased
/// sample autocovariances.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<PacfResult> {
    if max_lag == 0 || series.len() <= max_lag + 1 {
        return Err(Error::InvalidInput(format!(
            "PACF to lag {max_lag} needs more than {} values, got {}",
            max_lag + 1,
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("PACF input must be finite".into()));
    }
    let acov = stats::autocovariance(series, max_lag);
    if !(acov[0] > 0.0) {
        return Err(Error::InvalidInput("PACF of a constant series is undefined".into()));
    }
    let rho: Vec<f64> = acov.iter().map(|c| c / acov[0]).collect();

    let mut phi = vec![0.0; max_lag + 1];
    let mut prev = vec![0.0; max_lag + 1];
    let mut v = 1.0;
    let mut coefficients = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = rho[k] - (1..k).map(|j| prev[j] * rho[k - j]).sum::<f64>();
        let kk = if v > 0.0 { num / v } else { 0.0 };
        phi[k] = kk;
        for j in 1..k {
            phi[j] = prev[j] - kk * prev[k - j];
        }
        v *= 1.0 - kk * kk;
        coefficients.push(kk);
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(PacfResult { lags: (1..=max_lag).collect(), coefficients, band: BAND_Z / (series.len() as f64).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroBin {
    pub x_center: f64,
    pub mean_abs_residual: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroSummary {
    pub bins: Vec<HeteroBin>,
    /// MAP of σ, if supplied; the hybrid model implies
    /// `E|residual| = x σ √(2/π)` at each bin centre.
    pub sigma_map: Option<f64>,
}

/// Mean absolute residual in equal-count bins of `x`. Bins whose centres
/// coincide (e.g. constant `x`) are merged.
pub fn heteroskedasticity_summary(
    residuals: &[f64],
    x: &[f64],
    n_bins: usize,
    sigma_map: Option<f64>,
) -> Result<HeteroSummary> {
    if residuals.len() != x.len() {
        return Err(Error::InvalidInput(format!("{} residuals but {} x values", residuals.len(), x.len())));
    }
    if n_bins == 0 || x.len() < n_bins {
        return Err(Error::InvalidInput(format!("{} rows cannot fill {n_bins} bins", x.len())));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

    let n = x.len();
    let mut bins: Vec<(f64, f64, usize)> = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let idx = &order[b * n / n_bins..(b + 1) * n / n_bins];
        let sx: f64 = idx.iter().map(|&i| x[i]).sum();
        let sr: f64 = idx.iter().map(|&i| residuals[i].abs()).sum();
        let centre = sx / idx.len() as f64;
        match bins.last_mut() {
            Some(last) if last.0 / last.2 as f64 == centre => {
                last.0 += sx;
                last.1 += sr;
                last.2 += idx.len();
            }
            _ => bins.push((sx, sr, idx.len())),
        }
    }
    Ok(HeteroSummary {
        bins: bins
            .into_iter()
            .map(|(sx, sr, c)| HeteroBin { x_center: sx / c as f64, mean_abs_residual: sr / c as f64, count: c })
            .collect(),
        sigma_map,
    })
}

/// `(y - mean_t) / scale_t` for every row that enters the likelihood.
pub fn standardized_residuals(params: &Params, ds: &HorizonDataset, spec: &ModelSpec) -> Result<Vec<(Timestamp, f64)>> {
    spec.validate()?;
    if !(params.sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be > 0, got {}", params.sigma)));
    }
    let prepared = PreparedData::new(&ds.rows, spec);
    Ok(prepared
        .conditional_moments(params)
        .into_iter()
        .zip(&ds.rows)
        .filter_map(|(m, r)| m.map(|(mean, scale)| (r.valid_time, (r.y - mean) / scale)))
        .collect())
}
