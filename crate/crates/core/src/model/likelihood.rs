use std::collections::HashMap;

use chrono::TimeDelta;

use super::{is_stationary, GapPolicy, ModelKind, ModelSpec, Params, PriorSet};
use crate::dataset::{HorizonDataset, HorizonRow};
use crate::stats::{normal_ln_pdf, std_normal_cdf};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Where a lagged residual comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagRef {
    Row(usize),
    /// Earlier than the first row: the row is conditioned on.
    BeforeStart,
    /// Inside the data span but absent (gap).
    Missing,
}

/// Rows pre-processed for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct PreparedData {
    kind: ModelKind,
    gap_policy: GapPolicy,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `max(x, x_floor)`.
    x_scale: Vec<f64>,
    lags: Vec<[LagRef; 2]>,
    include: Vec<bool>,
    n_included: usize,
    sum_ln_scale: f64,
}

impl PreparedData {
    pub fn new(rows: &[HorizonRow], spec: &ModelSpec) -> Self {
        let index: HashMap<_, _> = rows.iter().enumerate().map(|(i, r)| (r.valid_time, i)).collect();
        let start = rows.first().map(|r| r.valid_time);
        let offsets = spec.lag_offsets();
        let lags: Vec<[LagRef; 2]> = rows
            .iter()
            .map(|r| {
                offsets.map(|off| {
                    let t = r.valid_time - TimeDelta::hours(off);
                    match index.get(&t) {
                        Some(&j) => LagRef::Row(j),
                        None if start.is_some_and(|s| t < s) => LagRef::BeforeStart,
                        None => LagRef::Missing,
                    }
                })
            })
            .collect();

        let include: Vec<bool> = lags
            .iter()
            .map(|l| match spec.kind {
                ModelKind::Basic => true,
                ModelKind::Hybrid => {
                    !l.contains(&LagRef::BeforeStart)
                        && !(spec.gap_policy == GapPolicy::DropRows && l.contains(&LagRef::Missing))
                }
            })
            .collect();

        let x: Vec<f64> = rows.iter().map(|r| r.x).collect();
        let x_scale: Vec<f64> = x.iter().map(|&v| v.max(spec.x_floor)).collect();
        let sum_ln_scale = match spec.kind {
            ModelKind::Basic => 0.0,
            ModelKind::Hybrid => x_scale.iter().zip(&include).filter(|(_, &inc)| inc).map(|(s, _)| s.ln()).sum(),
        };
        Self {
            kind: spec.kind,
            gap_policy: spec.gap_policy,
            x,
            y: rows.iter().map(|r| r.y).collect(),
            x_scale,
            n_included: include.iter().filter(|&&b| b).count(),
            lags,
            include,
            sum_ln_scale,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Number of rows contributing to the likelihood.
    pub fn n_included(&self) -> usize {
        self.n_included
    }

    pub fn included(&self) -> &[bool] {
        &self.include
    }

    pub fn lags(&self) -> &[[LagRef; 2]] {
        &self.lags
    }

    pub fn gap_policy(&self) -> GapPolicy {
        self.gap_policy
    }

    fn residuals(&self, p: &Params) -> Vec<f64> {
        self.y.iter().zip(&self.x).map(|(y, x)| y - p.beta0 - p.beta1 * x).collect()
    }

    fn lagged(eps: &[f64], lag: LagRef) -> f64 {
        match lag {
            LagRef::Row(j) => eps[j],
            _ => 0.0,
        }
    }

    /// Conditional mean and standard deviation of every included row.
    pub fn conditional_moments(&self, p: &Params) -> Vec<Option<(f64, f64)>> {
        let eps = self.residuals(p);
        (0..self.len())
            .map(|i| {
                if !self.include[i] {
                    return None;
                }
                Some(match self.kind {
                    ModelKind::Basic => (p.beta0 + p.beta1 * self.x[i], p.sigma),
                    ModelKind::Hybrid => {
                        let [l1, l2] = self.lags[i];
                        let mean = p.beta0
                            + p.beta1 * self.x[i]
                            + p.phi1 * Self::lagged(&eps, l1)
                            + p.phi2 * Self::lagged(&eps, l2);
                        (mean, self.x_scale[i] * p.sigma)
                    }
                })
            })
            .collect()
    }

    /// Conditional log-likelihood over included rows.
    pub fn log_likelihood(&self, p: &Params) -> f64 {
        if !(p.sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.n_included as f64;
        let mut ss = 0.0;
        match self.kind {
            ModelKind::Basic => {
                for (x, y) in self.x.iter().zip(&self.y) {
                    let r = y - p.beta0 - p.beta1 * x;
                    ss += r * r;
                }
                ss /= p.sigma * p.sigma;
            }
            ModelKind::Hybrid => {
                let eps = self.residuals(p);
                for i in 0..self.len() {
                    if !self.include[i] {
                        continue;
                    }
                    let [l1, l2] = self.lags[i];
                    let r = eps[i] - p.phi1 * Self::lagged(&eps, l1) - p.phi2 * Self::lagged(&eps, l2);
                    let z = r / self.x_scale[i];
                    ss += z * z;
                }
                ss /= p.sigma * p.sigma;
            }
        }
        -n * LN_SQRT_2PI - self.sum_ln_scale - n * p.sigma.ln() - 0.5 * ss
    }
}

/// Log prior density; `-∞` outside the support.
///
/// β0 and β1 carry their full normalising constants (including the
/// truncation of β1 to positive values) and σ is a normalised half-Gaussian.
/// The φ prior omits the constant from truncation to the stationarity
/// triangle.
pub fn log_prior(p: &Params, kind: ModelKind, priors: &PriorSet) -> f64 {
    if !(p.beta1 > 0.0) || !(p.sigma > 0.0) || !p.beta0.is_finite() {
        return f64::NEG_INFINITY;
    }
    let beta1_mass = 1.0 - std_normal_cdf(-priors.beta1_mean / priors.beta1_variance.sqrt());
    let mut lp = normal_ln_pdf(p.beta0, priors.beta0_mean, priors.beta0_variance)
        + normal_ln_pdf(p.beta1, priors.beta1_mean, priors.beta1_variance)
        - beta1_mass.ln()
        + std::f64::consts::LN_2
        + normal_ln_pdf(p.sigma, 0.0, priors.sigma_scale * priors.sigma_scale);
    if kind == ModelKind::Hybrid {
        if !is_stationary(p.phi1, p.phi2) {
            return f64::NEG_INFINITY;
        }
        lp += normal_ln_pdf(p.phi1, priors.phi_mean, priors.phi_variance)
            + normal_ln_pdf(p.phi2, priors.phi_mean, priors.phi_variance);
    }
    lp
}

/// Unnormalised log posterior of `params` for the rows of `ds`.
pub fn log_posterior(params: &Params, ds: &HorizonDataset, spec: &ModelSpec) -> f64 {
    let lp = log_prior(params, spec.kind, &spec.priors);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + PreparedData::new(&ds.rows, spec).log_likelihood(params)
}

/// Regression residuals `y - β0 - β1 x` for every row.
pub fn residuals(params: &Params, ds: &HorizonDataset) -> Vec<f64> {
    ds.rows.iter().map(|r| r.y - params.beta0 - params.beta1 * r.x).collect()
}
