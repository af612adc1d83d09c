//! Posterior-predictive draws, quantile summaries and the MAP of σ.

use std::collections::HashMap;

use chrono::TimeDelta;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GapPolicy, ModelKind, ModelSpec, PosteriorSamples};
use crate::dataset::HorizonRow;
use crate::error::{Error, Result};
use crate::stats;
use crate::Timestamp;

/// P5, P50, P95.
pub const DEFAULT_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictiveOptions {
    pub levels: Vec<f64>,
    pub seed: u64,
}

impl Default for PredictiveOptions {
    fn default() -> Self {
        Self { levels: DEFAULT_LEVELS.to_vec(), seed: 7 }
    }
}

/// Predictive draws for one valid time with their summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub valid_time: Timestamp,
    pub x: f64,
    pub draws: Vec<f64>,
    pub mean: f64,
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn from_draws(valid_time: Timestamp, x: f64, draws: Vec<f64>, levels: &[f64]) -> Result<Self> {
        let quantiles = quantiles_of(&draws, levels)?;
        Ok(Self { valid_time, x, mean: stats::mean(&draws), draws, levels: levels.to_vec(), quantiles })
    }

    /// Summary quantile at a configured level.
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-12).map(|i| self.quantiles[i])
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Parameter(format!("quantile level {l} is outside (0, 1)")));
    }
    Ok(())
}

fn quantiles_of(draws: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    check_levels(levels)?;
    if draws.len() < 2 {
        return Err(Error::InvalidInput("need at least two draws for quantiles".into()));
    }
    let s = stats::sorted(draws);
    Ok(levels.iter().map(|&p| stats::quantile_sorted(&s, p)).collect())
}

/// Empirical quantiles of the draws (linear interpolation between order statistics).
pub fn credible_interval(dist: &PredictiveDistribution, levels: &[f64]) -> Result<Vec<f64>> {
    quantiles_of(&dist.draws, levels)
}

/// One predictive draw per posterior draw for each target row.
///
/// Lagged residuals are teacher-forced from observed `y` in `context` and
/// `targets` (the `y` of a target row is never used for its own draw).
/// For out-of-sample use pass the training rows as `context`; for in-sample
/// use pass no context and the training rows as targets. Lags before the
/// first available row are zero; lags lost to a gap are zero under
/// [`GapPolicy::ResetToZero`] and an error under [`GapPolicy::DropRows`].
pub fn posterior_predictive(
    samples: &PosteriorSamples,
    context: &[HorizonRow],
    targets: &[HorizonRow],
    spec: &ModelSpec,
    opts: &PredictiveOptions,
) -> Result<Vec<PredictiveDistribution>> {
    spec.validate()?;
    check_levels(&opts.levels)?;
    if samples.kind != spec.kind {
        return Err(Error::InvalidInput(format!(
            "samples are from a {} model but the spec is {}",
            samples.kind, spec.kind
        )));
    }
    if samples.n_draws() < 2 {
        return Err(Error::InvalidInput("need at least two posterior draws".into()));
    }
    let known: HashMap<Timestamp, (f64, f64)> =
        context.iter().chain(targets).map(|r| (r.valid_time, (r.x, r.y))).collect();
    let start = context.iter().chain(targets).map(|r| r.valid_time).min();

    // Per target: the (x, y) behind each lag, or None for a zero lag.
    let lag_data: Vec<[Option<(f64, f64)>; 2]> = match spec.kind {
        ModelKind::Basic => vec![[None, None]; targets.len()],
        ModelKind::Hybrid => targets
            .iter()
            .map(|r| {
                let mut out = [None, None];
                for (slot, off) in out.iter_mut().zip(spec.lag_offsets()) {
                    let t = r.valid_time - TimeDelta::hours(off);
                    match known.get(&t) {
                        Some(&xy) => *slot = Some(xy),
                        None if start.is_some_and(|s| t < s) => {}
                        None if spec.gap_policy == GapPolicy::DropRows => {
                            return Err(Error::MissingLag(format!(
                                "no measurement at {t} for the lagged residual of {}",
                                r.valid_time
                            )))
                        }
                        None => {}
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?,
    };

    targets
        .par_iter()
        .zip(lag_data.par_iter())
        .enumerate()
        .map(|(i, (row, lags))| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let draws: Vec<f64> = (0..samples.n_draws())
                .map(|d| {
                    let p = samples.params(d);
                    let eps = |lag: Option<(f64, f64)>| lag.map_or(0.0, |(x, y)| y - p.beta0 - p.beta1 * x);
                    let (mean, scale) = match spec.kind {
                        ModelKind::Basic => (p.beta0 + p.beta1 * row.x, p.sigma),
                        ModelKind::Hybrid => (
                            p.beta0 + p.beta1 * row.x + p.phi1 * eps(lags[0]) + p.phi2 * eps(lags[1]),
                            row.x.max(spec.x_floor) * p.sigma,
                        ),
                    };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mean + scale * z
                })
                .collect();
            PredictiveDistribution::from_draws(row.valid_time, row.x, draws, &opts.levels)
        })
        .collect()
}

/// Mode of a sample from a Freedman-Diaconis histogram, refined by fitting a
/// parabola through the modal bin and its neighbours. Ties go to the lowest bin.
pub fn histogram_mode(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("histogram mode needs finite values".into()));
    }
    let s = stats::sorted(values);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    if hi == lo {
        return Ok(lo);
    }
    let n = s.len() as f64;
    let iqr = stats::quantile_sorted(&s, 0.75) - stats::quantile_sorted(&s, 0.25);
    let mut width = 2.0 * iqr / n.cbrt();
    if !(width > 0.0) {
        width = (hi - lo) / n.sqrt();
    }
    let nbins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
    let width = (hi - lo) / nbins as f64;
    let mut counts = vec![0usize; nbins];
    for v in &s {
        let k = (((v - lo) / width) as usize).min(nbins - 1);
        counts[k] += 1;
    }
    let mut k = 0;
    for (j, &c) in counts.iter().enumerate() {
        if c > counts[k] {
            k = j;
        }
    }
    let centre = lo + (k as f64 + 0.5) * width;
    if k == 0 || k + 1 == nbins {
        return Ok(centre);
    }
    let (a, b, c) = (counts[k - 1] as f64, counts[k] as f64, counts[k + 1] as f64);
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    Ok(centre + shift * width)
}

/// Maximum a posteriori estimate of σ from its marginal draws.
pub fn map_sigma(samples: &PosteriorSamples) -> Result<f64> {
    if samples.n_draws() < 100 {
        return Err(Error::InvalidInput(format!("MAP of sigma needs at least 100 draws, got {}", samples.n_draws())));
    }
    histogram_mode(&samples.column("sigma").expect("every model has sigma"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use rand_distr::Gamma;

    fn t(h: i64) -> Timestamp {
        chrono::Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap() + TimeDelta::hours(h)
    }

    fn point_posterior(kind: ModelKind, p: &[f64], n: usize) -> PosteriorSamples {
        PosteriorSamples::from_draws(kind, 0, vec![p.to_vec(); n], (0..n).map(|i| i % 2).collect(), 0.3).unwrap()
    }

    fn row(h: i64, x: f64, y: f64) -> HorizonRow {
        HorizonRow { valid_time: t(h), x, y, issue_time: t(h), post_gap: false }
    }

    #[test]
    fn collapses_at_zero_sigma() {
        let s = point_posterior(ModelKind::Basic, &[0.2, 1.5, 1e-300], 50);
        let out = posterior_predictive(
            &s,
            &[],
            &[row(0, 2.0, 0.0)],
            &ModelSpec::new(ModelKind::Basic, 0),
            &PredictiveOptions::default(),
        )
        .unwrap();
        let q = &out[0].quantiles;
        assert!((q[0] - 3.2).abs() < 1e-12 && q[0] == q[1] && q[1] == q[2]);
    }

    #[test]
    fn basic_median_near_exact() {
        let s = point_posterior(ModelKind::Basic, &[0.0, 1.0, 0.1], 10_000);
        let out = posterior_predictive(
            &s,
            &[],
            &[row(0, 1.0, 0.0)],
            &ModelSpec::new(ModelKind::Basic, 0),
            &PredictiveOptions::default(),
        )
        .unwrap();
        assert!((out[0].quantile(0.5).unwrap() - 1.0).abs() < 0.01);
        let p95 = out[0].quantile(0.95).unwrap();
        assert!((p95 - (1.0 + 0.1 * 1.644_853_626_951_472)).abs() < 0.01);
    }

    #[test]
    fn hybrid_teacher_forced_mean() {
        let p = [0.1, 1.2, 0.5, -0.2, 1e-300];
        let s = point_posterior(ModelKind::Hybrid, &p, 4);
        let spec = ModelSpec::new(ModelKind::Hybrid, 1);
        let rows = [row(0, 1.0, 1.4), row(1, 2.0, 2.0), row(2, 1.5, 3.0), row(3, 1.0, 0.0)];
        let out = posterior_predictive(&s, &rows[..3], &rows[3..], &spec, &PredictiveOptions::default()).unwrap();
        // Lags for valid time 3 at horizon 1 are valid times 1 and 0.
        let e1 = 2.0 - 0.1 - 1.2 * 2.0;
        let e2 = 1.4 - 0.1 - 1.2 * 1.0;
        let expected = 0.1 + 1.2 * 1.0 + 0.5 * e1 - 0.2 * e2;
        assert!(out[0].draws.iter().all(|d| (d - expected).abs() < 1e-12));
    }

    #[test]
    fn gap_policy_in_prediction() {
        let s = point_posterior(ModelKind::Hybrid, &[0.0, 1.0, 0.5, 0.1, 0.1], 4);
        let rows = [row(0, 1.0, 1.0), row(2, 1.0, 1.0), row(4, 1.0, 1.0)];
        let mut spec = ModelSpec::new(ModelKind::Hybrid, 0);
        assert!(posterior_predictive(&s, &rows[..2], &rows[2..], &spec, &PredictiveOptions::default()).is_ok());
        spec.gap_policy = GapPolicy::DropRows;
        let err = posterior_predictive(&s, &rows[..2], &rows[2..], &spec, &PredictiveOptions::default());
        assert!(matches!(err, Err(Error::MissingLag(_))));
    }

    #[test]
    fn credible_interval_examples() {
        let d = PredictiveDistribution::from_draws(t(0), 1.0, (1..=100).map(f64::from).collect(), &[0.5]).unwrap();
        assert!((credible_interval(&d, &[0.5]).unwrap()[0] - 50.5).abs() < 1e-12);
        assert!(credible_interval(&d, &[1.0]).is_err());
        let c = PredictiveDistribution::from_draws(t(0), 1.0, vec![2.5; 10], &DEFAULT_LEVELS).unwrap();
        assert!(c.quantiles.iter().all(|&q| q == 2.5));
    }

    #[test]
    fn mode_of_gamma_draws() {
        // Gamma(shape 5, scale 0.02) has mode 0.08.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Gamma::new(5.0, 0.02).unwrap();
        let v: Vec<f64> = (0..50_000).map(|_| g.sample(&mut rng)).collect();
        let m = histogram_mode(&v).unwrap();
        assert!((m / 0.08 - 1.0).abs() < 0.05, "{m}");
        assert_eq!(histogram_mode(&[0.3; 200]).unwrap(), 0.3);
    }

    #[test]
    fn map_sigma_requires_draws() {
        let s = point_posterior(ModelKind::Basic, &[0.0, 1.0, 0.2], 50);
        assert!(map_sigma(&s).is_err());
        let s = point_posterior(ModelKind::Basic, &[0.0, 1.0, 0.2], 150);
        assert_eq!(map_sigma(&s).unwrap(), 0.2);
    }
}
