//! Adaptive random-walk Metropolis over an unconstrained parameterisation.
//!
//! Chains sample `(β0, ln β1, [atanh r1, atanh r2,] ln σ)`, where `r` are the
//! partial autocorrelations of the AR(2) part, with a Gaussian proposal whose
//! covariance is learned from the warm-up history and whose global scale is
//! tuned by Robbins-Monro toward the target acceptance rate. Adaptation stops
//! at the end of warm-up, so retained draws come from a fixed Markov kernel.
//! Each chain owns a ChaCha stream selected by `(seed, chain index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::{log_prior, PreparedData};
use super::{ModelKind, ModelSpec, Params};
use crate::dataset::HorizonDataset;
use crate::error::{Error, Result};
use crate::stats;

/// Iterations per adaptation window.
const WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup_draws: usize,
    /// Retained draws per chain (after thinning).
    pub retained_draws: usize,
    pub thin: usize,
    pub seed: u64,
    pub target_acceptance: f64,
    /// Fit fails if any parameter's split R-hat exceeds this.
    pub rhat_limit: f64,
    /// Smallest acceptable total number of retained draws.
    pub min_draws: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup_draws: 10_000,
            retained_draws: 1000,
            thin: 10,
            seed: 20_240_601,
            target_acceptance: 0.3,
            rhat_limit: 1.05,
            min_draws: 100,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::Parameter("at least two chains are needed for R-hat".into()));
        }
        if self.warmup_draws < 2 * WINDOW {
            return Err(Error::Parameter(format!("warm-up must be at least {} iterations", 2 * WINDOW)));
        }
        if self.retained_draws < 4 || self.thin == 0 {
            return Err(Error::Parameter("need at least 4 retained draws per chain and thin >= 1".into()));
        }
        if self.chains * self.retained_draws < self.min_draws {
            return Err(Error::Parameter(format!(
                "{} chains x {} draws is below the configured minimum of {}",
                self.chains, self.retained_draws, self.min_draws
            )));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Parameter("target acceptance must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Convergence summary for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub rhat: f64,
    pub ess: f64,
}

/// Retained MCMC draws, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub kind: ModelKind,
    pub horizon: u32,
    draws: Vec<f64>,
    chain_ids: Vec<usize>,
    pub diagnostics: Vec<ParamDiagnostics>,
    /// Mean acceptance rate of the retained phase across chains.
    pub acceptance_rate: f64,
}

impl PosteriorSamples {
    /// Assemble from draw rows (natural scale) and compute diagnostics.
    pub fn from_draws(
        kind: ModelKind,
        horizon: u32,
        rows: Vec<Vec<f64>>,
        chain_ids: Vec<usize>,
        acceptance_rate: f64,
    ) -> Result<Self> {
        let k = kind.n_params();
        if rows.is_empty() || rows.len() != chain_ids.len() || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!(
                "posterior draws must be non-empty rows of {k} values with one chain id each"
            )));
        }
        let draws: Vec<f64> = rows.into_iter().flatten().collect();
        let mut out = Self { kind, horizon, draws, chain_ids, diagnostics: Vec::new(), acceptance_rate };
        out.diagnostics = out.compute_diagnostics();
        Ok(out)
    }

    fn compute_diagnostics(&self) -> Vec<ParamDiagnostics> {
        let mut chain_list: Vec<usize> = self.chain_ids.clone();
        chain_list.sort_unstable();
        chain_list.dedup();
        self.param_names()
            .iter()
            .enumerate()
            .map(|(p, name)| {
                let per_chain: Vec<Vec<f64>> = chain_list
                    .iter()
                    .map(|&c| {
                        (0..self.n_draws())
                            .filter(|&i| self.chain_ids[i] == c)
                            .map(|i| self.draws[i * self.n_params() + p])
                            .collect()
                    })
                    .collect();
                ParamDiagnostics {
                    name: name.to_string(),
                    rhat: split_rhat(&per_chain),
                    ess: effective_sample_size(&per_chain),
                }
            })
            .collect()
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        self.kind.param_names()
    }

    pub fn n_params(&self) -> usize {
        self.kind.n_params()
    }

    pub fn n_draws(&self) -> usize {
        self.chain_ids.len()
    }

    pub fn chain_ids(&self) -> &[usize] {
        &self.chain_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_params();
        &self.draws[i * k..(i + 1) * k]
    }

    pub fn params(&self, i: usize) -> Params {
        Params::from_slice(self.kind, self.row(i))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let p = self.param_names().iter().position(|n| *n == name)?;
        Some((0..self.n_draws()).map(|i| self.row(i)[p]).collect())
    }

    pub fn mean_params(&self) -> Params {
        let k = self.n_params();
        let mut acc = vec![0.0; k];
        for i in 0..self.n_draws() {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.n_draws() as f64);
        Params::from_slice(self.kind, &acc)
    }

    /// Largest split R-hat across parameters.
    pub fn max_rhat(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.rhat).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Split potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let n = c.len() / 2;
            [&c[..n], &c[c.len() - n..]]
        })
        .collect();
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if n < 2 || halves.len() < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| stats::mean(&h[..n])).collect();
    let w = halves.iter().map(|h| stats::sample_variance(&h[..n])).sum::<f64>() / halves.len() as f64;
    let b_over_n = stats::sample_variance(&means);
    if w == 0.0 {
        return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Multi-chain effective sample size with Geyer's initial monotone sequence.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let nf = n as f64;
    let chain_means: Vec<f64> = chains.iter().map(|c| stats::mean(c)).collect();
    let acov = |t: usize| -> f64 {
        chains
            .iter()
            .zip(&chain_means)
            .map(|(c, mu)| (0..n - t).map(|i| (c[i] - mu) * (c[i + t] - mu)).sum::<f64>() / nf)
            .sum::<f64>()
            / m as f64
    };
    let acov0 = acov(0);
    let w = acov0 * nf / (nf - 1.0);
    let b_over_n = if m > 1 { stats::sample_variance(&chain_means) } else { 0.0 };
    let var_plus = w * (nf - 1.0) / nf + b_over_n;
    if var_plus <= 0.0 {
        return (m * n) as f64;
    }
    let rho = |t: usize| if t == 0 { 1.0 } else { 1.0 - (w - acov(t)) / var_plus };

    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = tau.max(1.0 / (m as f64 * nf).log10().max(1.0));
    (m as f64 * nf) / tau
}

// φ is sampled through its partial autocorrelations r1 = φ1 / (1 - φ2) and
// r2 = φ2, each mapped to the real line by atanh. This covers the
// stationarity triangle exactly and keeps proposals away from its edges.
fn to_unconstrained(p: &Params, kind: ModelKind) -> Vec<f64> {
    match kind {
        ModelKind::Basic => vec![p.beta0, p.beta1.ln(), p.sigma.ln()],
        ModelKind::Hybrid => {
            let r1 = p.phi1 / (1.0 - p.phi2);
            vec![p.beta0, p.beta1.ln(), r1.atanh(), p.phi2.atanh(), p.sigma.ln()]
        }
    }
}

fn from_unconstrained(u: &[f64], kind: ModelKind) -> Params {
    match kind {
        ModelKind::Basic => Params::basic(u[0], u[1].exp(), u[2].exp()),
        ModelKind::Hybrid => {
            let (r1, r2) = (u[2].tanh(), u[3].tanh());
            Params { beta0: u[0], beta1: u[1].exp(), phi1: r1 * (1.0 - r2), phi2: r2, sigma: u[4].exp() }
        }
    }
}

/// `ln |∂θ/∂u|` of [`from_unconstrained`].
fn log_jacobian(u: &[f64], kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Basic => u[1] + u[2],
        ModelKind::Hybrid => {
            let (r1, r2) = (u[2].tanh(), u[3].tanh());
            u[1] + u[4] + (1.0 - r2).ln() + (1.0 - r1 * r1).ln() + (1.0 - r2 * r2).ln()
        }
    }
}

/// Log target in unconstrained coordinates, including the log-Jacobian.
struct Target<'a> {
    data: &'a PreparedData,
    spec: &'a ModelSpec,
}

impl Target<'_> {
    fn eval(&self, u: &[f64]) -> f64 {
        let p = from_unconstrained(u, self.spec.kind);
        let lp = log_prior(&p, self.spec.kind, &self.spec.priors);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let ll = self.data.log_likelihood(&p);
        let v = lp + ll + log_jacobian(u, self.spec.kind);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

fn initial_params(ds: &HorizonDataset, spec: &ModelSpec) -> Params {
    let x = ds.xs();
    let y = ds.ys();
    let mx = stats::mean(&x);
    let my = stats::mean(&y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    let beta1 = if slope.is_finite() && slope > 0.05 { slope } else { 0.05_f64.max(spec.priors.beta1_mean) };
    let beta0 = my - beta1 * mx;
    let scaled: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| {
            let r = yi - beta0 - beta1 * xi;
            match spec.kind {
                ModelKind::Basic => r,
                ModelKind::Hybrid => r / xi.max(spec.x_floor),
            }
        })
        .collect();
    let sd = if scaled.len() > 1 { stats::sample_variance(&scaled).sqrt() } else { 0.0 };
    let sigma = if sd.is_finite() && sd > 1e-4 { sd } else { 1e-4 };
    Params { beta0, beta1, phi1: 0.0, phi2: 0.0, sigma }
}

/// Lower-triangular Cholesky factor; `None` unless positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i][j] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn covariance(history: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = history[0].len();
    let n = history.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| history.iter().map(|h| h[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for h in history {
        for i in 0..d {
            for j in 0..=i {
                cov[i][j] += (h[i] - mean[i]) * (h[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

struct ChainOutput {
    draws: Vec<Vec<f64>>,
    acceptance: f64,
}

fn run_chain(target: &Target<'_>, start: &[f64], cfg: &SamplerConfig, chain: usize) -> Result<ChainOutput> {
    let d = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64 + 1);

    // Overdispersed start around the initial point.
    let mut u: Vec<f64> = start.iter().map(|&v| v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut logp = target.eval(&u);
    for _ in 0..100 {
        if logp.is_finite() {
            break;
        }
        u = start.iter().map(|&v| v + 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
        logp = target.eval(&u);
    }
    if !logp.is_finite() {
        return Err(Error::Initialization(format!("chain {chain}: non-finite log posterior at the initial point")));
    }

    let mut chol: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 0.1 } else { 0.0 }).collect()).collect();
    let mut log_scale = 0.0_f64;
    let base_scale = 2.38 / (d as f64).sqrt();
    let mut learned = false;
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(cfg.warmup_draws);
    let mut window_accepts = 0usize;
    let mut step = vec![0.0; d];
    let mut proposal = vec![0.0; d];

    let total = cfg.warmup_draws + cfg.retained_draws * cfg.thin;
    let mut kept = Vec::with_capacity(cfg.retained_draws);
    let mut sampling_accepts = 0usize;

    for it in 0..total {
        let warm = it < cfg.warmup_draws;
        for z in step.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let scale = log_scale.exp() * if learned { base_scale } else { 1.0 };
        for i in 0..d {
            let s: f64 = (0..=i).map(|k| chol[i][k] * step[k]).sum();
            proposal[i] = u[i] + scale * s;
        }
        let cand = target.eval(&proposal);
        let accept = cand.is_finite() && rng.gen::<f64>().ln() < cand - logp;
        if accept {
            u.copy_from_slice(&proposal);
            logp = cand;
            window_accepts += 1;
            if !warm {
                sampling_accepts += 1;
            }
        }

        if warm {
            let gamma = (it as f64 / WINDOW as f64 + 1.0).powf(-0.6);
            log_scale += gamma * (f64::from(u8::from(accept)) - cfg.target_acceptance);
            history.push(u.clone());
        } else if (it - cfg.warmup_draws + 1).is_multiple_of(cfg.thin) {
            kept.push(from_unconstrained(&u, target.spec.kind).to_vec(target.spec.kind));
        }

        if (it + 1) % WINDOW == 0 {
            if window_accepts == 0 {
                return Err(Error::Sampler(format!(
                    "chain {chain}: every proposal rejected in iterations {}..{}",
                    it + 1 - WINDOW,
                    it + 1
                )));
            }
            window_accepts = 0;
            if warm && it + 1 >= 2 * WINDOW && it + 1 < cfg.warmup_draws {
                let recent = &history[history.len() / 2..];
                let mut cov = covariance(recent);
                for (i, row) in cov.iter_mut().enumerate() {
                    row[i] += 1e-12 + 1e-8 * row[i].abs();
                }
                if let Some(l) = cholesky(&cov) {
                    chol = l;
                    if !learned {
                        log_scale = 0.0;
                        learned = true;
                    }
                }
            }
        }
    }

    Ok(ChainOutput { draws: kept, acceptance: sampling_accepts as f64 / (cfg.retained_draws * cfg.thin) as f64 })
}

/// Draw from the posterior of `spec` given the training rows of `train`.
///
/// Deterministic for a given seed regardless of thread count. Fails with
/// [`Error::Convergence`] if any split R-hat exceeds `cfg.rhat_limit`.
pub fn fit(train: &HorizonDataset, spec: &ModelSpec, cfg: &SamplerConfig) -> Result<PosteriorSamples> {
    spec.validate()?;
    cfg.validate()?;
    let needed = 3 + spec.kind.n_params();
    if train.len() < needed {
        return Err(Error::TooFewRows { needed, got: train.len() });
    }
    let data = PreparedData::new(&train.rows, spec);
    if data.n_included() == 0 {
        return Err(Error::TooFewRows { needed: spec.horizon as usize + 3, got: train.len() });
    }
    let target = Target { data: &data, spec };
    let init = initial_params(train, spec);
    let start = to_unconstrained(&init, spec.kind);
    if !target.eval(&start).is_finite() {
        return Err(Error::Initialization(format!("log posterior is not finite at {init:?}")));
    }

    let outputs: Vec<ChainOutput> =
        (0..cfg.chains).into_par_iter().map(|c| run_chain(&target, &start, cfg, c)).collect::<Result<_>>()?;

    let acceptance = outputs.iter().map(|o| o.acceptance).sum::<f64>() / outputs.len() as f64;
    let mut rows = Vec::with_capacity(cfg.chains * cfg.retained_draws);
    let mut chain_ids = Vec::with_capacity(rows.capacity());
    for (c, out) in outputs.into_iter().enumerate() {
        chain_ids.extend(std::iter::repeat_n(c, out.draws.len()));
        rows.extend(out.draws);
    }
    let samples = PosteriorSamples::from_draws(spec.kind, spec.horizon, rows, chain_ids, acceptance)?;
    if let Some(bad) = samples.diagnostics.iter().find(|d| !(d.rhat <= cfg.rhat_limit)) {
        return Err(Error::Convergence { param: bad.name.clone(), rhat: bad.rhat, limit: cfg.rhat_limit });
    }
    Ok(samples)
}
