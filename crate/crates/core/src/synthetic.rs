//! Synthetic campaigns with a known ground truth.
//!
//! A scenario of swell events over a windsea background is turned into
//! hourly directional spectra, the spectra into a "true" significant heave
//! through a fixed RAO, and the truth into forecast issues with injected
//! bias, timing and noise errors plus noisy measurements. Independently,
//! [`generate_observations`] simulates the hybrid error model directly.

use std::f64::consts::PI;

use chrono::{TimeDelta, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ForecastIssue, IssueSchedule};
use crate::error::{Error, Result};
use crate::model::{is_stationary, Params};
use crate::motion::HeaveRecord;
use crate::spectral::{
    morison_rao, response_statistics, DirectionalWaveSpectrum, ExcitationRatio, MorisonRaoParams, RaoCurve,
};
use crate::Timestamp;

/// Lowest and highest grid frequencies (Hz).
pub const GRID_FREQ_HZ: (f64, f64) = (0.0412, 0.5399);
pub const GRID_N_FREQS: usize = 28;
pub const GRID_N_DIRS: usize = 30;

/// Angular frequencies (rad/s) log-spaced over [`GRID_FREQ_HZ`] and
/// direction bin centres (rad).
pub fn forecast_grid() -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = GRID_FREQ_HZ;
    let ratio = (hi / lo).ln() / (GRID_N_FREQS - 1) as f64;
    let freqs = (0..GRID_N_FREQS).map(|i| 2.0 * PI * lo * (ratio * i as f64).exp()).collect();
    let dirs = (0..GRID_N_DIRS).map(|j| 2.0 * PI * j as f64 / GRID_N_DIRS as f64).collect();
    (freqs, dirs)
}

/// Semisubmersible-like heave RAO on 0.2..3.5 rad/s: 20 s natural period,
/// a cancellation dip just below resonance and excitation decaying at high
/// frequency.
pub fn synthetic_rao() -> Result<RaoCurve> {
    let freqs: Vec<f64> = (0..=330).map(|i| 0.2 + 0.01 * i as f64).collect();
    let omega_c = 0.26;
    let values =
        freqs.iter().map(|&w| ((1.0 - (w / omega_c).powi(2)).abs() + 0.03) * (-(w / 0.6f64).powi(2)).exp()).collect();
    let params =
        MorisonRaoParams::new(ExcitationRatio::Tabulated { freqs: freqs.clone(), values }, 2.0 * PI / 20.0, 1.06)?;
    let mut rao = morison_rao(&params, &freqs)?;
    rao = RaoCurve::new(rao.freqs().to_vec(), rao.amplitudes().to_vec(), "synthetic-semisub")?;
    Ok(rao)
}

/// One swell arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwellEvent {
    /// Hours after the scenario start at which Hs peaks.
    pub arrival_hour: f64,
    pub peak_hs: f64,
    /// Peak period (s).
    pub peak_period: f64,
    pub rise_hours: f64,
    pub decay_hours: f64,
    /// Mean direction (deg).
    pub direction_deg: f64,
}

impl SwellEvent {
    fn hs_at(&self, hour: f64) -> f64 {
        let tau = if hour < self.arrival_hour { self.rise_hours } else { self.decay_hours };
        let z = (hour - self.arrival_hour) / tau;
        self.peak_hs * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwellScenario {
    pub start: Timestamp,
    pub duration_hours: u32,
    pub events: Vec<SwellEvent>,
    /// Mean windsea Hs (m); modulated slowly by a seeded random process.
    pub background_hs: f64,
    pub background_period: f64,
    pub background_direction_deg: f64,
    /// Gaussian frequency standard deviation relative to the peak frequency.
    pub swell_bandwidth: f64,
    /// Exponent `s` of the `cos^(2s)(Δθ/2)` spreading function.
    pub spreading: f64,
    pub seed: u64,
}

impl Default for SwellScenario {
    fn default() -> Self {
        Self {
            start: chrono::DateTime::UNIX_EPOCH,
            duration_hours: 24 * 14,
            events: Vec::new(),
            background_hs: 0.0,
            background_period: 6.0,
            background_direction_deg: 90.0,
            swell_bandwidth: 0.08,
            spreading: 10.0,
            seed: 1,
        }
    }
}

/// Periods representable on the forecast grid (s).
pub fn period_band() -> (f64, f64) {
    (1.0 / GRID_FREQ_HZ.1, 1.0 / GRID_FREQ_HZ.0)
}

impl SwellScenario {
    /// Scenario with randomly drawn swell events roughly every
    /// `mean_interval_hours`.
    pub fn with_random_events(start: Timestamp, duration_hours: u32, mean_interval_hours: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut events = Vec::new();
        let mut t = rng.gen_range(0.0..mean_interval_hours);
        while t < duration_hours as f64 + 24.0 {
            events.push(SwellEvent {
                arrival_hour: t,
                peak_hs: rng.gen_range(0.8..3.0),
                peak_period: rng.gen_range(11.0..19.0),
                rise_hours: rng.gen_range(6.0..18.0),
                decay_hours: rng.gen_range(12.0..36.0),
                direction_deg: rng.gen_range(180.0..300.0),
            });
            t += mean_interval_hours * rng.gen_range(0.5..1.5);
        }
        Self { start, duration_hours, events, background_hs: 1.0, seed: seed.wrapping_add(1), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let (tmin, tmax) = period_band();
        let in_band = |tp: f64| tp >= tmin && tp <= tmax;
        for e in &self.events {
            if !(e.peak_hs >= 0.0 && e.peak_hs.is_finite()) {
                return Err(Error::Parameter(format!("event Hs must be >= 0, got {}", e.peak_hs)));
            }
            if !in_band(e.peak_period) {
                return Err(Error::Parameter(format!(
                    "event Tp {} s is outside the grid band {tmin:.2}..{tmax:.2} s",
                    e.peak_period
                )));
            }
            if !(e.rise_hours > 0.0 && e.decay_hours > 0.0) {
                return Err(Error::Parameter("event time constants must be > 0".into()));
            }
        }
        if !(self.background_hs >= 0.0) || (self.background_hs > 0.0 && !in_band(self.background_period)) {
            return Err(Error::Parameter("background Hs must be >= 0 with a period inside the grid band".into()));
        }
        if !(self.swell_bandwidth > 0.0 && self.spreading >= 0.0) {
            return Err(Error::Parameter("bandwidth must be > 0 and spreading >= 0".into()));
        }
        Ok(())
    }

    /// Slowly varying factor with mean about one, so the windsea is not flat.
    fn background_factor(&self, hour: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut f = 1.0;
        for period in [29.0, 53.0, 97.0] {
            let phase: f64 = rng.gen_range(0.0..2.0 * PI);
            f += 0.15 * (2.0 * PI * hour / period + phase).sin();
        }
        f
    }
}

/// Weights `g` with `Σ g_i Δω_i = 1` for a Gaussian peak at `omega_p`.
fn frequency_shape(freqs: &[f64], widths: &[f64], omega_p: f64, rel_sd: f64) -> Vec<f64> {
    let sd = rel_sd * omega_p;
    let raw: Vec<f64> = freqs.iter().map(|&w| (-0.5 * ((w - omega_p) / sd).powi(2)).exp()).collect();
    let total: f64 = raw.iter().zip(widths).map(|(g, dw)| g * dw).sum();
    if total > 0.0 {
        raw.iter().map(|g| g / total).collect()
    } else {
        // Peak far narrower than the grid: put all energy in the nearest bin.
        let k = (0..freqs.len())
            .min_by(|&a, &b| (freqs[a] - omega_p).abs().total_cmp(&(freqs[b] - omega_p).abs()))
            .unwrap_or(0);
        (0..freqs.len()).map(|i| if i == k { 1.0 / widths[k] } else { 0.0 }).collect()
    }
}

/// Weights `D` with `Σ D_j Δθ_j = 1` for `cos^(2s)(Δθ/2)` spreading.
fn direction_shape(dirs: &[f64], width: f64, mean: f64, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = dirs.iter().map(|&d| ((d - mean) / 2.0).cos().abs().powf(2.0 * s)).collect();
    let total: f64 = raw.iter().sum::<f64>() * width;
    raw.iter().map(|v| v / total).collect()
}

/// Hourly spectra on the forecast grid. Each component contributes
/// `(Hs/4)²` of surface variance exactly, so `4 √m0` recovers the combined Hs.
pub fn generate_spectra(scn: &SwellScenario) -> Result<Vec<DirectionalWaveSpectrum>> {
    scn.validate()?;
    let (freqs, dirs) = forecast_grid();
    let widths = crate::spectral::midpoint_widths(&freqs);
    let dtheta = 2.0 * PI / dirs.len() as f64;
    let nd = dirs.len();

    let swell_shapes: Vec<(Vec<f64>, Vec<f64>)> = scn
        .events
        .iter()
        .map(|e| {
            (
                frequency_shape(&freqs, &widths, 2.0 * PI / e.peak_period, scn.swell_bandwidth),
                direction_shape(&dirs, dtheta, e.direction_deg.to_radians(), scn.spreading),
            )
        })
        .collect();
    let sea_shape = (
        frequency_shape(&freqs, &widths, 2.0 * PI / scn.background_period, 0.25),
        direction_shape(&dirs, dtheta, scn.background_direction_deg.to_radians(), 2.0),
    );

    (0..scn.duration_hours)
        .into_par_iter()
        .map(|hour| {
            let t = hour as f64;
            let mut density = vec![0.0; freqs.len() * nd];
            let mut add = |energy: f64, (g, d): &(Vec<f64>, Vec<f64>)| {
                if energy == 0.0 {
                    return;
                }
                for (i, gi) in g.iter().enumerate() {
                    for (j, dj) in d.iter().enumerate() {
                        density[i * nd + j] += energy * gi * dj;
                    }
                }
            };
            for (e, shape) in scn.events.iter().zip(&swell_shapes) {
                add((e.hs_at(t) / 4.0).powi(2), shape);
            }
            let bg = scn.background_hs * scn.background_factor(t);
            add((bg / 4.0).powi(2), &sea_shape);
            DirectionalWaveSpectrum::new(
                scn.start + TimeDelta::hours(hour as i64),
                freqs.clone(),
                dirs.clone(),
                density,
                widths.clone(),
                vec![dtheta; nd],
            )
        })
        .collect()
}

/// Significant heave `2 √m0` of every spectrum through `rao`.
pub fn true_response(spectra: &[DirectionalWaveSpectrum], rao: &RaoCurve) -> Result<Vec<(Timestamp, f64)>> {
    spectra.par_iter().map(|s| response_statistics(s, rao).map(|r| (r.timestamp, r.sig_amplitude))).collect()
}

/// Forecast error model applied to the true response.
///
/// A forecast issued at `t` for lead `L` is
/// `bias · truth(t + L - shift(L)) · (1 + noise · w_L)` with
/// `shift(L) = timing_shift_hours + growth_per_lead_hour · L` and `w` a unit
/// variance AR(1) along lead (coefficient `noise_memory`), restarted for
/// each issue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorInjection {
    pub bias: f64,
    pub timing_shift_hours: f64,
    pub growth_per_lead_hour: f64,
    pub noise_scale: f64,
    pub noise_memory: f64,
    pub seed: u64,
}

impl Default for ErrorInjection {
    fn default() -> Self {
        Self {
            bias: 1.0,
            timing_shift_hours: 0.0,
            growth_per_lead_hour: 0.0,
            noise_scale: 0.0,
            noise_memory: 0.9,
            seed: 2,
        }
    }
}

impl ErrorInjection {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_scale >= 0.0) || !self.bias.is_finite() || !(self.noise_memory.abs() < 1.0) {
            return Err(Error::Parameter("noise scale must be >= 0, bias finite and |noise_memory| < 1".into()));
        }
        Ok(())
    }
}

/// Linear interpolation in an hourly series at fractional hour `pos`,
/// clamped to the series ends.
fn interp_hourly(values: &[f64], pos: f64) -> f64 {
    let last = values.len() - 1;
    if pos <= 0.0 {
        return values[0];
    }
    if pos >= last as f64 {
        return values[last];
    }
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Issues at every cycle hour of `schedule` within the truth span. Leads run
/// hourly up to each cycle's maximum lead, truncated at the end of the truth.
pub fn generate_forecast_issues(
    truth: &[(Timestamp, f64)],
    inj: &ErrorInjection,
    schedule: &IssueSchedule,
) -> Result<Vec<ForecastIssue>> {
    inj.validate()?;
    if truth.is_empty() {
        return Ok(Vec::new());
    }
    if truth.windows(2).any(|w| w[1].0 - w[0].0 != TimeDelta::hours(1)) {
        return Err(Error::InvalidInput("truth series must be hourly and gap-free".into()));
    }
    let start = truth[0].0;
    let values: Vec<f64> = truth.iter().map(|p| p.1).collect();
    let n = values.len() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(inj.seed);
    let innov_sd = (1.0 - inj.noise_memory * inj.noise_memory).sqrt();

    let mut issues = Vec::new();
    for k in 0..n {
        let issue_time = start + TimeDelta::hours(k);
        if issue_time.minute() != 0 || issue_time.second() != 0 {
            continue;
        }
        let Some(cycle) = schedule.cycles().iter().find(|c| c.hour == issue_time.hour()) else {
            continue;
        };
        let last_lead = (cycle.max_lead as i64).min(n - 1 - k);
        let mut w: f64 = StandardNormal.sample(&mut rng);
        let mut leads = Vec::with_capacity(last_lead as usize + 1);
        let mut vals = Vec::with_capacity(leads.capacity());
        for lead in 0..=last_lead {
            if lead > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                w = inj.noise_memory * w + innov_sd * z;
            }
            let shift = inj.timing_shift_hours + inj.growth_per_lead_hour * lead as f64;
            let base = interp_hourly(&values, (k + lead) as f64 - shift);
            leads.push(lead as u32);
            vals.push((inj.bias * base * (1.0 + inj.noise_scale * w)).max(0.0));
        }
        issues.push(ForecastIssue::new(issue_time, leads, vals)?);
    }
    Ok(issues)
}

/// Hourly measured records: `truth · (1 + noise · z)`, floored at zero, all valid.
pub fn measure(truth: &[(Timestamp, f64)], noise_scale: f64, seed: u64) -> Result<Vec<HeaveRecord>> {
    if !(noise_scale >= 0.0) {
        return Err(Error::Parameter("measurement noise must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(truth
        .iter()
        .map(|&(timestamp, v)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            HeaveRecord { timestamp, sig_heave: (v * (1.0 + noise_scale * z)).max(0.0), valid: true }
        })
        .collect())
}

/// Simulate `y` from the hybrid error model for an hourly forecast series.
///
/// `ε_t = φ1 ε_{t-h-1} + φ2 ε_{t-h-2} + x_t η_t` with `η ~ N(0, σ²)` and
/// `y_t = β0 + β1 x_t + ε_t`; residuals before the start are zero. For
/// `lag_offset > 0` the lags skip `h` hours, and `|φ1| + |φ2| < 1` is also
/// required since the triangle alone no longer guarantees stationarity.
pub fn generate_observations(x: &[f64], params: &Params, lag_offset: u32, seed: u64) -> Result<Vec<f64>> {
    let (phi1, phi2) = (params.phi1, params.phi2);
    if !is_stationary(phi1, phi2) || (lag_offset > 0 && phi1.abs() + phi2.abs() >= 1.0) {
        return Err(Error::Parameter(format!("(phi1, phi2) = ({phi1}, {phi2}) is not stationary")));
    }
    if !(params.sigma >= 0.0) || !params.beta0.is_finite() || !params.beta1.is_finite() {
        return Err(Error::Parameter("sigma must be >= 0 and betas finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = lag_offset as usize + 1;
    let mut eps = vec![0.0; x.len()];
    let mut y = Vec::with_capacity(x.len());
    for t in 0..x.len() {
        let l1 = if t >= a { eps[t - a] } else { 0.0 };
        let l2 = if t > a { eps[t - a - 1] } else { 0.0 };
        let eta: f64 = StandardNormal.sample(&mut rng);
        eps[t] = phi1 * l1 + phi2 * l2 + x[t] * params.sigma * eta;
        y.push(params.beta0 + params.beta1 * x[t] + eps[t]);
    }
    Ok(y)
}

/// Everything a synthetic campaign produces.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub rao: RaoCurve,
    pub truth: Vec<(Timestamp, f64)>,
    pub issues: Vec<ForecastIssue>,
    pub measurements: Vec<HeaveRecord>,
}

/// Scenario, forecast errors and measurement noise for one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub scenario: SwellScenario,
    pub injection: ErrorInjection,
    pub schedule: IssueSchedule,
    pub measurement_noise: f64,
    pub measurement_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignSettings::default().config(11)
    }
}

/// Compact description of a random campaign; every seed is derived from one
/// master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSettings {
    pub start: Timestamp,
    pub days: u32,
    pub mean_event_interval_hours: f64,
    pub background_hs: f64,
    pub bias: f64,
    pub timing_shift_hours: f64,
    pub growth_per_lead_hour: f64,
    pub forecast_noise: f64,
    pub measurement_noise: f64,
    pub schedule: IssueSchedule,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        Self {
            start: chrono::DateTime::parse_from_rfc3339("2023-01-01T00:00:00Z").expect("valid literal").to_utc(),
            days: 150,
            mean_event_interval_hours: 72.0,
            background_hs: 1.0,
            bias: 0.8,
            timing_shift_hours: 2.0,
            growth_per_lead_hour: 0.01,
            forecast_noise: 0.05,
            measurement_noise: 0.03,
            schedule: IssueSchedule::default(),
        }
    }
}

impl CampaignSettings {
    pub fn config(&self, seed: u64) -> CampaignConfig {
        let mut scenario =
            SwellScenario::with_random_events(self.start, self.days * 24, self.mean_event_interval_hours, seed);
        scenario.background_hs = self.background_hs;
        CampaignConfig {
            scenario,
            injection: ErrorInjection {
                bias: self.bias,
                timing_shift_hours: self.timing_shift_hours,
                growth_per_lead_hour: self.growth_per_lead_hour,
                noise_scale: self.forecast_noise,
                seed: seed.wrapping_add(2),
                ..ErrorInjection::default()
            },
            schedule: self.schedule.clone(),
            measurement_noise: self.measurement_noise,
            measurement_seed: seed.wrapping_add(3),
        }
    }
}

pub fn generate_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    let rao = synthetic_rao()?;
    let spectra = generate_spectra(&cfg.scenario)?;
    let truth = true_response(&spectra, &rao)?;
    let issues = generate_forecast_issues(&truth, &cfg.injection, &cfg.schedule)?;
    let measurements = measure(&truth, cfg.measurement_noise, cfg.measurement_seed)?;
    Ok(Campaign { rao, truth, issues, measurements })
}
