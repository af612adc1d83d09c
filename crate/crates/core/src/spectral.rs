//! Physics-based heave response statistics from directional wave spectra.
//!
//! The response spectrum is `|RAO(ω)|² S(ω, θ)` and its moments are the
//! discrete double sum over frequency and direction bin centres. Wave energy
//! is always interpolated onto the RAO frequency grid (never the reverse) so
//! that a narrow resonance peak in the RAO survives the sparse low-frequency
//! resolution of operational wave models.
//!
//! Units: angular frequency in rad/s, direction in rad, spectral density in
//! m²·s/rad per rad of direction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Timestamp;

fn check_strictly_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} contains non-finite values")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

/// Bin widths for a grid of centre values: `(x[j+1] - x[j-1]) / 2` inside,
/// one-sided differences at the two ends.
pub fn midpoint_widths(centres: &[f64]) -> Vec<f64> {
    let n = centres.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|j| {
                if j == 0 {
                    centres[1] - centres[0]
                } else if j == n - 1 {
                    centres[n - 1] - centres[n - 2]
                } else {
                    0.5 * (centres[j + 1] - centres[j - 1])
                }
            })
            .collect(),
    }
}

/// Heave RAO magnitude as a function of angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RaoCurve {
    freqs: Vec<f64>,
    amplitudes: Vec<f64>,
    label: String,
}

impl RaoCurve {
    pub fn new(freqs: Vec<f64>, amplitudes: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if freqs.len() < 2 || freqs.len() != amplitudes.len() {
            return Err(Error::InvalidInput(format!(
                "RAO needs at least 2 frequencies with one amplitude each (got {} and {})",
                freqs.len(),
                amplitudes.len()
            )));
        }
        check_strictly_increasing("RAO frequencies", &freqs)?;
        if freqs[0] <= 0.0 {
            return Err(Error::InvalidInput("RAO frequencies must be > 0".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidInput("RAO amplitudes must be finite and >= 0".into()));
        }
        Ok(Self { freqs, amplitudes, label: label.into() })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn is_constant(&self) -> bool {
        let first = self.amplitudes[0];
        self.amplitudes.iter().all(|&a| a == first)
    }

    fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if a > self.amplitudes[best] {
                best = i;
            }
        }
        best
    }

    /// Frequency of maximum amplitude, `None` for a constant curve.
    pub fn resonance_frequency(&self) -> Option<f64> {
        if self.is_constant() {
            return None;
        }
        Some(self.freqs[self.argmax()])
    }

    /// Frequency of minimum amplitude among frequencies below resonance.
    ///
    /// `None` for a constant curve or when the resonance sits on the first
    /// grid point.
    pub fn cancellation_frequency(&self) -> Option<f64> {
        if self.is_constant() {
            return None;
        }
        let peak = self.argmax();
        let below = &self.amplitudes[..peak];
        let mut best: Option<usize> = None;
        for (i, &a) in below.iter().enumerate() {
            if best.is_none_or(|b| a < below[b]) {
                best = Some(i);
            }
        }
        best.map(|i| self.freqs[i])
    }
}

/// Non-dimensional excitation `F3a / (c33 ζa)` as a function of frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcitationRatio {
    Constant(f64),
    /// Linearly interpolated, held constant beyond the table ends.
    Tabulated {
        freqs: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ExcitationRatio {
    fn validate(&self) -> Result<()> {
        match self {
            ExcitationRatio::Constant(v) => {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::Parameter("excitation ratio must be >= 0".into()));
                }
            }
            ExcitationRatio::Tabulated { freqs, values } => {
                if freqs.is_empty() || freqs.len() != values.len() {
                    return Err(Error::Parameter(
                        "excitation table needs matching, non-empty frequency and value columns".into(),
                    ));
                }
                check_strictly_increasing("excitation table frequencies", freqs)?;
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Parameter("excitation ratio values must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            ExcitationRatio::Constant(v) => *v,
            ExcitationRatio::Tabulated { freqs, values } => {
                let n = freqs.len();
                if omega <= freqs[0] {
                    return values[0];
                }
                if omega >= freqs[n - 1] {
                    return values[n - 1];
                }
                let hi = freqs.partition_point(|&f| f <= omega);
                let lo = hi - 1;
                let t = (omega - freqs[lo]) / (freqs[hi] - freqs[lo]);
                values[lo] + t * (values[hi] - values[lo])
            }
        }
    }
}

/// Coefficients of the Morison-form single-degree-of-freedom heave RAO.
#[derive(Debug, Clone, PartialEq)]
pub struct MorisonRaoParams {
    pub excitation_ratio: ExcitationRatio,
    /// Resonance angular frequency (rad/s).
    pub omega_r: f64,
    /// Damping over restoring coefficient, `b33 / c33` (s).
    pub damping_ratio_term: f64,
}

impl MorisonRaoParams {
    pub fn new(excitation_ratio: ExcitationRatio, omega_r: f64, damping_ratio_term: f64) -> Result<Self> {
        let params = Self { excitation_ratio, omega_r, damping_ratio_term };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r.is_finite() && self.omega_r > 0.0) {
            return Err(Error::Parameter(format!("omega_r must be > 0, got {}", self.omega_r)));
        }
        if !(self.damping_ratio_term.is_finite() && self.damping_ratio_term >= 0.0) {
            return Err(Error::Parameter(format!("damping_ratio_term must be >= 0, got {}", self.damping_ratio_term)));
        }
        self.excitation_ratio.validate()
    }

    /// RAO magnitude at a single frequency.
    pub fn amplitude(&self, omega: f64) -> Result<f64> {
        let r = omega / self.omega_r;
        let stiffness = 1.0 - r * r;
        let damping = self.damping_ratio_term * omega;
        if self.damping_ratio_term == 0.0 && stiffness.abs() <= 4.0 * f64::EPSILON {
            return Err(Error::Singularity { omega });
        }
        let denom = (stiffness * stiffness + damping * damping).sqrt();
        Ok(self.excitation_ratio.eval(omega) / denom)
    }
}

/// Evaluate the Morison-form RAO on a frequency grid.
pub fn morison_rao(params: &MorisonRaoParams, freqs: &[f64]) -> Result<RaoCurve> {
    params.validate()?;
    if freqs.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("RAO frequencies must be > 0".into()));
    }
    let amplitudes = freqs.iter().map(|&w| params.amplitude(w)).collect::<Result<Vec<_>>>()?;
    RaoCurve::new(freqs.to_vec(), amplitudes, "morison")
}

/// Spectral density `S(ω, θ)` on a frequency × direction grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalWaveSpectrum {
    pub timestamp: Timestamp,
    freqs: Vec<f64>,
    dirs: Vec<f64>,
    /// Frequency-major: `density[i * dirs.len() + j]`.
    density: Vec<f64>,
    freq_widths: Vec<f64>,
    dir_widths: Vec<f64>,
}

impl DirectionalWaveSpectrum {
    pub fn new(
        timestamp: Timestamp,
        freqs: Vec<f64>,
        dirs: Vec<f64>,
        density: Vec<f64>,
        freq_widths: Vec<f64>,
        dir_widths: Vec<f64>,
    ) -> Result<Self> {
        if freqs.is_empty() || dirs.is_empty() {
            return Err(Error::InvalidInput("spectrum grid must be non-empty".into()));
        }
        check_strictly_increasing("spectrum frequencies", &freqs)?;
        check_strictly_increasing("spectrum directions", &dirs)?;
        if freqs[0] <= 0.0 {
            return Err(Error::InvalidInput("spectrum frequencies must be > 0".into()));
        }
        if dirs[0] < 0.0 || *dirs.last().unwrap() >= 2.0 * PI {
            return Err(Error::InvalidInput("directions must lie in [0, 2π)".into()));
        }
        if density.len() != freqs.len() * dirs.len() {
            return Err(Error::InvalidInput(format!(
                "density has {} values for a {}x{} grid",
                density.len(),
                freqs.len(),
                dirs.len()
            )));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidInput("spectral density must be finite and >= 0".into()));
        }
        if freq_widths.len() != freqs.len() || dir_widths.len() != dirs.len() {
            return Err(Error::InvalidInput("one bin width per grid centre is required".into()));
        }
        if freq_widths.iter().chain(&dir_widths).any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("bin widths must be positive".into()));
        }
        Ok(Self { timestamp, freqs, dirs, density, freq_widths, dir_widths })
    }

    /// Build a spectrum using midpoint-rule frequency widths and equal
    /// direction widths of `2π / n_dirs`.
    pub fn with_default_widths(
        timestamp: Timestamp,
        freqs: Vec<f64>,
        dirs: Vec<f64>,
        density: Vec<f64>,
    ) -> Result<Self> {
        if freqs.len() < 2 {
            return Err(Error::InvalidInput("midpoint widths need at least two frequencies".into()));
        }
        let freq_widths = midpoint_widths(&freqs);
        let dir_widths = vec![2.0 * PI / dirs.len().max(1) as f64; dirs.len()];
        Self::new(timestamp, freqs, dirs, density, freq_widths, dir_widths)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn dirs(&self) -> &[f64] {
        &self.dirs
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn freq_widths(&self) -> &[f64] {
        &self.freq_widths
    }

    pub fn dir_widths(&self) -> &[f64] {
        &self.dir_widths
    }

    pub fn at(&self, freq_idx: usize, dir_idx: usize) -> f64 {
        self.density[freq_idx * self.dirs.len() + dir_idx]
    }

    /// Zeroth moment of the sea surface elevation (m²).
    pub fn surface_m0(&self) -> f64 {
        let nd = self.dirs.len();
        self.freqs
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let row = &self.density[i * nd..(i + 1) * nd];
                let dir_sum: f64 = row.iter().zip(&self.dir_widths).map(|(s, dt)| s * dt).sum();
                dir_sum * self.freq_widths[i]
            })
            .sum()
    }

    /// Significant wave height `4 √m0` (m).
    pub fn significant_wave_height(&self) -> f64 {
        4.0 * self.surface_m0().sqrt()
    }

    /// Return a copy with every density value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.density.iter_mut().for_each(|d| *d *= k);
        out
    }
}

/// Response statistics for one spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseStatistics {
    pub timestamp: Timestamp,
    pub m0: f64,
    pub m2: f64,
    pub sig_amplitude: f64,
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0))
}

/// Linearly interpolate spectral density in frequency (per direction) onto
/// the RAO frequency grid. Density outside the source frequency span is zero.
pub fn interpolate_spectrum_to_rao_grid(spec: &DirectionalWaveSpectrum, rao: &RaoCurve) -> DirectionalWaveSpectrum {
    let src = &spec.freqs;
    let nd = spec.dirs.len();
    let n_src = src.len();
    let targets = rao.freqs();
    let mut density = vec![0.0; targets.len() * nd];

    for (k, &w) in targets.iter().enumerate() {
        if w < src[0] || w > src[n_src - 1] {
            continue;
        }
        let out = &mut density[k * nd..(k + 1) * nd];
        let hi = src.partition_point(|&f| f < w);
        if src[hi] == w {
            out.copy_from_slice(&spec.density[hi * nd..(hi + 1) * nd]);
            continue;
        }
        let lo = hi - 1;
        let t = (w - src[lo]) / (src[hi] - src[lo]);
        for j in 0..nd {
            let a = spec.density[lo * nd + j];
            let b = spec.density[hi * nd + j];
            out[j] = a + t * (b - a);
        }
    }

    DirectionalWaveSpectrum {
        timestamp: spec.timestamp,
        freqs: targets.to_vec(),
        dirs: spec.dirs.clone(),
        density,
        freq_widths: midpoint_widths(targets),
        dir_widths: spec.dir_widths.clone(),
    }
}

/// Moment `Σ ωⁱ |RAO(ω)|² S(ω, θ) Δω Δθ` of the response spectrum.
///
/// The spectrum must already be on the RAO frequency grid.
pub fn spectral_moment(spec: &DirectionalWaveSpectrum, rao: &RaoCurve, order: u32) -> Result<f64> {
    if !same_grid(&spec.freqs, rao.freqs()) {
        return Err(Error::GridMismatch(format!(
            "spectrum has {} frequencies, RAO has {}; interpolate the spectrum onto the RAO grid first",
            spec.freqs.len(),
            rao.freqs().len()
        )));
    }
    let nd = spec.dirs.len();
    let mut total = 0.0;
    for (i, (&w, &amp)) in spec.freqs.iter().zip(rao.amplitudes()).enumerate() {
        let row = &spec.density[i * nd..(i + 1) * nd];
        let energy: f64 = row.iter().zip(&spec.dir_widths).map(|(s, dt)| s * dt).sum();
        total += w.powi(order as i32) * amp * amp * energy * spec.freq_widths[i];
    }
    Ok(total)
}

/// Significant response amplitude `2 √m0`.
pub fn significant_response(m0: f64) -> Result<f64> {
    if !(m0 >= 0.0) {
        return Err(Error::Domain(format!("zeroth moment must be >= 0, got {m0}")));
    }
    Ok(2.0 * m0.sqrt())
}

/// Interpolate onto the RAO grid, then compute m0, m2 and `2 √m0`.
pub fn response_statistics(spec: &DirectionalWaveSpectrum, rao: &RaoCurve) -> Result<ResponseStatistics> {
    let on_grid = interpolate_spectrum_to_rao_grid(spec, rao);
    let m0 = spectral_moment(&on_grid, rao, 0)?;
    let m2 = spectral_moment(&on_grid, rao, 2)?;
    Ok(ResponseStatistics { timestamp: spec.timestamp, m0, m2, sig_amplitude: significant_response(m0)? })
}
