//! Digital Butterworth high-pass design as cascaded second-order sections,
//! and zero-phase forward-backward filtering.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One biquad: `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state that a unit step holds in steady state.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        [g - self.b[0], self.b[2] - self.a[1] * g]
    }

    /// Complex frequency response at normalised frequency `f / fs`.
    pub fn response(&self, normalized_freq: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * normalized_freq);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Butterworth high-pass of the given order, cutoff in Hz.
    ///
    /// Bilinear transform with the cutoff prewarped, so `|H(f_c)|² = 1/2`
    /// exactly. Each section is normalised to unit gain at Nyquist.
    pub fn butterworth_highpass(order: usize, cutoff: f64, sample_rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Parameter("filter order must be >= 1".into()));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Parameter(format!("sample rate must be > 0, got {sample_rate}")));
        }
        let nyquist = sample_rate / 2.0;
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(Error::Parameter(format!(
                "cutoff {cutoff} Hz must lie strictly between 0 and Nyquist ({nyquist} Hz)"
            )));
        }
        let fs2 = 2.0 * sample_rate;
        let warped = fs2 * (PI * cutoff / sample_rate).tan();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let lp_pole = Complex64::from_polar(1.0, theta);
            let zp = bilinear(warped / lp_pole);
            let a1 = -2.0 * zp.re;
            let a2 = zp.norm_sqr();
            let g = (1.0 - a1 + a2) / 4.0;
            sections.push(Biquad { b: [g, -2.0 * g, g], a: [a1, a2] });
        }
        if order % 2 == 1 {
            let zp = bilinear(Complex64::new(-warped, 0.0)).re;
            let g = (1.0 + zp) / 2.0;
            sections.push(Biquad { b: [g, -g, 0.0], a: [-zp, 0.0] });
        }
        Ok(Self { sections })
    }

    pub fn response(&self, normalized_freq: f64) -> Complex64 {
        self.sections.iter().map(|s| s.response(normalized_freq)).product()
    }

    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let zi = s.step_state();
                let out = [zi[0] * scale, zi[1] * scale];
                scale *= s.dc_gain();
                out
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], init: &[[f64; 2]], x0: f64) {
        for (sec, zi) in self.sections.iter().zip(init) {
            let [b0, b1, b2] = sec.b;
            let [a1, a2] = sec.a;
            let mut z1 = zi[0] * x0;
            let mut z2 = zi[1] * x0;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }

    /// Single forward pass, starting from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let rest = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut y, &rest, 0.0);
        y
    }

    /// Zero-phase filtering: odd extension at both ends, forward pass, then
    /// a backward pass, each started from the steady state of its first
    /// sample. The magnitude response is `|H|²`.
    pub fn filtfilt(&self, x: &[f64], padlen: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = padlen.min(n - 1);
        let first = x[0];
        let last = x[n - 1];
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let zi = self.step_states();
        let x0 = ext[0];
        self.run(&mut ext, &zi, x0);
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, &zi, y0);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}
