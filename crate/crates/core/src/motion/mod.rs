//! Raw heave displacement records to hourly significant heave.
//!
//! The processing chain is: mask QA exclusions as gaps, high-pass filter the
//! gap-free segments (zero phase), then take the variance of each rolling
//! window as its zeroth moment. Records are stamped with the window end so a
//! record at `t` only uses data up to `t`.

mod butterworth;

use std::ops::Range;

use chrono::TimeDelta;

pub use butterworth::{Biquad, Sos};

use crate::error::{Error, Result};
use crate::Timestamp;

/// Uniformly sampled heave displacement (m) with excluded index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMotionSeries {
    pub start: Timestamp,
    /// Samples per second.
    pub sample_rate: f64,
    pub values: Vec<f64>,
    /// Sorted, disjoint, non-adjacent half-open index ranges.
    gaps: Vec<Range<usize>>,
}

impl RawMotionSeries {
    pub fn new(start: Timestamp, sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_gaps(start, sample_rate, values, Vec::new())
    }

    pub fn with_gaps(start: Timestamp, sample_rate: f64, values: Vec<f64>, gaps: Vec<Range<usize>>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidInput(format!("sample rate must be > 0, got {sample_rate}")));
        }
        let n = values.len();
        let gaps = merge_ranges(gaps.into_iter().map(|r| r.start.min(n)..r.end.min(n)).collect());
        let series = Self { start, sample_rate, values, gaps };
        if let Some(i) = (0..n).find(|&i| !series.is_gap(i) && !series.values[i].is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite heave value at sample {i} outside gaps")));
        }
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gaps(&self) -> &[Range<usize>] {
        &self.gaps
    }

    pub fn is_gap(&self, idx: usize) -> bool {
        let k = self.gaps.partition_point(|g| g.end <= idx);
        self.gaps.get(k).is_some_and(|g| g.start <= idx)
    }

    fn overlaps_gap(&self, range: &Range<usize>) -> bool {
        let k = self.gaps.partition_point(|g| g.end <= range.start);
        self.gaps.get(k).is_some_and(|g| g.start < range.end)
    }

    /// Instant of sample `idx`.
    pub fn time_of(&self, idx: usize) -> Timestamp {
        self.start + seconds(idx as f64 / self.sample_rate)
    }

    /// Duration covered by the samples, `len / sample_rate`.
    pub fn duration_secs(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate
    }

    /// Contiguous index ranges not covered by any gap.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut cursor = 0;
        for g in &self.gaps {
            if g.start > cursor {
                out.push(cursor..g.start);
            }
            cursor = g.end;
        }
        if cursor < self.values.len() {
            out.push(cursor..self.values.len());
        }
        out
    }
}

fn seconds(s: f64) -> TimeDelta {
    TimeDelta::nanoseconds((s * 1e9).round() as i64)
}

fn merge_ranges(mut ranges: Vec<Range<usize>>) -> Vec<Range<usize>> {
    ranges.retain(|r| r.start < r.end);
    ranges.sort_by_key(|r| (r.start, r.end));
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match merged.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    merged
}

/// Significant heave over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeaveRecord {
    pub timestamp: Timestamp,
    /// `2 √m0` (m); NaN when the record is invalid.
    pub sig_heave: f64,
    pub valid: bool,
}

/// A period to exclude from processing (transit, heading or draft change).
#[derive(Debug, Clone, PartialEq)]
pub struct QaEvent {
    pub start: Timestamp,
    pub end: Timestamp,
    pub reason: String,
}

/// Zero-phase Butterworth high-pass filter applied to each gap-free segment
/// independently. Gap samples pass through unchanged.
pub fn highpass_filter(series: &RawMotionSeries, cutoff: f64, order: usize) -> Result<RawMotionSeries> {
    let sos = Sos::butterworth_highpass(order, cutoff, series.sample_rate)?;
    // Odd-extension length: the usual 3 × taps, or a few cutoff periods when
    // that is longer, so the padded edge has time to settle.
    let taps = 2 * sos.sections.len() + 1;
    let padlen = (3 * taps).max((2.0 * series.sample_rate / cutoff).ceil() as usize);

    let mut out = series.values.clone();
    for seg in series.segments() {
        let filtered = sos.filtfilt(&series.values[seg.clone()], padlen);
        out[seg].copy_from_slice(&filtered);
    }
    Ok(RawMotionSeries { values: out, ..series.clone() })
}

/// Windowed zeroth moment of an already-filtered series.
///
/// Windows end at `start + window + k·step`; `m0` is the mean-removed
/// variance (divisor `n`) of the window's samples, and any window touching a
/// gap is marked invalid.
pub fn rolling_m0(series: &RawMotionSeries, window: TimeDelta, step: TimeDelta) -> Result<Vec<HeaveRecord>> {
    if series.is_empty() {
        return Err(Error::InvalidInput("empty motion series".into()));
    }
    if step <= TimeDelta::zero() || window < step {
        return Err(Error::Parameter(format!("need window >= step > 0, got window {window} and step {step}")));
    }
    let to_samples = |d: TimeDelta| (d.as_seconds_f64() * series.sample_rate).round() as usize;
    let win = to_samples(window);
    let stride = to_samples(step);
    if win == 0 || stride == 0 {
        return Err(Error::Parameter("window and step must span at least one sample".into()));
    }
    if series.len() < win {
        return Err(Error::InvalidInput(format!(
            "series of {} samples is shorter than the {win}-sample window",
            series.len()
        )));
    }

    let count = (series.len() - win) / stride + 1;
    let records = (0..count)
        .map(|k| {
            let end = win + k * stride;
            let range = end - win..end;
            let timestamp = series.time_of(end);
            if series.overlaps_gap(&range) {
                return HeaveRecord { timestamp, sig_heave: f64::NAN, valid: false };
            }
            let m0 = variance(&series.values[range]);
            HeaveRecord { timestamp, sig_heave: 2.0 * m0.sqrt(), valid: true }
        })
        .collect();
    Ok(records)
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Result of [`apply_qa_mask`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome {
    pub series: RawMotionSeries,
    /// Events lying entirely outside the series span.
    pub ignored: usize,
}

/// Mark the union of QA event intervals as gaps. Idempotent.
pub fn apply_qa_mask(series: &RawMotionSeries, events: &[QaEvent]) -> MaskOutcome {
    let n = series.len();
    let span_end = series.duration_secs();
    let mut gaps = series.gaps.clone();
    let mut ignored = 0;
    for ev in events {
        let a = (ev.start - series.start).as_seconds_f64();
        let b = (ev.end - series.start).as_seconds_f64();
        if b <= 0.0 || a >= span_end || b <= a {
            ignored += 1;
            continue;
        }
        let lo = (a * series.sample_rate).ceil().max(0.0) as usize;
        let hi = ((b * series.sample_rate).ceil() as usize).min(n);
        gaps.push(lo.min(n)..hi);
    }
    let series = RawMotionSeries { gaps: merge_ranges(gaps), ..series.clone() };
    MaskOutcome { series, ignored }
}
