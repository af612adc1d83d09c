//! Per-horizon forecast series, alignment with measurements and the
//! chronological train/test split.
//!
//! Forecast products are issued on a daily cycle (00, 06, 12, 18Z) and each
//! cycle has a maximum lead time. For a horizon `h` the hourly series is
//! tiled from consecutive eligible issues: an issue at `t` contributes leads
//! `h .. h + block - 1`, where `block` is the spacing to the next eligible
//! cycle. A cycle is eligible only if its maximum lead covers its whole
//! block, which is what restricts long horizons to the 00Z and 12Z runs when
//! the 06Z and 18Z runs stop at 72 h.

use std::collections::{BTreeMap, HashMap};

use chrono::{TimeDelta, Timelike};

use crate::error::{Error, Result};
use crate::motion::HeaveRecord;
use crate::spectral::{response_statistics, DirectionalWaveSpectrum, RaoCurve};
use crate::Timestamp;

/// Default training fraction.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Horizons evaluated by default (hours).
pub const DEFAULT_HORIZONS: [u32; 7] = [0, 6, 12, 24, 48, 72, 96];

/// One forecast run: significant-heave forecasts at hourly lead times.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastIssue {
    pub issue_time: Timestamp,
    leads: Vec<u32>,
    values: Vec<f64>,
}

impl ForecastIssue {
    pub fn new(issue_time: Timestamp, leads: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if leads.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "issue {issue_time}: {} leads but {} values",
                leads.len(),
                values.len()
            )));
        }
        if leads.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!("issue {issue_time}: lead times must be strictly increasing")));
        }
        Ok(Self { issue_time, leads, values })
    }

    /// Reduce forecast spectra to significant heave through an RAO. Each
    /// spectrum's timestamp must be a whole number of hours after the issue.
    pub fn from_spectra(issue_time: Timestamp, spectra: &[DirectionalWaveSpectrum], rao: &RaoCurve) -> Result<Self> {
        let mut pairs = Vec::with_capacity(spectra.len());
        for spec in spectra {
            let lead = whole_hours(spec.timestamp - issue_time).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "spectrum at {} is not a whole, nonnegative number of hours after {issue_time}",
                    spec.timestamp
                ))
            })?;
            pairs.push((lead, response_statistics(spec, rao)?.sig_amplitude));
        }
        pairs.sort_by_key(|p| p.0);
        let (leads, values) = pairs.into_iter().unzip();
        Self::new(issue_time, leads, values)
    }

    pub fn leads(&self) -> &[u32] {
        &self.leads
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, lead: u32) -> Option<f64> {
        self.leads.binary_search(&lead).ok().map(|i| self.values[i])
    }

    pub fn max_lead(&self) -> Option<u32> {
        self.leads.last().copied()
    }
}

fn whole_hours(d: TimeDelta) -> Option<u32> {
    if d < TimeDelta::zero() || d.num_seconds() % 3600 != 0 || d.subsec_nanos() != 0 {
        return None;
    }
    u32::try_from(d.num_hours()).ok()
}

/// A daily issue cycle and the longest lead it provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IssueCycle {
    pub hour: u32,
    pub max_lead: u32,
}

/// Which cycles a forecast product runs and how far each extends.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<IssueCycle>", into = "Vec<IssueCycle>")]
pub struct IssueSchedule {
    cycles: Vec<IssueCycle>,
}

impl Default for IssueSchedule {
    /// 00Z and 12Z to 240 h, 06Z and 18Z to 72 h.
    fn default() -> Self {
        Self {
            cycles: vec![
                IssueCycle { hour: 0, max_lead: 240 },
                IssueCycle { hour: 6, max_lead: 72 },
                IssueCycle { hour: 12, max_lead: 240 },
                IssueCycle { hour: 18, max_lead: 72 },
            ],
        }
    }
}

impl TryFrom<Vec<IssueCycle>> for IssueSchedule {
    type Error = Error;

    fn try_from(cycles: Vec<IssueCycle>) -> Result<Self> {
        Self::new(cycles)
    }
}

impl From<IssueSchedule> for Vec<IssueCycle> {
    fn from(s: IssueSchedule) -> Self {
        s.cycles
    }
}

/// An eligible cycle and the number of consecutive leads it contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleBlock {
    pub hour: u32,
    pub block: u32,
}

impl IssueSchedule {
    pub fn new(mut cycles: Vec<IssueCycle>) -> Result<Self> {
        cycles.sort_by_key(|c| c.hour);
        if cycles.is_empty() {
            return Err(Error::InvalidInput("issue schedule has no cycles".into()));
        }
        if cycles.iter().any(|c| c.hour >= 24) || cycles.windows(2).any(|w| w[0].hour == w[1].hour) {
            return Err(Error::InvalidInput("cycle hours must be unique and in 0..24".into()));
        }
        Ok(Self { cycles })
    }

    pub fn cycles(&self) -> &[IssueCycle] {
        &self.cycles
    }

    fn max_lead(&self, hour: u32) -> Option<u32> {
        self.cycles.iter().find(|c| c.hour == hour).map(|c| c.max_lead)
    }

    /// Cycles that can serve horizon `h` with a full block each.
    pub fn eligible(&self, h: u32) -> Vec<CycleBlock> {
        let mut active: Vec<IssueCycle> = self.cycles.iter().copied().filter(|c| c.max_lead >= h).collect();
        loop {
            if active.is_empty() {
                return Vec::new();
            }
            let blocks: Vec<CycleBlock> = active
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let next = active[(i + 1) % active.len()].hour;
                    let gap = (next + 24 - c.hour) % 24;
                    CycleBlock { hour: c.hour, block: if gap == 0 { 24 } else { gap } }
                })
                .collect();
            let keep: Vec<IssueCycle> =
                active.iter().zip(&blocks).filter(|(c, b)| c.max_lead >= h + b.block - 1).map(|(c, _)| *c).collect();
            if keep.len() == active.len() {
                return blocks;
            }
            active = keep;
        }
    }
}

/// One hourly value of a synthesised horizon series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonPoint {
    pub valid_time: Timestamp,
    pub x: f64,
    pub issue_time: Timestamp,
}

/// Continuous hourly forecast series for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSeries {
    pub horizon: u32,
    pub points: Vec<HorizonPoint>,
    /// Valid times left empty because an issue or lead was missing.
    pub missing: Vec<Timestamp>,
}

/// Concatenate consecutive issues into an hourly series for horizon `h`.
///
/// Every valid time is served by the most recent eligible issue whose lead is
/// at least `h`. A missing issue (or lead) leaves a gap; older issues are not
/// used as a fallback.
pub fn synthesize_horizon_series(issues: &[ForecastIssue], h: u32, schedule: &IssueSchedule) -> Result<HorizonSeries> {
    if issues.windows(2).any(|w| w[1].issue_time <= w[0].issue_time) {
        return Err(Error::InvalidInput("forecast issues must be sorted by strictly increasing issue time".into()));
    }
    let mut by_time = BTreeMap::new();
    for issue in issues {
        let t = issue.issue_time;
        if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 || schedule.max_lead(t.hour()).is_none() {
            return Err(Error::InvalidInput(format!("issue time {t} is not on a scheduled cycle")));
        }
        by_time.insert(t, issue);
    }
    let eligible = schedule.eligible(h);
    if eligible.is_empty() {
        return Err(Error::Parameter(format!("no issue cycle reaches horizon {h} h")));
    }
    let block_of: HashMap<u32, u32> = eligible.iter().map(|c| (c.hour, c.block)).collect();

    let usable: Vec<Timestamp> = by_time.keys().copied().filter(|t| block_of.contains_key(&t.hour())).collect();
    let mut series = HorizonSeries { horizon: h, points: Vec::new(), missing: Vec::new() };
    let (Some(&first), Some(&last)) = (usable.first(), usable.last()) else {
        return Ok(series);
    };

    let mut t = first;
    while t <= last {
        let block = block_of[&t.hour()];
        let issue = by_time.get(&t);
        for lead in h..h + block {
            let valid_time = t + TimeDelta::hours(lead as i64);
            match issue.and_then(|i| i.value_at(lead)).filter(|v| v.is_finite()) {
                Some(x) => series.points.push(HorizonPoint { valid_time, x, issue_time: t }),
                None => series.missing.push(valid_time),
            }
        }
        t += TimeDelta::hours(block as i64);
    }
    Ok(series)
}

/// One aligned (forecast, measurement) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonRow {
    pub valid_time: Timestamp,
    pub x: f64,
    pub y: f64,
    pub issue_time: Timestamp,
    /// The previous row is not exactly one hour earlier.
    pub post_gap: bool,
}

/// Time-ordered aligned rows for one horizon. Rows before `split_index` are
/// the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDataset {
    pub horizon: u32,
    pub rows: Vec<HorizonRow>,
    pub split_index: usize,
}

impl HorizonDataset {
    /// Rows with `post_gap` recomputed from the valid-time spacing.
    pub fn new(horizon: u32, mut rows: Vec<HorizonRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].valid_time <= w[0].valid_time) {
            return Err(Error::InvalidInput("rows must be strictly increasing in valid time".into()));
        }
        if rows.iter().any(|r| !r.x.is_finite() || !r.y.is_finite()) {
            return Err(Error::InvalidInput("rows must have finite x and y".into()));
        }
        mark_gaps(&mut rows);
        let split_index = split_point(rows.len(), DEFAULT_TRAIN_FRACTION);
        Ok(Self { horizon, rows, split_index })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }
}

fn mark_gaps(rows: &mut [HorizonRow]) {
    let mut prev: Option<Timestamp> = None;
    for row in rows.iter_mut() {
        row.post_gap = prev.is_some_and(|p| row.valid_time - p != TimeDelta::hours(1));
        prev = Some(row.valid_time);
    }
}

fn split_point(n: usize, fraction: f64) -> usize {
    // Guard against products like 0.8 * 100 = 80.00000000000001.
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (count as usize).min(n)
}

/// Inner join of a forecast series with measurements on valid time; rows
/// whose measurement failed QA are dropped.
pub fn align(series: &HorizonSeries, measurements: &[HeaveRecord]) -> Result<HorizonDataset> {
    let obs: HashMap<Timestamp, &HeaveRecord> = measurements.iter().map(|m| (m.timestamp, m)).collect();
    let mut matched = false;
    let mut rows = Vec::new();
    for p in &series.points {
        if let Some(m) = obs.get(&p.valid_time) {
            matched = true;
            if m.valid && m.sig_heave.is_finite() && p.x.is_finite() {
                rows.push(HorizonRow {
                    valid_time: p.valid_time,
                    x: p.x,
                    y: m.sig_heave,
                    issue_time: p.issue_time,
                    post_gap: false,
                });
            }
        }
    }
    if !matched || rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    HorizonDataset::new(series.horizon, rows)
}

/// Split into the first `⌈fraction · N⌉` rows and the rest, without shuffling.
pub fn chrono_split(ds: &HorizonDataset, train_fraction: f64) -> Result<(HorizonDataset, HorizonDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    if ds.len() < 10 {
        return Err(Error::TooFewRows { needed: 10, got: ds.len() });
    }
    let k = split_point(ds.len(), train_fraction);
    let train = HorizonDataset { horizon: ds.horizon, rows: ds.rows[..k].to_vec(), split_index: k };
    let mut test_rows = ds.rows[k..].to_vec();
    if let Some(first) = test_rows.first_mut() {
        first.post_gap = false;
    }
    let test = HorizonDataset { horizon: ds.horizon, rows: test_rows, split_index: 0 };
    Ok((train, test))
}
