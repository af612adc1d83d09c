//! Run manifest and the implementation of each command.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! response.csv
//! measurements_processed.csv       (when built from raw motion)
//! datasets/h000.csv ...
//! posterior/hybrid_h000.csv (+ .toml sidecar)
//! predict/hybrid_h000.csv
//! diagnostics/hybrid_h000_pacf.csv, hybrid_h000_hetero.csv
//! scores.csv, scores.txt
//! truth.csv                        (simulate)
//! ```

use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    align, chrono_split, synthesize_horizon_series, ForecastIssue, HorizonDataset, IssueSchedule, DEFAULT_HORIZONS,
    DEFAULT_TRAIN_FRACTION,
};
use crate::diagnostics::{heteroskedasticity_summary, pacf, standardized_residuals};
use crate::error::{Error, Result};
use crate::io::{self, format_time, PosteriorMeta, Table};
use crate::model::{
    fit, map_sigma, posterior_predictive, residuals, GapPolicy, ModelKind, ModelSpec, PosteriorSamples,
    PredictiveDistribution, PredictiveOptions, PriorSet, SamplerConfig, DEFAULT_LEVELS, DEFAULT_X_FLOOR,
};
use crate::motion::{apply_qa_mask, highpass_filter, rolling_m0, HeaveRecord};
use crate::scoring::{format_table, score_table, Forecast, ForecastSet};
use crate::spectral::{response_statistics, DirectionalWaveSpectrum, RaoCurve};
use crate::synthetic::{generate_campaign, generate_spectra, CampaignSettings};

/// Input file locations. Relative paths are resolved against the manifest's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub rao: Option<PathBuf>,
    /// Spectrum file, or directory of spectrum files, for `response`.
    pub spectra: Option<PathBuf>,
    /// Directory of reduced forecast issue files.
    pub forecast_dir: Option<PathBuf>,
    /// Directory of forecast spectrum files, one issue per file; the issue
    /// time is the earliest timestamp in the file. Reduced through `rao`.
    pub forecast_spectra_dir: Option<PathBuf>,
    /// Hourly significant-heave records.
    pub measurements: Option<PathBuf>,
    /// Raw heave displacement, used when `measurements` is absent.
    pub raw_motion: Option<PathBuf>,
    pub qa_events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSettings {
    /// High-pass cutoff (Hz). No default: it must be chosen for the record.
    pub cutoff_hz: Option<f64>,
    pub order: usize,
    pub window_hours: i64,
    pub step_hours: i64,
}

impl Default for MotionSettings {
    fn default() -> Self {
        Self { cutoff_hz: None, order: 5, window_hours: 3, step_hours: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub priors: PriorSet,
    pub x_floor: f64,
    pub gap_policy: GapPolicy,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { priors: PriorSet::default(), x_floor: DEFAULT_X_FLOOR, gap_policy: GapPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSettings {
    pub max_lag: usize,
    pub bins: usize,
}

impl Default for DiagnoseSettings {
    fn default() -> Self {
        Self { max_lag: 20, bins: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    #[serde(flatten)]
    pub campaign: CampaignSettings,
    /// Hours of truth spectra written to `inputs.spectra` (0 for none).
    pub spectra_hours: u32,
}

/// Everything a run needs, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub horizons: Vec<u32>,
    pub model: ModelKind,
    pub train_fraction: f64,
    /// Quantile levels reported by `predict`.
    pub levels: Vec<f64>,
    pub inputs: Inputs,
    pub schedule: IssueSchedule,
    pub motion: MotionSettings,
    #[serde(rename = "model_settings")]
    pub model_cfg: ModelSettings,
    pub sampler: SamplerConfig,
    pub diagnose: DiagnoseSettings,
    pub simulate: SimulateSettings,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 1,
            horizons: DEFAULT_HORIZONS.to_vec(),
            model: ModelKind::Hybrid,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            levels: DEFAULT_LEVELS.to_vec(),
            inputs: Inputs::default(),
            schedule: IssueSchedule::default(),
            motion: MotionSettings::default(),
            model_cfg: ModelSettings::default(),
            sampler: SamplerConfig::default(),
            diagnose: DiagnoseSettings::default(),
            simulate: SimulateSettings::default(),
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.resolve_paths(base);
        m.validate()?;
        Ok(m)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        let i = &mut self.inputs;
        for p in [
            &mut i.rao,
            &mut i.spectra,
            &mut i.forecast_dir,
            &mut i.forecast_spectra_dir,
            &mut i.measurements,
            &mut i.raw_motion,
            &mut i.qa_events,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Parameter("no horizons requested".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Parameter(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Parameter(format!("quantile level {l} is outside (0, 1)")));
        }
        self.sampler.validate()?;
        self.spec(ModelKind::Basic, 0).validate()
    }

    /// Every input path that is set must exist.
    pub fn check_inputs(&self) -> Result<()> {
        let i = &self.inputs;
        for (name, p) in [
            ("rao", &i.rao),
            ("spectra", &i.spectra),
            ("forecast_dir", &i.forecast_dir),
            ("forecast_spectra_dir", &i.forecast_spectra_dir),
            ("measurements", &i.measurements),
            ("raw_motion", &i.raw_motion),
            ("qa_events", &i.qa_events),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::InvalidInput(format!("inputs.{name}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self, kind: ModelKind, horizon: u32) -> ModelSpec {
        ModelSpec {
            kind,
            priors: self.model_cfg.priors,
            horizon,
            x_floor: self.model_cfg.x_floor,
            gap_policy: self.model_cfg.gap_policy,
        }
    }

    fn horizons_sorted(&self) -> Vec<u32> {
        let mut h = self.horizons.clone();
        h.sort_unstable();
        h.dedup();
        h
    }

    fn sampler_for(&self, h: u32) -> SamplerConfig {
        SamplerConfig { seed: derive_seed(self.seed, 1, h), ..self.sampler.clone() }
    }

    fn predictive_for(&self, h: u32) -> PredictiveOptions {
        PredictiveOptions { levels: self.levels.clone(), seed: derive_seed(self.seed, 2, h) }
    }

    pub fn dataset_path(&self, h: u32) -> PathBuf {
        self.out_dir.join("datasets").join(format!("h{h:03}.csv"))
    }

    pub fn posterior_path(&self, kind: ModelKind, h: u32) -> PathBuf {
        self.out_dir.join("posterior").join(format!("{kind}_h{h:03}.csv"))
    }

    pub fn predict_path(&self, kind: ModelKind, h: u32) -> PathBuf {
        self.out_dir.join("predict").join(format!("{kind}_h{h:03}.csv"))
    }
}

/// Kept below 2^63 so it fits a TOML integer.
fn derive_seed(seed: u64, stream: u64, h: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream << 32 | h as u64) >> 1
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Error::InvalidInput(format!("the manifest does not set inputs.{what}")))
}

/// Files written and notes for the user.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl Report {
    fn merge(&mut self, other: Report) {
        self.written.extend(other.written);
        self.messages.extend(other.messages);
    }
}

fn read_spectra_source(path: &Path) -> Result<Vec<DirectionalWaveSpectrum>> {
    let files = if path.is_dir() { io::list_data_files(path)? } else { vec![path.to_path_buf()] };
    let mut spectra = Vec::new();
    for f in &files {
        spectra.extend(io::read_spectra(f)?);
    }
    if spectra.is_empty() {
        return Err(Error::InvalidInput(format!("no spectra found in {}", path.display())));
    }
    spectra.sort_by_key(|s| s.timestamp);
    Ok(spectra)
}

/// Response statistics table for spectra through an RAO.
pub fn response_table(spectra: &[DirectionalWaveSpectrum], rao: &RaoCurve) -> Result<Table> {
    let stats = spectra.par_iter().map(|s| response_statistics(s, rao)).collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["timestamp_utc", "m0_m2", "m2_m2_per_s2", "sig_heave_m"]);
    for r in &stats {
        t.row([format_time(&r.timestamp), r.m0.to_string(), r.m2.to_string(), r.sig_amplitude.to_string()]);
    }
    Ok(t)
}

pub fn cmd_response(m: &RunManifest) -> Result<Report> {
    m.check_inputs()?;
    let rao = io::read_rao(require(&m.inputs.rao, "rao")?)?;
    let spectra = read_spectra_source(require(&m.inputs.spectra, "spectra")?)?;
    let path = m.out_dir.join("response.csv");
    response_table(&spectra, &rao)?.write_to(&path)?;
    Ok(Report { written: vec![path], messages: vec![format!("{} spectra processed", spectra.len())] })
}

fn load_issues(m: &RunManifest) -> Result<Vec<ForecastIssue>> {
    let mut issues = Vec::new();
    if let Some(dir) = &m.inputs.forecast_dir {
        for f in io::list_data_files(dir)? {
            issues.push(io::read_issue(&f)?);
        }
    } else if let Some(dir) = &m.inputs.forecast_spectra_dir {
        let rao = io::read_rao(require(&m.inputs.rao, "rao")?)?;
        for f in io::list_data_files(dir)? {
            let spectra = io::read_spectra(&f)?;
            let issue_time = spectra.first().map(|s| s.timestamp).ok_or_else(|| Error::parse(&f, "no spectra"))?;
            issues.push(ForecastIssue::from_spectra(issue_time, &spectra, &rao)?);
        }
    } else {
        return Err(Error::InvalidInput(
            "the manifest sets neither inputs.forecast_dir nor inputs.forecast_spectra_dir".into(),
        ));
    }
    if issues.is_empty() {
        return Err(Error::InvalidInput("no forecast issue files found".into()));
    }
    issues.sort_by_key(|i| i.issue_time);
    Ok(issues)
}

fn load_measurements(m: &RunManifest, report: &mut Report) -> Result<Vec<HeaveRecord>> {
    if let Some(p) = &m.inputs.measurements {
        return io::read_records(p);
    }
    let raw_path = m.inputs.raw_motion.as_ref().ok_or_else(|| {
        Error::InvalidInput("the manifest sets neither inputs.measurements nor inputs.raw_motion".into())
    })?;
    let cutoff = m
        .motion
        .cutoff_hz
        .ok_or_else(|| Error::Parameter("motion.cutoff_hz must be set to process raw motion".into()))?;
    let mut raw = io::read_raw_motion(raw_path)?;
    if let Some(qa) = &m.inputs.qa_events {
        let masked = apply_qa_mask(&raw, &io::read_qa_events(qa)?);
        if masked.ignored > 0 {
            report.messages.push(format!("{} QA events outside the record were ignored", masked.ignored));
        }
        raw = masked.series;
    }
    let filtered = highpass_filter(&raw, cutoff, m.motion.order)?;
    let records =
        rolling_m0(&filtered, TimeDelta::hours(m.motion.window_hours), TimeDelta::hours(m.motion.step_hours))?;
    let path = m.out_dir.join("measurements_processed.csv");
    io::write_records(&path, &records)?;
    report.written.push(path);
    Ok(records)
}

/// Per-horizon datasets from forecasts and measurements.
pub fn build_datasets(
    issues: &[ForecastIssue],
    measurements: &[HeaveRecord],
    horizons: &[u32],
    schedule: &IssueSchedule,
) -> Result<Vec<(HorizonDataset, usize)>> {
    horizons
        .par_iter()
        .map(|&h| {
            let series = synthesize_horizon_series(issues, h, schedule)?;
            let missing = series.missing.len();
            Ok((align(&series, measurements)?, missing))
        })
        .collect()
}

pub fn cmd_build(m: &RunManifest) -> Result<Report> {
    m.check_inputs()?;
    let mut report = Report::default();
    let issues = load_issues(m)?;
    let measurements = load_measurements(m, &mut report)?;
    let horizons = m.horizons_sorted();
    for (ds, missing) in build_datasets(&issues, &measurements, &horizons, &m.schedule)? {
        let path = m.dataset_path(ds.horizon);
        io::write_dataset(&path, &ds)?;
        report.written.push(path);
        let gaps = ds.rows.iter().filter(|r| r.post_gap).count();
        report.messages.push(format!(
            "h={:>3}: {} rows, {} after gaps, {} valid times without an issue",
            ds.horizon,
            ds.len(),
            gaps,
            missing
        ));
    }
    Ok(report)
}

fn load_split(m: &RunManifest, h: u32) -> Result<(HorizonDataset, HorizonDataset)> {
    let ds = io::read_dataset(&m.dataset_path(h), h)?;
    chrono_split(&ds, m.train_fraction)
}

pub fn cmd_fit(m: &RunManifest) -> Result<Report> {
    let horizons = m.horizons_sorted();
    let results: Vec<Result<Report>> = horizons
        .par_iter()
        .map(|&h| {
            let (train, _) = load_split(m, h)?;
            let spec = m.spec(m.model, h);
            let cfg = m.sampler_for(h);
            let samples = fit(&train, &spec, &cfg).map_err(|e| match e {
                Error::Convergence { param, rhat, limit } => {
                    Error::Convergence { param: format!("{param} (h={h})"), rhat, limit }
                }
                other => other,
            })?;
            let meta = PosteriorMeta {
                model: m.model,
                horizon: h,
                seed: cfg.seed,
                n_train: train.len(),
                acceptance_rate: samples.acceptance_rate,
                map_sigma: map_sigma(&samples).ok(),
                diagnostics: samples.diagnostics.clone(),
            };
            let path = m.posterior_path(m.model, h);
            io::write_posterior(&path, &samples, &meta)?;
            Ok(Report {
                written: vec![path.clone(), io::sidecar_path(&path)],
                messages: vec![format!(
                    "h={h:>3}: {} draws, max R-hat {:.4}, acceptance {:.2}",
                    samples.n_draws(),
                    samples.max_rhat(),
                    samples.acceptance_rate
                )],
            })
        })
        .collect();
    let mut report = Report::default();
    for r in results {
        report.merge(r?);
    }
    Ok(report)
}

fn load_posterior(m: &RunManifest, h: u32) -> Result<PosteriorSamples> {
    let (samples, meta) = io::read_posterior(&m.posterior_path(m.model, h))?;
    if meta.model != m.model || meta.horizon != h {
        return Err(Error::InvalidInput(format!(
            "posterior file for {} h={} holds {} h={}",
            m.model, h, meta.model, meta.horizon
        )));
    }
    Ok(samples)
}

/// Out-of-sample predictive distributions for the test rows at one horizon.
pub fn predict_horizon(m: &RunManifest, h: u32) -> Result<(HorizonDataset, Vec<PredictiveDistribution>)> {
    let (train, test) = load_split(m, h)?;
    let samples = load_posterior(m, h)?;
    let spec = m.spec(m.model, h);
    let pred = posterior_predictive(&samples, &train.rows, &test.rows, &spec, &m.predictive_for(h))?;
    Ok((test, pred))
}

fn level_name(l: f64) -> String {
    let pct = l * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("p{:02}", pct.round() as u32)
    } else {
        format!("p{pct}")
    }
}

pub fn cmd_predict(m: &RunManifest) -> Result<Report> {
    let horizons = m.horizons_sorted();
    let outputs: Vec<Result<(PathBuf, Vec<u8>)>> = horizons
        .par_iter()
        .map(|&h| {
            let (test, pred) = predict_horizon(m, h)?;
            let names: Vec<String> = m.levels.iter().map(|&l| level_name(l)).collect();
            let mut header = vec!["valid_time_utc", "x_m", "y_m", "mean_m"];
            header.extend(names.iter().map(String::as_str));
            let mut t = Table::new(&header);
            for (row, p) in test.rows.iter().zip(&pred) {
                let mut fields =
                    vec![format_time(&row.valid_time), row.x.to_string(), row.y.to_string(), p.mean.to_string()];
                fields.extend(p.quantiles.iter().map(f64::to_string));
                t.row(fields);
            }
            Ok((m.predict_path(m.model, h), t.into_bytes()))
        })
        .collect();
    let mut report = Report::default();
    for o in outputs {
        let (path, bytes) = o?;
        io::atomic_write(&path, &bytes)?;
        report.written.push(path);
    }
    Ok(report)
}

/// Raw forecast and model scores for every horizon whose inputs exist.
pub fn score_sets(m: &RunManifest) -> Result<(Vec<ForecastSet>, Vec<String>)> {
    let horizons = m.horizons_sorted();
    let per_h: Vec<Result<Option<Vec<ForecastSet>>>> = horizons
        .par_iter()
        .map(|&h| {
            if !m.dataset_path(h).exists() || !m.posterior_path(m.model, h).exists() {
                return Ok(None);
            }
            let (test, pred) = predict_horizon(m, h)?;
            let obs: Vec<f64> = test.rows.iter().map(|r| r.y).collect();
            Ok(Some(vec![
                ForecastSet {
                    model_label: "raw".into(),
                    horizon: h,
                    forecasts: test.rows.iter().map(|r| Forecast::Point(r.x)).collect(),
                    obs: obs.clone(),
                },
                ForecastSet {
                    model_label: m.model.to_string(),
                    horizon: h,
                    forecasts: pred.into_iter().map(|p| Forecast::Samples(p.draws)).collect(),
                    obs,
                },
            ]))
        })
        .collect();
    let mut sets = Vec::new();
    let mut warnings = Vec::new();
    for (h, r) in horizons.iter().zip(per_h) {
        match r? {
            Some(s) => sets.extend(s),
            None => warnings.push(format!("h={h}: dataset or posterior missing, row omitted")),
        }
    }
    Ok((sets, warnings))
}

pub fn cmd_score(m: &RunManifest, squared: bool) -> Result<Report> {
    let (sets, mut warnings) = score_sets(m)?;
    let (rows, w) = score_table(&sets, squared)?;
    warnings.extend(w);
    if rows.is_empty() {
        return Err(Error::InvalidInput("nothing to score: run build and fit first".into()));
    }
    let err_name = if squared { "mse_m2" } else { "rmse_m" };
    let mut t = Table::new(&["horizon", "model", err_name, "crps_m", "n"]);
    for r in &rows {
        t.row([
            r.horizon.to_string(),
            r.model_label.clone(),
            format!("{:.3}", r.rmse),
            format!("{:.3}", r.crps_mean),
            r.n.to_string(),
        ]);
    }
    let csv_path = m.out_dir.join("scores.csv");
    let txt_path = m.out_dir.join("scores.txt");
    t.write_to(&csv_path)?;
    let text = format_table(&rows, squared);
    io::atomic_write(&txt_path, text.as_bytes())?;
    let mut messages = warnings;
    messages.push(text);
    Ok(Report { written: vec![csv_path, txt_path], messages })
}

pub fn cmd_diagnose(m: &RunManifest) -> Result<Report> {
    let mut report = Report::default();
    let dir = m.out_dir.join("diagnostics");
    for h in m.horizons_sorted() {
        let (train, _) = load_split(m, h)?;
        let samples = load_posterior(m, h)?;
        let spec = m.spec(m.model, h);
        let p = samples.mean_params();
        let eps = residuals(&p, &train);

        let mut series = vec![("residual", eps.clone())];
        if m.model == ModelKind::Hybrid {
            series
                .push(("standardized", standardized_residuals(&p, &train, &spec)?.into_iter().map(|v| v.1).collect()));
        }
        let mut t = Table::new(&["series", "lag", "coefficient", "band"]);
        for (name, values) in &series {
            let max_lag = m.diagnose.max_lag.min(values.len().saturating_sub(2));
            let r = pacf(values, max_lag)?;
            for (lag, c) in r.lags.iter().zip(&r.coefficients) {
                t.row([name.to_string(), lag.to_string(), c.to_string(), r.band.to_string()]);
            }
            let sig = r.significant_lags();
            report.messages.push(format!("h={h:>3} {name}: significant PACF lags {sig:?}"));
        }
        let pacf_path = dir.join(format!("{}_h{h:03}_pacf.csv", m.model));
        t.write_to(&pacf_path)?;

        let sigma_map = map_sigma(&samples).ok();
        let summary = heteroskedasticity_summary(&eps, &train.xs(), m.diagnose.bins.min(train.len()), sigma_map)?;
        let mut t = Table::new(&["x_center_m", "mean_abs_residual_m", "count", "sigma_map"]);
        let sm = sigma_map.map_or_else(String::new, |s| s.to_string());
        for b in &summary.bins {
            t.row([b.x_center.to_string(), b.mean_abs_residual.to_string(), b.count.to_string(), sm.clone()]);
        }
        let het_path = dir.join(format!("{}_h{h:03}_hetero.csv", m.model));
        t.write_to(&het_path)?;
        report.written.extend([pacf_path, het_path]);
    }
    Ok(report)
}

pub fn cmd_simulate(m: &RunManifest) -> Result<Report> {
    let forecast_dir = require(&m.inputs.forecast_dir, "forecast_dir")?;
    let meas_path = require(&m.inputs.measurements, "measurements")?;
    let cfg = m.simulate.campaign.config(m.seed);
    let campaign = generate_campaign(&cfg)?;
    let mut report = Report::default();

    if forecast_dir.exists() {
        for old in io::list_data_files(forecast_dir)? {
            if old.file_name().is_some_and(|n| n.to_string_lossy().starts_with("issue_")) {
                std::fs::remove_file(&old).map_err(|e| Error::io(&old, e))?;
            }
        }
    }
    let files: Vec<(PathBuf, &ForecastIssue)> =
        campaign.issues.iter().map(|i| (forecast_dir.join(io::issue_file_name(&i.issue_time)), i)).collect();
    files.par_iter().map(|(p, i)| io::write_issue(p, i)).collect::<Result<Vec<_>>>()?;
    report.messages.push(format!("{} forecast issues written to {}", files.len(), forecast_dir.display()));

    io::write_records(meas_path, &campaign.measurements)?;
    report.written.push(meas_path.clone());
    if let Some(rao) = &m.inputs.rao {
        io::write_rao(rao, &campaign.rao)?;
        report.written.push(rao.clone());
    }
    if let (Some(path), n) = (&m.inputs.spectra, m.simulate.spectra_hours) {
        if n > 0 {
            let mut scn = cfg.scenario.clone();
            scn.duration_hours = scn.duration_hours.min(n);
            let spectra = generate_spectra(&scn)?;
            let target = if path.is_dir() { path.join("spectra.csv") } else { path.clone() };
            io::spectra_table(&spectra).write_to(&target)?;
            report.written.push(target);
        }
    }
    let mut t = Table::new(&["timestamp_utc", "sig_heave_m"]);
    for (ts, v) in &campaign.truth {
        t.row([format_time(ts), v.to_string()]);
    }
    let truth = m.out_dir.join("truth.csv");
    t.write_to(&truth)?;
    report.written.push(truth);
    Ok(report)
}
