//! Delimited-text file formats and atomic writes.
//!
//! Every file has a header row. Timestamps are RFC 3339 in UTC. Frequencies
//! on disk are in Hz and directions in degrees; in memory they are rad/s and
//! rad.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::dataset::{ForecastIssue, HorizonDataset, HorizonRow};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ParamDiagnostics, PosteriorSamples};
use crate::motion::{HeaveRecord, QaEvent, RawMotionSeries};
use crate::spectral::{DirectionalWaveSpectrum, RaoCurve};
use crate::Timestamp;

/// Spectral density per Hz per degree to per rad/s per rad.
const DENSITY_TO_RAD: f64 = 180.0 / (2.0 * PI * PI);

pub fn format_time(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_time(s: &str) -> std::result::Result<Timestamp, String> {
    chrono::DateTime::parse_from_rfc3339(s.trim()).map(|t| t.to_utc()).map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

/// Write a file by way of a temporary file in the same directory, so readers
/// never see a partial file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// In-memory CSV with a fixed header.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }

    pub fn write_to(self, path: &Path) -> Result<()> {
        atomic_write(path, &self.into_bytes())
    }
}

/// Rows of a delimited file whose header must match `expected`
/// (case-insensitive, surrounding whitespace ignored).
fn read_rows(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got.len() != expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::parse(path, format!("expected columns {expected:?}, found {got:?}")));
    }
    reader.records().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::parse(path, e.to_string()),
    }
}

fn field<'a>(path: &Path, rec: &'a csv::StringRecord, i: usize) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| Error::parse(path, format!("line {}: missing column {}", line_of(rec), i + 1)))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn num(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let s = field(path, rec, i)?;
    s.parse::<f64>().map_err(|_| Error::parse(path, format!("line {}: {s:?} is not a number", line_of(rec))))
}

fn time(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<Timestamp> {
    parse_time(field(path, rec, i)?).map_err(|m| Error::parse(path, format!("line {}: {m}", line_of(rec))))
}

fn flag(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<bool> {
    match field(path, rec, i)?.to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::parse(path, format!("line {}: {other:?} is not a flag", line_of(rec)))),
    }
}

fn b(v: bool) -> &'static str {
    if v {
        "1"
    } else {
        "0"
    }
}

pub fn read_rao(path: &Path) -> Result<RaoCurve> {
    let rows = read_rows(path, &["freq_hz", "amplitude"])?;
    let mut freqs = Vec::with_capacity(rows.len());
    let mut amps = Vec::with_capacity(rows.len());
    for r in &rows {
        freqs.push(2.0 * PI * num(path, r, 0)?);
        amps.push(num(path, r, 1)?);
    }
    let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    RaoCurve::new(freqs, amps, label)
}

pub fn write_rao(path: &Path, rao: &RaoCurve) -> Result<()> {
    let mut t = Table::new(&["freq_hz", "amplitude"]);
    for (w, a) in rao.freqs().iter().zip(rao.amplitudes()) {
        t.row([(w / (2.0 * PI)).to_string(), a.to_string()]);
    }
    t.write_to(path)
}

/// All spectra in a file, one per timestamp, sorted by time. Every
/// timestamp must carry the same complete frequency-direction grid.
pub fn read_spectra(path: &Path) -> Result<Vec<DirectionalWaveSpectrum>> {
    let rows = read_rows(path, &["timestamp_utc", "freq_hz", "dir_deg", "density_m2_s_per_deg"])?;
    let mut by_time: BTreeMap<Timestamp, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &rows {
        by_time.entry(time(path, r, 0)?).or_default().push((num(path, r, 1)?, num(path, r, 2)?, num(path, r, 3)?));
    }
    let mut out = Vec::with_capacity(by_time.len());
    let mut grid: Option<(Vec<f64>, Vec<f64>)> = None;
    for (ts, mut cells) in by_time {
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut freqs: Vec<f64> = cells.iter().map(|c| c.0).collect();
        freqs.dedup();
        let mut dirs: Vec<f64> = cells.iter().map(|c| c.1).collect();
        dirs.sort_by(f64::total_cmp);
        dirs.dedup();
        if cells.len() != freqs.len() * dirs.len()
            || cells.iter().enumerate().any(|(k, c)| c.0 != freqs[k / dirs.len()] || c.1 != dirs[k % dirs.len()])
        {
            return Err(Error::parse(path, format!("spectrum at {} is not a complete regular grid", format_time(&ts))));
        }
        match &grid {
            Some(g) if g.0 != freqs || g.1 != dirs => {
                return Err(Error::parse(path, format!("grid at {} differs from earlier timestamps", format_time(&ts))))
            }
            _ => grid = Some((freqs.clone(), dirs.clone())),
        }
        let spec = DirectionalWaveSpectrum::with_default_widths(
            ts,
            freqs.iter().map(|f| 2.0 * PI * f).collect(),
            dirs.iter().map(|d| d.to_radians()).collect(),
            cells.iter().map(|c| c.2 * DENSITY_TO_RAD).collect(),
        )
        .map_err(|e| Error::parse(path, e.to_string()))?;
        out.push(spec);
    }
    Ok(out)
}

pub fn spectra_table(spectra: &[DirectionalWaveSpectrum]) -> Table {
    let mut t = Table::new(&["timestamp_utc", "freq_hz", "dir_deg", "density_m2_s_per_deg"]);
    for s in spectra {
        let ts = format_time(&s.timestamp);
        for (i, w) in s.freqs().iter().enumerate() {
            for (j, d) in s.dirs().iter().enumerate() {
                t.row([
                    ts.clone(),
                    (w / (2.0 * PI)).to_string(),
                    d.to_degrees().to_string(),
                    (s.at(i, j) / DENSITY_TO_RAD).to_string(),
                ]);
            }
        }
    }
    t
}

/// A forecast issue file. All rows must share the issue time.
pub fn read_issue(path: &Path) -> Result<ForecastIssue> {
    let rows = read_rows(path, &["issue_time_utc", "valid_time_utc", "sig_heave_m"])?;
    let first = rows.first().ok_or_else(|| Error::parse(path, "no forecast rows"))?;
    let issue_time = time(path, first, 0)?;
    let mut pairs = Vec::with_capacity(rows.len());
    for r in &rows {
        if time(path, r, 0)? != issue_time {
            return Err(Error::parse(path, format!("line {}: mixed issue times", line_of(r))));
        }
        let lead = time(path, r, 1)? - issue_time;
        if lead < TimeDelta::zero() || lead.num_seconds() % 3600 != 0 || lead.subsec_nanos() != 0 {
            return Err(Error::parse(path, format!("line {}: lead is not a whole number of hours", line_of(r))));
        }
        pairs.push((lead.num_hours() as u32, num(path, r, 2)?));
    }
    pairs.sort_by_key(|p| p.0);
    let (leads, values) = pairs.into_iter().unzip();
    ForecastIssue::new(issue_time, leads, values).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_issue(path: &Path, issue: &ForecastIssue) -> Result<()> {
    let mut t = Table::new(&["issue_time_utc", "valid_time_utc", "sig_heave_m"]);
    let it = format_time(&issue.issue_time);
    for (&lead, v) in issue.leads().iter().zip(issue.values()) {
        t.row([it.clone(), format_time(&(issue.issue_time + TimeDelta::hours(lead as i64))), v.to_string()]);
    }
    t.write_to(path)
}

/// File name used for an issue inside a forecast directory.
pub fn issue_file_name(issue_time: &Timestamp) -> String {
    format!("issue_{}.csv", issue_time.format("%Y%m%dT%H%MZ"))
}

/// Delimited files (`.csv`, `.txt`) in a directory, sorted by name.
pub fn list_data_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "txt")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_records(path: &Path) -> Result<Vec<HeaveRecord>> {
    read_rows(path, &["timestamp_utc", "sig_heave_m", "valid"])?
        .iter()
        .map(|r| {
            Ok(HeaveRecord { timestamp: time(path, r, 0)?, sig_heave: num(path, r, 1)?, valid: flag(path, r, 2)? })
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[HeaveRecord]) -> Result<()> {
    let mut t = Table::new(&["timestamp_utc", "sig_heave_m", "valid"]);
    for r in records {
        t.row([format_time(&r.timestamp), r.sig_heave.to_string(), b(r.valid).to_string()]);
    }
    t.write_to(path)
}

/// Uniformly sampled heave displacement. Non-finite values become gaps.
pub fn read_raw_motion(path: &Path) -> Result<RawMotionSeries> {
    let rows = read_rows(path, &["timestamp_utc", "heave_m"])?;
    if rows.len() < 2 {
        return Err(Error::parse(path, "need at least two samples"));
    }
    let times: Vec<Timestamp> = rows.iter().map(|r| time(path, r, 0)).collect::<Result<_>>()?;
    let dt = times[1] - times[0];
    if dt <= TimeDelta::zero() || times.windows(2).any(|w| w[1] - w[0] != dt) {
        return Err(Error::parse(path, "samples must be uniformly spaced in time"));
    }
    let values: Vec<f64> =
        rows.iter().map(|r| field(path, r, 1).map(|s| s.parse::<f64>().unwrap_or(f64::NAN))).collect::<Result<_>>()?;
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i].is_finite() {
            i += 1;
            continue;
        }
        let s = i;
        while i < values.len() && !values[i].is_finite() {
            i += 1;
        }
        gaps.push(s..i);
    }
    let rate = 1.0 / (dt.num_nanoseconds().unwrap_or(i64::MAX) as f64 * 1e-9);
    let values = values.into_iter().map(|v| if v.is_finite() { v } else { 0.0 }).collect();
    RawMotionSeries::with_gaps(times[0], rate, values, gaps)
}

pub fn read_qa_events(path: &Path) -> Result<Vec<QaEvent>> {
    read_rows(path, &["start_utc", "end_utc", "reason"])?
        .iter()
        .map(|r| {
            Ok(QaEvent { start: time(path, r, 0)?, end: time(path, r, 1)?, reason: field(path, r, 2)?.to_string() })
        })
        .collect()
}

pub fn read_dataset(path: &Path, horizon: u32) -> Result<HorizonDataset> {
    let rows = read_rows(path, &["valid_time_utc", "x_m", "y_m", "issue_time_utc", "post_gap_flag"])?
        .iter()
        .map(|r| {
            Ok(HorizonRow {
                valid_time: time(path, r, 0)?,
                x: num(path, r, 1)?,
                y: num(path, r, 2)?,
                issue_time: time(path, r, 3)?,
                post_gap: flag(path, r, 4)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    HorizonDataset::new(horizon, rows).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_dataset(path: &Path, ds: &HorizonDataset) -> Result<()> {
    let mut t = Table::new(&["valid_time_utc", "x_m", "y_m", "issue_time_utc", "post_gap_flag"]);
    for r in &ds.rows {
        t.row([
            format_time(&r.valid_time),
            r.x.to_string(),
            r.y.to_string(),
            format_time(&r.issue_time),
            b(r.post_gap).to_string(),
        ]);
    }
    t.write_to(path)
}

/// Sidecar of a posterior file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMeta {
    pub model: ModelKind,
    pub horizon: u32,
    pub seed: u64,
    pub n_train: usize,
    pub acceptance_rate: f64,
    pub map_sigma: Option<f64>,
    pub diagnostics: Vec<ParamDiagnostics>,
}

/// Draws as `chain, <params...>` plus a TOML sidecar at `<path>.toml`.
pub fn write_posterior(path: &Path, samples: &PosteriorSamples, meta: &PosteriorMeta) -> Result<()> {
    let mut header = vec!["chain"];
    header.extend_from_slice(samples.param_names());
    let mut t = Table::new(&header);
    for i in 0..samples.n_draws() {
        let mut fields = vec![samples.chain_ids()[i].to_string()];
        fields.extend(samples.row(i).iter().map(f64::to_string));
        t.row(fields);
    }
    t.write_to(path)?;
    let text = toml::to_string(meta).map_err(|e| Error::InvalidInput(format!("serializing diagnostics: {e}")))?;
    atomic_write(&sidecar_path(path), text.as_bytes())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

pub fn read_posterior(path: &Path) -> Result<(PosteriorSamples, PosteriorMeta)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: PosteriorMeta = toml::from_str(&text).map_err(|e| Error::parse(&side, e.to_string()))?;
    let mut header = vec!["chain"];
    header.extend_from_slice(meta.model.param_names());
    let records = read_rows(path, &header)?;
    let mut rows = Vec::with_capacity(records.len());
    let mut chains = Vec::with_capacity(records.len());
    for r in &records {
        chains.push(
            field(path, r, 0)?
                .parse::<usize>()
                .map_err(|_| Error::parse(path, format!("line {}: bad chain id", line_of(r))))?,
        );
        rows.push((1..header.len()).map(|i| num(path, r, i)).collect::<Result<Vec<_>>>()?);
    }
    let samples = PosteriorSamples::from_draws(meta.model, meta.horizon, rows, chains, meta.acceptance_rate)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    Ok((samples, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(h: i64) -> Timestamp {
        chrono::Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap() + TimeDelta::hours(h)
    }

    #[test]
    fn spectra_round_trip_units() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(
            &path,
            "timestamp_utc,freq_hz,dir_deg,density_m2_s_per_deg\n\
             2024-03-01T00:00:00Z,0.1,0,1.0\n2024-03-01T00:00:00Z,0.1,180,2.0\n\
             2024-03-01T00:00:00Z,0.2,0,3.0\n2024-03-01T00:00:00Z,0.2,180,4.0\n",
        )
        .unwrap();
        let s = read_spectra(&path).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].freqs()[1] - 0.4 * PI).abs() < 1e-12);
        assert!((s[0].dirs()[1] - PI).abs() < 1e-12);
        assert!((s[0].at(1, 0) - 3.0 * 180.0 / (2.0 * PI * PI)).abs() < 1e-12);
        spectra_table(&s).write_to(&path).unwrap();
        let again = read_spectra(&path).unwrap();
        for (a, b) in again[0].density().iter().zip(s[0].density()) {
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn incomplete_grid_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(
            &path,
            "timestamp_utc,freq_hz,dir_deg,density_m2_s_per_deg\n\
             2024-03-01T00:00:00Z,0.1,0,1.0\n2024-03-01T00:00:00Z,0.1,180,2.0\n\
             2024-03-01T00:00:00Z,0.2,0,3.0\n",
        )
        .unwrap();
        assert!(matches!(read_spectra(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn issue_and_dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let issue = ForecastIssue::new(t(6), vec![0, 1, 2], vec![1.0, 1.5, 0.25]).unwrap();
        let p = dir.path().join(issue_file_name(&issue.issue_time));
        write_issue(&p, &issue).unwrap();
        assert_eq!(read_issue(&p).unwrap(), issue);

        let rows = vec![
            HorizonRow { valid_time: t(0), x: 1.0, y: 1.1, issue_time: t(0), post_gap: false },
            HorizonRow { valid_time: t(2), x: 0.5, y: 0.7, issue_time: t(0), post_gap: true },
        ];
        let ds = HorizonDataset::new(0, rows).unwrap();
        let p = dir.path().join("d.csv");
        write_dataset(&p, &ds).unwrap();
        assert_eq!(read_dataset(&p, 0).unwrap(), ds);
    }

    #[test]
    fn wrong_header_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "freq,amp\n0.1,1\n").unwrap();
        assert!(matches!(read_rao(&p), Err(Error::Parse { .. })));
        assert!(matches!(read_rao(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn raw_motion_gaps_from_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(
            &p,
            "timestamp_utc,heave_m\n2024-03-01T00:00:00Z,0.1\n2024-03-01T00:00:01Z,\n\
             2024-03-01T00:00:02Z,nan\n2024-03-01T00:00:03Z,0.2\n",
        )
        .unwrap();
        let s = read_raw_motion(&p).unwrap();
        assert_eq!(s.sample_rate, 1.0);
        assert_eq!(s.gaps(), &[1..3]);
    }
}
