//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) and then asserts the verdict.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chrono::{TimeDelta, TimeZone, Utc};
use heave_forecast::dataset::{
    chrono_split, synthesize_horizon_series, ForecastIssue, HorizonDataset, HorizonRow, IssueCycle, IssueSchedule,
    DEFAULT_HORIZONS,
};
use heave_forecast::diagnostics::{pacf, standardized_residuals};
use heave_forecast::io;
use heave_forecast::model::{
    fit, posterior_predictive, residuals, ModelKind, ModelSpec, Params, PosteriorSamples, PredictiveOptions,
    SamplerConfig,
};
use heave_forecast::motion::{highpass_filter, RawMotionSeries};
use heave_forecast::pipeline::{self, RunManifest};
use heave_forecast::scoring::{crps_gaussian, crps_samples, score_table, Forecast};
use heave_forecast::spectral::{
    interpolate_spectrum_to_rao_grid, morison_rao, spectral_moment, DirectionalWaveSpectrum, ExcitationRatio,
    MorisonRaoParams, RaoCurve,
};
use heave_forecast::synthetic::generate_observations;
use heave_forecast::Timestamp;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn verdict(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {tag}: {title} ({detail})");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn t0() -> Timestamp {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn increasing_grid(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Direct double sum with interpolation written out per target frequency.
fn brute_force_moment(
    src_f: &[f64],
    dirs_w: &[f64],
    dens: &[f64],
    rao_f: &[f64],
    rao_a: &[f64],
    rao_w: &[f64],
    order: i32,
) -> f64 {
    let nd = dirs_w.len();
    let mut total = 0.0;
    for (k, &w) in rao_f.iter().enumerate() {
        for (j, &dth) in dirs_w.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..src_f.len() - 1 {
                let (a, b) = (src_f[i], src_f[i + 1]);
                if w >= a && w <= b {
                    let t = (w - a) / (b - a);
                    s = (1.0 - t) * dens[i * nd + j] + t * dens[(i + 1) * nd + j];
                    break;
                }
            }
            total += w.powi(order) * rao_a[k] * rao_a[k] * s * rao_w[k] * dth;
        }
    }
    total
}

#[test]
fn c01_spectral_moment_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let src_f = {
            let n = rng.gen_range(5..40);
            increasing_grid(&mut rng, n, 0.2, 2.0)
        };
        let dirs = {
            let n = rng.gen_range(1..36);
            increasing_grid(&mut rng, n, 0.0, 2.0 * PI - 1e-9)
        };
        let dir_w: Vec<f64> = dirs.iter().map(|_| rng.gen_range(0.05..0.4)).collect();
        let dens: Vec<f64> = (0..src_f.len() * dirs.len()).map(|_| rng.gen_range(0.0..3.0)).collect();
        let src_w = vec![0.05; src_f.len()];
        let spec = DirectionalWaveSpectrum::new(t0(), src_f.clone(), dirs, dens.clone(), src_w, dir_w.clone()).unwrap();

        let rao_f = {
            let n = rng.gen_range(10..120);
            increasing_grid(&mut rng, n, 0.1, 2.5)
        };
        let rao_a: Vec<f64> = rao_f.iter().map(|_| rng.gen_range(0.0..4.0)).collect();
        let rao = RaoCurve::new(rao_f.clone(), rao_a.clone(), "random").unwrap();
        let on_grid = interpolate_spectrum_to_rao_grid(&spec, &rao);
        let rao_w = on_grid.freq_widths().to_vec();
        for order in [0u32, 1, 2, 4] {
            let got = spectral_moment(&on_grid, &rao, order).unwrap();
            let want = brute_force_moment(&src_f, &dir_w, &dens, &rao_f, &rao_a, &rao_w, order as i32);
            worst = worst.max(if want == 0.0 { got.abs() } else { rel_err(got, want) });
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "spectral moment vs brute-force double sum, 100 random grids",
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        &format!("max rel err {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn c02_rao_limits() {
    let omega_r = 2.0 * PI / 20.0;
    let b = 1.06;
    let e = 0.85;
    let p = MorisonRaoParams::new(ExcitationRatio::Constant(e), omega_r, b).unwrap();
    let rao = morison_rao(&p, &[omega_r / 100.0, omega_r]).unwrap();
    let resonance_err = rel_err(rao.amplitudes()[1], e / (b * omega_r));
    let low_err = rel_err(rao.amplitudes()[0], e);
    verdict(
        2,
        "RAO resonance limit to 1e-12 and low-frequency limit to 1e-6 at omega_r/100",
        resonance_err <= 1e-12 && low_err <= 1e-6,
        &format!("resonance rel err {resonance_err:.2e}, low-frequency rel err {low_err:.2e}"),
    );
}

#[test]
fn c03_filter_contract() {
    let fs = 2.0;
    let fc = 0.04;
    let n = 20_000;

    let constant = RawMotionSeries::new(t0(), fs, vec![3.7; n]).unwrap();
    let out = highpass_filter(&constant, fc, 5).unwrap();
    let const_rel = out.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 3.7;

    let sos = heave_forecast::motion::Sos::butterworth_highpass(5, fc, fs).unwrap();
    let gain = sos.response(fc / fs).norm();
    let gain_err = (gain - 1.0 / 2f64.sqrt()).abs() / (1.0 / 2f64.sqrt());

    // A cutoff-frequency sinusoid through the two passes loses half its amplitude.
    let sine: Vec<f64> = (0..n).map(|i| (2.0 * PI * fc * i as f64 / fs).sin()).collect();
    let out = highpass_filter(&RawMotionSeries::new(t0(), fs, sine.clone()).unwrap(), fc, 5).unwrap();
    let mid = n / 4..3 * n / 4;
    let ratio = (out.values[mid.clone()].iter().map(|v| v * v).sum::<f64>()
        / sine[mid].iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let two_pass_err = (ratio - 0.5).abs() / 0.5;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (a, c) = (1.7, -0.3);
    let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + c * v).collect();
    let f = |v: Vec<f64>| highpass_filter(&RawMotionSeries::new(t0(), fs, v).unwrap(), fc, 5).unwrap().values;
    let (fx, fy, fm) = (f(x), f(y), f(mix));
    let lin_err = fm.iter().zip(fx.iter().zip(&fy)).map(|(m, (p, q))| (m - a * p - c * q).abs()).fold(0.0, f64::max);

    verdict(
        3,
        "filter: constant rejection, -3 dB per pass at cutoff, linearity",
        const_rel < 1e-6 && gain_err <= 0.02 && two_pass_err <= 0.02 && lin_err <= 1e-9,
        &format!(
            "constant {const_rel:.1e}, per-pass gain err {:.2}%, two-pass err {:.2}%, linearity {lin_err:.1e}",
            100.0 * gain_err,
            100.0 * two_pass_err
        ),
    );
}

/// `∫ (F(x) - 1{x >= y})² dx` with `F` itself integrated from the density.
fn crps_quadrature(mu: f64, sigma: f64, y: f64) -> f64 {
    let lo = (mu - 12.0 * sigma).min(y - 1.0);
    let hi = (mu + 12.0 * sigma).max(y + 1.0);
    let pdf = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
    let n_seg = 200_000;
    let mut total = 0.0;
    let mut cdf = 0.0;
    for (a, b) in [(lo, y), (y, hi)] {
        let h = (b - a) / n_seg as f64;
        let heaviside = if a >= y { 1.0 } else { 0.0 };
        let mut x = a;
        let mut g_prev = (cdf - heaviside) * (cdf - heaviside);
        for _ in 0..n_seg {
            let x1 = x + h;
            // Simpson increment of the CDF over [x, x1].
            cdf += h / 6.0 * (pdf(x) + 4.0 * pdf(x + 0.5 * h) + pdf(x1));
            let g = (cdf - heaviside) * (cdf - heaviside);
            total += 0.5 * h * (g + g_prev);
            g_prev = g;
            x = x1;
        }
    }
    total
}

#[test]
fn c04_crps_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1.2 + 0.7 * z
        })
        .collect();
    let mc = crps_samples(&draws, 1.9).unwrap();
    let exact = crps_gaussian(1.2, 0.7, 1.9).unwrap();
    let mc_err = rel_err(mc, exact);

    let mut quad_err = 0.0f64;
    for _ in 0..50 {
        let mu = rng.gen_range(-2.0..2.0);
        let sigma = rng.gen_range(0.1..2.0);
        let y = mu + sigma * rng.gen_range(-3.0..3.0);
        quad_err = quad_err.max((crps_gaussian(mu, sigma, y).unwrap() - crps_quadrature(mu, sigma, y)).abs());
    }

    let point_ok = (0..100).all(|_| {
        let (f, y): (f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        Forecast::Point(f).crps(y).unwrap() == (f - y).abs() && crps_samples(&[f], y).unwrap() == (f - y).abs()
    });
    verdict(
        4,
        "CRPS: samples vs closed form, closed form vs quadrature, point mass",
        mc_err < 0.01 && quad_err <= 1e-6 && point_ok,
        &format!(
            "sample rel err {:.3}%, max quadrature err {quad_err:.1e}, point mass exact {point_ok}",
            100.0 * mc_err
        ),
    );
}

/// Positive, persistent forecast series.
fn synthetic_x(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = 0.0;
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            a = 0.95 * a + 0.1 * z;
            0.8 * a.exp()
        })
        .collect()
}

fn dataset(h: u32, x: &[f64], y: &[f64]) -> HorizonDataset {
    let rows = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&x, &y))| HorizonRow {
            valid_time: t0() + TimeDelta::hours(i as i64),
            x,
            y,
            issue_time: t0() + TimeDelta::hours(i as i64 - h as i64),
            post_gap: false,
        })
        .collect();
    HorizonDataset::new(h, rows).unwrap()
}

const TRUE: Params = Params { beta0: 0.05, beta1: 1.3, phi1: 0.6, phi2: 0.2, sigma: 0.1 };

fn interval(s: &PosteriorSamples, name: &str) -> (f64, f64) {
    let mut v = s.column(name).unwrap();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    (q(0.025), q(0.975))
}

#[test]
fn c05_parameter_recovery() {
    let x = synthetic_x(2000, 55);
    let spec = ModelSpec::new(ModelKind::Hybrid, 0);
    let truth = TRUE.to_vec(ModelKind::Hybrid);
    let mut hits = 0;
    let mut slowest = Duration::ZERO;
    let mut details = Vec::new();
    for seed in 1..=3 {
        let y = generate_observations(&x, &TRUE, 0, seed).unwrap();
        let start = Instant::now();
        let post = fit(&dataset(0, &x, &y), &spec, &SamplerConfig::default()).unwrap();
        slowest = slowest.max(start.elapsed());
        let missed: Vec<&str> = ModelKind::Hybrid
            .param_names()
            .iter()
            .zip(&truth)
            .filter(|(n, v)| {
                let (lo, hi) = interval(&post, n);
                !(lo <= **v && **v <= hi)
            })
            .map(|(n, _)| *n)
            .collect();
        if missed.is_empty() {
            hits += 1;
        }
        details.push(format!("seed {seed} missed {missed:?}"));
    }
    verdict(
        5,
        "hybrid 95% intervals contain the true parameters in >= 2 of 3 runs, each fit < 2 min",
        hits >= 2 && slowest < Duration::from_secs(120),
        &format!("{hits}/3 runs, slowest fit {:.1} s; {}", slowest.as_secs_f64(), details.join(", ")),
    );
}

#[test]
fn c06_calibration() {
    let x = synthetic_x(5000, 66);
    let y = generate_observations(&x, &TRUE, 0, 6).unwrap();
    let ds = dataset(0, &x, &y);
    let (train, test) = chrono_split(&ds, 0.8).unwrap();
    let spec = ModelSpec::new(ModelKind::Hybrid, 0);
    let post = fit(&train, &spec, &SamplerConfig::default()).unwrap();
    let pred = posterior_predictive(&post, &train.rows, &test.rows, &spec, &PredictiveOptions::default()).unwrap();
    let inside = pred
        .iter()
        .zip(&test.rows)
        .filter(|(p, r)| p.quantile(0.05).unwrap() <= r.y && r.y <= p.quantile(0.95).unwrap())
        .count();
    let coverage = inside as f64 / test.len() as f64;
    verdict(
        6,
        "out-of-sample [P5, P95] coverage on 1000 test points is 0.90 +/- 0.04",
        test.len() == 1000 && (coverage - 0.90).abs() <= 0.04,
        &format!("coverage {coverage:.3} on {} points", test.len()),
    );
}

#[test]
fn c07_residual_diagnostics() {
    let x = synthetic_x(2000, 77);
    let y = generate_observations(&x, &TRUE, 0, 7).unwrap();
    let ds = dataset(0, &x, &y);

    let basic = fit(&ds, &ModelSpec::new(ModelKind::Basic, 0), &SamplerConfig::default()).unwrap();
    let r = pacf(&residuals(&basic.mean_params(), &ds), 10).unwrap();
    let basic_sig = r.significant_lags();
    let basic_ok = basic_sig.contains(&1) && basic_sig.contains(&2) && basic_sig.iter().all(|&l| l <= 2);

    let spec = ModelSpec::new(ModelKind::Hybrid, 0);
    let hybrid = fit(&ds, &spec, &SamplerConfig::default()).unwrap();
    let z: Vec<f64> =
        standardized_residuals(&hybrid.mean_params(), &ds, &spec).unwrap().into_iter().map(|v| v.1).collect();
    let hybrid_sig = pacf(&z, 20).unwrap().significant_lags();

    verdict(
        7,
        "basic residual PACF significant at lags 1-2 only; hybrid standardized residuals white",
        basic_ok && hybrid_sig.len() <= 1,
        &format!("basic significant lags {basic_sig:?}, hybrid significant lags {hybrid_sig:?}"),
    );
}

fn issue_strategy() -> impl Strategy<Value = (Vec<ForecastIssue>, u32)> {
    (prop::collection::vec((any::<bool>(), 0.1f64..5.0), 8..80), 0u32..=96).prop_map(|(slots, h)| {
        let schedule = IssueSchedule::default();
        let issues = slots
            .iter()
            .enumerate()
            .filter(|(_, (keep, _))| *keep)
            .map(|(k, (_, base))| {
                let t = t0() + TimeDelta::hours(6 * k as i64);
                let cap = schedule.cycles().iter().find(|c| c.hour == chrono::Timelike::hour(&t)).unwrap().max_lead;
                let leads: Vec<u32> = (0..=cap).collect();
                let values = leads.iter().map(|&l| base + l as f64 * 1e-3 + k as f64).collect();
                ForecastIssue::new(t, leads, values).unwrap()
            })
            .collect();
        (issues, h)
    })
}

#[test]
fn c10_horizon_synthesis_properties() {
    let schedule = IssueSchedule::default();
    let cap72: Vec<u32> = schedule.cycles().iter().filter(|c| c.max_lead == 72).map(|c| c.hour).collect();
    let mut runner = TestRunner::new(Config { cases: 512, ..Config::default() });
    let result = runner.run(&issue_strategy(), |(issues, h)| {
        let series = synthesize_horizon_series(&issues, h, &schedule).unwrap();
        for p in &series.points {
            let lead = (p.valid_time - p.issue_time).num_hours();
            // No value uses an issue made later than valid_time - h.
            prop_assert!(lead >= h as i64);
            let issue = issues.iter().find(|i| i.issue_time == p.issue_time).unwrap();
            prop_assert_eq!(issue.value_at(lead as u32), Some(p.x));
            // 06/18Z issues never serve a lead beyond 72 h.
            if cap72.contains(&chrono::Timelike::hour(&p.issue_time)) {
                prop_assert!(lead <= 72);
            }
            // The serving issue is the latest one allowed to serve this valid time.
            let later_ok = issues.iter().any(|i| {
                i.issue_time > p.issue_time
                    && (p.valid_time - i.issue_time).num_hours() >= h as i64
                    && schedule.eligible(h).iter().any(|c| c.hour == chrono::Timelike::hour(&i.issue_time))
            });
            prop_assert!(!later_ok);
        }
        let mut times: Vec<_> = series.points.iter().map(|p| p.valid_time).collect();
        times.dedup();
        prop_assert_eq!(times.len(), series.points.len());
        Ok(())
    });
    let extended =
        IssueSchedule::new(vec![IssueCycle { hour: 0, max_lead: 120 }, IssueCycle { hour: 12, max_lead: 120 }]);
    verdict(
        10,
        "horizon synthesis: no future leak and the 72 h cap on 06/18Z, randomized issue sets",
        result.is_ok() && extended.is_ok(),
        &match &result {
            Ok(()) => "512 cases".to_string(),
            Err(e) => e.to_string(),
        },
    );
}

fn manifest(out: &Path) -> RunManifest {
    let inputs = out.join("inputs");
    let mut m = RunManifest { out_dir: out.to_path_buf(), seed: 11, ..RunManifest::default() };
    m.inputs.rao = Some(inputs.join("rao.csv"));
    m.inputs.forecast_dir = Some(inputs.join("forecasts"));
    m.inputs.measurements = Some(inputs.join("measurements.csv"));
    m
}

fn run_pipeline(m: &RunManifest) {
    pipeline::cmd_simulate(m).unwrap();
    pipeline::cmd_build(m).unwrap();
    pipeline::cmd_fit(m).unwrap();
    pipeline::cmd_predict(m).unwrap();
    pipeline::cmd_score(m, false).unwrap();
}

/// One full synthetic campaign run shared by the comparative criteria.
fn campaign_run() -> &'static (tempfile::TempDir, RunManifest) {
    static RUN: OnceLock<(tempfile::TempDir, RunManifest)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path());
        run_pipeline(&m);
        (dir, m)
    })
}

#[test]
fn c08_hybrid_beats_raw_forecast() {
    let (_, m) = campaign_run();
    assert_eq!(m.simulate.campaign.bias, 0.8);
    let (sets, _) = pipeline::score_sets(m).unwrap();
    let (rows, _) = score_table(&sets, false).unwrap();
    let get = |h: u32, label: &str| rows.iter().find(|r| r.horizon == h && r.model_label == label).unwrap();
    let mut beats = true;
    let mut margins = Vec::new();
    let mut raw_crps = Vec::new();
    for h in DEFAULT_HORIZONS {
        let (raw, hyb) = (get(h, "raw"), get(h, "hybrid"));
        beats &= hyb.rmse < raw.rmse && hyb.crps_mean < raw.crps_mean;
        margins.push(raw.crps_mean - hyb.crps_mean);
        raw_crps.push(raw.crps_mean);
    }
    let largest_at_0 = margins.iter().skip(1).all(|&m| m < margins[0]);
    let mean = raw_crps.iter().sum::<f64>() / raw_crps.len() as f64;
    let spread = raw_crps.iter().cloned().fold(f64::MIN, f64::max) - raw_crps.iter().cloned().fold(f64::MAX, f64::min);
    let spread_rel = spread / mean;
    verdict(
        8,
        "hybrid beats raw RMSE and CRPS at every horizon, CRPS margin largest at h=0, raw CRPS spread < 10%",
        beats && largest_at_0 && spread_rel < 0.10,
        &format!(
            "beats all {beats}, largest margin at 0 {largest_at_0}, raw CRPS {:?}, spread {:.1}% of mean",
            raw_crps.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            100.0 * spread_rel
        ),
    );
}

#[test]
fn c09_beta1_posterior() {
    let (_, m) = campaign_run();
    let post = |h: u32| io::read_posterior(&m.posterior_path(ModelKind::Hybrid, h)).unwrap().0;
    let mut excl = Vec::new();
    for h in [48, 72, 96] {
        let (lo, hi) = interval(&post(h), "beta1");
        excl.push((h, lo > 1.0 || hi < 1.0, (lo * 1e3).round() / 1e3, (hi * 1e3).round() / 1e3));
    }
    let var = |h: u32| {
        let v = post(h).column("beta1").unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (v0, v96) = (var(0), var(96));
    verdict(
        9,
        "beta1 95% interval excludes 1 for h >= 48; var(beta1) at h=0 exceeds h=96",
        excl.iter().all(|e| e.1) && v0 > v96,
        &format!("intervals {excl:?}, var h0 {v0:.2e}, var h96 {v96:.2e}"),
    );
}

fn output_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn c11_pipeline_determinism() {
    let (dir_a, _) = campaign_run();
    let dir_b = tempfile::tempdir().unwrap();
    run_pipeline(&manifest(dir_b.path()));
    let files_a = output_files(dir_a.path());
    let files_b = output_files(dir_b.path());
    let differing: Vec<&PathBuf> = files_a
        .iter()
        .filter(|f| std::fs::read(dir_a.path().join(f)).ok() != std::fs::read(dir_b.path().join(f)).ok())
        .collect();
    verdict(
        11,
        "simulate, build, fit, predict, score bit-identical across two runs",
        files_a == files_b && differing.is_empty() && !files_a.is_empty(),
        &format!("{} files compared, {} differ", files_a.len(), differing.len()),
    );
}
