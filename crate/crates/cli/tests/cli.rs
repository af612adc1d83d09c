use std::path::Path;
use std::process::{Command, Output};

use heave_forecast::io;
use heave_forecast::pipeline::{self, response_table, RunManifest};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heave-forecast")).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

fn small_campaign(dir: &Path) -> String {
    let manifest = dir.join("run.toml");
    write(
        &manifest,
        r#"out_dir = "out"
seed = 5
horizons = [6, 24]

[inputs]
rao = "inputs/rao.csv"
forecast_dir = "inputs/forecasts"
measurements = "inputs/measurements.csv"
spectra = "inputs/spectra.csv"

[simulate]
days = 30
spectra_hours = 12
"#,
    );
    manifest.to_string_lossy().into_owned()
}

#[test]
fn empty_spectra_dir_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("spectra")).unwrap();
    write(&dir.path().join("rao.csv"), "freq_hz,amplitude\n0.05,1\n0.2,1\n");
    let manifest = dir.path().join("m.toml");
    write(&manifest, "[inputs]\nrao = \"rao.csv\"\nspectra = \"spectra\"\n");
    let out = run(&["response", "-m", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no spectra"));
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    write(&manifest, "[inputs]\nrao = \"nope.csv\"\nspectra = \"nope\"\n");
    assert_eq!(run(&["response", "-m", manifest.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_manifest_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    write(&manifest, "horizonz = [1]\n");
    let out = run(&["build", "-m", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unit_rao_single_bin_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("rao.csv"), "freq_hz,amplitude\n0.1,1\n0.2,1\n");
    // 1/36 m²/(Hz·deg) over 360° and a 0.1 Hz bin gives m0 = 1 m², so 2 m.
    write(
        &dir.path().join("spectra/a.csv"),
        "timestamp_utc,freq_hz,dir_deg,density_m2_s_per_deg\n\
         2024-01-01T00:00:00Z,0.1,0,0.027777777777777776\n\
         2024-01-01T00:00:00Z,0.2,0,0\n",
    );
    let manifest = dir.path().join("m.toml");
    write(&manifest, "[inputs]\nrao = \"rao.csv\"\nspectra = \"spectra\"\n");
    let out = run(&["response", "-m", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/response.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let sig: f64 = row[3].parse().unwrap();
    assert!((sig - 2.0).abs() < 1e-12, "{sig}");
}

#[test]
fn full_pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_campaign(dir.path());
    for cmd in ["simulate", "build", "fit", "predict", "score", "diagnose", "response"] {
        let out = run(&[cmd, "-m", &manifest, "--threads", "2"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out_dir = dir.path().join("out");
    let scores = std::fs::read_to_string(out_dir.join("scores.txt")).unwrap();
    assert!(scores.contains("RMSE") && scores.contains("hybrid") && scores.contains("raw"));
    assert!(out_dir.join("predict/hybrid_h024.csv").exists());
    assert!(out_dir.join("diagnostics/hybrid_h006_pacf.csv").exists());
    assert!(out_dir.join("diagnostics/hybrid_h024_hetero.csv").exists());

    // Response file equals the library result on the same inputs.
    let m = RunManifest::load(Path::new(&manifest)).unwrap();
    let spectra = io::read_spectra(m.inputs.spectra.as_ref().unwrap()).unwrap();
    let rao = io::read_rao(m.inputs.rao.as_ref().unwrap()).unwrap();
    let direct = response_table(&spectra, &rao).unwrap().into_bytes();
    assert_eq!(spectra.len(), 12);
    assert_eq!(std::fs::read(out_dir.join("response.csv")).unwrap(), direct);

    // Library run into a second directory reproduces every file.
    let lib_out = dir.path().join("lib");
    let m = RunManifest { out_dir: lib_out.clone(), ..m };
    pipeline::cmd_build(&m).unwrap();
    pipeline::cmd_fit(&m).unwrap();
    pipeline::cmd_predict(&m).unwrap();
    pipeline::cmd_score(&m, false).unwrap();
    for rel in [
        "datasets/h024.csv",
        "posterior/hybrid_h006.csv",
        "posterior/hybrid_h006.csv.toml",
        "predict/hybrid_h024.csv",
        "scores.csv",
    ] {
        assert_eq!(std::fs::read(out_dir.join(rel)).unwrap(), std::fs::read(lib_out.join(rel)).unwrap(), "{rel}");
    }

    // Flag overrides.
    let out = run(&["score", "-m", &manifest, "--mse", "--horizon", "24", "--out", lib_out.to_str().unwrap()]);
    assert!(out.status.success());
    let scores = std::fs::read_to_string(lib_out.join("scores.csv")).unwrap();
    assert!(scores.starts_with("horizon,model,mse_m2,crps_m,n"));
    assert_eq!(scores.lines().count(), 3);

    let out = run(&["fit", "-m", &manifest, "--model", "basic", "--horizon", "6", "--seed", "9"]);
    assert!(out.status.success());
    assert!(out_dir.join("posterior/basic_h006.csv").exists());
}

#[test]
fn convergence_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_campaign(dir.path());
    for cmd in ["simulate", "build"] {
        assert!(run(&[cmd, "-m", &manifest]).status.success());
    }
    let strict = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(&manifest).unwrap()
        + "\n[sampler]\nwarmup_draws = 200\nretained_draws = 100\nthin = 1\nmin_draws = 100\nrhat_limit = 1.000001\n";
    write(&strict, &text);
    let out = run(&["fit", "-m", strict.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn raw_motion_needs_a_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_campaign(dir.path());
    assert!(run(&["simulate", "-m", &manifest]).status.success());
    let mut raw = String::from("timestamp_utc,heave_m\n");
    for i in 0..60 {
        raw += &format!("2023-01-01T00:00:{i:02}Z,0\n");
    }
    write(&dir.path().join("raw.csv"), &raw);
    let text = std::fs::read_to_string(&manifest)
        .unwrap()
        .replace("measurements = \"inputs/measurements.csv\"", "raw_motion = \"raw.csv\"");
    let m2 = dir.path().join("raw.toml");
    write(&m2, &text);
    let out = run(&["build", "-m", m2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cutoff_hz"));
}
