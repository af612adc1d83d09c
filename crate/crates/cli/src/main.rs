use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heave_forecast::model::ModelKind;
use heave_forecast::pipeline::{self, Report, RunManifest};
use heave_forecast::{Error, Result};

/// Probabilistic significant-heave forecasts from wave spectra and motion records.
#[derive(Parser)]
#[command(name = "heave-forecast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Significant heave from wave spectra through the RAO.
    Response(Common),
    /// Per-horizon datasets from forecast issues and measurements.
    Build(Common),
    /// Posterior samples per horizon.
    Fit(Common),
    /// Out-of-sample predictive quantiles on the test split.
    Predict(Common),
    /// RMSE and CRPS of raw and model forecasts.
    Score {
        #[command(flatten)]
        common: Common,
        /// Report mean squared error instead of RMSE.
        #[arg(long)]
        mse: bool,
    },
    /// Residual PACF and heteroskedasticity summaries.
    Diagnose(Common),
    /// Write a synthetic campaign to the manifest's input paths.
    Simulate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Basic,
    Hybrid,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Basic => ModelKind::Basic,
            ModelArg::Hybrid => ModelKind::Hybrid,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Run manifest (TOML).
    #[arg(long, short)]
    manifest: PathBuf,
    /// Horizons in hours; replaces the manifest list.
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<u32>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for chains and horizons (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; replaces the manifest value.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn manifest(&self) -> Result<RunManifest> {
        let mut m = RunManifest::load(&self.manifest)?;
        if !self.horizon.is_empty() {
            m.horizons = self.horizon.clone();
        }
        if let Some(k) = self.model {
            m.model = k.into();
        }
        if let Some(s) = self.seed {
            m.seed = s;
        }
        if let Some(o) = &self.out {
            m.out_dir = o.clone();
        }
        m.validate()?;
        Ok(m)
    }
}

fn run(cli: Cli) -> Result<Report> {
    let (common, squared) = match &cli.command {
        Command::Score { common, mse } => (common, *mse),
        Command::Response(c)
        | Command::Build(c)
        | Command::Fit(c)
        | Command::Predict(c)
        | Command::Diagnose(c)
        | Command::Simulate(c) => (c, false),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Parameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let m = common.manifest()?;
    match cli.command {
        Command::Response(_) => pipeline::cmd_response(&m),
        Command::Build(_) => pipeline::cmd_build(&m),
        Command::Fit(_) => pipeline::cmd_fit(&m),
        Command::Predict(_) => pipeline::cmd_predict(&m),
        Command::Score { .. } => pipeline::cmd_score(&m, squared),
        Command::Diagnose(_) => pipeline::cmd_diagnose(&m),
        Command::Simulate(_) => pipeline::cmd_simulate(&m),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for msg in &report.messages {
                println!("{}", msg.trim_end());
            }
            for path in &report.written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
