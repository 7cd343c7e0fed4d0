//! Command-line front end: parses flags and config files into a
//! [`config::RunConfig`], runs the subcommand on a sized thread pool and
//! writes the resulting tables.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ALL_DIVERGED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] qcmap_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Core(qcmap_core::Error::InvalidParameter { .. }) => EXIT_CONFIG,
            CliError::Core(qcmap_core::Error::AllDiverged { .. }) => EXIT_ALL_DIVERGED,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcmap", version, about = "Quasiclassical long-time limits and trajectory ensembles for two-level systems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Quadrature predictions of the long-time limit.
    Predict(Flags),
    /// Trajectory ensembles of C_Iz(t).
    Simulate(Flags),
    /// Predictions over a bias grid (default 0:20:21).
    SweepEps(Flags),
    /// Predictions over a coupling grid on the anharmonic model.
    SweepAlpha(Flags),
    /// MASH S_z histogram at time t.
    Histogram(Flags),
    /// High- and low-temperature limit factors of every method.
    Table1(Flags),
    /// MASH microscopic-reversibility error.
    Mre(Flags),
    /// Diabatic and adiabatic potential curves.
    Potentials(Flags),
}

/// Every flag is forwarded as a `key=value` pair to the config parser.
#[derive(Debug, Args)]
struct Flags {
    /// Config file: key=value lines or a JSON object with the same keys.
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    /// spin-boson or anharmonic.
    #[arg(long, allow_hyphen_values = true)]
    model: Option<String>,
    /// Comma-separated methods; `exact` for the benchmark, `all` for everything.
    #[arg(long, visible_alias = "methods", allow_hyphen_values = true)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// A value or a start:stop:count grid.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    /// A value or a start:stop:count grid.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    xbar: Option<String>,
    /// Friction; defaults to 2*omega.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ntraj: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Worker threads; falls back to QCMAP_THREADS, then all cores.
    #[arg(long, allow_hyphen_values = true)]
    threads: Option<String>,
    /// Spacing of recorded times.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Histogram bins (even).
    #[arg(long, allow_hyphen_values = true)]
    bins: Option<String>,
    /// Histogram time; defaults to tmax.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Output path; stdout if absent.
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// csv or json.
    #[arg(long, allow_hyphen_values = true)]
    format: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("model", &self.model),
            ("methods", &self.method),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("eps", &self.eps),
            ("alpha", &self.alpha),
            ("omega", &self.omega),
            ("xbar", &self.xbar),
            ("eta", &self.eta),
            ("ntraj", &self.ntraj),
            ("dt", &self.dt),
            ("tmax", &self.tmax),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("interval", &self.interval),
            ("bins", &self.bins),
            ("t", &self.t),
            ("out", &self.out),
            ("format", &self.format),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

/// Builds the run configuration: defaults, then the config file, then flags.
/// Clap usage errors (including `--help`) are returned as `Err`.
pub fn parse_config<I, T>(args: I) -> Result<std::result::Result<RunConfig, CliError>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (command, flags) = match cli.command {
        Sub::Predict(f) => (Command::Predict, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::SweepEps(f) => (Command::SweepEps, f),
        Sub::SweepAlpha(f) => (Command::SweepAlpha, f),
        Sub::Histogram(f) => (Command::Histogram, f),
        Sub::Table1(f) => (Command::Table1, f),
        Sub::Mre(f) => (Command::Mre, f),
        Sub::Potentials(f) => (Command::Potentials, f),
    };
    Ok(build(command, &flags))
}

fn build(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        let pairs = config::parse_file_text(&text)?;
        cfg.apply_all(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    cfg.apply_all(flags.pairs())?;
    if cfg.threads.is_none() {
        if let Ok(v) = std::env::var("QCMAP_THREADS") {
            cfg.set("threads", &v).map_err(|_| CliError::Config {
                key: "QCMAP_THREADS".into(),
                reason: format!("`{v}` is not a thread count"),
            })?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the subcommand on a pool of `cfg.threads` workers and writes output.
pub fn run_config(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config {
        key: "threads".into(),
        reason: e.to_string(),
    })?;
    let tables = pool.install(|| commands::execute(cfg))?;
    output::write_output(&tables, cfg.format, cfg.out.as_deref())
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
        Ok(Err(e)) => {
            eprintln!("qcmap: {e}");
            return ExitCode::from(e.exit_code());
        }
        Ok(Ok(cfg)) => cfg,
    };
    match run_config(&cfg) {
        Ok(written) => {
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qcmap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
