//! `symlab <experiment> [--config PATH|-] [--seed N] [--threads N] [--out DIR]`
//!
//! Exit codes: 0 success, 1 output not writable, 2 config or usage error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use symlab_core::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::{harness, io};

#[derive(Parser, Debug)]
#[command(name = "symlab", version, about = "Symplectic dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral class of each matrix.
    Classify(RunArgs),
    /// Periodic orbit search and census.
    Orbits(RunArgs),
    /// Separated-set entropy estimate.
    Entropy(RunArgs),
    /// Snake horseshoe family and the closing inequality.
    Snake(RunArgs),
    /// Signature table over map cells.
    Scan(RunArgs),
    /// Cocycle diagonalization runs.
    Diagonalize(RunArgs),
    /// Entropy against the periodic-orbit statistic.
    Inequality(RunArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Config file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    config: String,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Classify(a) => (Experiment::Classify, a),
            Command::Orbits(a) => (Experiment::Orbits, a),
            Command::Entropy(a) => (Experiment::Entropy, a),
            Command::Snake(a) => (Experiment::Snake, a),
            Command::Scan(a) => (Experiment::Scan, a),
            Command::Diagonalize(a) => (Experiment::Diagonalize, a),
            Command::Inequality(a) => (Experiment::Inequality, a),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("cannot write outputs: {0}")]
    Output(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Output(_) => 1,
        }
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    experiment: &'static str,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

fn json<T: Serialize>(cfg: &ExperimentConfig, body: &T) -> String {
    io::to_json(&Tagged { experiment: cfg.experiment.name(), seed: cfg.seed, body })
}

#[derive(Serialize)]
struct Rows<'a, T: Serialize> {
    rows: &'a [T],
}

/// Runs one experiment and returns the output files as `(name, contents)`.
pub fn execute(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<(String, String)>, RunError> {
    let pool = harness::pool(threads)?;
    let map = || cfg.map.as_ref().ok_or_else(|| ConfigError::Invalid("missing map".into()));
    let files = match cfg.experiment {
        Experiment::Classify => {
            let rows = harness::run_classify(&cfg.matrices)?;
            vec![("classify.csv".into(), io::classify_csv(&rows)), ("classify.json".into(), json(cfg, &Rows { rows: &rows }))]
        }
        Experiment::Orbits => {
            let o = &cfg.orbits;
            let rep = harness::run_orbits(map()?, o.max_period, &o.search, o.probe_per_axis, &pool)?;
            vec![("orbits.csv".into(), io::orbits_csv(&rep)), ("orbits.json".into(), json(cfg, &rep))]
        }
        Experiment::Entropy => {
            let m = map()?;
            let rep = harness::estimate_entropy(m, &cfg.entropy, cfg.seed, &pool)?;
            let exact = m.toral_matrix().map(|a| harness::exact_check(&a)).transpose()?;
            #[derive(Serialize)]
            struct Out<'a> {
                map: String,
                report: &'a symlab_core::entropy::EntropyReport,
                exact: Option<harness::ExactCheck>,
            }
            vec![
                ("entropy.csv".into(), io::entropy_csv(&rep)),
                ("entropy.dat".into(), io::entropy_dat(&rep)),
                ("entropy.json".into(), json(cfg, &Out { map: m.label(), report: &rep, exact })),
            ]
        }
        Experiment::Snake => {
            let rep = harness::run_snake_family(&cfg.snake, &pool)?;
            vec![
                ("snake.csv".into(), io::snake_csv(&rep)),
                ("snake_scan.dat".into(), io::snake_scan_dat(&rep)),
                ("snake.json".into(), json(cfg, &rep)),
            ]
        }
        Experiment::Scan => {
            let cells = harness::run_trichotomy_scan(&cfg.scan, &pool)?;
            vec![("scan.csv".into(), io::scan_csv(&cells)), ("scan.json".into(), json(cfg, &Rows { rows: &cells }))]
        }
        Experiment::Diagonalize => {
            let rows = harness::run_diagonalize(&cfg.diagonalize, cfg.seed, &pool)?;
            vec![
                ("diagonalize.csv".into(), io::diagonalize_csv(&rows, cfg.diagonalize.eps)),
                ("diagonalize.json".into(), json(cfg, &Rows { rows: &rows })),
            ]
        }
        Experiment::Inequality => {
            let rep = harness::run_inequality(
                map()?,
                &cfg.inequality,
                &cfg.orbits.search,
                &cfg.entropy,
                cfg.seed,
                cfg.scan.max_l,
                &pool,
            )?;
            vec![("inequality.csv".into(), io::inequality_csv(&rep)), ("inequality.json".into(), json(cfg, &rep))]
        }
    };
    Ok(files)
}

fn load(experiment: Experiment, args: &RunArgs, stdin: &mut dyn Read) -> Result<ExperimentConfig, ConfigError> {
    let mut text = String::new();
    if args.config == "-" {
        stdin.read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(&args.config)?;
    }
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if cfg.experiment != experiment {
        return Err(ConfigError::Invalid(format!(
            "config is for '{}' but the subcommand is '{}'",
            cfg.experiment.name(),
            experiment.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// Parses `argv`, runs the experiment and writes its files. Returns the
/// process exit code.
pub fn run<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (experiment, args) = cli.command.split();
    let result = load(experiment, &args, stdin).map_err(RunError::from).and_then(|cfg| {
        let files = execute(&cfg, args.threads)?;
        io::write_files(&cfg.output.dir, &files).map_err(RunError::Output)?;
        Ok((cfg.output.dir, files))
    });
    match result {
        Ok((dir, files)) => {
            for (name, _) in &files {
                let _ = writeln!(stdout, "{}", dir.join(name).display());
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "symlab: {e}");
            e.exit_code()
        }
    }
}
