//! Command line driver.
//!
//! Every flag can also be given through the environment variable named
//! `HYPERAFW_` followed by the upper-case flag name (`HYPERAFW_CONFIG`,
//! `HYPERAFW_OUT`, `HYPERAFW_THREADS`, `HYPERAFW_DETERMINISTIC`). Flags take
//! precedence over the environment, which takes precedence over the file.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

use crate::adaptivity::{run_adaptive, RunLog};
use crate::Error;
use config::{Mode, RunConfig};

pub const DEFAULT_OUTPUT: &str = "hyperafw-out";

#[derive(Parser, Debug, Clone)]
#[command(name = "hyperafw", version, about = "Adaptive P2 solver with equilibrated stress reconstructions and guaranteed error bounds")]
pub struct Args {
    /// Run configuration (TOML).
    #[arg(long, env = "HYPERAFW_CONFIG")]
    pub config: PathBuf,
    /// Output directory, overriding the `output` key.
    #[arg(long, env = "HYPERAFW_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads, overriding the `threads` key.
    #[arg(long, env = "HYPERAFW_THREADS")]
    pub threads: Option<usize>,
    /// Fixed thread count (one unless given) for bit-reproducible runs.
    #[arg(long, env = "HYPERAFW_DETERMINISTIC")]
    pub deterministic: bool,
}

/// The logs of a finished study, one per run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub runs: Vec<(String, RunLog)>,
    pub output: PathBuf,
}

/// Parses `argv`, runs the study and returns the process exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&args) {
        Ok(outcome) => {
            println!("results written to {}", outcome.output.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads and validates the configuration, then runs it. Nothing is written
/// unless the configuration is valid.
pub fn run(args: &Args) -> Result<Outcome, Error> {
    let mut config = RunConfig::load(&args.config)?;
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    config.deterministic |= args.deterministic;
    config.validate()?;
    let output = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let threads = match (config.threads, config.deterministic) {
        (Some(n), _) => Some(n),
        (None, true) => Some(1),
        (None, false) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start {threads:?} threads: {e}")))?;
    std::fs::create_dir_all(&output)?;
    let runs = pool.install(|| execute(&config, &output))?;
    Ok(Outcome { runs, output })
}

fn execute(config: &RunConfig, output: &Path) -> Result<Vec<(String, RunLog)>, Error> {
    let start = Instant::now();
    let setup = config.setup()?;
    let runs = config.runs();
    let mut logs = Vec::new();
    for (name, adaptive) in &runs {
        let dir = if runs.len() > 1 { output.join(name) } else { output.to_path_buf() };
        let vtk_dir = dir.join("vtk");
        if config.vtk {
            std::fs::create_dir_all(&vtk_dir)?;
        } else {
            std::fs::create_dir_all(&dir)?;
        }
        let mut log = RunLog::default();
        let result = run_adaptive(&setup, adaptive, &mut log, |snapshot| {
            if config.vtk {
                let path = vtk_dir.join(format!("mesh_{:03}.vtk", snapshot.mesh_loop));
                std::fs::write(path, output::snapshot_vtk(snapshot))?;
            }
            Ok(())
        });
        output::write_csv(&dir.join("run.csv"), &log)?;
        if let Err(e) = result {
            if e.exit_code() == 4 {
                let dump = format!("{e}\n\n{e:?}\n\nwarnings: {:#?}\n\n{}", log.warnings, output::mesh_table(&log));
                std::fs::write(dir.join("diagnostic.txt"), dump)?;
            }
            return Err(e);
        }
        logs.push((name.to_string(), log));
    }
    if config.mode == Mode::CompareStopping {
        output::write_newton_counts(&output.join("newton_counts.csv"), &logs[0].1, &logs[1].1)?;
    }
    std::fs::write(output.join("summary.txt"), summary(config, &setup, &logs, start.elapsed().as_secs_f64()))?;
    Ok(logs)
}

fn summary(config: &RunConfig, setup: &crate::adaptivity::Setup, logs: &[(String, RunLog)], seconds: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode: {:?}", config.mode);
    let _ = writeln!(s, "case: {:?}", config.case);
    let _ = writeln!(s, "law: {:?}", setup.law);
    let _ = writeln!(s, "initial mesh size: {}", setup.initial_h);
    let _ = writeln!(s, "wall time: {seconds:.2} s");
    for (name, log) in logs {
        let _ = writeln!(s, "\n[{name}]");
        s.push_str(&output::mesh_table(log));
        let finals = log.final_records();
        let ieff: Vec<f64> = finals.iter().filter_map(|r| r.ieff).collect();
        if !ieff.is_empty() {
            let lo = ieff.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ieff.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(s, "effectivity range: [{lo:.4}, {hi:.4}]");
        }
        if !log.warnings.is_empty() {
            let _ = writeln!(s, "warnings:");
            for w in &log.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
    }
    s
}
