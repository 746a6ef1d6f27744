//! Command-line front end for the `swiftagg` binary.
//!
//! Exit codes: 0 on success, 1 when a verification suite fails or output
//! cannot be written, 2 when a config or sweep spec is rejected.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::report::ratio_f64;
use crate::harness::{simulate, simulate_full, suites, RunConfig, RunReport};

pub const EXIT_SUITE_FAILURE: u8 = 1;
pub const EXIT_CONFIG_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "swiftagg", version, about = "Secure aggregation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Replaces the seed of the run config or the sweep's base config.
    #[arg(long, global = true, env = "SWIFTAGG_SEED")]
    pub seed: Option<u64>,
    /// Output directory for reports, transcripts and sweep tables.
    #[arg(long, global = true, env = "SWIFTAGG_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one round from a JSON run config.
    Run { config: PathBuf },
    /// Sweep K over a base config and write a CSV table.
    Sweep { spec: PathBuf },
    /// Run one of the fixed verification suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Correctness,
    Privacy,
    Formulas,
    Examples,
}

/// JSON document accepted by `swiftagg sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub k_values: Vec<usize>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// CSV destination; `--out` takes precedence, stdout when neither is set.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

/// One line of the sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    #[serde(rename = "R_server")]
    pub r_server: f64,
    #[serde(rename = "R_user_max")]
    pub r_user_max: f64,
    #[serde(rename = "R_server_exact")]
    pub r_server_exact: String,
    #[serde(rename = "R_user_max_exact")]
    pub r_user_max_exact: String,
    pub edges: usize,
    pub delay: f64,
}

impl SweepRow {
    fn from_report(k: usize, repetition: usize, rep: &RunReport) -> Self {
        SweepRow {
            k,
            repetition,
            seed: rep.seed,
            r_server: ratio_f64(&rep.loads.server),
            r_user_max: ratio_f64(&rep.loads.user_max),
            r_server_exact: rep.loads.server.to_string(),
            r_user_max_exact: rep.loads.user_max.to_string(),
            edges: rep.total_edges,
            delay: rep.delay,
        }
    }
}

/// Runs every valid `(K, repetition)` point. Invalid K values are logged and
/// skipped. Seeds are drawn from the base seed in point order, so results do
/// not depend on `jobs`.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base.seed);
    let mut points = Vec::new();
    for &k in &spec.k_values {
        let mut cfg = spec.base.clone();
        cfg.partitions = k;
        if let Err(e) = cfg.params() {
            log::warn!("skipping K={k}: {e}");
            continue;
        }
        for rep in 0..spec.repetitions {
            let mut c = cfg.clone();
            c.seed = rng.next_u64();
            points.push((k, rep, c));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        points
            .par_iter()
            .map(|(k, rep, cfg)| simulate(cfg).map(|r| SweepRow::from_report(*k, *rep, &r)))
            .collect()
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Human-readable summary printed by `swiftagg run`.
pub fn summary(report: &RunReport) -> String {
    let p = &report.params;
    let l = &report.loads;
    let mut s = String::new();
    s += &format!(
        "N={} T={} D={} K={} L={} ell={} groups={}\n",
        p.users,
        p.max_colluders,
        p.max_dropouts,
        p.partitions,
        p.model_len,
        p.ell,
        p.group_count()
    );
    s += &format!(
        "p={} ({}, {} bits/symbol)\n",
        report.prime,
        if report.conforming_field {
            "conforming"
        } else {
            "non-conforming"
        },
        report.bits_per_symbol
    );
    s += &format!("dropouts={:?}\n", report.dropouts);
    s += &format!("R_server={} ({:.6})\n", l.server, report.r_server);
    s += &format!("R_user_max={} ({:.6})\n", l.user_max, report.r_user_max);
    s += &format!("R_user_avg={} ({:.6})\n", l.user_avg, report.r_user_avg);
    s += &format!(
        "server bits/entry={:.4} (cut-set {:.4})\n",
        report.server_bits_per_entry, report.cut_set_server_bits
    );
    s += &format!(
        "user bits/entry={:.4} (cut-set {:.4})\n",
        report.user_bits_per_entry, report.cut_set_user_bits
    );
    s += &format!(
        "edges={} silent={}\n",
        report.total_edges, report.silent_edges
    );
    s += &format!("delay={}\n", report.delay);
    s
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_run(cli: &Cli, path: &Path) -> ExitCode {
    let mut config = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG_ERROR, e),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let sim = match simulate_full(&config) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG_ERROR, e),
    };
    print!("{}", summary(&sim.report));
    if let Some(dir) = &cli.out {
        let written = fs::create_dir_all(dir)
            .map_err(Error::from)
            .and_then(|_| {
                write_file(&dir.join("report.json"), |w| {
                    writeln!(w, "{}", sim.report.to_json())?;
                    Ok(())
                })
            })
            .and_then(|_| {
                write_file(&dir.join("transcript.csv"), |w| {
                    sim.run.transcript.write_csv(w)
                })
            });
        if let Err(e) = written {
            return fail(EXIT_SUITE_FAILURE, e);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(cli: &Cli, path: &Path) -> ExitCode {
    let spec: SweepSpec = match fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|text| {
            serde_json::from_str(&text).map_err(|e| Error::config("sweep", e.to_string()))
        }) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG_ERROR, e),
    };
    let mut spec = spec;
    if let Some(seed) = cli.seed {
        spec.base.seed = seed;
    }
    let rows = match run_sweep(&spec, cli.jobs) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG_ERROR, e),
    };
    let dest = match (&cli.out, &spec.output) {
        (Some(dir), _) => Some(dir.join("sweep.csv")),
        (None, Some(p)) => Some(p.clone()),
        (None, None) => None,
    };
    let written = match &dest {
        Some(p) => p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .map_or(Ok(()), |d| fs::create_dir_all(d).map_err(Error::from))
            .and_then(|_| write_file(p, |w| write_sweep_csv(&rows, w))),
        None => write_sweep_csv(&rows, io::stdout().lock()),
    };
    if let Err(e) = written {
        return fail(EXIT_SUITE_FAILURE, e);
    }
    if let Some(p) = dest {
        println!("{} rows written to {}", rows.len(), p.display());
    }
    ExitCode::SUCCESS
}

fn cmd_verify(suite: Suite) -> ExitCode {
    let report = match suite {
        Suite::Examples => suites::examples(),
        Suite::Formulas => suites::formulas(),
        Suite::Correctness => suites::correctness(170),
        Suite::Privacy => suites::privacy(),
    };
    println!("{report}");
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SUITE_FAILURE)
    }
}

pub fn execute(cli: &Cli) -> ExitCode {
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config),
        Command::Sweep { spec } => cmd_sweep(cli, spec),
        Command::Verify { suite } => cmd_verify(*suite),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    execute(&Cli::parse())
}
