//! Deterministic simulator around the protocol engine: run configuration,
//! transcript-derived metrics, adversary views, and the brute-force
//! correctness and privacy oracles.

pub mod config;
pub mod oracle;
pub mod privacy;
pub mod report;
pub mod suites;
pub mod view;

pub use config::{PreparedRun, RunConfig};
pub use oracle::{correctness_oracle, DropoutDraw, OracleSummary};
pub use privacy::{
    privacy_bruteforce, AdversaryData, ModelPrior, NoiseMode, PrivacyConfig, PrivacyResult,
};
pub use report::{measure_loads, Loads, Rational, RunReport, SCHEMA_VERSION};
pub use view::{collect_adversary_view, AdversaryView};

use crate::error::Result;
use crate::protocol::{run_protocol, NoiseSource, ProtocolRun, RunOptions};
use crate::topology::total_delay;

/// Everything a simulated round produced.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub prepared: PreparedRun,
    pub run: ProtocolRun,
    pub view: AdversaryView,
    pub report: RunReport,
}

pub fn simulate_full(config: &RunConfig) -> Result<Simulation> {
    let prepared = config.prepare()?;
    let PreparedRun {
        ctx,
        params,
        tree,
        plan,
        models,
    } = &prepared;
    let run = run_protocol(
        ctx,
        params,
        models,
        tree,
        plan,
        NoiseSource::Seeded(config.seed),
        RunOptions {
            collection: config.server_collection,
        },
    )?;
    let view = collect_adversary_view(&run.transcript, &run.states, &config.adversaries);
    let loads = measure_loads(&run.transcript, params, &plan.users);
    let bits = ctx.bits_per_symbol();
    let ell = params.ell as f64;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        params: *params,
        prime: ctx.modulus(),
        conforming_field: ctx.is_conforming(),
        bits_per_symbol: bits,
        seed: config.seed,
        dropouts: plan.users.clone(),
        contributors: run.contributors.clone(),
        recovered: run.aggregate.iter().map(|v| v.value()).collect(),
        r_server: report::ratio_f64(&loads.server),
        r_user_max: report::ratio_f64(&loads.user_max),
        r_user_avg: report::ratio_f64(&loads.user_avg),
        server_bits_per_entry: report::ratio_f64(&loads.server) * bits as f64,
        user_bits_per_entry: report::ratio_f64(&loads.user_max) * bits as f64,
        cut_set_server_bits: ((ell - 1.0) * params.users as f64 + 1.0).log2(),
        cut_set_user_bits: ell.log2(),
        loads,
        total_edges: run.transcript.link_count(),
        silent_edges: run.transcript.silent_link_count(),
        delay: total_delay(tree, &config.delays),
        messages: run.transcript.phase_counts(),
    };
    Ok(Simulation {
        prepared,
        run,
        view,
        report,
    })
}

/// Runs the configured round and reports metrics measured from its
/// transcript.
pub fn simulate(config: &RunConfig) -> Result<RunReport> {
    simulate_full(config).map(|s| s.report)
}
