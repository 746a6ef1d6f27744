//! Fixed verification matrices behind `swiftagg verify`.

use std::collections::BTreeSet;
use std::fmt;

use super::oracle::{correctness_oracle, plain_sum, DropoutDraw};
use super::privacy::{privacy_bruteforce, AdversaryData, ModelPrior, NoiseMode, PrivacyConfig};
use super::report::Rational;
use super::{simulate_full, RunConfig};
use crate::topology::{
    count_edges, total_delay, AggregationTree, DelayModel, ProtocolParams, TreeShape,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}/{}: {}", self.suite, c.name, c.detail)?;
        }
        let ok = self.checks.iter().filter(|c| c.passed).count();
        write!(
            f,
            "{}: {ok}/{} checks passed",
            self.suite,
            self.checks.len()
        )
    }
}

/// N=12, T=2, D=1, K=9 in a single group, user 2 dropped before sharing.
pub fn example_one() -> RunConfig {
    let mut cfg = RunConfig::new(12, 2, 1, 9, 9, 256);
    cfg.dropouts = [2].into();
    cfg.seed = 1;
    cfg.assert_loads = true;
    cfg
}

/// [`example_one`] with K=3: two groups of six on a chain.
pub fn example_two() -> RunConfig {
    let mut cfg = example_one();
    cfg.partitions = 3;
    cfg.tree = TreeShape::Chain;
    cfg
}

fn r(n: u64, d: u64) -> Rational {
    Rational::new(n, d)
}

fn run_example(
    report: &mut SuiteReport,
    name: &str,
    cfg: &RunConfig,
    server: Rational,
    user: Rational,
    edges: usize,
    silent: usize,
) {
    match simulate_full(cfg) {
        Ok(sim) => {
            let rep = &sim.report;
            let models: Vec<Vec<u64>> = sim
                .prepared
                .models
                .iter()
                .map(|m| m.entries().iter().map(|e| e.value()).collect())
                .collect();
            let survivors: Vec<usize> = (0..cfg.users)
                .filter(|u| !cfg.dropouts.contains(u))
                .collect();
            report.check(
                format!("{name}/r_server"),
                rep.loads.server == server,
                format!("measured {} expected {server}", rep.loads.server),
            );
            report.check(
                format!("{name}/r_user_max"),
                rep.loads.user_max == user,
                format!("measured {} expected {user}", rep.loads.user_max),
            );
            report.check(
                format!("{name}/edges"),
                rep.total_edges == edges,
                format!("measured {} expected {edges}", rep.total_edges),
            );
            report.check(
                format!("{name}/silent_edges"),
                rep.silent_edges == silent,
                format!("measured {} expected {silent}", rep.silent_edges),
            );
            report.check(
                format!("{name}/recovery"),
                rep.recovered == plain_sum(&models, &survivors),
                "recovered aggregate vs plain sum of survivors",
            );
        }
        Err(e) => report.check(name, false, e.to_string()),
    }
}

pub fn examples() -> SuiteReport {
    let mut report = SuiteReport::new("examples");
    run_example(
        &mut report,
        "example1",
        &example_one(),
        r(11, 9),
        r(4, 3),
        78,
        12,
    );
    run_example(
        &mut report,
        "example2",
        &example_two(),
        r(5, 3),
        r(2, 1),
        42,
        7,
    );
    report
}

/// Valid K for the given N, T, D.
pub fn valid_partitions(n: usize, t: usize, d: usize) -> Vec<usize> {
    (1..=n.saturating_sub(t + d))
        .filter(|&k| n.is_multiple_of(k + t + d))
        .collect()
}

pub fn formulas() -> SuiteReport {
    let mut report = SuiteReport::new("formulas");
    let n = 24;
    for t in [1, 2] {
        for d in [0, 1] {
            for k in valid_partitions(n, t, d) {
                let mut cfg = RunConfig::new(n, t, d, k, 2 * k, 256);
                cfg.seed = (t * 100 + d * 10 + k) as u64;
                cfg.assert_loads = true;
                let name = format!("N={n},T={t},D={d},K={k}");
                match simulate_full(&cfg) {
                    Ok(sim) => {
                        let l = &sim.report.loads;
                        let want_server = Rational::from_integer(1) + r(t as u64, k as u64);
                        let want_user = Rational::from_integer(1) + r((t + d) as u64, k as u64);
                        let want_edges = n * (k + t + d + 1) / 2;
                        let ok = l.server == want_server
                            && l.user_max == want_user
                            && sim.report.total_edges == want_edges
                            && count_edges(&sim.prepared.params) == want_edges;
                        report.check(
                            name,
                            ok,
                            format!(
                                "r_server {} (want {want_server}), r_user_max {} (want {want_user}), edges {} (want {want_edges})",
                                l.server, l.user_max, sim.report.total_edges
                            ),
                        );
                    }
                    Err(e) => report.check(name, false, e.to_string()),
                }
            }
        }
    }
    for n in [12, 24, 60] {
        let (t, d) = (2, 1);
        let k = n - t - d;
        let mut cfg = RunConfig::new(n, t, d, k, k, 256);
        cfg.assert_loads = true;
        let name = format!("min-load N={n}");
        match simulate_full(&cfg) {
            Ok(sim) => {
                let want = Rational::from_integer(1) + r(t as u64, k as u64);
                let low = (n as u64) * 255;
                let prime_ok = sim.report.prime > low
                    && sim.report.prime <= 2 * low
                    && (low + 1..sim.report.prime).all(|q| !crate::field::is_prime(q));
                report.check(
                    name,
                    sim.report.loads.server == want && prime_ok,
                    format!(
                        "r_server {} (want {want}), p={} ({} bits/symbol)",
                        sim.report.loads.server, sim.report.prime, sim.report.bits_per_symbol
                    ),
                );
            }
            Err(e) => report.check(name, false, e.to_string()),
        }
    }
    let delays = DelayModel {
        delta_inter: 1.5,
        delta_intra: 0.25,
    };
    for (shape, want) in [
        (TreeShape::Star, 2.0 * 1.5 + 0.25),
        (TreeShape::Chain, 7.0 * 1.5 + 0.25),
    ] {
        let tree = AggregationTree::build(7, &shape).expect("valid shape");
        let got = total_delay(&tree, &delays);
        report.check(
            format!("delay/{shape:?}"),
            got == want,
            format!("measured {got} expected {want}"),
        );
    }
    report
}

/// Parameter sets and tree shapes of the randomized correctness matrix.
pub fn correctness_matrix() -> Vec<RunConfig> {
    let mut out = Vec::new();
    for (n, t, d, k) in [(12, 2, 1, 3), (12, 2, 1, 9), (24, 3, 1, 4)] {
        for shape in [TreeShape::Chain, TreeShape::Star] {
            let mut cfg = RunConfig::new(n, t, d, k, 10, 256);
            cfg.tree = shape;
            cfg.seed = (n * 1000 + k) as u64;
            out.push(cfg);
        }
    }
    out
}

pub fn correctness(trials_per_config: usize) -> SuiteReport {
    let mut report = SuiteReport::new("correctness");
    for cfg in correctness_matrix() {
        let name = format!(
            "N={},T={},D={},K={},{:?}",
            cfg.users, cfg.max_colluders, cfg.max_dropouts, cfg.partitions, cfg.tree
        );
        match correctness_oracle(&cfg, trials_per_config, DropoutDraw::UpToBound) {
            Ok(s) => report.check(
                name,
                s.all_passed(),
                {
                    let mut detail = format!("{}/{} exact matches", s.passed, s.trials);
                    if !s.failures.is_empty() {
                        detail += &format!(": {}", s.failures.join("; "));
                    }
                    detail
                },
            ),
            Err(e) => report.check(name, false, e.to_string()),
        }
    }
    report
}

/// The tiny-instance privacy matrix: every colluder position of N=4, K=1,
/// p=5, and one colluder per group of N=6, K=2, p=7 with the colluder's data
/// and the honest sum fixed.
pub fn privacy_matrix() -> Vec<(String, PrivacyConfig)> {
    let mut out = Vec::new();
    let small = ProtocolParams::new(4, 1, 0, 1, 1, 2).expect("valid");
    for u in 0..4 {
        out.push((
            format!("N=4,K=1,p=5,colluder={u}"),
            PrivacyConfig {
                params: small,
                prime: 5,
                tree: TreeShape::Chain,
                adversaries: BTreeSet::from([u]),
                prior: ModelPrior::Independent,
                noise: NoiseMode::Uniform,
                adversary_data: AdversaryData::All,
                honest_sum: None,
                budget: 1_000_000,
            },
        ));
    }
    let wide = ProtocolParams::new(6, 1, 0, 2, 2, 2).expect("valid");
    for u in [0, 4] {
        out.push((
            format!("N=6,K=2,p=7,colluder={u}"),
            PrivacyConfig {
                params: wide,
                prime: 7,
                tree: TreeShape::Chain,
                adversaries: BTreeSet::from([u]),
                prior: ModelPrior::Independent,
                noise: NoiseMode::Uniform,
                adversary_data: AdversaryData::Fixed {
                    models: vec![vec![1, 0]],
                    noise: vec![vec![3]],
                },
                honest_sum: Some(vec![2, 3]),
                budget: 2_000_000,
            },
        ));
    }
    out
}

pub fn privacy() -> SuiteReport {
    let mut report = SuiteReport::new("privacy");
    for (name, cfg) in privacy_matrix() {
        match privacy_bruteforce(&cfg) {
            Ok(res) => report.check(
                name,
                res.exactly_zero && res.mutual_information_bits == 0.0,
                format!(
                    "MI = {} bits over {} runs",
                    res.mutual_information_bits, res.runs
                ),
            ),
            Err(e) => report.check(name, false, e.to_string()),
        }
    }
    let (_, mut control) = privacy_matrix().swap_remove(0);
    control.noise = NoiseMode::Constant(0);
    match privacy_bruteforce(&control) {
        Ok(res) => report.check(
            "negative-control",
            !res.exactly_zero && res.mutual_information_bits > 0.0,
            format!(
                "MI = {} bits with constant noise",
                res.mutual_information_bits
            ),
        ),
        Err(e) => report.check("negative-control", false, e.to_string()),
    }
    report
}
