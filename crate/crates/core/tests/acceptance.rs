//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod support;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{integer_sum, naive_is_prime, vandermonde_solve};
use swiftagg::field::{FieldContext, FieldElement};
use swiftagg::harness::suites::{example_one, example_two, privacy_matrix};
use swiftagg::harness::{privacy_bruteforce, simulate_full, NoiseMode, RunConfig, Simulation};
use swiftagg::protocol::{run_protocol, DropoutPlan, NoiseSource, RunOptions};
use swiftagg::topology::{AggregationTree, DelayModel, TreeShape};
use swiftagg::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model_rows(sim: &Simulation) -> Vec<Vec<u64>> {
    sim.prepared
        .models
        .iter()
        .map(|m| m.entries().iter().map(|e| e.value()).collect())
        .collect()
}

fn survivors(n: usize, dropped: &BTreeSet<usize>) -> Vec<usize> {
    (0..n).filter(|u| !dropped.contains(u)).collect()
}

fn check_example(
    cfg: RunConfig,
    server: (u64, u64),
    user: (u64, u64),
    edges: usize,
    silent: usize,
) -> Outcome {
    let sim = simulate_full(&cfg).map_err(|e| e.to_string())?;
    let rep = &sim.report;
    let want_server = Ratio::new(server.0, server.1);
    let want_user = Ratio::new(user.0, user.1);
    ensure(rep.loads.server == want_server, || {
        format!("R_server {} != {want_server}", rep.loads.server)
    })?;
    ensure(rep.loads.user_max == want_user, || {
        format!("R_user_max {} != {want_user}", rep.loads.user_max)
    })?;
    ensure(rep.total_edges == edges, || {
        format!("edges {} != {edges}", rep.total_edges)
    })?;
    ensure(rep.silent_edges == silent, || {
        format!("silent {} != {silent}", rep.silent_edges)
    })?;
    let want = integer_sum(&model_rows(&sim), &survivors(cfg.users, &cfg.dropouts));
    ensure(rep.recovered == want, || {
        "recovered aggregate differs from the plain sum".into()
    })?;
    Ok(format!(
        "R_server={} R_user_max={} edges={} silent={} p={}; bits/entry server {:.3} (cut-set {:.3}), user {:.3} (cut-set {:.3})",
        rep.loads.server,
        rep.loads.user_max,
        rep.total_edges,
        rep.silent_edges,
        rep.prime,
        rep.server_bits_per_entry,
        rep.cut_set_server_bits,
        rep.user_bits_per_entry,
        rep.cut_set_user_bits
    ))
}

fn example_1() -> Outcome {
    check_example(example_one(), (11, 9), (4, 3), 78, 12)
}

fn example_2() -> Outcome {
    check_example(example_two(), (5, 3), (2, 1), 42, 7)
}

fn formula_agreement() -> Outcome {
    let n = 24;
    let mut cases = 0;
    for t in [1, 2] {
        for d in [0, 1] {
            for k in (1..=n - t - d).filter(|k| n % (k + t + d) == 0) {
                let mut cfg = RunConfig::new(n, t, d, k, 3 * k, 256);
                cfg.seed = (k * 7 + t * 3 + d) as u64;
                cfg.assert_loads = true;
                let sim = simulate_full(&cfg).map_err(|e| format!("T={t} D={d} K={k}: {e}"))?;
                let want_server = Ratio::new((k + t) as u64, k as u64);
                let want_edges = n * (k + t + d + 1) / 2;
                ensure(sim.report.loads.server == want_server, || {
                    format!(
                        "T={t} D={d} K={k}: R_server {} != {want_server}",
                        sim.report.loads.server
                    )
                })?;
                ensure(sim.report.total_edges == want_edges, || {
                    format!(
                        "T={t} D={d} K={k}: edges {} != {want_edges}",
                        sim.report.total_edges
                    )
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (T, D, K) cases at N=24"))
}

fn min_load_point() -> Outcome {
    let (t, d) = (2, 1);
    let mut out = Vec::new();
    for n in [12usize, 24, 60] {
        let k = n - t - d;
        let mut cfg = RunConfig::new(n, t, d, k, k, 256);
        cfg.assert_loads = true;
        let sim = simulate_full(&cfg).map_err(|e| format!("N={n}: {e}"))?;
        let low = n as u64 * 255;
        let want_p = (low + 1..=2 * low)
            .find(|&q| naive_is_prime(q))
            .expect("Bertrand");
        ensure(sim.report.prime == want_p, || {
            format!("N={n}: p {} != {want_p}", sim.report.prime)
        })?;
        let want = Ratio::new((k + t) as u64, k as u64);
        ensure(sim.report.loads.server == want, || {
            format!("N={n}: R_server {} != {want}", sim.report.loads.server)
        })?;
        out.push(format!("N={n}: p={want_p} R_server={want}"));
    }
    Ok(out.join(", "))
}

fn correctness() -> Outcome {
    let per_config = 170;
    let mut trials = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for (n, t, d, k) in [(12, 2, 1, 3), (12, 2, 1, 9), (24, 3, 1, 4)] {
        for shape in [TreeShape::Chain, TreeShape::Star] {
            for _ in 0..per_config {
                let mut cfg = RunConfig::new(n, t, d, k, 11, 256);
                cfg.tree = shape.clone();
                cfg.seed = rng.gen();
                let count = rng.gen_range(0..=d);
                cfg.dropouts = sample(&mut rng, n, count).into_iter().collect();
                let sim = simulate_full(&cfg).map_err(|e| format!("{cfg:?}: {e}"))?;
                let want = integer_sum(&model_rows(&sim), &survivors(n, &cfg.dropouts));
                ensure(sim.report.recovered == want, || {
                    format!(
                        "N={n} K={k} {shape:?} seed {} dropouts {:?}",
                        cfg.seed, cfg.dropouts
                    )
                })?;
                trials += 1;
            }
        }
    }
    Ok(format!("{trials}/{trials} trials matched the plain sum"))
}

fn tree_invariance() -> Outcome {
    // six groups of four users
    let shapes = [
        TreeShape::Chain,
        TreeShape::Star,
        TreeShape::Parents(vec![Some(3), Some(3), Some(4), Some(5), Some(5), None]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for set in 0..100 {
        let mut base = RunConfig::new(24, 2, 1, 1, 5, 256);
        base.models = Some(
            (0..24)
                .map(|_| (0..5).map(|_| rng.gen_range(0..256)).collect())
                .collect(),
        );
        if set % 2 == 1 {
            base.dropouts = [rng.gen_range(0..24)].into();
        }
        let mut results = Vec::new();
        for shape in &shapes {
            let mut cfg = base.clone();
            cfg.tree = shape.clone();
            cfg.seed = rng.gen();
            results.push(
                simulate_full(&cfg)
                    .map_err(|e| e.to_string())?
                    .report
                    .recovered,
            );
        }
        let want = integer_sum(
            base.models.as_ref().unwrap(),
            &survivors(24, &base.dropouts),
        );
        ensure(results.iter().all(|r| *r == want), || {
            format!("model set {set}: aggregates differ")
        })?;
    }
    Ok("100 model sets, chain/star/irregular agree".into())
}

fn privacy() -> Outcome {
    let mut out = Vec::new();
    for (name, cfg) in privacy_matrix() {
        let res = privacy_bruteforce(&cfg).map_err(|e| format!("{name}: {e}"))?;
        ensure(
            res.exactly_zero && res.mutual_information_bits == 0.0,
            || format!("{name}: MI {} bits", res.mutual_information_bits),
        )?;
        out.push(format!("{name}: 0 ({} runs)", res.runs));
    }
    let (_, mut control) = privacy_matrix().swap_remove(0);
    control.noise = NoiseMode::Constant(0);
    let res = privacy_bruteforce(&control).map_err(|e| e.to_string())?;
    ensure(res.mutual_information_bits > 0.0, || {
        "degenerate noise reported no leak".into()
    })?;
    out.push(format!(
        "constant-noise control: {:.4} bits",
        res.mutual_information_bits
    ));
    Ok(out.join("; "))
}

fn interpolation() -> Outcome {
    let primes: Vec<u64> = (14..=10007).filter(|&q| naive_is_prime(q)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for inst in 0..200 {
        let p = primes[rng.gen_range(0..primes.len())];
        let degree = rng.gen_range(0..=12);
        let xs = sample(&mut rng, p as usize, degree + 1);
        let points: Vec<(u64, u64)> = xs.iter().map(|x| (x as u64, rng.gen_range(0..p))).collect();
        let ctx = FieldContext::with_prime(p, 2, 1).map_err(|e| e.to_string())?;
        let fe: Vec<(FieldElement, FieldElement)> = points
            .iter()
            .map(|&(x, y)| (ctx.element(x), ctx.element(y)))
            .collect();
        let poly = ctx.lagrange_interpolate(&fe).map_err(|e| e.to_string())?;
        let mut got: Vec<u64> = (0..=degree).map(|i| poly.coeff(i).value()).collect();
        got.resize(degree + 1, 0);
        let want = vandermonde_solve(&points, p);
        ensure(got == want, || {
            format!("instance {inst} (p={p}, degree {degree}): {got:?} != {want:?}")
        })?;
    }
    Ok("200 instances, Lagrange == Vandermonde".into())
}

fn dropout_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut lines = Vec::new();
    for (n, t, d) in [(12usize, 2usize, 1usize), (24, 3, 2)] {
        let k = n - t - d;
        let cfg = RunConfig::new(n, t, d, k, k, 256);
        let prep = cfg.prepare().map_err(|e| e.to_string())?;
        for over in [false, true] {
            for trial in 0..50 {
                let count = if over { d + 1 } else { d };
                let plan = DropoutPlan::before_intra(sample(&mut rng, n, count));
                let res = run_protocol(
                    &prep.ctx,
                    &prep.params,
                    &prep.models,
                    &prep.tree,
                    &plan,
                    NoiseSource::Seeded(trial),
                    RunOptions::default(),
                );
                match (over, res) {
                    (true, Err(Error::TooManyDropouts { .. })) | (false, Ok(_)) => {}
                    (true, other) => {
                        return Err(format!("N={n}: {count} dropouts gave {:?}", other.err()))
                    }
                    (false, Err(e)) => return Err(format!("N={n}: {count} dropouts failed: {e}")),
                }
            }
        }
        lines.push(format!("N={n} D={d}"));
    }
    Ok(format!("{}: 50 trials each at D and D+1", lines.join(", ")))
}

fn delay() -> Outcome {
    let delays = DelayModel {
        delta_inter: 3.0,
        delta_intra: 0.5,
    };
    let mut out = Vec::new();
    for (shape, hops) in [(TreeShape::Star, 2.0), (TreeShape::Chain, 7.0)] {
        // seven groups of four users
        let mut cfg = RunConfig::new(28, 1, 0, 3, 3, 256);
        cfg.tree = shape.clone();
        cfg.delays = delays;
        let sim = simulate_full(&cfg).map_err(|e| e.to_string())?;
        let want = hops * delays.delta_inter + delays.delta_intra;
        ensure(sim.report.delay == want, || {
            format!("{shape:?}: {} != {want}", sim.report.delay)
        })?;
        let tree = AggregationTree::build(7, &shape).map_err(|e| e.to_string())?;
        ensure(tree.group_count() == 7, || "group count".into())?;
        out.push(format!("{shape:?} {}", sim.report.delay));
    }
    Ok(out.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "1 example 1 (K=9, one group)",
            example_1,
            Duration::from_secs(1),
        ),
        (
            "2 example 2 (K=3, chain)",
            example_2,
            Duration::from_secs(1),
        ),
        (
            "3 load and edge formulas, N=24",
            formula_agreement,
            Duration::from_secs(10),
        ),
        (
            "4 minimum-load operating point",
            min_load_point,
            Duration::from_secs(10),
        ),
        (
            "5 correctness vs plain sum",
            correctness,
            Duration::from_secs(60),
        ),
        (
            "6 tree invariance",
            tree_invariance,
            Duration::from_secs(30),
        ),
        ("7 privacy brute force", privacy, Duration::from_secs(300)),
        (
            "8 Lagrange vs Vandermonde",
            interpolation,
            Duration::from_secs(5),
        ),
        ("9 dropout bound", dropout_bound, Duration::from_secs(30)),
        ("10 aggregation delay", delay, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took <= limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail} ({took:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{name}] {detail} ({took:.2?})");
            }
        }
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
