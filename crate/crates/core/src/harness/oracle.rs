use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{simulate_full, RunConfig};
use crate::error::{Error, Result};
use crate::protocol::DropTiming;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutDraw {
    /// Uniform size in `0..=D`.
    #[default]
    UpToBound,
    /// Exactly `D` users.
    AtBound,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub trials: usize,
    pub passed: usize,
    /// Descriptions of the first few failures.
    pub failures: Vec<String>,
}

impl OracleSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Integer sum, outside the field, of the given users' models.
pub fn plain_sum(models: &[Vec<u64>], users: &[usize]) -> Vec<u64> {
    let len = models.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| users.iter().map(|&u| models[u][i]).sum())
        .collect()
}

/// Random models and dropout sets, each run checked against the plain
/// integer sum of the surviving models. Failures are counted, not raised.
pub fn correctness_oracle(
    config: &RunConfig,
    trials: usize,
    draw: DropoutDraw,
) -> Result<OracleSummary> {
    if let Some(p) = config.prime_override {
        return Err(Error::NonConformingField(p));
    }
    let params = config.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut summary = OracleSummary {
        trials,
        ..Default::default()
    };
    for trial in 0..trials {
        let count = match draw {
            DropoutDraw::UpToBound => rng.gen_range(0..=params.max_dropouts),
            DropoutDraw::AtBound => params.max_dropouts,
        };
        let mut cfg = config.clone();
        cfg.seed = rng.next_u64();
        cfg.models = None;
        cfg.dropouts = sample(&mut rng, params.users, count).into_iter().collect();
        let outcome = simulate_full(&cfg).map(|sim| {
            let models: Vec<Vec<u64>> = sim
                .prepared
                .models
                .iter()
                .map(|m| m.entries().iter().map(|e| e.value()).collect())
                .collect();
            let survivors: Vec<usize> = (0..params.users)
                .filter(|u| !cfg.dropouts.contains(u))
                .collect();
            let expected_contributors = match cfg.drop_timing {
                DropTiming::BeforeIntra => survivors,
                DropTiming::AfterIntra => (0..params.users).collect(),
            };
            let want = plain_sum(&models, &expected_contributors);
            (
                sim.report.recovered == want && sim.run.contributors == expected_contributors,
                want,
                sim.report.recovered,
            )
        });
        match outcome {
            Ok((true, _, _)) => summary.passed += 1,
            Ok((false, want, got)) => {
                if summary.failures.len() < 10 {
                    summary.failures.push(format!(
                        "trial {trial} (seed {}, dropouts {:?}): expected {want:?}, got {got:?}",
                        cfg.seed, cfg.dropouts
                    ));
                }
            }
            Err(e) => {
                if summary.failures.len() < 10 {
                    summary.failures.push(format!(
                        "trial {trial} (seed {}, dropouts {:?}): {e}",
                        cfg.seed, cfg.dropouts
                    ));
                }
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TreeShape;

    #[test]
    fn example_two_params_pass() {
        let mut cfg = RunConfig::new(12, 2, 1, 3, 9, 256);
        cfg.seed = 3;
        let s = correctness_oracle(&cfg, 50, DropoutDraw::UpToBound).unwrap();
        assert!(s.all_passed(), "{:?}", s.failures);
        cfg.tree = TreeShape::Star;
        let s = correctness_oracle(&cfg, 20, DropoutDraw::AtBound).unwrap();
        assert!(s.all_passed(), "{:?}", s.failures);
    }

    #[test]
    fn no_dropout_bound_means_full_sum() {
        let cfg = RunConfig::new(8, 1, 0, 1, 5, 100);
        let s = correctness_oracle(&cfg, 20, DropoutDraw::UpToBound).unwrap();
        assert_eq!(s.passed, 20);
    }

    #[test]
    fn after_intra_drops_keep_the_model() {
        let mut cfg = RunConfig::new(12, 2, 2, 2, 7, 50);
        cfg.drop_timing = DropTiming::AfterIntra;
        let s = correctness_oracle(&cfg, 30, DropoutDraw::AtBound).unwrap();
        assert!(s.all_passed(), "{:?}", s.failures);
    }

    #[test]
    fn refuses_override() {
        let mut cfg = RunConfig::new(4, 1, 0, 1, 1, 2);
        cfg.prime_override = Some(7);
        assert_eq!(
            correctness_oracle(&cfg, 1, DropoutDraw::UpToBound).unwrap_err(),
            Error::NonConformingField(7)
        );
    }

    #[test]
    fn plain_sum_adds_selected_rows() {
        let models = vec![vec![1, 2], vec![10, 20], vec![100, 200]];
        assert_eq!(plain_sum(&models, &[0, 2]), vec![101, 202]);
    }
}
