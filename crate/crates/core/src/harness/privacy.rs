//! Exhaustive privacy check for very small instances.
//!
//! For every value of the conditioning data (the field sum of the honest
//! models and the colluders' own models and noise) this enumerates every
//! honest model assignment consistent with it and every honest noise
//! assignment, runs the real protocol, and counts the views the coalition
//! plus server would see. The conditional mutual information between the
//! honest models and the view is then computed from those integer counts.
//! Zero is detected with exact integer cross-multiplication, so an exact zero
//! is reported as `0.0` and flagged in [`PrivacyResult::exactly_zero`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::view::collect_adversary_view;
use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::protocol::{run_protocol, DropoutPlan, NoiseSource, RunOptions, ServerCollection};
use crate::sharing::{Model, NoiseBlock};
use crate::topology::{AggregationTree, ProtocolParams, TreeShape};

/// Joint distribution of the honest users' models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPrior {
    /// Independent, uniform over `[0, ell)^L`.
    #[default]
    Independent,
    /// Every honest user holds the same uniformly drawn model.
    Duplicated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Uniform,
    /// Every noise symbol of every user is this constant (a broken generator).
    Constant(u64),
}

/// Which values of the colluders' own data to condition on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryData {
    /// Every possible model and noise assignment, uniformly weighted.
    #[default]
    All,
    /// One fixed value: per colluder (ascending index) its model and its
    /// flattened noise symbols.
    Fixed {
        models: Vec<Vec<u64>>,
        noise: Vec<Vec<u64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyConfig {
    pub params: ProtocolParams,
    pub prime: u64,
    pub tree: TreeShape,
    pub adversaries: BTreeSet<usize>,
    #[serde(default)]
    pub prior: ModelPrior,
    #[serde(default)]
    pub noise: NoiseMode,
    #[serde(default)]
    pub adversary_data: AdversaryData,
    /// Restricts the enumeration to one value of the honest field sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honest_sum: Option<Vec<u64>>,
    /// Upper bound on protocol runs.
    pub budget: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyResult {
    /// True iff every conditional view distribution is identical across the
    /// consistent honest model assignments.
    pub exactly_zero: bool,
    /// I(honest models; view | conditioning data), in bits.
    pub mutual_information_bits: f64,
    /// Largest MI over individual conditioning values, in bits.
    pub max_conditional_bits: f64,
    pub conditioning_values: usize,
    pub runs: u64,
}

/// Per colluder: model and flattened noise.
type ColluderData = (Vec<Vec<u64>>, Vec<Vec<u64>>);

/// All vectors in `[0, radix)^len`, lexicographic.
fn all_vectors(radix: u64, len: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..radix).map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}

fn checked_pow(base: u64, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

struct Spaces {
    honest: Vec<usize>,
    models_per_user: u128,
    noise_per_user: u128,
}

impl PrivacyConfig {
    fn spaces(&self) -> Spaces {
        let p = &self.params;
        let honest: Vec<usize> = (0..p.users)
            .filter(|u| !self.adversaries.contains(u))
            .collect();
        let noise_per_user = match self.noise {
            NoiseMode::Uniform => checked_pow(self.prime, p.max_colluders * p.segment_len()),
            NoiseMode::Constant(_) => 1,
        };
        Spaces {
            honest,
            models_per_user: checked_pow(p.ell, p.model_len),
            noise_per_user,
        }
    }

    /// Protocol runs needed for a full enumeration.
    pub fn estimate(&self) -> u128 {
        let s = self.spaces();
        let h = s.honest.len() as u32;
        let models = match (&self.honest_sum, self.prior) {
            (Some(sum), prior) => {
                consistent_assignments(prior, s.honest.len(), self.params.ell, self.prime, sum)
            }
            (None, ModelPrior::Independent) => s.models_per_user.saturating_pow(h),
            (None, ModelPrior::Duplicated) => s.models_per_user,
        };
        let adversary = match self.adversary_data {
            AdversaryData::All => s
                .models_per_user
                .saturating_mul(s.noise_per_user)
                .saturating_pow(self.adversaries.len() as u32),
            AdversaryData::Fixed { .. } => 1,
        };
        adversary
            .saturating_mul(models)
            .saturating_mul(s.noise_per_user.saturating_pow(h))
    }
}

/// Number of honest model assignments whose field sum is `sum`. Coordinates
/// are independent under both priors.
fn consistent_assignments(prior: ModelPrior, honest: usize, ell: u64, p: u64, sum: &[u64]) -> u128 {
    let per_coordinate = |target: u64| -> u128 {
        match prior {
            ModelPrior::Independent => {
                // ways[r] = assignments of the users so far with sum = r mod p
                let mut ways = vec![0u128; p as usize];
                ways[0] = 1;
                for _ in 0..honest {
                    let mut next = vec![0u128; p as usize];
                    for (r, &w) in ways.iter().enumerate() {
                        for v in 0..ell {
                            let idx = (r as u64 + v) % p;
                            next[idx as usize] = next[idx as usize].saturating_add(w);
                        }
                    }
                    ways = next;
                }
                ways[(target % p) as usize]
            }
            ModelPrior::Duplicated => (0..ell)
                .filter(|v| (v * honest as u64) % p == target % p)
                .count() as u128,
        }
    };
    sum.iter()
        .fold(1u128, |acc, &t| acc.saturating_mul(per_coordinate(t)))
}

/// Conditional MI of one conditioning value, from `counts[view][i]` = number
/// of noise assignments under model assignment `i` that produce `view`.
fn conditional_mi(
    counts: &HashMap<Vec<u64>, Vec<u64>>,
    assignments: usize,
    noise_space: u64,
) -> (bool, f64) {
    let total = assignments as u128 * noise_space as u128;
    let mut exact = true;
    let mut mi = 0.0;
    for per_model in counts.values() {
        let n_v: u128 = per_model.iter().map(|&c| c as u128).sum();
        for &c in per_model {
            // independence: c * total == n_w * n_v with n_w = noise_space
            let lhs = c as u128 * total;
            let rhs = noise_space as u128 * n_v;
            if lhs != rhs {
                exact = false;
            }
            if c > 0 {
                mi += (c as f64 / total as f64) * (lhs as f64 / rhs as f64).log2();
            }
        }
    }
    if exact {
        (true, 0.0)
    } else {
        (false, mi.max(f64::MIN_POSITIVE))
    }
}

pub fn privacy_bruteforce(cfg: &PrivacyConfig) -> Result<PrivacyResult> {
    let params = &cfg.params;
    let estimate = cfg.estimate();
    if estimate > cfg.budget {
        return Err(Error::SearchSpaceTooLarge {
            estimate,
            budget: cfg.budget,
        });
    }
    if cfg.adversaries.len() > params.max_colluders {
        return Err(Error::InvalidParams(format!(
            "{} colluders exceed T={}",
            cfg.adversaries.len(),
            params.max_colluders
        )));
    }
    if let Some(u) = cfg.adversaries.iter().find(|&&u| u >= params.users) {
        return Err(Error::InvalidParams(format!("unknown colluder {u}")));
    }
    let ctx = FieldContext::with_prime(cfg.prime, params.ell, params.users as u64)?;
    if cfg.prime <= params.group_size() as u64 {
        return Err(Error::InvalidParams(format!(
            "p={} leaves fewer than {} non-zero evaluation points",
            cfg.prime,
            params.group_size()
        )));
    }
    if params.ell > cfg.prime {
        return Err(Error::InvalidParams("ell exceeds p".into()));
    }
    let tree = AggregationTree::build(params.group_count(), &cfg.tree)?;
    let spaces = cfg.spaces();
    let seg = params.segment_len();
    let noise_len = params.max_colluders * seg;

    let model_space = all_vectors(params.ell, params.model_len);
    let noise_vectors: Vec<Vec<u64>> = match cfg.noise {
        NoiseMode::Uniform => all_vectors(cfg.prime, noise_len),
        NoiseMode::Constant(c) => vec![vec![c % cfg.prime; noise_len]],
    };
    let to_block = |flat: &[u64]| {
        NoiseBlock::from_vectors(
            flat.chunks(seg.max(1))
                .take(params.max_colluders)
                .map(|ch| ch.iter().map(|&v| ctx.element(v)).collect())
                .collect(),
        )
    };

    // colluder data values to condition on
    let adversary_values: Vec<ColluderData> = match &cfg.adversary_data {
        AdversaryData::Fixed { models, noise } => {
            if models.len() != cfg.adversaries.len() || noise.len() != cfg.adversaries.len() {
                return Err(Error::DimensionMismatch(
                    "fixed colluder data does not match the coalition".into(),
                ));
            }
            vec![(models.clone(), noise.clone())]
        }
        AdversaryData::All => {
            let mut acc: Vec<ColluderData> = vec![(Vec::new(), Vec::new())];
            for _ in &cfg.adversaries {
                acc = acc
                    .into_iter()
                    .flat_map(|(ms, zs)| {
                        let mut next = Vec::new();
                        for m in &model_space {
                            for z in &noise_vectors {
                                let mut ms2 = ms.clone();
                                ms2.push(m.clone());
                                let mut zs2 = zs.clone();
                                zs2.push(z.clone());
                                next.push((ms2, zs2));
                            }
                        }
                        next
                    })
                    .collect();
            }
            acc
        }
    };

    // honest model assignments, grouped by their field sum
    let honest_assignments: Vec<Vec<Vec<u64>>> = match cfg.prior {
        ModelPrior::Independent => {
            let mut acc = vec![Vec::new()];
            for _ in &spaces.honest {
                acc = acc
                    .into_iter()
                    .flat_map(|a: Vec<Vec<u64>>| {
                        model_space.iter().map(move |m| {
                            let mut b = a.clone();
                            b.push(m.clone());
                            b
                        })
                    })
                    .collect();
            }
            acc
        }
        ModelPrior::Duplicated => model_space
            .iter()
            .map(|m| vec![m.clone(); spaces.honest.len()])
            .collect(),
    };
    let mut by_sum: BTreeMap<Vec<u64>, Vec<&Vec<Vec<u64>>>> = BTreeMap::new();
    for a in &honest_assignments {
        let sum: Vec<u64> = (0..params.model_len)
            .map(|i| a.iter().map(|m| m[i]).sum::<u64>() % cfg.prime)
            .collect();
        by_sum.entry(sum).or_default().push(a);
    }
    if let Some(sum) = &cfg.honest_sum {
        if sum.len() != params.model_len {
            return Err(Error::DimensionMismatch(format!(
                "honest sum of length {} for models of length {}",
                sum.len(),
                params.model_len
            )));
        }
        let key: Vec<u64> = sum.iter().map(|v| v % cfg.prime).collect();
        by_sum.retain(|k, _| *k == key);
        if by_sum.is_empty() {
            return Err(Error::InvalidParams(format!(
                "no honest assignment sums to {sum:?}"
            )));
        }
    }
    let enumerated: usize = by_sum.values().map(Vec::len).sum();

    let honest_noise_space = (noise_vectors.len() as u64)
        .checked_pow(spaces.honest.len() as u32)
        .ok_or(Error::SearchSpaceTooLarge {
            estimate,
            budget: cfg.budget,
        })?;
    let options = RunOptions {
        collection: ServerCollection::All,
    };
    let plan = DropoutPlan::none();
    let mut runs = 0u64;
    let mut exactly_zero = true;
    let mut mi_total = 0.0;
    let mut max_conditional: f64 = 0.0;
    let mut conditioning_values = 0;
    let adversary_weight = 1.0 / adversary_values.len() as f64;

    let mut models = vec![Model::zeros(params.model_len); params.users];
    let mut noise = vec![NoiseBlock::zeros(params.max_colluders, seg); params.users];

    for (adv_models, adv_noise) in &adversary_values {
        for (slot, &u) in cfg.adversaries.iter().enumerate() {
            models[u] = Model::from_values(&ctx, &adv_models[slot])?;
            noise[u] = to_block(&adv_noise[slot]);
        }
        for assignments in by_sum.values() {
            conditioning_values += 1;
            let mut counts: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
            for (i, assignment) in assignments.iter().enumerate() {
                for (slot, &u) in spaces.honest.iter().enumerate() {
                    models[u] = Model::from_values(&ctx, &assignment[slot])?;
                }
                // mixed-radix counter over the honest users' noise choices
                let mut digits = vec![0usize; spaces.honest.len()];
                loop {
                    for (slot, &u) in spaces.honest.iter().enumerate() {
                        noise[u] = to_block(&noise_vectors[digits[slot]]);
                    }
                    let run = run_protocol(
                        &ctx,
                        params,
                        &models,
                        &tree,
                        &plan,
                        NoiseSource::Explicit(&noise),
                        options,
                    )?;
                    runs += 1;
                    let key =
                        collect_adversary_view(&run.transcript, &run.states, &cfg.adversaries)
                            .key();
                    counts
                        .entry(key)
                        .or_insert_with(|| vec![0; assignments.len()])[i] += 1;

                    let mut d = 0;
                    while d < digits.len() {
                        digits[d] += 1;
                        if digits[d] < noise_vectors.len() {
                            break;
                        }
                        digits[d] = 0;
                        d += 1;
                    }
                    if d == digits.len() {
                        break;
                    }
                }
            }
            let (zero, mi) = conditional_mi(&counts, assignments.len(), honest_noise_space);
            exactly_zero &= zero;
            max_conditional = max_conditional.max(mi);
            let p_sum = assignments.len() as f64 / enumerated as f64;
            mi_total += adversary_weight * p_sum * mi;
        }
    }
    Ok(PrivacyResult {
        exactly_zero,
        mutual_information_bits: if exactly_zero { 0.0 } else { mi_total },
        max_conditional_bits: max_conditional,
        conditioning_values,
        runs,
    })
}
