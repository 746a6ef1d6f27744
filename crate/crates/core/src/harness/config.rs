use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::protocol::{DropTiming, DropoutPlan, ServerCollection};
use crate::sharing::Model;
use crate::topology::{AggregationTree, DelayModel, ProtocolParams, TreeShape};

fn default_tree() -> TreeShape {
    TreeShape::Chain
}

/// Everything needed to reproduce one simulated round. This is the JSON
/// document accepted by `swiftagg run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub users: usize,
    pub max_colluders: usize,
    pub max_dropouts: usize,
    pub partitions: usize,
    pub model_len: usize,
    pub ell: u64,
    #[serde(default = "default_tree")]
    pub tree: TreeShape,
    #[serde(default)]
    pub dropouts: BTreeSet<usize>,
    #[serde(default)]
    pub drop_timing: DropTiming,
    #[serde(default)]
    pub adversaries: BTreeSet<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the selected prime; the resulting field is non-conforming.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime_override: Option<u64>,
    #[serde(default)]
    pub server_collection: ServerCollection,
    #[serde(default)]
    pub delays: DelayModel,
    /// Explicit models, one per user. Drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<Vec<u64>>>,
    /// The run backs load claims, so the field must be conforming.
    #[serde(default)]
    pub assert_loads: bool,
}

/// A [`RunConfig`] after validation, with all derived objects built.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub ctx: FieldContext,
    pub params: ProtocolParams,
    pub tree: AggregationTree,
    pub plan: DropoutPlan,
    pub models: Vec<Model>,
}

impl RunConfig {
    pub fn new(
        users: usize,
        max_colluders: usize,
        max_dropouts: usize,
        partitions: usize,
        model_len: usize,
        ell: u64,
    ) -> Self {
        RunConfig {
            users,
            max_colluders,
            max_dropouts,
            partitions,
            model_len,
            ell,
            tree: TreeShape::Chain,
            dropouts: BTreeSet::new(),
            drop_timing: DropTiming::BeforeIntra,
            adversaries: BTreeSet::new(),
            seed: 0,
            prime_override: None,
            server_collection: ServerCollection::Minimal,
            delays: DelayModel::default(),
            models: None,
            assert_loads: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." {
                json_field(&inner)
            } else {
                path
            };
            Error::config(field, inner.to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("path", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> Result<ProtocolParams> {
        ProtocolParams::new(
            self.users,
            self.max_colluders,
            self.max_dropouts,
            self.partitions,
            self.model_len,
            self.ell,
        )
        .map_err(|e| {
            let field = match &e {
                Error::ThresholdViolation { .. } => "max_colluders",
                Error::BadK { .. } | Error::IndivisibleGroups { .. } => "partitions",
                Error::InvalidParams(m) if m.starts_with("L ") => "model_len",
                Error::InvalidParams(m) if m.starts_with("ell") => "ell",
                _ => "users",
            };
            Error::config(field, e.to_string())
        })
    }

    pub fn field(&self) -> Result<FieldContext> {
        match self.prime_override {
            Some(p) => {
                if self.assert_loads {
                    return Err(Error::NonConformingField(p));
                }
                let ctx = FieldContext::with_prime(p, self.ell, self.users as u64)
                    .map_err(|e| Error::config("prime_override", e.to_string()))?;
                if p <= self.users as u64 {
                    return Err(Error::config(
                        "prime_override",
                        format!("p={p} leaves too few distinct evaluation points"),
                    ));
                }
                Ok(ctx)
            }
            None => FieldContext::select_prime(self.users as u64, self.ell)
                .map_err(|e| Error::config("ell", e.to_string())),
        }
    }

    pub fn prepare(&self) -> Result<PreparedRun> {
        let params = self.params()?;
        let ctx = self.field()?;
        let tree = AggregationTree::build(params.group_count(), &self.tree)
            .map_err(|e| Error::config("tree", e.to_string()))?;
        if self.dropouts.len() > params.max_dropouts {
            return Err(Error::config(
                "dropouts",
                format!(
                    "{} dropouts exceed the bound D={}",
                    self.dropouts.len(),
                    params.max_dropouts
                ),
            ));
        }
        if let Some(u) = self.dropouts.iter().find(|&&u| u >= params.users) {
            return Err(Error::config("dropouts", format!("unknown user {u}")));
        }
        if self.adversaries.len() > params.max_colluders {
            return Err(Error::config(
                "adversaries",
                format!(
                    "{} adversaries exceed the bound T={}",
                    self.adversaries.len(),
                    params.max_colluders
                ),
            ));
        }
        if let Some(u) = self.adversaries.iter().find(|&&u| u >= params.users) {
            return Err(Error::config("adversaries", format!("unknown user {u}")));
        }
        let models = match &self.models {
            Some(rows) => {
                if rows.len() != params.users {
                    return Err(Error::config(
                        "models",
                        format!("{} models for {} users", rows.len(), params.users),
                    ));
                }
                rows.iter()
                    .enumerate()
                    .map(|(n, row)| {
                        if row.len() != params.model_len {
                            return Err(Error::config(
                                "models",
                                format!("model {n} has length {}", row.len()),
                            ));
                        }
                        Model::from_values(&ctx, row)
                            .map_err(|e| Error::config("models", format!("model {n}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => random_models(&ctx, &params, self.seed),
        };
        let plan = DropoutPlan {
            users: self.dropouts.clone(),
            timing: self.drop_timing,
        };
        Ok(PreparedRun {
            ctx,
            params,
            tree,
            plan,
            models,
        })
    }
}

/// Models with entries uniform in `[0, ell)`, drawn from stream 1 of the
/// ChaCha generator keyed by `seed` (noise seeds use stream 0).
pub fn random_models(ctx: &FieldContext, params: &ProtocolParams, seed: u64) -> Vec<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..params.users)
        .map(|_| {
            let row: Vec<u64> = (0..params.model_len)
                .map(|_| rng.gen_range(0..params.ell))
                .collect();
            Model::from_values(ctx, &row).expect("entries drawn below ell")
        })
        .collect()
}

fn json_field(e: &serde_json::Error) -> String {
    // serde reports missing/unknown fields as "... field `name` ..."
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .map(str::to_owned)
        .unwrap_or_else(|| "document".into())
}
