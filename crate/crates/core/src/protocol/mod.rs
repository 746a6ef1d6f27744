//! Per-user and server state machines for one aggregation round.
//!
//! A round runs in three synchronous phases:
//!
//! 1. intra-group: every user sends `F_n(alpha_t)` to position `t` of its own
//!    group and sums what it receives into `Q`;
//! 2. inter-group: groups are visited children-first; position `t` adds the
//!    same-position messages of all child groups to its `Q` and forwards the
//!    result to position `t` of the parent group. A user missing any child
//!    message goes silent for the rest of the round;
//! 3. upload: the last group sends its messages to the server, which
//!    interpolates the aggregate from `K+T` of them.

pub mod transcript;

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldContext, FieldElement};
use crate::sharing::{
    evaluation_point, make_share_poly, partition_model, recover_aggregate, sample_noise, share_at,
    Model, NoiseBlock, Share, SharePolynomial,
};
use crate::topology::{assign_groups, AggregationTree, Parent, ProtocolParams, UserId};
pub use transcript::{Endpoint, Message, Phase, PhaseCounts, Transcript};

/// When the users of a [`DropoutPlan`] go silent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropTiming {
    /// Before sharing: the user sends nothing and its model is not aggregated.
    #[default]
    BeforeIntra,
    /// After sharing: its shares were delivered, but it sends no inter-group
    /// or server message.
    AfterIntra,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropoutPlan {
    pub users: BTreeSet<usize>,
    #[serde(default)]
    pub timing: DropTiming,
}

impl DropoutPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn before_intra(users: impl IntoIterator<Item = usize>) -> Self {
        DropoutPlan {
            users: users.into_iter().collect(),
            timing: DropTiming::BeforeIntra,
        }
    }

    pub fn after_intra(users: impl IntoIterator<Item = usize>) -> Self {
        DropoutPlan {
            users: users.into_iter().collect(),
            timing: DropTiming::AfterIntra,
        }
    }
}

/// How many last-group users the server pulls uploads from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerCollection {
    /// Pull in position order and stop once `K+T` non-null uploads are in;
    /// the remaining positions never transmit.
    #[default]
    Minimal,
    /// Every surviving last-group user uploads.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserStatus {
    Active,
    Dropped,
    Silenced,
}

/// `Q_(g,t)`: the sum of all in-group shares evaluated at `alpha_t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntraAggregate {
    pub owner: UserId,
    pub values: Vec<FieldElement>,
}

/// `S_(g,t)`, or the null symbol when `values` is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterGroupMessage {
    pub sender: UserId,
    pub receiver: Endpoint,
    pub values: Option<Vec<FieldElement>>,
}

impl InterGroupMessage {
    pub fn is_null(&self) -> bool {
        self.values.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct UserState {
    pub id: UserId,
    pub model: Model,
    pub noise: NoiseBlock,
    pub poly: SharePolynomial,
    pub status: UserStatus,
    /// Shares received during the intra round, keyed by sender position.
    pub received_shares: BTreeMap<usize, Share>,
    /// Child group -> what arrived from its same-position user.
    pub received_child_msgs: BTreeMap<usize, Option<Vec<FieldElement>>>,
    pub intra: Option<IntraAggregate>,
    pub outgoing: Option<InterGroupMessage>,
}

impl UserState {
    pub fn new(
        params: &ProtocolParams,
        id: UserId,
        model: Model,
        noise: NoiseBlock,
    ) -> Result<Self> {
        if model.len() != params.model_len {
            return Err(Error::DimensionMismatch(format!(
                "user {} has a model of length {}, expected {}",
                id.index,
                model.len(),
                params.model_len
            )));
        }
        if noise.len() != params.max_colluders {
            return Err(Error::DimensionMismatch(format!(
                "user {} has {} noise vectors, expected {}",
                id.index,
                noise.len(),
                params.max_colluders
            )));
        }
        let poly = make_share_poly(&partition_model(&model, params.partitions)?, &noise)?;
        Ok(UserState {
            id,
            model,
            noise,
            poly,
            status: UserStatus::Active,
            received_shares: BTreeMap::new(),
            received_child_msgs: BTreeMap::new(),
            intra: None,
            outgoing: None,
        })
    }

    pub fn is_dropped(&self) -> bool {
        self.status == UserStatus::Dropped
    }
}

/// Where each user's noise comes from.
#[derive(Clone, Copy, Debug)]
pub enum NoiseSource<'a> {
    /// Per-user seeds drawn in index order from a ChaCha stream keyed by the
    /// master seed.
    Seeded(u64),
    Explicit(&'a [NoiseBlock]),
}

/// Per-user noise seeds derived from a master seed.
pub fn user_seeds(master: u64, users: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..users).map(|_| rng.next_u64()).collect()
}

/// Runs the intra-group sharing for one group.
///
/// `members` must be the group's states in position order. Users already
/// marked dropped neither send nor receive; their shares count as zero.
pub fn intra_round(
    ctx: &FieldContext,
    params: &ProtocolParams,
    members: &mut [UserState],
    transcript: &mut Transcript,
) -> Result<()> {
    let nu = members.len();
    let seg = params.segment_len();
    for sender in 0..nu {
        for receiver in 0..nu {
            let from = members[sender].id.index;
            let to = members[receiver].id.index;
            if members[sender].is_dropped() {
                transcript.push(Message {
                    phase: Phase::Intra,
                    sender: from,
                    receiver: Endpoint::User(to),
                    symbols: 0,
                    null: true,
                    delivered: false,
                    payload: None,
                });
                continue;
            }
            let share = share_at(ctx, &members[sender].poly, evaluation_point(ctx, receiver))?;
            let own = sender == receiver;
            let delivered = !members[receiver].is_dropped();
            transcript.push(Message {
                phase: Phase::Intra,
                sender: from,
                receiver: Endpoint::User(to),
                symbols: if own { 0 } else { seg },
                null: false,
                delivered,
                payload: Some(share.values.clone()),
            });
            if delivered {
                members[receiver].received_shares.insert(sender, share);
            }
        }
    }
    for m in members.iter_mut().filter(|m| !m.is_dropped()) {
        let mut q = vec![FieldElement::ZERO; seg];
        for share in m.received_shares.values() {
            ctx.add_assign_vec(&mut q, &share.values);
        }
        m.intra = Some(IntraAggregate {
            owner: m.id,
            values: q,
        });
    }
    Ok(())
}

/// Computes `S` for one user from its `Q` and its child messages.
///
/// Leaves forward `Q`; internal users add every child's message. A missing
/// (null) child message, or a dropped user, yields a null message, and a
/// user who was active becomes silenced.
pub fn inter_round(
    ctx: &FieldContext,
    user: &mut UserState,
    children: &[usize],
    receiver: Endpoint,
) -> InterGroupMessage {
    let mut values = None;
    if user.status == UserStatus::Active {
        if let Some(q) = &user.intra {
            let mut s = q.values.clone();
            let mut complete = true;
            for c in children {
                match user.received_child_msgs.get(c) {
                    Some(Some(v)) => ctx.add_assign_vec(&mut s, v),
                    _ => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete {
                values = Some(s);
            } else {
                user.status = UserStatus::Silenced;
            }
        }
    }
    let msg = InterGroupMessage {
        sender: user.id,
        receiver,
        values,
    };
    user.outgoing = Some(msg.clone());
    msg
}

/// Interpolates the aggregate from the last group's uploads. Null messages
/// are skipped; the first `K+T` non-null ones are used.
pub fn server_recover(
    ctx: &FieldContext,
    params: &ProtocolParams,
    messages: &[InterGroupMessage],
) -> Result<Vec<FieldElement>> {
    let mut seen = BTreeSet::new();
    let evals: Vec<_> = messages
        .iter()
        .filter_map(|m| {
            m.values
                .as_ref()
                .map(|v| (evaluation_point(ctx, m.sender.position), v.clone()))
        })
        .filter(|(a, _)| seen.insert(*a))
        .collect();
    let needed = params.recovery_threshold();
    if evals.len() < needed {
        return Err(Error::TooManyDropouts {
            needed,
            got: evals.len(),
        });
    }
    recover_aggregate(
        ctx,
        &evals,
        params.partitions,
        params.max_colluders,
        params.model_len,
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub collection: ServerCollection,
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub aggregate: Vec<FieldElement>,
    pub transcript: Transcript,
    pub states: Vec<UserState>,
    /// Uploads as seen by the server, nulls included, in position order.
    pub server_messages: Vec<InterGroupMessage>,
    /// Users whose shares entered the aggregate.
    pub contributors: Vec<usize>,
}

impl ProtocolRun {
    /// `S` values computed by the last group, whether or not they were pulled.
    pub fn last_group_values(&self) -> Vec<(usize, Vec<FieldElement>)> {
        let nu = self.server_messages.len();
        let start = self.states.len() - nu;
        self.states[start..]
            .iter()
            .filter_map(|s| {
                s.outgoing
                    .as_ref()
                    .and_then(|m| m.values.clone())
                    .map(|v| (s.id.position, v))
            })
            .collect()
    }
}

/// Builds every user's state, drawing noise from `noise`.
pub fn init_states(
    ctx: &FieldContext,
    params: &ProtocolParams,
    models: &[Model],
    noise: NoiseSource<'_>,
) -> Result<Vec<UserState>> {
    if models.len() != params.users {
        return Err(Error::DimensionMismatch(format!(
            "{} models for {} users",
            models.len(),
            params.users
        )));
    }
    let blocks: Vec<NoiseBlock> = match noise {
        NoiseSource::Seeded(master) => user_seeds(master, params.users)
            .into_iter()
            .map(|s| sample_noise(ctx, params.max_colluders, params.segment_len(), s))
            .collect(),
        NoiseSource::Explicit(blocks) => {
            if blocks.len() != params.users {
                return Err(Error::DimensionMismatch(format!(
                    "{} noise blocks for {} users",
                    blocks.len(),
                    params.users
                )));
            }
            blocks.to_vec()
        }
    };
    models
        .iter()
        .zip(blocks)
        .enumerate()
        .map(|(n, (m, z))| UserState::new(params, params.user(n), m.clone(), z))
        .collect()
}

/// Runs one full aggregation round.
///
/// The dropout plan is not checked against `D`; exceeding it surfaces as
/// [`Error::TooManyDropouts`] when too few uploads reach the server.
pub fn run_protocol(
    ctx: &FieldContext,
    params: &ProtocolParams,
    models: &[Model],
    tree: &AggregationTree,
    plan: &DropoutPlan,
    noise: NoiseSource<'_>,
    options: RunOptions,
) -> Result<ProtocolRun> {
    if tree.group_count() != params.group_count() {
        return Err(Error::NotATree(format!(
            "tree has {} groups, parameters give {}",
            tree.group_count(),
            params.group_count()
        )));
    }
    if let Some(&bad) = plan.users.iter().find(|&&u| u >= params.users) {
        return Err(Error::InvalidParams(format!(
            "dropout of unknown user {bad}"
        )));
    }
    let mut states = init_states(ctx, params, models, noise)?;
    let nu = params.group_size();
    let seg = params.segment_len();
    let mut transcript = Transcript::new();

    if plan.timing == DropTiming::BeforeIntra {
        for &u in &plan.users {
            states[u].status = UserStatus::Dropped;
        }
    }
    for group in assign_groups(params) {
        intra_round(
            ctx,
            params,
            &mut states[group[0]..group[0] + nu],
            &mut transcript,
        )?;
    }
    if plan.timing == DropTiming::AfterIntra {
        for &u in &plan.users {
            states[u].status = UserStatus::Dropped;
        }
    }
    let contributors: Vec<usize> = match plan.timing {
        DropTiming::BeforeIntra => (0..params.users)
            .filter(|u| !plan.users.contains(u))
            .collect(),
        DropTiming::AfterIntra => (0..params.users).collect(),
    };

    let last = tree.last_group();
    let mut server_messages = Vec::with_capacity(nu);
    for g in tree.post_order() {
        let children = tree.children(g)?.to_vec();
        let parent = tree.parent(g)?;
        for t in 0..nu {
            let idx = g * nu + t;
            let receiver = match parent {
                Parent::Server => Endpoint::Server,
                Parent::Group(q) => Endpoint::User(q * nu + t),
            };
            let msg = inter_round(ctx, &mut states[idx], &children, receiver);
            match receiver {
                Endpoint::User(r) => {
                    let delivered = msg.values.is_some() && !states[r].is_dropped();
                    transcript.push(Message {
                        phase: Phase::Inter,
                        sender: idx,
                        receiver,
                        symbols: if msg.is_null() { 0 } else { seg },
                        null: msg.is_null(),
                        delivered,
                        payload: msg.values.clone(),
                    });
                    if !states[r].is_dropped() {
                        states[r].received_child_msgs.insert(g, msg.values);
                    }
                }
                Endpoint::Server => {
                    debug_assert_eq!(g, last);
                    server_messages.push(msg);
                }
            }
        }
    }

    // uploads
    let needed = params.recovery_threshold();
    let mut collected = 0;
    for msg in server_messages.iter_mut() {
        let pulled = options.collection == ServerCollection::All || collected < needed;
        if !pulled {
            msg.values = None;
        }
        if msg.values.is_some() {
            collected += 1;
        }
        transcript.push(Message {
            phase: Phase::Server,
            sender: msg.sender.index,
            receiver: Endpoint::Server,
            symbols: if msg.is_null() { 0 } else { seg },
            null: msg.is_null(),
            delivered: !msg.is_null(),
            payload: msg.values.clone(),
        });
    }

    let aggregate = server_recover(ctx, params, &server_messages)?;
    Ok(ProtocolRun {
        aggregate,
        transcript,
        states,
        server_messages,
        contributors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TreeShape;
    use rand::Rng;

    fn setup(n: usize, t: usize, d: usize, k: usize, l: usize) -> (FieldContext, ProtocolParams) {
        let ell = 16;
        let params = ProtocolParams::new(n, t, d, k, l, ell).unwrap();
        (FieldContext::select_prime(n as u64, ell).unwrap(), params)
    }

    fn random_models(ctx: &FieldContext, params: &ProtocolParams, seed: u64) -> Vec<Model> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..params.users)
            .map(|_| {
                let v: Vec<u64> = (0..params.model_len)
                    .map(|_| rng.gen_range(0..params.ell))
                    .collect();
                Model::from_values(ctx, &v).unwrap()
            })
            .collect()
    }

    fn plain_sum(models: &[Model], users: &[usize]) -> Vec<u64> {
        let len = models[0].len();
        (0..len)
            .map(|i| users.iter().map(|&u| models[u].entries()[i].value()).sum())
            .collect()
    }

    fn values(v: &[FieldElement]) -> Vec<u64> {
        v.iter().map(|e| e.value()).collect()
    }

    #[test]
    fn zero_inputs_give_zero_q() {
        let (ctx, params) = setup(6, 1, 1, 1, 3);
        let models = vec![Model::zeros(3); 6];
        let noise = vec![NoiseBlock::zeros(1, 3); 6];
        let mut states =
            init_states(&ctx, &params, &models, NoiseSource::Explicit(&noise)).unwrap();
        let mut tr = Transcript::new();
        intra_round(&ctx, &params, &mut states[0..3], &mut tr).unwrap();
        for s in &states[0..3] {
            assert!(s.intra.as_ref().unwrap().values.iter().all(|v| v.is_zero()));
        }
        // 3 senders x 3 receivers, self entries carry no load
        assert_eq!(tr.len(), 9);
        assert_eq!(tr.total_symbols_sent(), 6 * 3);
    }

    #[test]
    fn leaf_forwards_q() {
        let (ctx, params) = setup(6, 1, 1, 1, 2);
        let models = random_models(&ctx, &params, 1);
        let mut states = init_states(&ctx, &params, &models, NoiseSource::Seeded(4)).unwrap();
        let mut tr = Transcript::new();
        intra_round(&ctx, &params, &mut states[0..3], &mut tr).unwrap();
        let q = states[1].intra.clone().unwrap().values;
        let msg = inter_round(&ctx, &mut states[1], &[], Endpoint::User(4));
        assert_eq!(msg.values, Some(q));
        assert_eq!(states[1].status, UserStatus::Active);
    }

    #[test]
    fn missing_child_silences() {
        let (ctx, params) = setup(6, 1, 1, 1, 2);
        let models = random_models(&ctx, &params, 1);
        let mut states = init_states(&ctx, &params, &models, NoiseSource::Seeded(4)).unwrap();
        let mut tr = Transcript::new();
        intra_round(&ctx, &params, &mut states[3..6], &mut tr).unwrap();
        states[4].received_child_msgs.insert(0, None);
        let msg = inter_round(&ctx, &mut states[4], &[0], Endpoint::Server);
        assert!(msg.is_null());
        assert_eq!(states[4].status, UserStatus::Silenced);
        // never having heard from the child at all is the same
        let msg = inter_round(&ctx, &mut states[5], &[0], Endpoint::Server);
        assert!(msg.is_null());
    }

    #[test]
    fn chain_of_three_matches_global_polynomial() {
        let (ctx, params) = setup(9, 1, 1, 1, 4);
        let models = random_models(&ctx, &params, 2);
        let tree = AggregationTree::build(3, &TreeShape::Chain).unwrap();
        let run = run_protocol(
            &ctx,
            &params,
            &models,
            &tree,
            &DropoutPlan::none(),
            NoiseSource::Seeded(5),
            RunOptions {
                collection: ServerCollection::All,
            },
        )
        .unwrap();
        // F = sum of all share polynomials, evaluated at each alpha_t
        for (pos, s) in run.last_group_values() {
            let alpha = evaluation_point(&ctx, pos);
            let mut want = vec![FieldElement::ZERO; params.segment_len()];
            for st in &run.states {
                ctx.add_assign_vec(&mut want, &share_at(&ctx, &st.poly, alpha).unwrap().values);
            }
            assert_eq!(s, want);
        }
        assert_eq!(
            values(&run.aggregate),
            plain_sum(&models, &(0..9).collect::<Vec<_>>())
        );
    }

    #[test]
    fn silence_propagates_up_the_lineage() {
        let (ctx, params) = setup(12, 1, 1, 1, 3);
        // 4 groups of 3, tree: 0 -> 1 -> 3, 2 -> 3
        let tree = AggregationTree::build(
            4,
            &TreeShape::Parents(vec![Some(1), Some(3), Some(3), None]),
        )
        .unwrap();
        let models = random_models(&ctx, &params, 3);
        let run = run_protocol(
            &ctx,
            &params,
            &models,
            &tree,
            &DropoutPlan::before_intra([1]),
            NoiseSource::Seeded(1),
            RunOptions {
                collection: ServerCollection::All,
            },
        )
        .unwrap();
        // user 1 is (0,1): S_(0,1), S_(1,1), S_(3,1) are null; S_(2,1) is not
        for idx in [1, 4, 10] {
            assert!(
                run.states[idx].outgoing.as_ref().unwrap().is_null(),
                "user {idx}"
            );
        }
        assert!(!run.states[7].outgoing.as_ref().unwrap().is_null());
        assert_eq!(run.states[4].status, UserStatus::Silenced);
        let survivors: Vec<usize> = (0..12).filter(|&u| u != 1).collect();
        assert_eq!(run.contributors, survivors);
        assert_eq!(values(&run.aggregate), plain_sum(&models, &survivors));
    }

    #[test]
    fn after_intra_drop_still_aggregates_the_dropped_model() {
        let (ctx, params) = setup(12, 2, 1, 3, 6);
        let tree = AggregationTree::build(2, &TreeShape::Chain).unwrap();
        let models = random_models(&ctx, &params, 9);
        let run = run_protocol(
            &ctx,
            &params,
            &models,
            &tree,
            &DropoutPlan::after_intra([2]),
            NoiseSource::Seeded(1),
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run.contributors, (0..12).collect::<Vec<_>>());
        assert_eq!(
            values(&run.aggregate),
            plain_sum(&models, &run.contributors)
        );
        // its shares went out; its S did not
        assert!(run
            .transcript
            .messages()
            .iter()
            .any(|m| m.sender == 2 && m.phase == Phase::Intra && m.delivered));
        assert!(run.states[8].outgoing.as_ref().unwrap().is_null());
    }

    #[test]
    fn server_needs_k_plus_t() {
        let (ctx, params) = setup(12, 2, 1, 9, 9);
        let tree = AggregationTree::build(1, &TreeShape::Chain).unwrap();
        let models = random_models(&ctx, &params, 1);
        let err = run_protocol(
            &ctx,
            &params,
            &models,
            &tree,
            &DropoutPlan::before_intra([0, 5]),
            NoiseSource::Seeded(1),
            RunOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::TooManyDropouts {
                needed: 11,
                got: 10
            }
        );
    }

    #[test]
    fn server_recover_skips_nulls() {
        let (ctx, params) = setup(3, 1, 1, 1, 1);
        let models = vec![
            Model::from_values(&ctx, &[5]).unwrap(),
            Model::from_values(&ctx, &[6]).unwrap(),
            Model::from_values(&ctx, &[7]).unwrap(),
        ];
        let noise: Vec<_> = (0..3)
            .map(|i| NoiseBlock::from_vectors(vec![vec![ctx.element(i + 2)]]))
            .collect();
        let states = init_states(&ctx, &params, &models, NoiseSource::Explicit(&noise)).unwrap();
        let msgs: Vec<_> = (0..3)
            .map(|t| {
                let alpha = evaluation_point(&ctx, t);
                let mut v = vec![FieldElement::ZERO];
                for s in &states {
                    ctx.add_assign_vec(&mut v, &share_at(&ctx, &s.poly, alpha).unwrap().values);
                }
                InterGroupMessage {
                    sender: params.user(t),
                    receiver: Endpoint::Server,
                    values: (t != 1).then_some(v),
                }
            })
            .collect();
        assert_eq!(
            values(&server_recover(&ctx, &params, &msgs).unwrap()),
            vec![18]
        );
        assert!(matches!(
            server_recover(&ctx, &params, &msgs[..2]),
            Err(Error::TooManyDropouts { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (ctx, params) = setup(6, 1, 1, 1, 2);
        let tree = AggregationTree::build(2, &TreeShape::Chain).unwrap();
        let models = random_models(&ctx, &params, 1);
        let wrong_tree = AggregationTree::build(3, &TreeShape::Chain).unwrap();
        assert!(run_protocol(
            &ctx,
            &params,
            &models,
            &wrong_tree,
            &DropoutPlan::none(),
            NoiseSource::Seeded(0),
            RunOptions::default()
        )
        .is_err());
        assert!(run_protocol(
            &ctx,
            &params,
            &models[..5],
            &tree,
            &DropoutPlan::none(),
            NoiseSource::Seeded(0),
            RunOptions::default()
        )
        .is_err());
        assert!(run_protocol(
            &ctx,
            &params,
            &models,
            &tree,
            &DropoutPlan::before_intra([6]),
            NoiseSource::Seeded(0),
            RunOptions::default()
        )
        .is_err());
    }
}
