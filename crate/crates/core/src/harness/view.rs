use std::collections::BTreeSet;

use crate::field::FieldElement;
use crate::protocol::{Endpoint, Phase, Transcript, UserState};
use crate::sharing::{Model, NoiseBlock};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewEntry {
    pub phase: Phase,
    pub sender: usize,
    pub receiver: Endpoint,
    pub values: Vec<FieldElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OwnData {
    pub user: usize,
    pub model: Model,
    pub noise: NoiseBlock,
}

/// What a coalition of colluding users together with the server observes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryView {
    pub adversaries: BTreeSet<usize>,
    /// Messages delivered to a colluding user from someone else.
    pub received: Vec<ViewEntry>,
    /// Messages delivered to the server.
    pub server: Vec<ViewEntry>,
    pub own: Vec<OwnData>,
}

impl AdversaryView {
    /// Received and server values flattened in transcript order. Two views of
    /// runs with the same dropout pattern are equal iff their keys are.
    pub fn key(&self) -> Vec<u64> {
        self.received
            .iter()
            .chain(&self.server)
            .flat_map(|e| e.values.iter().map(|v| v.value()))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ViewEntry> {
        self.received.iter().chain(&self.server)
    }
}

pub fn collect_adversary_view(
    transcript: &Transcript,
    states: &[UserState],
    adversaries: &BTreeSet<usize>,
) -> AdversaryView {
    let mut received = Vec::new();
    let mut server = Vec::new();
    for m in transcript.messages() {
        if !m.delivered || m.null || m.is_self() {
            continue;
        }
        let Some(values) = &m.payload else { continue };
        let entry = || ViewEntry {
            phase: m.phase,
            sender: m.sender,
            receiver: m.receiver,
            values: values.clone(),
        };
        match m.receiver {
            Endpoint::Server => server.push(entry()),
            Endpoint::User(u) if adversaries.contains(&u) => received.push(entry()),
            Endpoint::User(_) => {}
        }
    }
    let own = adversaries
        .iter()
        .filter_map(|&u| states.get(u))
        .map(|s| OwnData {
            user: s.id.index,
            model: s.model.clone(),
            noise: s.noise.clone(),
        })
        .collect();
    AdversaryView {
        adversaries: adversaries.clone(),
        received,
        server,
        own,
    }
}
