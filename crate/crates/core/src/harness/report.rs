use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::protocol::{PhaseCounts, Transcript};
use crate::topology::ProtocolParams;

/// Bump on any change to the JSON layout of [`RunReport`].
pub const SCHEMA_VERSION: u32 = 1;

pub type Rational = Ratio<u64>;

/// Rationals travel as `"num/den"` strings so they stay exact in JSON.
pub mod ratio_str {
    use super::Rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| D::Error::custom(format!("bad rational `{s}`")))
    }

    pub fn parse(s: &str) -> Option<Rational> {
        match s.split_once('/') {
            Some((n, d)) => {
                let n: u64 = n.trim().parse().ok()?;
                let d: u64 = d.trim().parse().ok()?;
                (d != 0).then(|| Rational::new(n, d))
            }
            None => Some(Rational::from_integer(s.trim().parse().ok()?)),
        }
    }
}

mod ratio_vec {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|r| format!("{}/{}", r.numer(), r.denom()))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| {
                super::ratio_str::parse(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`")))
            })
            .collect()
    }
}

pub fn ratio_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Communication loads in field symbols, normalized by the model length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loads {
    /// Non-null symbols received by the server over `L`.
    #[serde(with = "ratio_str")]
    pub server: Rational,
    /// Largest per-user sent load among users that did not drop.
    #[serde(with = "ratio_str")]
    pub user_max: Rational,
    /// Total symbols sent by all users over `N*L`.
    #[serde(with = "ratio_str")]
    pub user_avg: Rational,
    #[serde(with = "ratio_vec")]
    pub per_user: Vec<Rational>,
}

/// Loads computed from the transcript alone.
pub fn measure_loads(
    transcript: &Transcript,
    params: &ProtocolParams,
    dropped: &BTreeSet<usize>,
) -> Loads {
    let l = params.model_len as u64;
    let n = params.users as u64;
    let per_user: Vec<Rational> = (0..params.users)
        .map(|u| Rational::new(transcript.symbols_sent_by(u) as u64, l))
        .collect();
    let user_max = per_user
        .iter()
        .enumerate()
        .filter(|(u, _)| !dropped.contains(u))
        .map(|(_, r)| *r)
        .max()
        .unwrap_or_else(|| Rational::from_integer(0));
    Loads {
        server: Rational::new(transcript.server_symbols() as u64, l),
        user_max,
        user_avg: Rational::new(transcript.total_symbols_sent() as u64, n * l),
        per_user,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub params: ProtocolParams,
    pub prime: u64,
    pub conforming_field: bool,
    pub bits_per_symbol: u32,
    pub seed: u64,
    pub dropouts: BTreeSet<usize>,
    /// Users whose models are in the recovered aggregate.
    pub contributors: Vec<usize>,
    pub recovered: Vec<u64>,
    pub loads: Loads,
    pub r_server: f64,
    pub r_user_max: f64,
    pub r_user_avg: f64,
    /// Server load in bits per model entry.
    pub server_bits_per_entry: f64,
    /// Largest per-user load in bits per model entry.
    pub user_bits_per_entry: f64,
    /// log2((ell-1)N + 1), the server-side cut-set value per entry.
    pub cut_set_server_bits: f64,
    /// log2(ell), the per-user cut-set value per entry.
    pub cut_set_user_bits: f64,
    pub total_edges: usize,
    pub silent_edges: usize,
    pub delay: f64,
    pub messages: PhaseCounts,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
