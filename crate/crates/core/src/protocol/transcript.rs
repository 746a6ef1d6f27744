//! Message log of a protocol run and the link statistics derived from it.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Endpoint {
    User(usize),
    Server,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::User(n) => write!(f, "{n}"),
            Endpoint::Server => f.write_str("server"),
        }
    }
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "server" {
            return Ok(Endpoint::Server);
        }
        s.parse().map(Endpoint::User).map_err(|_| {
            Error::config(
                "endpoint",
                format!("`{s}` is neither a user index nor `server`"),
            )
        })
    }
}

impl From<Endpoint> for String {
    fn from(e: Endpoint) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Endpoint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intra,
    Inter,
    Server,
}

/// One transmission attempt on a potential link.
///
/// Null entries (`null == true`) stand for a message that was never sent and
/// carry zero symbols. A non-null message to a user who has already dropped is
/// still charged to the sender but is not `delivered`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub phase: Phase,
    pub sender: usize,
    pub receiver: Endpoint,
    pub symbols: usize,
    pub null: bool,
    pub delivered: bool,
    #[serde(skip)]
    pub payload: Option<Vec<FieldElement>>,
}

impl Message {
    pub fn is_self(&self) -> bool {
        self.receiver == Endpoint::User(self.sender)
    }

    /// Undirected link key; the server sorts after every user.
    pub fn link(&self) -> (Endpoint, Endpoint) {
        let a = Endpoint::User(self.sender);
        if a <= self.receiver {
            (a, self.receiver)
        } else {
            (self.receiver, a)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<Message>,
}

/// Per-phase message counts; only non-null, non-self messages are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub intra: usize,
    pub inter: usize,
    pub server: usize,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: Message) {
        self.messages.push(m);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn symbols_sent_by(&self, user: usize) -> usize {
        self.messages
            .iter()
            .filter(|m| m.sender == user)
            .map(|m| m.symbols)
            .sum()
    }

    pub fn total_symbols_sent(&self) -> usize {
        self.messages.iter().map(|m| m.symbols).sum()
    }

    /// Symbols in non-null messages addressed to the server.
    pub fn server_symbols(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| m.receiver == Endpoint::Server && !m.null)
            .map(|m| m.symbols)
            .sum()
    }

    /// Links that appear in the transcript at all, i.e. potential links.
    pub fn links(&self) -> BTreeMap<(Endpoint, Endpoint), bool> {
        let mut links = BTreeMap::new();
        for m in self.messages.iter().filter(|m| !m.is_self()) {
            let active = links.entry(m.link()).or_insert(false);
            *active |= m.delivered && !m.null;
        }
        links
    }

    pub fn link_count(&self) -> usize {
        self.links().len()
    }

    /// Potential links on which nothing was delivered.
    pub fn silent_link_count(&self) -> usize {
        self.links().values().filter(|&&active| !active).count()
    }

    pub fn phase_counts(&self) -> PhaseCounts {
        let mut c = PhaseCounts::default();
        for m in self.messages.iter().filter(|m| !m.null && !m.is_self()) {
            match m.phase {
                Phase::Intra => c.intra += 1,
                Phase::Inter => c.inter += 1,
                Phase::Server => c.server += 1,
            }
        }
        c
    }

    /// CSV with header `phase,sender,receiver,symbols,null,delivered`.
    /// Payloads are not exported.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for m in &self.messages {
            wtr.serialize(m).map_err(|e| Error::Io(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let messages = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<Message>, _>>()
            .map_err(|e| Error::Io(e.to_string()))?;
        Ok(Transcript { messages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(
        phase: Phase,
        s: usize,
        r: Endpoint,
        symbols: usize,
        null: bool,
        delivered: bool,
    ) -> Message {
        Message {
            phase,
            sender: s,
            receiver: r,
            symbols,
            null,
            delivered,
            payload: None,
        }
    }

    #[test]
    fn link_accounting() {
        let mut t = Transcript::new();
        t.push(msg(Phase::Intra, 0, Endpoint::User(0), 0, false, true));
        t.push(msg(Phase::Intra, 0, Endpoint::User(1), 2, false, false));
        t.push(msg(Phase::Intra, 1, Endpoint::User(0), 0, true, false));
        t.push(msg(Phase::Intra, 0, Endpoint::User(2), 2, false, true));
        t.push(msg(Phase::Server, 2, Endpoint::Server, 2, false, true));
        assert_eq!(t.link_count(), 3);
        assert_eq!(t.silent_link_count(), 1);
        assert_eq!(t.symbols_sent_by(0), 4);
        assert_eq!(t.server_symbols(), 2);
        assert_eq!(
            t.phase_counts(),
            PhaseCounts {
                intra: 2,
                inter: 0,
                server: 1
            }
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut t = Transcript::new();
        t.push(msg(Phase::Inter, 3, Endpoint::User(9), 4, false, true));
        t.push(msg(Phase::Server, 9, Endpoint::Server, 0, true, false));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "phase,sender,receiver,symbols,null,delivered\ninter,3,9,4,false,true\nserver,9,server,0,true,false\n"
        );
        assert_eq!(Transcript::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn endpoint_parse() {
        assert_eq!("server".parse::<Endpoint>().unwrap(), Endpoint::Server);
        assert_eq!("17".parse::<Endpoint>().unwrap(), Endpoint::User(17));
        assert!("u1".parse::<Endpoint>().is_err());
    }
}
