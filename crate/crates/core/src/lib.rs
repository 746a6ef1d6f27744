//! Secure aggregation for federated learning with ramp secret sharing over a
//! prime field, group-and-tree message routing, dropout tolerance, and exact
//! communication-load accounting.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: GF(p) arithmetic and Lagrange interpolation;
//! * [`sharing`]: model partitioning, share polynomials, aggregate recovery;
//! * [`topology`]: protocol dimensions, grouping, aggregation trees;
//! * [`protocol`]: the per-user and server state machines of one round;
//! * [`harness`]: the deterministic simulator, load metrics, adversary views
//!   and brute-force oracles;
//! * [`cli`]: the `swiftagg` command-line front end.

pub mod cli;
pub mod error;
pub mod field;
pub mod harness;
pub mod protocol;
pub mod sharing;
pub mod topology;

pub use error::{Error, Result};
