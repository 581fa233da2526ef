//! Deterministic aggregation-tree simulator for the secure-aggregation
//! protocol.
//!
//! A scenario fixes the parameter set, tree shape, reading source, attack,
//! verification mode, and seed; running it replays one logical-time epoch
//! (two for replay attacks) and produces a byte-stable report: the
//! decrypted sum, the verification verdict, per-link traffic, and the
//! aggregated-versus-flat packet counts at the base station's ingress.
//!
//! Everything downstream of the seed is deterministic, including key
//! generation, so identical scenarios serialize to identical reports.

pub mod attack;
pub mod bench;
pub mod deploy;
pub mod report;
pub mod run;
pub mod scenario;
pub mod selftest;
pub mod topology;

pub use report::{DetectionVerdict, LinkMetric, RunReport};
pub use run::{run_scenario, SimError};
pub use scenario::{Attack, ParamSet, ReadingSource, Scenario};
pub use topology::Topology;
