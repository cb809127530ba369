//! Expected broadcast latency in finite wireless networks.
//!
//! A source at the centre of a `d`-ball of radius `R` must deliver one message to
//! `N` highly mobile nodes whose positions are redrawn uniformly every slot.
//! Links suffer Rayleigh fading and the path loss `l(r) = 1 / (1 + r^alpha)`; a
//! receiver decodes when `|h|^2 / (1 + r^alpha) >= theta`.
//!
//! Two protocols are covered:
//!
//! - non-cooperative: only the source ever transmits;
//! - cooperative: once any receiver holds the message the source falls silent and
//!   every reached node retransmits; receivers listen to their nearest transmitter.
//!
//! The crate provides
//! - the compound fading/path-loss law and stage success probabilities ([`channel`]),
//! - binomial point-process sampling and nearest-neighbour laws ([`point_process`]),
//! - latency distributions by outcome enumeration, a forward Markov pass and an
//!   absorption-time solve ([`latency`]),
//! - a seeded, parallel Monte-Carlo simulator ([`simulator`]),
//! - the experiment driver behind the `bcast-latency` binary ([`cli`]).

pub mod channel;
pub mod cli;
mod dd;
pub mod error;
pub mod latency;
pub mod point_process;
pub mod quadrature;
pub mod simulator;
pub mod special_fn;

pub use channel::NetworkConfig;
pub use error::{Error, Result};
pub use latency::{LatencyResult, Method, StageDistribution};
pub use point_process::{DiskWindow, PointSet};
pub use simulator::{ProtocolKind, SimSummary, TrialRecord};
