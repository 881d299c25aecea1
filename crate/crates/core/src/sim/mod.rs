//! Coupling traces: generation, avoidance checks, projection and statistics.

pub mod policy;
pub mod stats;
pub mod trace;

use thiserror::Error;

pub use policy::{
    seeded_rng, simulate, simulate_walkers, staying_in_waves, AvoidingWalk, CouplingPolicy,
    Independent, RoundRobin, SingleBernoulli, StayingInWaves, WalkerPolicy,
};
pub use stats::{
    empirical_stats, faithfulness_tests, gap_chi_square, ChiSquareResult, EmpiricalStats,
    FaithfulnessParams, TestOutcome, TestReport,
};
pub use trace::{
    check_1avoidance, check_walker_avoidance, encode, parse_trace, project, AnyTrace,
    CouplingTrace, Violation, ViolationReport, WalkerTrace,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("probability must lie in (0, 1), got {0}")]
    Probability(f64),
    #[error("at least one walker is required")]
    NoWalkers,
    #[error("K_{n} ({}) cannot host {k} avoiding walkers", if *looped { "looped" } else { "loopless" })]
    GraphTooSmall { n: u32, k: u32, looped: bool },
    #[error("row {row} has {found} entries, expected {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {t} has {count} occupants of the site")]
    MultipleOccupants { t: usize, count: usize },
    #[error("vertex {vertex} is outside [1, {n}]")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("staying in waves needs a loopless policy")]
    AlreadyLooped,
    #[error("policy lives on {found} vertices, expected {expected}")]
    VertexCountMismatch { expected: u32, found: u32 },
    #[error("trace of length {len} is too short, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("malformed trace: {0}")]
    Format(String),
}
