//! Toolkit for avoidance couplings of random walkers.
//!
//! * [`sequence`]: words over `[k] ∪ {B}` and their neighbor-pair weights.
//! * [`reduction`]: the reduction that proves `total weight ≤ #blanks`, with certificates.
//! * [`exhaustive`]: checks that inequality on every short permissible word.
//! * [`bounds`]: the pressure bound `p(1 − p log p) ≤ 1/k` and the walker bound `⌈n − log n⌉`.
//! * [`sim`]: trace generation, avoidance checks, projection and statistics.
//! * [`lp`]: a window linear relaxation whose infeasibility rules out couplings.

pub mod bounds;
pub mod exhaustive;
pub mod lp;
pub mod reduction;
pub mod sequence;
pub mod sim;

pub use sequence::{parse_seq, Seq, Symbol, Weight};
