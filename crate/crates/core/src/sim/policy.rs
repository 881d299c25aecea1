//! Seeded trace generators.
//!
//! Every generator draws from a `ChaCha8Rng` and only uses `u32` ranges and
//! `gen_bool`, so a seed yields the same trace on every platform.

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{CouplingTrace, WalkerTrace};
use super::SimError;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Emits rows of a binary occupancy trace.
pub trait CouplingPolicy {
    fn k(&self) -> u32;
    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u8>;
}

/// Emits rows of walker positions on `K_n` or `K_n^*`.
pub trait WalkerPolicy {
    fn n(&self) -> u32;
    fn k(&self) -> u32;
    fn looped(&self) -> bool;
    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u32>;
}

fn check_p(p: f64) -> Result<f64, SimError> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(SimError::Probability(p))
    }
}

/// A single i.i.d. Bernoulli(`p`) walker: trivially a 1-avoidance coupling.
#[derive(Debug, Clone)]
pub struct SingleBernoulli {
    p: f64,
}

impl SingleBernoulli {
    pub fn new(p: f64) -> Result<Self, SimError> {
        Ok(SingleBernoulli { p: check_p(p)? })
    }
}

impl CouplingPolicy for SingleBernoulli {
    fn k(&self) -> u32 {
        1
    }

    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u8> {
        vec![u8::from(rng.gen_bool(self.p))]
    }
}

/// Walker `((t−1) mod k) + 1` occupies the site at time `t`. Not faithful, and for
/// `k ≥ 2` each wrap from walker `k` back to walker 1 is a cross-time collision.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    k: u32,
    next: u32,
}

impl RoundRobin {
    pub fn new(k: u32) -> Result<Self, SimError> {
        if k == 0 {
            return Err(SimError::NoWalkers);
        }
        Ok(RoundRobin { k, next: 0 })
    }
}

impl CouplingPolicy for RoundRobin {
    fn k(&self) -> u32 {
        self.k
    }

    fn next_row(&mut self, _rng: &mut ChaCha8Rng) -> Vec<u8> {
        let mut row = vec![0; self.k as usize];
        row[self.next as usize] = 1;
        self.next = (self.next + 1) % self.k;
        row
    }
}

/// `k` independent Bernoulli(`p`) walkers. Faithful, but they collide.
#[derive(Debug, Clone)]
pub struct Independent {
    k: u32,
    p: f64,
}

impl Independent {
    pub fn new(k: u32, p: f64) -> Result<Self, SimError> {
        if k == 0 {
            return Err(SimError::NoWalkers);
        }
        Ok(Independent { k, p: check_p(p)? })
    }
}

impl CouplingPolicy for Independent {
    fn k(&self) -> u32 {
        self.k
    }

    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u8> {
        (0..self.k)
            .map(|_| u8::from(rng.gen_bool(self.p)))
            .collect()
    }
}

/// Walkers that never collide: each in turn jumps to a uniform vertex that
/// nobody else occupies (and, when loopless, that differs from its own).
///
/// The first row is a uniform placement of distinct vertices. For `k = 1`
/// this is the simple random walk on `K_n` or `K_n^*`.
#[derive(Debug, Clone)]
pub struct AvoidingWalk {
    n: u32,
    k: u32,
    looped: bool,
    positions: Option<Vec<u32>>,
}

impl AvoidingWalk {
    pub fn new(n: u32, k: u32, looped: bool) -> Result<Self, SimError> {
        if k == 0 {
            return Err(SimError::NoWalkers);
        }
        let needed = if looped { k } else { k + 1 };
        if n < needed.max(2) {
            return Err(SimError::GraphTooSmall { n, k, looped });
        }
        Ok(AvoidingWalk {
            n,
            k,
            looped,
            positions: None,
        })
    }
}

impl WalkerPolicy for AvoidingWalk {
    fn n(&self) -> u32 {
        self.n
    }

    fn k(&self) -> u32 {
        self.k
    }

    fn looped(&self) -> bool {
        self.looped
    }

    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let Some(positions) = self.positions.as_mut() else {
            let start: Vec<u32> = index::sample(rng, self.n as usize, self.k as usize)
                .into_iter()
                .map(|v| v as u32 + 1)
                .collect();
            self.positions = Some(start.clone());
            return start;
        };
        let mut choices: Vec<u32> = Vec::with_capacity(self.n as usize);
        for a in 0..positions.len() {
            let own = positions[a];
            choices.clear();
            choices.extend((1..=self.n).filter(|&v| {
                let taken = positions
                    .iter()
                    .enumerate()
                    .any(|(b, &other)| b != a && other == v);
                !taken && (self.looped || v != own)
            }));
            positions[a] = choices[rng.gen_range(0..choices.len() as u32) as usize];
        }
        positions.clone()
    }
}

/// Turns a loopless policy into a looped one: before every round after the
/// first, with probability `1/n` all walkers stay where they are.
#[derive(Debug, Clone)]
pub struct StayingInWaves<P> {
    inner: P,
    previous: Option<Vec<u32>>,
    waves: Vec<bool>,
}

pub fn staying_in_waves<P: WalkerPolicy>(inner: P, n: u32) -> Result<StayingInWaves<P>, SimError> {
    if inner.looped() {
        return Err(SimError::AlreadyLooped);
    }
    if inner.n() != n {
        return Err(SimError::VertexCountMismatch {
            expected: n,
            found: inner.n(),
        });
    }
    Ok(StayingInWaves {
        inner,
        previous: None,
        waves: Vec::new(),
    })
}

impl<P> StayingInWaves<P> {
    /// Per emitted row: `true` when that round was a frozen wave.
    pub fn waves(&self) -> &[bool] {
        &self.waves
    }
}

impl<P: WalkerPolicy> WalkerPolicy for StayingInWaves<P> {
    fn n(&self) -> u32 {
        self.inner.n()
    }

    fn k(&self) -> u32 {
        self.inner.k()
    }

    fn looped(&self) -> bool {
        true
    }

    fn next_row(&mut self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let row = match &self.previous {
            Some(prev) if rng.gen_bool(1.0 / f64::from(self.inner.n())) => {
                self.waves.push(true);
                prev.clone()
            }
            _ => {
                self.waves.push(false);
                self.inner.next_row(rng)
            }
        };
        self.previous = Some(row.clone());
        row
    }
}

pub fn simulate<P: CouplingPolicy + ?Sized>(
    policy: &mut P,
    rounds: usize,
    seed: u64,
) -> CouplingTrace {
    let mut rng = seeded_rng(seed);
    let mut tr = CouplingTrace::new(policy.k());
    for _ in 0..rounds {
        tr.push_row(&policy.next_row(&mut rng))
            .expect("policy emits rows of its declared width");
    }
    tr
}

pub fn simulate_walkers<P: WalkerPolicy + ?Sized>(
    policy: &mut P,
    rounds: usize,
    seed: u64,
) -> WalkerTrace {
    let mut rng = seeded_rng(seed);
    let mut tr = WalkerTrace::new(policy.n(), policy.k(), policy.looped());
    for _ in 0..rounds {
        tr.push_row(&policy.next_row(&mut rng))
            .expect("policy emits rows of its declared width");
    }
    tr
}
