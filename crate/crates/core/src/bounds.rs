//! Analytic bounds for 1-avoidance couplings and complete-graph walkers.
//!
//! `log` is the natural logarithm everywhere.

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-12;
const CEIL_GUARD: f64 = 1e-9;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("p must lie in {range}, got {p}")]
    Domain { p: f64, range: &'static str },
    #[error("walker count must be at least 1")]
    NoWalkers,
    #[error("vertex count must be at least 3, got {0}")]
    TooFewVertices(u64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("series length must be at least 1")]
    EmptySeries,
}

/// `p·(1 − p·log p)`: at most `1/k` for any 1-avoidance coupling of `k`
/// Bernoulli(`p`) walkers. Strictly increasing on `(0, 1]`.
pub fn feasible_pressure(p: f64) -> Result<f64, BoundsError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(BoundsError::Domain { p, range: "(0, 1]" });
    }
    Ok(pressure(p))
}

fn pressure(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (1.0 - p * p.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootResult {
    pub value: f64,
    /// `|feasible_pressure(value) − 1/k|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest `p` allowed by the pressure bound for `k` walkers, by bisection.
pub fn max_p(k: u64, tol: f64) -> Result<RootResult, BoundsError> {
    if k == 0 {
        return Err(BoundsError::NoWalkers);
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(BoundsError::Tolerance(tol));
    }
    if k == 1 {
        return Ok(RootResult {
            value: 1.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    let target = 1.0 / k as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        mid = 0.5 * (lo + hi);
        let value = pressure(mid);
        if (value - target).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RootResult {
        value: mid,
        residual: (pressure(mid) - target).abs(),
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkerBound {
    pub n: u64,
    /// `⌈n − log n⌉`.
    pub max_walkers: u64,
    /// `n²/(n + log n)`, the bound before rounding.
    pub quotient: f64,
    /// `log² n / (n + log n)`, at most 1 for `n ≥ 3`.
    pub correction: f64,
    /// `n − log n` lies within `1e-9` of an integer, so the ceiling is not trustworthy.
    pub ambiguous: bool,
}

pub fn max_walkers(n: u64) -> Result<WalkerBound, BoundsError> {
    if n < 3 {
        return Err(BoundsError::TooFewVertices(n));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let raw = nf - ln;
    let ambiguous = (raw - raw.round()).abs() < CEIL_GUARD;
    Ok(WalkerBound {
        n,
        max_walkers: raw.ceil() as u64,
        quotient: nf * nf / (nf + ln),
        correction: ln * ln / (nf + ln),
        ambiguous,
    })
}

/// `Σ_{b=1}^{N} p²(1−p)^b / b`, increasing in `N` towards `−p² log p`.
pub fn taylor_partial(p: f64, terms: u64) -> Result<f64, BoundsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(BoundsError::Domain { p, range: "(0, 1)" });
    }
    if terms == 0 {
        return Err(BoundsError::EmptySeries);
    }
    let q = 1.0 - p;
    let mut power = 1.0;
    let mut sum = 0.0;
    for b in 1..=terms {
        power *= q;
        if power == 0.0 {
            break;
        }
        sum += power / b as f64;
    }
    Ok(p * p * sum)
}

/// `−p² log p`, the limit of [`taylor_partial`].
pub fn taylor_limit(p: f64) -> f64 {
    -p * p * p.ln()
}

/// Upper bound on `taylor_limit(p) − taylor_partial(p, terms)`.
pub fn taylor_tail_bound(p: f64, terms: u64) -> f64 {
    p * p * (1.0 - p).powf(terms as f64 + 1.0) / ((terms as f64 + 1.0) * p)
}
