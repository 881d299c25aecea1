//! Finite-horizon estimators and faithfulness tests for occupancy traces.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::trace::CouplingTrace;
use super::SimError;
use crate::bounds::taylor_limit;
use crate::sequence::{format_ratio, Seq, Symbol, Weight};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkerStats {
    pub walker: u32,
    pub occurrences: u64,
    /// Count of occurrences whose predecessor was exactly `gap` steps earlier.
    pub gap_histogram: BTreeMap<u64, u64>,
    /// Fit of the gaps to the geometric law at the claimed `p`.
    pub gap_test: Option<ChiSquareResult>,
    /// `Σ_t w_i(t)`, exact, rendered as `num/den`.
    pub weight_sum: String,
    /// `(1/T) Σ_t w_i(t)`.
    pub weight_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub length: usize,
    pub k: u32,
    pub p: f64,
    /// Fraction of blank times, the finite-horizon `Z`.
    pub blank_rate: f64,
    pub occupancy_rate: f64,
    pub expected_occupancy: f64,
    /// Smallest blank fraction over prefixes of length `2^10, 2^11, … ≤ T` and `T`;
    /// just the blank rate for shorter words.
    pub blank_rate_dyadic_min: f64,
    pub walkers: Vec<WalkerStats>,
    pub weight_total: String,
    pub weight_rate_total: f64,
    /// `−p² log p`, the per-walker lower limit of `weight_rate`.
    pub weight_rate_floor: f64,
    #[serde(skip)]
    pub weight_total_exact: Weight,
    #[serde(skip)]
    pub weight_sums_exact: Vec<Weight>,
}

/// Time-indexed weights: at each right neighbor `t` of walker `j`, `w_j(t) = 1/b`
/// for the `b ≥ 1` distinct letters since the previous `j`. First occurrences,
/// immediate repeats and blanks contribute nothing.
const DYADIC_START: usize = 1 << 10;

pub fn empirical_stats(s: &Seq, p: f64, k: u32) -> EmpiricalStats {
    let k = k.max(s.k());
    let slots = k as usize + 1;
    let mut last_seen = vec![0usize; slots];
    // per walker, count of weights 1/b indexed by b
    let mut by_b: Vec<Vec<u64>> = vec![vec![0; slots]; slots];
    let mut gaps: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); slots];
    let mut occurrences = vec![0u64; slots];
    let mut blanks = 0u64;
    let mut dyadic_min = f64::INFINITY;
    let mut next_horizon = DYADIC_START;
    for (idx, sym) in s.symbols().iter().enumerate() {
        let t = idx + 1;
        match *sym {
            Symbol::Blank => blanks += 1,
            Symbol::Walker(j) => {
                let j = j as usize;
                occurrences[j] += 1;
                let prev = last_seen[j];
                if prev > 0 {
                    *gaps[j].entry((t - prev) as u64).or_default() += 1;
                    if prev + 1 < t {
                        let b = last_seen.iter().filter(|&&seen| seen > prev).count();
                        by_b[j][b] += 1;
                    }
                }
            }
        }
        last_seen[sym.slot()] = t;
        if t == next_horizon {
            dyadic_min = dyadic_min.min(blanks as f64 / t as f64);
            next_horizon *= 2;
        }
    }
    let len = s.len();
    let valid_p = p > 0.0 && p < 1.0;
    let horizon = len.max(1) as f64;
    let mut walkers = Vec::with_capacity(k as usize);
    let mut sums = Vec::with_capacity(k as usize);
    let mut total = Weight::zero();
    for j in 1..=k as usize {
        let sum: Weight = by_b[j]
            .iter()
            .enumerate()
            .skip(1)
            .map(|(b, &count)| Weight::new(count as i64, b as i64))
            .sum();
        total += sum;
        walkers.push(WalkerStats {
            walker: j as u32,
            occurrences: occurrences[j],
            gap_test: (valid_p && occurrences[j] >= 2).then(|| gap_chi_square(&gaps[j], p)),
            gap_histogram: std::mem::take(&mut gaps[j]),
            weight_sum: format_ratio(&sum),
            weight_rate: ratio_to_f64(&sum) / horizon,
        });
        sums.push(sum);
    }
    let blank_rate = if len == 0 {
        0.0
    } else {
        blanks as f64 / len as f64
    };
    EmpiricalStats {
        length: len,
        k,
        p,
        blank_rate,
        occupancy_rate: if len == 0 { 0.0 } else { 1.0 - blank_rate },
        expected_occupancy: f64::from(k) * p,
        blank_rate_dyadic_min: dyadic_min.min(blank_rate),
        walkers,
        weight_total: format_ratio(&total),
        weight_rate_total: ratio_to_f64(&total) / horizon,
        weight_rate_floor: if valid_p { taylor_limit(p) } else { 0.0 },
        weight_total_exact: total,
        weight_sums_exact: sums,
    }
}

pub fn ratio_to_f64(r: &Weight) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

fn chi_square(observed: &[f64], expected: &[f64]) -> ChiSquareResult {
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = observed.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(0.0);
    ChiSquareResult {
        statistic,
        dof,
        p_value,
        bins: observed.len(),
    }
}

/// Goodness of fit of a gap histogram to `P(gap = b + 1) = p(1 − p)^b`.
///
/// Gaps get their own bin while the expected count is at least 5; the rest
/// share one tail bin.
pub fn gap_chi_square(histogram: &BTreeMap<u64, u64>, p: f64) -> ChiSquareResult {
    let n: u64 = histogram.values().sum();
    let nf = n as f64;
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut tail_prob = 1.0;
    let mut gap = 1u64;
    loop {
        let prob = p * (1.0 - p).powi((gap - 1) as i32);
        if nf * prob < 5.0 || nf * (tail_prob - prob) < 5.0 {
            break;
        }
        observed.push(histogram.get(&gap).copied().unwrap_or(0) as f64);
        expected.push(nf * prob);
        tail_prob -= prob;
        gap += 1;
    }
    let tail: u64 = histogram.range(gap..).map(|(_, &c)| c).sum();
    observed.push(tail as f64);
    expected.push(nf * tail_prob);
    chi_square(&observed, &expected)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaithfulnessParams {
    pub z_threshold: f64,
    pub max_lag: usize,
    /// Window length for the pattern test; `None` picks the largest `w ≤ 8`
    /// whose rarest pattern still expects 5 windows.
    pub window: Option<usize>,
    pub alpha: f64,
    pub min_len: usize,
}

impl Default for FaithfulnessParams {
    fn default() -> Self {
        FaithfulnessParams {
            z_threshold: 4.0,
            max_lag: 16,
            window: None,
            alpha: 1e-3,
            min_len: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl TestOutcome {
    fn z(name: String, z: f64, threshold: f64) -> Self {
        TestOutcome {
            name,
            statistic: z,
            p_value: None,
            threshold,
            passed: z.is_finite() && z.abs() <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkerTests {
    pub walker: u32,
    pub tests: Vec<TestOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub p: f64,
    pub length: usize,
    pub window: usize,
    pub params: FaithfulnessParams,
    pub walkers: Vec<WalkerTests>,
    pub passed: bool,
}

impl TestReport {
    pub fn failures(&self) -> impl Iterator<Item = (u32, &TestOutcome)> {
        self.walkers.iter().flat_map(|w| {
            w.tests
                .iter()
                .filter(|t| !t.passed)
                .map(move |t| (w.walker, t))
        })
    }
}

fn auto_window(len: usize, p: f64) -> usize {
    let rare = p.min(1.0 - p);
    (1..=8)
        .rev()
        .find(|&w| (len / w) as f64 * rare.powi(w as i32) >= 5.0)
        .unwrap_or(1)
}

/// Frequency z-test, lag autocorrelations and a window-pattern chi-square per walker.
pub fn faithfulness_tests(
    tr: &CouplingTrace,
    p: f64,
    params: &FaithfulnessParams,
) -> Result<TestReport, SimError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::Probability(p));
    }
    let len = tr.len();
    let needed = params.min_len.max(params.max_lag + 1);
    if len < needed {
        return Err(SimError::TooShort { len, needed });
    }
    let window = params
        .window
        .unwrap_or_else(|| auto_window(len, p))
        .clamp(1, 16);
    let var = p * (1.0 - p);
    let mut walkers = Vec::new();
    for i in 1..=tr.k() {
        let x = tr.column(i);
        let mut tests = Vec::new();

        let ones = x.iter().filter(|&&v| v == 1).count() as f64;
        let z = (ones - len as f64 * p) / (len as f64 * var).sqrt();
        tests.push(TestOutcome::z("frequency".into(), z, params.z_threshold));

        let centered: Vec<f64> = x.iter().map(|&v| f64::from(v) - p).collect();
        for lag in 1..=params.max_lag {
            let m = len - lag;
            let sum: f64 = centered[..m]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum();
            let r = sum / (m as f64 * var);
            tests.push(TestOutcome::z(
                format!("autocorrelation_lag_{lag}"),
                r * (m as f64).sqrt(),
                params.z_threshold,
            ));
        }

        let windows = len / window;
        let mut counts = vec![0f64; 1 << window];
        for chunk in x.chunks_exact(window) {
            let code = chunk.iter().fold(0usize, |acc, &v| (acc << 1) | v as usize);
            counts[code] += 1.0;
        }
        let expected: Vec<f64> = (0..counts.len())
            .map(|code| {
                let k = (code as u32).count_ones() as i32;
                windows as f64 * p.powi(k) * (1.0 - p).powi(window as i32 - k)
            })
            .collect();
        let chi = chi_square(&counts, &expected);
        tests.push(TestOutcome {
            name: format!("window_{window}_chi_square"),
            statistic: chi.statistic,
            p_value: Some(chi.p_value),
            threshold: params.alpha,
            passed: chi.p_value > params.alpha,
        });
        walkers.push(WalkerTests { walker: i, tests });
    }
    let passed = walkers.iter().all(|w| w.tests.iter().all(|t| t.passed));
    Ok(TestReport {
        p,
        length: len,
        window,
        params: params.clone(),
        walkers,
        passed,
    })
}
