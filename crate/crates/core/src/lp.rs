//! Window linear relaxation for 1-avoidance couplings.
//!
//! Time-averaged frequencies of length-`m` windows of any 1-avoidance
//! coupling of `k` Bernoulli(`p`) walkers form a distribution `q` on
//! `([k] ∪ {B})^m` that
//!
//! * sums to one,
//! * is shift consistent: for every `v` of length `m − 1`,
//!   `Σ_x q(x·v) = Σ_y q(v·y)`,
//! * vanishes on windows containing adjacent walkers `a > a'`,
//! * reproduces, for each walker `i` and each pattern `σ ∈ {0,1}^m`, the
//!   product mass `p^{|σ|}(1 − p)^{m − |σ|}` on the windows where `i`'s
//!   occupancy pattern is `σ`.
//!
//! If no such `q` exists, no coupling exists at that `(k, p)`.

use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{max_p, DEFAULT_TOL};
use crate::sequence::{is_permissible, Seq, Symbol};

pub const DEFAULT_LP_TOL: f64 = 1e-9;
/// Phase-one gaps between the tolerance and this margin are reported as `Unknown`.
pub const INFEASIBLE_MARGIN: f64 = 1e-6;
pub const DEFAULT_VARIABLE_BUDGET: usize = 200_000;

pub type Probability = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("walker count must be at least 1")]
    NoWalkers,
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("p must lie strictly between 0 and 1, got {0}")]
    Probability(String),
    #[error("(k+1)^m = {needed} variables exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: usize },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("cannot parse probability {0:?}")]
    Parse(String),
    #[error("witness has {found} entries, expected {expected}")]
    WitnessLength { expected: usize, found: usize },
}

/// Parses `0.125`, `1/8` or `1e-1` into an exact ratio.
pub fn parse_probability(text: &str) -> Result<Probability, LpError> {
    let err = || LpError::Parse(text.to_string());
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| err())?;
        let d: i64 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Ratio::new(n, d));
    }
    let (mantissa, exponent) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| err())?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let numer: i64 = digits.parse().map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i64.checked_pow(scale.unsigned_abs()).ok_or_else(err)?;
    Ok(if scale >= 0 {
        Ratio::from_integer(numer.checked_mul(pow).ok_or_else(err)?)
    } else {
        Ratio::new(numer, pow)
    })
}

fn big(r: &Probability) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Normalization,
    Shift,
    Faithfulness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub name: String,
    pub kind: RowKind,
    /// Sparse `(variable, coefficient)` with distinct variables, sorted.
    pub coeffs: Vec<(usize, i64)>,
    pub rhs: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowLp {
    k: u32,
    p: Probability,
    m: usize,
    windows: Vec<Vec<Symbol>>,
    forbidden: Vec<bool>,
    rows: Vec<LpRow>,
}

fn alphabet(k: u32) -> Vec<Symbol> {
    std::iter::once(Symbol::Blank)
        .chain((1..=k).map(Symbol::Walker))
        .collect()
}

/// All words of length `len`, lexicographic with `B < 1 < … < k`.
fn all_words(k: u32, len: usize) -> Vec<Vec<Symbol>> {
    let letters = alphabet(k);
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&sym| {
                    let mut next = w.clone();
                    next.push(sym);
                    next
                })
            })
            .collect();
    }
    out
}

fn word_index(k: u32, word: &[Symbol]) -> usize {
    let base = k as usize + 1;
    word.iter().fold(0, |acc, sym| acc * base + sym.slot())
}

fn word_name(word: &[Symbol]) -> String {
    let parts: Vec<String> = word.iter().map(|s| s.to_string()).collect();
    parts.join("_")
}

/// Builds the relaxation. Rows: normalization, one shift row per `v` of length
/// `m − 1`, then `2^m` faithfulness rows per walker; all in lexicographic order.
pub fn build_window_lp(k: u32, p: Probability, m: usize) -> Result<WindowLp, LpError> {
    build_window_lp_with_budget(k, p, m, DEFAULT_VARIABLE_BUDGET)
}

pub fn build_window_lp_with_budget(
    k: u32,
    p: Probability,
    m: usize,
    budget: usize,
) -> Result<WindowLp, LpError> {
    if k == 0 {
        return Err(LpError::NoWalkers);
    }
    if m == 0 {
        return Err(LpError::EmptyWindow);
    }
    if !(p > Ratio::zero() && p < Ratio::one()) {
        return Err(LpError::Probability(format!("{}/{}", p.numer(), p.denom())));
    }
    let needed = (u128::from(k) + 1)
        .checked_pow(m as u32)
        .unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(LpError::BudgetExceeded { needed, budget });
    }
    let windows = all_words(k, m);
    let forbidden: Vec<bool> = windows
        .iter()
        .map(|w| !is_permissible(&Seq::from_parts(k, w.clone())))
        .collect();
    let mut rows = Vec::new();
    rows.push(LpRow {
        name: "norm".into(),
        kind: RowKind::Normalization,
        coeffs: (0..windows.len()).map(|v| (v, 1)).collect(),
        rhs: BigRational::one(),
    });
    let letters = alphabet(k);
    for v in all_words(k, m - 1) {
        let mut dense = vec![0i64; windows.len()];
        for &x in &letters {
            let mut left = vec![x];
            left.extend_from_slice(&v);
            dense[word_index(k, &left)] += 1;
            let mut right = v.clone();
            right.push(x);
            dense[word_index(k, &right)] -= 1;
        }
        rows.push(LpRow {
            name: format!(
                "shift_{}",
                if v.is_empty() {
                    "0".into()
                } else {
                    word_name(&v)
                }
            ),
            kind: RowKind::Shift,
            coeffs: dense
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c != 0)
                .collect(),
            rhs: BigRational::zero(),
        });
    }
    let p_big = big(&p);
    let q_big = BigRational::one() - &p_big;
    for i in 1..=k {
        for pattern in 0..(1usize << m) {
            let ones = pattern.count_ones() as usize;
            let bits: Vec<bool> = (0..m)
                .map(|pos| pattern >> (m - 1 - pos) & 1 == 1)
                .collect();
            let coeffs = windows
                .iter()
                .enumerate()
                .filter(|(_, w)| {
                    w.iter()
                        .zip(&bits)
                        .all(|(&s, &b)| (s == Symbol::Walker(i)) == b)
                })
                .map(|(v, _)| (v, 1))
                .collect();
            let rhs =
                num_traits::pow(p_big.clone(), ones) * num_traits::pow(q_big.clone(), m - ones);
            let label: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            rows.push(LpRow {
                name: format!("faith_{i}_{label}"),
                kind: RowKind::Faithfulness,
                coeffs,
                rhs,
            });
        }
    }
    Ok(WindowLp {
        k,
        p,
        m,
        windows,
        forbidden,
        rows,
    })
}

impl WindowLp {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p(&self) -> Probability {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn windows(&self) -> &[Vec<Symbol>] {
        &self.windows
    }

    pub fn forbidden(&self) -> &[bool] {
        &self.forbidden
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn num_variables(&self) -> usize {
        self.windows.len()
    }

    pub fn index_of(&self, word: &[Symbol]) -> usize {
        word_index(self.k, word)
    }

    /// Largest absolute violation over rows, sign constraints and forbidden windows, exact.
    pub fn residual_exact(&self, q: &[BigRational]) -> Result<BigRational, LpError> {
        if q.len() != self.windows.len() {
            return Err(LpError::WitnessLength {
                expected: self.windows.len(),
                found: q.len(),
            });
        }
        let mut worst = BigRational::zero();
        for row in &self.rows {
            let mut lhs = BigRational::zero();
            for &(v, c) in &row.coeffs {
                lhs += &q[v] * BigRational::from_integer(BigInt::from(c));
            }
            let gap = (lhs - &row.rhs).abs();
            if gap > worst {
                worst = gap;
            }
        }
        for (v, value) in q.iter().enumerate() {
            let violation = if self.forbidden[v] {
                value.abs()
            } else if value.is_negative() {
                -value.clone()
            } else {
                BigRational::zero()
            };
            if violation > worst {
                worst = violation;
            }
        }
        Ok(worst)
    }

    /// Exact residual of a floating-point witness; each entry is taken at its exact binary value.
    pub fn residual_of_float(&self, q: &[f64]) -> Result<f64, LpError> {
        let exact: Vec<BigRational> = q
            .iter()
            .map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
            .collect();
        Ok(to_f64(&self.residual_exact(&exact)?))
    }

    /// The i.i.d. product law restricted to one walker, exact. Only a witness when `k = 1`.
    pub fn product_witness(&self) -> Vec<BigRational> {
        let p = big(&self.p);
        let q = BigRational::one() - &p;
        self.windows
            .iter()
            .map(|w| {
                w.iter().fold(BigRational::one(), |acc, s| {
                    acc * if s.is_blank() { q.clone() } else { p.clone() }
                })
            })
            .collect()
    }

    /// CPLEX LP text: zero objective, equality rows, forbidden windows fixed at 0.
    pub fn to_lp_format(&self) -> String {
        let var = |v: usize| format!("q_{}", word_name(&self.windows[v]));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ window relaxation k={} p={}/{} m={}",
            self.k,
            self.p.numer(),
            self.p.denom(),
            self.m
        );
        let _ = writeln!(out, "Minimize\n obj: 0 {}", var(0));
        out.push_str("Subject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            if row.coeffs.is_empty() {
                let _ = write!(out, " 0 {}", var(0));
            }
            for (idx, &(v, c)) in row.coeffs.iter().enumerate() {
                let sign = if c < 0 {
                    "-"
                } else if idx > 0 {
                    "+"
                } else {
                    ""
                };
                let mag = c.abs();
                let coef = if mag == 1 {
                    String::new()
                } else {
                    format!("{mag} ")
                };
                let sep = if sign.is_empty() { "" } else { " " };
                let _ = write!(out, " {sign}{sep}{coef}{}", var(v));
            }
            let _ = writeln!(out, " = {}", to_f64(&row.rhs));
        }
        out.push_str("Bounds\n");
        for (v, &bad) in self.forbidden.iter().enumerate() {
            if bad {
                let _ = writeln!(out, " {} = 0", var(v));
            }
        }
        out.push_str("End\n");
        out
    }
}

/// Sums a length-`m` witness over its last letter.
pub fn marginalize(lp: &WindowLp, q: &[f64]) -> Vec<f64> {
    let base = lp.k as usize + 1;
    let mut out = vec![0.0; lp.windows.len() / base];
    for (v, &value) in q.iter().enumerate() {
        out[v / base] += value;
    }
    out
}

pub fn marginalize_exact(lp: &WindowLp, q: &[BigRational]) -> Vec<BigRational> {
    let base = lp.k as usize + 1;
    let mut out = vec![BigRational::zero(); lp.windows.len() / base];
    for (v, value) in q.iter().enumerate() {
        out[v / base] += value;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityResult {
    pub status: Status,
    /// Optimal phase-one objective: least total absolute row violation.
    pub phase_one_gap: f64,
    /// Exact maximum violation of the returned witness, if any.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub witness: Option<Vec<f64>>,
}

/// Phase one with elastic rows: `min Σ (s⁺ + s⁻)` subject to
/// `A q + s⁺ − s⁻ = b`, `q ≥ 0`, forbidden windows fixed at zero.
pub fn solve_feasibility(lp: &WindowLp, tol: f64) -> Result<FeasibilityResult, LpError> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Option<minilp::Variable>> = lp
        .forbidden
        .iter()
        .map(|&bad| (!bad).then(|| problem.add_var(0.0, (0.0, f64::INFINITY))))
        .collect();
    for row in &lp.rows {
        let plus = problem.add_var(1.0, (0.0, f64::INFINITY));
        let minus = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut terms: Vec<(minilp::Variable, f64)> = row
            .coeffs
            .iter()
            .filter_map(|&(v, c)| vars[v].map(|var| (var, c as f64)))
            .collect();
        terms.push((plus, 1.0));
        terms.push((minus, -1.0));
        problem.add_constraint(terms, ComparisonOp::Eq, to_f64(&row.rhs));
    }
    let solution = problem
        .solve()
        .map_err(|e| LpError::Solver(e.to_string()))?;
    let gap = solution.objective().max(0.0);
    let witness: Vec<f64> = vars
        .iter()
        .map(|var| var.map_or(0.0, |v| solution[v].max(0.0)))
        .collect();
    let residual = lp.residual_of_float(&witness)?;
    let status = if gap <= tol && residual <= tol {
        Status::Feasible
    } else if gap > INFEASIBLE_MARGIN {
        Status::Infeasible
    } else {
        Status::Unknown
    };
    let keep = status == Status::Feasible;
    Ok(FeasibilityResult {
        status,
        phase_one_gap: gap,
        residual: keep.then_some(residual),
        tolerance: tol,
        witness: keep.then_some(witness),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub p: f64,
    pub p_exact: String,
    pub status: Status,
    pub phase_one_gap: f64,
    pub residual: Option<f64>,
    /// `p ≤ max_p(k)`.
    pub analytic_maxp_verdict: bool,
    /// `p ≤ 1/k`.
    pub trivial_verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub k: u32,
    pub m: usize,
    pub analytic_max_p: f64,
    pub tolerance: f64,
    pub points: Vec<ScanPoint>,
}

impl ScanReport {
    pub fn any_infeasible(&self) -> bool {
        self.points.iter().any(|pt| pt.status == Status::Infeasible)
    }
}

/// Solves every grid point independently; no monotonicity in `p` is assumed.
pub fn scan_p(k: u32, m: usize, grid: &[Probability], tol: f64) -> Result<ScanReport, LpError> {
    if k == 0 {
        return Err(LpError::NoWalkers);
    }
    let analytic = max_p(u64::from(k), DEFAULT_TOL)
        .map_err(|e| LpError::Solver(e.to_string()))?
        .value;
    let points = grid
        .par_iter()
        .map(|&p| {
            let lp = build_window_lp(k, p, m)?;
            let res = solve_feasibility(&lp, tol)?;
            let pf = *p.numer() as f64 / *p.denom() as f64;
            Ok(ScanPoint {
                p: pf,
                p_exact: format!("{}/{}", p.numer(), p.denom()),
                status: res.status,
                phase_one_gap: res.phase_one_gap,
                residual: res.residual,
                analytic_maxp_verdict: pf <= analytic,
                trivial_verdict: p * Ratio::from_integer(i64::from(k)) <= Ratio::one(),
            })
        })
        .collect::<Result<Vec<_>, LpError>>()?;
    Ok(ScanReport {
        k,
        m,
        analytic_max_p: analytic,
        tolerance: tol,
        points,
    })
}
