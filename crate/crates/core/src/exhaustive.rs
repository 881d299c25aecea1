//! Exhaustive check of `total_weight ≤ blanks` over all short permissible words.
//!
//! Words are generated in lexicographic order with `B < 1 < … < k`, length by
//! length. Each word is checked twice: directly, and through a reduction
//! certificate that is re-verified by the independent checker.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::reduction::{check_certificate, reduce_certificate, LemmaError, Rule};
use crate::sequence::{total_weight, Seq, Symbol, Weight};

pub const DEFAULT_BUDGET: u128 = 100_000_000;
const MAX_RECORDED: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExhaustiveReport {
    pub k: u32,
    pub max_len: usize,
    pub sequences: u64,
    /// Count of permissible words per length `1..=max_len`.
    pub per_length: Vec<u64>,
    /// Words with `total > blanks`.
    pub counterexamples: Vec<String>,
    pub counterexample_count: u64,
    /// Words whose certificate failed to build or to check.
    pub certificate_failures: Vec<String>,
    pub certificate_failure_count: u64,
    /// Words where the direct and certificate routes disagree.
    pub disagreements: u64,
    /// Words with `total == blanks`.
    pub tight: u64,
    pub max_steps: usize,
    pub rule_counts: BTreeMap<Rule, u64>,
}

impl ExhaustiveReport {
    pub fn passed(&self) -> bool {
        self.counterexample_count == 0
            && self.certificate_failure_count == 0
            && self.disagreements == 0
    }

    fn merge(mut self, other: ExhaustiveReport) -> ExhaustiveReport {
        self.sequences += other.sequences;
        for (idx, count) in other.per_length.iter().enumerate() {
            if idx < self.per_length.len() {
                self.per_length[idx] += count;
            } else {
                self.per_length.push(*count);
            }
        }
        self.counterexample_count += other.counterexample_count;
        self.counterexamples.extend(other.counterexamples);
        self.counterexamples.truncate(MAX_RECORDED);
        self.certificate_failure_count += other.certificate_failure_count;
        self.certificate_failures.extend(other.certificate_failures);
        self.certificate_failures.truncate(MAX_RECORDED);
        self.disagreements += other.disagreements;
        self.tight += other.tight;
        self.max_steps = self.max_steps.max(other.max_steps);
        for (rule, count) in other.rule_counts {
            *self.rule_counts.entry(rule).or_default() += count;
        }
        self
    }

    fn record(&mut self, s: &Seq) {
        self.sequences += 1;
        self.per_length[s.len() - 1] += 1;
        let report = total_weight(s);
        let direct_ok = report.within_blank_budget();
        if report.total == Weight::from_integer(report.blanks as i64) {
            self.tight += 1;
        }
        if !direct_ok {
            self.counterexample_count += 1;
            if self.counterexamples.len() < MAX_RECORDED {
                self.counterexamples.push(s.to_string());
            }
        }
        let certified = match reduce_certificate(s) {
            Ok(cert) => {
                self.max_steps = self.max_steps.max(cert.steps.len());
                for step in &cert.steps {
                    *self.rule_counts.entry(step.rule).or_default() += 1;
                }
                check_certificate(&cert).map_err(|e| e.to_string())
            }
            Err(e) => Err(e.to_string()),
        };
        match certified {
            Ok(proof) => {
                if proof.total != report.total || proof.blanks != report.blanks || !direct_ok {
                    self.disagreements += 1;
                }
            }
            Err(reason) => {
                self.certificate_failure_count += 1;
                if self.certificate_failures.len() < MAX_RECORDED {
                    self.certificate_failures.push(format!("{s}: {reason}"));
                }
                if direct_ok {
                    self.disagreements += 1;
                }
            }
        }
    }
}

/// Number of words over `[k] ∪ {B}` with length at most `max_len`, saturating.
pub fn word_count_bound(k: u32, max_len: usize) -> u128 {
    let base = u128::from(k) + 1;
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..max_len {
        power = power.saturating_mul(base);
        total = total.saturating_add(power);
    }
    total
}

/// Calls `visit` on every permissible word of exactly `len` letters starting with `prefix`.
pub fn for_each_permissible(k: u32, len: usize, prefix: Vec<Symbol>, visit: &mut impl FnMut(&Seq)) {
    fn extend(k: u32, len: usize, buf: &mut Vec<Symbol>, visit: &mut impl FnMut(&Seq)) {
        if buf.len() == len {
            visit(&Seq::from_parts(k, buf.clone()));
            return;
        }
        let floor = match buf.last() {
            Some(Symbol::Walker(i)) => *i,
            _ => 1,
        };
        buf.push(Symbol::Blank);
        extend(k, len, buf, visit);
        buf.pop();
        for i in floor..=k {
            buf.push(Symbol::Walker(i));
            extend(k, len, buf, visit);
            buf.pop();
        }
    }
    let mut buf = prefix;
    extend(k, len, &mut buf, visit);
}

/// Every permissible word with `1 ≤ len ≤ max_len`, in enumeration order.
pub fn permissible_words(k: u32, max_len: usize) -> Vec<Seq> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for_each_permissible(k, len, Vec::new(), &mut |s| out.push(s.clone()));
    }
    out
}

pub fn verify_lemma_exhaustive(k: u32, max_len: usize) -> Result<ExhaustiveReport, LemmaError> {
    verify_lemma_exhaustive_with_budget(k, max_len, DEFAULT_BUDGET)
}

/// Work is split by first letter; partial reports merge in enumeration order,
/// so the result does not depend on the thread count.
pub fn verify_lemma_exhaustive_with_budget(
    k: u32,
    max_len: usize,
    budget: u128,
) -> Result<ExhaustiveReport, LemmaError> {
    let needed = word_count_bound(k, max_len);
    if needed > budget {
        return Err(LemmaError::BudgetExceeded { needed, budget });
    }
    let empty = ExhaustiveReport {
        k,
        max_len,
        per_length: vec![0; max_len],
        ..Default::default()
    };
    let mut tasks = Vec::new();
    for len in 1..=max_len {
        tasks.push((len, Symbol::Blank));
        tasks.extend((1..=k).map(|i| (len, Symbol::Walker(i))));
    }
    let parts: Vec<ExhaustiveReport> = tasks
        .into_par_iter()
        .map(|(len, first)| {
            let mut part = empty.clone();
            for_each_permissible(k, len, vec![first], &mut |s| part.record(s));
            part
        })
        .collect();
    Ok(parts.into_iter().fold(empty, ExhaustiveReport::merge))
}

/// Slack `blanks − total`, exact.
pub fn slack(s: &Seq) -> Weight {
    let report = total_weight(s);
    Weight::from_integer(report.blanks as i64) - report.total
}

/// `true` when appending a blank never shrinks the slack.
pub fn blank_append_monotone(s: &Seq) -> bool {
    slack(&s.with_appended(Symbol::Blank)) - slack(s) >= Weight::zero()
}
