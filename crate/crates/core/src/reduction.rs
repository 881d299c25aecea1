//! Constructive reduction of permissible words, emitting checkable certificates.
//!
//! Each step removes letters from the word while keeping
//! `blanks − total_weight` from increasing, so a chain of steps ending in a
//! word without neighbor pairs proves `total_weight ≤ blanks` for the start.
//!
//! Rules are tried in a fixed order:
//!
//! 1. `CollapseBlanks`: `B B → B` (weight unchanged, one blank fewer).
//! 2. `DeleteZeroWeightPair`: `i i → i` (weight unchanged).
//! 3. `CollapseWeightOnePair`: `i B i → i` (weight and blanks both drop by 1).
//! 4. `DeleteVictimSymbol`: every pair now has `b ≥ 2` letters between, one
//!    of them a blank. Each pair donates `1/(b(b−1))` to every walker between
//!    its endpoints; some walker `j` receives at least what its own pairs
//!    weigh, and deleting all of `j` raises the total by `input(j) − output(j)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::sequence::{
    blank_count, format_ratio, is_permissible, neighbor_pairs, parse_ratio, parse_seq, ser_ratio,
    ser_ratio_map, total_weight, NeighborPair, Seq, SeqError, Symbol, Weight,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error("sequence is not permissible: {0}")]
    NotPermissible(String),
    #[error("sequence is terminal, no reduction rule applies: {0}")]
    Terminal(String),
    #[error(
        "redistribution precondition violated: pair ({t1},{t2}) of symbol {symbol} has b = {b}"
    )]
    PairTooNarrow {
        symbol: u32,
        t1: usize,
        t2: usize,
        b: u32,
    },
    #[error("redistribution precondition violated: pair ({t1},{t2}) of symbol {symbol} has no blank between")]
    PairWithoutBlank { symbol: u32, t1: usize, t2: usize },
    #[error("no admissible victim found in {0}")]
    NoVictim(String),
    #[error("enumeration budget exceeded: (k+1)^max_len = {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    CollapseBlanks,
    DeleteZeroWeightPair,
    CollapseWeightOnePair,
    DeleteVictimSymbol,
}

impl Rule {
    pub const ALL: [Rule; 4] = [
        Rule::CollapseBlanks,
        Rule::DeleteZeroWeightPair,
        Rule::CollapseWeightOnePair,
        Rule::DeleteVictimSymbol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::CollapseBlanks => "CollapseBlanks",
            Rule::DeleteZeroWeightPair => "DeleteZeroWeightPair",
            Rule::CollapseWeightOnePair => "CollapseWeightOnePair",
            Rule::DeleteVictimSymbol => "DeleteVictimSymbol",
        }
    }

    fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a step removed: 1-based positions, or every occurrence of a walker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Edit {
    Positions(Vec<usize>),
    Victim(u32),
}

impl Edit {
    pub fn apply(&self, s: &Seq) -> Seq {
        match self {
            Edit::Positions(ps) => s.without_positions(ps),
            Edit::Victim(j) => s.without_walker(*j),
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::Positions(ps) => {
                let parts: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                f.write_str(&parts.join(","))
            }
            Edit::Victim(j) => write!(f, "j={j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Donation {
    pub symbol: u32,
    pub t1: usize,
    pub t2: usize,
    pub recipient: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub amount: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RedistributionReport {
    /// Weight received from other symbols' pairs.
    #[serde(serialize_with = "ser_ratio_map")]
    pub input: BTreeMap<u32, Weight>,
    /// Weight of the symbol's own pairs.
    #[serde(serialize_with = "ser_ratio_map")]
    pub output: BTreeMap<u32, Weight>,
    pub donations: Vec<Donation>,
}

impl RedistributionReport {
    pub fn input_of(&self, j: u32) -> Weight {
        self.input.get(&j).copied().unwrap_or_else(Weight::zero)
    }

    pub fn output_of(&self, j: u32) -> Weight {
        self.output.get(&j).copied().unwrap_or_else(Weight::zero)
    }

    pub fn input_total(&self) -> Weight {
        self.input.values().copied().sum()
    }

    pub fn output_total(&self) -> Weight {
        self.output.values().copied().sum()
    }

    /// Walkers whose input is at least their output.
    pub fn admissible_victims(&self) -> impl Iterator<Item = u32> + '_ {
        self.output
            .keys()
            .copied()
            .filter(move |&j| self.input_of(j) >= self.output_of(j))
    }
}

/// Walkers strictly between the endpoints of a pair, and whether a blank is among them.
fn letters_between(s: &Seq, pair: &NeighborPair) -> (Vec<u32>, bool) {
    let mut walkers = Vec::new();
    let mut has_blank = false;
    for t in pair.t1 + 1..pair.t2 {
        match s.at(t) {
            Symbol::Blank => has_blank = true,
            Symbol::Walker(i) => walkers.push(i),
        }
    }
    walkers.sort_unstable();
    walkers.dedup();
    (walkers, has_blank)
}

/// Redistributes every pair's weight `1/b` evenly over the `b − 1` walkers between it.
///
/// Requires a word with no `BB`, no adjacent equal walkers and no `i B i`, so
/// that every pair spans at least two letters, one of them a blank.
pub fn redistribution(s: &Seq) -> Result<RedistributionReport, LemmaError> {
    let pairs = neighbor_pairs(s);
    let mut input = BTreeMap::new();
    let mut output = BTreeMap::new();
    for sym in s.symbols() {
        if let Symbol::Walker(i) = *sym {
            input.insert(i, Weight::zero());
            output.insert(i, Weight::zero());
        }
    }
    let mut donations = Vec::new();
    for pair in &pairs {
        if pair.b < 2 {
            return Err(LemmaError::PairTooNarrow {
                symbol: pair.symbol,
                t1: pair.t1,
                t2: pair.t2,
                b: pair.b,
            });
        }
        let (walkers, has_blank) = letters_between(s, pair);
        if !has_blank {
            return Err(LemmaError::PairWithoutBlank {
                symbol: pair.symbol,
                t1: pair.t1,
                t2: pair.t2,
            });
        }
        debug_assert_eq!(walkers.len() as u32, pair.b - 1);
        let b = i64::from(pair.b);
        let amount = Weight::new(1, b * (b - 1));
        *output.get_mut(&pair.symbol).expect("symbol present") += pair.weight;
        for recipient in walkers {
            *input.get_mut(&recipient).expect("symbol present") += amount;
            donations.push(Donation {
                symbol: pair.symbol,
                t1: pair.t1,
                t2: pair.t2,
                recipient,
                amount,
            });
        }
    }
    Ok(RedistributionReport {
        input,
        output,
        donations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionStep {
    pub rule: Rule,
    pub edit: Edit,
    pub before: Seq,
    pub after: Seq,
    #[serde(serialize_with = "ser_ratio")]
    pub weight_delta: Weight,
    pub blank_delta: i64,
    pub redistribution: Option<RedistributionReport>,
}

fn leftmost_window(s: &Seq, pred: impl Fn(&[Symbol]) -> bool, width: usize) -> Option<usize> {
    s.symbols().windows(width).position(pred).map(|idx| idx + 1)
}

fn find_double_blank(s: &Seq) -> Option<usize> {
    leftmost_window(s, |w| w[0].is_blank() && w[1].is_blank(), 2)
}

fn find_adjacent_equal(s: &Seq) -> Option<usize> {
    leftmost_window(s, |w| !w[0].is_blank() && w[0] == w[1], 2)
}

fn find_walker_blank_walker(s: &Seq) -> Option<usize> {
    leftmost_window(
        s,
        |w| !w[0].is_blank() && w[1].is_blank() && w[0] == w[2],
        3,
    )
}

/// No `BB` and no walker occurring twice.
pub fn is_terminal(s: &Seq) -> bool {
    if find_double_blank(s).is_some() {
        return false;
    }
    let mut seen = vec![false; s.k() as usize + 1];
    for sym in s.symbols() {
        if let Symbol::Walker(i) = *sym {
            if std::mem::replace(&mut seen[i as usize], true) {
                return false;
            }
        }
    }
    true
}

fn step_from_edit(
    rule: Rule,
    edit: Edit,
    before: &Seq,
    redistribution: Option<RedistributionReport>,
) -> ReductionStep {
    let after = edit.apply(before);
    let weight_delta = total_weight(&after).total - total_weight(before).total;
    let blank_delta = blank_count(&after) as i64 - blank_count(before) as i64;
    ReductionStep {
        rule,
        edit,
        before: before.clone(),
        after,
        weight_delta,
        blank_delta,
        redistribution,
    }
}

/// Applies the first applicable rule.
pub fn reduce_step(s: &Seq) -> Result<ReductionStep, LemmaError> {
    if !is_permissible(s) {
        return Err(LemmaError::NotPermissible(s.to_string()));
    }
    if is_terminal(s) {
        return Err(LemmaError::Terminal(s.to_string()));
    }
    if let Some(t) = find_double_blank(s) {
        return Ok(step_from_edit(
            Rule::CollapseBlanks,
            Edit::Positions(vec![t + 1]),
            s,
            None,
        ));
    }
    if let Some(t) = find_adjacent_equal(s) {
        return Ok(step_from_edit(
            Rule::DeleteZeroWeightPair,
            Edit::Positions(vec![t + 1]),
            s,
            None,
        ));
    }
    if let Some(t) = find_walker_blank_walker(s) {
        return Ok(step_from_edit(
            Rule::CollapseWeightOnePair,
            Edit::Positions(vec![t + 1, t + 2]),
            s,
            None,
        ));
    }
    let report = redistribution(s)?;
    let victim = report
        .admissible_victims()
        .next()
        .ok_or_else(|| LemmaError::NoVictim(s.to_string()))?;
    Ok(step_from_edit(
        Rule::DeleteVictimSymbol,
        Edit::Victim(victim),
        s,
        Some(report),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionCertificate {
    pub initial: Seq,
    pub steps: Vec<ReductionStep>,
    #[serde(rename = "final")]
    pub final_seq: Seq,
}

pub fn reduce_certificate(s: &Seq) -> Result<ReductionCertificate, LemmaError> {
    if !is_permissible(s) {
        return Err(LemmaError::NotPermissible(s.to_string()));
    }
    let mut steps = Vec::new();
    let mut current = s.clone();
    while !is_terminal(&current) {
        let step = reduce_step(&current)?;
        current = step.after.clone();
        steps.push(step);
    }
    Ok(ReductionCertificate {
        initial: s.clone(),
        steps,
        final_seq: current,
    })
}

/// The inequality a valid certificate establishes for its initial word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaProof {
    #[serde(serialize_with = "ser_ratio")]
    pub total: Weight,
    pub blanks: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("certificate rejected{}: {reason}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
pub struct CheckFailure {
    /// 1-based step index, `None` for whole-certificate problems.
    pub step: Option<usize>,
    pub reason: String,
}

fn fail<T>(step: Option<usize>, reason: impl Into<String>) -> Result<T, CheckFailure> {
    Err(CheckFailure {
        step,
        reason: reason.into(),
    })
}

fn check_pattern(step: &ReductionStep) -> Result<(), String> {
    let s = &step.before;
    let sym = |t: usize| (1..=s.len()).contains(&t).then(|| s.at(t));
    match (step.rule, &step.edit) {
        (Rule::CollapseBlanks, Edit::Positions(ps)) if ps.len() == 1 => {
            let p = ps[0];
            match (sym(p.wrapping_sub(1)), sym(p)) {
                (Some(Symbol::Blank), Some(Symbol::Blank)) => Ok(()),
                _ => Err(format!("no BB ending at position {p}")),
            }
        }
        (Rule::DeleteZeroWeightPair, Edit::Positions(ps)) if ps.len() == 1 => {
            let p = ps[0];
            match (sym(p.wrapping_sub(1)), sym(p)) {
                (Some(Symbol::Walker(a)), Some(Symbol::Walker(b))) if a == b => Ok(()),
                _ => Err(format!("no adjacent equal walkers ending at position {p}")),
            }
        }
        (Rule::CollapseWeightOnePair, Edit::Positions(ps))
            if ps.len() == 2 && ps[1] == ps[0] + 1 =>
        {
            let p = ps[0];
            match (sym(p.wrapping_sub(1)), sym(p), sym(p + 1)) {
                (Some(Symbol::Walker(a)), Some(Symbol::Blank), Some(Symbol::Walker(b)))
                    if a == b =>
                {
                    Ok(())
                }
                _ => Err(format!("no i B i pattern around position {p}")),
            }
        }
        (Rule::DeleteVictimSymbol, Edit::Victim(j)) => {
            if s.symbols().contains(&Symbol::Walker(*j)) {
                Ok(())
            } else {
                Err(format!("victim {j} does not occur"))
            }
        }
        (rule, edit) => Err(format!("edit {edit} does not fit rule {rule}")),
    }
}

fn check_victim(step: &ReductionStep, j: u32) -> Result<(), String> {
    let before = &step.before;
    let recomputed = redistribution(before).map_err(|e| e.to_string())?;
    match &step.redistribution {
        Some(stored) if *stored == recomputed => {}
        Some(_) => return Err("stored redistribution differs from recomputation".into()),
        None => return Err("victim step lacks a redistribution table".into()),
    }
    let total = total_weight(before).total;
    if recomputed.input_total() != total || recomputed.output_total() != total {
        return Err(format!(
            "conservation broken: input {} output {} total {}",
            format_ratio(&recomputed.input_total()),
            format_ratio(&recomputed.output_total()),
            format_ratio(&total)
        ));
    }
    let pairs = neighbor_pairs(before);
    for pair in &pairs {
        let given: Vec<&Donation> = recomputed
            .donations
            .iter()
            .filter(|d| d.symbol == pair.symbol && d.t1 == pair.t1)
            .collect();
        if given.iter().any(|d| d.recipient == pair.symbol) {
            return Err(format!("pair ({},{}) donates to itself", pair.t1, pair.t2));
        }
        let sum: Weight = given.iter().map(|d| d.amount).sum();
        if sum != pair.weight {
            return Err(format!(
                "pair ({},{}) donations do not sum to its weight",
                pair.t1, pair.t2
            ));
        }
    }
    let (input, output) = (recomputed.input_of(j), recomputed.output_of(j));
    if input < output {
        return Err(format!(
            "victim {j} inadmissible: input {} < output {}",
            format_ratio(&input),
            format_ratio(&output)
        ));
    }
    if step.weight_delta != input - output {
        return Err("weight delta differs from input − output".into());
    }
    // Pair by pair, each surviving pair gains exactly what it donated to j.
    let after_pairs = neighbor_pairs(&step.after);
    let survivors: Vec<&NeighborPair> = pairs.iter().filter(|p| p.symbol != j).collect();
    if survivors.len() != after_pairs.len() {
        return Err("surviving pairs do not match pairs after deletion".into());
    }
    for (old, new) in survivors.into_iter().zip(&after_pairs) {
        let donated: Weight = recomputed
            .donations
            .iter()
            .filter(|d| d.symbol == old.symbol && d.t1 == old.t1 && d.recipient == j)
            .map(|d| d.amount)
            .sum();
        if old.symbol != new.symbol || new.weight - old.weight != donated {
            return Err(format!(
                "pair ({},{}) of {} gained {} but donated {} to {j}",
                old.t1,
                old.t2,
                old.symbol,
                format_ratio(&(new.weight - old.weight)),
                format_ratio(&donated)
            ));
        }
    }
    Ok(())
}

fn check_step(step: &ReductionStep) -> Result<(), String> {
    if !is_permissible(&step.before) {
        return Err("word before the step is not permissible".into());
    }
    check_pattern(step)?;
    if step.edit.apply(&step.before) != step.after {
        return Err("after does not match the edit applied to before".into());
    }
    if step.after.len() >= step.before.len() {
        return Err("step does not shorten the word".into());
    }
    let weight_delta = total_weight(&step.after).total - total_weight(&step.before).total;
    let blank_delta = blank_count(&step.after) as i64 - blank_count(&step.before) as i64;
    if weight_delta != step.weight_delta {
        return Err(format!(
            "weight delta recorded {} but recomputed {}",
            format_ratio(&step.weight_delta),
            format_ratio(&weight_delta)
        ));
    }
    if blank_delta != step.blank_delta {
        return Err(format!(
            "blank delta recorded {} but recomputed {blank_delta}",
            step.blank_delta
        ));
    }
    let expected = match step.rule {
        Rule::CollapseBlanks => Some((Weight::zero(), -1)),
        Rule::DeleteZeroWeightPair => Some((Weight::zero(), 0)),
        Rule::CollapseWeightOnePair => Some((-Weight::from_integer(1), -1)),
        Rule::DeleteVictimSymbol => None,
    };
    match (expected, &step.edit) {
        (Some((w, b)), _) => {
            if step.redistribution.is_some() {
                return Err("redistribution table on a non-victim step".into());
            }
            if (w, b) != (step.weight_delta, step.blank_delta) {
                return Err(format!(
                    "{} must change (weight, blanks) by ({}, {b})",
                    step.rule,
                    format_ratio(&w)
                ));
            }
        }
        (None, Edit::Victim(j)) => {
            check_victim(step, *j)?;
            if step.blank_delta != 0 || step.weight_delta.is_negative() {
                return Err("victim deletion must keep blanks and not lose weight".into());
            }
        }
        (None, _) => unreachable!("pattern check pairs victim rule with victim edit"),
    }
    Ok(())
}

/// Re-derives every step from scratch and returns the inequality it proves.
pub fn check_certificate(c: &ReductionCertificate) -> Result<LemmaProof, CheckFailure> {
    if !is_permissible(&c.initial) {
        return fail(None, "initial word is not permissible");
    }
    let mut expected_before = &c.initial;
    let mut sum_weight_delta = Weight::zero();
    let mut sum_blank_delta = 0i64;
    for (idx, step) in c.steps.iter().enumerate() {
        let n = Some(idx + 1);
        if &step.before != expected_before {
            return fail(n, "step does not continue from the previous word");
        }
        if let Err(reason) = check_step(step) {
            return fail(n, reason);
        }
        if step.weight_delta - Weight::from_integer(step.blank_delta) < Weight::zero() {
            return fail(n, "step would increase blanks − weight");
        }
        sum_weight_delta += step.weight_delta;
        sum_blank_delta += step.blank_delta;
        expected_before = &step.after;
    }
    if &c.final_seq != expected_before {
        return fail(None, "final word does not match the last step");
    }
    if !is_terminal(&c.final_seq) {
        return fail(None, "final word is not terminal");
    }
    let final_report = total_weight(&c.final_seq);
    if !final_report.total.is_zero() {
        return fail(None, "final word has nonzero weight");
    }
    let total = final_report.total - sum_weight_delta;
    let blanks = final_report.blanks as i64 - sum_blank_delta;
    let direct = total_weight(&c.initial);
    if total != direct.total || blanks != direct.blanks as i64 {
        return fail(None, "unwound totals disagree with the initial word");
    }
    if total > Weight::from_integer(blanks) {
        return fail(None, "chain does not bound weight by blanks");
    }
    Ok(LemmaProof {
        total,
        blanks: blanks as usize,
        steps: c.steps.len(),
    })
}

impl ReductionCertificate {
    /// Line format: `k T`, initial word, one `Rule edit weight_delta blank_delta`
    /// line per step, final word.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {}\n{}\n",
            self.initial.k(),
            self.initial.len(),
            self.initial
        );
        for step in &self.steps {
            out.push_str(&format!(
                "{} {} {} {}\n",
                step.rule,
                step.edit,
                format_ratio(&step.weight_delta),
                step.blank_delta
            ));
        }
        out.push_str(&format!("{}\n", self.final_seq));
        out
    }

    /// Parses the text form, replaying edits to rebuild each step.
    ///
    /// Stored deltas are kept as written so that `check_certificate` can reject
    /// tampered files.
    pub fn from_text(text: &str) -> Result<Self, CertificateParseError> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < 3 {
            return Err(CertificateParseError::Truncated);
        }
        let header: Vec<&str> = lines[0].split_whitespace().collect();
        let (k, len) = match header.as_slice() {
            [k, t] => (
                k.parse::<u32>()
                    .map_err(|_| CertificateParseError::Header)?,
                t.parse::<usize>()
                    .map_err(|_| CertificateParseError::Header)?,
            ),
            _ => return Err(CertificateParseError::Header),
        };
        let initial = parse_seq(lines[1], k)?;
        if initial.len() != len {
            return Err(CertificateParseError::Header);
        }
        let mut steps = Vec::new();
        let mut current = initial.clone();
        for (idx, line) in lines[2..lines.len() - 1].iter().enumerate() {
            let line_no = idx + 3;
            let bad = || CertificateParseError::StepLine(line_no);
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [rule, edit, wd, bd] = fields.as_slice() else {
                return Err(bad());
            };
            let rule = Rule::from_name(rule).ok_or_else(bad)?;
            let edit = if let Some(j) = edit.strip_prefix("j=") {
                Edit::Victim(j.parse().map_err(|_| bad())?)
            } else {
                let ps = edit
                    .split(',')
                    .map(|p| p.parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                if ps.iter().any(|&p| p == 0 || p > current.len()) {
                    return Err(bad());
                }
                Edit::Positions(ps)
            };
            let weight_delta = parse_ratio(wd).ok_or_else(bad)?;
            let blank_delta: i64 = bd.parse().map_err(|_| bad())?;
            let redistribution = match rule {
                Rule::DeleteVictimSymbol => redistribution(&current).ok(),
                _ => None,
            };
            let after = edit.apply(&current);
            steps.push(ReductionStep {
                rule,
                edit,
                before: current.clone(),
                after: after.clone(),
                weight_delta,
                blank_delta,
                redistribution,
            });
            current = after;
        }
        let final_seq = parse_seq(lines[lines.len() - 1], k)?;
        Ok(ReductionCertificate {
            initial,
            steps,
            final_seq,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateParseError {
    #[error("certificate is truncated")]
    Truncated,
    #[error("malformed header line")]
    Header,
    #[error("malformed step on line {0}")]
    StepLine(usize),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(text: &str, k: u32) -> Seq {
        parse_seq(text, k).unwrap()
    }

    fn r(n: i64, d: i64) -> Weight {
        Weight::new(n, d)
    }

    const REDUCED: &str = "1 3 B 2 3 B 1 B 2 B 1 3";

    #[test]
    fn redistribution_of_reduced_example() {
        let rep = redistribution(&seq(REDUCED, 3)).unwrap();
        assert_eq!(
            rep.input,
            BTreeMap::from([(1, r(1, 3)), (2, r(4, 3)), (3, r(1, 3))])
        );
        assert_eq!(
            rep.output,
            BTreeMap::from([(1, r(5, 6)), (2, r(1, 3)), (3, r(5, 6))])
        );
        assert_eq!(rep.input_total(), r(2, 1));
        assert_eq!(rep.output_total(), r(2, 1));
        assert_eq!(rep.admissible_victims().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn redistribution_single_pair() {
        let rep = redistribution(&seq("1 B 2 B 1", 2)).unwrap();
        assert_eq!(rep.input_of(2), r(1, 2));
        assert_eq!(rep.input_of(1), r(0, 1));
        assert_eq!(rep.output_of(1), r(1, 2));
        assert_eq!(rep.donations.len(), 1);
        assert_eq!(rep.donations[0].recipient, 2);
    }

    #[test]
    fn redistribution_rejects_narrow_pairs() {
        assert!(matches!(
            redistribution(&seq("1 B 1", 1)),
            Err(LemmaError::PairTooNarrow { b: 1, .. })
        ));
        assert!(matches!(
            redistribution(&seq("1 1", 1)),
            Err(LemmaError::PairTooNarrow { b: 0, .. })
        ));
    }

    #[test]
    fn first_step_on_worked_example_drops_adjacent_threes() {
        let s = seq("1 3 B 2 3 3 B 3 B 1 B 2 B 1 3", 3);
        let step = reduce_step(&s).unwrap();
        assert_eq!(step.rule, Rule::DeleteZeroWeightPair);
        assert_eq!(step.edit, Edit::Positions(vec![6]));
        assert_eq!(step.weight_delta, r(0, 1));
        assert_eq!(step.after.len(), 14);
    }

    #[test]
    fn weight_one_collapse() {
        let step = reduce_step(&seq("1 B 1", 1)).unwrap();
        assert_eq!(step.rule, Rule::CollapseWeightOnePair);
        assert_eq!(step.after, seq("1", 1));
        assert_eq!((step.weight_delta, step.blank_delta), (r(-1, 1), -1));
    }

    #[test]
    fn victim_step_on_reduced_example() {
        let step = reduce_step(&seq(REDUCED, 3)).unwrap();
        assert_eq!(step.rule, Rule::DeleteVictimSymbol);
        assert_eq!(step.edit, Edit::Victim(2));
        assert_eq!(step.weight_delta, r(1, 1));
        assert_eq!(total_weight(&step.after).total, r(3, 1));
        assert_eq!(step.blank_delta, 0);
    }

    #[test]
    fn blank_collapse_is_first() {
        let step = reduce_step(&seq("1 B B 1 1", 1)).unwrap();
        assert_eq!(step.rule, Rule::CollapseBlanks);
        assert_eq!(step.edit, Edit::Positions(vec![3]));
    }

    #[test]
    fn terminal_and_non_permissible_errors() {
        assert!(matches!(
            reduce_step(&seq("B", 1)),
            Err(LemmaError::Terminal(_))
        ));
        assert!(matches!(
            reduce_step(&seq("1 B 2", 2)),
            Err(LemmaError::Terminal(_))
        ));
        assert!(matches!(
            reduce_step(&seq("2 1", 2)),
            Err(LemmaError::NotPermissible(_))
        ));
        assert!(matches!(
            reduce_certificate(&seq("2 1", 2)),
            Err(LemmaError::NotPermissible(_))
        ));
    }

    #[test]
    fn certificates_check() {
        let c = reduce_certificate(&seq("1 B 1", 1)).unwrap();
        assert_eq!(c.steps.len(), 1);
        let proof = check_certificate(&c).unwrap();
        assert_eq!((proof.total, proof.blanks), (r(1, 1), 1));

        let c = reduce_certificate(&seq("B", 1)).unwrap();
        assert!(c.steps.is_empty());
        let proof = check_certificate(&c).unwrap();
        assert_eq!((proof.total, proof.blanks), (r(0, 1), 1));

        let c = reduce_certificate(&seq("1 3 B 2 3 3 B 3 B 1 B 2 B 1 3", 3)).unwrap();
        let proof = check_certificate(&c).unwrap();
        assert_eq!((proof.total, proof.blanks), (r(3, 1), 5));
        assert!(c.steps.len() <= 15);
    }

    #[test]
    fn tampered_delta_rejected() {
        let mut c = reduce_certificate(&seq("1 3 B 2 3 3 B 3 B 1 B 2 B 1 3", 3)).unwrap();
        c.steps[0].weight_delta += Weight::from_integer(1);
        let err = check_certificate(&c).unwrap_err();
        assert_eq!(err.step, Some(1));
        assert!(err.reason.contains("weight delta"), "{err}");
    }

    #[test]
    fn inadmissible_victim_rejected() {
        let s = seq(REDUCED, 3);
        let rep = redistribution(&s).unwrap();
        // walker 1 has input 1/3 < output 5/6
        let step = step_from_edit(Rule::DeleteVictimSymbol, Edit::Victim(1), &s, Some(rep));
        let mut c = reduce_certificate(&step.after).unwrap();
        c.initial = s;
        c.steps.insert(0, step);
        let err = check_certificate(&c).unwrap_err();
        assert_eq!(err.step, Some(1));
        assert!(err.reason.contains("inadmissible"), "{err}");
    }

    #[test]
    fn wrong_rule_pattern_rejected() {
        let s = seq("1 B 2 2", 2);
        let bogus = step_from_edit(Rule::CollapseBlanks, Edit::Positions(vec![4]), &s, None);
        let c = ReductionCertificate {
            initial: s,
            final_seq: bogus.after.clone(),
            steps: vec![bogus],
        };
        assert!(check_certificate(&c).is_err());
    }

    #[test]
    fn text_roundtrip_and_golden() {
        let c = reduce_certificate(&seq(REDUCED, 3)).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("3 12\n1 3 B 2 3 B 1 B 2 B 1 3\nDeleteVictimSymbol j=2 1/1 0\n"));
        let back = ReductionCertificate::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert!(check_certificate(&back).is_ok());
    }

    #[test]
    fn text_tamper_rejected() {
        let c = reduce_certificate(&seq("1 B 1", 1)).unwrap();
        let text = c.to_text().replace("-1/1 -1", "0/1 -1");
        let back = ReductionCertificate::from_text(&text).unwrap();
        assert!(check_certificate(&back).is_err());
    }

    #[test]
    fn text_parse_errors() {
        assert_eq!(
            ReductionCertificate::from_text("1 1\nB"),
            Err(CertificateParseError::Truncated)
        );
        assert_eq!(
            ReductionCertificate::from_text("x 1\nB\nB\n"),
            Err(CertificateParseError::Header)
        );
        assert_eq!(
            ReductionCertificate::from_text("1 3\n1 B 1\nCollapseWeightOnePair 9,10 -1/1 -1\n1\n"),
            Err(CertificateParseError::StepLine(3))
        );
    }
}
