//! Finite words over the alphabet `[k] ∪ {B}` and their neighbor-pair weights.
//!
//! A word records, at each time step, which walker (if any) sits on the
//! tracked site. Times are 1-based throughout so that positions printed in
//! reports line up with hand-written tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Exact weight arithmetic. Denominators stay below `lcm(1..=k+1)`.
pub type Weight = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("walker count must be at least 1, got {0}")]
    ZeroWalkers(u32),
    #[error("malformed token {token:?} at position {position}")]
    MalformedToken { token: String, position: usize },
    #[error("walker index {index} at position {position} exceeds k = {k}")]
    IndexOutOfRange { index: u32, k: u32, position: usize },
}

/// One letter of the alphabet. `Blank` orders before every walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Blank,
    Walker(u32),
}

impl Symbol {
    pub fn is_blank(self) -> bool {
        matches!(self, Symbol::Blank)
    }

    pub fn walker(self) -> Option<u32> {
        match self {
            Symbol::Blank => None,
            Symbol::Walker(i) => Some(i),
        }
    }

    /// Dense index into `0..=k`, with the blank at 0.
    pub(crate) fn slot(self) -> usize {
        match self {
            Symbol::Blank => 0,
            Symbol::Walker(i) => i as usize,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Blank => f.write_str("B"),
            Symbol::Walker(i) => write!(f, "{i}"),
        }
    }
}

/// A finite sequence over `[k] ∪ {B}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seq {
    k: u32,
    symbols: Vec<Symbol>,
}

impl Seq {
    /// Builds a sequence, checking every walker index against `k`.
    pub fn new(k: u32, symbols: Vec<Symbol>) -> Result<Self, SeqError> {
        if k == 0 {
            return Err(SeqError::ZeroWalkers(k));
        }
        for (pos, sym) in symbols.iter().enumerate() {
            if let Symbol::Walker(i) = *sym {
                if i == 0 || i > k {
                    return Err(SeqError::IndexOutOfRange {
                        index: i,
                        k,
                        position: pos + 1,
                    });
                }
            }
        }
        Ok(Seq { k, symbols })
    }

    /// Used internally where indices are known to be in range.
    pub(crate) fn from_parts(k: u32, symbols: Vec<Symbol>) -> Self {
        debug_assert!(symbols
            .iter()
            .all(|s| s.walker().is_none_or(|i| (1..=k).contains(&i))));
        Seq { k, symbols }
    }

    pub fn empty(k: u32) -> Result<Self, SeqError> {
        Seq::new(k, Vec::new())
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbol at 1-based time `t`.
    pub fn at(&self, t: usize) -> Symbol {
        self.symbols[t - 1]
    }

    pub fn with_appended(&self, sym: Symbol) -> Seq {
        let mut symbols = self.symbols.clone();
        symbols.push(sym);
        Seq::from_parts(self.k, symbols)
    }

    /// Returns a copy with the given 1-based positions removed.
    pub fn without_positions(&self, positions: &[usize]) -> Seq {
        let symbols = self
            .symbols
            .iter()
            .enumerate()
            .filter(|(idx, _)| !positions.contains(&(idx + 1)))
            .map(|(_, s)| *s)
            .collect();
        Seq::from_parts(self.k, symbols)
    }

    /// Returns a copy with every occurrence of walker `j` removed.
    pub fn without_walker(&self, j: u32) -> Seq {
        let symbols = self
            .symbols
            .iter()
            .copied()
            .filter(|s| *s != Symbol::Walker(j))
            .collect();
        Seq::from_parts(self.k, symbols)
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, sym) in self.symbols.iter().enumerate() {
            if idx > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{sym}")?;
        }
        Ok(())
    }
}

impl Serialize for Seq {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Parses whitespace-separated tokens, each `B` or a decimal walker index.
pub fn parse_seq(text: &str, k: u32) -> Result<Seq, SeqError> {
    if k == 0 {
        return Err(SeqError::ZeroWalkers(k));
    }
    let symbols = text
        .split_whitespace()
        .enumerate()
        .map(|(idx, tok)| parse_token(tok, idx + 1))
        .collect::<Result<Vec<_>, _>>()?;
    Seq::new(k, symbols)
}

fn parse_token(tok: &str, position: usize) -> Result<Symbol, SeqError> {
    if tok == "B" {
        return Ok(Symbol::Blank);
    }
    let malformed = || SeqError::MalformedToken {
        token: tok.to_string(),
        position,
    };
    if !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    u32::from_str(tok)
        .map(Symbol::Walker)
        .map_err(|_| malformed())
}

/// Adjacent walker symbols must be non-decreasing; blanks are unconstrained.
pub fn is_permissible(s: &Seq) -> bool {
    s.symbols.windows(2).all(|w| match (w[0], w[1]) {
        (Symbol::Walker(a), Symbol::Walker(b)) => a <= b,
        _ => true,
    })
}

pub fn blank_count(s: &Seq) -> usize {
    s.symbols.iter().filter(|sym| sym.is_blank()).count()
}

/// Two consecutive occurrences of one walker symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborPair {
    pub symbol: u32,
    pub t1: usize,
    pub t2: usize,
    /// Number of distinct letters (blank included) strictly between `t1` and `t2`.
    pub b: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub weight: Weight,
}

/// Weight of a pair separated by `b` distinct letters: `1/b`, or 0 when adjacent.
pub fn pair_weight(b: u32) -> Weight {
    if b == 0 {
        Weight::zero()
    } else {
        Weight::new(1, i64::from(b))
    }
}

/// All neighbor pairs, ordered by `(symbol, t1)`.
///
/// Runs in `O(T·(k+1))`: a letter occurs strictly between `s` and `t`
/// exactly when its most recent occurrence before `t` is after `s`.
pub fn neighbor_pairs(s: &Seq) -> Vec<NeighborPair> {
    let mut last_seen: Vec<usize> = vec![0; s.k as usize + 1];
    let mut pairs = Vec::new();
    for (idx, sym) in s.symbols.iter().enumerate() {
        let t = idx + 1;
        if let Symbol::Walker(i) = *sym {
            let prev = last_seen[i as usize];
            if prev > 0 {
                let b = last_seen.iter().filter(|&&seen| seen > prev).count() as u32;
                pairs.push(NeighborPair {
                    symbol: i,
                    t1: prev,
                    t2: t,
                    b,
                    weight: pair_weight(b),
                });
            }
        }
        last_seen[sym.slot()] = t;
    }
    pairs.sort_by_key(|p| (p.symbol, p.t1));
    pairs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightReport {
    pub k: u32,
    pub length: usize,
    pub pairs: Vec<NeighborPair>,
    /// Sum of pair weights per walker symbol (the symbol's "output").
    #[serde(serialize_with = "ser_ratio_map")]
    pub per_symbol_output: BTreeMap<u32, Weight>,
    #[serde(serialize_with = "ser_ratio")]
    pub total: Weight,
    pub blanks: usize,
}

impl WeightReport {
    /// `total ≤ blanks`, the inequality every permissible word satisfies.
    pub fn within_blank_budget(&self) -> bool {
        self.total <= Weight::from_integer(self.blanks as i64)
    }
}

pub fn total_weight(s: &Seq) -> WeightReport {
    let pairs = neighbor_pairs(s);
    let mut per_symbol_output: BTreeMap<u32, Weight> = BTreeMap::new();
    for pair in &pairs {
        *per_symbol_output
            .entry(pair.symbol)
            .or_insert_with(Weight::zero) += pair.weight;
    }
    let total = per_symbol_output.values().copied().sum();
    WeightReport {
        k: s.k,
        length: s.len(),
        pairs,
        per_symbol_output,
        total,
        blanks: blank_count(s),
    }
}

/// Renders a ratio as `num/den`, keeping the denominator even when it is 1.
pub fn format_ratio(r: &Weight) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_ratio(text: &str) -> Option<Weight> {
    let (num, den) = text.split_once('/')?;
    let num: i64 = num.parse().ok()?;
    let den: i64 = den.parse().ok()?;
    (den != 0).then(|| Weight::new(num, den))
}

pub(crate) fn ser_ratio<S: Serializer>(r: &Weight, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&format_ratio(r))
}

pub(crate) fn ser_ratio_map<S: Serializer>(
    map: &BTreeMap<u32, Weight>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_map(map.iter().map(|(k, v)| (k.to_string(), format_ratio(v))))
}
