//! Occupancy traces, walker traces, their text formats and avoidance checkers.

use std::fmt::Write as _;

use serde::Serialize;

use super::SimError;
use crate::sequence::{Seq, Symbol};

/// Reports keep at most this many individual violations; counts are always complete.
pub const MAX_LISTED_VIOLATIONS: usize = 1000;

/// A `T × k` binary matrix; row `t` holds `(X_1(t), …, X_k(t))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingTrace {
    k: u32,
    cells: Vec<u8>,
}

impl CouplingTrace {
    pub fn new(k: u32) -> Self {
        CouplingTrace {
            k,
            cells: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[u8]>>(k: u32, rows: &[R]) -> Result<Self, SimError> {
        let mut tr = CouplingTrace::new(k);
        for row in rows {
            tr.push_row(row.as_ref())?;
        }
        Ok(tr)
    }

    pub fn push_row(&mut self, row: &[u8]) -> Result<(), SimError> {
        if row.len() != self.k as usize {
            return Err(SimError::RowWidth {
                row: self.len() + 1,
                expected: self.k as usize,
                found: row.len(),
            });
        }
        if let Some(bad) = row.iter().find(|&&x| x > 1) {
            return Err(SimError::Format(format!(
                "binary entry expected, found {bad}"
            )));
        }
        self.cells.extend_from_slice(row);
        Ok(())
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.cells.len() / self.k as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Row at 1-based time `t`.
    pub fn row(&self, t: usize) -> &[u8] {
        let k = self.k as usize;
        &self.cells[(t - 1) * k..t * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks_exact(self.k.max(1) as usize)
    }

    /// The 0/1 path of walker `i` (1-based).
    pub fn column(&self, i: u32) -> Vec<u8> {
        self.rows().map(|row| row[i as usize - 1]).collect()
    }

    /// Header `T k`, then one row of space-separated 0/1 per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 2 + 16);
        let _ = writeln!(out, "{} {}", self.len(), self.k);
        for row in self.rows() {
            push_row_text(&mut out, row.iter().map(|&x| u32::from(x)));
        }
        out
    }
}

fn push_row_text(out: &mut String, row: impl Iterator<Item = u32>) {
    for (idx, x) in row.enumerate() {
        if idx > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
}

/// Positions of `k` walkers on the complete graph with `n` vertices.
///
/// Row `t` lists each walker's vertex after its move in round `t`. Walkers
/// move in index order within a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerTrace {
    n: u32,
    k: u32,
    looped: bool,
    cells: Vec<u32>,
}

impl WalkerTrace {
    pub fn new(n: u32, k: u32, looped: bool) -> Self {
        WalkerTrace {
            n,
            k,
            looped,
            cells: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[u32]>>(
        n: u32,
        k: u32,
        looped: bool,
        rows: &[R],
    ) -> Result<Self, SimError> {
        let mut tr = WalkerTrace::new(n, k, looped);
        for row in rows {
            tr.push_row(row.as_ref())?;
        }
        Ok(tr)
    }

    /// Appends a row. Vertices outside `[n]` are accepted here and reported by the checker.
    pub fn push_row(&mut self, row: &[u32]) -> Result<(), SimError> {
        if row.len() != self.k as usize {
            return Err(SimError::RowWidth {
                row: self.len() + 1,
                expected: self.k as usize,
                found: row.len(),
            });
        }
        self.cells.extend_from_slice(row);
        Ok(())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn looped(&self) -> bool {
        self.looped
    }

    pub fn len(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.cells.len() / self.k as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn row(&self, t: usize) -> &[u32] {
        let k = self.k as usize;
        &self.cells[(t - 1) * k..t * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.cells.chunks_exact(self.k.max(1) as usize)
    }

    /// Header `T k n looped` (looped as 0/1), then one row of positions per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 3 + 16);
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.len(),
            self.k,
            self.n,
            u8::from(self.looped)
        );
        for row in self.rows() {
            push_row_text(&mut out, row.iter().copied());
        }
        out
    }
}

/// Either kind of trace, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyTrace {
    Coupling(CouplingTrace),
    Walker(WalkerTrace),
}

/// Parses a trace file; the header length decides the kind.
pub fn parse_trace(text: &str) -> Result<AnyTrace, SimError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| SimError::Format("empty trace file".into()))?;
    let nums = parse_ints(header, 0)?;
    let rows: Vec<Vec<u64>> = lines
        .enumerate()
        .map(|(idx, line)| parse_ints(line, idx + 2))
        .collect::<Result<_, _>>()?;
    let to_u32 =
        |x: u64| u32::try_from(x).map_err(|_| SimError::Format(format!("value {x} too large")));
    let (t, k) = match nums.as_slice() {
        [t, k] | [t, k, _, _] => (*t as usize, to_u32(*k)?),
        _ => return Err(SimError::Format(format!("bad trace header {header:?}"))),
    };
    if rows.len() != t {
        return Err(SimError::Format(format!(
            "header declares {t} rows, found {}",
            rows.len()
        )));
    }
    match nums.as_slice() {
        [_, _] => {
            let mut tr = CouplingTrace::new(k);
            for row in rows {
                let row: Vec<u8> = row.iter().map(|&x| x.min(2) as u8).collect();
                tr.push_row(&row)?;
            }
            Ok(AnyTrace::Coupling(tr))
        }
        [_, _, n, looped] => {
            let looped = match looped {
                0 => false,
                1 => true,
                other => {
                    return Err(SimError::Format(format!(
                        "looped flag must be 0 or 1, got {other}"
                    )))
                }
            };
            let mut tr = WalkerTrace::new(to_u32(*n)?, k, looped);
            for row in rows {
                let row = row.into_iter().map(to_u32).collect::<Result<Vec<_>, _>>()?;
                tr.push_row(&row)?;
            }
            Ok(AnyTrace::Walker(tr))
        }
        _ => unreachable!(),
    }
}

fn parse_ints(line: &str, line_no: usize) -> Result<Vec<u64>, SimError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>()
                .map_err(|_| SimError::Format(format!("line {line_no}: bad integer {tok:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `X_i(t) = X_j(t) = 1`, `i < j`.
    Simultaneous {
        t: usize,
        i: u32,
        j: u32,
    },
    /// `X_j(t) = X_i(t+1) = 1`, `i < j`.
    CrossTime {
        t: usize,
        i: u32,
        j: u32,
    },
    /// Walker `i` lands on walker `j < i`, which already moved this round.
    WithinRound {
        t: usize,
        i: u32,
        j: u32,
    },
    /// Walker `i` lands on walker `j > i`, which has not moved yet this round.
    OntoWaiting {
        t: usize,
        i: u32,
        j: u32,
    },
    /// A walker on a loopless graph stayed put.
    Stationary {
        t: usize,
        i: u32,
    },
    OffGraph {
        t: usize,
        i: u32,
        vertex: u32,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub rows: usize,
    pub total: u64,
    pub simultaneous: u64,
    pub cross_time: u64,
    pub within_round: u64,
    pub onto_waiting: u64,
    pub stationary: u64,
    pub off_graph: u64,
    /// The first violations found, in time order.
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn passed(&self) -> bool {
        self.total == 0
    }

    fn push(&mut self, v: Violation) {
        self.total += 1;
        match v {
            Violation::Simultaneous { .. } => self.simultaneous += 1,
            Violation::CrossTime { .. } => self.cross_time += 1,
            Violation::WithinRound { .. } => self.within_round += 1,
            Violation::OntoWaiting { .. } => self.onto_waiting += 1,
            Violation::Stationary { .. } => self.stationary += 1,
            Violation::OffGraph { .. } => self.off_graph += 1,
        }
        if self.violations.len() < MAX_LISTED_VIOLATIONS {
            self.violations.push(v);
        }
    }
}

/// No two walkers on the site at once, and a lower index never follows a higher one.
pub fn check_1avoidance(tr: &CouplingTrace) -> ViolationReport {
    let mut report = ViolationReport {
        rows: tr.len(),
        ..Default::default()
    };
    let mut prev: Option<&[u8]> = None;
    for (idx, row) in tr.rows().enumerate() {
        let t = idx + 1;
        let ones: Vec<u32> = ones_of(row);
        for (a, &i) in ones.iter().enumerate() {
            for &j in &ones[a + 1..] {
                report.push(Violation::Simultaneous { t, i, j });
            }
        }
        if let Some(prev) = prev {
            for j in ones_of(prev) {
                for &i in ones.iter().filter(|&&i| i < j) {
                    report.push(Violation::CrossTime { t: t - 1, i, j });
                }
            }
        }
        prev = Some(row);
    }
    report
}

fn ones_of(row: &[u8]) -> Vec<u32> {
    row.iter()
        .enumerate()
        .filter(|(_, &x)| x == 1)
        .map(|(idx, _)| idx as u32 + 1)
        .collect()
}

/// Row with a single 1 in column `j` becomes walker `j`; an all-zero row becomes a blank.
pub fn encode(tr: &CouplingTrace) -> Result<Seq, SimError> {
    let mut symbols = Vec::with_capacity(tr.len());
    for (idx, row) in tr.rows().enumerate() {
        let ones = ones_of(row);
        symbols.push(match ones.as_slice() {
            [] => Symbol::Blank,
            [j] => Symbol::Walker(*j),
            _ => {
                return Err(SimError::MultipleOccupants {
                    t: idx + 1,
                    count: ones.len(),
                })
            }
        });
    }
    Seq::new(tr.k().max(1), symbols).map_err(|e| SimError::Format(e.to_string()))
}

/// Turn-by-turn collision check for walkers moving in index order.
///
/// The first row has no predecessor, so only its walkers' mutual
/// distinctness is checked.
pub fn check_walker_avoidance(tr: &WalkerTrace) -> ViolationReport {
    let mut report = ViolationReport {
        rows: tr.len(),
        ..Default::default()
    };
    let mut prev: Option<&[u32]> = None;
    for (idx, row) in tr.rows().enumerate() {
        let t = idx + 1;
        for (a, &pos) in row.iter().enumerate() {
            let i = a as u32 + 1;
            if pos == 0 || pos > tr.n() {
                report.push(Violation::OffGraph { t, i, vertex: pos });
            }
            for (b, &other) in row[..a].iter().enumerate() {
                if other == pos {
                    report.push(Violation::WithinRound {
                        t,
                        i,
                        j: b as u32 + 1,
                    });
                }
            }
            if let Some(prev) = prev {
                for (b, &waiting) in prev.iter().enumerate().skip(a + 1) {
                    if waiting == pos {
                        report.push(Violation::OntoWaiting {
                            t,
                            i,
                            j: b as u32 + 1,
                        });
                    }
                }
                if !tr.looped() && prev[a] == pos {
                    report.push(Violation::Stationary { t, i });
                }
            }
        }
        prev = Some(row);
    }
    report
}

/// `X_i(t) = 1` exactly when walker `i` sits on `vertex` after round `t`.
pub fn project(tr: &WalkerTrace, vertex: u32) -> Result<CouplingTrace, SimError> {
    if vertex == 0 || vertex > tr.n() {
        return Err(SimError::VertexOutOfRange { vertex, n: tr.n() });
    }
    let mut out = CouplingTrace::new(tr.k());
    let mut row = vec![0u8; tr.k() as usize];
    for positions in tr.rows() {
        for (cell, &pos) in row.iter_mut().zip(positions) {
            *cell = u8::from(pos == vertex);
        }
        out.push_row(&row)?;
    }
    Ok(out)
}
