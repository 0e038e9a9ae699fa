use std::time::{Duration, Instant};

use super::{check_k, check_n, BitSet, Kind, Method, RkRecord};
use crate::error::Result;

/// Exact `r_k(m)` for `m = 1, 2, …`, each with its lexicographically
/// smallest maximum witness.
///
/// Values are computed in increasing `m` so that the search for `m` can
/// prune with `size + r_k(remaining) ≤ best`, where the remaining
/// candidates `x..m` form an interval of length `m − x + 1 < m`.
#[derive(Debug, Clone)]
pub struct ExactTable {
    k: u32,
    records: Vec<RkRecord>,
}

impl ExactTable {
    pub fn new(k: u32) -> Result<Self> {
        check_k(k)?;
        Ok(ExactTable { k, records: Vec::new() })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Largest `m` with a known exact value.
    pub fn computed(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn record(&self, m: u64) -> Option<&RkRecord> {
        self.records.get((m as usize).checked_sub(1)?)
    }

    pub fn value(&self, m: u64) -> Option<u64> {
        self.record(m).map(|r| r.value)
    }

    /// Valid upper bound on `r_k(len)` from the exact prefix,
    /// `r(a + b) ≤ r(a) + r(b)` and `r(len) ≤ len`.
    pub fn upper(&self, len: u64) -> u64 {
        if len == 0 {
            return 0;
        }
        if let Some(v) = self.value(len) {
            return v;
        }
        let c = self.computed();
        if c == 0 {
            return len;
        }
        let rc = self.value(c).unwrap();
        let q = len / c;
        let rem = len % c;
        let rem_bound = if rem == 0 { 0 } else { self.value(rem).unwrap() };
        (q * rc + rem_bound).min(len)
    }

    /// Appends a known exact record for `m = computed() + 1`.
    pub(crate) fn push_known(&mut self, rec: RkRecord) -> bool {
        let fits = rec.k == self.k && rec.kind == Kind::Exact && rec.n == self.computed() + 1 && rec.witness.is_some();
        if fits {
            self.records.push(rec);
        }
        fits
    }

    /// Extends the table up to `n`; returns `false` if the deadline hit first.
    pub fn extend_to(&mut self, n: u64, deadline: Instant) -> bool {
        while self.computed() < n {
            let m = self.computed() + 1;
            let started = Instant::now();
            match self.search(m, deadline) {
                Some(witness) => {
                    let rec = RkRecord::from_witness(self.k, m, Kind::Exact, witness, Method::Dfs, started);
                    self.records.push(rec);
                }
                None => return false,
            }
        }
        true
    }

    fn search(&self, m: u64, deadline: Instant) -> Option<Vec<u64>> {
        // r(m) ∈ {r(m−1), r(m−1)+1}
        let floor = self.value(m - 1).unwrap_or(1);
        let mut s = Search {
            k: self.k,
            m,
            table: self,
            members: BitSet::new(m as usize + 1),
            chosen: Vec::with_capacity(m as usize),
            best: Vec::new(),
            best_size: floor - 1,
            target: floor + 1,
            nodes: 0,
            deadline,
            timed_out: false,
            done: false,
        };
        // Translating any maximum set so it starts at 1 keeps it maximum and
        // makes it lexicographically smaller, so the answer always contains 1.
        s.members.insert(1);
        s.chosen.push(1);
        s.dfs(2);
        if s.timed_out {
            None
        } else {
            Some(s.best)
        }
    }
}

struct Search<'a> {
    k: u32,
    m: u64,
    table: &'a ExactTable,
    members: BitSet,
    chosen: Vec<u64>,
    best: Vec<u64>,
    best_size: u64,
    target: u64,
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
    done: bool,
}

impl Search<'_> {
    fn dfs(&mut self, x: u64) {
        self.nodes += 1;
        if self.nodes & 0xfff == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out || self.done {
            return;
        }
        let size = self.chosen.len() as u64;
        if size > self.best_size {
            self.best_size = size;
            self.best.clone_from(&self.chosen);
            if size >= self.target {
                self.done = true;
                return;
            }
        }
        if x > self.m {
            return;
        }
        let remaining = self.m - x + 1;
        if size + self.table.upper(remaining) <= self.best_size {
            return;
        }
        if !self.completes_kap(x) {
            self.members.insert(x as usize);
            self.chosen.push(x);
            self.dfs(x + 1);
            self.chosen.pop();
            self.members.remove(x as usize);
            if self.done || self.timed_out {
                return;
            }
        }
        if size + self.table.upper(remaining - 1) <= self.best_size {
            return;
        }
        self.dfs(x + 1);
    }

    #[inline]
    fn completes_kap(&self, x: u64) -> bool {
        let steps = (self.k - 1) as u64;
        let max_gap = (x - 1) / steps;
        (1..=max_gap).any(|d| (1..=steps).all(|t| self.members.contains((x - t * d) as usize)))
    }
}

/// Exact `r_k(N)` by depth-first search within `budget`.
///
/// When the budget runs out the result is `Kind::Lower`, carrying the
/// witness of the largest `m ≤ N` finished so far.
pub fn rk_exact(k: u32, n: u64, budget: Duration) -> Result<RkRecord> {
    check_k(k)?;
    check_n(n)?;
    let mut table = ExactTable::new(k)?;
    Ok(rk_exact_with(&mut table, n, budget))
}

pub(crate) fn rk_exact_with(table: &mut ExactTable, n: u64, budget: Duration) -> RkRecord {
    let k = table.k();
    let started = Instant::now();
    let complete = table.extend_to(n, started + budget);
    let elapsed_ms = started.elapsed().as_millis() as u64;
    if complete {
        let mut rec = table.record(n).unwrap().clone();
        rec.elapsed_ms = elapsed_ms;
        return rec;
    }
    let witness = match table.computed() {
        0 => vec![1],
        c => table.record(c).unwrap().witness.clone().unwrap(),
    };
    let mut rec = RkRecord::from_witness(k, n, Kind::Lower, witness, Method::Dfs, started);
    rec.elapsed_ms = elapsed_ms;
    rec
}
