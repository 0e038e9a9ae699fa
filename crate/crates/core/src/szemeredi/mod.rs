//! Szemerédi numbers `r_k(N)`: the largest size of a subset of `{1..N}`
//! without a k-term arithmetic progression.

mod bitset;
mod cache;
mod exact;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bitset::BitSet;
pub use cache::{rk_query, upper_bound, Direction, RkCache, RkOracle, RkProvider, CACHE_SCHEMA_VERSION};
pub use exact::{rk_exact, ExactTable};

/// How a value relates to the true `r_k(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Exact,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dfs,
    Behrend,
    Greedy,
    Trivial,
    Subadditive,
}

/// A value or bound for `r_k(N)`, with a progression-free witness when the
/// value is attained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RkRecord {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub value: u64,
    pub kind: Kind,
    pub witness: Option<Vec<u64>>,
    pub method: Method,
    /// Wall time in milliseconds. The only field allowed to differ between runs.
    pub elapsed_ms: u64,
    pub schema_version: u32,
}

impl RkRecord {
    pub(crate) fn from_witness(k: u32, n: u64, kind: Kind, witness: Vec<u64>, method: Method, started: Instant) -> Self {
        RkRecord {
            k,
            n,
            value: witness.len() as u64,
            kind,
            witness: Some(witness),
            method,
            elapsed_ms: started.elapsed().as_millis() as u64,
            schema_version: CACHE_SCHEMA_VERSION,
        }
    }

    /// Checks the record's internal invariants; returns a reason on failure.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.k < 3 {
            return Err(format!("k = {} is below 3", self.k));
        }
        if self.n == 0 {
            return Err("N must be at least 1".into());
        }
        if self.value == 0 || self.value > self.n {
            return Err(format!("value {} outside [1, {}]", self.value, self.n));
        }
        match (&self.kind, &self.witness) {
            (Kind::Upper, _) => Ok(()),
            (_, None) => Err("exact/lower record without witness".into()),
            (_, Some(w)) => {
                if w.len() as u64 != self.value {
                    return Err(format!("value {} but witness has {} elements", self.value, w.len()));
                }
                if w.windows(2).any(|p| p[0] >= p[1]) {
                    return Err("witness not strictly increasing".into());
                }
                if w.first().is_some_and(|&x| x < 1) || w.last().is_some_and(|&x| x > self.n) {
                    return Err(format!("witness leaves [1, {}]", self.n));
                }
                if contains_kap(w, self.k).map_err(|e| e.to_string())? {
                    return Err(format!("witness contains a {}-term progression", self.k));
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn check_k(k: u32) -> Result<()> {
    if k < 3 {
        return Err(Error::invalid(format!("progression length k = {k} must be at least 3")));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    Ok(())
}

/// Does the strictly increasing set `s` contain `a, a+d, …, a+(k−1)d` with `d ≥ 1`?
pub fn contains_kap(s: &[u64], k: u32) -> Result<bool> {
    check_k(k)?;
    if s.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::invalid("set must be strictly increasing"));
    }
    Ok(find_kap(s, k).is_some())
}

/// First progression `(start, gap)` in `s` ordered by start then gap.
pub(crate) fn find_kap(s: &[u64], k: u32) -> Option<(u64, u64)> {
    if (s.len() as u64) < k as u64 {
        return None;
    }
    let lo = s[0];
    let hi = *s.last().unwrap();
    let mut members = BitSet::new((hi - lo + 1) as usize);
    for &x in s {
        members.insert((x - lo) as usize);
    }
    let steps = (k - 1) as u64;
    for (i, &a) in s.iter().enumerate() {
        for &b in &s[i + 1..] {
            let d = b - a;
            if d * steps > hi - a {
                break;
            }
            if (2..k as u64).all(|t| members.contains((a + t * d - lo) as usize)) {
                return Some((a, d));
            }
        }
    }
    None
}

/// Greedy scan `x = 1..N`, keeping `x` whenever the set stays kAP-free.
pub fn greedy_lower(k: u32, n: u64) -> Result<RkRecord> {
    check_k(k)?;
    check_n(n)?;
    let started = Instant::now();
    let mut members = BitSet::new(n as usize + 1);
    let mut chosen: Vec<u64> = Vec::new();
    for x in 1..=n {
        if !completes_kap_sparse(&members, &chosen, x, k) {
            members.insert(x as usize);
            chosen.push(x);
        }
    }
    Ok(RkRecord::from_witness(k, n, Kind::Lower, chosen, Method::Greedy, started))
}

// Walks the chosen elements from the top, so the cost is O(|chosen|) per x.
fn completes_kap_sparse(members: &BitSet, chosen: &[u64], x: u64, k: u32) -> bool {
    let steps = (k - 1) as u64;
    for &y in chosen.iter().rev() {
        let d = x - y;
        if d * steps > x - 1 {
            break;
        }
        if (2..k as u64).all(|t| members.contains((x - t * d) as usize)) {
            return true;
        }
    }
    false
}

/// Behrend's sphere construction, scanning every feasible `(d, n)` with
/// `(2d−1)^n ≤ N` and keeping the largest radius class. The result is
/// 3AP-free and hence kAP-free for every `k ≥ 3`.
pub fn behrend_set(n: u64) -> Result<RkRecord> {
    check_n(n)?;
    let started = Instant::now();
    // The two-point set {1, 2} is the trivial sphere class for tiny N.
    let mut best_len = n.min(2);
    let mut best_at: Option<(u64, u32, u64)> = None;
    for d in 2u64.. {
        let base = 2 * d - 1;
        if base.saturating_mul(base) > n {
            break;
        }
        // one-dimensional classes are singletons
        let mut dim = 2u32;
        while base.checked_pow(dim).is_some_and(|s| s <= n) {
            let (radius, size) = largest_radius(d, dim);
            if size > best_len {
                best_len = size;
                best_at = Some((d, dim, radius));
            }
            dim += 1;
        }
    }
    let best = match best_at {
        Some((d, dim, radius)) => sphere_class(d, dim, radius),
        None => (1..=n.min(2)).collect(),
    };
    Ok(RkRecord::from_witness(3, n, Kind::Lower, best, Method::Behrend, started))
}

/// Most populated squared radius among digit vectors in `[0, d)^dim`,
/// smallest radius on ties.
fn largest_radius(d: u64, dim: u32) -> (u64, u64) {
    let mut counts = vec![1u64];
    for _ in 0..dim {
        let mut next = vec![0u64; counts.len() + ((d - 1) * (d - 1)) as usize];
        for (r, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for x in 0..d {
                next[r + (x * x) as usize] += c;
            }
        }
        counts = next;
    }
    let (radius, &size) = counts.iter().enumerate().rev().max_by_key(|(_, &c)| c).unwrap();
    (radius as u64, size)
}

/// Integers `1 + Σ x_i (2d−1)^i` with digits in `[0, d)` and `Σ x_i² = radius`.
fn sphere_class(d: u64, dim: u32, radius: u64) -> Vec<u64> {
    let base = 2 * d - 1;
    let mut out = Vec::new();
    let mut digits = vec![0u64; dim as usize];
    loop {
        if digits.iter().map(|x| x * x).sum::<u64>() == radius {
            out.push(digits.iter().rev().fold(0u64, |acc, &x| acc * base + x) + 1);
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                out.sort_unstable();
                return out;
            }
            digits[i] += 1;
            if digits[i] < d {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
