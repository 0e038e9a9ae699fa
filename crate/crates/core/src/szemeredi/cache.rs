use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use super::exact::rk_exact_with;
use super::{behrend_set, check_k, check_n, greedy_lower, ExactTable, Kind, Method, RkRecord};
use crate::error::{Error, Result};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

/// Above this N the greedy scan is skipped by [`rk_query`].
const GREEDY_LIMIT: u64 = 1 << 17;

/// Exact values at most this large are used as split points in [`upper_bound`].
const SPLIT_TABLE_LIMIT: u64 = 200;

/// Which side of `r_k(N)` a caller needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

/// Persistent store of the best known records, keyed by `(k, N)`.
///
/// Lower/exact records and upper records are kept apart; neither is ever
/// replaced by a weaker one.
#[derive(Debug, Default, Clone)]
pub struct RkCache {
    path: Option<PathBuf>,
    attained: BTreeMap<(u32, u64), RkRecord>,
    upper: BTreeMap<(u32, u64), RkRecord>,
}

impl RkCache {
    pub fn in_memory() -> Self {
        RkCache::default()
    }

    /// Opens a cache file; a missing file is an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = match std::fs::read_to_string(&path) {
            Ok(text) => RkCache::from_json(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => RkCache::default(),
            Err(e) => return Err(e.into()),
        };
        cache.path = Some(path);
        Ok(cache)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let values: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| Error::CacheCorrupt {
            index: 0,
            k: 0,
            n: 0,
            reason: format!("not a JSON array of records: {e}"),
        })?;
        let mut cache = RkCache::default();
        for (index, value) in values.into_iter().enumerate() {
            let k = value.get("k").and_then(|v| v.as_u64()).unwrap_or(0);
            let n = value.get("N").and_then(|v| v.as_u64()).unwrap_or(0);
            let corrupt = |reason: String| Error::CacheCorrupt { index, k, n, reason };
            let rec: RkRecord = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
            if rec.schema_version != CACHE_SCHEMA_VERSION {
                return Err(corrupt(format!("schema_version {} (expected {CACHE_SCHEMA_VERSION})", rec.schema_version)));
            }
            rec.validate().map_err(corrupt)?;
            cache.offer(rec);
        }
        Ok(cache)
    }

    pub fn to_json(&self) -> Result<String> {
        let all: Vec<&RkRecord> = self.records().collect();
        Ok(serde_json::to_string_pretty(&all)?)
    }

    /// Writes the cache atomically (temp file in the same directory, then rename).
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_json()?.as_bytes())?;
        tmp.flush()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> impl Iterator<Item = &RkRecord> {
        self.attained.values().chain(self.upper.values())
    }

    /// Best exact-or-lower record for `(k, n)`.
    pub fn get(&self, k: u32, n: u64) -> Option<&RkRecord> {
        self.attained.get(&(k, n))
    }

    pub fn get_exact(&self, k: u32, n: u64) -> Option<&RkRecord> {
        self.get(k, n).filter(|r| r.kind == Kind::Exact)
    }

    pub fn get_upper(&self, k: u32, n: u64) -> Option<&RkRecord> {
        self.upper.get(&(k, n))
    }

    /// Inserts `rec` unless it would downgrade what is stored. Returns
    /// whether the cache changed.
    pub fn offer(&mut self, rec: RkRecord) -> bool {
        let key = (rec.k, rec.n);
        match rec.kind {
            Kind::Upper => {
                if self.get_exact(rec.k, rec.n).is_some() {
                    return false;
                }
                match self.upper.get(&key) {
                    Some(old) if old.value <= rec.value => false,
                    _ => {
                        self.upper.insert(key, rec);
                        true
                    }
                }
            }
            Kind::Exact | Kind::Lower => {
                let better = match self.attained.get(&key) {
                    None => true,
                    Some(old) => match (old.kind, rec.kind) {
                        (Kind::Exact, _) => false,
                        (_, Kind::Exact) => true,
                        _ => rec.value > old.value,
                    },
                };
                if better {
                    if rec.kind == Kind::Exact {
                        self.upper.remove(&key);
                    }
                    self.attained.insert(key, rec);
                }
                better
            }
        }
    }

    /// Exact table for `k` holding the cache's consecutive exact prefix.
    fn exact_table(&self, k: u32) -> Result<ExactTable> {
        let mut table = ExactTable::new(k)?;
        while let Some(rec) = self.get_exact(k, table.computed() + 1) {
            table.push_known(rec.clone());
        }
        Ok(table)
    }

    fn absorb(&mut self, table: &ExactTable) {
        for m in 1..=table.computed() {
            self.offer(table.record(m).unwrap().clone());
        }
    }

    /// Largest cached witness usable for `(k, n)`: any record with the same
    /// k (or k = 3) and `N' ≤ n`.
    fn best_embedded_witness(&self, k: u32, n: u64) -> Option<&RkRecord> {
        self.attained
            .values()
            .filter(|r| (r.k == k || r.k == 3) && r.n <= n)
            .max_by_key(|r| (r.value, std::cmp::Reverse(r.n)))
    }
}

/// Best available attained record for `r_k(N)`; new records go to the cache.
pub fn rk_query(k: u32, n: u64, cache: &mut RkCache, budget: Duration) -> Result<RkRecord> {
    check_k(k)?;
    check_n(n)?;
    if let Some(rec) = cache.get_exact(k, n) {
        return Ok(rec.clone());
    }
    let started = Instant::now();
    let mut table = cache.exact_table(k)?;
    let searched = rk_exact_with(&mut table, n, budget);
    cache.absorb(&table);
    if searched.kind == Kind::Exact {
        cache.offer(searched.clone());
        return Ok(searched);
    }
    let mut candidates = vec![searched];
    if n <= GREEDY_LIMIT {
        candidates.push(greedy_lower(k, n)?);
    }
    let mut behrend = behrend_set(n)?;
    behrend.k = k;
    candidates.push(behrend);
    if let Some(rec) = cache.best_embedded_witness(k, n) {
        let mut rec = rec.clone();
        rec.k = k;
        rec.n = n;
        rec.kind = Kind::Lower;
        candidates.push(rec);
    }
    // max_by_key keeps the last maximum; reverse so earlier candidates win ties
    let mut best = candidates.into_iter().rev().max_by_key(|r| r.value).unwrap();
    best.elapsed_ms = started.elapsed().as_millis() as u64;
    cache.offer(best.clone());
    Ok(best)
}

/// Best upper bound on `r_k(N)` (an exact record when one is available).
///
/// Combines `r(N) ≤ N`, `r(N) ≤ r(N−1) + 1`, subadditivity
/// `r(a + b) ≤ r(a) + r(b)` over exact small values, and monotonicity
/// from exact values at larger N or larger k in the cache.
pub fn upper_bound(k: u32, n: u64, cache: &mut RkCache, budget: Duration) -> Result<RkRecord> {
    check_k(k)?;
    check_n(n)?;
    if let Some(rec) = cache.get_exact(k, n) {
        return Ok(rec.clone());
    }
    let started = Instant::now();
    let mut table = cache.exact_table(k)?;
    table.extend_to(n.min(SPLIT_TABLE_LIMIT), started + budget);
    cache.absorb(&table);
    if let Some(rec) = cache.get_exact(k, n) {
        return Ok(rec.clone());
    }
    let exact_at = |m: u64| cache.get_exact(k, m).map(|r| r.value);
    let splits = table.computed();
    let mut bound: Vec<u64> = vec![0; n as usize + 1];
    for m in 1..=n {
        let mut u = m.min(bound[m as usize - 1] + 1);
        if let Some(v) = exact_at(m) {
            u = u.min(v);
        }
        for a in 1..=splits.min(m / 2) {
            u = u.min(bound[a as usize] + bound[(m - a) as usize]);
        }
        bound[m as usize] = u;
    }
    let mut value = bound[n as usize];
    let mut method = if value == n { Method::Trivial } else { Method::Subadditive };
    for r in cache.records().filter(|r| r.kind == Kind::Exact && r.k >= k && r.n >= n) {
        if r.value < value {
            value = r.value;
            method = Method::Dfs;
        }
    }
    let rec = RkRecord {
        k,
        n,
        value,
        kind: Kind::Upper,
        witness: None,
        method,
        elapsed_ms: started.elapsed().as_millis() as u64,
        schema_version: CACHE_SCHEMA_VERSION,
    };
    cache.offer(rec.clone());
    Ok(rec)
}

/// Source of `r_k(N)` values for the bound evaluators and constructions.
pub trait RkProvider {
    /// A record whose kind is valid for `direction`: exact or lower for
    /// [`Direction::Lower`], exact or upper for [`Direction::Upper`].
    fn rk(&mut self, k: u32, n: u64, direction: Direction) -> Result<RkRecord>;
}

impl<F> RkProvider for F
where
    F: FnMut(u32, u64, Direction) -> Result<RkRecord>,
{
    fn rk(&mut self, k: u32, n: u64, direction: Direction) -> Result<RkRecord> {
        self(k, n, direction)
    }
}

/// Provider backed by an [`RkCache`] and a per-query search budget.
#[derive(Debug)]
pub struct RkOracle {
    pub cache: RkCache,
    pub budget: Duration,
}

impl RkOracle {
    pub fn new(cache: RkCache, budget: Duration) -> Self {
        RkOracle { cache, budget }
    }
}

impl RkProvider for RkOracle {
    fn rk(&mut self, k: u32, n: u64, direction: Direction) -> Result<RkRecord> {
        match direction {
            Direction::Lower => rk_query(k, n, &mut self.cache, self.budget),
            Direction::Upper => upper_bound(k, n, &mut self.cache, self.budget),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::szemeredi::{contains_kap, rk_exact};

    const AMPLE: Duration = Duration::from_secs(30);

    #[test]
    fn query_examples() {
        let mut cache = RkCache::in_memory();
        let r = rk_query(3, 4, &mut cache, AMPLE).unwrap();
        assert_eq!((r.kind, r.value), (Kind::Exact, 3));

        // cache hit ignores the budget
        let r = rk_query(3, 4, &mut cache, Duration::ZERO).unwrap();
        assert_eq!((r.kind, r.value), (Kind::Exact, 3));

        let r = rk_query(3, 1_000_000, &mut RkCache::in_memory(), Duration::from_millis(1)).unwrap();
        assert_eq!(r.kind, Kind::Lower);
        assert!(!contains_kap(r.witness.as_ref().unwrap(), 3).unwrap());
        assert!(r.value > 100);
    }

    #[test]
    fn never_downgrades() {
        let mut cache = RkCache::in_memory();
        let exact = rk_exact(3, 9, AMPLE).unwrap();
        assert!(cache.offer(exact.clone()));
        assert!(!cache.offer(greedy_lower(3, 9).unwrap()));
        assert_eq!(cache.get(3, 9), Some(&exact));

        let mut small = greedy_lower(3, 20).unwrap();
        cache.offer(small.clone());
        small.witness.as_mut().unwrap().pop();
        small.value -= 1;
        assert!(!cache.offer(small));
    }

    #[test]
    fn corrupt_record_is_named() {
        let mut cache = RkCache::in_memory();
        cache.offer(rk_exact(3, 5, AMPLE).unwrap());
        let mut json: serde_json::Value = serde_json::from_str(&cache.to_json().unwrap()).unwrap();
        json.as_array_mut().unwrap().push(serde_json::json!({
            "k": 3, "N": 5, "value": 3, "kind": "lower", "witness": [1, 2, 3],
            "method": "greedy", "elapsed_ms": 0, "schema_version": 1
        }));
        let err = RkCache::from_json(&json.to_string()).unwrap_err();
        match err {
            Error::CacheCorrupt { index, k, n, .. } => assert_eq!((index, k, n), (1, 3, 5)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(RkCache::from_json("{"), Err(Error::CacheCorrupt { .. })));
    }

    #[test]
    fn save_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rk.json");
        let mut cache = RkCache::open(&path).unwrap();
        rk_query(3, 12, &mut cache, AMPLE).unwrap();
        upper_bound(3, 60, &mut cache, AMPLE).unwrap();
        cache.save().unwrap();
        let reopened = RkCache::open(&path).unwrap();
        assert_eq!(reopened.records().count(), cache.records().count());
        assert_eq!(reopened.get(3, 12), cache.get(3, 12));
    }

    #[test]
    fn upper_bounds_dominate_exact_values() {
        let mut table = ExactTable::new(3).unwrap();
        table.extend_to(40, Instant::now() + AMPLE);
        for n in [25u64, 31, 40] {
            let mut cache = RkCache::in_memory();
            let u = upper_bound(3, n, &mut cache, Duration::from_millis(0)).unwrap();
            assert!(u.value >= table.value(n).unwrap());
        }
        let mut cache = RkCache::in_memory();
        let u = upper_bound(3, 1201, &mut cache, Duration::from_secs(2)).unwrap();
        assert_eq!(u.kind, Kind::Upper);
        assert!(u.value < 1201 / 2, "subadditivity should beat the trivial bound");
        let e = upper_bound(3, 25, &mut cache, AMPLE).unwrap();
        assert_eq!(e.kind, Kind::Exact);
    }

    #[test]
    fn oracle_respects_direction() {
        let mut oracle = RkOracle::new(RkCache::in_memory(), AMPLE);
        let lo = oracle.rk(4, 30, Direction::Lower).unwrap();
        let hi = oracle.rk(4, 30, Direction::Upper).unwrap();
        assert!(matches!(lo.kind, Kind::Exact | Kind::Lower));
        assert!(matches!(hi.kind, Kind::Exact | Kind::Upper));
        assert!(lo.value <= hi.value);
    }
}
