//! Bounds on `d(k, ε)`, the largest Hausdorff dimension of a set that
//! ε-avoids k-term progressions, and checkers for the discrete lemmas
//! behind the upper bounds.
//!
//! Every formula is evaluated with double-double logarithms; floors and
//! ceilings of expressions in ε are taken in exact rational arithmetic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::construction::{Interval, IntervalUnion};
use crate::error::{Error, Result};
use crate::rational::{self, ceil_u64, floor_u64, int, ln_int, ln_rational, ratio, real, real_to_f64, Real, Rational};
use crate::szemeredi::{check_k, find_kap, Direction, Kind, Method, RkProvider, RkRecord};

/// The `r_k(N)` value a bound was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RkInput {
    #[serde(rename = "N")]
    pub n: u64,
    pub value: u64,
    pub kind: Kind,
    pub method: Method,
}

impl From<&RkRecord> for RkInput {
    fn from(r: &RkRecord) -> Self {
        RkInput { n: r.n, value: r.value, kind: r.kind, method: r.method }
    }
}

impl RkInput {
    /// `kind:method`, e.g. `exact:dfs`.
    pub fn tag(&self) -> String {
        let kind = serde_json::to_value(self.kind).unwrap();
        let method = serde_json::to_value(self.method).unwrap();
        format!("{}:{}", kind.as_str().unwrap(), method.as_str().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub input: RkInput,
}

fn to_f64(x: Real) -> f64 {
    real_to_f64(&x)
}

fn check_open_unit(epsilon: &Rational) -> Result<()> {
    if !epsilon.is_positive() || *epsilon >= rational::one() {
        return Err(Error::invalid(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    Ok(())
}

/// Earlier bounds: `log 2 / log((2k−2−4ε)/(k−2−4ε)) ≤ d ≤ 1 + log(1−1/k)/log(k⌈1/(2ε)⌉)`.
pub fn fsy_bounds(k: u32, epsilon: &Rational) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    check_open_unit(epsilon)?;
    let kr = int(k as i64);
    let denom = &kr - int(2) - int(4) * epsilon;
    if !denom.is_positive() {
        return Err(Error::invalid(format!("k - 2 - 4*epsilon = {denom} must be positive")));
    }
    let numer = int(2) * &kr - int(2) - int(4) * epsilon;
    let lower = ln_int(2) / ln_rational(&(numer / denom));
    let c = ceil_u64(&(rational::one() / (int(2) * epsilon))).ok_or_else(|| Error::invalid("epsilon too small"))?;
    let upper = real(1.0) + ln_rational(&ratio(k as i64 - 1, k as i64)) / ln_int(k as u64 * c);
    Ok((to_f64(lower), to_f64(upper)))
}

/// `log r_k(⌊1/(12ε)⌋) / log(12⌊1/(12ε)⌋)` for `ε ∈ (0, 1/12]`.
///
/// Any attained value (exact or lower) gives a valid lower bound; an
/// upper-only input is rejected.
pub fn thm_lower_a(k: u32, epsilon: &Rational, provider: &mut impl RkProvider) -> Result<BoundValue> {
    check_k(k)?;
    if !epsilon.is_positive() || *epsilon > ratio(1, 12) {
        return Err(Error::invalid(format!("lower bound (a) needs epsilon in (0, 1/12], got {epsilon}")));
    }
    let n = floor_u64(&(rational::one() / (int(12) * epsilon))).ok_or_else(|| Error::invalid("epsilon too small"))?;
    let rec = provider.rk(k, n, Direction::Lower)?;
    if rec.kind == Kind::Upper {
        return Err(Error::invalid(format!("lower bound (a) cannot use an upper bound on r_{k}({n})")));
    }
    let value = to_f64(ln_int(rec.value) / ln_int(12 * n));
    Ok(BoundValue { value, input: RkInput::from(&rec) })
}

/// `½ (log(r_k(M)+1)/log M + 1)` with `M = ⌊1/ε + 1⌋`, for `1/ε > k`.
///
/// Exact or upper inputs only.
pub fn thm_upper_b(k: u32, epsilon: &Rational, provider: &mut impl RkProvider) -> Result<BoundValue> {
    check_k(k)?;
    if !epsilon.is_positive() {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let inv = rational::one() / epsilon;
    if inv <= int(k as i64) {
        return Err(Error::invalid(format!("upper bound (b) needs 1/epsilon > k, got 1/epsilon = {inv}")));
    }
    let m = floor_u64(&(inv + rational::one())).ok_or_else(|| Error::invalid("epsilon too small"))?;
    let rec = provider.rk(k, m, Direction::Upper)?;
    if rec.kind == Kind::Lower {
        return Err(Error::invalid(format!("upper bound (b) cannot use a lower bound on r_{k}({m})")));
    }
    let half = real(0.5);
    let value = half * (ln_int(rec.value + 1) / ln_int(m) + real(1.0));
    Ok(BoundValue { value: to_f64(value), input: RkInput::from(&rec) })
}

fn porosity_exponent(count: u64, k: u32) -> f64 {
    let lc = ln_int(count);
    to_f64(&lc / (&lc - ln_rational(&ratio(k as i64 - 1, k as i64))))
}

/// `log(⌈1/ε⌉+1) / (log(⌈1/ε⌉+1) − log(1−1/k))` for `ε ∈ (0, 1/10)`.
pub fn thm_upper_c(k: u32, epsilon: &Rational) -> Result<f64> {
    check_k(k)?;
    if !epsilon.is_positive() || *epsilon >= ratio(1, 10) {
        return Err(Error::invalid(format!("upper bound (c) needs epsilon in (0, 1/10), got {epsilon}")));
    }
    let m = ceil_u64(&(rational::one() / epsilon)).ok_or_else(|| Error::invalid("epsilon too small"))?;
    Ok(porosity_exponent(m + 1, k))
}

/// Default bisection tolerance for [`solve_moran_exponent`].
pub const MORAN_TOLERANCE: f64 = 1e-12;

/// The `s ∈ [0, 1]` with `Σ (l_i / L)^s = 1`.
pub fn solve_moran_exponent(lengths: &[Rational], total: &Rational) -> Result<f64> {
    solve_moran_exponent_tol(lengths, total, MORAN_TOLERANCE)
}

pub fn solve_moran_exponent_tol(lengths: &[Rational], total: &Rational, tolerance: f64) -> Result<f64> {
    if lengths.is_empty() {
        return Err(Error::invalid("need at least one length"));
    }
    if !total.is_positive() || lengths.iter().any(|l| !l.is_positive()) {
        return Err(Error::invalid("lengths must be positive"));
    }
    let sum: Rational = lengths.iter().sum();
    if sum > *total {
        return Err(Error::invalid(format!("lengths sum to {sum}, more than {total}")));
    }
    if lengths.len() == 1 {
        if lengths[0] == *total {
            return Err(Error::invalid("a single full-length interval solves the equation for every s"));
        }
        return Ok(0.0);
    }
    if sum == *total {
        return Ok(1.0);
    }
    let logs: Vec<f64> = lengths.iter().map(|l| to_f64(ln_rational(&(l / total)))).collect();
    let excess = |s: f64| logs.iter().map(|&lr| (s * lr).exp()).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exponent for `m + 1` equal sub-intervals filling `(1 − 1/k)` of the parent.
pub fn smax_equal_lengths(m: u64, k: u32) -> Result<f64> {
    check_k(k)?;
    if m < 2 {
        return Err(Error::invalid("m must be at least 2"));
    }
    Ok(porosity_exponent(m + 1, k))
}

/// The largest `c` with `upper_c(k, ε) ≤ 1 − c/(k |log ε|)` on the grid,
/// together with the grid point that attains it.
pub fn calibrate_universal_constant(ks: &[u32], epsilons: &[Rational]) -> Result<(f64, u32, Rational)> {
    let mut best: Option<(f64, u32, Rational)> = None;
    for &k in ks {
        for eps in epsilons {
            let uc = thm_upper_c(k, eps)?;
            let c = (1.0 - uc) * k as f64 * -to_f64(ln_rational(eps));
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, k, eps.clone()));
            }
        }
    }
    best.ok_or_else(|| Error::invalid("empty calibration grid"))
}

/// A k-term progression of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerAP {
    pub k: u32,
    pub start: u64,
    pub gap: u64,
}

impl IntegerAP {
    pub fn points(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.k as u64).map(move |i| self.start + i * self.gap)
    }
}

/// Finds a k-term progression with gap at least `lambda` in a dense
/// `A ⊆ {1..λm}`, via the residue class `j + λ·{0..m−1}` holding at least
/// `r_k(m) + 1` elements of `A`.
pub fn gap_ap_witness(a: &[u64], k: u32, lambda: u64, m: u64, rk_m: &RkRecord) -> Result<IntegerAP> {
    check_k(k)?;
    if lambda == 0 {
        return Err(Error::invalid("lambda must be positive"));
    }
    if (k as u64) > m {
        return Err(Error::invalid(format!("need k <= m, got k = {k}, m = {m}")));
    }
    if rk_m.kind != Kind::Exact || rk_m.k != k || rk_m.n != m {
        return Err(Error::invalid(format!("need the exact value of r_{k}({m})")));
    }
    let top = lambda * m;
    if a.windows(2).any(|p| p[0] >= p[1]) || a.first().is_some_and(|&x| x < 1) || a.last().is_some_and(|&x| x > top) {
        return Err(Error::invalid(format!("A must be a strictly increasing subset of [1, {top}]")));
    }
    let need = lambda * (rk_m.value + 1);
    if (a.len() as u64) < need {
        return Err(Error::invalid(format!("|A| = {} is below lambda (r_k(m) + 1) = {need}", a.len())));
    }
    let mut classes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &x in a {
        classes.entry((x - 1) % lambda).or_default().push((x - 1) / lambda);
    }
    let (residue, positions) = classes
        .into_iter()
        .find(|(_, p)| p.len() as u64 > rk_m.value)
        .ok_or_else(|| Error::Inconsistency("pigeonhole found no dense residue class".into()))?;
    let (i0, step) = find_kap(&positions, k).ok_or_else(|| {
        Error::Inconsistency(format!(
            "{} elements in {{1..{m}}} without a {k}-term progression contradicts r_{k}({m}) = {}",
            positions.len(),
            rk_m.value
        ))
    })?;
    Ok(IntegerAP { k, start: residue + 1 + i0 * lambda, gap: step * lambda })
}

/// Children count of one N-adic cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NadicEntry {
    /// The parent has length `N^−level`.
    pub level: u32,
    pub index: u64,
    pub count: u64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadicReport {
    pub m: u64,
    /// `N = m²`.
    pub base: u64,
    /// `m (r_k(m) + 1)`.
    pub threshold: u64,
    pub rk_input: RkInput,
    pub entries: Vec<NadicEntry>,
}

impl NadicReport {
    pub fn flags(&self) -> impl Iterator<Item = &NadicEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

/// Parent levels checked when `E` has no positive-length interval.
pub const NADIC_POINT_DEPTH: u32 = 4;

const NADIC_CELL_BUDGET: u64 = 10_000_000;

/// For every `N`-adic cell (`N = m²`, `1/m < ε ≤ 1/(m−1)`) of length
/// `N^−j` meeting `E`, counts its children of length `N^−j−1` meeting `E`
/// and flags counts of at least `m (r_k(m) + 1)`. Levels go down to the
/// resolution of `E`. Cells are half-open, intervals are read as `[l, r)`
/// and degenerate intervals as points.
pub fn nadic_count_check(e: &IntervalUnion, k: u32, epsilon: &Rational, provider: &mut impl RkProvider) -> Result<NadicReport> {
    check_k(k)?;
    check_open_unit(epsilon)?;
    if e.is_empty() {
        return Err(Error::invalid("empty set"));
    }
    if e.min().unwrap().is_negative() || *e.max().unwrap() > rational::one() {
        return Err(Error::invalid("set must lie in [0, 1]"));
    }
    let m = floor_u64(&(rational::one() / epsilon)).unwrap() + 1;
    let base = m * m;
    let rec = provider.rk(k, m, Direction::Upper)?;
    if rec.kind == Kind::Lower {
        return Err(Error::invalid("threshold needs an exact or upper value of r_k(m)"));
    }
    let threshold = m * (rec.value + 1);

    let shortest = e.intervals().iter().filter(|iv| !iv.is_degenerate()).map(Interval::len).min();
    let mut deepest = match &shortest {
        None => NADIC_POINT_DEPTH,
        Some(len) => {
            let mut j = 0u32;
            while len * BigInt::from(base).pow(j + 1) <= rational::one() && j < 64 {
                j += 1;
            }
            j
        }
    };
    // keep the enumerated child cells bounded
    let total = e.total_length();
    while deepest > 0
        && (&total * BigInt::from(base).pow(deepest + 1)).to_integer().to_u64().is_none_or(|c| c > NADIC_CELL_BUDGET)
    {
        deepest -= 1;
    }

    let mut entries = Vec::new();
    for level in 0..=deepest {
        let children = meeting_cells(e, base, level + 1);
        let mut by_parent: BTreeMap<u64, u64> = BTreeMap::new();
        for c in children {
            *by_parent.entry(c / base).or_default() += 1;
        }
        entries.extend(by_parent.into_iter().map(|(index, count)| NadicEntry {
            level,
            index,
            count,
            flagged: count >= threshold,
        }));
    }
    Ok(NadicReport { m, base, threshold, rk_input: RkInput::from(&rec), entries })
}

fn meeting_cells(e: &IntervalUnion, base: u64, level: u32) -> Vec<u64> {
    let scale = BigInt::from(base).pow(level);
    let top = scale.to_u64().map(|s| s - 1).unwrap_or(u64::MAX);
    let mut out: Vec<u64> = Vec::new();
    for iv in e.intervals() {
        let first = (&iv.left * &scale).floor().to_integer().to_u64().unwrap_or(u64::MAX).min(top);
        let last = if iv.is_degenerate() {
            first
        } else {
            ((&iv.right * &scale).ceil().to_integer() - BigInt::one()).to_u64().unwrap_or(u64::MAX).min(top)
        };
        let start = match out.last() {
            Some(&l) if l >= first => l + 1,
            _ => first,
        };
        out.extend(start..=last);
    }
    out
}

/// All bounds on `d(k, ε)` at one point, with the `r_k` inputs used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: u32,
    #[serde(with = "rational::frac")]
    pub epsilon: Rational,
    pub lower_a: Option<BoundValue>,
    pub upper_b: Option<BoundValue>,
    pub upper_c: Option<f64>,
    pub fsy_lower: Option<f64>,
    pub fsy_upper: Option<f64>,
    /// Best lower bound does not exceed the best upper bound.
    pub consistent: bool,
    /// Both r_k inputs were exact values.
    pub exact_inputs: bool,
}

impl BoundReport {
    pub fn best_lower(&self) -> Option<f64> {
        [self.lower_a.as_ref().map(|b| b.value), self.fsy_lower].into_iter().flatten().reduce(f64::max)
    }

    pub fn best_upper(&self) -> Option<f64> {
        [self.upper_b.as_ref().map(|b| b.value), self.upper_c, self.fsy_upper].into_iter().flatten().reduce(f64::min)
    }

    pub const CSV_HEADER: &'static str =
        "k,epsilon_num,epsilon_den,lower_a,a_provenance,upper_b,b_provenance,upper_c,fsy_lower,fsy_upper";

    pub fn csv_row(&self) -> String {
        let num = |x: Option<f64>| x.map(|v| format!("{v:.12}")).unwrap_or_default();
        let tag = |b: &Option<BoundValue>| b.as_ref().map(|b| b.input.tag()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.epsilon.numer(),
            self.epsilon.denom(),
            num(self.lower_a.as_ref().map(|b| b.value)),
            tag(&self.lower_a),
            num(self.upper_b.as_ref().map(|b| b.value)),
            tag(&self.upper_b),
            num(self.upper_c),
            num(self.fsy_lower),
            num(self.fsy_upper),
        )
    }
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::InvalidArgument(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluates every bound whose hypotheses hold at `(k, ε)`.
pub fn bound_report(k: u32, epsilon: &Rational, provider: &mut impl RkProvider) -> Result<BoundReport> {
    check_k(k)?;
    check_open_unit(epsilon)?;
    let lower_a = optional(thm_lower_a(k, epsilon, provider))?;
    let upper_b = optional(thm_upper_b(k, epsilon, provider))?;
    let upper_c = optional(thm_upper_c(k, epsilon))?;
    let fsy = optional(fsy_bounds(k, epsilon))?;
    let mut report = BoundReport {
        k,
        epsilon: epsilon.clone(),
        exact_inputs: [&lower_a, &upper_b].iter().all(|b| b.as_ref().is_some_and(|b| b.input.kind == Kind::Exact)),
        lower_a,
        upper_b,
        upper_c,
        fsy_lower: fsy.map(|f| f.0),
        fsy_upper: fsy.map(|f| f.1),
        consistent: true,
    };
    report.consistent = match (report.best_lower(), report.best_upper()) {
        (Some(lo), Some(hi)) => lo <= hi,
        _ => true,
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{level_approximation, DigitSet, Provenance};
    use crate::szemeredi::{rk_exact, RkCache, RkOracle, CACHE_SCHEMA_VERSION};
    use std::time::Duration;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn oracle() -> RkOracle {
        RkOracle::new(RkCache::in_memory(), Duration::from_secs(10))
    }

    fn exact(k: u32, n: u64) -> RkRecord {
        rk_exact(k, n, Duration::from_secs(10)).unwrap()
    }

    #[test]
    fn fsy_examples() {
        let (lo, hi) = fsy_bounds(3, &ratio(1, 10)).unwrap();
        assert!(close(lo, 2f64.ln() / 6f64.ln(), 1e-15));
        assert!(close(lo, 0.38685, 5e-6));
        assert!(close(hi, 1.0 + (2.0f64 / 3.0).ln() / 15f64.ln(), 1e-15));
        assert!(close(hi, 0.85027, 5e-6));
        assert!(matches!(fsy_bounds(2, &ratio(1, 10)), Err(Error::InvalidArgument(m)) if m.contains("k - 2 - 4*epsilon")));
        for k in 3..50 {
            assert!(fsy_bounds(k, &ratio(1, 10)).is_ok());
        }
    }

    #[test]
    fn lower_a_examples() {
        let v = thm_lower_a(3, &(ratio(1, 12) - ratio(1, 1_000_000)), &mut oracle()).unwrap();
        assert_eq!((v.input.n, v.value), (1, 0.0));
        let v = thm_lower_a(3, &ratio(1, 24), &mut oracle()).unwrap();
        assert!(close(v.value, 0.21810, 5e-6));
        assert_eq!(v.input.kind, Kind::Exact);
        let v = thm_lower_a(3, &ratio(1, 100), &mut oracle()).unwrap();
        assert!(close(v.value, 4f64.ln() / 96f64.ln(), 1e-15));
        assert!(close(v.value, 0.30372, 5e-6));
        assert!(thm_lower_a(3, &ratio(1, 11), &mut oracle()).is_err());
        // closed endpoint 1/12 is accepted
        assert!(thm_lower_a(3, &ratio(1, 12), &mut oracle()).is_ok());
    }

    #[test]
    fn direction_is_enforced() {
        let mut upper_only = |k: u32, n: u64, _: Direction| {
            Ok(RkRecord {
                k,
                n,
                value: n,
                kind: Kind::Upper,
                witness: None,
                method: Method::Trivial,
                elapsed_ms: 0,
                schema_version: CACHE_SCHEMA_VERSION,
            })
        };
        assert!(thm_lower_a(3, &ratio(1, 24), &mut upper_only).is_err());
        assert!(thm_upper_b(3, &ratio(1, 5), &mut upper_only).is_ok());
        let mut lower_only = |k: u32, n: u64, _: Direction| crate::szemeredi::greedy_lower(k, n);
        assert!(thm_upper_b(3, &ratio(1, 5), &mut lower_only).is_err());
        assert!(thm_lower_a(3, &ratio(1, 24), &mut lower_only).is_ok());
    }

    #[test]
    fn upper_b_examples() {
        let v = thm_upper_b(3, &ratio(1, 4), &mut oracle()).unwrap();
        assert_eq!((v.input.n, v.input.value), (5, 4));
        assert!(close(v.value, 1.0, 1e-15));
        let v = thm_upper_b(3, &ratio(1, 5), &mut oracle()).unwrap();
        assert_eq!((v.input.n, v.input.value), (6, 4));
        assert!(close(v.value, 0.5 * (5f64.ln() / 6f64.ln() + 1.0), 1e-15));
        assert!(close(v.value, 0.94912, 5e-6));
        assert!(matches!(thm_upper_b(3, &ratio(1, 2), &mut oracle()), Err(Error::InvalidArgument(_))));
        assert!(thm_upper_b(3, &ratio(1, 3), &mut oracle()).is_err());
    }

    #[test]
    fn upper_c_examples() {
        let v = thm_upper_c(3, &ratio(1, 20)).unwrap();
        assert!(close(v, 21f64.ln() / (21f64.ln() - (2.0f64 / 3.0).ln()), 1e-15));
        assert!(close(v, 0.88247, 5e-6));
        // ⌈1/0.099⌉ + 1 = 12
        let v = thm_upper_c(3, &ratio(99, 1000)).unwrap();
        assert!(close(v, 12f64.ln() / (12f64.ln() - (2.0f64 / 3.0).ln()), 1e-15));
        assert!(thm_upper_c(3, &ratio(1, 10)).is_err());
        for k in [3, 7, 50] {
            for e in [ratio(1, 11), ratio(1, 1000)] {
                assert!(thm_upper_c(k, &e).unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn moran_examples() {
        let l = ratio(3, 7);
        assert!(close(solve_moran_exponent(&[&l / int(2), &l / int(2)], &l).unwrap(), 1.0, 1e-12));
        assert!(close(solve_moran_exponent(&[ratio(1, 4), ratio(1, 4)], &int(1)).unwrap(), 0.5, 1e-12));
        assert_eq!(solve_moran_exponent(&[ratio(1, 3)], &int(1)).unwrap(), 0.0);
        assert!(solve_moran_exponent(&[int(1)], &int(1)).is_err());
        assert!(solve_moran_exponent(&[ratio(2, 3), ratio(2, 3)], &int(1)).is_err());
        assert!(solve_moran_exponent(&[], &int(1)).is_err());
        assert!(solve_moran_exponent(&[int(0), ratio(1, 2)], &int(1)).is_err());
    }

    #[test]
    fn smax_examples() {
        assert!(close(smax_equal_lengths(10, 3).unwrap(), 0.85536, 5e-6));
        assert!(close(smax_equal_lengths(20, 3).unwrap(), 0.88247, 5e-6));
        assert_eq!(smax_equal_lengths(20, 3).unwrap(), thm_upper_c(3, &ratio(1, 20)).unwrap());
        for (m, k) in [(2u64, 3u32), (10, 3), (37, 8)] {
            let each = ratio(k as i64 - 1, k as i64) / int(m as i64 + 1);
            let lengths = vec![each; m as usize + 1];
            let s = solve_moran_exponent(&lengths, &int(1)).unwrap();
            assert!(close(s, smax_equal_lengths(m, k).unwrap(), 1e-11));
        }
        assert!(smax_equal_lengths(1, 3).is_err());
    }

    #[test]
    fn calibration_is_positive() {
        let eps: Vec<Rational> = (2..=6).map(|p| Rational::new(BigInt::one(), BigInt::from(10).pow(p))).collect();
        let (c, _, _) = calibrate_universal_constant(&[3, 10, 100], &eps).unwrap();
        assert!(c > 0.0);
    }

    #[test]
    fn gap_ap_examples() {
        let w = gap_ap_witness(&[1, 2, 3, 4], 3, 1, 4, &exact(3, 4)).unwrap();
        assert_eq!(w, IntegerAP { k: 3, start: 1, gap: 1 });
        let w = gap_ap_witness(&[1, 2, 3, 4, 5, 6], 3, 2, 3, &exact(3, 3)).unwrap();
        assert_eq!(w, IntegerAP { k: 3, start: 1, gap: 2 });
        assert!(gap_ap_witness(&[1, 2, 3], 3, 1, 4, &exact(3, 4)).is_err());
        assert!(gap_ap_witness(&[1, 2, 3, 4], 3, 1, 3, &exact(3, 3)).is_err());
        assert!(gap_ap_witness(&[1, 2, 3, 9], 3, 1, 4, &exact(3, 4)).is_err());
        assert!(gap_ap_witness(&[1, 2, 3, 4], 3, 1, 4, &crate::szemeredi::greedy_lower(3, 4).unwrap()).is_err());
    }

    #[test]
    fn nadic_examples() {
        let point = IntervalUnion::new(vec![Interval::new(ratio(1, 7), ratio(1, 7))], 0, 0).unwrap();
        let r = nadic_count_check(&point, 3, &ratio(1, 3), &mut oracle()).unwrap();
        assert!(r.entries.iter().all(|e| e.count == 1 && !e.flagged));
        assert_eq!(r.entries.len() as u32, NADIC_POINT_DEPTH + 1);

        // 1/4 < 1/3 <= 1/3 gives m = 4: sixteen children against 4 (r_3(4) + 1)
        let r = nadic_count_check(&IntervalUnion::unit(), 3, &ratio(1, 3), &mut oracle()).unwrap();
        assert_eq!((r.m, r.base, r.threshold), (4, 16, 16));
        assert_eq!(r.entries, vec![NadicEntry { level: 0, index: 0, count: 16, flagged: true }]);

        let ds = DigitSet::from_set(3, 2, &[1, 2], Provenance { kind: Kind::Exact, method: Method::Dfs }).unwrap();
        let e = level_approximation(&ds, 2).unwrap();
        let r = nadic_count_check(&e, 3, &ratio(1, 24), &mut oracle()).unwrap();
        assert_eq!(r.m, 25);
        assert_eq!(r.flags().count(), 0);
        assert!(!r.entries.is_empty());
    }

    #[test]
    fn report_csv() {
        let r = bound_report(3, &ratio(1, 24), &mut oracle()).unwrap();
        assert!(r.consistent && r.exact_inputs);
        let row = r.csv_row();
        assert!(row.starts_with("3,1,24,0.218104"), "{row}");
        assert!(row.contains("exact:dfs"));
        assert_eq!(row.split(',').count(), BoundReport::CSV_HEADER.split(',').count());
        // outside (a)'s range the column is empty
        let r = bound_report(3, &ratio(1, 11), &mut oracle()).unwrap();
        assert!(r.lower_a.is_none());
        assert!(r.csv_row().starts_with("3,1,11,,"));
    }
}
