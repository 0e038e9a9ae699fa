//! Self-similar ε-avoiding sets built from a progression-free digit set.
//!
//! For `A ⊆ {1..N}` without k-term progressions, the maps
//! `x ↦ (x + 6a) / (12N)` for `a ∈ A` have an attractor `E_N` that avoids
//! `1/(12N)`-approximate k-term progressions. Level-ℓ approximations are
//! unions of `|A|^ℓ` closed intervals of length `(12N)^−ℓ` with exact
//! rational endpoints.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, ln_int, real_to_f64, Rational};
use crate::szemeredi::{check_k, contains_kap, Direction, Kind, Method, RkProvider, RkRecord};

/// Default cap on the number of intervals materialised at once.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Where the digits came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: Kind,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitSet {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u64,
    /// Always `12 N`.
    pub base: u64,
    /// Offsets `6a`, sorted.
    pub digits: Vec<u64>,
    #[serde(with = "rational::frac")]
    pub epsilon_n: Rational,
    pub provenance: Provenance,
}

impl DigitSet {
    /// Digit set from an explicit progression-free `A ⊆ {1..N}`.
    pub fn from_set(k: u32, n: u64, set: &[u64], provenance: Provenance) -> Result<Self> {
        check_k(k)?;
        if n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if set.is_empty() {
            return Err(Error::invalid("digit set must be nonempty"));
        }
        if set.iter().any(|&a| a == 0 || a > n) {
            return Err(Error::invalid(format!("digit set must lie in [1, {n}]")));
        }
        if contains_kap(set, k)? {
            return Err(Error::invalid(format!("digit set contains a {k}-term progression")));
        }
        Ok(DigitSet {
            k,
            n,
            base: 12 * n,
            digits: set.iter().map(|a| 6 * a).collect(),
            epsilon_n: Rational::new(BigInt::one(), BigInt::from(12 * n)),
            provenance,
        })
    }

    /// The set `A` with `digits = 6A`.
    pub fn a_set(&self) -> Vec<u64> {
        self.digits.iter().map(|d| d / 6).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.base != 12 * self.n || self.digits.iter().any(|d| d % 6 != 0) {
            return Err(Error::invalid("digits must be multiples of 6 in base 12N"));
        }
        DigitSet::from_set(self.k, self.n, &self.a_set(), self.provenance.clone()).map(|_| ())
    }
}

/// `N = ⌊1/(12ε)⌋` with the digits taken from the provider's best
/// progression-free witness for `(k, N)`.
pub fn build_digit_set(k: u32, epsilon: &Rational, provider: &mut impl RkProvider) -> Result<DigitSet> {
    check_k(k)?;
    let twelfth = rational::ratio(1, 12);
    if !epsilon.is_positive() || *epsilon > twelfth {
        return Err(Error::invalid(format!("epsilon = {epsilon} must lie in (0, 1/12]")));
    }
    let n = rational::floor_u64(&(rational::one() / (rational::int(12) * epsilon)))
        .ok_or_else(|| Error::invalid("epsilon too small: 1/(12 epsilon) overflows"))?;
    let rec: RkRecord = provider.rk(k, n, Direction::Lower)?;
    let witness = match (rec.kind, rec.witness) {
        (Kind::Exact | Kind::Lower, Some(w)) => w,
        _ => return Err(Error::invalid(format!("provider returned no witness for r_{k}({n})"))),
    };
    DigitSet::from_set(k, n, &witness, Provenance { kind: rec.kind, method: rec.method })
}

/// Closed interval with exact endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    pub left: Rational,
    pub right: Rational,
}

impl Interval {
    pub fn new(left: Rational, right: Rational) -> Self {
        Interval { left, right }
    }

    pub fn len(&self) -> Rational {
        &self.right - &self.left
    }

    pub fn is_degenerate(&self) -> bool {
        self.left == self.right
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.left <= other.left && other.right <= self.right
    }
}

/// Sorted, pairwise disjoint closed intervals inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
    /// Construction depth; informational.
    pub level: u32,
    /// Construction base; informational (0 when not from a digit set).
    pub base: u64,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<Interval>, level: u32, base: u64) -> Result<Self> {
        for iv in &intervals {
            if iv.left > iv.right {
                return Err(Error::invalid(format!("interval [{}, {}] has left > right", iv.left, iv.right)));
            }
            if iv.left.is_negative() || iv.right > rational::one() {
                return Err(Error::invalid(format!("interval [{}, {}] leaves [0, 1]", iv.left, iv.right)));
            }
        }
        if intervals.windows(2).any(|p| p[0].right >= p[1].left) {
            return Err(Error::invalid("intervals must be sorted and pairwise disjoint"));
        }
        Ok(IntervalUnion { intervals, level, base })
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn from_unsorted(mut intervals: Vec<Interval>) -> Result<Self> {
        intervals.sort_by(|a, b| a.left.cmp(&b.left));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.left <= last.right => {
                    if iv.right > last.right {
                        last.right = iv.right;
                    }
                }
                _ => merged.push(iv),
            }
        }
        IntervalUnion::new(merged, 0, 0)
    }

    pub fn unit() -> Self {
        IntervalUnion::new(vec![Interval::new(rational::zero(), rational::one())], 0, 0).unwrap()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn min(&self) -> Option<&Rational> {
        self.intervals.first().map(|iv| &iv.left)
    }

    pub fn max(&self) -> Option<&Rational> {
        self.intervals.last().map(|iv| &iv.right)
    }

    pub fn total_length(&self) -> Rational {
        self.intervals.iter().map(Interval::len).sum()
    }

    /// Every interval of `self` lies inside some interval of `outer`.
    pub fn is_contained_in(&self, outer: &IntervalUnion) -> bool {
        let mut j = 0;
        for iv in &self.intervals {
            while j < outer.intervals.len() && outer.intervals[j].right < iv.left {
                j += 1;
            }
            if j == outer.intervals.len() || !outer.intervals[j].contains(iv) {
                return false;
            }
        }
        true
    }

    /// Exact distance from `x` to the union.
    pub fn distance(&self, x: &Rational) -> Rational {
        let idx = self.intervals.partition_point(|iv| iv.right < *x);
        let mut best: Option<Rational> = None;
        if let Some(iv) = self.intervals.get(idx) {
            if iv.left <= *x {
                return rational::zero();
            }
            best = Some(&iv.left - x);
        }
        if idx > 0 {
            let d = x - &self.intervals[idx - 1].right;
            best = Some(match best {
                Some(b) if b < d => b,
                _ => d,
            });
        }
        best.expect("distance to an empty union")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&IntervalUnionRepr::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: IntervalUnionRepr = serde_json::from_str(text)?;
        repr.try_into()
    }

    /// CSV with header `left_num,left_den,right_num,right_den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("left_num,left_den,right_num,right_den\n");
        for iv in &self.intervals {
            out.push_str(&format!("{},{},{},{}\n", iv.left.numer(), iv.left.denom(), iv.right.numer(), iv.right.denom()));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    left_num: String,
    left_den: String,
    right_num: String,
    right_den: String,
}

#[derive(Serialize, Deserialize)]
struct IntervalUnionRepr {
    level: u32,
    base: u64,
    intervals: Vec<IntervalRepr>,
}

impl From<&IntervalUnion> for IntervalUnionRepr {
    fn from(iu: &IntervalUnion) -> Self {
        let intervals = iu
            .intervals
            .iter()
            .map(|iv| {
                let (left_num, left_den) = rational::num_den_strings(&iv.left);
                let (right_num, right_den) = rational::num_den_strings(&iv.right);
                IntervalRepr { left_num, left_den, right_num, right_den }
            })
            .collect();
        IntervalUnionRepr { level: iu.level, base: iu.base, intervals }
    }
}

impl TryFrom<IntervalUnionRepr> for IntervalUnion {
    type Error = Error;

    fn try_from(r: IntervalUnionRepr) -> Result<Self> {
        let intervals = r
            .intervals
            .iter()
            .map(|iv| {
                Ok(Interval::new(
                    rational::from_num_den_strings(&iv.left_num, &iv.left_den)?,
                    rational::from_num_den_strings(&iv.right_num, &iv.right_den)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        IntervalUnion::new(intervals, r.level, r.base)
    }
}

fn check_size(ds: &DigitSet, level: u32, cap: usize, what: &str) -> Result<()> {
    let requested = (ds.digits.len() as u128).checked_pow(level).unwrap_or(u128::MAX);
    if requested > cap as u128 {
        return Err(Error::ResourceLimit { what: format!("{what} at level {level}"), requested, cap });
    }
    Ok(())
}

fn union_from_numerators(numerators: Vec<BigInt>, base: u64, level: u32) -> IntervalUnion {
    let den = BigInt::from(base).pow(level);
    let intervals = numerators
        .into_iter()
        .map(|z| {
            let right = Rational::new(&z + 1, den.clone());
            Interval::new(Rational::new(z, den.clone()), right)
        })
        .collect();
    IntervalUnion { intervals, level, base }
}

pub fn level_approximation(ds: &DigitSet, level: u32) -> Result<IntervalUnion> {
    level_approximation_capped(ds, level, DEFAULT_SIZE_CAP)
}

/// Union of the construction intervals `f_{i1}∘…∘f_{iℓ}([0,1])`.
pub fn level_approximation_capped(ds: &DigitSet, level: u32, cap: usize) -> Result<IntervalUnion> {
    check_size(ds, level, cap, "level approximation")?;
    if level == 0 {
        let mut unit = IntervalUnion::unit();
        unit.base = ds.base;
        return Ok(unit);
    }
    let base = BigInt::from(ds.base);
    let base = &base;
    let mut numerators = vec![BigInt::zero()];
    for _ in 0..level {
        numerators = numerators
            .iter()
            .flat_map(|z| ds.digits.iter().map(move |&d| z * base + d))
            .collect();
    }
    Ok(union_from_numerators(numerators, ds.base, level))
}

pub fn similarity_dimension(ds: &DigitSet) -> f64 {
    real_to_f64(&(ln_int(ds.digits.len() as u64) / ln_int(ds.base)))
}

/// A seeded random rotation of every construction block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomRealization {
    pub digitset: DigitSet,
    pub level: u32,
    pub seed: u64,
    /// Address (indices into the sorted `A`, root = empty word) → `X_I`.
    pub rotations: BTreeMap<Vec<u32>, u64>,
}

impl RandomRealization {
    /// `B = {(6a + x) mod 12N : a ∈ A}`, sorted.
    pub fn block(&self, rotation: u64) -> Vec<u64> {
        realized_block(&self.digitset, rotation)
    }
}

pub fn realized_block(ds: &DigitSet, rotation: u64) -> Vec<u64> {
    let mut b: Vec<u64> = ds.digits.iter().map(|d| (d + rotation) % ds.base).collect();
    b.sort_unstable();
    b
}

pub fn random_realization(ds: &DigitSet, level: u32, seed: u64) -> Result<(RandomRealization, IntervalUnion)> {
    random_realization_capped(ds, level, seed, DEFAULT_SIZE_CAP)
}

/// Randomly rotated construction.
///
/// Rotations are drawn breadth first: level by level, and within a level
/// in increasing address order, one `gen_range(0..12N)` per interval from
/// `ChaCha8Rng::seed_from_u64(seed)`. Hence the level-ℓ realization for a
/// seed refines the level-(ℓ−1) realization for the same seed.
pub fn random_realization_capped(
    ds: &DigitSet,
    level: u32,
    seed: u64,
    cap: usize,
) -> Result<(RandomRealization, IntervalUnion)> {
    check_size(ds, level, cap, "random realization")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = BigInt::from(ds.base);
    let a_len = ds.digits.len() as u32;
    let mut rotations = BTreeMap::new();
    let mut frontier: Vec<(Vec<u32>, BigInt)> = vec![(Vec::new(), BigInt::zero())];
    for _ in 0..level {
        let mut next = Vec::with_capacity(frontier.len() * a_len as usize);
        for (addr, z) in frontier {
            let x: u64 = rng.gen_range(0..ds.base);
            for (idx, d) in ds.digits.iter().enumerate() {
                let b = (d + x) % ds.base;
                let mut child = addr.clone();
                child.push(idx as u32);
                next.push((child, &z * &base + b));
            }
            rotations.insert(addr, x);
        }
        frontier = next;
    }
    let mut numerators: Vec<BigInt> = frontier.into_iter().map(|(_, z)| z).collect();
    numerators.sort();
    let union = if level == 0 {
        let mut unit = IntervalUnion::unit();
        unit.base = ds.base;
        unit
    } else {
        union_from_numerators(numerators, ds.base, level)
    };
    let realization = RandomRealization { digitset: ds.clone(), level, seed, rotations };
    Ok((realization, union))
}

/// Number of `base`-adic cells `[i/M, (i+1)/M)`, `M = base^level`, met by
/// the union; each interval is treated as `[l, r)` (a point when `l = r`).
pub fn adic_cell_count(iu: &IntervalUnion, base: u64, level: u32) -> BigInt {
    let m = BigInt::from(base).pow(level);
    let top: BigInt = &m - 1;
    let mut total = BigInt::zero();
    let mut last: Option<BigInt> = None;
    for iv in iu.intervals() {
        let scaled_left = &iv.left * &m;
        let scaled_right = &iv.right * &m;
        let first = scaled_left.floor().to_integer().min(top.clone());
        let end = if iv.is_degenerate() { first.clone() } else { (scaled_right.ceil().to_integer() - BigInt::one()).min(top.clone()) };
        let start = match &last {
            Some(l) if *l >= first => l + 1,
            _ => first,
        };
        if end >= start {
            total += &end - &start + 1;
            last = Some(end);
        }
    }
    total
}

/// Least-squares slope of `log_base(cell count)` against level `1..=max_level`.
pub fn box_dimension_estimate(iu: &IntervalUnion, base: u64, max_level: u32) -> Result<f64> {
    if iu.is_empty() {
        return Err(Error::invalid("box dimension of an empty union"));
    }
    if base < 2 {
        return Err(Error::invalid("base must be at least 2"));
    }
    if max_level < 2 {
        return Err(Error::invalid("need at least two levels for a slope"));
    }
    if iu.base == base && iu.level > 0 && max_level > iu.level {
        return Err(Error::invalid(format!(
            "max_level {max_level} is finer than the union's resolution (level {} in base {base})",
            iu.level
        )));
    }
    let ln_base = real_to_f64(&ln_int(base));
    let points: Vec<(f64, f64)> = (1..=max_level)
        .map(|l| {
            let count = adic_cell_count(iu, base, l);
            (l as f64, big_ln(&count) / ln_base)
        })
        .collect();
    Ok(least_squares_slope(&points))
}

fn big_ln(x: &BigInt) -> f64 {
    real_to_f64(&rational::ln_rational(&Rational::from_integer(x.clone())))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Leftmost endpoint as `f64` for reporting.
pub fn approx_endpoints(iu: &IntervalUnion) -> Vec<(f64, f64)> {
    iu.intervals().iter().map(|iv| (rational::to_f64(&iv.left), rational::to_f64(&iv.right))).collect()
}
