//! Certified decision of ε-avoidance for finite interval unions.
//!
//! A set `E` ε-avoids k-term progressions when every progression
//! `a, a+λ, …, a+(k−1)λ` has a point at distance at least `ελ` from `E`.
//! For a window of gaps this is decided by branch-and-bound over the
//! `(a, λ)` parameter box: boxes are discharged with a Lipschitz lower
//! bound and candidate violations are confirmed in exact arithmetic.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{level_approximation, DigitSet, IntervalUnion};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::szemeredi::check_k;

/// Default number of subdivisions along any branch.
pub const DEFAULT_DEPTH_CAP: u32 = 64;

/// Surviving boxes kept in an undecided error.
const SURVIVOR_SAMPLE: usize = 64;

/// The window is first split this many times so that subtrees can run in
/// parallel; the verdict does not depend on the thread count.
const ROOT_SPLITS: u32 = 4;

// Relative slack absorbing f64 rounding in the box bounds.
const FLOAT_SLACK: f64 = 1e-12;

/// The progression `start + i·gap`, `i = 0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct APQuery {
    pub k: u32,
    pub start: Rational,
    pub gap: Rational,
}

impl APQuery {
    pub fn new(k: u32, start: Rational, gap: Rational) -> Result<Self> {
        check_k(k)?;
        if !gap.is_positive() {
            return Err(Error::invalid("progression gap must be positive"));
        }
        Ok(APQuery { k, start, gap })
    }

    pub fn points(&self) -> impl Iterator<Item = Rational> + '_ {
        (0..self.k).map(move |i| &self.start + &self.gap * BigInt::from(i))
    }
}

/// `[a_lo, a_hi] × [gap_lo, gap_hi]` with `gap_lo > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBox {
    #[serde(with = "rational::frac")]
    pub a_lo: Rational,
    #[serde(with = "rational::frac")]
    pub a_hi: Rational,
    #[serde(with = "rational::frac")]
    pub gap_lo: Rational,
    #[serde(with = "rational::frac")]
    pub gap_hi: Rational,
}

impl ParamBox {
    pub fn new(a_lo: Rational, a_hi: Rational, gap_lo: Rational, gap_hi: Rational) -> Result<Self> {
        if a_lo > a_hi {
            return Err(Error::invalid("box start interval is reversed"));
        }
        if !gap_lo.is_positive() || gap_lo > gap_hi {
            return Err(Error::invalid("box gap interval must satisfy 0 < gap_lo <= gap_hi"));
        }
        Ok(ParamBox { a_lo, a_hi, gap_lo, gap_hi })
    }

    /// Gap window with a start interval to be filled in by the verifier.
    pub fn gaps(gap_lo: Rational, gap_hi: Rational) -> Result<Self> {
        ParamBox::new(rational::zero(), rational::zero(), gap_lo, gap_hi)
    }

    /// Image under `x ↦ r·x + u` (starts move, gaps scale).
    pub fn affine(&self, r: &Rational, u: &Rational) -> Self {
        ParamBox {
            a_lo: r * &self.a_lo + u,
            a_hi: r * &self.a_hi + u,
            gap_lo: r * &self.gap_lo,
            gap_hi: r * &self.gap_hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    CertifiedAvoiding,
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub window: ParamBox,
    pub witness: Option<APQuery>,
    /// `ap_distance_ratio` of the witness; always `< ε`.
    pub ratio: Option<Rational>,
    pub boxes_explored: u64,
}

#[derive(Serialize, Deserialize)]
struct WitnessRepr {
    k: u32,
    a_num: String,
    a_den: String,
    gap_num: String,
    gap_den: String,
}

#[derive(Serialize, Deserialize)]
struct VerdictRepr {
    outcome: Outcome,
    window: ParamBox,
    witness: Option<WitnessRepr>,
    ratio_num: Option<String>,
    ratio_den: Option<String>,
    boxes_explored: u64,
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let witness = self.witness.as_ref().map(|w| {
            let (a_num, a_den) = rational::num_den_strings(&w.start);
            let (gap_num, gap_den) = rational::num_den_strings(&w.gap);
            WitnessRepr { k: w.k, a_num, a_den, gap_num, gap_den }
        });
        let ratio = self.ratio.as_ref().map(rational::num_den_strings);
        VerdictRepr {
            outcome: self.outcome,
            window: self.window.clone(),
            witness,
            ratio_num: ratio.as_ref().map(|r| r.0.clone()),
            ratio_den: ratio.map(|r| r.1),
            boxes_explored: self.boxes_explored,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = VerdictRepr::deserialize(d)?;
        let witness = r
            .witness
            .map(|w| -> Result<APQuery> {
                APQuery::new(
                    w.k,
                    rational::from_num_den_strings(&w.a_num, &w.a_den)?,
                    rational::from_num_den_strings(&w.gap_num, &w.gap_den)?,
                )
            })
            .transpose()
            .map_err(D::Error::custom)?;
        let ratio = match (r.ratio_num, r.ratio_den) {
            (Some(n), Some(dn)) => Some(rational::from_num_den_strings(&n, &dn).map_err(D::Error::custom)?),
            (None, None) => None,
            _ => return Err(D::Error::custom("ratio_num and ratio_den must appear together")),
        };
        Ok(Verdict { outcome: r.outcome, window: r.window, witness, ratio, boxes_explored: r.boxes_explored })
    }
}

/// `max_i dist(a + iλ, E) / λ`, exactly.
pub fn ap_distance_ratio(e: &IntervalUnion, q: &APQuery) -> Result<Rational> {
    if e.is_empty() {
        return Err(Error::invalid("distance to an empty set"));
    }
    let worst = q.points().map(|p| e.distance(&p)).max().unwrap();
    Ok(worst / &q.gap)
}

/// Float image of `E` for the bounding phase.
struct FloatSet {
    lefts: Vec<f64>,
    rights: Vec<f64>,
}

impl FloatSet {
    fn new(e: &IntervalUnion) -> Self {
        FloatSet {
            lefts: e.intervals().iter().map(|iv| rational::to_f64(&iv.left)).collect(),
            rights: e.intervals().iter().map(|iv| rational::to_f64(&iv.right)).collect(),
        }
    }

    #[inline]
    fn distance(&self, x: f64) -> f64 {
        let idx = self.rights.partition_point(|&r| r < x);
        let mut best = f64::INFINITY;
        if idx < self.lefts.len() {
            if self.lefts[idx] <= x {
                return 0.0;
            }
            best = self.lefts[idx] - x;
        }
        if idx > 0 {
            best = best.min(x - self.rights[idx - 1]);
        }
        best
    }
}

/// A sub-box addressed by dyadic indices within the window.
#[derive(Debug, Clone, Copy)]
struct Cell {
    a_index: u64,
    a_depth: u32,
    g_index: u64,
    g_depth: u32,
}

impl Cell {
    fn depth(&self) -> u32 {
        self.a_depth + self.g_depth
    }
}

struct Search<'a> {
    exact_set: &'a IntervalUnion,
    set: FloatSet,
    k: u32,
    epsilon: &'a Rational,
    epsilon_f: f64,
    window: &'a ParamBox,
    a_lo: f64,
    a_width: f64,
    g_lo: f64,
    g_width: f64,
    slack: f64,
    depth_cap: u32,
}

#[derive(Default)]
struct SubtreeResult {
    explored: u64,
    counterexample: Option<(APQuery, Rational)>,
    survivors: Vec<Cell>,
    survivors_total: u64,
}

enum Status {
    Discharged,
    Violated(APQuery, Rational),
    Open,
}

impl Search<'_> {
    fn evaluate(&self, c: &Cell) -> Status {
        let a_step = self.a_width / (1u128 << c.a_depth) as f64;
        let g_step = self.g_width / (1u128 << c.g_depth) as f64;
        let a_mid = self.a_lo + (c.a_index as f64 + 0.5) * a_step;
        let g_mid = self.g_lo + (c.g_index as f64 + 0.5) * g_step;
        let g_top = self.g_lo + (c.g_index + 1) as f64 * g_step;
        let worst = (0..self.k).map(|i| self.set.distance(a_mid + i as f64 * g_mid)).fold(0.0, f64::max);
        let radius = 0.5 * a_step + 0.5 * (self.k - 1) as f64 * g_step;
        if worst - radius - self.slack > self.epsilon_f * g_top + self.slack {
            return Status::Discharged;
        }
        if worst <= self.epsilon_f * g_mid + self.slack {
            let q = self.exact_center(c);
            let ratio = ap_distance_ratio(self.exact_set, &q).expect("nonempty set");
            if ratio < *self.epsilon {
                return Status::Violated(q, ratio);
            }
        }
        Status::Open
    }

    fn exact_center(&self, c: &Cell) -> APQuery {
        let w = self.window;
        let a = &w.a_lo + (&w.a_hi - &w.a_lo) * Rational::new(BigInt::from(2 * c.a_index + 1), BigInt::from(2) << c.a_depth);
        let g = &w.gap_lo
            + (&w.gap_hi - &w.gap_lo) * Rational::new(BigInt::from(2 * c.g_index + 1), BigInt::from(2) << c.g_depth);
        APQuery { k: self.k, start: a, gap: g }
    }

    fn exact_box(&self, c: &Cell) -> ParamBox {
        let w = self.window;
        let a_den = BigInt::from(1) << c.a_depth;
        let g_den = BigInt::from(1) << c.g_depth;
        let aw = &w.a_hi - &w.a_lo;
        let gw = &w.gap_hi - &w.gap_lo;
        ParamBox {
            a_lo: &w.a_lo + &aw * Rational::new(BigInt::from(c.a_index), a_den.clone()),
            a_hi: &w.a_lo + &aw * Rational::new(BigInt::from(c.a_index + 1), a_den),
            gap_lo: &w.gap_lo + &gw * Rational::new(BigInt::from(c.g_index), g_den.clone()),
            gap_hi: &w.gap_lo + &gw * Rational::new(BigInt::from(c.g_index + 1), g_den),
        }
    }

    /// Splits along the dimension contributing more to the Lipschitz
    /// radius: start width vs `(k−1)·` gap width. Lower half first.
    fn split(&self, c: &Cell) -> [Cell; 2] {
        let a_span = self.a_width / (1u128 << c.a_depth) as f64;
        let g_span = (self.k - 1) as f64 * self.g_width / (1u128 << c.g_depth) as f64;
        if (a_span >= g_span && c.a_depth < 62) || c.g_depth >= 62 {
            let lo = Cell { a_index: 2 * c.a_index, a_depth: c.a_depth + 1, ..*c };
            [lo, Cell { a_index: lo.a_index + 1, ..lo }]
        } else {
            let lo = Cell { g_index: 2 * c.g_index, g_depth: c.g_depth + 1, ..*c };
            [lo, Cell { g_index: lo.g_index + 1, ..lo }]
        }
    }

    fn explore(&self, root: Cell) -> SubtreeResult {
        let mut out = SubtreeResult::default();
        let mut stack = vec![root];
        while let Some(cell) = stack.pop() {
            out.explored += 1;
            match self.evaluate(&cell) {
                Status::Discharged => {}
                Status::Violated(q, ratio) => {
                    out.counterexample = Some((q, ratio));
                    return out;
                }
                Status::Open if cell.depth() >= self.depth_cap => {
                    out.survivors_total += 1;
                    if out.survivors.len() < SURVIVOR_SAMPLE {
                        out.survivors.push(cell);
                    }
                }
                Status::Open => {
                    let [lo, hi] = self.split(&cell);
                    stack.push(hi);
                    stack.push(lo);
                }
            }
        }
        out
    }
}

/// Decides whether `e` ε-avoids k-term progressions for all gaps in
/// `window`. Ratios exactly equal to ε count as avoiding.
///
/// The start interval is widened to cover `[min E − ε·gap_hi, max E]`;
/// progressions starting outside it are avoided trivially. Returns
/// [`Error::Undecided`] when boxes survive the depth cap and no violation
/// was confirmed.
pub fn certify_avoidance(
    e: &IntervalUnion,
    k: u32,
    epsilon: &Rational,
    window: &ParamBox,
    depth_cap: u32,
) -> Result<Verdict> {
    check_k(k)?;
    if e.is_empty() {
        return Err(Error::invalid("cannot verify an empty set"));
    }
    if !epsilon.is_positive() {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if depth_cap < 1 || depth_cap > 120 {
        return Err(Error::invalid("depth cap must lie in [1, 120]"));
    }
    let mut window = ParamBox::new(window.a_lo.clone(), window.a_hi.clone(), window.gap_lo.clone(), window.gap_hi.clone())?;
    let need_lo = e.min().unwrap() - epsilon * &window.gap_hi;
    let need_hi = e.max().unwrap().clone();
    if window.a_lo == window.a_hi && window.a_lo.is_zero() {
        window.a_lo = need_lo;
        window.a_hi = need_hi;
    } else {
        window.a_lo = window.a_lo.clone().min(need_lo);
        window.a_hi = window.a_hi.clone().max(need_hi);
    }

    let a_lo = rational::to_f64(&window.a_lo);
    let a_hi = rational::to_f64(&window.a_hi);
    let g_lo = rational::to_f64(&window.gap_lo);
    let g_hi = rational::to_f64(&window.gap_hi);
    let extent = [a_lo.abs(), a_hi.abs() + (k - 1) as f64 * g_hi, rational::to_f64(e.max().unwrap()).abs()]
        .into_iter()
        .fold(rational::to_f64(e.min().unwrap()).abs(), f64::max);
    let search = Search {
        exact_set: e,
        set: FloatSet::new(e),
        k,
        epsilon,
        epsilon_f: rational::to_f64(epsilon),
        window: &window,
        a_lo,
        a_width: a_hi - a_lo,
        g_lo,
        g_width: g_hi - g_lo,
        slack: FLOAT_SLACK * extent,
        depth_cap,
    };

    let root_depth = ROOT_SPLITS.min(depth_cap);
    let mut roots = vec![Cell { a_index: 0, a_depth: 0, g_index: 0, g_depth: 0 }];
    for _ in 0..root_depth {
        roots = roots.iter().flat_map(|c| search.split(c)).collect();
    }
    let results: Vec<SubtreeResult> = roots.par_iter().map(|&c| search.explore(c)).collect();

    let boxes_explored = results.iter().map(|r| r.explored).sum::<u64>() + (1u64 << root_depth) - 1;
    if let Some((q, ratio)) = results.iter().find_map(|r| r.counterexample.clone()) {
        return Ok(Verdict {
            outcome: Outcome::Counterexample,
            window,
            witness: Some(q),
            ratio: Some(ratio),
            boxes_explored,
        });
    }
    let surviving_total: u64 = results.iter().map(|r| r.survivors_total).sum();
    if surviving_total > 0 {
        let surviving =
            results.iter().flat_map(|r| r.survivors.iter()).take(SURVIVOR_SAMPLE).map(|c| search.exact_box(c)).collect();
        return Err(Error::Undecided { surviving, surviving_total, boxes_explored });
    }
    Ok(Verdict { outcome: Outcome::CertifiedAvoiding, window, witness: None, ratio: None, boxes_explored })
}

/// The geometric gap windows `[Λ_j/(12N), Λ_j]`, `Λ_j = (12N)^−j / (k − 1 − 2ε_N)`.
pub fn construction_windows(ds: &DigitSet, windows: u32) -> Vec<ParamBox> {
    let base = Rational::from_integer(BigInt::from(ds.base));
    let top = rational::one() / (rational::int(ds.k as i64 - 1) - rational::int(2) * &ds.epsilon_n);
    let mut out = Vec::with_capacity(windows as usize);
    let mut hi = top;
    for _ in 0..windows {
        let lo = &hi / &base;
        out.push(ParamBox::gaps(lo.clone(), hi).expect("positive gaps"));
        hi = lo;
    }
    out
}

/// Certifies the level-`level` approximation of the attractor over
/// `windows` nested gap windows. Because the attractor lies inside every
/// level approximation, each certificate carries over to it.
pub fn verify_construction(ds: &DigitSet, epsilon: &Rational, level: u32, windows: u32) -> Result<Vec<Verdict>> {
    verify_construction_with(ds, epsilon, level, windows, DEFAULT_DEPTH_CAP)
}

pub fn verify_construction_with(
    ds: &DigitSet,
    epsilon: &Rational,
    level: u32,
    windows: u32,
    depth_cap: u32,
) -> Result<Vec<Verdict>> {
    if windows == 0 {
        return Err(Error::invalid("need at least one gap window"));
    }
    if !epsilon.is_positive() {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let boxes = construction_windows(ds, windows);
    let smallest = &boxes.last().unwrap().gap_lo;
    let resolution = Rational::new(BigInt::from(1), BigInt::from(ds.base).pow(level));
    if resolution * rational::int(4) > epsilon * smallest {
        return Err(Error::invalid(format!(
            "level {level} too coarse: (12N)^-level must be at most epsilon * {smallest} / 4"
        )));
    }
    let e = level_approximation(ds, level)?;
    boxes.iter().map(|w| certify_avoidance(&e, ds.k, epsilon, w, depth_cap)).collect()
}
