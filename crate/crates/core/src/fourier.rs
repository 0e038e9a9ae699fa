//! Fourier transforms of uniform measures on interval unions, with band
//! maxima and decay-exponent fits. Purely empirical: a finite level of a
//! construction says nothing rigorous about the limit measure, so every
//! fit is tied to the level it was computed at.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::construction::{least_squares_slope, level_approximation, random_realization, DigitSet, IntervalUnion};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Precomputed centers and weights of a measure for fast evaluation.
#[derive(Debug, Clone)]
pub struct UniformMeasure {
    centers: Vec<f64>,
    half_widths: Vec<f64>,
    weights: Vec<f64>,
}

impl UniformMeasure {
    /// Normalised Lebesgue measure on `e`; equal point masses when `e` has
    /// zero total length.
    pub fn new(e: &IntervalUnion) -> Result<Self> {
        if e.is_empty() {
            return Err(Error::invalid("measure on an empty set"));
        }
        let total = e.total_length();
        let atoms = total == rational::zero();
        let mut m = UniformMeasure { centers: Vec::new(), half_widths: Vec::new(), weights: Vec::new() };
        for iv in e.intervals() {
            let weight = if atoms {
                1.0 / e.len() as f64
            } else {
                rational::to_f64(&(iv.len() / &total))
            };
            if weight == 0.0 {
                continue;
            }
            let center: Rational = (&iv.left + &iv.right) / rational::int(2);
            m.centers.push(rational::to_f64(&center));
            m.half_widths.push(rational::to_f64(&iv.len()) / 2.0);
            m.weights.push(weight);
        }
        Ok(m)
    }

    /// `∫ e^{−2πiξx} dμ(x)`.
    pub fn transform(&self, xi: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&c, &h), &w) in self.centers.iter().zip(&self.half_widths).zip(&self.weights) {
            let t = xi * c;
            let phase = -2.0 * std::f64::consts::PI * (t - t.round());
            acc += Complex64::from_polar(w * sinc(2.0 * std::f64::consts::PI * xi * h), phase);
        }
        acc
    }
}

// sin(x)/x, with the half-width folded in by the caller: ∫ over [c−h, c+h]
// of e^{−2πiξx} dx / 2h = e^{−2πiξc} sin(2πξh) / (2πξh).
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn measure_transform(e: &IntervalUnion, xi: f64) -> Result<Complex64> {
    Ok(UniformMeasure::new(e)?.transform(xi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub max_modulus: f64,
    pub argmax_xi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub bands: Vec<Band>,
    /// `(ξ, |μ̂(ξ)|)` at the forced frequencies `base^j`.
    pub forced: Vec<(f64, f64)>,
    pub descriptor: String,
}

impl DecayProfile {
    pub const CSV_HEADER: &'static str = "band_lo,band_hi,max_modulus,argmax_xi";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for b in &self.bands {
            out.push_str(&format!("{},{},{:.12e},{}\n", b.lo, b.hi, b.max_modulus, b.argmax_xi));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub xi_max: f64,
    pub bands: usize,
    pub samples_per_band: usize,
    pub seed: u64,
    /// Sample every `base^j` in range (digit-set measures in base `base`).
    pub forced_base: Option<u64>,
}

/// Maximum of `|μ̂|` over each of `bands` geometric bands splitting
/// `[1, xi_max]`, from the band endpoints plus a seeded Weyl sequence in
/// log-frequency.
pub fn decay_profile(e: &IntervalUnion, spec: &ProfileSpec, descriptor: &str) -> Result<DecayProfile> {
    if !(spec.xi_max > 2.0) {
        return Err(Error::invalid("xi_max must exceed 2"));
    }
    if spec.bands < 3 {
        return Err(Error::invalid("need at least 3 bands"));
    }
    let measure = UniformMeasure::new(e)?;
    let edges: Vec<f64> = (0..=spec.bands).map(|i| spec.xi_max.powf(i as f64 / spec.bands as f64)).collect();
    let mut forced_xi: Vec<f64> = Vec::new();
    if let Some(base) = spec.forced_base.filter(|&b| b >= 2) {
        let mut x = base as f64;
        while x <= spec.xi_max {
            forced_xi.push(x);
            x *= base as f64;
        }
    }
    // golden-ratio Weyl sequence, offset by the seed
    const ALPHA: f64 = 0.618_033_988_749_894_9;
    let offset = (splitmix64(spec.seed) >> 11) as f64 / (1u64 << 53) as f64;
    let mut bands = Vec::with_capacity(spec.bands);
    for (i, w) in edges.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let ratio = hi / lo;
        let mut xs: Vec<f64> = vec![lo, hi];
        xs.extend((0..spec.samples_per_band).map(|j| {
            let u = (offset + ((i * spec.samples_per_band + j) as f64) * ALPHA).fract();
            lo * ratio.powf(u)
        }));
        let last = i + 1 == spec.bands;
        xs.extend(forced_xi.iter().copied().filter(|&x| x >= lo && (x < hi || last)));
        let (max_modulus, argmax_xi) = xs
            .iter()
            .map(|&x| (measure.transform(x).norm(), x))
            .fold((f64::NEG_INFINITY, lo), |best, cur| if cur.0 > best.0 { cur } else { best });
        bands.push(Band { lo, hi, max_modulus: max_modulus.min(1.0), argmax_xi, samples: xs.len() });
    }
    let forced = forced_xi.iter().map(|&x| (x, measure.transform(x).norm())).collect();
    Ok(DecayProfile { bands, forced, descriptor: descriptor.to_string() })
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fit(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if usable.len() < 3 {
        return Err(Error::invalid("need at least 3 points with nonzero modulus"));
    }
    Ok((-2.0 * least_squares_slope(&usable)).max(0.0))
}

/// `−2 ×` the slope of `log(band max)` against `log(band center)`, clamped
/// at 0: the Fourier-dimension exponent implied by the band envelope.
pub fn decay_exponent_fit(profile: &DecayProfile) -> Result<f64> {
    if profile.bands.len() < 3 {
        return Err(Error::invalid("need at least 3 bands"));
    }
    if profile.bands.iter().all(|b| b.max_modulus == 0.0) {
        return Err(Error::invalid("all band maxima are zero"));
    }
    let points: Vec<(f64, f64)> = profile.bands.iter().map(|b| ((b.lo * b.hi).sqrt(), b.max_modulus)).collect();
    fit(&points)
}

/// The same fit restricted to the forced frequencies `base^j`.
pub fn forced_subsequence_fit(profile: &DecayProfile) -> Result<f64> {
    fit(&profile.forced)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFit {
    pub seed: u64,
    pub fit: f64,
}

/// Decay fits for the deterministic level measure and for seeded random
/// rotations of it. All numbers depend on `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub level: u32,
    pub base: u64,
    pub similarity_dimension: f64,
    pub deterministic_fit: f64,
    pub deterministic_forced_fit: f64,
    /// Smallest `|μ̂(base^j)|` over the forced frequencies.
    pub forced_floor: f64,
    pub random: Vec<SeedFit>,
    pub random_median: f64,
}

/// Default profile for a level-`level` construction in base `b`: bands up
/// to `b^(level−1)`, about one per octave.
pub fn default_spec(base: u64, level: u32, seed: u64) -> ProfileSpec {
    let xi_max = (base as f64).powi(level.saturating_sub(1).max(1) as i32);
    ProfileSpec {
        xi_max,
        bands: (xi_max.log2().floor() as usize).max(3),
        samples_per_band: 64,
        seed,
        forced_base: Some(base),
    }
}

pub fn compare_constructions(ds: &DigitSet, level: u32, seeds: &[u64]) -> Result<ComparisonReport> {
    if level < 2 {
        return Err(Error::invalid("need level >= 2 for a decay comparison"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("need at least one seed"));
    }
    let spec = default_spec(ds.base, level, 0);
    let det = decay_profile(&level_approximation(ds, level)?, &spec, "deterministic")?;
    let deterministic_fit = decay_exponent_fit(&det)?;
    let deterministic_forced_fit = forced_subsequence_fit(&det)?;
    let forced_floor = det.forced.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let mut random = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let (_, iu) = random_realization(ds, level, seed)?;
        let profile = decay_profile(&iu, &spec, &format!("random seed {seed}"))?;
        random.push(SeedFit { seed, fit: decay_exponent_fit(&profile)? });
    }
    let mut fits: Vec<f64> = random.iter().map(|s| s.fit).collect();
    fits.sort_by(f64::total_cmp);
    let mid = fits.len() / 2;
    let random_median = if fits.len() % 2 == 1 { fits[mid] } else { 0.5 * (fits[mid - 1] + fits[mid]) };
    Ok(ComparisonReport {
        level,
        base: ds.base,
        similarity_dimension: crate::construction::similarity_dimension(ds),
        deterministic_fit,
        deterministic_forced_fit,
        forced_floor,
        random,
        random_median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Interval, Provenance};
    use crate::rational::ratio;
    use crate::szemeredi::{Kind, Method};
    use proptest::prelude::*;

    fn point(x: Rational) -> IntervalUnion {
        IntervalUnion::new(vec![Interval::new(x.clone(), x)], 0, 0).unwrap()
    }

    fn ds(n: u64, a: &[u64]) -> DigitSet {
        DigitSet::from_set(3, n, a, Provenance { kind: Kind::Exact, method: Method::Dfs }).unwrap()
    }

    #[test]
    fn transform_examples() {
        let unit = IntervalUnion::unit();
        let e = level_approximation(&ds(2, &[1, 2]), 3).unwrap();
        for set in [&unit, &e] {
            let z = measure_transform(set, 0.0).unwrap();
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(measure_transform(&unit, 1.0).unwrap().norm() < 1e-15);
        let half = measure_transform(&unit, 0.5).unwrap().norm();
        assert!((half - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(IntervalUnion::from_unsorted(vec![]).map(|e| measure_transform(&e, 1.0)).unwrap().is_err());
    }

    #[test]
    fn point_mass_has_unit_modulus() {
        let p = point(ratio(2, 7));
        let spec = ProfileSpec { xi_max: 1024.0, bands: 10, samples_per_band: 16, seed: 3, forced_base: None };
        let prof = decay_profile(&p, &spec, "atom").unwrap();
        assert!(prof.bands.iter().all(|b| (b.max_modulus - 1.0).abs() < 1e-12));
        assert_eq!(decay_exponent_fit(&prof).unwrap(), 0.0);
    }

    #[test]
    fn unit_interval_envelope() {
        let spec = ProfileSpec { xi_max: 1024.0, bands: 10, samples_per_band: 64, seed: 1, forced_base: None };
        let prof = decay_profile(&IntervalUnion::unit(), &spec, "unit").unwrap();
        assert_eq!(prof.bands.len(), 10);
        for b in &prof.bands {
            // |sin(πξ)/(πξ)| ≤ 1/(πξ) on the band, and ≥ 0
            assert!(b.max_modulus <= 1.0 / (std::f64::consts::PI * b.lo) + 1e-12, "{b:?}");
            assert!(b.lo >= 1.0 - 1e-12 && b.hi <= 1024.0 + 1e-9);
        }
        let est = decay_exponent_fit(&prof).unwrap();
        assert!((est - 2.0).abs() < 0.25, "estimate {est}");
    }

    #[test]
    fn fit_edge_cases() {
        let flat = DecayProfile {
            bands: (0..5).map(|i| Band { lo: 2f64.powi(i), hi: 2f64.powi(i + 1), max_modulus: 0.3, argmax_xi: 1.0, samples: 1 }).collect(),
            forced: vec![],
            descriptor: "flat".into(),
        };
        assert_eq!(decay_exponent_fit(&flat).unwrap(), 0.0);
        let mut zero = flat.clone();
        zero.bands.iter_mut().for_each(|b| b.max_modulus = 0.0);
        assert!(decay_exponent_fit(&zero).is_err());
        let spec = ProfileSpec { xi_max: 2.0, bands: 4, samples_per_band: 1, seed: 0, forced_base: None };
        assert!(decay_profile(&IntervalUnion::unit(), &spec, "").is_err());
        let spec = ProfileSpec { xi_max: 100.0, bands: 2, samples_per_band: 1, seed: 0, forced_base: None };
        assert!(decay_profile(&IntervalUnion::unit(), &spec, "").is_err());
    }

    #[test]
    fn forced_frequencies_do_not_decay() {
        let e = level_approximation(&ds(2, &[1, 2]), 6).unwrap();
        let spec = default_spec(24, 6, 0);
        let prof = decay_profile(&e, &spec, "det").unwrap();
        assert_eq!(prof.forced.len(), 5);
        assert!(prof.forced.iter().all(|&(_, m)| m > 0.3), "{:?}", prof.forced);
    }

    #[test]
    fn single_digit_comparison_is_flat() {
        let r = compare_constructions(&ds(1, &[1]), 4, &[1, 2, 3]).unwrap();
        for s in &r.random {
            assert!((s.fit - r.deterministic_fit).abs() < 1e-9);
        }
        let again = compare_constructions(&ds(1, &[1]), 4, &[1, 2, 3]).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn profile_csv() {
        let spec = ProfileSpec { xi_max: 64.0, bands: 3, samples_per_band: 4, seed: 0, forced_base: None };
        let csv = decay_profile(&IntervalUnion::unit(), &spec, "").unwrap().to_csv();
        assert_eq!(csv.lines().next(), Some(DecayProfile::CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    fn small_union() -> impl Strategy<Value = IntervalUnion> {
        proptest::collection::vec((0i64..1000, 0i64..40), 1..6).prop_map(|parts| {
            let ivs = parts.into_iter().map(|(a, w)| Interval::new(ratio(a, 1000), ratio((a + w).min(1000), 1000))).collect();
            IntervalUnion::from_unsorted(ivs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn modulus_and_symmetry(e in small_union(), xi in -500.0f64..500.0) {
            let m = UniformMeasure::new(&e).unwrap();
            let z = m.transform(xi);
            prop_assert!(z.norm() <= 1.0 + 1e-12);
            prop_assert!((m.transform(-xi) - z.conj()).norm() < 1e-9);
        }

        #[test]
        fn additivity_over_splits(a in 0i64..500, w in 1i64..400, cut in 1i64..399, xi in 0.0f64..300.0) {
            let cut = cut.min(w - 1).max(0);
            prop_assume!(cut > 0 && cut < w);
            let whole = IntervalUnion::new(vec![Interval::new(ratio(a, 1000), ratio(a + w, 1000))], 0, 0).unwrap();
            let left = IntervalUnion::new(vec![Interval::new(ratio(a, 1000), ratio(a + cut, 1000))], 0, 0).unwrap();
            let right = IntervalUnion::new(vec![Interval::new(ratio(a + cut, 1000), ratio(a + w, 1000))], 0, 0).unwrap();
            let avg = measure_transform(&left, xi).unwrap() * (cut as f64 / w as f64)
                + measure_transform(&right, xi).unwrap() * ((w - cut) as f64 / w as f64);
            prop_assert!((measure_transform(&whole, xi).unwrap() - avg).norm() < 1e-9);
        }

        #[test]
        fn translation_covariance(a in 0i64..300, w in 0i64..100, u in 0i64..500, xi in -200.0f64..200.0) {
            let base = IntervalUnion::new(vec![Interval::new(ratio(a, 1000), ratio(a + w, 1000))], 0, 0).unwrap();
            let moved = IntervalUnion::new(vec![Interval::new(ratio(a + u, 1000), ratio(a + w + u, 1000))], 0, 0).unwrap();
            let shift = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi * (u as f64 / 1000.0));
            let lhs = measure_transform(&moved, xi).unwrap();
            let rhs = measure_transform(&base, xi).unwrap() * shift;
            prop_assert!((lhs - rhs).norm() < 1e-9);
            prop_assert!((lhs.norm() - measure_transform(&base, xi).unwrap().norm()).abs() < 1e-12);
        }
    }
}
