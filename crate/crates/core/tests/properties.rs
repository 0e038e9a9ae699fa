use std::time::Duration;

use ap_avoid::bounds::{bound_report, calibrate_universal_constant, thm_upper_c};
use ap_avoid::construction::{
    level_approximation, random_realization, realized_block, DigitSet, Interval, IntervalUnion, Provenance,
};
use ap_avoid::rational::{ratio, to_f64};
use ap_avoid::szemeredi::{contains_kap, rk_exact, ExactTable, Kind, Method, RkCache, RkOracle};
use ap_avoid::verifier::{certify_avoidance, Outcome, ParamBox};
use ap_avoid::{Error, Rational};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact_tables(max_n: u64) -> Vec<ExactTable> {
    (3..=6)
        .map(|k| {
            let mut t = ExactTable::new(k).unwrap();
            assert!(t.extend_to(max_n, std::time::Instant::now() + Duration::from_secs(60)));
            t
        })
        .collect()
}

#[test]
fn rk_monotone_in_n_and_k() {
    let tables = exact_tables(24);
    for t in &tables {
        for n in 1..24 {
            let (a, b) = (t.value(n).unwrap(), t.value(n + 1).unwrap());
            assert!(a <= b && b <= a + 1, "k={} N={n}: {a} then {b}", t.k());
        }
        for n in 1..=24 {
            let rec = t.record(n).unwrap();
            assert!(!contains_kap(rec.witness.as_ref().unwrap(), t.k()).unwrap());
        }
    }
    for pair in tables.windows(2) {
        for n in 1..=24 {
            assert!(pair[0].value(n) <= pair[1].value(n), "r_{}({n}) > r_{}({n})", pair[0].k(), pair[1].k());
        }
    }
}

#[test]
fn rk_exact_is_deterministic() {
    for (k, n) in [(3u32, 20u64), (4, 18), (5, 16)] {
        let a = rk_exact(k, n, Duration::from_secs(60)).unwrap();
        let b = rk_exact(k, n, Duration::from_secs(60)).unwrap();
        assert_eq!((a.value, &a.witness), (b.value, &b.witness));
    }
}

fn ds(k: u32, n: u64, a: &[u64]) -> DigitSet {
    DigitSet::from_set(k, n, a, Provenance { kind: Kind::Exact, method: Method::Dfs }).unwrap()
}

#[test]
fn construction_refines_with_exact_denominators() {
    let digit_sets = [ds(3, 2, &[1, 2]), ds(3, 5, &[1, 2, 4, 5]), ds(4, 4, &[1, 2, 4])];
    for d in &digit_sets {
        let mut prev = IntervalUnion::unit();
        for level in 1..=4 {
            let cur = level_approximation(d, level).unwrap();
            assert!(cur.is_contained_in(&prev));
            let den = BigInt::from(d.base).pow(level);
            for iv in cur.intervals() {
                for x in [&iv.left, &iv.right] {
                    assert_eq!((x * Rational::from_integer(den.clone())).denom(), &BigInt::from(1));
                }
            }
            prev = cur;
        }
    }
}

#[test]
fn every_rotation_is_progression_free() {
    for d in [ds(3, 5, &[1, 2, 4, 5]), ds(4, 7, &[1, 2, 3, 5, 6]), ds(3, 9, &[1, 2, 4, 8, 9])] {
        for x in 0..d.base {
            assert!(!contains_kap(&realized_block(&d, x), d.k).unwrap(), "rotation {x} of {:?}", d.digits);
        }
        let (real, _) = random_realization(&d, 3, 17).unwrap();
        for &x in real.rotations.values() {
            assert!(!contains_kap(&real.block(x), d.k).unwrap());
        }
    }
}

fn random_union(rng: &mut ChaCha8Rng) -> Vec<(i64, i64)> {
    let mut parts: Vec<(i64, i64)> = Vec::new();
    let mut x = rng.gen_range(0..40);
    while x < 256 && parts.len() < 5 {
        let w = rng.gen_range(0..24);
        parts.push((x, (x + w).min(256)));
        x += w + rng.gen_range(1..60);
    }
    parts
}

fn union(parts: &[(i64, i64)]) -> IntervalUnion {
    IntervalUnion::new(parts.iter().map(|&(l, r)| Interval::new(ratio(l, 256), ratio(r, 256))).collect(), 0, 0).unwrap()
}

#[test]
fn certification_is_monotone_under_inclusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut certified = 0;
    for _ in 0..300 {
        let outer = random_union(&mut rng);
        // shrink every interval and drop some
        let mut inner: Vec<(i64, i64)> = Vec::new();
        for &(l, r) in &outer {
            if rng.gen_bool(0.8) {
                let a = rng.gen_range(l..=r);
                inner.push((a, rng.gen_range(a..=r)));
            }
        }
        if inner.is_empty() {
            continue;
        }
        let k = rng.gen_range(3..=4);
        let eps = ratio(1, rng.gen_range(2..=10));
        let g_lo = rng.gen_range(1..64);
        let g_hi = rng.gen_range(g_lo + 1..=128);
        let outer_u = union(&outer);
        // both runs share the outer set's start range
        let a_lo = outer_u.min().unwrap() - &eps * ratio(g_hi, 256);
        let a_hi = outer_u.max().unwrap().clone();
        let window = ParamBox::new(a_lo, a_hi, ratio(g_lo, 256), ratio(g_hi, 256)).unwrap();
        if let Ok(v) = certify_avoidance(&outer_u, k, &eps, &window, 24) {
            if v.outcome == Outcome::CertifiedAvoiding {
                certified += 1;
                let inner_v = certify_avoidance(&union(&inner), k, &eps, &window, 24).unwrap();
                assert_eq!(inner_v.outcome, Outcome::CertifiedAvoiding, "{outer:?} certified but {inner:?} not");
            }
        }
    }
    assert!(certified > 20);
}

#[test]
fn verdicts_do_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    for _ in 0..60 {
        let parts = random_union(&mut rng);
        let e = union(&parts);
        let eps = ratio(1, rng.gen_range(2..=8));
        let g_lo = rng.gen_range(1..64);
        let window = ParamBox::gaps(ratio(g_lo, 256), ratio(rng.gen_range(g_lo + 1..=200), 256)).unwrap();
        let a = single.install(|| certify_avoidance(&e, 3, &eps, &window, 20));
        let b = many.install(|| certify_avoidance(&e, 3, &eps, &window, 20));
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b),
            (Err(Error::Undecided { surviving: sa, surviving_total: ta, boxes_explored: ba }),
             Err(Error::Undecided { surviving: sb, surviving_total: tb, boxes_explored: bb })) => {
                assert_eq!((sa, ta, ba), (sb, tb, bb));
            }
            (a, b) => panic!("different results {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn sandwich_with_exact_inputs() {
    let mut rk = RkOracle::new(RkCache::in_memory(), Duration::from_secs(20));
    for k in 3..=6 {
        for den in [12i64, 13, 16, 20, 24] {
            let rep = bound_report(k, &ratio(1, den), &mut rk).unwrap();
            assert!(rep.exact_inputs, "k={k} eps=1/{den}");
            assert!(rep.consistent, "{rep:?}");
            assert!(rep.upper_c.unwrap() < 1.0);
            assert!(rep.lower_a.as_ref().unwrap().value >= 0.0);
        }
    }
}

#[test]
fn porosity_bound_beats_calibrated_constant() {
    let ks: Vec<u32> = (3..=100).collect();
    // log-spaced points plus points just below each 1/m, where ⌈1/ε⌉ jumps
    let mut grid: Vec<Rational> = (0..=50).map(|i| ratio(1, (10f64 * 1e5f64.powf(i as f64 / 50.0)).round() as i64 + 1)).collect();
    grid.extend((10..=300).map(|m| ratio(1, m) - ratio(1, 1_000_000_000_000)));
    grid.retain(|e| *e >= ratio(1, 1_000_000) && *e < ratio(1, 10));
    let (c, k_at, eps_at) = calibrate_universal_constant(&ks, &grid).unwrap();
    assert!(c > 0.5, "calibrated c = {c} at k = {k_at}, eps = {eps_at}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5_000 {
        let k = rng.gen_range(3..=100);
        let eps = ratio(rng.gen_range(1..100_000), 1_000_000);
        let lhs = thm_upper_c(k, &eps).unwrap();
        let rhs = 1.0 - c / (k as f64 * -to_f64(&eps).ln());
        assert!(lhs <= rhs + 1e-12, "k={k} eps={eps}: {lhs} > {rhs} with c = {c}");
    }
}
