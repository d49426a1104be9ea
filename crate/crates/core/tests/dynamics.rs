use std::sync::OnceLock;

use lfu_core::dynamics::{
    dual_averages, last_coordinate_character, liouville_sequence, lomo_block_average, BlockPartition, Rotation,
    SkewSystem, TorusPoint, UnitFrac,
};
use lfu_core::expsum::AverageMode;
use lfu_core::{build_table, LiouvilleTable};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn table() -> &'static LiouvilleTable {
    static T: OnceLock<LiouvilleTable> = OnceLock::new();
    T.get_or_init(|| build_table(100_000).unwrap())
}

fn frac(num: u128, den: u128) -> UnitFrac {
    UnitFrac::new(num, den).unwrap()
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * x)
}

/// `n` steps on the exact dyadic values of `alpha` and `x`, rounded once.
fn exact_orbit(alpha: f64, x: &[f64], n: u64) -> Vec<f64> {
    let wrap = |v: BigRational| &v - v.floor();
    let a = BigRational::from_float(alpha).unwrap();
    let mut v: Vec<BigRational> = x.iter().map(|&c| BigRational::from_float(c).unwrap()).collect();
    for _ in 0..n {
        for j in (1..v.len()).rev() {
            v[j] = wrap(&v[j] + &v[j - 1]);
        }
        v[0] = wrap(&v[0] + &a);
    }
    v.iter().map(|c| c.to_f64().unwrap()).collect()
}

prop_compose! {
    fn rational_system()(d in 1usize..=6, fracs in prop::collection::vec((0u128..10_000, 1u128..10_000), 7))
        -> (SkewSystem, TorusPoint) {
        let alpha = frac(fracs[0].0, fracs[0].1);
        let x = fracs[1..=d].iter().map(|&(p, q)| frac(p, q)).collect();
        (SkewSystem::new(d, Rotation::Rational(alpha)).unwrap(), TorusPoint::Rational(x))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_equals_iteration((sys, x) in rational_system(), n in 0u64..=10_000) {
        let mut y = x.clone();
        for _ in 0..n {
            y = sys.step(&y).unwrap();
        }
        prop_assert_eq!(sys.iterate_closed_form(&x, n).unwrap(), y);
    }

    #[test]
    fn cocycle_law((sys, x) in rational_system(), n in 0u64..1_000_000_000, m in 0u64..1_000_000_000) {
        let once = sys.iterate_closed_form(&x, n + m).unwrap();
        let twice = sys.iterate_closed_form(&sys.iterate_closed_form(&x, m).unwrap(), n).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn real_mode_tracks_iteration(d in 1usize..=6, alpha in 0.0f64..1.0, x in prop::collection::vec(0.0f64..1.0, 6), n in 0u64..=1000) {
        let sys = SkewSystem::new(d, Rotation::Real(alpha)).unwrap();
        let start = TorusPoint::Real(x[..d].to_vec());
        let y = TorusPoint::Real(exact_orbit(alpha, &x[..d], n));
        prop_assert!(sys.iterate_closed_form(&start, n).unwrap().circle_distance(&y) <= 1e-9);
    }

    #[test]
    fn lomo_ignores_unimodular_factor(theta in 0.0f64..1.0, alpha in 0.0f64..1.0, d in 1usize..4, k in 5usize..60) {
        let sys = SkewSystem::new(d, Rotation::Real(alpha)).unwrap();
        let p = BlockPartition::squares(10_000).unwrap();
        let starts = vec![TorusPoint::origin_real(d); k];
        let c = e(theta);
        let rotated = move |x: &[f64]| c * last_coordinate_character(x);
        for mode in [AverageMode::Cesaro, AverageMode::Logarithmic] {
            let a = lomo_block_average(table(), &sys, &last_coordinate_character, &p, &starts, k, mode).unwrap();
            let b = lomo_block_average(table(), &sys, &rotated, &p, &starts, k, mode).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}

#[test]
fn hand_iteration() {
    let sys = SkewSystem::new(2, Rotation::Rational(frac(1, 4))).unwrap();
    let x = TorusPoint::origin_rational(2);
    let want = TorusPoint::Rational(vec![frac(0, 1), frac(1, 2)]);
    assert_eq!(sys.iterate_closed_form(&x, 4).unwrap(), want);
}

#[test]
fn constant_orbit_gives_liouville_block_sums() {
    let sys = SkewSystem::new(3, Rotation::Real(0.0)).unwrap();
    let p = BlockPartition::powers_of_two(1 << 16).unwrap();
    let k = p.blocks();
    let starts = vec![TorusPoint::origin_real(3); k];
    let v = lomo_block_average(table(), &sys, &last_coordinate_character, &p, &starts, k, AverageMode::Cesaro).unwrap();
    let b = p.boundaries();
    let direct: f64 = (0..k)
        .map(|i| (b[i]..b[i + 1]).map(|n| lfu_core::liouville::lambda_oracle(n) as f64).sum::<f64>().abs())
        .sum::<f64>()
        / b[k] as f64;
    assert!((v - direct).abs() < 1e-12);
}

#[test]
fn golden_rotation_matches_direct_block_sums() {
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let sys = SkewSystem::new(1, Rotation::Real(alpha)).unwrap();
    let p = BlockPartition::squares(100_000).unwrap();
    let k = 300;
    let starts = vec![TorusPoint::origin_real(1); k];
    let b = p.boundaries();
    for mode in [AverageMode::Cesaro, AverageMode::Logarithmic] {
        let v = lomo_block_average(table(), &sys, &last_coordinate_character, &p, &starts, k, mode).unwrap();
        let mut total = 0.0;
        for i in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            for n in b[i]..b[i + 1] {
                let w = match mode {
                    AverageMode::Cesaro => 1.0,
                    AverageMode::Logarithmic => 1.0 / n as f64,
                };
                s += e((n as f64 * alpha).fract()) * (table().lambda(n) as f64 * w);
            }
            total += s.norm();
        }
        let direct = match mode {
            AverageMode::Cesaro => total / b[k] as f64,
            AverageMode::Logarithmic => total / (b[k] as f64).ln(),
        };
        assert!((v - direct).abs() < 1e-9, "{mode:?}: {v} vs {direct}");
    }
}

#[test]
fn dual_averages_closed_forms() {
    let p = BlockPartition::squares(10_000).unwrap();
    let ones = vec![Complex64::new(1.0, 0.0); 5000];
    let r = dual_averages(&ones, 10, 4000, &p).unwrap();
    let b = p.boundaries();
    assert!((r.window - 1.0).abs() < 1e-12);
    assert!((r.block - (b[r.blocks] - b[0]) as f64 / b[r.blocks] as f64).abs() < 1e-12);

    let alt: Vec<Complex64> = (1..=5000).map(|n| Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    assert_eq!(dual_averages(&alt, 10, 4000, &p).unwrap().window, 0.0);

    for (theta, h) in [(0.3, 100usize), (0.3, 7), (0.123, 33), ((5f64.sqrt() - 1.0) / 2.0, 100)] {
        let z: Vec<Complex64> = (1..=20_000u64).map(|n| e((n as f64 * theta).fract())).collect();
        let r = dual_averages(&z, h, 10_000, &p).unwrap();
        let kernel = ((std::f64::consts::PI * h as f64 * theta).sin() / (h as f64 * (std::f64::consts::PI * theta).sin())).abs();
        assert!((r.window - kernel).abs() < 1e-10, "theta {theta} H {h}");
    }
}

#[test]
fn liouville_sequence_indexing() {
    let z = liouville_sequence(table(), 11).unwrap();
    let want = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0];
    assert_eq!(z.iter().map(|c| c.re).collect::<Vec<_>>(), want);
}

#[test]
fn high_dimensional_lomo_matches_closed_form_per_step() {
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    for d in [4usize, 6, 8] {
        let sys = SkewSystem::new(d, Rotation::Real(alpha)).unwrap();
        let p = BlockPartition::squares(20_000).unwrap();
        let k = 100;
        let starts: Vec<TorusPoint> = (0..k)
            .map(|i| TorusPoint::Real((0..d).map(|j| ((i * 7 + j * 3) as f64 * 0.0137).fract()).collect()))
            .collect();
        let v = lomo_block_average(table(), &sys, &last_coordinate_character, &p, &starts, k, AverageMode::Cesaro).unwrap();
        let b = p.boundaries();
        let mut total = 0.0;
        for i in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            for n in b[i]..b[i + 1] {
                let TorusPoint::Real(y) = sys.iterate_closed_form(&starts[i], n).unwrap() else {
                    unreachable!()
                };
                s += e(y[d - 1]) * table().lambda(n) as f64;
            }
            total += s.norm();
        }
        let direct = total / b[k] as f64;
        assert!((v - direct).abs() < 1e-8, "d = {d}: {v} vs {direct}");
    }
}
