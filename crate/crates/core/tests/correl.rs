use std::sync::OnceLock;

use lfu_core::correl::{chebyshev_harness, correlation_sum, polynomial_phases, two_point, union_bound_frequency};
use lfu_core::liouville::lambda_oracle;
use lfu_core::{build_table, LiouvilleTable};
use num_complex::Complex64;
use proptest::prelude::*;

fn table() -> &'static LiouvilleTable {
    static T: OnceLock<LiouvilleTable> = OnceLock::new();
    T.get_or_init(|| build_table(100_000).unwrap())
}

fn oracle_sum(h: i64, m: u64) -> i64 {
    (1..=m as i64)
        .filter(|&n| n + h >= 1)
        .map(|n| lambda_oracle(n as u64) as i64 * lambda_oracle((n + h) as u64) as i64)
        .sum()
}

/// `#{0 <= m < M : |(1/H) sum_h λ(m+h) z_h| >= eps}`, term by term.
fn oracle_exceed(phases: &[Complex64], eps: f64, scale: u64) -> u64 {
    let h = phases.len();
    (0..scale)
        .filter(|&m| {
            let s: Complex64 = (1..=h)
                .map(|k| phases[k - 1] * lambda_oracle(m + k as u64) as f64)
                .sum();
            s.norm() / h as f64 >= eps
        })
        .count() as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn two_point_matches_oracle(h in 1i64..20, m in 1u64..3000) {
        let rep = two_point(table(), h, &[m]).unwrap();
        prop_assert_eq!(rep.sums[0], oracle_sum(h, m));
        prop_assert_eq!(correlation_sum(table(), -h, 0, m), oracle_sum(-h, m));
    }

    #[test]
    fn shift_symmetry(h in 1i64..50, m in 100u64..50_000) {
        let plus = two_point(table(), h, &[m]).unwrap().values[0];
        let minus = two_point(table(), -h, &[m]).unwrap().values[0];
        prop_assert!((plus - minus).abs() <= 2.0 * h as f64 / m as f64);
    }

    #[test]
    fn chebyshev_bound_holds(
        h in 2usize..64,
        eps in 0.05f64..0.6,
        scale in 100u64..20_000,
        raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 64),
    ) {
        let phases: Vec<Complex64> = raw[..h]
            .iter()
            .map(|&(r, a)| Complex64::from_polar(r, std::f64::consts::TAU * a))
            .collect();
        let rep = chebyshev_harness(table(), h, eps, &phases, scale).unwrap();
        prop_assert!(rep.empirical_fraction <= rep.second_moment_bound);
        prop_assert_eq!(rep.exceed_count as f64 / scale as f64, rep.empirical_fraction);
    }

    #[test]
    fn union_bound_holds(
        h in 2usize..48,
        t in 1u32..3,
        eps in 0.05f64..0.6,
        scale in 100u64..10_000,
        grid in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let rep = union_bound_frequency(table(), &grid, h, t, eps, scale).unwrap();
        prop_assert!(rep.joint_fraction <= rep.single_sum);
        let max_single = rep.single_fractions.iter().copied().fold(0.0, f64::max);
        prop_assert!(max_single <= rep.joint_fraction);
    }
}

#[test]
fn exceedances_match_oracle() {
    for (h, eps, alpha) in [(8usize, 0.3, 0.1234), (20, 0.21, 0.5), (33, 0.15, 0.0)] {
        let phases = polynomial_phases(alpha, h, 1);
        let rep = chebyshev_harness(table(), h, eps, &phases, 2000).unwrap();
        assert_eq!(rep.exceed_count, oracle_exceed(&phases, eps, 2000));
    }
}

#[test]
fn scale_list_accumulates_in_any_order() {
    let a = two_point(table(), 3, &[50_000, 10, 999]).unwrap();
    for (i, &m) in [50_000u64, 10, 999].iter().enumerate() {
        assert_eq!(a.sums[i], correlation_sum(table(), 3, 0, m));
    }
}
