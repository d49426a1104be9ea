//! Shared numerics: exact phase reduction, unit phases and pairwise sums.

use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;

/// Leaf size of the pairwise reduction tree.
const PAIRWISE_LEAF: usize = 32;

/// Fractional part of `n * alpha`, in `[0, 1)`.
///
/// `alpha` is decomposed into its exact dyadic value `mant / 2^s`, so the
/// reduction is exact before the final rounding to `f64` regardless of how
/// large `n` is.
pub fn frac_mul(n: u128, alpha: f64) -> f64 {
    if n == 0 || alpha == 0.0 || !alpha.is_finite() {
        return 0.0;
    }
    let bits = alpha.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp_bits - 1075)
    };
    if exp >= 0 {
        return 0.0;
    }
    let shift = (-exp) as u32;
    let frac = if shift <= 128 {
        let prod = (mant as u128).wrapping_mul(n);
        let rem = if shift == 128 {
            prod
        } else {
            prod & ((1u128 << shift) - 1)
        };
        rem as f64 * (-(shift as f64)).exp2()
    } else {
        let prod = BigUint::from(mant) * BigUint::from(n);
        let modulus = BigUint::from(1u8) << shift;
        let rem = prod % modulus;
        // rem < 2^shift; scale down in two steps to stay inside f64 range.
        let top = rem.bits();
        if top == 0 {
            0.0
        } else {
            let drop = top.saturating_sub(64);
            let head = (rem >> drop).to_f64().unwrap_or(0.0);
            head * ((drop as f64) - shift as f64).exp2()
        }
    };
    let frac = if negative && frac > 0.0 { 1.0 - frac } else { frac };
    if frac >= 1.0 {
        0.0
    } else {
        frac
    }
}

/// `e(x) = exp(2 pi i x)`, reduced to `(-1/2, 1/2]` before the trig call.
pub fn unit(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `e(alpha * h^t)` with `h^t` formed in 128-bit integers.
pub fn poly_phase(alpha: f64, h: u64, t: u32) -> Complex64 {
    unit(frac_mul(pow_u128(h, t), alpha))
}

/// `h^t` in 128 bits, saturating.
pub fn pow_u128(h: u64, t: u32) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..t {
        acc = acc.saturating_mul(h as u128);
    }
    acc
}

/// Distance to the nearest integer, `||x||`.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Pairwise (tree) summation with a fixed leaf size.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Complex counterpart of [`pairwise_sum`].
pub fn pairwise_sum_c(values: &[Complex64]) -> Complex64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_c(&values[..mid]) + pairwise_sum_c(&values[mid..])
}

/// `sum_{m <= n} 1/m`, exact summation below 4096 and an asymptotic tail above.
pub fn harmonic(n: u64) -> f64 {
    const EXACT: u64 = 4096;
    if n <= EXACT {
        let terms: Vec<f64> = (1..=n).map(|m| 1.0 / m as f64).collect();
        return pairwise_sum(&terms);
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x.ln() + 0.577_215_664_901_532_9 + 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0
}

/// `H(hi) - H(lo)`, exact for short ranges.
pub fn harmonic_range(lo: u64, hi: u64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if hi - lo <= 4096 {
        let terms: Vec<f64> = (lo + 1..=hi).map(|m| 1.0 / m as f64).collect();
        return pairwise_sum(&terms);
    }
    harmonic(hi) - harmonic(lo)
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = 7u64;
    let steps = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += steps[i];
        i = (i + 1) % steps.len();
    }
    true
}
