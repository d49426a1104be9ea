//! Discrepancy of finite point sets on the circle, rational approximation,
//! and the resonance test for prime orbits `p alpha mod 1`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::numeric::{frac_mul, pairwise_sum, unit};

fn sorted(points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return domain("discrepancy of an empty sequence");
    }
    if points.iter().any(|x| !(0.0..1.0).contains(x)) {
        return domain("points must lie in [0, 1)");
    }
    let mut xs = points.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(xs)
}

/// Exact `sup_I |#{x_k in I}/K - |I||` over all subintervals of `[0, 1]`.
///
/// Over-counted intervals are closed with data-point endpoints; under-counted
/// ones are open between consecutive data points (with `0` and `1` as extra
/// endpoints). One sorted pass with running extrema covers every pair.
pub fn extreme_discrepancy(points: &[f64]) -> Result<f64> {
    let xs = sorted(points)?;
    let k = xs.len() as f64;
    // Closed [x_i, x_j], i <= j: (j - i + 1)/K - (x_j - x_i).
    let mut over = f64::NEG_INFINITY;
    let mut best_i = f64::NEG_INFINITY;
    for (j, &x) in xs.iter().enumerate() {
        best_i = best_i.max(x - j as f64 / k);
        over = over.max((j + 1) as f64 / k - x + best_i);
    }
    // Open (y_i, y_j), i < j over y = (0, x_1..x_K, 1): (y_j - y_i) - (j - i - 1)/K.
    let mut under = f64::NEG_INFINITY;
    let mut min_i = 0.0f64;
    let ys = xs.iter().copied().chain(std::iter::once(1.0));
    for (idx, y) in ys.enumerate() {
        let j = (idx + 1) as f64;
        under = under.max(y - j / k - min_i + 1.0 / k);
        min_i = min_i.min(y - j / k);
    }
    Ok(over.max(under))
}

/// Star discrepancy `max_k max(k/K - x_(k), x_(k) - (k-1)/K)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    let xs = sorted(points)?;
    let k = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / k - x).max(x - i as f64 / k))
        .fold(0.0, f64::max))
}

/// `3/(K_max+1) + 3 sum_{k <= K_max} (1/k) |E_j e(k x_j)|`.
pub fn erdos_turan_bound(points: &[f64], k_max: u64) -> Result<f64> {
    if points.is_empty() {
        return domain("bound for an empty sequence");
    }
    if k_max == 0 {
        return domain("K_max must be positive");
    }
    let n = points.len() as f64;
    let terms: Vec<f64> = (1..=k_max)
        .map(|k| {
            let (mut re, mut im) = (Vec::with_capacity(points.len()), Vec::new());
            for &x in points {
                let z = unit(frac_mul(k as u128, x));
                re.push(z.re);
                im.push(z.im);
            }
            let s = num_complex::Complex64::new(pairwise_sum(&re), pairwise_sum(&im));
            s.norm() / n / k as f64
        })
        .collect();
    Ok(3.0 / (k_max + 1) as f64 + 3.0 * pairwise_sum(&terms))
}

/// A reduced fraction `a/l` approximating `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalApprox {
    pub a: i64,
    pub l: u64,
    pub error: f64,
}

/// Best convergent or intermediate fraction of `alpha` with denominator at
/// most `Q`; always `|alpha - a/l| < 1/(l Q)`.
pub fn dirichlet_approx(alpha: f64, q: u64) -> Result<RationalApprox> {
    if q == 0 {
        return domain("Q must be positive");
    }
    let x = BigRational::from_float(alpha)
        .ok_or_else(|| Error::Domain(format!("{alpha} is not finite")))?;
    let qb = BigInt::from(q);
    // Convergents p_{-1}/q_{-1} = 1/0, p_0/q_0 = floor(x)/1.
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let a0 = x.floor().to_integer();
    let (mut p_cur, mut q_cur) = (a0.clone(), BigInt::one());
    let mut rest = x - BigRational::from_integer(a0);
    let mut semi: Option<(BigInt, BigInt)> = None;
    while !rest.is_zero() {
        let inv = rest.recip();
        let a = inv.floor().to_integer();
        rest = inv - BigRational::from_integer(a.clone());
        let q_next = &a * &q_cur + &q_prev;
        if q_next > qb {
            // Largest intermediate fraction within the bound.
            let t = (&qb - &q_prev) / &q_cur;
            if t.is_positive() {
                semi = Some((&t * &p_cur + &p_prev, &t * &q_cur + &q_prev));
            }
            break;
        }
        let p_next = &a * &p_cur + &p_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
    }
    let x = BigRational::from_float(alpha).expect("finite");
    let err = |p: &BigInt, l: &BigInt| (&x - BigRational::new(p.clone(), l.clone())).abs();
    let mut best = (p_cur.clone(), q_cur.clone(), err(&p_cur, &q_cur));
    if let Some((sp, sq)) = semi {
        let e = err(&sp, &sq);
        let within = &e * BigRational::from_integer(&sq * &qb) < BigRational::one();
        if within && e < best.2 {
            best = (sp, sq, e);
        }
    }
    let a = best
        .0
        .to_i64()
        .ok_or_else(|| Error::Precision(format!("numerator for {alpha} exceeds 64 bits")))?;
    Ok(RationalApprox {
        a,
        l: best.1.to_u64().expect("denominator at most Q"),
        error: best.2.to_f64().unwrap_or(0.0),
    })
}

/// Primes up to `n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Cap on resonance candidates examined.
pub const RESONANCE_SEARCH_CAP: u64 = 10_000_000;

/// Discrepancy of the prime orbit and the strongest small-denominator
/// resonance found, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeOrbitRecord {
    pub alpha: f64,
    pub bound: u64,
    pub prime_count: usize,
    pub discrepancy: f64,
    /// `(l, ||l alpha||)`.
    pub resonance: Option<(u64, f64)>,
}

impl PrimeOrbitRecord {
    pub const CSV_HEADER: &'static str = "alpha,P,discrepancy,resonance_l,resonance_dist";

    pub fn csv_row(&self) -> String {
        match self.resonance {
            Some((l, d)) => format!("{},{},{},{},{}\n", self.alpha, self.bound, self.discrepancy, l, d),
            None => format!("{},{},{},,\n", self.alpha, self.bound, self.discrepancy),
        }
    }
}

/// `||l alpha||` from the rounded double product.
fn resonance_distance(l: u64, alpha: f64) -> f64 {
    let x = l as f64 * alpha;
    (x - x.round()).abs()
}

/// Extreme discrepancy of `{p alpha mod 1 : p <= P prime}` and a search over
/// `l <= C0 eps^-10` (capped at [`RESONANCE_SEARCH_CAP`]) for
/// `||l alpha|| <= C0 eps^-10 / P`, reporting the smallest distance found
/// (ties to the smallest `l`).
pub fn prime_orbit_test(alpha: f64, p_max: u64, eps: f64, c0: f64) -> Result<PrimeOrbitRecord> {
    if p_max < 3 {
        return domain("P must be at least 3");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain("eps must lie in (0, 1)");
    }
    if !(c0 > 0.0) {
        return domain("C0 must be positive");
    }
    if !alpha.is_finite() {
        return domain("alpha must be finite");
    }
    let primes = primes_up_to(p_max);
    let points: Vec<f64> = primes.iter().map(|&p| frac_mul(p as u128, alpha)).collect();
    let discrepancy = extreme_discrepancy(&points)?;
    let scale = c0 * eps.powi(-10);
    let limit = (scale.floor() as u64).min(RESONANCE_SEARCH_CAP);
    let threshold = scale / p_max as f64;
    let mut resonance: Option<(u64, f64)> = None;
    for l in 1..=limit {
        let d = resonance_distance(l, alpha);
        if d <= threshold && resonance.is_none_or(|(_, best)| d < best) {
            resonance = Some((l, d));
            if d == 0.0 {
                break;
            }
        }
    }
    Ok(PrimeOrbitRecord {
        alpha,
        bound: p_max,
        prime_count: primes.len(),
        discrepancy,
        resonance,
    })
}

/// `sum_{p <= P} (1/p) 1[p alpha mod 1 in [a, b]]`.
pub fn prime_log_volume(alpha: f64, p_max: u64, a: f64, b: f64) -> Result<f64> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return domain("need 0 <= a < b <= 1");
    }
    if p_max < 3 {
        return domain("P must be at least 3");
    }
    let terms: Vec<f64> = primes_up_to(p_max)
        .into_iter()
        .filter(|&p| {
            let x = frac_mul(p as u128, alpha);
            a <= x && x <= b
        })
        .map(|p| 1.0 / p as f64)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `sum_{p <= P} 1/p`.
pub fn prime_reciprocal_sum(p_max: u64) -> f64 {
    let terms: Vec<f64> = primes_up_to(p_max).iter().map(|&p| 1.0 / p as f64).collect();
    pairwise_sum(&terms)
}
