//! Two-point correlations of `λ` and the second-moment frequency harness.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::liouville::LiouvilleTable;
use crate::numeric::{frac_mul, pow_u128, unit};

/// `E_{m <= M} λ(m) λ(m+h)` at several scales.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub shift: i64,
    pub scales: Vec<u64>,
    /// Integer sums `sum_{m <= M} λ(m) λ(m+h)`.
    pub sums: Vec<i64>,
    pub values: Vec<f64>,
}

impl CorrelationReport {
    pub const CSV_HEADER: &'static str = "h,M,value";

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (m, v) in self.scales.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{},{}", self.shift, m, v);
        }
        out
    }
}

/// `sum λ(m) λ(m+h)` over `lo < m <= hi` (terms with `m + h < 1` skipped).
pub fn correlation_sum(table: &LiouvilleTable, h: i64, lo: u64, hi: u64) -> i64 {
    let lo = if h < 0 { lo.max(h.unsigned_abs()) } else { lo };
    if hi <= lo {
        return 0;
    }
    let mut mismatches = 0u64;
    let mut offset = lo;
    while offset < hi {
        let take = (hi - offset).min(64);
        let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
        let shifted = offset.wrapping_add_signed(h);
        mismatches += ((table.word_at(offset) ^ table.word_at(shifted)) & mask).count_ones() as u64;
        offset += take;
    }
    (hi - lo) as i64 - 2 * mismatches as i64
}

/// Two-point correlation `E_{m <= M} λ(m) λ(m+h)` for each `M`, accumulated
/// in integers and divided once.
pub fn two_point(table: &LiouvilleTable, h: i64, scales: &[u64]) -> Result<CorrelationReport> {
    if h == 0 {
        return domain("shift h = 0 gives the constant correlation 1");
    }
    if scales.is_empty() || scales.contains(&0) {
        return domain("scales must be a nonempty list of positive integers");
    }
    let max = *scales.iter().max().expect("nonempty");
    table.check_range(max.saturating_add_signed(h.max(0)))?;
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by_key(|&i| scales[i]);
    let mut sums = vec![0i64; scales.len()];
    let (mut done, mut acc) = (0u64, 0i64);
    for i in order {
        acc += correlation_sum(table, h, done, scales[i]);
        done = scales[i];
        sums[i] = acc;
    }
    let values = sums
        .iter()
        .zip(scales)
        .map(|(&s, &m)| s as f64 / m as f64)
        .collect();
    Ok(CorrelationReport {
        shift: h,
        scales: scales.to_vec(),
        sums,
        values,
    })
}

/// Outcome of the second-moment harness at one `(H, eps, M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyReport {
    pub eps: f64,
    pub window: usize,
    pub scale: u64,
    pub exceed_count: u64,
    pub empirical_fraction: f64,
    pub second_moment_bound: f64,
}

impl FrequencyReport {
    pub const CSV_HEADER: &'static str = "H,eps,M,empirical,bound";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}\n",
            self.window, self.eps, self.scale, self.empirical_fraction, self.second_moment_bound
        )
    }
}

/// Which `m = 0..M-1` satisfy `|(1/H) sum_h λ(m+h) a(h)| >= eps`.
fn exceedances(signs: &[f64], phases: &[Complex64], eps: f64, count: u64) -> Vec<bool> {
    let h = phases.len();
    let re: Vec<f64> = phases.iter().map(|z| z.re).collect();
    let im: Vec<f64> = phases.iter().map(|z| z.im).collect();
    let threshold = eps * eps * (h * h) as f64;
    (0..count as usize)
        .map(|m| {
            let window = &signs[m..m + h];
            let (mut sr, mut si) = (0.0, 0.0);
            for ((s, a), b) in window.iter().zip(&re).zip(&im) {
                sr += s * a;
                si += s * b;
            }
            sr * sr + si * si >= threshold
        })
        .collect()
}

fn check_harness(table: &LiouvilleTable, h: usize, eps: f64, scale: u64) -> Result<()> {
    if !(eps > 0.0) {
        return domain("threshold eps must be positive");
    }
    if h == 0 || scale == 0 {
        return domain("H and M must be positive");
    }
    table.check_range(scale + h as u64)
}

/// Fraction of `0 <= m < M` whose weighted window average reaches `eps`,
/// against the Chebyshev bound
/// `(eps H)^-2 sum_{|d| < H} (H - |d|) |c(d)| + eps^-2 H / M`
/// with `c(d)` the two-point correlations at scale `M`.
pub fn chebyshev_harness(
    table: &LiouvilleTable,
    h: usize,
    eps: f64,
    phases: &[Complex64],
    scale: u64,
) -> Result<FrequencyReport> {
    check_harness(table, h, eps, scale)?;
    if phases.len() != h {
        return domain(format!("{} phases supplied for H = {h}", phases.len()));
    }
    if phases.iter().any(|z| !(z.norm() <= 1.0 + 1e-12)) {
        return domain("phases must have modulus at most 1");
    }
    let signs = table.signs_f64(0, scale as usize + h)?;
    let count = exceedances(&signs, phases, eps, scale)
        .into_iter()
        .filter(|&b| b)
        .count() as u64;
    let hf = h as f64;
    let mut weighted = hf;
    for d in 1..h as i64 {
        let c = correlation_sum(table, d, 0, scale) as f64 / scale as f64;
        weighted += 2.0 * (hf - d as f64) * c.abs();
    }
    let bound = weighted / (eps * hf).powi(2) + hf / (eps * eps * scale as f64);
    Ok(FrequencyReport {
        eps,
        window: h,
        scale,
        exceed_count: count,
        empirical_fraction: count as f64 / scale as f64,
        second_moment_bound: bound,
    })
}

/// Phases `e(alpha h^t)` for `h = 1..=H`.
pub fn polynomial_phases(alpha: f64, h: usize, t: u32) -> Vec<Complex64> {
    (1..=h as u64)
        .map(|k| unit(frac_mul(pow_u128(k, t), alpha)))
        .collect()
}

/// Joint and per-frequency exceedance fractions over a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct UnionBoundReport {
    pub joint_count: u64,
    pub single_counts: Vec<u64>,
    pub joint_fraction: f64,
    pub single_fractions: Vec<f64>,
    pub single_sum: f64,
}

/// Fraction of `0 <= m < M` with `max_j |(1/H) sum_h λ(m+h) e(alpha_j h^t)| >= eps`.
pub fn union_bound_frequency(
    table: &LiouvilleTable,
    grid: &[f64],
    h: usize,
    t: u32,
    eps: f64,
    scale: u64,
) -> Result<UnionBoundReport> {
    if grid.is_empty() {
        return domain("empty frequency grid");
    }
    check_harness(table, h, eps, scale)?;
    let signs = table.signs_f64(0, scale as usize + h)?;
    let mut joint = vec![false; scale as usize];
    let mut single_counts = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let flags = exceedances(&signs, &polynomial_phases(alpha, h, t), eps, scale);
        single_counts.push(flags.iter().filter(|&&b| b).count() as u64);
        for (j, f) in joint.iter_mut().zip(flags) {
            *j |= f;
        }
    }
    let joint_count = joint.iter().filter(|&&b| b).count() as u64;
    let single_fractions: Vec<f64> = single_counts
        .iter()
        .map(|&c| c as f64 / scale as f64)
        .collect();
    Ok(UnionBoundReport {
        joint_count,
        joint_fraction: joint_count as f64 / scale as f64,
        single_sum: single_counts.iter().sum::<u64>() as f64 / scale as f64,
        single_counts,
        single_fractions,
    })
}
