//! Short-window exponential sums of `λ`, batched frequency scans, certified
//! suprema over closed sets and their Cesàro / logarithmic scale averages.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{domain, Error, Result};
use crate::liouville::{DirichletCharacter, LiouvilleTable};
use crate::numeric::{
    frac_mul, harmonic_range, is_prime, pairwise_sum, pairwise_sum_c, poly_phase, unit,
};
use crate::setlib::IntervalSet;

/// Terms between exact phase re-synchronizations in the recurrences.
const RESYNC: usize = 64;

/// Default cap on evaluated grid points (and on scan lengths).
pub const DEFAULT_GRID_BUDGET: u64 = 1 << 24;

/// Window length `H`, phase degree `t` and an optional character twist.
#[derive(Clone, Debug)]
pub struct WindowSpec {
    pub len: usize,
    pub degree: u32,
    pub twist: Option<DirichletCharacter>,
}

impl WindowSpec {
    pub fn new(len: usize, degree: u32) -> Result<Self> {
        if len == 0 {
            return domain("window length H must be at least 1");
        }
        if degree == 0 {
            return domain("phase degree t must be at least 1");
        }
        Ok(Self {
            len,
            degree,
            twist: None,
        })
    }

    pub fn with_twist(mut self, chi: DirichletCharacter) -> Self {
        self.twist = Some(chi);
        self
    }

    /// Lipschitz constant `2 pi H^t` of the normalized sum in `alpha`.
    pub fn lipschitz(&self) -> f64 {
        TAU * (self.len as f64).powi(self.degree as i32)
    }

    /// Weights `λ(m+h) χ(m+h)` for `h = 1..=H`.
    pub fn weights(&self, table: &LiouvilleTable, m: u64) -> Result<Vec<Complex64>> {
        table.check_range(m + self.len as u64)?;
        Ok((1..=self.len as u64)
            .map(|h| {
                let n = m + h;
                let s = if table.is_negative(n) { -1.0 } else { 1.0 };
                match &self.twist {
                    None => Complex64::new(s, 0.0),
                    Some(chi) => chi.value(n) * s,
                }
            })
            .collect())
    }
}

/// `(1/H) sum_{h=1..H} λ(m+h) χ(m+h) e(alpha h^t)`, phases reduced exactly.
pub fn window_sum(
    table: &LiouvilleTable,
    m: u64,
    spec: &WindowSpec,
    alpha: f64,
) -> Result<Complex64> {
    let weights = spec.weights(table, m)?;
    let terms: Vec<Complex64> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * poly_phase(alpha, i as u64 + 1, spec.degree))
        .collect();
    Ok(pairwise_sum_c(&terms) / spec.len as f64)
}

/// Evaluates a fixed weighted window at many frequencies.
///
/// Phases run on multiplicative recurrences (first order for `t = 1`, second
/// order for `t = 2`) re-synchronized from exact reductions every
/// [`RESYNC`] terms; higher degrees use exact reduction per term.
#[derive(Clone, Debug)]
pub struct WindowEvaluator {
    weights: Vec<Complex64>,
    degree: u32,
    blocks: Vec<Complex64>,
}

impl WindowEvaluator {
    pub fn new(weights: Vec<Complex64>, degree: u32) -> Self {
        Self {
            blocks: Vec::with_capacity(weights.len() / RESYNC + 1),
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized window sum at `alpha`.
    pub fn eval(&mut self, alpha: f64) -> Complex64 {
        self.blocks.clear();
        let n = self.weights.len();
        match self.degree {
            1 => {
                let step = unit(frac_mul(1, alpha));
                for (b, chunk) in self.weights.chunks(RESYNC).enumerate() {
                    let h0 = (b * RESYNC + 1) as u64;
                    let mut z = unit(frac_mul(h0 as u128, alpha));
                    let mut acc = Complex64::new(0.0, 0.0);
                    for w in chunk {
                        acc += w * z;
                        z *= step;
                    }
                    self.blocks.push(acc);
                }
            }
            2 => {
                let twice = unit(frac_mul(2, alpha));
                for (b, chunk) in self.weights.chunks(RESYNC).enumerate() {
                    let h0 = (b * RESYNC + 1) as u64;
                    let mut z = poly_phase(alpha, h0, 2);
                    let mut r = unit(frac_mul(2 * h0 as u128 + 1, alpha));
                    let mut acc = Complex64::new(0.0, 0.0);
                    for w in chunk {
                        acc += w * z;
                        z *= r;
                        r *= twice;
                    }
                    self.blocks.push(acc);
                }
            }
            t => {
                for (b, chunk) in self.weights.chunks(RESYNC).enumerate() {
                    let h0 = (b * RESYNC + 1) as u64;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, w) in chunk.iter().enumerate() {
                        acc += w * poly_phase(alpha, h0 + i as u64, t);
                    }
                    self.blocks.push(acc);
                }
            }
        }
        pairwise_sum_c(&self.blocks) / n as f64
    }
}

/// `sum_{h=1..H} λ(m+h) e(h j / L)` for `j = 0..L`, via a zero-padded
/// length-`L` transform (unnormalized).
pub fn dft_frequency_scan(
    table: &LiouvilleTable,
    m: u64,
    h: usize,
    l: usize,
) -> Result<Vec<Complex64>> {
    if h == 0 {
        return domain("window length H must be at least 1");
    }
    if l < h {
        return domain(format!("scan length L = {l} is shorter than H = {h}"));
    }
    let weights = WindowSpec::new(h, 1)?.weights(table, m)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(l, FftDirection::Inverse);
    Ok(scan_weights(&weights, fft.as_ref()))
}

fn scan_weights(weights: &[Complex64], fft: &dyn Fft<f64>) -> Vec<Complex64> {
    let l = fft.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (i, w) in weights.iter().enumerate() {
        buf[(i + 1) % l] += w;
    }
    fft.process(&mut buf);
    buf
}

/// Certified bracket for `sup_{alpha in C} |window sum|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupEstimate {
    /// Largest evaluated value; every evaluation point lies in `C`.
    pub lower: f64,
    /// `lower + eps`.
    pub upper: f64,
    pub argmax: f64,
    pub grid_points: u64,
}

/// Reusable state for repeated certified suprema (FFT plans).
pub struct SupEngine {
    planner: FftPlanner<f64>,
    plans: BTreeMap<usize, Arc<dyn Fft<f64>>>,
    budget: u64,
}

impl Default for SupEngine {
    fn default() -> Self {
        Self::new(DEFAULT_GRID_BUDGET)
    }
}

impl SupEngine {
    pub fn new(budget: u64) -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: BTreeMap::new(),
            budget,
        }
    }

    fn plan(&mut self, l: usize) -> Arc<dyn Fft<f64>> {
        let planner = &mut self.planner;
        self.plans
            .entry(l)
            .or_insert_with(|| planner.plan_fft(l, FftDirection::Inverse))
            .clone()
    }

    /// Certified supremum of the window at `m` over `set`.
    pub fn certified_sup(
        &mut self,
        table: &LiouvilleTable,
        m: u64,
        spec: &WindowSpec,
        set: &IntervalSet,
        eps: f64,
    ) -> Result<SupEstimate> {
        let weights = spec.weights(table, m)?;
        self.sup_of_weights(weights, spec.degree, set, eps)
    }

    /// Certified supremum over `alpha in C` and over a finite grid of
    /// lower-order coefficient vectors `Q`, where each `Q = (q_1, ..)` adds
    /// the phase `sum_i q_i h^i` (`i < t`).
    pub fn certified_sup_lower_order(
        &mut self,
        table: &LiouvilleTable,
        m: u64,
        spec: &WindowSpec,
        set: &IntervalSet,
        eps: f64,
        lower_grid: &[Vec<f64>],
    ) -> Result<(SupEstimate, usize)> {
        if lower_grid.is_empty() {
            return domain("empty grid of lower-order coefficients");
        }
        let base = spec.weights(table, m)?;
        let plan = SupPlan::new(set, spec.len, spec.degree, eps, self.budget)?;
        let mut best: Option<(SupEstimate, usize)> = None;
        let mut total_points = 0;
        for (qi, coeffs) in lower_grid.iter().enumerate() {
            if coeffs.len() >= spec.degree as usize {
                return domain("lower-order polynomial must have degree below t");
            }
            let weights: Vec<Complex64> = base
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let h = i as u64 + 1;
                    let phase: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(d, &q)| frac_mul(crate::numeric::pow_u128(h, d as u32 + 1), q))
                        .sum();
                    w * unit(phase)
                })
                .collect();
            let est = self.evaluate_plan(weights, &plan);
            total_points += est.grid_points;
            if best.is_none_or(|(b, _)| est.lower > b.lower) {
                best = Some((est, qi));
            }
        }
        let (mut est, qi) = best.expect("grid is nonempty");
        est.grid_points = total_points;
        Ok((est, qi))
    }

    fn sup_of_weights(
        &mut self,
        weights: Vec<Complex64>,
        degree: u32,
        set: &IntervalSet,
        eps: f64,
    ) -> Result<SupEstimate> {
        let plan = SupPlan::new(set, weights.len(), degree, eps, self.budget)?;
        Ok(self.evaluate_plan(weights, &plan))
    }

    /// Evaluates normalized window weights on a prepared grid.
    pub fn evaluate_plan(&mut self, weights: Vec<Complex64>, plan: &SupPlan) -> SupEstimate {
        let h = weights.len();
        let mut eval = WindowEvaluator::new(weights, plan.degree);
        let mut best = (f64::NEG_INFINITY, 0.0);
        let consider = |value: f64, alpha: f64, best: &mut (f64, f64)| {
            if value > best.0 {
                *best = (value, alpha);
            }
        };
        match &plan.route {
            Route::Scan { len, ranges, mids } => {
                let fft = self.plan(*len);
                let scan = scan_weights(&eval.weights, fft.as_ref());
                let lf = *len as f64;
                for &(j0, j1) in ranges {
                    for j in j0..=j1 {
                        let v = scan[(j % *len as u64) as usize].norm() / h as f64;
                        consider(v, j as f64 / lf, &mut best);
                    }
                }
                for &mid in mids {
                    consider(eval.eval(mid).norm(), mid, &mut best);
                }
            }
            Route::Direct(points) => {
                for &alpha in points {
                    consider(eval.eval(alpha).norm(), alpha, &mut best);
                }
            }
        }
        SupEstimate {
            lower: best.0,
            upper: best.0 + plan.eps,
            argmax: best.1,
            grid_points: plan.grid_points,
        }
    }
}

#[derive(Clone, Debug)]
enum Route {
    /// Lattice `j/len` points by `[j0, j1]` range, plus midpoints of
    /// intervals holding no lattice point.
    Scan {
        len: usize,
        ranges: Vec<(u64, u64)>,
        mids: Vec<f64>,
    },
    Direct(Vec<f64>),
}

/// Evaluation points in `C` such that every point of `C` lies within
/// `delta = eps / (2 pi H^t)` of one of them. Depends only on the set, the
/// window shape and `eps`, so one plan serves every `m`.
#[derive(Clone, Debug)]
pub struct SupPlan {
    degree: u32,
    eps: f64,
    grid_points: u64,
    route: Route,
}

/// Walks `C` with spacing `delta`: an interval starts a fresh run at its
/// left end `a + i delta`, unless the previous point already reaches into
/// it; intervals inside the reach of the last point are skipped.
fn direct_grid(intervals: &[(f64, f64)], delta: f64, budget: u64, store: bool) -> Result<(u64, Vec<f64>)> {
    let mut points = Vec::new();
    let mut count = 0u64;
    let mut reach = f64::NEG_INFINITY;
    let half = 0.5 * delta;
    for &(a, b) in intervals {
        if b <= reach {
            continue;
        }
        let mut emit = |q: f64, count: &mut u64| -> Result<()> {
            *count += 1;
            if *count > budget {
                return Err(Error::Resource {
                    needed: *count,
                    budget,
                });
            }
            if store {
                points.push(q);
            }
            Ok(())
        };
        if a > reach {
            let mut i = 0u64;
            loop {
                let q = (a + i as f64 * delta).min(b);
                emit(q, &mut count)?;
                reach = q + half;
                if q >= b || reach >= b {
                    break;
                }
                i += 1;
            }
        } else {
            let mut q = (reach + half).min(b);
            loop {
                emit(q, &mut count)?;
                reach = q + half;
                if q >= b || reach >= b {
                    break;
                }
                q = (q + delta).min(b);
            }
        }
    }
    Ok((count, points))
}

impl SupPlan {
    pub fn new(set: &IntervalSet, window: usize, degree: u32, eps: f64, budget: u64) -> Result<Self> {
        if !(eps > 0.0) {
            return domain("tolerance eps must be positive");
        }
        if set.is_empty() {
            return domain("supremum over an empty set");
        }
        if window == 0 || degree == 0 {
            return domain("window length and degree must be positive");
        }
        let h = window as f64;
        let delta = eps / (TAU * h.powi(degree as i32));
        let intervals = set.approx();
        let scan_len = (1.0 / delta).ceil();
        let scan_ok = degree == 1 && scan_len <= budget as f64;
        let direct_count = direct_grid(intervals, delta, budget, false).map(|(c, _)| c);
        let use_scan = scan_ok && {
            let l = (scan_len as u64).next_power_of_two() as f64;
            match &direct_count {
                Ok(c) => 1.5 * l * l.log2() < *c as f64 * h,
                Err(_) => true,
            }
        };
        let (grid_points, route) = if use_scan {
            let len = (scan_len as u64).next_power_of_two() as usize;
            let lf = len as f64;
            let (mut ranges, mut mids) = (Vec::new(), Vec::new());
            let mut count = 0u64;
            for &(a, b) in intervals {
                let j0 = (a * lf).ceil() as u64;
                let j1 = (b * lf).floor() as u64;
                if j0 <= j1 {
                    ranges.push((j0, j1));
                    count += j1 - j0 + 1;
                } else {
                    // No lattice point inside: the midpoint is within 1/(2L).
                    mids.push(0.5 * (a + b));
                    count += 1;
                }
            }
            (count, Route::Scan { len, ranges, mids })
        } else {
            direct_count?;
            let (count, points) = direct_grid(intervals, delta, budget, true)?;
            (count, Route::Direct(points))
        };
        Ok(Self {
            degree,
            eps,
            grid_points,
            route,
        })
    }

    pub fn grid_points(&self) -> u64 {
        self.grid_points
    }

    pub fn uses_scan(&self) -> bool {
        matches!(self.route, Route::Scan { .. })
    }
}

/// One-shot [`SupEngine::certified_sup`] with the default budget.
pub fn certified_sup(
    table: &LiouvilleTable,
    m: u64,
    spec: &WindowSpec,
    set: &IntervalSet,
    eps: f64,
) -> Result<SupEstimate> {
    SupEngine::default().certified_sup(table, m, spec, set, eps)
}

/// Scale-averaging mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AverageMode {
    Cesaro,
    Logarithmic,
}

impl AverageMode {
    pub fn name(self) -> &'static str {
        match self {
            AverageMode::Cesaro => "cesaro",
            AverageMode::Logarithmic => "log",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cesaro" => Ok(AverageMode::Cesaro),
            "log" | "logarithmic" => Ok(AverageMode::Logarithmic),
            other => domain(format!("unknown averaging mode {other:?}")),
        }
    }
}

/// Which `m <= M` enter an average.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Every `m = 1..=M`.
    Exhaustive,
    /// `S` strata of `[1, M]` (equal width for Cesàro, geometric for
    /// logarithmic), one representative each, weighted by the stratum's
    /// total weight. Falls back to exhaustive when `S >= M`.
    Strata(usize),
}

/// Representative points and weights for `E_{m <= M}` in `mode`.
pub fn scale_samples(scale: u64, mode: AverageMode, sampling: Sampling) -> Vec<(u64, f64)> {
    let weight = |m: u64| match mode {
        AverageMode::Cesaro => 1.0,
        AverageMode::Logarithmic => 1.0 / m as f64,
    };
    let strata = match sampling {
        Sampling::Strata(s) if (s as u64) < scale && s > 0 => s as u64,
        _ => return (1..=scale).map(|m| (m, weight(m))).collect(),
    };
    let mut bounds: Vec<u64> = (0..=strata)
        .map(|i| match mode {
            AverageMode::Cesaro => (i as u128 * scale as u128 / strata as u128) as u64,
            AverageMode::Logarithmic => {
                if i == 0 {
                    0
                } else {
                    ((scale as f64).powf(i as f64 / strata as f64).round() as u64).min(scale)
                }
            }
        })
        .collect();
    bounds.dedup();
    bounds
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            match mode {
                AverageMode::Cesaro => ((lo + 1 + hi) / 2, (hi - lo) as f64),
                AverageMode::Logarithmic => {
                    let rep = (((lo + 1) as f64 * hi as f64).sqrt().round() as u64).clamp(lo + 1, hi);
                    (rep, harmonic_range(lo, hi))
                }
            }
        })
        .collect()
}

/// Options for [`average_sup`].
#[derive(Clone, Copy, Debug)]
pub struct AverageOptions {
    pub eps: f64,
    pub budget: u64,
    pub sampling: Sampling,
    pub workers: usize,
}

impl Default for AverageOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            budget: DEFAULT_GRID_BUDGET,
            sampling: Sampling::Exhaustive,
            workers: 1,
        }
    }
}

/// Averaged certified suprema, one value per scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleAverageReport {
    pub scales: Vec<u64>,
    pub mode: AverageMode,
    pub window: usize,
    pub degree: u32,
    pub values: Vec<f64>,
    pub grid_points_mean: Vec<f64>,
}

impl ScaleAverageReport {
    pub const CSV_HEADER: &'static str = "M,mode,H,t,value,grid_points_mean";

    /// Rows without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.scales.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m,
                self.mode.name(),
                self.window,
                self.degree,
                self.values[i],
                self.grid_points_mean[i]
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }
}

/// Runs `f` inside a pool of `workers` threads.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// `E_{m <= M}` (Cesàro or logarithmic) of the certified upper bound for
/// `sup_{alpha in C}` of the window at `m`, for each `M` in `scales`.
///
/// Per-`m` values are computed in parallel and reduced in a fixed order by
/// pairwise summation, so the result does not depend on the worker count.
pub fn average_sup(
    table: &LiouvilleTable,
    set: &IntervalSet,
    spec: &WindowSpec,
    scales: &[u64],
    mode: AverageMode,
    options: &AverageOptions,
) -> Result<ScaleAverageReport> {
    let Some(&max_scale) = scales.iter().max() else {
        return domain("empty scale list");
    };
    if scales.contains(&0) {
        return domain("scales must be positive");
    }
    table.check_range(max_scale + spec.len as u64)?;
    let plans: Vec<Vec<(u64, f64)>> = scales
        .iter()
        .map(|&s| scale_samples(s, mode, options.sampling))
        .collect();
    let mut needed: Vec<u64> = plans.iter().flatten().map(|&(m, _)| m).collect();
    needed.sort_unstable();
    needed.dedup();
    let plan = SupPlan::new(set, spec.len, spec.degree, options.eps, options.budget)?;
    let computed: Vec<Result<(f64, u64)>> = with_workers(options.workers, || {
        needed
            .par_iter()
            .map_init(
                || SupEngine::new(options.budget),
                |engine, &m| {
                    let weights = spec.weights(table, m)?;
                    let e = engine.evaluate_plan(weights, &plan);
                    Ok((e.upper, e.grid_points))
                },
            )
            .collect()
    });
    let mut values = BTreeMap::new();
    for (m, r) in needed.iter().zip(computed) {
        values.insert(*m, r?);
    }
    let mut out_values = Vec::with_capacity(scales.len());
    let mut out_points = Vec::with_capacity(scales.len());
    for plan in &plans {
        let weighted: Vec<f64> = plan.iter().map(|&(m, w)| w * values[&m].0).collect();
        let weights: Vec<f64> = plan.iter().map(|&(_, w)| w).collect();
        out_values.push(pairwise_sum(&weighted) / pairwise_sum(&weights));
        let pts: Vec<f64> = plan.iter().map(|&(m, _)| values[&m].1 as f64).collect();
        out_points.push(pairwise_sum(&pts) / pts.len() as f64);
    }
    Ok(ScaleAverageReport {
        scales: scales.to_vec(),
        mode,
        window: spec.len,
        degree: spec.degree,
        values: out_values,
        grid_points_mean: out_points,
    })
}

/// Direct window sum and its `p`-dilated counterpart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElliottRecord {
    /// `E_{x < n <= x+H} λ(n) e(alpha n)`.
    pub direct: Complex64,
    /// `E_{x/p < m <= (x+H)/p} λ(m) e(alpha p m)`.
    pub dilated: Complex64,
    /// `|direct + dilated|`.
    pub defect: f64,
}

/// Compares a window sum with its dilation by a prime `p`; complete
/// multiplicativity makes `direct ≈ -dilated` for typical `p`.
pub fn elliott_compare(
    table: &LiouvilleTable,
    x: u64,
    h: u64,
    alpha: f64,
    p: u64,
) -> Result<ElliottRecord> {
    if !is_prime(p) {
        return domain(format!("{p} is not prime"));
    }
    if !(x >= h && h >= p) {
        return domain("need x >= H >= p >= 2");
    }
    table.check_range(x + h)?;
    let direct_terms: Vec<Complex64> = (x + 1..=x + h)
        .map(|n| unit(frac_mul(n as u128, alpha)) * table.lambda(n) as f64)
        .collect();
    let direct = pairwise_sum_c(&direct_terms) / h as f64;
    let (lo, hi) = (x / p + 1, (x + h) / p);
    let dilated_terms: Vec<Complex64> = (lo..=hi)
        .map(|m| unit(frac_mul(p as u128 * m as u128, alpha)) * table.lambda(m) as f64)
        .collect();
    let dilated = if dilated_terms.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        pairwise_sum_c(&dilated_terms) / dilated_terms.len() as f64
    };
    Ok(ElliottRecord {
        direct,
        dilated,
        defect: (direct + dilated).norm(),
    })
}
