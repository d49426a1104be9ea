//! Closed subsets of the circle as finite unions of intervals with exact
//! rational endpoints, covering numbers, dimension estimates, intersective
//! Cantor constructions and rigidity checks.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};

/// Default cap on the number of intervals a construction may produce.
pub const DEFAULT_INTERVAL_CAP: u64 = 2_000_000;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

/// Exact conversion of a finite double.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p/q`, `p/2^k`, an integer or a decimal (optionally with an
/// exponent) into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Format(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q = q.trim();
        let den: BigInt = match q.split_once('^') {
            Some((base, exp)) => {
                let base: BigInt = base.trim().parse().map_err(|_| bad())?;
                let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
                num_traits::pow(base, exp as usize)
            }
            None => q.parse().map_err(|_| bad())?,
        };
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut num: BigInt = all.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Formats as an integer, `p/q`, or `p/2^k` once the dyadic denominator
/// reaches `2^8`.
pub fn format_rational(x: &BigRational) -> String {
    let d = x.denom();
    if d.is_one() {
        return x.numer().to_string();
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if tz >= 8 && (d >> tz as usize).is_one() {
        format!("{}/2^{}", x.numer(), tz)
    } else {
        format!("{}/{}", x.numer(), d)
    }
}

/// A finite union of disjoint, sorted closed intervals inside `[0, 1]`.
#[derive(Clone, Debug)]
pub struct IntervalSet {
    intervals: Vec<(BigRational, BigRational)>,
    approx: Vec<(f64, f64)>,
}

impl PartialEq for IntervalSet {
    fn eq(&self, other: &Self) -> bool {
        self.intervals == other.intervals
    }
}

impl Eq for IntervalSet {}

impl IntervalSet {
    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
            approx: Vec::new(),
        }
    }

    /// The whole circle `[0, 1]`.
    pub fn full() -> Self {
        Self::from_sorted(vec![(BigRational::zero(), BigRational::one())])
    }

    pub fn singleton_f64(x: f64) -> Result<Self> {
        Self::from_f64(&[(x, x)])
    }

    pub fn from_f64(raw: &[(f64, f64)]) -> Result<Self> {
        let raw = raw
            .iter()
            .map(|&(a, b)| Ok((rational_from_f64(a)?, rational_from_f64(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::normalize(raw)
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn normalize(mut raw: Vec<(BigRational, BigRational)>) -> Result<Self> {
        let zero = BigRational::zero();
        let one = BigRational::one();
        for (a, b) in &raw {
            if a > b {
                return domain(format!("interval [{a}, {b}] has a > b"));
            }
            if *a < zero || *b > one {
                return domain(format!("interval [{a}, {b}] leaves [0, 1]"));
            }
        }
        raw.sort();
        let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        Ok(Self::from_sorted(merged))
    }

    /// Builds from intervals already sorted and disjoint.
    fn from_sorted(intervals: Vec<(BigRational, BigRational)>) -> Self {
        let approx = intervals.iter().map(|(a, b)| (to_f64(a), to_f64(b))).collect();
        Self { intervals, approx }
    }

    /// The arc of radius `r` around `c`, split at `1` when it wraps.
    pub fn arc(c: &BigRational, r: &BigRational) -> Result<Self> {
        let mut pieces = Vec::new();
        push_arc(&mut pieces, c, r);
        Self::normalize(pieces)
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    /// Endpoints rounded to the nearest doubles.
    pub fn approx(&self) -> &[(f64, f64)] {
        &self.approx
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> BigRational {
        self.intervals
            .iter()
            .fold(BigRational::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn measure_f64(&self) -> f64 {
        to_f64(&self.measure())
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        let i = self.intervals.partition_point(|(_, b)| b < x);
        self.intervals.get(i).is_some_and(|(a, _)| a <= x)
    }

    /// Whether every interval of `self` lies in one interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|(a, b)| {
            let i = other.intervals.partition_point(|(_, ob)| ob < a);
            other
                .intervals
                .get(i)
                .is_some_and(|(oa, ob)| oa <= a && b <= ob)
        })
    }

    /// Parses one `a,b` pair per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected `a,b`", no + 1)))?;
            raw.push((parse_rational(a)?, parse_rational(b)?));
        }
        Self::normalize(raw)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.intervals {
            let _ = writeln!(out, "{},{}", format_rational(a), format_rational(b));
        }
        out
    }

    /// Least number of closed intervals of length `r` covering the set.
    pub fn covering_number(&self, r: f64) -> Result<u64> {
        if !(r > 0.0 && r <= 1.0) {
            return domain("cover length r must lie in (0, 1]");
        }
        self.covering_number_exact(&rational_from_f64(r)?)
    }

    /// [`Self::covering_number`] for an exact rational length.
    pub fn covering_number_exact(&self, r: &BigRational) -> Result<u64> {
        if !r.is_positive() {
            return domain("cover length r must be positive");
        }
        let mut count: u64 = 0;
        let mut covered_to: Option<BigRational> = None;
        for (a, b) in &self.intervals {
            let (start, fresh) = match &covered_to {
                Some(c) if c >= a => {
                    if c >= b {
                        continue;
                    }
                    (c.clone(), false)
                }
                _ => (a.clone(), true),
            };
            let need = ((b - &start) / r).ceil().to_integer();
            let mut k = need.to_u64().unwrap_or(u64::MAX);
            if fresh && k == 0 {
                k = 1;
            }
            count = count.saturating_add(k);
            covered_to = Some(start + r * BigRational::from_integer(BigInt::from(k)));
        }
        Ok(count)
    }

    /// Least-squares slope of `log N_r` against `log(1/r)`.
    pub fn box_dimension_estimate(&self, schedule: &[f64]) -> Result<f64> {
        let exact = schedule
            .iter()
            .map(|&r| rational_from_f64(r))
            .collect::<Result<Vec<_>>>()?;
        self.box_dimension_estimate_exact(&exact)
    }

    pub fn box_dimension_estimate_exact(&self, schedule: &[BigRational]) -> Result<f64> {
        if self.is_empty() {
            return domain("dimension of the empty set");
        }
        if schedule.len() < 3 {
            return domain("schedule needs at least 3 scales");
        }
        let one = BigRational::one();
        if schedule.iter().any(|r| !r.is_positive() || *r > one)
            || schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return domain("schedule must be strictly decreasing within (0, 1]");
        }
        let logs: Vec<f64> = schedule.iter().map(|r| -ln_rational(r)).collect();
        if logs[logs.len() - 1] - logs[0] < 2.0 * std::f64::consts::LN_10 - 1e-9 {
            return domain("schedule must span at least two decades");
        }
        let counts = schedule
            .iter()
            .map(|r| self.covering_number_exact(r).map(|n| (n as f64).ln()))
            .collect::<Result<Vec<_>>>()?;
        Ok(least_squares_slope(&logs, &counts))
    }
}

fn push_arc(out: &mut Vec<(BigRational, BigRational)>, c: &BigRational, r: &BigRational) {
    let zero = BigRational::zero();
    let one = BigRational::one();
    let lo = c - r;
    let hi = c + r;
    if lo < zero {
        out.push((lo + &one, one.clone()));
        out.push((zero, hi.min(one)));
    } else if hi > one {
        out.push((lo, one.clone()));
        out.push((zero, hi - one));
    } else {
        out.push((lo, hi));
    }
}

/// Natural logarithm of a positive rational, safe for huge numerators.
pub fn ln_rational(x: &BigRational) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    (x >> shift as usize).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Level `level` of the middle-thirds Cantor set (`2^level` intervals).
pub fn middle_thirds(level: u32) -> Result<IntervalSet> {
    if level > 20 {
        return Err(Error::Capacity {
            what: "middle-thirds level",
            requested: level as u64,
            cap: 20,
        });
    }
    let den = BigInt::from(3u64.pow(level));
    let mut starts = vec![BigInt::zero()];
    for l in 0..level {
        let step = BigInt::from(2 * 3u64.pow(level - l - 1));
        starts = starts
            .into_iter()
            .flat_map(|s| [s.clone(), s + &step])
            .collect();
    }
    let intervals = starts
        .into_iter()
        .map(|s| {
            (
                BigRational::new(s.clone(), den.clone()),
                BigRational::new(s + 1, den.clone()),
            )
        })
        .collect();
    Ok(IntervalSet::from_sorted(intervals))
}

/// `{alpha : ||2^k alpha|| <= 1/ell}`.
pub fn dyadic_sublevel(k: u32, ell: u64) -> Result<IntervalSet> {
    if ell < 2 {
        return domain("ell must be at least 2");
    }
    neighbourhoods(k, &rat(1, ell as i64), DEFAULT_INTERVAL_CAP)
}

fn neighbourhoods(k: u32, delta: &BigRational, cap: u64) -> Result<IntervalSet> {
    if k >= 63 || 1u64 << k > cap {
        return Err(Error::Capacity {
            what: "interval count",
            requested: if k >= 63 { u64::MAX } else { 1 << k },
            cap,
        });
    }
    let den = pow2(k);
    let r = delta / BigRational::from_integer(den.clone());
    let mut pieces = Vec::with_capacity((1usize << k) + 1);
    for j in 0..1i64 << k {
        push_arc(&mut pieces, &BigRational::new(BigInt::from(j), den.clone()), &r);
    }
    IntervalSet::normalize(pieces)
}

/// Scales `(k_n)` and neighbourhood radii `(delta_n)` of an intersective
/// Cantor construction, indexed from level 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorSpec {
    levels: Vec<(u32, BigRational)>,
}

impl CantorSpec {
    /// Validates monotonicity and the two-children feasibility condition.
    pub fn new(levels: Vec<(u32, BigRational)>) -> Result<Self> {
        if levels.is_empty() {
            return domain("a Cantor spec needs at least one level");
        }
        let zero = BigRational::zero();
        let half = rat(1, 2);
        let two = BigRational::from_integer(BigInt::from(2));
        for (n, (k, delta)) in levels.iter().enumerate() {
            let fail = |reason: String| Err(Error::Construction { level: n, reason });
            if *k == 0 {
                return fail("k must be positive".into());
            }
            if *delta <= zero || *delta >= half {
                return fail(format!("delta = {delta} must lie in (0, 1/2)"));
            }
            if n > 0 {
                let (pk, pd) = &levels[n - 1];
                if k <= pk {
                    return fail(format!("k = {k} must exceed previous k = {pk}"));
                }
                if delta >= pd {
                    return fail(format!("delta = {delta} must be below previous delta = {pd}"));
                }
                let m = pd * BigRational::from_integer(pow2(k - pk));
                if m < two {
                    return fail(format!(
                        "m = delta_prev * 2^(k - k_prev) = {} < 2",
                        to_f64(&m)
                    ));
                }
            }
        }
        Ok(Self { levels })
    }

    /// `k_n = n 2^n`, `delta_n = 1/(n+2)` for `n = 1..=6`.
    pub fn default_demo() -> Self {
        let levels = (1..=6u32)
            .map(|n| (n << n, rat(1, n as i64 + 2)))
            .collect();
        Self::new(levels).expect("demo spec is feasible")
    }

    /// Reads `level.<n>.k` and `level.<n>.delta` entries; levels must be
    /// numbered contiguously from 0. Other keys are ignored.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut ks: Vec<Option<u32>> = Vec::new();
        let mut ds: Vec<Option<BigRational>> = Vec::new();
        for (key, value) in entries {
            let Some(rest) = key.strip_prefix("level.") else {
                continue;
            };
            let (idx, field) = rest
                .split_once('.')
                .ok_or_else(|| Error::Format(format!("bad key {key:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Format(format!("bad level index in {key:?}")))?;
            if idx >= 64 {
                return Err(Error::Format(format!("level index {idx} too large")));
            }
            if ks.len() <= idx {
                ks.resize(idx + 1, None);
                ds.resize(idx + 1, None);
            }
            match field {
                "k" => {
                    ks[idx] = Some(value.trim().parse().map_err(|_| {
                        Error::Format(format!("{key}: {value:?} is not an integer"))
                    })?)
                }
                "delta" => ds[idx] = Some(parse_rational(value)?),
                _ => return Err(Error::Format(format!("unknown field in {key:?}"))),
            }
        }
        let levels = ks
            .into_iter()
            .zip(ds)
            .enumerate()
            .map(|(n, pair)| match pair {
                (Some(k), Some(d)) => Ok((k, d)),
                _ => Err(Error::Format(format!("level {n} needs both k and delta"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[(u32, BigRational)] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `m_n = delta_{n-1} 2^(k_n - k_{n-1})`, for `n >= 1`.
    pub fn children_bound(&self, n: usize) -> Result<f64> {
        if n == 0 || n >= self.levels.len() {
            return domain(format!("level {n} has no parent level"));
        }
        Ok(self.ln_m(n).exp())
    }

    fn ln_m(&self, n: usize) -> f64 {
        let (k, _) = &self.levels[n];
        let (pk, pd) = &self.levels[n - 1];
        ln_rational(pd) + (k - pk) as f64 * std::f64::consts::LN_2
    }

    /// `log(m_1 ... m_{n-1}) / -log(m_n eps_n)` with
    /// `eps_n = (1 - 2 delta_n) / 2^k_n`.
    pub fn hausdorff_lower_bound(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return domain("the dimension bound needs n >= 2");
        }
        if n >= self.levels.len() {
            return domain(format!("level {n} is not configured"));
        }
        let num: f64 = (1..n).map(|i| self.ln_m(i)).sum();
        let (k, d) = &self.levels[n];
        let ln_eps =
            ln_rational(&(BigRational::one() - d * BigRational::from_integer(BigInt::from(2))))
                - *k as f64 * std::f64::consts::LN_2;
        Ok(num / -(self.ln_m(n) + ln_eps))
    }

    pub fn level(&self, n: usize) -> Result<IntervalSet> {
        self.level_capped(n, DEFAULT_INTERVAL_CAP)
    }

    /// Level `n` of the construction: closed `delta_n / 2^k_n` neighbourhoods
    /// of the lattice points `r / 2^k_n` lying in level `n - 1`, clipped to
    /// their parent interval.
    pub fn level_capped(&self, n: usize, cap: u64) -> Result<IntervalSet> {
        if n >= self.levels.len() {
            return domain(format!(
                "level {n} requested but only {} configured",
                self.levels.len()
            ));
        }
        let (k0, d0) = &self.levels[0];
        let mut current = neighbourhoods(*k0, d0, cap)?;
        for level in 1..=n {
            current = self.refine(&current, level, cap)?;
        }
        Ok(current)
    }

    fn refine(&self, parent: &IntervalSet, level: usize, cap: u64) -> Result<IntervalSet> {
        let (k, delta) = &self.levels[level];
        let den = pow2(*k);
        let scale = BigRational::from_integer(den.clone());
        let radius = delta / &scale;
        let one = BigRational::one();
        let zero = BigRational::zero();
        let wraps = parent.intervals.len() > 1
            && parent.intervals[0].0 == zero
            && parent.intervals[parent.intervals.len() - 1].1 == one;
        let last = parent.intervals.len() - 1;
        let mut ranges = Vec::with_capacity(parent.intervals.len());
        let mut wrap_count = 0u64;
        let mut total = 0u64;
        for (i, (a, b)) in parent.intervals.iter().enumerate() {
            let lo = (a * &scale).ceil().to_integer();
            let hi = (b * &scale).floor().to_integer();
            let count = if hi >= lo {
                (&hi - &lo + 1u32).to_u64().unwrap_or(u64::MAX)
            } else {
                0
            };
            if wraps && (i == 0 || i == last) {
                wrap_count += count;
            } else if count < 2 {
                return Err(Error::Construction {
                    level,
                    reason: format!("parent interval [{a}, {b}] holds {count} < 2 children"),
                });
            }
            total = total.saturating_add(count);
            ranges.push((lo, hi));
        }
        // The two halves of the wrapped parent share the lattice point 0 = 1.
        if wraps && wrap_count.saturating_sub(1) < 2 {
            return Err(Error::Construction {
                level,
                reason: "wrapped parent interval around 0 holds < 2 children".into(),
            });
        }
        if total > cap {
            return Err(Error::Capacity {
                what: "interval count",
                requested: total,
                cap,
            });
        }
        // Lattice spacing exceeds 2 delta_n / 2^k_n, so the clipped
        // neighbourhoods come out sorted and disjoint.
        let mut children = Vec::with_capacity(total as usize);
        for ((a, b), (lo, hi)) in parent.intervals.iter().zip(ranges) {
            let mut r = lo;
            while r <= hi {
                let c = BigRational::new(r.clone(), den.clone());
                let lo_end = (&c - &radius).max(a.clone());
                let hi_end = (&c + &radius).min(b.clone());
                children.push((lo_end, hi_end));
                r += 1;
            }
        }
        Ok(IntervalSet::from_sorted(children))
    }
}

/// A sequence `(q_n)` of positive integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigiditySequence {
    q: Vec<BigUint>,
}

impl RigiditySequence {
    pub fn new(q: Vec<BigUint>) -> Result<Self> {
        if q.is_empty() {
            return domain("rigidity sequence is empty");
        }
        if q.iter().any(|x| x.is_zero()) {
            return domain("rigidity sequence entries must be positive");
        }
        Ok(Self { q })
    }

    pub fn from_u64(q: &[u64]) -> Result<Self> {
        Self::new(q.iter().map(|&x| BigUint::from(x)).collect())
    }

    /// `q_n = 2^(k_n)` for the scales of a Cantor spec.
    pub fn dyadic(spec: &CantorSpec) -> Self {
        Self {
            q: spec
                .levels()
                .iter()
                .map(|(k, _)| BigUint::one() << *k as usize)
                .collect(),
        }
    }

    pub fn terms(&self) -> &[BigUint] {
        &self.q
    }
}

/// Distance from a rational to the nearest integer.
pub fn dist_to_int_exact(x: &BigRational) -> BigRational {
    let f = x - x.floor();
    let g = BigRational::one() - &f;
    f.min(g)
}

/// Exact `sup_{alpha in C} ||q_n alpha||` for each `q_n`.
pub fn rigidity_profile_exact(set: &IntervalSet, q: &RigiditySequence) -> Result<Vec<BigRational>> {
    if set.is_empty() {
        return domain("rigidity profile of the empty set");
    }
    let half = rat(1, 2);
    Ok(q.q
        .iter()
        .map(|qn| {
            let qn = BigRational::from_integer(BigInt::from(qn.clone()));
            let mut best = BigRational::zero();
            for (a, b) in &set.intervals {
                let (qa, qb) = (&qn * a, &qn * b);
                let spans_half = (&qb - &half).floor() >= (&qa - &half).ceil();
                let value = if spans_half {
                    half.clone()
                } else {
                    dist_to_int_exact(&qa).max(dist_to_int_exact(&qb))
                };
                if value > best {
                    best = value;
                    if best == half {
                        break;
                    }
                }
            }
            best
        })
        .collect())
}

pub fn rigidity_profile(set: &IntervalSet, q: &RigiditySequence) -> Result<Vec<f64>> {
    Ok(rigidity_profile_exact(set, q)?.iter().map(to_f64).collect())
}

const PRIME_VOLUME_MAX: u64 = 1_000_000_000_000;
const TRIAL_BOUND: u64 = 1_000_000;

/// `sum_{p | q} 1/p` for `1 <= q <= 10^12`.
pub fn prime_volume(q: u64) -> Result<BigRational> {
    if q == 0 || q > PRIME_VOLUME_MAX {
        return domain(format!("prime volume needs 1 <= q <= 10^12, got {q}"));
    }
    prime_volume_big(&BigUint::from(q))
}

/// `sum_{p | q} 1/p` for large `q` whose cofactor after removing primes up
/// to `10^6` is `1` or at most `10^12` (hence prime).
pub fn prime_volume_big(q: &BigUint) -> Result<BigRational> {
    if q.is_zero() {
        return domain("prime volume of 0");
    }
    let mut rest = q.clone();
    let mut primes: Vec<BigUint> = Vec::new();
    let tz = rest.trailing_zeros().unwrap_or(0);
    if tz > 0 {
        primes.push(BigUint::from(2u32));
        rest >>= tz as usize;
    }
    let mut p = 3u64;
    while p <= TRIAL_BOUND && !rest.is_one() {
        if (&rest % p).is_zero() {
            primes.push(BigUint::from(p));
            while (&rest % p).is_zero() {
                rest /= p;
            }
        }
        if BigUint::from(p * p) > rest {
            break;
        }
        p += 2;
    }
    if !rest.is_one() {
        if rest > BigUint::from(PRIME_VOLUME_MAX) && p > TRIAL_BOUND {
            return Err(Error::Capacity {
                what: "unfactored cofactor",
                requested: rest.to_u64().unwrap_or(u64::MAX),
                cap: PRIME_VOLUME_MAX,
            });
        }
        primes.push(rest);
    }
    Ok(primes.into_iter().fold(BigRational::zero(), |acc, p| {
        acc + BigRational::new(BigInt::one(), BigInt::from(p))
    }))
}

/// `sup_n` of the prime volumes of a sequence.
pub fn max_prime_volume(q: &RigiditySequence) -> Result<BigRational> {
    let mut best = BigRational::zero();
    for qn in q.terms() {
        let v = prime_volume_big(qn)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}
