//! Affine skew products on the torus, their closed-form iterates, and
//! block / window averages of orbit-weighted `λ`.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::expsum::AverageMode;
use crate::liouville::LiouvilleTable;
use crate::numeric::{frac_mul, pairwise_sum, unit};

/// A reduced fraction `num/den` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnitFrac {
    num: u128,
    den: u128,
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    match a.checked_mul(b) {
        Some(p) => p % m,
        None => ((BigUint::from(a) * BigUint::from(b)) % BigUint::from(m))
            .to_u128()
            .expect("residue below modulus"),
    }
}

impl UnitFrac {
    /// `num/den` reduced mod 1.
    pub fn new(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return domain("zero denominator");
        }
        let num = num % den;
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Sum mod 1; fails when the common denominator overflows 128 bits.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let g = self.den.gcd(&other.den);
        let b = other.den / g;
        let den = self
            .den
            .checked_mul(b)
            .ok_or_else(|| Error::Precision("common denominator exceeds 128 bits".into()))?;
        let x = mul_mod(self.num, b, den);
        let y = mul_mod(other.num, self.den / g, den);
        let s = x.checked_add(y).map(|s| s % den).unwrap_or_else(|| {
            ((BigUint::from(x) + BigUint::from(y)) % BigUint::from(den))
                .to_u128()
                .expect("residue below modulus")
        });
        Self::new(s, den)
    }

    /// `c * self` mod 1 for a binomial-sized multiplier given mod `den`.
    fn scale_mod(&self, c_mod_den: u128) -> Self {
        Self::new(mul_mod(c_mod_den, self.num, self.den), self.den).expect("nonzero denominator")
    }
}

/// `C(n, j) mod q`, via the falling factorial reduced mod `q j!` and then
/// divided by `j!`.
pub fn binomial_mod(n: u64, j: u32, q: u128) -> u128 {
    if q == 1 {
        return 0;
    }
    if (j as u64) > n {
        return 0;
    }
    let fact: u128 = (1..=j as u128).product();
    if let Some(m) = q.checked_mul(fact).filter(|m| *m < 1u128 << 64) {
        let mut p: u128 = 1;
        for i in 0..j as u64 {
            p = p * ((n - i) as u128 % m) % m;
        }
        return (p / fact) % q;
    }
    let m = BigUint::from(q) * BigUint::from(fact);
    let mut p = BigUint::from(1u32);
    for i in 0..j as u64 {
        p = p * BigUint::from(n - i) % &m;
    }
    ((p / BigUint::from(fact)) % BigUint::from(q))
        .to_u128()
        .expect("residue below modulus")
}

/// `C(n, j)` when it fits in 128 bits.
pub fn binomial_u128(n: u64, j: u32) -> Option<u128> {
    if j as u64 > n {
        return Some(0);
    }
    let mut c: u128 = 1;
    for i in 0..j as u128 {
        c = c.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(c)
}

/// Rotation number of a skew product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rotation {
    Rational(UnitFrac),
    Real(f64),
}

/// `T(x_1, .., x_d) = (x_1 + alpha, x_2 + x_1, .., x_d + x_{d-1})` mod 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewSystem {
    dim: usize,
    alpha: Rotation,
}

/// A point of the `d`-torus, exact or in double precision.
#[derive(Clone, Debug, PartialEq)]
pub enum TorusPoint {
    Rational(Vec<UnitFrac>),
    Real(Vec<f64>),
}

fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

impl TorusPoint {
    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Rational(v) => v.len(),
            TorusPoint::Real(v) => v.len(),
        }
    }

    pub fn origin_real(d: usize) -> Self {
        TorusPoint::Real(vec![0.0; d])
    }

    pub fn origin_rational(d: usize) -> Self {
        TorusPoint::Rational(vec![UnitFrac::zero(); d])
    }

    /// Coordinates as doubles in `[0, 1)`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TorusPoint::Rational(v) => v.iter().map(UnitFrac::to_f64).collect(),
            TorusPoint::Real(v) => v.iter().map(|&x| wrap(x)).collect(),
        }
    }

    /// Largest coordinate-wise circle distance.
    pub fn circle_distance(&self, other: &TorusPoint) -> f64 {
        self.to_f64()
            .iter()
            .zip(other.to_f64())
            .map(|(a, b)| {
                let d = (a - b).abs();
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

impl SkewSystem {
    pub fn new(dim: usize, alpha: Rotation) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be at least 1");
        }
        let alpha = match alpha {
            Rotation::Real(a) if !a.is_finite() => return domain("alpha must be finite"),
            Rotation::Real(a) => Rotation::Real(wrap(a)),
            r => r,
        };
        Ok(Self { dim, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> Rotation {
        self.alpha
    }

    fn alpha_f64(&self) -> f64 {
        match self.alpha {
            Rotation::Rational(f) => f.to_f64(),
            Rotation::Real(a) => a,
        }
    }

    fn check(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim {
            return domain(format!("point of dimension {} for a {}-dimensional system", x.dim(), self.dim));
        }
        if matches!((x, self.alpha), (TorusPoint::Rational(_), Rotation::Real(_))) {
            return domain("rational point with a real rotation number");
        }
        Ok(())
    }

    /// One application of the map.
    pub fn step(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.check(x)?;
        match x {
            TorusPoint::Rational(v) => {
                let Rotation::Rational(a) = self.alpha else {
                    unreachable!("checked above")
                };
                let mut out = Vec::with_capacity(v.len());
                out.push(v[0].add(&a)?);
                for j in 1..v.len() {
                    out.push(v[j].add(&v[j - 1])?);
                }
                Ok(TorusPoint::Rational(out))
            }
            TorusPoint::Real(v) => {
                let mut out = v.clone();
                step_real(&mut out, self.alpha_f64());
                Ok(TorusPoint::Real(out))
            }
        }
    }

    /// `T^n x`, coordinate `j` being `C(n,j) alpha + sum_{i<=j} C(n,j-i) x_i`.
    pub fn iterate_closed_form(&self, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
        self.check(x)?;
        match x {
            TorusPoint::Rational(v) => {
                let Rotation::Rational(a) = self.alpha else {
                    unreachable!("checked above")
                };
                let mut out = Vec::with_capacity(v.len());
                for j in 1..=v.len() {
                    let mut acc = a.scale_mod(binomial_mod(n, j as u32, a.den));
                    for i in 1..=j {
                        let xi = &v[i - 1];
                        acc = acc.add(&xi.scale_mod(binomial_mod(n, (j - i) as u32, xi.den)))?;
                    }
                    out.push(acc);
                }
                Ok(TorusPoint::Rational(out))
            }
            TorusPoint::Real(v) => Ok(TorusPoint::Real(closed_form_real(
                v,
                self.alpha_f64(),
                n,
            )?)),
        }
    }
}

fn step_real(v: &mut [f64], alpha: f64) {
    for j in (1..v.len()).rev() {
        v[j] = wrap(v[j] + v[j - 1]);
    }
    v[0] = wrap(v[0] + alpha);
}

fn closed_form_real(x: &[f64], alpha: f64, n: u64) -> Result<Vec<f64>> {
    let binom = |j: usize| {
        binomial_u128(n, j as u32).ok_or_else(|| {
            Error::Precision(format!(
                "C({n}, {j}) exceeds 128 bits; use rational mode for this iterate"
            ))
        })
    };
    let mut out = Vec::with_capacity(x.len());
    for j in 1..=x.len() {
        let mut acc = frac_mul(binom(j)?, alpha);
        for i in 1..=j {
            acc += frac_mul(binom(j - i)?, x[i - 1]);
        }
        out.push(wrap(acc));
    }
    Ok(out)
}

/// Block boundaries `b_0 < b_1 < ...` of positive integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    b: Vec<u64>,
}

impl BlockPartition {
    pub fn new(b: Vec<u64>) -> Result<Self> {
        if b.len() < 2 {
            return domain("a partition needs at least two boundaries");
        }
        if b[0] == 0 || b.windows(2).any(|w| w[1] <= w[0]) {
            return domain("boundaries must be strictly increasing positive integers");
        }
        Ok(Self { b })
    }

    /// `k^2` for `k >= 1`, up to `max`.
    pub fn squares(max: u64) -> Result<Self> {
        Self::new((1..).map(|k: u64| k * k).take_while(|&v| v <= max).collect())
    }

    /// `floor(k log^2 k)` for `k >= 2`, duplicates removed, up to `max`.
    pub fn k_log_squared(max: u64) -> Result<Self> {
        let mut b: Vec<u64> = (2..)
            .map(|k: u64| {
                let l = (k as f64).ln();
                (k as f64 * l * l).floor() as u64
            })
            .take_while(|&v| v <= max)
            .filter(|&v| v > 0)
            .collect();
        b.dedup();
        Self::new(b)
    }

    /// `2^k` for `k >= 0`, up to `max`.
    pub fn powers_of_two(max: u64) -> Result<Self> {
        Self::new((0..63).map(|k| 1u64 << k).take_while(|&v| v <= max).collect())
    }

    /// Named family (`squares`, `klog2k`, `pow2`) up to `max`.
    pub fn named(name: &str, max: u64) -> Result<Self> {
        match name {
            "squares" => Self::squares(max),
            "klog2k" => Self::k_log_squared(max),
            "pow2" => Self::powers_of_two(max),
            other => domain(format!("unknown partition family {other:?}")),
        }
    }

    /// One integer per line; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            b.push(line.parse().map_err(|_| {
                Error::Format(format!("line {}: {line:?} is not an integer", no + 1))
            })?);
        }
        Self::new(b)
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.b
    }

    /// Number of complete blocks.
    pub fn blocks(&self) -> usize {
        self.b.len() - 1
    }

    /// Largest `K` with `b_K <= bound`.
    pub fn blocks_within(&self, bound: u64) -> usize {
        self.b.partition_point(|&v| v <= bound).saturating_sub(1)
    }

    /// `#{b_k <= M} / M`.
    pub fn density(&self, m: u64) -> f64 {
        self.b.partition_point(|&v| v <= m) as f64 / m as f64
    }
}

/// Observable on the torus.
pub type Observable<'a> = &'a (dyn Fn(&[f64]) -> Complex64 + Sync);

/// `f(x) = e(x_d)`.
pub fn last_coordinate_character(x: &[f64]) -> Complex64 {
    unit(*x.last().expect("nonempty point"))
}

/// Steps between exact closed-form re-synchronizations inside a block.
/// Rounding in coordinate `d` grows like `R^(d-1) / (d-1)!` over `R`
/// steps; the interval is the largest power of two up to 1024 keeping that
/// factor below `10^6`.
fn orbit_resync(dim: usize) -> u64 {
    let mut r = 1024u64;
    while r > 1 {
        let growth: f64 = (1..dim).map(|i| r as f64 / i as f64).product();
        if growth <= 1e6 {
            break;
        }
        r /= 2;
    }
    r
}

/// `(1/b_K) sum_{k<K} |sum_{b_k <= n < b_{k+1}} f(T^n x_k) λ(n)|` (Cesàro)
/// or `(1/log b_K) sum_{k<K} |sum f(T^n x_k) λ(n)/n|` (logarithmic).
///
/// Orbits run in double precision; a rational system is evaluated through
/// its nearest double.
pub fn lomo_block_average(
    table: &LiouvilleTable,
    sys: &SkewSystem,
    f: Observable<'_>,
    partition: &BlockPartition,
    starts: &[TorusPoint],
    k: usize,
    mode: AverageMode,
) -> Result<f64> {
    if k == 0 || partition.blocks() < k {
        return domain(format!(
            "partition has {} blocks, {k} requested",
            partition.blocks()
        ));
    }
    if starts.len() < k {
        return domain(format!("{} start points for {k} blocks", starts.len()));
    }
    let b = partition.boundaries();
    table.check_range(b[k] - 1)?;
    if starts.iter().any(|x| x.dim() != sys.dim) {
        return domain("start point dimension mismatch");
    }
    let alpha = sys.alpha_f64();
    let resync = orbit_resync(sys.dim);
    let per_block: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|i| {
            let x0 = starts[i].to_f64();
            let mut terms = Vec::with_capacity((b[i + 1] - b[i]) as usize);
            let mut x = Vec::new();
            for n in b[i]..b[i + 1] {
                if n == b[i] || (n - b[i]).is_multiple_of(resync) {
                    x = closed_form_real(&x0, alpha, n)?;
                } else {
                    step_real(&mut x, alpha);
                }
                let w = table.lambda(n) as f64
                    * match mode {
                        AverageMode::Cesaro => 1.0,
                        AverageMode::Logarithmic => 1.0 / n as f64,
                    };
                terms.push(f(&x) * w);
            }
            Ok(crate::numeric::pairwise_sum_c(&terms).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let total = pairwise_sum(&per_block);
    Ok(match mode {
        AverageMode::Cesaro => total / b[k] as f64,
        AverageMode::Logarithmic => total / (b[k] as f64).ln().max(LN_2),
    })
}

/// One LOMO measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct LomoRecord {
    pub blocks: usize,
    pub b_k: u64,
    pub mode: AverageMode,
    pub value: f64,
}

impl LomoRecord {
    pub const CSV_HEADER: &'static str = "K,bK,mode,value";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{},{},{},{}", self.blocks, self.b_k, self.mode.name(), self.value);
        s
    }
}

/// Window and block averages of one bounded sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualRecord {
    /// `E_{m <= M} |E_{h <= H} z_{m+h}|`.
    pub window: f64,
    /// `(1/b_K) sum_{k<K} |sum_{b_k <= n < b_{k+1}} z_n|`.
    pub block: f64,
    pub blocks: usize,
}

/// Window and block averages of `z_1..z_N`, given as `z[n-1] = z_n`.
/// Blocks run over every `k` with `b_{k+1} - 1 <= N`.
pub fn dual_averages(z: &[Complex64], h: usize, m: u64, partition: &BlockPartition) -> Result<DualRecord> {
    let n = z.len() as u64;
    if h == 0 || m == 0 {
        return domain("H and M must be positive");
    }
    if m + h as u64 > n {
        return Err(Error::Range {
            needed: m + h as u64,
            limit: n,
        });
    }
    // Sliding window sum over z_{m+1..m+H}, recomputed exactly every 1024 moves.
    let exact = |m: usize| crate::numeric::pairwise_sum_c(&z[m..m + h]);
    let mut sum = exact(0);
    let mut window_terms = Vec::with_capacity(m as usize);
    for i in 0..m as usize {
        if i > 0 {
            sum = if i % 1024 == 0 {
                exact(i)
            } else {
                sum + z[i + h - 1] - z[i - 1]
            };
        }
        window_terms.push(sum.norm() / h as f64);
    }
    let window = pairwise_sum(&window_terms) / m as f64;
    let b = partition.boundaries();
    let k = partition.blocks_within(n + 1);
    let block = if k == 0 {
        0.0
    } else {
        let sums: Vec<f64> = (0..k)
            .map(|i| crate::numeric::pairwise_sum_c(&z[(b[i] - 1) as usize..(b[i + 1] - 1) as usize]).norm())
            .collect();
        pairwise_sum(&sums) / b[k] as f64
    };
    Ok(DualRecord {
        window,
        block,
        blocks: k,
    })
}

/// `z_n = λ(n)` for `n = 1..=N`.
pub fn liouville_sequence(table: &LiouvilleTable, n: u64) -> Result<Vec<Complex64>> {
    table.check_range(n)?;
    Ok((1..=n)
        .map(|i| Complex64::new(table.lambda(i) as f64, 0.0))
        .collect())
}

impl Default for UnitFrac {
    fn default() -> Self {
        Self::zero()
    }
}

impl std::fmt::Display for UnitFrac {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::build_table;

    fn frac(n: u128, d: u128) -> UnitFrac {
        UnitFrac::new(n, d).unwrap()
    }

    #[test]
    fn fixed_point_and_single_step() {
        let sys = SkewSystem::new(3, Rotation::Rational(UnitFrac::zero())).unwrap();
        let x = TorusPoint::origin_rational(3);
        assert_eq!(sys.step(&x).unwrap(), x);
        let sys = SkewSystem::new(2, Rotation::Rational(frac(1, 4))).unwrap();
        let y = sys.step(&TorusPoint::origin_rational(2)).unwrap();
        assert_eq!(y, TorusPoint::Rational(vec![frac(1, 4), UnitFrac::zero()]));
    }

    #[test]
    fn hand_iteration_to_four() {
        let sys = SkewSystem::new(2, Rotation::Rational(frac(1, 4))).unwrap();
        let x = TorusPoint::origin_rational(2);
        let expect = TorusPoint::Rational(vec![UnitFrac::zero(), frac(1, 2)]);
        assert_eq!(sys.iterate_closed_form(&x, 4).unwrap(), expect);
        let mut y = x.clone();
        for _ in 0..4 {
            y = sys.step(&y).unwrap();
        }
        assert_eq!(y, expect);
        assert_eq!(sys.iterate_closed_form(&x, 0).unwrap(), x);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let sys = SkewSystem::new(2, Rotation::Real(0.3)).unwrap();
        assert!(sys.step(&TorusPoint::origin_rational(2)).is_err());
        assert!(sys.step(&TorusPoint::origin_real(3)).is_err());
        assert!(SkewSystem::new(0, Rotation::Real(0.3)).is_err());
    }

    #[test]
    fn binomials_mod() {
        for n in 0..40u64 {
            for j in 0..8u32 {
                let exact = binomial_u128(n, j).unwrap();
                for q in [1u128, 2, 7, 1000, 1 << 70] {
                    assert_eq!(binomial_mod(n, j, q), exact % q, "n={n} j={j} q={q}");
                }
            }
        }
        assert!(binomial_u128(1_000_000, 8).is_none());
    }

    #[test]
    fn real_overflow_is_precision_error() {
        let sys = SkewSystem::new(8, Rotation::Real(0.1)).unwrap();
        let err = sys.iterate_closed_form(&TorusPoint::origin_real(8), 1_000_000);
        assert!(matches!(err, Err(Error::Precision(_))));
    }

    #[test]
    fn real_mode_close_to_iteration() {
        let sys = SkewSystem::new(3, Rotation::Real(0.618_033_988_749_895)).unwrap();
        let x = TorusPoint::Real(vec![0.1, 0.2, 0.3]);
        let mut y = x.clone();
        for _ in 0..1000 {
            y = sys.step(&y).unwrap();
        }
        let c = sys.iterate_closed_form(&x, 1000).unwrap();
        assert!(c.circle_distance(&y) < 1e-9);
    }

    #[test]
    fn partitions() {
        assert_eq!(BlockPartition::squares(30).unwrap().boundaries(), &[1, 4, 9, 16, 25]);
        assert_eq!(BlockPartition::powers_of_two(20).unwrap().boundaries(), &[1, 2, 4, 8, 16]);
        let p = BlockPartition::k_log_squared(1000).unwrap();
        assert!(p.boundaries().windows(2).all(|w| w[1] > w[0]));
        assert!(BlockPartition::new(vec![3, 3]).is_err());
        assert!(BlockPartition::new(vec![0, 3]).is_err());
        assert_eq!(BlockPartition::parse("1\n# c\n5\n9\n").unwrap().blocks(), 2);
        assert!(BlockPartition::parse("1\nx\n").is_err());
        let sq = BlockPartition::squares(10_000).unwrap();
        assert_eq!(sq.density(10_000), 0.01);
        assert_eq!(sq.blocks_within(10), 2);
    }

    #[test]
    fn zero_observable_and_constant_orbit() {
        let t = build_table(10_000).unwrap();
        let part = BlockPartition::squares(10_000).unwrap();
        let sys = SkewSystem::new(2, Rotation::Real(0.0)).unwrap();
        let starts = vec![TorusPoint::origin_real(2); 99];
        let zero = |_: &[f64]| Complex64::new(0.0, 0.0);
        let v = lomo_block_average(&t, &sys, &zero, &part, &starts, 99, AverageMode::Cesaro).unwrap();
        assert_eq!(v, 0.0);
        let v = lomo_block_average(&t, &sys, &last_coordinate_character, &part, &starts, 99, AverageMode::Cesaro)
            .unwrap();
        let b = part.boundaries();
        let direct: f64 = (0..99)
            .map(|k| ((b[k]..b[k + 1]).map(|n| t.lambda(n) as i64).sum::<i64>() as f64).abs())
            .sum::<f64>()
            / b[99] as f64;
        assert!((v - direct).abs() < 1e-12);
        assert!(lomo_block_average(&t, &sys, &zero, &part, &starts, 100, AverageMode::Cesaro).is_err());
    }

    #[test]
    fn dual_constant_and_alternating() {
        let part = BlockPartition::squares(1000).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); 1000];
        let r = dual_averages(&ones, 10, 900, &part).unwrap();
        assert_eq!(r.window, 1.0);
        let b = part.boundaries();
        let k = r.blocks;
        assert_eq!(r.block, (b[k] - b[0]) as f64 / b[k] as f64);
        let alt: Vec<Complex64> = (1..=1000)
            .map(|n| Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        assert_eq!(dual_averages(&alt, 10, 900, &part).unwrap().window, 0.0);
        assert!(dual_averages(&alt, 10, 995, &part).is_err());
    }
}
