//! The Liouville function `λ(n) = (-1)^Ω(n)` as a bit-packed table, an
//! independent trial-division oracle, and Dirichlet characters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::numeric::unit;

/// Default ceiling on the table size.
pub const DEFAULT_CAP: u64 = 1 << 40;

/// Numbers per sieve segment; a multiple of 64 so segments own whole words.
const SEGMENT: u64 = 1 << 18;

const MAGIC: &[u8; 4] = b"LIOU";
const VERSION: u8 = 0x01;

/// Signs of `λ(1..=limit)`, one bit per integer; a set bit means `λ(n) = -1`.
#[derive(Clone, PartialEq, Eq)]
pub struct LiouvilleTable {
    limit: u64,
    words: Vec<u64>,
}

impl std::fmt::Debug for LiouvilleTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiouvilleTable").field("limit", &self.limit).finish()
    }
}

impl LiouvilleTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Raw bit word `w`; bit `b` holds `n = 64 w + b + 1`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn is_negative(&self, n: u64) -> bool {
        debug_assert!(n >= 1 && n <= self.limit);
        let i = n - 1;
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    /// `λ(n)` for `1 <= n <= limit`.
    #[inline]
    pub fn lambda(&self, n: u64) -> i8 {
        if self.is_negative(n) {
            -1
        } else {
            1
        }
    }

    pub fn check_range(&self, last: u64) -> Result<()> {
        if last > self.limit {
            Err(Error::Range {
                needed: last,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    /// `λ(start+1), ..., λ(start+len)` as `±1.0`.
    pub fn signs_f64(&self, start: u64, len: usize) -> Result<Vec<f64>> {
        self.check_range(start + len as u64)?;
        Ok((1..=len as u64)
            .map(|h| if self.is_negative(start + h) { -1.0 } else { 1.0 })
            .collect())
    }

    /// Summatory function `sum_{n <= x} λ(n)`.
    pub fn partial_sum(&self, x: u64) -> Result<i64> {
        self.check_range(x)?;
        let negatives = self.count_negative(0, x);
        Ok(x as i64 - 2 * negatives as i64)
    }

    /// Number of `n` in `(start, start+len]` with `λ(n) = -1`.
    pub fn count_negative(&self, start: u64, len: u64) -> u64 {
        let mut count = 0u64;
        let mut offset = start;
        let end = start + len;
        while offset < end {
            let take = (end - offset).min(64);
            let w = self.word_at(offset);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            count += (w & mask).count_ones() as u64;
            offset += take;
        }
        count
    }

    /// 64 bits starting at bit index `offset` (that is, `n = offset + 1`),
    /// zero-filled past the end.
    #[inline]
    pub fn word_at(&self, offset: u64) -> u64 {
        let w = (offset / 64) as usize;
        let b = offset % 64;
        let lo = self.words.get(w).copied().unwrap_or(0);
        if b == 0 {
            lo
        } else {
            let hi = self.words.get(w + 1).copied().unwrap_or(0);
            (lo >> b) | (hi << (64 - b))
        }
    }

    /// Writes the `LIOU` cache format to a file.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Reads a `LIOU` cache file.
    pub fn read_cache(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// `"LIOU"`, version byte, `N` as little-endian `u64`, then `ceil(N/8)`
    /// bytes of sign bits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&[VERSION])?;
        out.write_all(&self.limit.to_le_bytes())?;
        let nbytes = self.limit.div_ceil(8) as usize;
        let mut written = 0usize;
        for word in &self.words {
            let bytes = word.to_le_bytes();
            let take = (nbytes - written).min(8);
            out.write_all(&bytes[..take])?;
            written += take;
            if written == nbytes {
                break;
            }
        }
        Ok(())
    }

    /// Parses the `LIOU` format, rejecting bad magic, version or length.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 13];
        input
            .read_exact(&mut header)
            .map_err(|_| Error::Format("truncated header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        if header[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", header[4])));
        }
        let limit = u64::from_le_bytes(header[5..13].try_into().expect("8 bytes"));
        if limit == 0 || limit > DEFAULT_CAP {
            return Err(Error::Format(format!("implausible limit {limit}")));
        }
        let nbytes = limit.div_ceil(8) as usize;
        let mut payload = Vec::with_capacity(nbytes);
        input.read_to_end(&mut payload)?;
        if payload.len() != nbytes {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header promises {nbytes}",
                payload.len()
            )));
        }
        let mut words = vec![0u64; limit.div_ceil(64) as usize];
        for (i, chunk) in payload.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(buf);
        }
        if limit % 64 != 0 {
            let last = words.len() - 1;
            words[last] &= (1u64 << (limit % 64)) - 1;
        }
        Ok(Self { limit, words })
    }
}

/// Builds `λ(1..=limit)` with the default cap.
pub fn build_table(limit: u64) -> Result<LiouvilleTable> {
    build_table_capped(limit, DEFAULT_CAP)
}

/// Segmented sieve on the parity of `Ω(n)`.
///
/// Each segment multiplies together the prime powers of base primes
/// `p <= sqrt(limit)` dividing `n`; a leftover cofactor contributes one more
/// (large) prime factor.
pub fn build_table_capped(limit: u64, cap: u64) -> Result<LiouvilleTable> {
    if limit == 0 {
        return domain("table limit must be at least 1");
    }
    if limit > cap {
        return Err(Error::Capacity {
            what: "table limit",
            requested: limit,
            cap,
        });
    }
    let base = small_primes(limit.isqrt());
    let nwords = limit.div_ceil(64) as usize;
    let mut words = Vec::new();
    words
        .try_reserve_exact(nwords)
        .map_err(|_| Error::Capacity {
            what: "table words",
            requested: nwords as u64,
            cap: nwords as u64,
        })?;
    words.resize(nwords, 0u64);
    let words_per_segment = (SEGMENT / 64) as usize;
    words
        .par_chunks_mut(words_per_segment)
        .enumerate()
        .for_each(|(s, chunk)| {
            let lo = 1 + s as u64 * SEGMENT;
            let hi = (lo + SEGMENT).min(limit + 1);
            sieve_segment(lo, hi, &base, chunk);
        });
    Ok(LiouvilleTable { limit, words })
}

fn sieve_segment(lo: u64, hi: u64, base: &[u64], out: &mut [u64]) {
    let len = (hi - lo) as usize;
    let mut prod = vec![1u64; len];
    for &p in base {
        if p * p >= hi {
            break;
        }
        let mut pk = p;
        while pk < hi {
            let first = lo.div_ceil(pk) * pk;
            let mut n = first;
            while n < hi {
                let i = (n - lo) as usize;
                prod[i] *= p;
                out[i / 64] ^= 1u64 << (i % 64);
                n += pk;
            }
            match pk.checked_mul(p) {
                Some(next) => pk = next,
                None => break,
            }
        }
    }
    for (i, &pr) in prod.iter().enumerate() {
        if pr != lo + i as u64 {
            out[i / 64] ^= 1u64 << (i % 64);
        }
    }
}

/// Primes `<= n` by a plain sieve of Eratosthenes.
fn small_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// `Ω(n)` by trial division; valid for `1 <= n <= 10^12` (and beyond, slowly).
pub fn omega_oracle(mut n: u64) -> u32 {
    let mut count = 0;
    while n.is_multiple_of(2) && n > 0 {
        n /= 2;
        count += 1;
    }
    let mut d = 3u64;
    while d * d <= n {
        while n.is_multiple_of(d) {
            n /= d;
            count += 1;
        }
        d += 2;
    }
    if n > 1 {
        count += 1;
    }
    count
}

/// `(-1)^Ω(n)` from the oracle.
pub fn lambda_oracle(n: u64) -> i8 {
    if omega_oracle(n).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Largest supported character modulus.
pub const MAX_CHARACTER_MODULUS: u64 = 10_000;

const NOT_UNIT: u16 = u16::MAX;

/// A Dirichlet character stored as an exponent table: `χ(n) = e(k_n / order)`
/// for units, zero otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u32,
    exps: Vec<u16>,
    principal: bool,
}

impl DirichletCharacter {
    /// The character that is identically 1 (modulus 1).
    pub fn trivial() -> Self {
        Self {
            modulus: 1,
            order: 1,
            exps: vec![0],
            principal: true,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    /// True when every value is real (`±1` or `0`).
    pub fn is_real(&self) -> bool {
        self.exps
            .iter()
            .all(|&k| k == NOT_UNIT || (2 * k as u32).is_multiple_of(self.order))
    }

    pub fn value(&self, n: u64) -> Complex64 {
        let k = self.exps[(n % self.modulus) as usize];
        if k == NOT_UNIT {
            Complex64::new(0.0, 0.0)
        } else if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            unit(k as f64 / self.order as f64)
        }
    }
}

/// All `φ(q)` characters modulo `q`, principal first.
pub fn characters(q: u64) -> Result<Vec<DirichletCharacter>> {
    if q == 0 {
        return domain("character modulus must be positive");
    }
    if q > MAX_CHARACTER_MODULUS {
        return domain(format!("modulus {q} exceeds {MAX_CHARACTER_MODULUS}"));
    }
    // Cyclic components of (Z/q)^x: (modulus of the prime-power part, generator, order).
    let mut comps: Vec<(u64, u64, u64)> = Vec::new();
    for (p, a) in factorize(q) {
        let pa = p.pow(a);
        if p == 2 {
            match a {
                1 => {}
                2 => comps.push((4, 3, 2)),
                _ => {
                    comps.push((pa, pa - 1, 2));
                    comps.push((pa, 5, pa / 4));
                }
            }
        } else {
            let g = primitive_root_prime_power(p, a);
            comps.push((pa, g, pa / p * (p - 1)));
        }
    }
    // Discrete logs of each residue in each component.
    let qs = q as usize;
    let ncomp = comps.len();
    let mut logs = vec![0u64; qs * ncomp.max(1)];
    let mut is_unit = vec![false; qs];
    for n in 0..q {
        is_unit[n as usize] = n.gcd(&q) == 1 || q == 1;
    }
    let mut ci = 0;
    while ci < ncomp {
        let (pa, g, order) = comps[ci];
        if pa % 8 == 0 && g == pa - 1 {
            // (Z/2^a)^x = <-1> x <5>: both components are resolved together.
            let order5 = comps[ci + 1].2;
            let mut pow5 = vec![0u64; pa as usize];
            let mut x = 1u64;
            for v in 0..order5 {
                pow5[x as usize] = v;
                x = x * 5 % pa;
            }
            for n in 0..q {
                if !is_unit[n as usize] {
                    continue;
                }
                let r = n % pa;
                let (u, s) = if r % 4 == 1 { (0, r) } else { (1, pa - r) };
                logs[n as usize * ncomp + ci] = u;
                logs[n as usize * ncomp + ci + 1] = pow5[s as usize];
            }
            ci += 2;
        } else {
            let mut table = vec![0u64; pa as usize];
            let mut x = 1u64;
            for v in 0..order {
                table[x as usize] = v;
                x = x * g % pa;
            }
            for n in 0..q {
                if is_unit[n as usize] {
                    logs[n as usize * ncomp + ci] = table[(n % pa) as usize];
                }
            }
            ci += 1;
        }
    }
    let orders: Vec<u64> = comps.iter().map(|c| c.2).collect();
    let order = orders.iter().fold(1u64, |acc, &o| acc.lcm(&o));
    let count: u64 = orders.iter().product();
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0u64; ncomp];
    for _ in 0..count {
        let mut exps = vec![NOT_UNIT; qs];
        for n in 0..qs {
            if !is_unit[n] {
                continue;
            }
            let mut k = 0u64;
            for c in 0..ncomp {
                k = (k + idx[c] * logs[n * ncomp + c] % orders[c] * (order / orders[c])) % order;
            }
            exps[n] = k as u16;
        }
        out.push(DirichletCharacter {
            modulus: q,
            order: order as u32,
            exps,
            principal: idx.iter().all(|&j| j == 0),
        });
        // Next index tuple, last component fastest.
        for c in (0..ncomp).rev() {
            idx[c] += 1;
            if idx[c] < orders[c] {
                break;
            }
            idx[c] = 0;
        }
    }
    Ok(out)
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut a = 0;
            while n.is_multiple_of(d) {
                n /= d;
                a += 1;
            }
            out.push((d, a));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Smallest primitive root modulo `p^a` for odd prime `p`.
fn primitive_root_prime_power(p: u64, a: u32) -> u64 {
    let phi_p = p - 1;
    let prime_factors: Vec<u64> = factorize(phi_p).into_iter().map(|(f, _)| f).collect();
    let g = (2..p)
        .find(|&g| prime_factors.iter().all(|&f| pow_mod(g, phi_p / f, p) != 1))
        .unwrap_or(1);
    if a == 1 || p == 2 {
        return g;
    }
    if pow_mod(g, p - 1, p * p) != 1 {
        g
    } else {
        g + p
    }
}
