//! Segmented sieve for μ, φ and smallest prime factors.
//!
//! Tables are built segment by segment from the base primes up to `√limit`.
//! Each segment is independent, so the output is identical for every
//! `segment_size` and every thread count.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::arith::isqrt;
use crate::{par, Error, Result};

/// Bytes of table per sieved integer (μ: 1, φ: 8, spf: 4).
pub const BYTES_PER_ENTRY: u64 = 13;

/// Default cap on table memory, 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

const CACHE_MAGIC: &[u8; 8] = b"JHSIEVE\0";
const CACHE_VERSION: u32 = 1;

/// Arithmetic-function tables over `[1, limit]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveTable {
    limit: u64,
    // index 0 is a placeholder so that tables are indexed by n directly
    mu: Vec<i8>,
    phi: Vec<u64>,
    spf: Vec<u32>,
}

/// Build tables on `[1, limit]` using segments of `segment_size` integers.
pub fn build_sieve(limit: u64, segment_size: u64) -> Result<SieveTable> {
    build_sieve_with_budget(limit, segment_size, DEFAULT_MEMORY_BUDGET)
}

pub fn build_sieve_with_budget(limit: u64, segment_size: u64, budget: u64) -> Result<SieveTable> {
    if limit == 0 || segment_size == 0 {
        return Err(Error::invalid(
            "build_sieve: limit and segment_size must be positive",
        ));
    }
    if limit > u32::MAX as u64 {
        return Err(Error::Resource(format!(
            "build_sieve: limit {limit} exceeds the 32-bit smallest-prime-factor table"
        )));
    }
    let need = limit.saturating_mul(BYTES_PER_ENTRY);
    if need > budget {
        return Err(Error::Resource(format!(
            "build_sieve: limit {limit} needs {need} bytes, budget is {budget}"
        )));
    }

    let base = small_primes(isqrt(limit));
    let segments: Vec<(u64, u64)> = (0..)
        .map(|i: u64| 1 + i * segment_size)
        .take_while(|&lo| lo <= limit)
        .map(|lo| (lo, (lo + segment_size - 1).min(limit)))
        .collect();

    let parts = par::map_ordered(&segments, |&(lo, hi)| sieve_segment(lo, hi, &base));

    let len = limit as usize + 1;
    let mut mu = Vec::with_capacity(len);
    let mut phi = Vec::with_capacity(len);
    let mut spf = Vec::with_capacity(len);
    mu.push(0);
    phi.push(0);
    spf.push(0);
    for seg in parts {
        mu.extend_from_slice(&seg.mu);
        phi.extend_from_slice(&seg.phi);
        spf.extend_from_slice(&seg.spf);
    }
    Ok(SieveTable {
        limit,
        mu,
        phi,
        spf,
    })
}

struct Segment {
    mu: Vec<i8>,
    phi: Vec<u64>,
    spf: Vec<u32>,
}

fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Segment {
    let len = (hi - lo + 1) as usize;
    let mut rem: Vec<u64> = (lo..=hi).collect();
    let mut mu = vec![1i8; len];
    let mut phi = vec![1u64; len];
    let mut spf = vec![0u32; len];

    for &p in base {
        let first = lo.div_ceil(p) * p;
        let mut k = first;
        while k <= hi {
            let i = (k - lo) as usize;
            if spf[i] == 0 {
                spf[i] = p as u32;
            }
            let mut e = 0;
            while rem[i] % p == 0 {
                rem[i] /= p;
                e += 1;
            }
            if e >= 2 {
                mu[i] = 0;
            } else {
                mu[i] = -mu[i];
            }
            phi[i] *= (p - 1) * p.pow(e - 1);
            k += p;
        }
    }
    for i in 0..len {
        let r = rem[i];
        if r > 1 {
            // remaining cofactor is a prime above √limit
            mu[i] = -mu[i];
            phi[i] *= r - 1;
            if spf[i] == 0 {
                spf[i] = r as u32;
            }
        }
    }
    if lo == 1 {
        spf[0] = 1;
    }
    Segment { mu, phi, spf }
}

/// Primes `≤ limit` by a plain sieve of Eratosthenes.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
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

impl SieveTable {
    pub fn range_start(&self) -> u64 {
        1
    }

    pub fn range_end(&self) -> u64 {
        self.limit
    }

    pub fn covers(&self, n: u64) -> bool {
        n >= 1 && n <= self.limit
    }

    fn check(&self, n: u64) -> Result<usize> {
        if self.covers(n) {
            Ok(n as usize)
        } else {
            Err(Error::invalid(format!(
                "{n} outside sieve range [1, {}]",
                self.limit
            )))
        }
    }

    pub fn mu(&self, n: u64) -> Result<i8> {
        Ok(self.mu[self.check(n)?])
    }

    pub fn phi(&self, n: u64) -> Result<u64> {
        Ok(self.phi[self.check(n)?])
    }

    pub fn spf(&self, n: u64) -> Result<u64> {
        Ok(self.spf[self.check(n)?] as u64)
    }

    /// μ table with `mu_slice()[n]` = μ(n); slot 0 is unused.
    pub fn mu_slice(&self) -> &[i8] {
        &self.mu
    }

    pub fn phi_slice(&self) -> &[u64] {
        &self.phi
    }

    #[inline]
    pub(crate) fn squarefree_unchecked(&self, n: u64) -> bool {
        self.mu[n as usize] != 0
    }

    pub fn is_odd_squarefree(&self, n: u64) -> Result<bool> {
        let i = self.check(n)?;
        Ok(n & 1 == 1 && self.mu[i] != 0)
    }

    /// Distinct prime factors of `n`, ascending.
    pub fn prime_factors(&self, n: u64) -> Result<Vec<u64>> {
        self.check(n)?;
        let mut out = Vec::new();
        let mut r = n;
        while r > 1 {
            let p = self.spf[r as usize] as u64;
            out.push(p);
            while r % p == 0 {
                r /= p;
            }
        }
        Ok(out)
    }

    /// Exact number of odd `m ≤ x` with `gcd(m, n) = 1`, by Möbius inversion
    /// over the square-free divisors of `2n`.
    pub fn count_coprime_odd_upto(&self, n: u64, x: f64) -> Result<u64> {
        if n % 2 == 0 {
            return Err(Error::invalid("count_coprime_odd_upto: n must be odd"));
        }
        if !(x >= 0.0) {
            return Err(Error::invalid(
                "count_coprime_odd_upto: x must be nonnegative",
            ));
        }
        let x = x.floor() as u64;
        let mut primes = self.prime_factors(n)?;
        primes.push(2);
        let mut total: i128 = 0;
        for mask in 0u32..(1 << primes.len()) {
            let mut d = 1u64;
            for (j, &p) in primes.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    d = d.saturating_mul(p);
                }
            }
            let term = (x / d) as i128;
            if mask.count_ones() % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        Ok(total as u64)
    }

    /// Write the table as `magic, version, limit` followed by the packed
    /// little-endian μ, φ and spf arrays for `n = 1..=limit`.
    pub fn write_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.limit.to_le_bytes())?;
        for &m in &self.mu[1..] {
            w.write_all(&m.to_le_bytes())?;
        }
        for &p in &self.phi[1..] {
            w.write_all(&p.to_le_bytes())?;
        }
        for &s in &self.spf[1..] {
            w.write_all(&s.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache(path: impl AsRef<Path>) -> Result<SieveTable> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("sieve cache: bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!(
                "sieve cache: unsupported version {version}"
            )));
        }
        r.read_exact(&mut b8)?;
        let limit = u64::from_le_bytes(b8);
        if limit == 0 || limit > u32::MAX as u64 {
            return Err(Error::Format(format!("sieve cache: bad limit {limit}")));
        }
        let n = limit as usize;
        let mut mu = vec![0i8; n + 1];
        let mut raw = vec![0u8; n];
        r.read_exact(&mut raw)?;
        for (dst, &b) in mu[1..].iter_mut().zip(&raw) {
            *dst = b as i8;
        }
        let mut phi = vec![0u64; n + 1];
        for dst in &mut phi[1..] {
            r.read_exact(&mut b8)?;
            *dst = u64::from_le_bytes(b8);
        }
        let mut spf = vec![0u32; n + 1];
        for dst in &mut spf[1..] {
            r.read_exact(&mut b4)?;
            *dst = u32::from_le_bytes(b4);
        }
        if r.read(&mut b4)? != 0 {
            return Err(Error::Format("sieve cache: trailing bytes".into()));
        }
        Ok(SieveTable {
            limit,
            mu,
            phi,
            spf,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    /// Factorization by trial division, independent of the sieve.
    fn mu_phi_by_factoring(n: u64) -> (i8, u64) {
        let mut r = n;
        let mut mu = 1i8;
        let mut phi = 1u64;
        let mut p = 2;
        while p * p <= r {
            if r % p == 0 {
                let mut e = 0;
                while r % p == 0 {
                    r /= p;
                    e += 1;
                }
                mu = if e > 1 { 0 } else { -mu };
                phi *= (p - 1) * p.pow(e - 1);
            }
            p += 1;
        }
        if r > 1 {
            mu = -mu;
            phi *= r - 1;
        }
        (mu, phi)
    }

    #[test]
    fn first_ten() {
        let t = build_sieve(10, 3).unwrap();
        let mu: Vec<i8> = (1..=10).map(|n| t.mu(n).unwrap()).collect();
        assert_eq!(mu, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn limit_one() {
        let t = build_sieve(1, 1).unwrap();
        assert_eq!(t.mu(1).unwrap(), 1);
        assert_eq!(t.phi(1).unwrap(), 1);
        assert!(t.mu(2).is_err());
    }

    #[test]
    fn phi_twelve() {
        let t = build_sieve(12, 5).unwrap();
        let direct = (1..=12).filter(|&k| gcd(k, 12) == 1).count() as u64;
        assert_eq!(direct, 4);
        assert_eq!(t.phi(12).unwrap(), 4);
    }

    #[test]
    fn agrees_with_factoring() {
        let t = build_sieve(20_000, 777).unwrap();
        for n in 1..=20_000 {
            let (mu, phi) = mu_phi_by_factoring(n);
            assert_eq!(t.mu(n).unwrap(), mu, "mu({n})");
            assert_eq!(t.phi(n).unwrap(), phi, "phi({n})");
            let s = t.spf(n).unwrap();
            if n > 1 {
                assert_eq!(n % s, 0);
                assert!((2..s).all(|d| n % d != 0));
            }
        }
        for p in small_primes(20_000) {
            assert_eq!(t.mu(p).unwrap(), -1);
            assert_eq!(t.phi(p).unwrap(), p - 1);
            assert_eq!(t.spf(p).unwrap(), p);
        }
    }

    #[test]
    fn squarefree_by_square_divisors() {
        let t = build_sieve(100_000, 4096).unwrap();
        for n in 1..=100_000u64 {
            // Σ_{d² | n} μ(d) is 1 for square-free n and 0 otherwise
            let mut s = 0i64;
            let mut d = 1;
            while d * d <= n {
                if n % (d * d) == 0 {
                    s += t.mu(d).unwrap() as i64;
                }
                d += 1;
            }
            assert_eq!(s == 1, t.mu(n).unwrap() != 0, "n = {n}");
        }
    }

    #[test]
    fn squarefree_density() {
        let t = build_sieve(1_000_000, 1 << 16).unwrap();
        let count = t.mu_slice()[1..].iter().filter(|&&m| m != 0).count() as f64;
        let density = count / 1e6;
        let expected = 6.0 / std::f64::consts::PI.powi(2);
        assert!((density / expected - 1.0).abs() < 0.02, "{density}");
    }

    #[test]
    fn independent_of_segment_size() {
        let a = build_sieve(50_000, 1).unwrap();
        let b = build_sieve(50_000, 1000).unwrap();
        let c = build_sieve(50_000, 1 << 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn odd_squarefree_predicate() {
        let t = build_sieve(100, 10).unwrap();
        assert!(t.is_odd_squarefree(15).unwrap());
        assert!(!t.is_odd_squarefree(9).unwrap());
        assert!(!t.is_odd_squarefree(10).unwrap());
        assert!(t.is_odd_squarefree(101).is_err());
    }

    #[test]
    fn coprime_odd_counts() {
        let t = build_sieve(1000, 100).unwrap();
        assert_eq!(t.count_coprime_odd_upto(1, 10.0).unwrap(), 5);
        assert_eq!(t.count_coprime_odd_upto(3, 9.0).unwrap(), 3);
        assert_eq!(t.count_coprime_odd_upto(15, 15.0).unwrap(), 4);
        assert!(t.count_coprime_odd_upto(4, 15.0).is_err());
        for n in (1..200).step_by(2) {
            for x in [0.0, 1.0, 7.5, 100.0, 333.3] {
                let direct = (1..=x as u64)
                    .filter(|&m| m % 2 == 1 && gcd(m, n) == 1)
                    .count();
                assert_eq!(t.count_coprime_odd_upto(n, x).unwrap(), direct as u64);
            }
        }
    }

    #[test]
    fn memory_budget() {
        assert!(matches!(
            build_sieve_with_budget(1_000_000, 1000, 1_000_000),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn cache_roundtrip() {
        let t = build_sieve(5000, 256).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.bin");
        t.write_cache(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], CACHE_MAGIC);
        assert_eq!(bytes.len(), 8 + 4 + 8 + 5000 * 13);
        assert_eq!(SieveTable::read_cache(&path).unwrap(), t);

        // bit-exact across rebuilds
        let again = dir.path().join("again.bin");
        build_sieve(5000, 999).unwrap().write_cache(&again).unwrap();
        assert_eq!(std::fs::read(&again).unwrap(), bytes);

        std::fs::write(&path, b"nope").unwrap();
        assert!(SieveTable::read_cache(&path).is_err());
    }
}
