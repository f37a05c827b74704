//! Bounded coefficient sequences `a_n`, `b_m` and the power weight `(n/scale)^c`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::arith::jacobi_unchecked;
use crate::{Error, Result};

/// A coefficient rule `n ↦ a_n` with `|a_n| ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundedSequence {
    ConstantOne,
    /// Random signs; the sign of `n` is word `n` of a ChaCha8 keystream
    /// seeded by `seed`, so values do not depend on evaluation order.
    Rademacher {
        seed: u64,
    },
    /// `n ↦ (n/p)` for odd `p`.
    JacobiCharacter {
        p: u64,
    },
    /// `n ↦ 1{n = p}`.
    PointMass {
        p: u64,
    },
    /// User-provided values; indices absent from the table are 0.
    CustomTable(CustomTable),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CustomTable {
    values: Arc<BTreeMap<u64, Complex64>>,
}

/// Slack allowed when checking `|value| ≤ 1` on user input.
const MODULUS_SLACK: f64 = 1e-12;

impl CustomTable {
    pub fn new(values: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, v) in values {
            if n == 0 {
                return Err(Error::invalid("custom table: indices start at 1"));
            }
            if !(v.norm() <= 1.0 + MODULUS_SLACK) {
                return Err(Error::invalid(format!(
                    "custom table: |a_{n}| = {} exceeds 1",
                    v.norm()
                )));
            }
            if map.insert(n, v).is_some() {
                return Err(Error::invalid(format!("custom table: duplicate index {n}")));
            }
        }
        Ok(CustomTable {
            values: Arc::new(map),
        })
    }

    /// Parse CSV rows `n,re,im` (with that header line).
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            n: u64,
            re: f64,
            im: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let Row { n, re, im } = rec?;
            rows.push((n, Complex64::new(re, im)));
        }
        Self::new(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn get(&self, n: u64) -> Complex64 {
        self.values.get(&n).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn integral(&self) -> bool {
        self.values
            .values()
            .all(|v| v.im == 0.0 && (v.re == 0.0 || v.re == 1.0 || v.re == -1.0))
    }
}

impl BoundedSequence {
    pub fn rademacher(seed: u64) -> Self {
        BoundedSequence::Rademacher { seed }
    }

    pub fn jacobi_character(p: u64) -> Result<Self> {
        if p % 2 == 0 {
            return Err(Error::invalid(format!(
                "jacobi_character: p = {p} must be odd"
            )));
        }
        Ok(BoundedSequence::JacobiCharacter { p })
    }

    pub fn point_mass(p: u64) -> Self {
        BoundedSequence::PointMass { p }
    }

    /// True when every value lies in {-1, 0, 1}, so sums can be done in integers.
    pub fn is_integral(&self) -> bool {
        match self {
            BoundedSequence::CustomTable(t) => t.integral(),
            _ => true,
        }
    }

    pub fn eval(&self, n: u64) -> Complex64 {
        match self {
            BoundedSequence::CustomTable(t) => t.get(n),
            _ => Complex64::new(self.eval_integral(n).unwrap_or(0) as f64, 0.0),
        }
    }

    /// Integer value for the integral kinds, `None` otherwise.
    pub fn eval_integral(&self, n: u64) -> Option<i8> {
        Some(match *self {
            BoundedSequence::ConstantOne => 1,
            BoundedSequence::Rademacher { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(n as u128);
                sign_of(rng.next_u32())
            }
            BoundedSequence::JacobiCharacter { p } => jacobi_unchecked(n, p),
            BoundedSequence::PointMass { p } => (n == p) as i8,
            BoundedSequence::CustomTable(ref t) => {
                if !t.integral() {
                    return None;
                }
                t.get(n).re as i8
            }
        })
    }

    /// Integer values for `n = lo..=hi`; equal to calling
    /// [`eval_integral`](Self::eval_integral) pointwise.
    pub fn integral_range(&self, lo: u64, hi: u64) -> Option<Vec<i8>> {
        if lo > hi {
            return Some(Vec::new());
        }
        match *self {
            BoundedSequence::Rademacher { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(lo as u128);
                Some((lo..=hi).map(|_| sign_of(rng.next_u32())).collect())
            }
            _ if self.is_integral() => (lo..=hi).map(|n| self.eval_integral(n)).collect(),
            _ => None,
        }
    }

    pub fn complex_range(&self, lo: u64, hi: u64) -> Vec<Complex64> {
        match self.integral_range(lo, hi) {
            Some(v) => v
                .into_iter()
                .map(|x| Complex64::new(x as f64, 0.0))
                .collect(),
            None => (lo..=hi).map(|n| self.eval(n)).collect(),
        }
    }

    /// Parse a sequence descriptor: `one`, `rademacher:SEED`, `jacobi:P`,
    /// `point:P` or `csv:PATH`.
    pub fn from_descriptor(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |what: &str| -> Result<u64> {
            arg.ok_or_else(|| Error::invalid(format!("sequence `{s}`: missing {what}")))?
                .parse()
                .map_err(|_| Error::invalid(format!("sequence `{s}`: bad {what}")))
        };
        match kind {
            "one" | "constant_one" => Ok(BoundedSequence::ConstantOne),
            "rademacher" => Ok(BoundedSequence::rademacher(num("seed")?)),
            "jacobi" | "jacobi_character" => BoundedSequence::jacobi_character(num("prime")?),
            "point" | "point_mass" => Ok(BoundedSequence::point_mass(num("index")?)),
            "csv" => {
                let path = arg.ok_or_else(|| Error::invalid("sequence csv: missing path"))?;
                Ok(BoundedSequence::CustomTable(CustomTable::from_csv_path(
                    path,
                )?))
            }
            _ => Err(Error::invalid(format!("unknown sequence kind `{kind}`"))),
        }
    }
}

impl FromStr for BoundedSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_descriptor(s)
    }
}

impl fmt::Display for BoundedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundedSequence::ConstantOne => write!(f, "one"),
            BoundedSequence::Rademacher { seed } => write!(f, "rademacher:{seed}"),
            BoundedSequence::JacobiCharacter { p } => write!(f, "jacobi:{p}"),
            BoundedSequence::PointMass { p } => write!(f, "point:{p}"),
            BoundedSequence::CustomTable(t) => write!(f, "custom[{} entries]", t.len()),
        }
    }
}

#[inline]
fn sign_of(word: u32) -> i8 {
    if word & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Weight `(n / scale)^c`, at most 1 for `n ≤ scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerWeight {
    pub c: f64,
    pub scale: f64,
}

impl PowerWeight {
    pub fn new(c: f64, scale: f64) -> Result<Self> {
        if !(c >= 0.0) || !(scale > 0.0) {
            return Err(Error::invalid("PowerWeight: need c ≥ 0 and scale > 0"));
        }
        Ok(PowerWeight { c, scale })
    }

    pub fn normalized_weight(&self, n: u64) -> Result<f64> {
        if n as f64 > self.scale {
            return Err(Error::invalid(format!(
                "normalized_weight: n = {n} exceeds scale {}",
                self.scale
            )));
        }
        if self.c == 0.0 {
            return Ok(1.0);
        }
        Ok((n as f64 / self.scale).powf(self.c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::euler_criterion_oracle;
    use proptest::prelude::*;

    #[test]
    fn documented_values() {
        let chi = BoundedSequence::jacobi_character(11).unwrap();
        assert_eq!(euler_criterion_oracle(2, 11).unwrap().as_i8(), -1);
        assert_eq!(chi.eval(2), Complex64::new(-1.0, 0.0));
        assert_eq!(
            BoundedSequence::point_mass(11).eval(11),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            BoundedSequence::point_mass(11).eval(12),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            BoundedSequence::ConstantOne.eval(999),
            Complex64::new(1.0, 0.0)
        );
        assert!(BoundedSequence::jacobi_character(10).is_err());
    }

    #[test]
    fn weights() {
        let w0 = PowerWeight::new(0.0, 5.0).unwrap();
        assert_eq!(w0.normalized_weight(3).unwrap(), 1.0);
        assert_eq!(
            PowerWeight::new(1.0, 100.0)
                .unwrap()
                .normalized_weight(50)
                .unwrap(),
            0.5
        );
        assert_eq!(
            PowerWeight::new(2.0, 10.0)
                .unwrap()
                .normalized_weight(10)
                .unwrap(),
            1.0
        );
        assert!(PowerWeight::new(1.0, 10.0)
            .unwrap()
            .normalized_weight(11)
            .is_err());
        assert!(PowerWeight::new(-1.0, 10.0).is_err());
    }

    #[test]
    fn rademacher_range_matches_pointwise() {
        let s = BoundedSequence::rademacher(42);
        let bulk = s.integral_range(1000, 1200).unwrap();
        for (i, v) in bulk.iter().enumerate() {
            assert_eq!(Some(*v), s.eval_integral(1000 + i as u64));
        }
        // out of order evaluation gives the same value
        assert_eq!(s.eval_integral(77), s.eval_integral(77));
    }

    #[test]
    fn rademacher_seeds_decorrelate() {
        let n = 100_000;
        let a = BoundedSequence::rademacher(1).integral_range(1, n).unwrap();
        let b = BoundedSequence::rademacher(2).integral_range(1, n).unwrap();
        let a2 = BoundedSequence::rademacher(1).integral_range(1, n).unwrap();
        assert_eq!(a, a2);
        let corr: i64 = a.iter().zip(&b).map(|(&x, &y)| (x * y) as i64).sum();
        assert!((corr as f64 / n as f64).abs() < 0.02);
        let mean: i64 = a.iter().map(|&x| x as i64).sum();
        assert!((mean as f64 / n as f64).abs() < 0.02);
    }

    #[test]
    fn custom_table_csv() {
        let csv = "n,re,im\n1,1,0\n3,-1,0\n4, 0.6, 0.8\n";
        let t = CustomTable::from_csv_reader(csv.as_bytes()).unwrap();
        let s = BoundedSequence::CustomTable(t);
        assert!(!s.is_integral());
        assert_eq!(s.eval(2), Complex64::new(0.0, 0.0));
        assert_eq!(s.eval(4), Complex64::new(0.6, 0.8));
        assert_eq!(s.eval_integral(1), None);

        let int = CustomTable::from_csv_reader("n,re,im\n2,1,0\n5,-1,0\n".as_bytes()).unwrap();
        let s = BoundedSequence::CustomTable(int);
        assert!(s.is_integral());
        assert_eq!(s.integral_range(1, 6).unwrap(), vec![0, 1, 0, 0, -1, 0]);

        assert!(CustomTable::from_csv_reader("n,re,im\n1,1,1\n".as_bytes()).is_err());
        assert!(CustomTable::from_csv_reader("n,re,im\n1,x,1\n".as_bytes()).is_err());
        assert!(CustomTable::from_csv_reader("n,re,im\n1,1,0\n1,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn descriptors() {
        for d in ["one", "rademacher:7", "jacobi:11", "point:13"] {
            let s: BoundedSequence = d.parse().unwrap();
            assert_eq!(s.to_string(), d);
        }
        assert!("jacobi:12".parse::<BoundedSequence>().is_err());
        assert!("rademacher".parse::<BoundedSequence>().is_err());
        assert!("nope".parse::<BoundedSequence>().is_err());
    }

    fn any_sequence() -> impl Strategy<Value = BoundedSequence> {
        prop_oneof![
            Just(BoundedSequence::ConstantOne),
            any::<u64>().prop_map(BoundedSequence::rademacher),
            (0u64..5000).prop_map(|k| BoundedSequence::JacobiCharacter { p: 2 * k + 1 }),
            (1u64..5000).prop_map(BoundedSequence::point_mass),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]
        #[test]
        fn modulus_at_most_one(s in any_sequence(), n in 1u64..10_000_000) {
            prop_assert!(s.eval(n).norm() <= 1.0);
        }
    }
}
