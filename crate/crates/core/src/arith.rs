//! Jacobi symbol kernel and elementary arithmetic predicates.

use std::fmt;
use std::mem::swap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Value of a Jacobi symbol. `Zero` exactly when the arguments share a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i8)]
pub enum JacobiValue {
    MinusOne = -1,
    Zero = 0,
    One = 1,
}

impl JacobiValue {
    #[inline]
    pub fn as_i8(self) -> i8 {
        self as i8
    }

    #[inline]
    pub(crate) fn from_i8(v: i8) -> Self {
        match v {
            1 => JacobiValue::One,
            -1 => JacobiValue::MinusOne,
            _ => JacobiValue::Zero,
        }
    }
}

impl fmt::Display for JacobiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Jacobi symbol `(n/m)` for `n ≥ 1` and odd `m ≥ 1`.
///
/// `(n/1) = 1` for every `n`. Even or zero moduli are rejected rather than
/// silently extended to the Kronecker symbol.
pub fn jacobi_symbol(n: u64, m: u64) -> Result<JacobiValue> {
    if n == 0 {
        return Err(Error::invalid("jacobi_symbol: n must be positive"));
    }
    if m == 0 || m % 2 == 0 {
        return Err(Error::invalid(format!(
            "jacobi_symbol: modulus must be a positive odd integer, got {m}"
        )));
    }
    Ok(JacobiValue::from_i8(jacobi_unchecked(n, m)))
}

/// Binary Jacobi algorithm. `m` must be odd; `n` may be zero.
///
/// A single reduction `n mod m` is done up front; the loop itself only uses
/// shifts, subtractions and the 2-adic / reciprocity sign rules.
#[inline]
pub fn jacobi_unchecked(n: u64, m: u64) -> i8 {
    debug_assert!(m & 1 == 1);
    let mut a = if n >= m { n % m } else { n };
    let mut b = m;
    let mut neg = false;
    if a == 0 {
        return (b == 1) as i8;
    }
    loop {
        let tz = a.trailing_zeros();
        a >>= tz;
        // (2/b) = -1 iff b ≡ 3, 5 (mod 8)
        if tz & 1 == 1 && ((b >> 1) ^ (b >> 2)) & 1 == 1 {
            neg = !neg;
        }
        if a == b {
            return if a == 1 {
                if neg {
                    -1
                } else {
                    1
                }
            } else {
                0
            };
        }
        if a < b {
            // both odd: (a/b)(b/a) = -1 iff a ≡ b ≡ 3 (mod 4)
            if a & b & 2 != 0 {
                neg = !neg;
            }
            swap(&mut a, &mut b);
        }
        a -= b;
    }
}

/// `n^((p-1)/2) mod p` mapped to {-1, 0, 1}. Test oracle for [`jacobi_symbol`].
///
/// `p` is expected to be an odd prime; a residue outside {0, 1, p-1} proves
/// it is not and is reported as an invalid argument.
pub fn euler_criterion_oracle(n: u64, p: u64) -> Result<JacobiValue> {
    if p < 3 || p % 2 == 0 {
        return Err(Error::invalid(format!(
            "euler_criterion_oracle: p must be an odd prime, got {p}"
        )));
    }
    let r = pow_mod(n % p, (p - 1) / 2, p);
    match r {
        0 => Ok(JacobiValue::Zero),
        1 => Ok(JacobiValue::One),
        r if r == p - 1 => Ok(JacobiValue::MinusOne),
        _ => Err(Error::invalid(format!(
            "euler_criterion_oracle: {p} is not prime"
        ))),
    }
}

/// `(-1)^((n-1)(m-1)/4)` for odd `n`, `m`.
pub fn reciprocity_sign(n: u64, m: u64) -> Result<i8> {
    if n % 2 == 0 || m % 2 == 0 {
        return Err(Error::invalid(
            "reciprocity_sign: both arguments must be odd",
        ));
    }
    Ok(if n % 4 == 3 && m % 4 == 3 { -1 } else { 1 })
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut acc: u128 = 1;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Trial-division primality test; only used at desk scale.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Smallest prime strictly greater than `x`.
pub fn next_prime_after(x: f64) -> u64 {
    let mut p = if x < 2.0 { 2 } else { x.floor() as u64 + 1 };
    while !is_prime(p) {
        p += 1;
    }
    p
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        a %= b;
        swap(&mut a, &mut b);
    }
    a
}

/// `floor(x^(1/k))` computed exactly.
pub fn iroot(x: u64, k: u32) -> u64 {
    if x < 2 || k == 1 {
        return x;
    }
    let mut r = (x as f64).powf(1.0 / k as f64).round() as u64;
    let pow_le = |r: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            acc *= r as u128;
            if acc > x as u128 {
                return false;
            }
        }
        true
    };
    while !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

pub fn isqrt(x: u64) -> u64 {
    iroot(x, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn odd() -> impl Strategy<Value = u64> {
        (0u64..500_000).prop_map(|k| 2 * k + 1)
    }

    #[test]
    fn documented_values() {
        assert_eq!(jacobi_symbol(7, 1).unwrap(), JacobiValue::One);
        assert_eq!(jacobi_symbol(15, 9).unwrap(), JacobiValue::Zero);
        // 3^2 mod 5 = 4 ≡ -1
        assert_eq!(pow_mod(3, 2, 5), 4);
        assert_eq!(jacobi_symbol(3, 5).unwrap(), JacobiValue::MinusOne);
        // (2/3)(2/5) = (-1)(-1)
        assert_eq!(
            euler_criterion_oracle(2, 3).unwrap().as_i8()
                * euler_criterion_oracle(2, 5).unwrap().as_i8(),
            1
        );
        assert_eq!(jacobi_symbol(2, 15).unwrap(), JacobiValue::One);
    }

    #[test]
    fn euler_oracle_values() {
        assert_eq!(euler_criterion_oracle(4, 7).unwrap(), JacobiValue::One);
        assert_eq!(pow_mod(3, 3, 7), 6);
        assert_eq!(euler_criterion_oracle(3, 7).unwrap(), JacobiValue::MinusOne);
        assert_eq!(euler_criterion_oracle(14, 7).unwrap(), JacobiValue::Zero);
        assert!(euler_criterion_oracle(3, 8).is_err());
        assert!(euler_criterion_oracle(2, 15).is_err());
    }

    #[test]
    fn reciprocity_sign_values() {
        assert_eq!(reciprocity_sign(3, 7).unwrap(), -1);
        assert_eq!(reciprocity_sign(1, 99).unwrap(), 1);
        assert_eq!(reciprocity_sign(5, 7).unwrap(), 1);
        assert!(reciprocity_sign(4, 7).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(jacobi_symbol(3, 4).is_err());
        assert!(jacobi_symbol(3, 0).is_err());
        assert!(jacobi_symbol(0, 5).is_err());
    }

    #[test]
    fn matches_euler_criterion_on_small_primes() {
        for p in (3..200u64).filter(|&p| is_prime(p)) {
            for n in 1..=10_000u64 {
                assert_eq!(
                    jacobi_symbol(n, p).unwrap(),
                    euler_criterion_oracle(n, p).unwrap(),
                    "({n}/{p})"
                );
            }
        }
    }

    #[test]
    fn large_arguments() {
        let m = u64::MAX; // odd, = 3 * 5 * 17 * 257 * 641 * 65537 * 6700417
        assert_eq!(jacobi_unchecked(3, m), 0);
        let p = 18_446_744_073_709_551_557u64; // largest 64-bit prime
        for n in [2u64, 3, 5, 12_345_678_901, u64::MAX - 1] {
            assert_eq!(
                jacobi_symbol(n, p).unwrap(),
                euler_criterion_oracle(n, p).unwrap()
            );
        }
    }

    #[test]
    fn integer_roots() {
        assert_eq!(iroot(10_000, 4), 10);
        assert_eq!(iroot(9_999, 4), 9);
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
        assert_eq!(iroot(1_000_000, 3), 100);
        assert_eq!(next_prime_after(10.0), 11);
        assert_eq!(next_prime_after(11.0), 13);
        assert_eq!(next_prime_after(3.16), 5);
    }

    proptest! {
        #[test]
        fn reciprocity(n in odd(), m in odd()) {
            prop_assume!(n >= 3 && m >= 3 && gcd(n, m) == 1);
            let lhs = jacobi_unchecked(n, m);
            let rhs = reciprocity_sign(n, m).unwrap() * jacobi_unchecked(m, n);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn multiplicative_in_n(n1 in 1u64..1_000_000, n2 in 1u64..1_000_000, m in odd()) {
            prop_assert_eq!(
                jacobi_unchecked(n1 * n2, m),
                jacobi_unchecked(n1, m) * jacobi_unchecked(n2, m)
            );
        }

        #[test]
        fn multiplicative_in_m(n in 1u64..1_000_000, m1 in 0u64..50_000, m2 in 0u64..50_000) {
            let (m1, m2) = (2 * m1 + 1, 2 * m2 + 1);
            prop_assert_eq!(
                jacobi_unchecked(n, m1 * m2),
                jacobi_unchecked(n, m1) * jacobi_unchecked(n, m2)
            );
        }

        #[test]
        fn periodic(n in 1u64..u64::MAX / 2, m in odd()) {
            prop_assert_eq!(jacobi_unchecked(n, m), jacobi_unchecked(n % m, m));
        }

        #[test]
        fn squares_never_negative(k in 1u64..1_000_000, m in odd()) {
            let v = jacobi_unchecked(k * k, m);
            prop_assert!(v == 0 || v == 1);
        }

        #[test]
        fn zero_iff_common_factor(n in 1u64..1_000_000, m in odd()) {
            prop_assert_eq!(jacobi_unchecked(n, m) == 0, gcd(n, m) > 1);
        }
    }
}
