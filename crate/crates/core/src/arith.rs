//! Small integer helpers shared by every module: primality, factorisation,
//! modular inverses and exact valuations of integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    (2u64..).filter(|&n| is_prime(n)).take(count).collect()
}

/// Distinct prime factors of `|n|`, ascending. `n = 0` yields an empty list.
pub fn prime_factors(n: i128) -> Vec<u64> {
    let mut n = n.unsigned_abs();
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d as u64);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n as u64);
    }
    out
}

/// `v_p(n)` for a nonzero integer.
pub fn vp(n: i128, p: u64) -> u32 {
    assert!(n != 0, "valuation of zero");
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn pow_i128(base: i128, exp: u32) -> i128 {
    let mut r: i128 = 1;
    for _ in 0..exp {
        r = r.checked_mul(base).expect("i128 overflow in pow");
    }
    r
}

pub fn modp(x: i128, m: i128) -> i128 {
    x.rem_euclid(m)
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn mod_inv(a: i128, m: i128) -> Option<i128> {
    let (mut old_r, mut r) = (modp(a, m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(modp(old_s, m))
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i128) -> bool {
    n >= 0 && {
        let r = isqrt(n as u128);
        r * r == n as u128
    }
}

/// `q^k` as an exact rational for any integer `k`.
pub fn qpow(q: u64, k: i64) -> BigRational {
    let base = BigInt::from(q);
    let mut num = BigInt::one();
    for _ in 0..k.unsigned_abs() {
        num *= &base;
    }
    if k >= 0 {
        BigRational::from_integer(num)
    } else {
        BigRational::new(BigInt::one(), num)
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_factors() {
        assert_eq!(first_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(prime_factors(-60), vec![2, 3, 5]);
        assert_eq!(prime_factors(1), Vec::<u64>::new());
        assert_eq!(vp(12, 2), 2);
        assert_eq!(vp(-45, 3), 2);
    }

    #[test]
    fn inverses() {
        assert_eq!(mod_inv(3, 16), Some(11));
        assert_eq!(mod_inv(2, 16), None);
        assert_eq!(mod_inv(-1, 27), Some(26));
    }

    #[test]
    fn rational_powers() {
        assert_eq!(qpow(3, -2), rat(1, 9));
        assert_eq!(qpow(2, 5), rat_int(32));
    }
}
