//! Fundamental solutions of `u² - Δv² = 4`.

use crate::arith::{is_square, isqrt};
use crate::error::{GeomatchError, Result};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

/// Ascending search over `v` stops here; larger units come from the
/// continued fraction of `(1 + √Δ)/2` or `√Δ/2`.
pub const BRUTE_FORCE_LIMIT: i128 = 1_000_000;

/// The unit `(u + v√Δ)/2` of norm 1, minimal with `u, v > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PellUnit {
    pub delta: i128,
    #[serde(serialize_with = "ser_big")]
    pub u: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub v: BigInt,
}

fn ser_big<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// `log((u + v√Δ)/2)` for a norm-one unit with `u ≥ 3`, written as
/// `log u + log((1 + √(1 - 4/u²))/2)` so huge `u` stay in range.
pub fn unit_log(u: &BigInt) -> f64 {
    let shift = u.bits().saturating_sub(900);
    let mant = (u >> shift).to_f64().unwrap_or(f64::MAX);
    let inv_sq = if shift > 0 { 0.0 } else { 4.0 / (mant * mant) };
    mant.ln() + shift as f64 * std::f64::consts::LN_2 + ((1.0 + (1.0 - inv_sq).sqrt()) / 2.0).ln()
}

impl PellUnit {
    pub fn log(&self) -> f64 {
        unit_log(&self.u)
    }

    pub fn small(&self) -> Option<(i128, i128)> {
        Some((self.u.to_i128()?, self.v.to_i128()?))
    }
}

pub fn pell_fundamental(delta: i128) -> Result<PellUnit> {
    if delta <= 0 || is_square(delta) {
        return Err(GeomatchError::SquareDiscriminant(delta));
    }
    let mut v: i128 = 1;
    while v <= BRUTE_FORCE_LIMIT {
        if let Some(dv) = delta.checked_mul(v * v) {
            let n = dv + 4;
            let u = isqrt(n as u128) as i128;
            if u * u == n {
                return Ok(PellUnit { delta, u: u.into(), v: v.into() });
            }
        } else {
            break;
        }
        v += 1;
    }
    continued_fraction(delta)
}

/// Walks the convergents `h/k` of `√Δ`. For `Δ > 16` every solution of
/// `u² - Δv² = ±4` has `u/v` among them (with `(u, v) = (h, k)` for norm
/// `±4`, `(2h, 2k)` for norm `±1`). A norm `-4` unit is squared.
fn continued_fraction(delta: i128) -> Result<PellUnit> {
    if delta <= 16 {
        return Err(GeomatchError::InvalidInput(format!("continued fraction needs Δ > 16, got {delta}")));
    }
    let d = BigInt::from(delta);
    let a0 = BigInt::from(isqrt(delta as u128));
    let (mut m, mut q, mut a) = (BigInt::zero(), BigInt::one(), a0.clone());
    let (mut h_prev, mut h) = (BigInt::one(), a0.clone());
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    let mut best: Option<(BigInt, BigInt, bool)> = None;
    loop {
        let n = &h * &h - &d * &k * &k;
        let cand = match n.to_i64() {
            Some(4) => Some((h.clone(), k.clone(), true)),
            Some(-4) => Some((h.clone(), k.clone(), false)),
            Some(1) => Some((&h * 2, &k * 2, true)),
            Some(-1) => Some((&h * 2, &k * 2, false)),
            _ => None,
        };
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|b| c.1 < b.1) {
                best = Some(c);
            }
        }
        if let Some(b) = &best {
            if k > b.1 {
                break;
            }
        }
        m = &a * &q - &m;
        q = (&d - &m * &m) / &q;
        a = (&a0 + &m) / &q;
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
    }
    let (u, v, positive) = best.expect("loop exits with a solution");
    let (u, v) = if positive { (u, v) } else { ((&u * &u + &d * &v * &v) / 2, &u * &v) };
    Ok(PellUnit { delta, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = |d| pell_fundamental(d).unwrap().small().unwrap();
        assert_eq!(s(5), (3, 1));
        assert_eq!(s(8), (6, 2));
        assert_eq!(s(12), (4, 1));
        assert!(pell_fundamental(9).is_err());
    }

    #[test]
    fn continued_fraction_agrees_with_search() {
        for d in 17..400i128 {
            if is_square(d) || !(d % 4 == 0 || d % 4 == 1) {
                continue;
            }
            let a = pell_fundamental(d).unwrap();
            let b = continued_fraction(d).unwrap();
            assert_eq!(a, b, "Δ={d}");
        }
    }

    #[test]
    fn log_matches_float() {
        let p = pell_fundamental(5).unwrap();
        assert!((p.log() - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
    }
}
