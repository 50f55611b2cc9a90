//! Splitting of `SL_2(Z)`-classes into `Γ(N)`-classes through the finite
//! group `SL_2(Z/N)`.

use super::forms::QuadFormClass;
use super::pell::{pell_fundamental, PellUnit};
use crate::error::{GeomatchError, Result};
use serde::Serialize;
use std::collections::BTreeSet;

/// Levels above this are refused (the tables of `SL_2(Z/N)` are explicit).
pub const MAX_LEVEL: u64 = 6;

type M2 = [i128; 4];

pub fn mat_mul(x: &M2, y: &M2) -> M2 {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn reduce(x: &M2, n: i128) -> M2 {
    x.map(|e| e.rem_euclid(n))
}

fn mul_mod(x: &M2, y: &M2, n: i128) -> M2 {
    reduce(&mat_mul(x, y), n)
}

fn check_level(n: u64) -> Result<()> {
    if n == 0 || n > MAX_LEVEL {
        Err(GeomatchError::LevelTooLarge(n))
    } else {
        Ok(())
    }
}

/// All of `SL_2(Z/N)`.
pub fn sl2_mod(n: u64) -> Result<Vec<M2>> {
    check_level(n)?;
    let n = n as i128;
    let mut out = Vec::new();
    for code in 0..n.pow(4) {
        let g = [code % n, (code / n) % n, (code / n / n) % n, code / n / n / n];
        if (g[0] * g[3] - g[1] * g[2] - 1).rem_euclid(n) == 0 {
            out.push(g);
        }
    }
    Ok(out)
}

/// The subgroup of `SL_2(Z/N)` generated by `gens`.
pub fn generated_subgroup(gens: &[M2], n: u64) -> BTreeSet<M2> {
    let n = n as i128;
    let id = reduce(&[1, 0, 0, 1], n);
    let mut group = BTreeSet::from([id]);
    let mut frontier = vec![id];
    while let Some(g) = frontier.pop() {
        for s in gens {
            let h = mul_mod(&g, s, n);
            if group.insert(h) {
                frontier.push(h);
            }
        }
    }
    group
}

pub fn is_identity_mod(g: &M2, n: u64) -> bool {
    let n = n as i128;
    reduce(g, n) == reduce(&[1, 0, 0, 1], n)
}

fn is_pm_identity_mod(g: &M2, n: u64) -> bool {
    is_identity_mod(g, n) || is_identity_mod(&g.map(|e| -e), n)
}

/// `-1 ∈ Γ(N)`, tested on the matrix.
pub fn minus_one_in_level(n: u64) -> bool {
    is_identity_mod(&[-1, 0, 0, -1], n)
}

/// The generator of the centraliser `±γ₀^Z` of a class, with `γ = ±γ₀^k`.
#[derive(Debug, Clone, Serialize)]
pub struct Centralizer {
    pub unit: PellUnit,
    pub gamma0: M2,
    /// `k ≥ 1` with `γ = ±γ₀^k`.
    pub power: u32,
    /// The sign `s` in `γ = s γ₀^k`; `γ₀` is oriented so that `k > 0`.
    pub sign: i8,
}

/// `γ₀ = [[(u - Bv)/2, -Cv], [Av, (u + Bv)/2]]` from the fundamental unit of
/// the primitive form, and the exact power relation with `γ`.
pub fn centralizer(class: &QuadFormClass) -> Result<Centralizer> {
    let f = class.primitive;
    let unit = pell_fundamental(f.disc())?;
    let (u, v) = unit
        .small()
        .ok_or_else(|| GeomatchError::InvalidInput("fundamental unit exceeds the class trace".into()))?;
    let fwd = [(u - f.b * v) / 2, -f.c * v, f.a * v, (u + f.b * v) / 2];
    let inv = [fwd[3], -fwd[1], -fwd[2], fwd[0]];
    let limit = (class.t.unsigned_abs() as f64).log2().ceil() as u32 + 2;
    // Negative traces are powers of the inverse unit.
    for g0 in [fwd, inv] {
        let mut g = g0;
        for k in 1..=limit {
            for sign in [1i8, -1] {
                if g.map(|e| e * sign as i128) == class.gamma {
                    return Ok(Centralizer { unit, gamma0: g0, power: k, sign });
                }
            }
            g = mat_mul(&g, &g0);
        }
    }
    Err(GeomatchError::InvalidInput(format!("{:?} is not a power of {fwd:?}", class.gamma)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Splitting {
    /// Number of `Γ(N)`-classes in the `SL_2(Z)`-class (0 unless `γ ≡ 1`).
    pub count: u64,
    /// Least `j ≥ 1` with `γ₀^j ≡ ±1 mod N`; the `Γ(N)`-primitive norm is
    /// `x₀^j`.
    pub primitive_index: u32,
}

pub fn gamma_splitting(class: &QuadFormClass, cent: &Centralizer, n: u64) -> Result<Splitting> {
    check_level(n)?;
    let nn = n as i128;
    let g0 = reduce(&cent.gamma0, nn);
    let mut j = 1;
    let mut g = g0;
    while !is_pm_identity_mod(&g, n) {
        g = mul_mod(&g, &g0, nn);
        j += 1;
    }
    if !is_identity_mod(&class.gamma, n) {
        return Ok(Splitting { count: 0, primitive_index: j });
    }
    let image = generated_subgroup(&[g0, reduce(&[-1, 0, 0, -1], nn)], n);
    let total = sl2_mod(n)?.len();
    debug_assert_eq!(total % image.len(), 0);
    Ok(Splitting { count: (total / image.len()) as u64, primitive_index: j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::forms::sl2_classes;

    #[test]
    fn group_orders() {
        for (n, order) in [(1u64, 1usize), (2, 6), (3, 24), (4, 48), (5, 120), (6, 144)] {
            assert_eq!(sl2_mod(n).unwrap().len(), order);
        }
        assert!(matches!(sl2_mod(7), Err(GeomatchError::LevelTooLarge(7))));
    }

    #[test]
    fn examples() {
        let c = &sl2_classes(3).unwrap()[0];
        let z = centralizer(c).unwrap();
        assert_eq!(z.power, 1);
        let s1 = gamma_splitting(c, &z, 1).unwrap();
        assert_eq!((s1.count, s1.primitive_index), (1, 1));
        assert_eq!(gamma_splitting(c, &z, 2).unwrap().count, 0);
        // γ₀³ ≡ 1 mod 2 has trace 18.
        let c18 = sl2_classes(18).unwrap();
        let cube = c18
            .iter()
            .find(|c| centralizer(c).unwrap().unit.small() == Some((3, 1)))
            .unwrap();
        let z = centralizer(cube).unwrap();
        assert_eq!(z.power, 3);
        let s = gamma_splitting(cube, &z, 2).unwrap();
        let image = generated_subgroup(&[reduce(&z.gamma0, 2), [1, 0, 0, 1]], 2).len() as u64;
        assert_eq!(s.count, 6 / image);
    }

    #[test]
    fn powers_are_exact() {
        for t in 3..=60i64 {
            for c in sl2_classes(t).unwrap().iter().chain(&sl2_classes(-t).unwrap()) {
                let z = centralizer(c).unwrap();
                let mut g = [1, 0, 0, 1];
                for _ in 0..z.power {
                    g = mat_mul(&g, &z.gamma0);
                }
                assert_eq!(g.map(|e| e * z.sign as i128), c.gamma);
            }
        }
    }
}
