//! Unit indices recomputed by exhaustive enumeration in finite quotients.
//!
//! Orders are described by four `Z_p`-coordinates: matrix entries for M and J,
//! `(u0, u1, w0, w1)` for `O_D`. Membership in every radical power is a
//! coordinate-wise valuation condition, so quotient sizes factor over the
//! coordinates; the per-coordinate thresholds are found by probing the
//! membership predicates rather than read from a formula.

use crate::arith::pow_i128;
use crate::chain::{
    congruence_subgroup_membership, radical_power_membership, DivElem, DivisionModel,
    LocalOrderElement, Mat2, OrderKind,
};
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, TorusData};
use std::collections::BTreeSet;

/// Enumerations larger than this are refused.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

pub fn check_size(size: u128) -> Result<()> {
    if size > ENUMERATION_LIMIT {
        Err(GeomatchError::EnumerationTooLarge { size, limit: ENUMERATION_LIMIT })
    } else {
        Ok(())
    }
}

fn element(kind: OrderKind, ctx: &PAdicContext, c: [i128; 4]) -> LocalOrderElement {
    match kind {
        OrderKind::D => LocalOrderElement::Division(DivElem { u: (c[0], c[1]), w: (c[2], c[3]) }),
        _ => LocalOrderElement::Matrix(Mat2::new(ctx, c)),
    }
}

fn unit_vector(i: usize, x: i128) -> [i128; 4] {
    let mut c = [0; 4];
    c[i] = x;
    c
}

/// For each coordinate, the least `k` with `p^k e_i ∈ 𝔓^n`.
pub fn coordinate_thresholds(kind: OrderKind, n: u32, p: u64) -> Result<[u32; 4]> {
    let ctx = PAdicContext::new(p, n + 8)?;
    let mut out = [0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut k = 0;
        loop {
            let x = element(kind, &ctx, unit_vector(i, ctx.pow_p(k)));
            if radical_power_membership(kind, &ctx, &x, n)? {
                break;
            }
            k += 1;
            if k > n + 2 {
                return Err(GeomatchError::InvalidInput("radical threshold not found".into()));
            }
        }
        *slot = k;
    }
    Ok(out)
}

/// `|(O/𝔓)^×|`, counted in `O/pO` as units divided by `|𝔓/pO|`.
pub fn residue_unit_count(kind: OrderKind, p: u64) -> Result<u128> {
    check_size((p as u128).pow(4))?;
    let ctx = PAdicContext::new(p, 8)?;
    let p = p as i128;
    let mut units = 0u128;
    let mut radical = 0u128;
    for code in 0..p.pow(4) {
        let c = [code % p, (code / p) % p, (code / (p * p)) % p, code / (p * p * p)];
        let x = element(kind, &ctx, c);
        if !radical_power_membership(kind, &ctx, &x, 0)? {
            continue;
        }
        if congruence_subgroup_membership(kind, &ctx, &x, 0)? {
            units += 1;
        }
        if radical_power_membership(kind, &ctx, &x, 1)? {
            radical += 1;
        }
    }
    Ok(units / radical)
}

/// `|𝔓/𝔓^n|` as a product of per-coordinate quotient sizes.
pub fn radical_quotient_size(kind: OrderKind, n: u32, p: u64) -> Result<u128> {
    let lo = coordinate_thresholds(kind, 1, p)?;
    let hi = coordinate_thresholds(kind, n, p)?;
    let mut size = 1u128;
    for i in 0..4 {
        let span = hi[i].saturating_sub(lo[i]);
        let modulus = pow_i128(p as i128, hi[i]);
        check_size(modulus as u128)?;
        let ctx = PAdicContext::new(p, hi[i] + 4)?;
        let count = |level: u32| -> Result<u128> {
            let mut c = 0;
            for x in 0..modulus {
                let e = element(kind, &ctx, unit_vector(i, x));
                if radical_power_membership(kind, &ctx, &e, level)? {
                    c += 1;
                }
            }
            Ok(c)
        };
        let ratio = count(1)? / count(n)?;
        debug_assert_eq!(ratio, (p as u128).pow(span));
        size *= ratio;
    }
    Ok(size)
}

/// `[O^× : U^n]` by enumeration.
pub fn enumerate_order_unit_index(kind: OrderKind, n: u32, p: u64) -> Result<u128> {
    if n == 0 {
        return Ok(1);
    }
    Ok(residue_unit_count(kind, p)? * radical_quotient_size(kind, n, p)?)
}

/// `U_o^m` reduced into `(Z/p^h)^×`.
pub fn unit_filtration_set(p: u64, m: u32, h: u32) -> BTreeSet<i128> {
    let p = p as i128;
    (0..pow_i128(p, h))
        .filter(|&d| d % p != 0 && (m == 0 || (d - 1) % pow_i128(p, m) == 0))
        .collect()
}

/// The image `det(U^n)` (reduced norm for D) in `(Z/p^h)^×`, with `h`.
pub fn enumerate_norm_image(kind: OrderKind, n: u32, p: u64) -> Result<(u32, BTreeSet<i128>)> {
    let t = if n == 0 { [0; 4] } else { coordinate_thresholds(kind, n, p)? };
    let h = t.iter().copied().max().unwrap_or(0) + 2;
    let ctx = PAdicContext::new(p, h + 4)?;
    let modulus = pow_i128(p as i128, h);
    let ranges: Vec<i128> = t.iter().map(|&k| pow_i128(p as i128, h - k.min(h))).collect();
    let total: u128 = ranges.iter().map(|&r| r as u128).product();
    check_size(total)?;
    let model = DivisionModel::new(ctx);
    let mut image = BTreeSet::new();
    for code in 0..total as i128 {
        let mut rest = code;
        let mut c = [0i128; 4];
        for i in 0..4 {
            c[i] = (rest % ranges[i]) * pow_i128(p as i128, t[i]);
            rest /= ranges[i];
        }
        if n >= 1 {
            // Elements of U^n are 1 + (radical element).
            match kind {
                OrderKind::D => c[0] += 1,
                _ => {
                    c[0] += 1;
                    c[3] += 1;
                }
            }
        }
        let x = element(kind, &ctx, c);
        if !congruence_subgroup_membership(kind, &ctx, &x, n)? {
            continue;
        }
        let d = match x {
            LocalOrderElement::Matrix(m) => m.det(&ctx).0,
            LocalOrderElement::Division(d) => model.reduced_norm(&d),
        };
        image.insert(d.rem_euclid(modulus));
    }
    Ok((h, image))
}

/// The largest `m` with `det(U^n) = U_o^m` (for `p = 2` the levels 0 and 1
/// name the same subgroup).
pub fn enumerate_norm_image_level(kind: OrderKind, n: u32, p: u64) -> Result<u32> {
    let (h, image) = enumerate_norm_image(kind, n, p)?;
    for m in (0..h).rev() {
        if unit_filtration_set(p, m, h) == image {
            return Ok(m);
        }
    }
    Err(GeomatchError::InvalidInput(format!(
        "norm image of U^{n} for {} is not a unit filtration subgroup",
        kind.name()
    )))
}

/// `[O_E^× : L_r^×]`, counted in `O_E / p^r O_E`.
pub fn enumerate_field_order_index(torus: &TorusData, r: u32) -> Result<u128> {
    if r == 0 {
        return Ok(1);
    }
    let p = torus.ctx.p() as i128;
    let m = pow_i128(p, r);
    check_size((m * m) as u128)?;
    let mut all = 0u128;
    let mut rational = 0u128;
    for alpha in 0..m {
        for beta in 0..m {
            if torus.is_unit(alpha, beta) {
                all += 1;
                if beta == 0 {
                    rational += 1;
                }
            }
        }
    }
    Ok(all / rational)
}

/// `|L_k^× / L_{k+r}^×|`, counted in `O_E / p^(k+r) O_E`.
pub fn enumerate_quad_order_index(torus: &TorusData, k: u32, r: u32) -> Result<u128> {
    let p = torus.ctx.p() as i128;
    let m = pow_i128(p, k + r);
    check_size((m * m) as u128)?;
    let count = |level: u32| -> u128 {
        let step = pow_i128(p, level);
        let mut c = 0u128;
        for alpha in 0..m {
            let mut beta = 0;
            while beta < m {
                if torus.is_unit(alpha, beta) {
                    c += 1;
                }
                beta += step;
            }
        }
        c
    };
    Ok(count(k) / count(k + r))
}

/// `[o^× × o^× : T ∩ n_r K n_r^{-1}]` for the diagonal torus, by conjugating
/// every pair of units mod `p^r` and testing integrality.
pub fn enumerate_split_index(p: u64, r: u32) -> Result<u128> {
    if r == 0 {
        return Ok(1);
    }
    let ctx = PAdicContext::new(p, 2 * r + 4)?;
    let m = ctx.pow_p(r);
    check_size((m * m) as u128)?;
    let (nr, nr_inv) = unipotent(&ctx, r);
    let mut all = 0u128;
    let mut inside = 0u128;
    for a in (0..m).filter(|&a| ctx.is_unit(a)) {
        for b in (0..m).filter(|&b| ctx.is_unit(b)) {
            all += 1;
            let t = Mat2::new(&ctx, [a, 0, 0, b]);
            if nr_inv.mul(&ctx, &t).mul(&ctx, &nr).is_integral(&ctx)? {
                inside += 1;
            }
        }
    }
    Ok(all / inside)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IndexReport {
    pub kind: OrderKind,
    pub n: u32,
    pub q: u64,
    pub m: u32,
    pub enumerated: u128,
    pub closed_form: u128,
}

impl IndexReport {
    pub fn ok(&self) -> bool {
        self.enumerated == self.closed_form
    }
}

/// `[O^× : U^n]` by enumeration next to the closed form, at a precision `m`
/// whose full quotient `p^(4m)` is within the enumeration limit.
pub fn index_enumeration_test(kind: OrderKind, n: u32, q: u64, m: u32) -> Result<IndexReport> {
    check_size((q as u128).saturating_pow(4 * m))?;
    if n > 2 * m {
        return Err(GeomatchError::PrecisionExhausted { p: q, precision: m, guard: 0 });
    }
    Ok(IndexReport {
        kind,
        n,
        q,
        m,
        enumerated: enumerate_order_unit_index(kind, n, q)?,
        closed_form: crate::chain::order_unit_index(kind, n, q),
    })
}

/// `n_r = [[1, p^-r], [0, 1]]` and its inverse.
pub fn unipotent(ctx: &PAdicContext, r: u32) -> (Mat2, Mat2) {
    let pr = ctx.pow_p(r);
    (
        Mat2::with_den(ctx, [pr, 1, 0, pr], r),
        Mat2::with_den(ctx, [pr, -1, 0, pr], r),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{norm_image_level, order_unit_index};
    use crate::padic::{quad_order_unit_index, TorusKind};

    #[test]
    fn index_examples() {
        assert_eq!(enumerate_order_unit_index(OrderKind::M, 1, 2).unwrap(), 6);
        assert_eq!(enumerate_order_unit_index(OrderKind::J, 3, 2).unwrap(), 16);
        assert_eq!(enumerate_order_unit_index(OrderKind::D, 2, 2).unwrap(), 12);
    }

    #[test]
    fn indices_match_closed_forms() {
        for p in [2u64, 3] {
            for kind in [OrderKind::M, OrderKind::J, OrderKind::D] {
                for n in 0..=4 {
                    assert_eq!(
                        enumerate_order_unit_index(kind, n, p).unwrap(),
                        order_unit_index(kind, n, p),
                        "{kind:?} n={n} p={p}"
                    );
                    let (h, image) = enumerate_norm_image(kind, n, p).unwrap();
                    assert_eq!(
                        image,
                        unit_filtration_set(p, norm_image_level(kind, n), h),
                        "{kind:?} n={n} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn quadratic_order_indices() {
        for p in [2u64, 3] {
            for kind in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
                let ctx = PAdicContext::new(p, 12).unwrap();
                let t = TorusData::standard_field(ctx, kind).unwrap();
                for k in 0..=2 {
                    for r in 1..=2 {
                        assert_eq!(
                            enumerate_quad_order_index(&t, k, r).unwrap(),
                            quad_order_unit_index(k, r, t.e(), p),
                            "p={p} {kind:?} k={k} r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn index_report_examples() {
        assert!(index_enumeration_test(OrderKind::M, 1, 2, 2).unwrap().ok());
        let j = index_enumeration_test(OrderKind::J, 3, 2, 3).unwrap();
        assert_eq!((j.enumerated, j.closed_form), (16, 16));
        let d = index_enumeration_test(OrderKind::D, 2, 2, 3).unwrap();
        assert_eq!((d.enumerated, d.closed_form), (12, 12));
        assert!(index_enumeration_test(OrderKind::M, 1, 3, 4).is_err());
    }

    #[test]
    fn split_index_is_euler_phi() {
        assert_eq!(enumerate_split_index(3, 0).unwrap(), 1);
        assert_eq!(enumerate_split_index(3, 2).unwrap(), 6);
        assert_eq!(enumerate_split_index(2, 3).unwrap(), 4);
    }
}
