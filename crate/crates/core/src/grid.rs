//! Sample points on the valuation grids used by the verification suites.

use crate::error::Result;
use crate::padic::{PAdicContext, RegularElement};

/// Field points `α + βθ₀` with `v(α - 1) ≤ max_a` (several residues when 0)
/// and `β = p^vb`, `vb ≤ max_b`.
pub fn field_points(ctx: &PAdicContext, max_a: u32, max_b: u32) -> Vec<RegularElement> {
    let mut out = Vec::new();
    for va in 0..=max_a {
        for vb in 0..=max_b {
            let alphas = if va == 0 {
                vec![0, 2, ctx.reduce(-1)]
            } else {
                vec![ctx.reduce(1 + ctx.pow_p(va)), ctx.reduce(1 - 2 * ctx.pow_p(va))]
            };
            for alpha in alphas {
                out.push(RegularElement::Field { alpha, beta: ctx.pow_p(vb) });
            }
        }
    }
    out
}

/// Split points `(a, a - p^gap)` of unit roots with `gap ≤ max_gap` and
/// `v(a - 1) ≤ max_a`.
pub fn split_points(ctx: &PAdicContext, max_gap: u32, max_a: u32) -> Vec<RegularElement> {
    let mut out = Vec::new();
    for gap in 0..=max_gap {
        for va in 0..=max_a {
            let a = ctx.reduce(1 + ctx.pow_p(va));
            let b = ctx.sub(a, ctx.pow_p(gap));
            let x = RegularElement::Split { a, b };
            if ctx.is_unit(a) && ctx.is_unit(b) && x.split_gap(ctx).ok() == Some(gap) {
                out.push(x);
            }
        }
    }
    out
}

/// `v(a - b)` (split) or `v(β)` (field): the last coset index that can
/// contribute to an orbital integral at `x`.
pub fn coset_depth(ctx: &PAdicContext, x: &RegularElement) -> Result<u32> {
    match *x {
        RegularElement::Split { a, b } => ctx.valuation(ctx.sub(a, b)),
        RegularElement::Field { beta, .. } => ctx.valuation(beta),
    }
}
