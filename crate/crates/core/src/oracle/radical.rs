//! Intersections `𝔓^n ∩ ι(E)` for an optimal embedding `ι` of `L_r`,
//! enumerated over a window of `E` and compared with the predicted module.

use super::embed::optimal_embedding;
use super::index::check_size;
use crate::chain::{radical_power_membership, LocalOrderElement, Mat2, OrderKind};
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, TorusData, TorusKind};
use crate::oracle::orbital::rebase;
use serde::Serialize;

/// Which description of the intersection applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadicalBranch {
    /// `ϖ^n L_r` in the maximal order.
    Maximal,
    /// `ϖ^k L_r` for `n = 2k`.
    EvenLevel,
    /// `ϖ^k L_{r-1}` for `n = 2k - 1`, `r ≥ 1`.
    OddLevel,
    /// `𝒫_E^n` for `r = 0`.
    FieldIdeal,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadicalReport {
    pub kind: OrderKind,
    pub torus: TorusKind,
    pub q: u64,
    pub r: u32,
    pub n: u32,
    pub branch: RadicalBranch,
    pub enumerated: u64,
    pub predicted: u64,
    pub mismatches: Vec<(i128, i128)>,
}

impl RadicalReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && self.enumerated == self.predicted
    }
}

pub fn branch(kind: OrderKind, r: u32, n: u32) -> RadicalBranch {
    match kind {
        OrderKind::M | OrderKind::D => RadicalBranch::Maximal,
        OrderKind::J if n.is_multiple_of(2) => RadicalBranch::EvenLevel,
        OrderKind::J if r == 0 => RadicalBranch::FieldIdeal,
        OrderKind::J => RadicalBranch::OddLevel,
    }
}

fn vp(p: i128, x: i128) -> u32 {
    if x == 0 {
        return u32::MAX;
    }
    let (mut v, mut y) = (0, x);
    while y % p == 0 {
        y /= p;
        v += 1;
    }
    v
}

/// Predicted membership of `(a + c p^r θ₀)/p` for integers `a, c`, as
/// conditions on `v(a) - 1` and `v(c) - 1`.
fn predicted(br: RadicalBranch, p: i128, n: u32, a: i128, c: i128) -> bool {
    let va = vp(p, a) as i64 - 1;
    let vc = vp(p, c) as i64 - 1;
    let n = n as i64;
    match br {
        RadicalBranch::Maximal => va >= n && vc >= n,
        RadicalBranch::EvenLevel => va >= n / 2 && vc >= n / 2,
        RadicalBranch::OddLevel => {
            let k = (n + 1) / 2;
            va >= k && vc >= k - 1
        }
        RadicalBranch::FieldIdeal => (2 * va).min(2 * vc + 1) >= n,
    }
}

/// Enumerates `y = (a + c p^r θ₀)/p` with `a, c mod p^(n+2)` and compares
/// `ι(y) ∈ 𝔓^n` with the predicted module.
pub fn radical_intersection_test(kind: OrderKind, torus: &TorusData, r: u32, n: u32) -> Result<RadicalReport> {
    if kind == OrderKind::D || !torus.is_field() {
        return Err(GeomatchError::InvalidInput("radical test needs a field torus and M or J".into()));
    }
    let p = torus.ctx.p();
    let work = (2 * r + n + 12).min(PAdicContext::max_precision(p));
    let t = rebase(torus, PAdicContext::new(p, work)?)?;
    let ctx = &t.ctx;
    let img = optimal_embedding(&t, kind, r)?;
    let pi = p as i128;
    let window = pi.pow(n + 2);
    check_size((window * window) as u128)?;
    let br = branch(kind, r, n);
    let pr = ctx.pow_p(r);
    let (mut enumerated, mut expected) = (0u64, 0u64);
    let mut mismatches = Vec::new();
    for a in 0..window {
        for c in 0..window {
            let scalar = Mat2::with_den(ctx, [a, 0, 0, a], 1);
            let f = ctx.mul(c, pr);
            let theta = Mat2 { e: img.e.map(|x| ctx.mul(x, f)), den: img.den + 1 };
            let y = LocalOrderElement::Matrix(scalar.add(ctx, &theta));
            let inside = radical_power_membership(kind, ctx, &y, n)?;
            let want = predicted(br, pi, n, a, c);
            enumerated += inside as u64;
            expected += want as u64;
            if inside != want && mismatches.len() < 10 {
                mismatches.push((a, c));
            }
        }
    }
    Ok(RadicalReport {
        kind,
        torus: t.kind,
        q: p,
        r,
        n,
        branch: br,
        enumerated,
        predicted: expected,
        mismatches,
    })
}
