//! Explicit embeddings of a field torus into `M_2(Q_p)` and into `D`.
//!
//! The level-`r` embedding sends `θ₀` to `a_r^{-1} C a_r` with `C` the
//! companion matrix of `X² - sX + m` and `a_r = diag(p^r, 1)`. Optimality
//! (`ι(E) ∩ O = ι(L_r)`) is checked on a grid of elements with valuations
//! down to `-1`; when it fails a bounded conjugator search is tried before
//! giving up with [`GeomatchError::NoOptimalEmbedding`].

use crate::chain::{
    congruence_subgroup_membership, radical_power_membership, DivElem, DivisionModel,
    LocalOrderElement, Mat2, OrderKind,
};
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, TorusData};

/// `α + β·img`, the image of `α + βθ₀` given the image of `θ₀`.
pub fn embed_matrix(ctx: &PAdicContext, img: &Mat2, alpha: i128, beta: i128) -> Mat2 {
    let scaled = Mat2 { e: img.e.map(|x| ctx.mul(x, beta)), den: img.den };
    scaled.add(ctx, &Mat2::scalar(ctx, alpha))
}

/// The companion-matrix embedding conjugated to level `r`.
pub fn companion_at_level(torus: &TorusData, r: u32) -> Mat2 {
    let ctx = &torus.ctx;
    let c = Mat2::new(ctx, [torus.theta_trace, 1, -torus.theta_norm, 0]);
    let pr = ctx.pow_p(r);
    let a = Mat2::new(ctx, [pr, 0, 0, 1]);
    let a_inv = Mat2::with_den(ctx, [1, 0, 0, pr], r);
    a_inv.mul(ctx, &c).mul(ctx, &a)
}

/// Grid of `(α, β, j)` standing for `(α + βθ₀)/p^j`.
fn optimality_grid(p: i128, r: u32) -> Vec<(i128, i128, u32)> {
    let mut vals = vec![0i128];
    for i in 0..=r + 2 {
        for a0 in 1..p.min(4) {
            vals.push(a0 * p.pow(i));
        }
    }
    let mut out = Vec::new();
    for &a in &vals {
        for &b in &vals {
            for j in 0..=1 {
                out.push((a, b, j));
            }
        }
    }
    out
}

fn v_at_least(ctx: &PAdicContext, x: i128, k: u32) -> Result<bool> {
    ctx.valuation_at_least(x, k)
}

/// Checks `ι(E) ∩ O = ι(L_r)` on the grid.
pub fn is_optimal(torus: &TorusData, kind: OrderKind, img: &Mat2, r: u32) -> Result<bool> {
    let ctx = &torus.ctx;
    for (a, b, j) in optimality_grid(ctx.p() as i128, r) {
        let m = embed_matrix(ctx, img, a, b);
        let m = Mat2 { e: m.e, den: m.den + j };
        let in_order = radical_power_membership(kind, ctx, &LocalOrderElement::Matrix(m), 0)?;
        let in_lr = v_at_least(ctx, a, j)? && v_at_least(ctx, b, r + j)?;
        if in_order != in_lr {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The image of `θ₀` under an optimal embedding of `L_r` into the order.
pub fn optimal_embedding(torus: &TorusData, kind: OrderKind, r: u32) -> Result<Mat2> {
    if kind == OrderKind::D || !torus.is_field() {
        return Err(GeomatchError::InvalidInput("matrix embedding needs a field torus and M or J".into()));
    }
    let ctx = &torus.ctx;
    let base = companion_at_level(torus, r);
    if is_optimal(torus, kind, &base, r)? {
        return Ok(base);
    }
    // Bounded search: conjugate by residue-level matrices times diag(p^k, 1).
    let p = ctx.p() as i128;
    for k in 0..=2u32 {
        for code in 0..p.pow(4) {
            let e = [code % p, (code / p) % p, (code / (p * p)) % p, code / (p * p * p)];
            let g0 = Mat2::new(ctx, e);
            if !ctx.is_unit(g0.det(ctx).0) {
                continue;
            }
            let g = g0.mul(ctx, &Mat2::new(ctx, [ctx.pow_p(k), 0, 0, 1]));
            let conj = g.inverse(ctx)?.mul(ctx, &base).mul(ctx, &g);
            if is_optimal(torus, kind, &conj, r)? {
                return Ok(conj);
            }
        }
    }
    Err(GeomatchError::NoOptimalEmbedding(format!(
        "L_{r} into {} at p={} (e={})",
        kind.name(),
        ctx.p(),
        torus.e()
    )))
}

/// Whether `ι(E^×)` meets the coset `Π J^×`: probes `θ₀^j u` for units `u`
/// of `O_E` modulo `p²`.
pub fn meets_pi_coset(torus: &TorusData, img: &Mat2) -> Result<bool> {
    let ctx = &torus.ctx;
    let p = ctx.p() as i128;
    let pi_inv = Mat2::pi_inv(ctx);
    for j in 0..=1 {
        for a in 0..p * p {
            for b in 0..p * p {
                if !torus.is_unit(a, b) {
                    continue;
                }
                let (ya, yb) = if j == 0 { (a, b) } else { torus.mul((0, 1), (a, b)) };
                let y = embed_matrix(ctx, img, ya, yb);
                let (d, dden) = y.det(ctx);
                let v = ctx.valuation(d)? as i64 - dden as i64;
                if v.rem_euclid(2) == 0 {
                    continue;
                }
                let z = LocalOrderElement::Matrix(pi_inv.mul(ctx, &y));
                if congruence_subgroup_membership(OrderKind::J, ctx, &z, 0)? {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// `[E^× : F^× O_E^×]`: 2 exactly when some element of `E^×` has a norm of
/// odd valuation, which for the basis `1, θ₀` means `v(N(θ₀))` odd.
pub fn field_norm_parity_index(torus: &TorusData) -> Result<u32> {
    let v = torus.ctx.valuation(torus.ctx.reduce(torus.theta_norm))?;
    Ok(if v % 2 == 1 { 2 } else { 1 })
}

/// `[D^× : F^× O_D^×]`, read from the reduced norm of `ϖ_D`.
pub fn division_norm_parity_index(model: &DivisionModel) -> Result<u32> {
    let v = model.ctx.valuation(model.reduced_norm(&model.uniformizer()))?;
    Ok(if v % 2 == 1 { 2 } else { 1 })
}

fn e0_inverse(model: &DivisionModel, z: (i128, i128)) -> Option<(i128, i128)> {
    let inv = model.ctx.inv(model.e0_norm(z))?;
    let s = model.sigma(z);
    Some((model.ctx.mul(s.0, inv), model.ctx.mul(s.1, inv)))
}

/// Image of `θ₀` in `O_D` with reduced trace `s` and reduced norm `m`.
pub fn division_embedding(torus: &TorusData, model: &DivisionModel) -> Result<DivElem> {
    let c = &model.ctx;
    let p = c.p() as i128;
    let s = c.reduce(torus.theta_trace);
    let m = c.reduce(torus.theta_norm);
    let img = if torus.e() == 1 {
        // Root of X² - sX + m inside E0 by Newton iteration.
        let f = |u: (i128, i128)| {
            let u2 = model.e0_mul(u, u);
            (c.add(c.sub(u2.0, c.mul(s, u.0)), m), c.sub(u2.1, c.mul(s, u.1)))
        };
        let mut u = (0..p * p)
            .map(|code| (code % p, code / p))
            .find(|&u| {
                let v = f(u);
                v.0 % p == 0 && v.1 % p == 0
            })
            .ok_or_else(|| GeomatchError::NoOptimalEmbedding("no residue root in E0".into()))?;
        for _ in 0..=c.precision() {
            let fu = f(u);
            let d = (c.sub(c.mul(2, u.0), s), c.mul(2, u.1));
            let di = e0_inverse(model, d).ok_or_else(|| c.exhausted())?;
            let step = model.e0_mul(fu, di);
            u = (c.sub(u.0, step.0), c.sub(u.1, step.1));
        }
        DivElem { u, w: (0, 0) }
    } else {
        // u with Tr(u) = s, then w with N(w) = (N(u) - m)/p, a unit.
        let u = if p == 2 { (0, c.reduce(-s * model.c1)) } else { (c.from_ratio(s, 2)?, 0) };
        let diff = c.sub(model.e0_norm(u), m);
        if diff % p != 0 {
            return Err(GeomatchError::NoOptimalEmbedding("trace lift is not Eisenstein".into()));
        }
        let target = diff / p;
        let norm = |w0: i128, w1: i128| model.e0_norm((w0, w1));
        let deriv = |w0: i128, w1: i128| c.sub(c.mul(2, w0), c.mul(model.c1, w1));
        let (mut w0, w1) = (0..p * p)
            .map(|code| (code % p, code / p))
            .find(|&(w0, w1)| (norm(w0, w1) - target).rem_euclid(p) == 0 && c.is_unit(deriv(w0, w1)))
            .ok_or_else(|| GeomatchError::NoOptimalEmbedding("norm equation has no residue solution".into()))?;
        for _ in 0..=c.precision() {
            let fv = c.sub(norm(w0, w1), target);
            let inv = c.inv(deriv(w0, w1)).ok_or_else(|| c.exhausted())?;
            w0 = c.sub(w0, c.mul(fv, inv));
        }
        DivElem { u, w: (w0, w1) }
    };
    // Check the minimal polynomial at the reliable precision.
    let sq = model.mul(&img, &img);
    let lin = DivElem {
        u: (c.mul(s, img.u.0), c.mul(s, img.u.1)),
        w: (c.mul(s, img.w.0), c.mul(s, img.w.1)),
    };
    let mut res = model.sub(&sq, &lin);
    res.u.0 = c.add(res.u.0, m);
    let reliable = c.pow_p(c.reliable());
    let all = [res.u.0, res.u.1, res.w.0, res.w.1];
    if all.iter().any(|x| x % reliable != 0) {
        return Err(GeomatchError::NoOptimalEmbedding("θ₀ image fails its polynomial".into()));
    }
    Ok(img)
}

/// `α + β·img` in `D`.
pub fn embed_division(model: &DivisionModel, img: &DivElem, alpha: i128, beta: i128) -> DivElem {
    let c = &model.ctx;
    DivElem {
        u: (c.add(alpha, c.mul(beta, img.u.0)), c.mul(beta, img.u.1)),
        w: (c.mul(beta, img.w.0), c.mul(beta, img.w.1)),
    }
}
