//! The three chain orders `M = M_2(o)`, the Iwahori order `J`, and the maximal
//! order `O_D` of the division quaternion algebra, with their radical powers
//! and principal congruence subgroups.
//!
//! Matrices carry a common denominator `p^den`; the stored residues are
//! `p^den` times the true entries, so a true entry is known modulo `p^(M-den)`.
//! The division algebra is the cyclic algebra `E0 ⊕ E0·ϖ_D` over the
//! unramified quadratic extension `E0 = o[ω]`, with `ϖ_D u = σ(u) ϖ_D` and
//! `ϖ_D² = p`.

use crate::arith::modp;
use crate::error::{GeomatchError, Result};
use crate::padic::PAdicContext;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OrderKind {
    M,
    J,
    D,
}

impl OrderKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(OrderKind::M),
            "J" | "j" => Ok(OrderKind::J),
            "D" | "d" => Ok(OrderKind::D),
            _ => Err(GeomatchError::InvalidInput(format!("unknown order kind {s}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrderKind::M => "M",
            OrderKind::J => "J",
            OrderKind::D => "D",
        }
    }
}

/// A 2×2 matrix `[[e0, e1], [e2, e3]] / p^den` over `Q_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub e: [i128; 4],
    pub den: u32,
}

impl Mat2 {
    pub fn new(ctx: &PAdicContext, e: [i128; 4]) -> Self {
        Self { e: e.map(|x| ctx.reduce(x)), den: 0 }
    }

    pub fn with_den(ctx: &PAdicContext, e: [i128; 4], den: u32) -> Self {
        Self { e: e.map(|x| ctx.reduce(x)), den }
    }

    pub fn identity(ctx: &PAdicContext) -> Self {
        Self::new(ctx, [1, 0, 0, 1])
    }

    pub fn scalar(ctx: &PAdicContext, a: i128) -> Self {
        Self::new(ctx, [a, 0, 0, a])
    }

    /// `Π = [[0, 1], [p, 0]]`, generating the radical of `J`.
    pub fn pi(ctx: &PAdicContext) -> Self {
        Self::new(ctx, [0, 1, ctx.p() as i128, 0])
    }

    /// `Π^{-1} = [[0, 1/p], [1, 0]]`.
    pub fn pi_inv(ctx: &PAdicContext) -> Self {
        Self::with_den(ctx, [0, 1, ctx.p() as i128, 0], 1)
    }

    /// Raises the denominator exponent to `den` without changing the value.
    pub fn rescale(&self, ctx: &PAdicContext, den: u32) -> Self {
        assert!(den >= self.den);
        let f = ctx.pow_p(den - self.den);
        Self { e: self.e.map(|x| ctx.mul(x, f)), den }
    }

    pub fn add(&self, ctx: &PAdicContext, other: &Self) -> Self {
        let den = self.den.max(other.den);
        let a = self.rescale(ctx, den);
        let b = other.rescale(ctx, den);
        Self { e: [0, 1, 2, 3].map(|i| ctx.add(a.e[i], b.e[i])), den }
    }

    pub fn sub(&self, ctx: &PAdicContext, other: &Self) -> Self {
        let neg = Self { e: other.e.map(|x| ctx.reduce(-x)), den: other.den };
        self.add(ctx, &neg)
    }

    pub fn mul(&self, ctx: &PAdicContext, o: &Self) -> Self {
        let a = &self.e;
        let b = &o.e;
        let m = |x: i128, y: i128| ctx.mul(x, y);
        Self {
            e: [
                ctx.add(m(a[0], b[0]), m(a[1], b[2])),
                ctx.add(m(a[0], b[1]), m(a[1], b[3])),
                ctx.add(m(a[2], b[0]), m(a[3], b[2])),
                ctx.add(m(a[2], b[1]), m(a[3], b[3])),
            ],
            den: self.den + o.den,
        }
    }

    /// Determinant as `(residue, den)` meaning `residue / p^den`.
    pub fn det(&self, ctx: &PAdicContext) -> (i128, u32) {
        let a = &self.e;
        (ctx.sub(ctx.mul(a[0], a[3]), ctx.mul(a[1], a[2])), 2 * self.den)
    }

    pub fn trace(&self, ctx: &PAdicContext) -> (i128, u32) {
        (ctx.add(self.e[0], self.e[3]), self.den)
    }

    /// Whether entry `i` has true valuation at least `k`.
    pub fn entry_at_least(&self, ctx: &PAdicContext, i: usize, k: i64) -> Result<bool> {
        let need = k + self.den as i64;
        if need <= 0 {
            return Ok(true);
        }
        ctx.valuation_at_least(self.e[i], need as u32)
    }

    /// Whether the determinant is a unit of `o`. For integral matrices this
    /// only needs the entries modulo `p`.
    pub fn det_is_unit(&self, ctx: &PAdicContext) -> Result<bool> {
        if self.den > 0 && self.is_integral(ctx)? {
            let scale = ctx.pow_p(self.den);
            let p = ctx.p() as i128;
            let t = self.e.map(|x| (x / scale) % p);
            return Ok((t[0] * t[3] - t[1] * t[2]).rem_euclid(p) != 0);
        }
        let (d, den) = self.det(ctx);
        if den == 0 {
            return Ok(ctx.is_unit(d));
        }
        Ok(ctx.valuation_at_least(d, den)? && !ctx.valuation_at_least(d, den + 1)?)
    }

    /// Inverse of an invertible matrix.
    pub fn inverse(&self, ctx: &PAdicContext) -> Result<Self> {
        // (A / p^a)^{-1} = p^a adj(A) / det(A) with det(A) = p^k u.
        let a = &self.e;
        let d = ctx.sub(ctx.mul(a[0], a[3]), ctx.mul(a[1], a[2]));
        let k = ctx.valuation(d)?;
        let unit = ctx.reduce(d / ctx.pow_p(k));
        let inv = ctx.inv(unit).ok_or_else(|| ctx.exhausted())?;
        let adj = [a[3], -a[1], -a[2], a[0]].map(|x| ctx.mul(x, inv));
        if self.den >= k {
            let f = ctx.pow_p(self.den - k);
            Ok(Self { e: adj.map(|x| ctx.mul(x, f)), den: 0 })
        } else {
            Ok(Self { e: adj, den: k - self.den })
        }
    }

    /// Equality of values, up to the precision both operands carry.
    pub fn same_value(&self, ctx: &PAdicContext, other: &Self) -> bool {
        let den = self.den.max(other.den);
        let m = ctx.pow_p(ctx.precision().saturating_sub(den));
        let a = self.rescale(ctx, den);
        let b = other.rescale(ctx, den);
        (0..4).all(|i| modp(a.e[i] - b.e[i], m) == 0)
    }

    /// Whether every entry is in `o`.
    pub fn is_integral(&self, ctx: &PAdicContext) -> Result<bool> {
        for i in 0..4 {
            if !self.entry_at_least(ctx, i, 0)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The unramified quadratic extension `E0 = o[ω]`, `ω² + c1 ω + c0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionModel {
    pub ctx: PAdicContext,
    pub c1: i128,
    pub c0: i128,
}

/// An element `u + w ϖ_D` of `D`, with `u, w ∈ E0` in the basis `1, ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DivElem {
    pub u: (i128, i128),
    pub w: (i128, i128),
}

impl DivisionModel {
    pub fn new(ctx: PAdicContext) -> Self {
        let p = ctx.p() as i128;
        let (c1, c0) = if p == 2 {
            (1, 1)
        } else {
            let n = (2..p).find(|&n| !ctx.unit_is_square(n)).expect("non-residue");
            (0, -n)
        };
        Self { ctx, c1, c0 }
    }

    pub fn e0_mul(&self, x: (i128, i128), y: (i128, i128)) -> (i128, i128) {
        let c = &self.ctx;
        let x1y1 = c.mul(x.1, y.1);
        let a = c.sub(c.mul(x.0, y.0), c.mul(self.c0, x1y1));
        let b = c.sub(c.add(c.mul(x.0, y.1), c.mul(x.1, y.0)), c.mul(self.c1, x1y1));
        (a, b)
    }

    pub fn e0_add(&self, x: (i128, i128), y: (i128, i128)) -> (i128, i128) {
        (self.ctx.add(x.0, y.0), self.ctx.add(x.1, y.1))
    }

    /// Frobenius: `σ(x0 + x1 ω) = x0 - c1 x1 - x1 ω`.
    pub fn sigma(&self, x: (i128, i128)) -> (i128, i128) {
        let c = &self.ctx;
        (c.sub(x.0, c.mul(self.c1, x.1)), c.reduce(-x.1))
    }

    pub fn e0_norm(&self, x: (i128, i128)) -> i128 {
        let c = &self.ctx;
        c.reduce(c.mul(x.0, x.0) - c.mul(c.mul(self.c1, x.0), x.1) + c.mul(c.mul(self.c0, x.1), x.1))
    }

    pub fn e0_trace(&self, x: (i128, i128)) -> i128 {
        let c = &self.ctx;
        c.sub(c.mul(2, x.0), c.mul(self.c1, x.1))
    }

    /// `v_{E0}(x) >= k`.
    pub fn e0_at_least(&self, x: (i128, i128), k: u32) -> Result<bool> {
        Ok(self.ctx.valuation_at_least(x.0, k)? && self.ctx.valuation_at_least(x.1, k)?)
    }

    pub fn one(&self) -> DivElem {
        DivElem { u: (1, 0), w: (0, 0) }
    }

    pub fn uniformizer(&self) -> DivElem {
        DivElem { u: (0, 0), w: (1, 0) }
    }

    pub fn embed(&self, u: (i128, i128)) -> DivElem {
        DivElem { u: (self.ctx.reduce(u.0), self.ctx.reduce(u.1)), w: (0, 0) }
    }

    /// `(u + wϖ)(u' + w'ϖ) = uu' + p w σ(w') + (u w' + w σ(u')) ϖ`.
    pub fn mul(&self, x: &DivElem, y: &DivElem) -> DivElem {
        let p = self.ctx.p() as i128;
        let ww = self.e0_mul(x.w, self.sigma(y.w));
        let u = self.e0_add(self.e0_mul(x.u, y.u), (self.ctx.mul(p, ww.0), self.ctx.mul(p, ww.1)));
        let w = self.e0_add(self.e0_mul(x.u, y.w), self.e0_mul(x.w, self.sigma(y.u)));
        DivElem { u, w }
    }

    pub fn sub(&self, x: &DivElem, y: &DivElem) -> DivElem {
        let c = &self.ctx;
        DivElem {
            u: (c.sub(x.u.0, y.u.0), c.sub(x.u.1, y.u.1)),
            w: (c.sub(x.w.0, y.w.0), c.sub(x.w.1, y.w.1)),
        }
    }

    /// Reduced norm `ν(u + wϖ) = N(u) - p N(w)`.
    pub fn reduced_norm(&self, x: &DivElem) -> i128 {
        let p = self.ctx.p() as i128;
        self.ctx.sub(self.e0_norm(x.u), self.ctx.mul(p, self.e0_norm(x.w)))
    }

    pub fn reduced_trace(&self, x: &DivElem) -> i128 {
        self.e0_trace(x.u)
    }

    /// `x ∈ 𝒫_D^n`, i.e. `min(2 v(u), 2 v(w) + 1) >= n`.
    pub fn in_radical_power(&self, x: &DivElem, n: u32) -> Result<bool> {
        Ok(self.e0_at_least(x.u, n.div_ceil(2))?
            && self.e0_at_least(x.w, n.saturating_sub(1).div_ceil(2))?)
    }

    pub fn is_order_unit(&self, x: &DivElem) -> bool {
        self.ctx.is_unit(self.e0_norm(x.u))
    }

    /// Inverse of a unit: `x^{-1} = x̄ / ν(x)`, with `x̄ = σ-conjugate`.
    pub fn inverse(&self, x: &DivElem) -> Option<DivElem> {
        let nu = self.reduced_norm(x);
        let inv = self.ctx.inv(nu)?;
        let c = &self.ctx;
        // Conjugate of u + wϖ is σ(u) - wϖ.
        let su = self.sigma(x.u);
        Some(DivElem {
            u: (c.mul(su.0, inv), c.mul(su.1, inv)),
            w: (c.mul(c.reduce(-x.w.0), inv), c.mul(c.reduce(-x.w.1), inv)),
        })
    }
}

/// An element of one of the three local orders' ambient algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalOrderElement {
    Matrix(Mat2),
    Division(DivElem),
}

/// Minimal true valuations `(TL, TR, BL, BR)` of entries of `Π^n J`.
pub fn iwahori_staircase(n: i64) -> [i64; 4] {
    let hi = n.div_euclid(2) + n.rem_euclid(2);
    let lo = n.div_euclid(2);
    [hi, lo, lo + 1, hi]
}

fn matrix_in_radical(kind: OrderKind, ctx: &PAdicContext, m: &Mat2, n: i64) -> Result<bool> {
    let bounds = match kind {
        OrderKind::M => [n; 4],
        OrderKind::J => iwahori_staircase(n),
        OrderKind::D => {
            return Err(GeomatchError::InvalidInput("matrix element for order D".into()))
        }
    };
    for (i, &b) in bounds.iter().enumerate() {
        if !m.entry_at_least(ctx, i, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `x ∈ 𝔓^n` for the order of the given kind.
pub fn radical_power_membership(
    kind: OrderKind,
    ctx: &PAdicContext,
    x: &LocalOrderElement,
    n: u32,
) -> Result<bool> {
    match (kind, x) {
        (OrderKind::D, LocalOrderElement::Division(d)) => {
            DivisionModel::new(*ctx).in_radical_power(d, n)
        }
        (OrderKind::M | OrderKind::J, LocalOrderElement::Matrix(m)) => {
            matrix_in_radical(kind, ctx, m, n as i64)
        }
        _ => Err(GeomatchError::InvalidInput(format!(
            "element type does not match order {}",
            kind.name()
        ))),
    }
}

/// `x ∈ U^n = (1 + 𝔓^n) ∩ O^×`.
pub fn congruence_subgroup_membership(
    kind: OrderKind,
    ctx: &PAdicContext,
    x: &LocalOrderElement,
    n: u32,
) -> Result<bool> {
    match (kind, x) {
        (OrderKind::D, LocalOrderElement::Division(d)) => {
            let model = DivisionModel::new(*ctx);
            if n == 0 {
                return Ok(model.in_radical_power(d, 0)? && model.is_order_unit(d));
            }
            model.in_radical_power(&model.sub(d, &model.one()), n)
        }
        (OrderKind::M | OrderKind::J, LocalOrderElement::Matrix(m)) => {
            if n == 0 {
                return Ok(matrix_in_radical(kind, ctx, m, 0)? && m.det_is_unit(ctx)?);
            }
            let diff = m.sub(ctx, &Mat2::identity(ctx));
            matrix_in_radical(kind, ctx, &diff, n as i64)
        }
        _ => Err(GeomatchError::InvalidInput(format!(
            "element type does not match order {}",
            kind.name()
        ))),
    }
}

/// `[O^× : U_O^n]`; equal to 1 for `n = 0`.
pub fn order_unit_index(kind: OrderKind, n: u32, q: u64) -> u128 {
    if n == 0 {
        return 1;
    }
    let q = q as u128;
    let tail = |k: u32| q.pow(k * (n - 1));
    match kind {
        OrderKind::M => (q * q - q) * (q * q - 1) * tail(4),
        OrderKind::J => (q - 1) * (q - 1) * tail(2),
        OrderKind::D => (q * q - 1) * tail(2),
    }
}

/// The level `m` with `det(U^n) = U_o^m` (reduced norm for `D`).
pub fn norm_image_level(kind: OrderKind, n: u32) -> u32 {
    match kind {
        OrderKind::M => n,
        OrderKind::J | OrderKind::D => n.div_ceil(2),
    }
}

/// `[o^× : U_o^m]`.
pub fn base_unit_index(m: u32, q: u64) -> u128 {
    if m == 0 {
        1
    } else {
        (q as u128 - 1) * (q as u128).pow(m - 1)
    }
}

pub fn division_mul(model: &DivisionModel, x: &DivElem, y: &DivElem) -> DivElem {
    model.mul(x, y)
}

/// Whether `-1 ∈ U^n`.
pub fn minus_one_in_congruence(kind: OrderKind, n: u32, p: u64) -> Result<bool> {
    let ctx = PAdicContext::new(p, n + 6)?;
    let x = match kind {
        OrderKind::D => LocalOrderElement::Division(DivElem {
            u: (ctx.reduce(-1), 0),
            w: (0, 0),
        }),
        _ => LocalOrderElement::Matrix(Mat2::scalar(&ctx, -1)),
    };
    congruence_subgroup_membership(kind, &ctx, &x, n)
}

/// Reduces `x` modulo `m` into `[0, m)`; re-exported for callers that build
/// lattices by hand.
pub fn residue(x: i128, m: i128) -> i128 {
    modp(x, m)
}
