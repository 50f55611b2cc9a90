//! Orbital integrals summed over the double-coset skeleton
//! `T \ G / K = {n_r}` (split) or `{a_r}` (field), with volume ratios from
//! enumerated indices and indicators from explicit congruence tests.

use super::embed::{
    division_embedding, division_norm_parity_index, embed_division, embed_matrix,
    field_norm_parity_index, meets_pi_coset, optimal_embedding,
};
use super::index::{
    enumerate_field_order_index, enumerate_norm_image, enumerate_order_unit_index,
    enumerate_split_index, unipotent, unit_filtration_set,
};
use crate::chain::{
    congruence_subgroup_membership, DivisionModel, LocalOrderElement, Mat2, OrderKind,
};
use crate::closed_form::{Measure, OrbitalValue, TestFunctionSpec};
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, RegularElement, TorusData};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::HashMap;

/// Memoising brute-force evaluator.
#[derive(Debug, Default)]
pub struct Oracle {
    order_index: HashMap<(OrderKind, u32, u64), u128>,
    norm_index: HashMap<(OrderKind, u32, u64), u128>,
    field_index: HashMap<(u64, i128, i128, u32), u128>,
    split_index: HashMap<(u64, u32), u128>,
}

fn big(x: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

impl Oracle {
    pub fn new() -> Self {
        Self::default()
    }

    fn order_index(&mut self, kind: OrderKind, n: u32, p: u64) -> Result<u128> {
        if let Some(&v) = self.order_index.get(&(kind, n, p)) {
            return Ok(v);
        }
        let v = enumerate_order_unit_index(kind, n, p)?;
        self.order_index.insert((kind, n, p), v);
        Ok(v)
    }

    /// `[o^× : det U^n]`, from the enumerated image of `U^n`.
    fn norm_index(&mut self, kind: OrderKind, n: u32, p: u64) -> Result<u128> {
        if let Some(&v) = self.norm_index.get(&(kind, n, p)) {
            return Ok(v);
        }
        let (h, image) = enumerate_norm_image(kind, n, p)?;
        let units = unit_filtration_set(p, 0, h).len() as u128;
        let v = units / image.len() as u128;
        self.norm_index.insert((kind, n, p), v);
        Ok(v)
    }

    fn field_index(&mut self, torus: &TorusData, r: u32) -> Result<u128> {
        let key = (torus.ctx.p(), torus.theta_trace, torus.theta_norm, r);
        if let Some(&v) = self.field_index.get(&key) {
            return Ok(v);
        }
        let v = enumerate_field_order_index(torus, r)?;
        self.field_index.insert(key, v);
        Ok(v)
    }

    fn split_index(&mut self, p: u64, r: u32) -> Result<u128> {
        if let Some(&v) = self.split_index.get(&(p, r)) {
            return Ok(v);
        }
        let v = enumerate_split_index(p, r)?;
        self.split_index.insert((p, r), v);
        Ok(v)
    }

    /// Orbital integral of `spec` at `x`, evaluated at precision `m`.
    pub fn orbital(
        &mut self,
        spec: &TestFunctionSpec,
        torus: &TorusData,
        x: &RegularElement,
        m: u32,
    ) -> Result<OrbitalValue> {
        let p = torus.ctx.p();
        let n = spec.n;
        let outer = PAdicContext::with_guard(p, m, torus.ctx.guard())?;
        let r_max = match *x {
            RegularElement::Split { a, b } => outer.valuation(outer.sub(a, b))?,
            RegularElement::Field { beta, .. } => outer.valuation(beta)?,
        };
        if r_max + n + outer.guard() >= m {
            return Err(outer.exhausted());
        }
        // Terms run to r_max + 1, the first one that must vanish. Conjugation
        // doubles denominators, so work with extra digits.
        let work = (m.max(2 * r_max + n + outer.guard() + 4)).min(PAdicContext::max_precision(p));
        let ctx = PAdicContext::with_guard(p, work, outer.guard())?;
        let mut value = match (torus.is_field(), *x) {
            (false, RegularElement::Split { a, b }) => self.split_sum(spec, &ctx, a, b, r_max)?,
            (true, RegularElement::Field { alpha, beta }) => {
                let t = rebase(torus, ctx)?;
                self.field_sum(spec, &t, alpha, beta, r_max)?
            }
            _ => return Err(GeomatchError::InvalidInput("element does not match torus".into())),
        };
        if spec.include_norm_index {
            value /= big(self.norm_index(spec.kind, n, p)?);
        }
        let measure = if torus.is_field() { Measure::FieldUnits } else { Measure::SplitUnits };
        Ok(OrbitalValue { value, measure, include_norm_index: spec.include_norm_index })
    }

    fn split_sum(
        &mut self,
        spec: &TestFunctionSpec,
        ctx: &PAdicContext,
        a: i128,
        b: i128,
        r_max: u32,
    ) -> Result<BigRational> {
        let p = ctx.p();
        if spec.kind == OrderKind::D {
            return Ok(BigRational::zero());
        }
        let idx_u = self.order_index(spec.kind, spec.n, p)?;
        let t = Mat2::new(ctx, [a, 0, 0, b]);
        let mut total = BigRational::zero();
        for r in 0..=r_max + 1 {
            let (nr, nr_inv) = unipotent(ctx, r);
            let y = LocalOrderElement::Matrix(nr_inv.mul(ctx, &t).mul(ctx, &nr));
            if !congruence_subgroup_membership(spec.kind, ctx, &y, spec.n)? {
                continue;
            }
            let edge = if spec.kind == OrderKind::J {
                if split_meets_pi_coset(ctx, r)? { 1 } else { 2 }
            } else {
                1
            };
            total += big(self.split_index(p, r)? * idx_u * edge);
        }
        Ok(total)
    }

    fn field_sum(
        &mut self,
        spec: &TestFunctionSpec,
        torus: &TorusData,
        alpha: i128,
        beta: i128,
        r_max: u32,
    ) -> Result<BigRational> {
        let ctx = &torus.ctx;
        let p = ctx.p();
        let alpha = ctx.reduce(alpha);
        let beta = ctx.reduce(beta);
        let idx_u = self.order_index(spec.kind, spec.n, p)?;
        if spec.kind == OrderKind::D {
            let model = DivisionModel::new(*ctx);
            let img = division_embedding(torus, &model)?;
            let y = LocalOrderElement::Division(embed_division(&model, &img, alpha, beta));
            if !congruence_subgroup_membership(OrderKind::D, ctx, &y, spec.n)? {
                return Ok(BigRational::zero());
            }
            let ratio = BigRational::new(
                division_norm_parity_index(&model)?.into(),
                field_norm_parity_index(torus)?.into(),
            );
            return Ok(ratio * big(idx_u));
        }
        let mut total = BigRational::zero();
        for r in 0..=r_max + 1 {
            let img = match optimal_embedding(torus, spec.kind, r) {
                Ok(img) => img,
                // No optimal embedding of L_r: the double coset is empty.
                Err(GeomatchError::NoOptimalEmbedding(_)) => continue,
                Err(e) => return Err(e),
            };
            let y = LocalOrderElement::Matrix(embed_matrix(ctx, &img, alpha, beta));
            if !congruence_subgroup_membership(spec.kind, ctx, &y, spec.n)? {
                continue;
            }
            let edge = if spec.kind == OrderKind::J {
                if meets_pi_coset(torus, &img)? { 1 } else { 2 }
            } else {
                1
            };
            total += big(self.field_index(torus, r)? * idx_u * edge);
        }
        Ok(total)
    }
}

/// Whether `n_r^{-1} T n_r` meets `Π J^×` for the diagonal torus `T`:
/// probes `diag(p a, b)` and `diag(a, p b)` for units mod `p²`.
pub fn split_meets_pi_coset(ctx: &PAdicContext, r: u32) -> Result<bool> {
    let p = ctx.p() as i128;
    let (nr, nr_inv) = unipotent(ctx, r);
    let pi_inv = Mat2::pi_inv(ctx);
    for a in (1..p * p).filter(|&a| ctx.is_unit(a)) {
        for b in (1..p * p).filter(|&b| ctx.is_unit(b)) {
            for d in [[p * a, 0, 0, b], [a, 0, 0, p * b]] {
                let y = nr_inv.mul(ctx, &Mat2::new(ctx, d)).mul(ctx, &nr);
                let z = LocalOrderElement::Matrix(pi_inv.mul(ctx, &y));
                if congruence_subgroup_membership(OrderKind::J, ctx, &z, 0)? {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// The same torus over a different context.
pub fn rebase(torus: &TorusData, ctx: PAdicContext) -> Result<TorusData> {
    let mut t = TorusData::from_theta(ctx, torus.kind, torus.theta_trace, torus.theta_norm)?;
    t.trace = torus.trace;
    Ok(t)
}

/// One-shot oracle evaluation.
pub fn oracle_orbital(
    spec: &TestFunctionSpec,
    torus: &TorusData,
    x: &RegularElement,
    m: u32,
) -> Result<OrbitalValue> {
    Oracle::new().orbital(spec, torus, x, m)
}

/// Convenience: the one-shot value as an exact rational.
pub fn oracle_value(spec: &TestFunctionSpec, torus: &TorusData, x: &RegularElement, m: u32) -> Result<BigRational> {
    Ok(oracle_orbital(spec, torus, x, m)?.value)
}
