//! Exact closed forms for the orbital integrals of the normalised test
//! functions `f_n` (order M), `g_n` (order J) and `φ_n` (order D), and the
//! matching combinations `f̃_n = a f_{n¹} + b g_{n²}`.
//!
//! Measures: `Vol(o^× × o^×) = 1` on a split torus, `Vol(O_E^×) = 1` on a
//! field torus. Indicators are read off the coordinates `(v(α-1), v(β))`.

use crate::arith::{qpow, rat, rat_int};
use crate::chain::{base_unit_index, norm_image_level, OrderKind};
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, RegularElement, TorusData};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

/// Which normalised characteristic function: `f_n` for M, `g_n` for J,
/// `φ_n` for D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TestFunctionSpec {
    pub kind: OrderKind,
    pub n: u32,
    pub include_norm_index: bool,
}

impl TestFunctionSpec {
    pub fn new(kind: OrderKind, n: u32) -> Self {
        Self { kind, n, include_norm_index: false }
    }

    pub fn with_norm_index(mut self, on: bool) -> Self {
        self.include_norm_index = on;
        self
    }

    /// `1 / [o^× : det U^n]` when the flag is set, else 1.
    pub fn norm_prefactor(&self, q: u64) -> BigRational {
        if self.include_norm_index {
            let idx = base_unit_index(norm_image_level(self.kind, self.n), q);
            BigRational::new(1.into(), idx.into())
        } else {
            BigRational::one()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    SplitUnits,
    FieldUnits,
}

/// An exact orbital integral with its normalisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitalValue {
    pub value: BigRational,
    pub measure: Measure,
    pub include_norm_index: bool,
}

impl OrbitalValue {
    fn new(value: BigRational, measure: Measure, spec: &TestFunctionSpec, q: u64) -> Self {
        Self {
            value: value * spec.norm_prefactor(q),
            measure,
            include_norm_index: spec.include_norm_index,
        }
    }
}

/// `f̃_n = coeff_f · f_{f_level} + coeff_g · g_{g_level}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchingCombination {
    pub n: u32,
    pub q: u64,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub coeff_f: BigRational,
    pub f_level: u32,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub coeff_g: BigRational,
    pub g_level: u32,
}

pub fn matching_combination(q: u64, n: u32) -> MatchingCombination {
    let qi = q as i64;
    let (a, fl, b, gl) = if n == 0 {
        (rat_int(2), 0, rat_int(-1), 0)
    } else if n.is_multiple_of(2) {
        (rat(2 * qi, qi - 1), n / 2, rat(-(qi + 1), qi - 1), n)
    } else {
        (rat(-2, qi - 1), n.div_ceil(2), rat(qi + 1, qi - 1), n)
    };
    MatchingCombination { n, q, coeff_f: a, f_level: fl, coeff_g: b, g_level: gl }
}

fn ind(b: bool) -> BigRational {
    if b {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// `(1 - q^-2) / (1 - q^-e)`.
fn volume_ratio(q: u64, e: u32) -> BigRational {
    (BigRational::one() - qpow(q, -2)) / (BigRational::one() - qpow(q, -(e as i64)))
}

/// Split data `(a ∈ U^k, b ∈ U^k, v(a-b))` read at the context precision.
fn split_parts(ctx: &PAdicContext, x: &RegularElement, k: u32) -> Result<(bool, u32)> {
    let RegularElement::Split { a, b } = *x else {
        return Err(GeomatchError::InvalidInput("expected a split element".into()));
    };
    x.validate(ctx)?;
    let gap = x.split_gap(ctx)?;
    let inside = if k == 0 {
        true
    } else {
        ctx.valuation_at_least(ctx.sub(a, 1), k)? && ctx.valuation_at_least(ctx.sub(b, 1), k)?
    };
    Ok((inside, gap))
}

/// `O(f_n; F⊕F, (a, b))`.
pub fn orbital_split_f(ctx: &PAdicContext, n: u32, x: &RegularElement) -> Result<BigRational> {
    let q = ctx.q();
    let (inside, gap) = split_parts(ctx, x, n)?;
    if !inside {
        return Ok(BigRational::zero());
    }
    let constant = if n == 0 {
        BigRational::one()
    } else {
        qpow(q, 3 * n as i64 - 3) * rat_int(((q - 1) * (q - 1) * (q + 1)) as i128)
    };
    Ok(qpow(q, gap as i64) * constant)
}

/// `O(g_n; F⊕F, (a, b))`.
pub fn orbital_split_g(ctx: &PAdicContext, n: u32, x: &RegularElement) -> Result<BigRational> {
    let q = ctx.q();
    let (inside, gap) = split_parts(ctx, x, n.div_ceil(2))?;
    if !inside {
        return Ok(BigRational::zero());
    }
    let constant = if n == 0 {
        BigRational::one()
    } else {
        qpow(q, n as i64 + n.div_ceil(2) as i64 - 2) * rat_int(((q - 1) * (q - 1)) as i128)
    };
    Ok(rat_int(2) * qpow(q, gap as i64) * constant)
}

fn field_coords(torus: &TorusData, x: &RegularElement) -> Result<(i128, i128)> {
    match *x {
        RegularElement::Field { alpha, beta } if torus.is_field() => Ok((alpha, beta)),
        _ => Err(GeomatchError::InvalidInput("expected a field element on a field torus".into())),
    }
}

/// Largest `r` worth probing in an order-coset sum: `v(β) ≥ k + r` forces
/// `r ≤ v(β) - k`.
fn coset_terms(torus: &TorusData, beta: i128) -> Result<u32> {
    torus.ctx.valuation(beta).map_err(|_| torus.ctx.exhausted())
}

/// `O(φ_n; E, x)`.
pub fn orbital_division(torus: &TorusData, n: u32, x: &RegularElement) -> Result<BigRational> {
    let (alpha, beta) = field_coords(torus, x)?;
    coset_terms(torus, beta)?;
    let q = torus.q();
    let e = torus.e();
    let level = (e * n).div_ceil(2);
    if !torus.in_unit_filtration(alpha, beta, level)? {
        return Ok(BigRational::zero());
    }
    let constant = if n == 0 {
        BigRational::one()
    } else {
        qpow(q, 2 * n as i64) * (BigRational::one() - qpow(q, -2))
    };
    Ok(rat(2, e as i64) * constant)
}

/// `O(f_n; E, x)`.
pub fn orbital_nonsplit_f(torus: &TorusData, n: u32, x: &RegularElement) -> Result<BigRational> {
    let (alpha, beta) = field_coords(torus, x)?;
    let vb = coset_terms(torus, beta)?;
    let q = torus.q();
    let e = torus.e();
    let mut braces = ind(torus.in_unit_filtration(alpha, beta, e * n)?);
    let ratio = volume_ratio(q, e);
    for r in 1..=vb.saturating_sub(n) {
        if torus.in_order_coset(alpha, beta, n, r)? {
            braces += qpow(q, r as i64) * &ratio;
        }
    }
    let constant = if n == 0 {
        BigRational::one()
    } else {
        qpow(q, 4 * n as i64)
            * (BigRational::one() - qpow(q, -1))
            * (BigRational::one() - qpow(q, -2))
    };
    Ok(braces * constant)
}

/// `O(g_n; E, x)`.
pub fn orbital_nonsplit_g(torus: &TorusData, n: u32, x: &RegularElement) -> Result<BigRational> {
    let (alpha, beta) = field_coords(torus, x)?;
    let vb = coset_terms(torus, beta)?;
    let q = torus.q();
    let e = torus.e();
    let mut braces = if e == 2 {
        ind(torus.in_unit_filtration(alpha, beta, n)?)
    } else {
        BigRational::zero()
    };
    let ratio = volume_ratio(q, e);
    let k = n.div_ceil(2);
    let shift = n % 2;
    for r in 1..=(vb + shift).saturating_sub(k).max(1) {
        if torus.in_order_coset(alpha, beta, k, r - shift)? {
            braces += rat_int(2) * qpow(q, r as i64) * &ratio;
        }
    }
    let constant = if n == 0 {
        BigRational::one()
    } else {
        let one_minus = BigRational::one() - qpow(q, -1);
        qpow(q, 2 * n as i64) * &one_minus * &one_minus
    };
    Ok(braces * constant)
}

/// `O(φ; E, x)` for any of the three test functions on any torus. The D-side
/// function lives only on field tori; on a split torus it is zero.
pub fn orbital(spec: &TestFunctionSpec, torus: &TorusData, x: &RegularElement) -> Result<OrbitalValue> {
    let q = torus.q();
    let n = spec.n;
    if !torus.is_field() {
        let value = match spec.kind {
            OrderKind::M => orbital_split_f(&torus.ctx, n, x)?,
            OrderKind::J => orbital_split_g(&torus.ctx, n, x)?,
            OrderKind::D => BigRational::zero(),
        };
        return Ok(OrbitalValue::new(value, Measure::SplitUnits, spec, q));
    }
    let value = match spec.kind {
        OrderKind::M => orbital_nonsplit_f(torus, n, x)?,
        OrderKind::J => orbital_nonsplit_g(torus, n, x)?,
        OrderKind::D => orbital_division(torus, n, x)?,
    };
    Ok(OrbitalValue::new(value, Measure::FieldUnits, spec, q))
}

/// Outcome of checking one instance of the matching identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingReport {
    pub combination: MatchingCombination,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub equal: bool,
}

/// `a·O(f_{n¹}) + b·O(g_{n²})` against `O(φ_n)` (field) or 0 (split).
pub fn verify_matching(
    n: u32,
    torus: &TorusData,
    x: &RegularElement,
    include_norm_index: bool,
) -> Result<MatchingReport> {
    let comb = matching_combination(torus.q(), n);
    let f = TestFunctionSpec::new(OrderKind::M, comb.f_level).with_norm_index(include_norm_index);
    let g = TestFunctionSpec::new(OrderKind::J, comb.g_level).with_norm_index(include_norm_index);
    let phi = TestFunctionSpec::new(OrderKind::D, n).with_norm_index(include_norm_index);
    let lhs = &comb.coeff_f * orbital(&f, torus, x)?.value + &comb.coeff_g * orbital(&g, torus, x)?.value;
    let rhs = orbital(&phi, torus, x)?.value;
    let equal = lhs == rhs;
    Ok(MatchingReport { combination: comb, lhs, rhs, equal })
}

/// A split element from integer roots, read at a generous precision.
pub fn split_element(q: u64, a: i128, b: i128) -> Result<(TorusData, RegularElement)> {
    let ctx = PAdicContext::new(q, 24.min(PAdicContext::max_precision(q)))?;
    let x = RegularElement::Split { a: ctx.reduce(a), b: ctx.reduce(b) };
    x.validate(&ctx)?;
    Ok((TorusData::split(ctx), x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::TorusKind;

    fn split_f(q: u64, n: u32, a: i128, b: i128) -> BigRational {
        let (t, x) = split_element(q, a, b).unwrap();
        orbital_split_f(&t.ctx, n, &x).unwrap()
    }

    fn split_g(q: u64, n: u32, a: i128, b: i128) -> BigRational {
        let (t, x) = split_element(q, a, b).unwrap();
        orbital_split_g(&t.ctx, n, &x).unwrap()
    }

    fn field(q: u64, kind: TorusKind) -> TorusData {
        let ctx = PAdicContext::new(q, 20).unwrap();
        TorusData::standard_field(ctx, kind).unwrap()
    }

    /// `α = 1 + q^i·(unit)`, `β = q^j`.
    fn elem(t: &TorusData, va1: u32, vb: u32) -> RegularElement {
        let c = &t.ctx;
        let alpha = if va1 == 0 { 0 } else { 1 + c.pow_p(va1) };
        RegularElement::Field { alpha: c.reduce(alpha), beta: c.pow_p(vb) }
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_f(3, 0, 4, 1), rat_int(3));
        assert_eq!(split_f(2, 1, 3, 1), rat_int(6));
        assert_eq!(split_f(3, 2, 2, 1), rat_int(0));
        assert_eq!(split_g(3, 0, 4, 1), rat_int(6));
        assert_eq!(split_g(2, 2, 5, 1), rat_int(16));
        assert_eq!(split_g(3, 1, 2, 1), rat_int(0));
    }

    #[test]
    fn split_rejects_equal_roots() {
        let ctx = PAdicContext::new(3, 8).unwrap();
        let x = RegularElement::Split { a: 1, b: 1 };
        assert!(matches!(
            orbital_split_f(&ctx, 0, &x),
            Err(GeomatchError::RegularityViolated(_))
        ));
    }

    #[test]
    fn division_examples() {
        let t = field(2, TorusKind::RamifiedField);
        assert_eq!(orbital_division(&t, 1, &elem(&t, 1, 0)).unwrap(), rat_int(3));
        let t = field(3, TorusKind::UnramifiedField);
        assert_eq!(orbital_division(&t, 0, &elem(&t, 1, 0)).unwrap(), rat_int(2));
        let t = field(2, TorusKind::UnramifiedField);
        // x ∈ U_E¹ - U_E²: the level-1 indicator of φ_2 holds, the level-2 one of φ_4 fails.
        assert_eq!(orbital_division(&t, 2, &elem(&t, 1, 1)).unwrap(), rat_int(24));
        assert_eq!(orbital_division(&t, 4, &elem(&t, 1, 1)).unwrap(), rat_int(0));
    }

    #[test]
    fn nonsplit_f_examples() {
        let t = field(2, TorusKind::UnramifiedField);
        assert_eq!(orbital_nonsplit_f(&t, 1, &elem(&t, 1, 1)).unwrap(), rat_int(6));
        let t = field(3, TorusKind::UnramifiedField);
        assert_eq!(orbital_nonsplit_f(&t, 1, &elem(&t, 2, 3)).unwrap(), rat_int(816));
        // v(α - 1) = 0 with α = 2 unit: every indicator fails.
        let x = RegularElement::Field { alpha: 2, beta: 9 };
        assert_eq!(orbital_nonsplit_f(&t, 1, &x).unwrap(), rat_int(0));
    }

    #[test]
    fn nonsplit_g_examples() {
        let t = field(2, TorusKind::RamifiedField);
        assert_eq!(orbital_nonsplit_g(&t, 1, &elem(&t, 1, 0)).unwrap(), rat_int(1));
        let t = field(3, TorusKind::UnramifiedField);
        let x = RegularElement::Field { alpha: 2, beta: 1 };
        assert_eq!(orbital_nonsplit_g(&t, 2, &x).unwrap(), rat_int(0));
    }

    #[test]
    fn combination_examples() {
        let c = matching_combination(7, 0);
        assert_eq!((c.coeff_f, c.f_level, c.coeff_g, c.g_level), (rat_int(2), 0, rat_int(-1), 0));
        let c = matching_combination(3, 4);
        assert_eq!((c.coeff_f, c.f_level, c.coeff_g, c.g_level), (rat_int(3), 2, rat_int(-2), 4));
        let c = matching_combination(2, 3);
        assert_eq!((c.coeff_f, c.f_level, c.coeff_g, c.g_level), (rat_int(-2), 2, rat_int(3), 3));
    }

    #[test]
    fn matching_examples() {
        let t = field(3, TorusKind::RamifiedField);
        let r = verify_matching(1, &t, &elem(&t, 1, 0), false).unwrap();
        assert!(r.equal);
        assert_eq!(r.rhs, rat_int(8));
        let t = field(2, TorusKind::UnramifiedField);
        let r = verify_matching(2, &t, &elem(&t, 2, 2), false).unwrap();
        assert!(r.equal);
        assert_eq!(r.rhs, rat_int(24));
        let (t, x) = split_element(5, 6, 1).unwrap();
        for n in 0..6 {
            let r = verify_matching(n, &t, &x, true).unwrap();
            assert!(r.equal && r.lhs.is_zero(), "n={n}");
        }
    }

    #[test]
    fn matching_on_grid() {
        for q in [2u64, 3, 5] {
            for kind in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
                let t = field(q, kind);
                let c = t.ctx;
                for va in 0..=4u32 {
                    for vb in 0..=4u32 {
                        for alpha in [c.reduce(1 + c.pow_p(va)), 0, 2, c.reduce(1 - c.pow_p(va))] {
                            let x = RegularElement::Field { alpha, beta: c.pow_p(vb) };
                            for n in 0..=6 {
                                for flag in [false, true] {
                                    let r = verify_matching(n, &t, &x, flag).unwrap();
                                    assert!(r.equal, "q={q} {kind:?} va={va} vb={vb} a={alpha} n={n}: {} vs {}", r.lhs, r.rhs);
                                }
                            }
                        }
                    }
                }
            }
            let c = PAdicContext::new(q, 20).unwrap();
            for gap in 0..=4u32 {
                for a in [c.reduce(1 + c.pow_p(gap)), c.reduce(2 + c.pow_p(gap))] {
                    let b = if gap == 0 { c.reduce(a + 1) } else { c.sub(a, c.pow_p(gap)) };
                    let x = RegularElement::Split { a, b };
                    if x.validate(&c).is_err() || !c.is_unit(b) {
                        continue;
                    }
                    let t = TorusData::split(c);
                    for n in 0..=6 {
                        let r = verify_matching(n, &t, &x, false).unwrap();
                        assert!(r.equal, "split q={q} gap={gap} a={a} n={n}");
                    }
                }
            }
        }
    }
}
