//! Global assembly: ramification data, Eichler level descriptors and subset
//! coefficients, local factors from the closed forms, and the relations
//! between counting functions of matrix and quaternion congruence groups.
//!
//! The group-independent global constant is never computed from class
//! numbers or regulators. It is extracted from the enumerated `dΨ` of
//! `SL_2(Z)` by dividing out the local factors, then reused for every level.

use crate::arith::{is_prime, prime_factors, rat_int};
use crate::chain::{minus_one_in_congruence, OrderKind};
use crate::closed_form::{matching_combination, orbital, OrbitalValue, TestFunctionSpec};
use crate::error::{GeomatchError, Result};
use crate::geodesic::counting::{psi_weight, spectrum, trace_bound, TraceClass};
use crate::padic::{classify_torus, classify_torus_with, PAdicContext, TorusData};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// `Ram(D)` and the level exponents `n_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RamifiedLevelData {
    pub ram: Vec<u64>,
    pub exponents: BTreeMap<u64, u32>,
}

impl RamifiedLevelData {
    pub fn new(ram: Vec<u64>, exponents: BTreeMap<u64, u32>) -> Result<Self> {
        let set: BTreeSet<u64> = ram.iter().copied().collect();
        if set.len() != ram.len() || set.len() < 2 || !set.len().is_multiple_of(2) {
            return Err(GeomatchError::InvalidRamification(format!(
                "need an even number (at least 2) of distinct primes, got {ram:?}"
            )));
        }
        if let Some(&p) = set.iter().chain(exponents.keys()).find(|&&p| !is_prime(p)) {
            return Err(GeomatchError::NotPrime(p));
        }
        let exponents = exponents.into_iter().filter(|&(_, n)| n > 0).collect();
        Ok(Self { ram: set.into_iter().collect(), exponents })
    }

    pub fn exponent(&self, p: u64) -> u32 {
        self.exponents.get(&p).copied().unwrap_or(0)
    }
}

/// Local data `p ↦ (kind, level)` of a congruence group; absent primes are
/// `(M, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupDescriptor {
    pub entries: BTreeMap<u64, (OrderKind, u32)>,
}

impl GroupDescriptor {
    /// `Γ(N)` in `SL_2(Z)`.
    pub fn principal(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(GeomatchError::InvalidInput("level must be positive".into()));
        }
        let entries = prime_factors(n as i128)
            .into_iter()
            .map(|p| (p, (OrderKind::M, crate::arith::vp(n as i128, p))))
            .collect();
        Ok(Self { entries })
    }

    /// The unit group of norm one of the level-`𝔑` order of `D`.
    pub fn quaternion(d: &RamifiedLevelData) -> Self {
        let mut entries: BTreeMap<u64, (OrderKind, u32)> =
            d.exponents.iter().map(|(&p, &n)| (p, (OrderKind::M, n))).collect();
        for &p in &d.ram {
            entries.insert(p, (OrderKind::D, d.exponent(p)));
        }
        Self { entries }
    }

    pub fn entry(&self, p: u64) -> (OrderKind, u32) {
        self.entries.get(&p).copied().unwrap_or((OrderKind::M, 0))
    }

    /// The level `N` when every entry is of kind M.
    pub fn principal_level(&self) -> Option<u64> {
        let mut n = 1u64;
        for (&p, &(kind, level)) in &self.entries {
            if kind != OrderKind::M {
                return None;
            }
            n = n.checked_mul(p.checked_pow(level)?)?;
        }
        Some(n)
    }

    /// `-1 ∈ Γ¹`, by the local congruence test at every listed prime.
    pub fn contains_minus_one(&self) -> Result<bool> {
        for (&p, &(kind, level)) in &self.entries {
            if !minus_one_in_congruence(kind, level, p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `c_{Γ¹}`: 1/2 when `-1 ∈ Γ¹`, else 1.
    pub fn c_gamma(&self) -> Result<f64> {
        Ok(if self.contains_minus_one()? { 0.5 } else { 1.0 })
    }
}

/// The Eichler order attached to a subset `I ⊆ Ram(D)` and its coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct EichlerLevelDescriptor {
    pub subset: Vec<u64>,
    pub group: GroupDescriptor,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub coefficient: BigRational,
}

/// All `2^|Ram|` descriptors, in the order of the subset bit masks.
pub fn eichler_descriptors(d: &RamifiedLevelData) -> Vec<EichlerLevelDescriptor> {
    let k = d.ram.len();
    (0u32..1 << k)
        .map(|mask| {
            let mut entries: BTreeMap<u64, (OrderKind, u32)> =
                d.exponents.iter().map(|(&p, &n)| (p, (OrderKind::M, n))).collect();
            let mut subset = Vec::new();
            let mut coefficient = BigRational::one();
            for (i, &p) in d.ram.iter().enumerate() {
                let comb = matching_combination(p, d.exponent(p));
                if mask & (1 << i) != 0 {
                    subset.push(p);
                    entries.insert(p, (OrderKind::M, comb.f_level));
                    coefficient *= comb.coeff_f;
                } else {
                    entries.insert(p, (OrderKind::J, comb.g_level));
                    coefficient *= comb.coeff_g;
                }
            }
            EichlerLevelDescriptor { subset, group: GroupDescriptor { entries }, coefficient }
        })
        .collect()
}

pub fn subset_coefficients(d: &RamifiedLevelData) -> Vec<(Vec<u64>, BigRational)> {
    eichler_descriptors(d).into_iter().map(|e| (e.subset, e.coefficient)).collect()
}

/// The torus of `X² - tX + 1` at `p` with its generator, at a precision
/// that reads every indicator up to `level`.
fn torus_for(t: i64, p: u64, level: u32) -> Result<TorusData> {
    let base = classify_torus(t, p)?;
    let want = (base.ctx.precision()).max(level + 16);
    if want <= base.ctx.precision() {
        return Ok(base);
    }
    let prec = want.min(PAdicContext::max_precision(p));
    classify_torus_with(t, PAdicContext::new(p, prec)?)
}

/// `O_p(kind_level; t)` with the norm-index normalisation, raising the
/// precision until the closed form can be read.
pub fn local_factor(kind: OrderKind, level: u32, t: i64, p: u64) -> Result<OrbitalValue> {
    let spec = TestFunctionSpec::new(kind, level).with_norm_index(true);
    let mut torus = torus_for(t, p, level)?;
    loop {
        let x = torus.generator.ok_or_else(|| GeomatchError::InvalidInput("torus without generator".into()))?;
        match orbital(&spec, &torus, &x) {
            Err(GeomatchError::PrecisionExhausted { .. }) => {
                torus = classify_torus_with(t, torus.ctx.doubled()?)?;
            }
            other => return other,
        }
    }
}

/// Primes at which the level-0 maximal-order factor can differ from 1.
pub fn bad_primes(t: i64) -> Vec<u64> {
    let t = t as i128;
    prime_factors(2 * (t * t - 4))
}

/// The common tail: `O_p(f_0; t) = 1` whenever `p ∤ 2(t² - 4)`.
pub fn tail_factor_is_one(t: i64, p: u64) -> Result<bool> {
    Ok(local_factor(OrderKind::M, 0, t, p)?.value == BigRational::one())
}

/// Product of local factors of `group` over `primes`.
fn local_product(group: &GroupDescriptor, t: i64, primes: &BTreeSet<u64>) -> Result<BigRational> {
    let mut prod = BigRational::one();
    for &p in primes {
        let (kind, level) = group.entry(p);
        prod *= local_factor(kind, level, t, p)?.value;
    }
    Ok(prod)
}

fn relevant_primes(t: i64, group: &GroupDescriptor) -> BTreeSet<u64> {
    bad_primes(t).into_iter().chain(group.entries.keys().copied()).collect()
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `C(t) = c_{SL_2(Z)} dΨ_1(t) / Π_p O_p(f_0; t)` over the bad primes of `t`.
pub fn extract_global_constant(t: i64, base: f64) -> Result<f64> {
    if base <= 0.0 {
        return Err(GeomatchError::InvalidInput(format!("dΨ_1({t}) must be positive, got {base}")));
    }
    let sl2 = GroupDescriptor { entries: BTreeMap::new() };
    let primes: BTreeSet<u64> = bad_primes(t).into_iter().collect();
    let prod = local_product(&sl2, t, &primes)?;
    debug_assert!(prod > BigRational::zero());
    Ok(sl2.c_gamma()? * base / to_f64(&prod))
}

/// `dΨ_group(t) = C(t) Π_p O_p(group; t) / c_group`, from the enumerated
/// `dΨ_1(t)`.
pub fn predict_dpsi(group: &GroupDescriptor, t: i64, base: f64) -> Result<f64> {
    let c = extract_global_constant(t, base)?;
    let primes = relevant_primes(t, group);
    let prod = local_product(group, t, &primes)?;
    // Primes outside the group support contribute to both products alike.
    let sl2 = GroupDescriptor { entries: BTreeMap::new() };
    let extra: BTreeSet<u64> = primes.difference(&bad_primes(t).into_iter().collect()).copied().collect();
    let norm = local_product(&sl2, t, &extra)?;
    Ok(c * to_f64(&(prod / norm)) / group.c_gamma()?)
}

/// `dΨ_1(t)` from the row table.
fn base_of(rows: &[TraceClass], t: i64) -> Result<f64> {
    rows.iter()
        .find(|r| r.t == t)
        .map(|r| r.dpsi)
        .ok_or_else(|| GeomatchError::InvalidInput(format!("trace {t} missing from the base table")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermMode {
    Enumerated,
    Predicted,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationTerm {
    pub subset: Vec<u64>,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub coefficient: BigRational,
    pub c_gamma: f64,
    pub dpsi: f64,
    pub mode: TermMode,
    /// `coefficient · c_gamma · dpsi`.
    pub contribution: f64,
    /// Enumerated minus predicted, where both exist.
    pub cross_check: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DpsiRelation {
    pub t: i64,
    pub lhs: f64,
    pub rhs: f64,
    /// `c_D dΨ_D(t)` from the quaternion-side local factors directly.
    pub local_quaternion: f64,
    pub terms: Vec<RelationTerm>,
}

/// `c_D dΨ_D(t) = Σ_I c_I c_{Γ¹(𝔑_I)} dΨ_{Γ¹(𝔑_I)}(t)`. The left side is
/// defined by this identity; it is also compared with the product of the
/// quaternion-side local factors.
pub fn dpsi_relation(d: &RamifiedLevelData, t: i64, base: f64) -> Result<DpsiRelation> {
    dpsi_relation_with(d, t, base, &mut |_, _| Ok(None))
}

fn dpsi_relation_with(
    d: &RamifiedLevelData,
    t: i64,
    base: f64,
    enumerate: &mut dyn FnMut(u64, i64) -> Result<Option<f64>>,
) -> Result<DpsiRelation> {
    let mut terms = Vec::new();
    for e in eichler_descriptors(d) {
        let c_gamma = e.group.c_gamma()?;
        let predicted = predict_dpsi(&e.group, t, base)?;
        let enumerated = match e.group.principal_level() {
            Some(n) => enumerate(n, t)?,
            None => None,
        };
        let (dpsi, mode) = match enumerated {
            Some(v) => (v, TermMode::Enumerated),
            None => (predicted, TermMode::Predicted),
        };
        let contribution = to_f64(&e.coefficient) * c_gamma * dpsi;
        terms.push(RelationTerm {
            subset: e.subset,
            coefficient: e.coefficient,
            c_gamma,
            dpsi,
            mode,
            contribution,
            cross_check: enumerated.map(|v| v - predicted),
        });
    }
    let rhs: f64 = terms.iter().map(|t| t.contribution).sum();
    let quat = GroupDescriptor::quaternion(d);
    let local_quaternion = quat.c_gamma()? * predict_dpsi(&quat, t, base)?;
    Ok(DpsiRelation { t, lhs: rhs, rhs, local_quaternion, terms })
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiTerm {
    pub subset: Vec<u64>,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub coefficient: BigRational,
    pub psi: f64,
    pub mode: TermMode,
    pub contribution: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiRelationReport {
    pub x: f64,
    pub psi_d: f64,
    pub terms: Vec<PsiTerm>,
    pub error: f64,
    pub bound_7_10: f64,
    /// `Ψ` of the quaternion group from its own local factors.
    pub psi_d_local: f64,
    pub scope: String,
    pub normalization: String,
}

pub const SCOPE_NOTE: &str = "quaternion-side values are defined through the subset relation \
with the matrix-side counting functions; no quaternion geodesics are enumerated";

pub const NORMALIZATION_NOTE: &str = "local factors use the norm-index normalisation; primes \
not dividing 2(t^2-4) or the level contribute the level-0 factor 1 and are absorbed into C(t); \
N(gamma) = x(t)^2 and Psi weights each trace by 2 sqrt(|t|-2) dPsi(t)";

/// `Ψ_D(x) = Σ_I c_I Ψ_{Γ(𝔑_I)}(x)`, each `Ψ_{Γ(𝔑_I)}` summed over
/// `2 < |t| ≤ √x + 1/√x` from predicted (or enumerated) `dΨ`.
pub fn psi_relation(d: &RamifiedLevelData, x: f64) -> Result<PsiRelationReport> {
    let rows = if x >= 6.0 { spectrum(1, x)? } else { Vec::new() };
    let b = trace_bound(x);
    let traces: Vec<i64> = rows.iter().map(|r| r.t).filter(|t| t.abs() <= b).collect();
    let per_trace: Vec<DpsiRelation> = traces
        .par_iter()
        .map(|&t| {
            let base = base_of(&rows, t)?;
            dpsi_relation_with(d, t, base, &mut |n, _| {
                if n == 1 { Ok(Some(base)) } else { Ok(None) }
            })
        })
        .collect::<Result<_>>()?;
    let descriptors = eichler_descriptors(d);
    let mut terms = Vec::new();
    for (i, e) in descriptors.into_iter().enumerate() {
        let mut psi = 0.0;
        let mut mode = TermMode::Enumerated;
        for rel in &per_trace {
            let term = &rel.terms[i];
            psi += term.c_gamma * psi_weight(rel.t, term.dpsi);
            if term.mode == TermMode::Predicted {
                mode = TermMode::Predicted;
            }
        }
        let contribution = to_f64(&e.coefficient) * psi;
        terms.push(PsiTerm { subset: e.subset, coefficient: e.coefficient, psi, mode, contribution });
    }
    let psi_d: f64 = terms.iter().map(|t| t.contribution).sum();
    let psi_d_local: f64 = per_trace.iter().map(|r| psi_weight(r.t, r.local_quaternion)).sum();
    Ok(PsiRelationReport {
        x,
        psi_d,
        terms,
        error: psi_d - x,
        bound_7_10: x.powf(0.7),
        psi_d_local,
        scope: SCOPE_NOTE.into(),
        normalization: NORMALIZATION_NOTE.into(),
    })
}

/// `Σ_I c_I` as an exact rational.
pub fn coefficient_sum(d: &RamifiedLevelData) -> BigRational {
    subset_coefficients(d).into_iter().fold(rat_int(0), |acc, (_, c)| acc + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::geodesic::counting::dpsi_enumerated;

    fn data(ram: &[u64], exps: &[(u64, u32)]) -> RamifiedLevelData {
        RamifiedLevelData::new(ram.to_vec(), exps.iter().copied().collect()).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let d = data(&[2, 3], &[]);
        let c: Vec<BigRational> = subset_coefficients(&d).into_iter().map(|x| x.1).collect();
        assert_eq!(c, vec![rat_int(1), rat_int(-2), rat_int(-2), rat_int(4)]);
        let d = data(&[2, 3], &[(2, 2)]);
        let c: BTreeMap<Vec<u64>, BigRational> = subset_coefficients(&d).into_iter().collect();
        assert_eq!(c[&vec![]], rat_int(3));
        assert_eq!(c[&vec![2]], rat_int(-4));
        assert_eq!(c[&vec![3]], rat_int(-6));
        assert_eq!(c[&vec![2, 3]], rat_int(8));
        assert_eq!(coefficient_sum(&d), rat(1, 1));
    }

    #[test]
    fn invalid_ramification() {
        assert!(RamifiedLevelData::new(vec![2], BTreeMap::new()).is_err());
        assert!(RamifiedLevelData::new(vec![2, 3, 5], BTreeMap::new()).is_err());
        assert!(RamifiedLevelData::new(vec![2, 4], BTreeMap::new()).is_err());
    }

    #[test]
    fn tail_is_one() {
        for t in [3i64, 4, 7, -5, 11] {
            for p in crate::arith::first_primes(12) {
                if !bad_primes(t).contains(&p) {
                    assert!(tail_factor_is_one(t, p).unwrap(), "t={t} p={p}");
                }
            }
        }
    }

    #[test]
    fn predictions_reproduce_base_and_vanish() {
        let base = dpsi_enumerated(1, 3).unwrap();
        let sl2 = GroupDescriptor::principal(1).unwrap();
        assert!((predict_dpsi(&sl2, 3, base).unwrap() - base).abs() < 1e-12);
        let g2 = GroupDescriptor::principal(2).unwrap();
        let base5 = dpsi_enumerated(1, 5).unwrap();
        assert_eq!(predict_dpsi(&g2, 5, base5).unwrap(), 0.0);
    }

    #[test]
    fn relation_terms() {
        let d = data(&[2, 3], &[]);
        let base = dpsi_enumerated(1, 3).unwrap();
        let rel = dpsi_relation(&d, 3, base).unwrap();
        assert_eq!(rel.terms.len(), 4);
        assert!((rel.lhs - rel.local_quaternion).abs() <= 1e-9 * rel.lhs.abs().max(1.0));
    }
}
