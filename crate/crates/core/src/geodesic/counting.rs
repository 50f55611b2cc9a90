//! The counting functions `dΨ_N(t)`, `Ψ_N(x)` and `π_N(x)` for `Γ(N)`.
//!
//! Norms follow the `PSL_2` convention `N(γ) = x(t)²` with
//! `x(t) = (|t| + √(t² - 4))/2`, so `t` runs over `2 < |t| ≤ √x + 1/√x`.
//! `dΨ_N(t) = (√x(t) - 1/√x(t))^{-1} Σ count · log x₀` with `x₀` the
//! eigenvalue of the `Γ(N)`-primitive element, and
//! `Ψ_N(x) = c_N Σ_t 2 √(|t| - 2) dΨ_N(t)`, which is `Σ log N(γ₀)` over
//! classes of `±Γ(N)/±1` of norm at most `x`.

use super::congruence::{centralizer, gamma_splitting, minus_one_in_level, Centralizer, Splitting};
use super::forms::{check_hyperbolic, sl2_classes, QuadFormClass};
use super::pell::PellUnit;
use crate::error::Result;
use rayon::prelude::*;
use serde::Serialize;

/// Half-integral surd `(u + v√d)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Surd {
    pub u: i128,
    pub v: i128,
    pub d: i128,
}

impl Surd {
    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.d, o.d);
        Self {
            u: (self.u * o.u + self.d * self.v * o.v) / 2,
            v: (self.u * o.v + o.u * self.v) / 2,
            d: self.d,
        }
    }

    pub fn conj(&self) -> Self {
        Self { v: -self.v, ..*self }
    }

    /// `(u² - dv²)/4`.
    pub fn norm(&self) -> i128 {
        (self.u * self.u - self.d * self.v * self.v) / 4
    }

    pub fn value(&self) -> f64 {
        (self.u as f64 + self.v as f64 * (self.d as f64).sqrt()) / 2.0
    }
}

/// `x(t)` as a surd in `Q(√(t² - 4))`.
pub fn trace_norm(t: i64) -> Surd {
    let t = t.abs() as i128;
    Surd { u: t, v: 1, d: t * t - 4 }
}

/// Checks `x·x̄ = 1` and `x + x̄ = |t|`, so `(√x - 1/√x)² = |t| - 2` exactly.
pub fn norm_identity_holds(t: i64) -> bool {
    let x = trace_norm(t);
    x.norm() == 1 && x.mul(&x.conj()) == (Surd { u: 2, v: 0, d: x.d }) && x.u == t.abs() as i128
}

/// One `SL_2(Z)`-class of trace `t` with its splitting into level `N`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelClass {
    pub class: QuadFormClass,
    pub centralizer: Centralizer,
    pub splitting: Splitting,
    /// `γ = ±γ_N^k` with `γ_N` primitive in `Γ(N)`; 0 when `γ ∉ Γ(N)`.
    pub level_power: u32,
    /// `log x₀` of the `Γ(N)`-primitive element.
    pub log_x0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceClass {
    pub t: i64,
    pub level: u64,
    pub classes: Vec<LevelClass>,
    pub dpsi: f64,
}

impl TraceClass {
    pub fn class_count_sl2(&self) -> usize {
        self.classes.len()
    }

    pub fn classes_in_level(&self) -> u64 {
        self.classes.iter().map(|c| c.splitting.count).sum()
    }
}

pub fn trace_classes(n: u64, t: i64) -> Result<TraceClass> {
    check_hyperbolic(t)?;
    let mut classes = Vec::new();
    let mut weight = 0.0;
    for class in sl2_classes(t)? {
        let cent = centralizer(&class)?;
        let splitting = gamma_splitting(&class, &cent, n)?;
        let j = splitting.primitive_index;
        let log_x0 = j as f64 * cent.unit.log();
        let level_power = if splitting.count > 0 {
            debug_assert_eq!(cent.power % j, 0);
            cent.power / j
        } else {
            0
        };
        weight += splitting.count as f64 * log_x0;
        classes.push(LevelClass { class, centralizer: cent, splitting, level_power, log_x0 });
    }
    let dpsi = weight / ((t.abs() - 2) as f64).sqrt();
    Ok(TraceClass { t, level: n, classes, dpsi })
}

pub fn dpsi_enumerated(n: u64, t: i64) -> Result<f64> {
    Ok(trace_classes(n, t)?.dpsi)
}

/// `c_N = 1/2` when `-1 ∈ Γ(N)`, else 1.
pub fn c_level(n: u64) -> f64 {
    if minus_one_in_level(n) { 0.5 } else { 1.0 }
}

/// Largest `T` with `x(T)² ≤ x`, i.e. `T ≤ √x + 1/√x`.
pub fn trace_bound(x: f64) -> i64 {
    let mut t = 2i64;
    while trace_norm(t + 1).value().powi(2) <= x {
        t += 1;
    }
    t
}

/// All traces `2 < |t| ≤ trace_bound(x)`, negative first.
pub fn trace_range(x: f64) -> Vec<i64> {
    let b = trace_bound(x);
    (-b..=b).filter(|t| t.abs() > 2).collect()
}

/// Per-trace rows for `Γ(N)`, computed in parallel and kept in trace order.
pub fn spectrum(n: u64, x: f64) -> Result<Vec<TraceClass>> {
    trace_range(x).into_par_iter().map(|t| trace_classes(n, t)).collect()
}

/// `2 √(|t| - 2) dΨ(t)`, the weight of trace `t` in `Ψ`.
pub fn psi_weight(t: i64, dpsi: f64) -> f64 {
    2.0 * ((t.abs() - 2) as f64).sqrt() * dpsi
}

pub fn psi_from_rows(n: u64, rows: &[TraceClass], x: f64) -> f64 {
    let b = trace_bound(x);
    c_level(n) * rows.iter().filter(|r| r.t.abs() <= b).map(|r| psi_weight(r.t, r.dpsi)).sum::<f64>()
}

/// Primitive classes of norm at most `x`, counted once per `±`-pair when
/// `-1 ∈ Γ(N)`.
pub fn pi_from_rows(n: u64, rows: &[TraceClass], x: f64) -> u64 {
    let b = trace_bound(x);
    let raw: u64 = rows
        .iter()
        .filter(|r| r.t.abs() <= b)
        .flat_map(|r| r.classes.iter())
        .filter(|c| c.level_power == 1)
        .map(|c| c.splitting.count)
        .sum();
    if minus_one_in_level(n) {
        debug_assert_eq!(raw % 2, 0);
        raw / 2
    } else {
        raw
    }
}

pub fn psi_enumerated(n: u64, x: f64) -> Result<f64> {
    Ok(psi_from_rows(n, &spectrum(n, x)?, x))
}

pub fn pi_enumerated(n: u64, x: f64) -> Result<u64> {
    Ok(pi_from_rows(n, &spectrum(n, x)?, x))
}

/// `li(x)` by Ramanujan's series.
pub fn li(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let l = x.ln();
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut inner = 0.0;
    for n in 1..200 {
        term *= l / n as f64;
        if (n - 1) % 2 == 0 {
            inner += 1.0 / n as f64;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let add = sign * term / 2f64.powi(n - 1) * inner;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + l.ln() + x.sqrt() * sum
}

#[derive(Debug, Clone, Serialize)]
pub struct PgtRow {
    pub x: f64,
    pub psi: f64,
    pub psi_minus_x: f64,
    pub x_pow_7_10: f64,
    pub pi: u64,
    pub li_x: f64,
    pub pi_minus_li: f64,
}

/// One enumeration up to the largest grid point, then every row from it.
pub fn pgt_report(n: u64, grid: &[f64]) -> Result<(Vec<TraceClass>, Vec<PgtRow>)> {
    let top = grid.iter().copied().fold(0.0, f64::max);
    let rows = spectrum(n, top)?;
    let table = grid
        .iter()
        .map(|&x| {
            let psi = psi_from_rows(n, &rows, x);
            let pi = pi_from_rows(n, &rows, x);
            let li_x = li(x);
            PgtRow {
                x,
                psi,
                psi_minus_x: psi - x,
                x_pow_7_10: x.powf(0.7),
                pi,
                li_x,
                pi_minus_li: pi as f64 - li_x,
            }
        })
        .collect();
    Ok((rows, table))
}

/// The fundamental unit of a class, for reports.
pub fn class_unit(c: &LevelClass) -> &PellUnit {
    &c.centralizer.unit
}
