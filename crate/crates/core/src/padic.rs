//! Fixed-precision arithmetic in `Z/p^M`, quadratic étale algebras over `Q_p`
//! in an explicit integral basis, and the unit indices of quadratic orders.
//!
//! Every p-adic integer is stored as a residue in `[0, p^M)`. A context carries
//! a guard of two digits: any question whose answer depends on digits at or
//! above `M - guard` is refused with [`GeomatchError::PrecisionExhausted`] and
//! the caller is expected to retry with a larger precision.

use crate::arith::{is_prime, mod_inv, modp, pow_i128, vp};
use crate::error::{GeomatchError, Result};
use serde::Serialize;

pub const DEFAULT_GUARD: u32 = 2;

/// Largest modulus we allow, so that products of two residues fit in `i128`.
const MAX_MODULUS: i128 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdicContext {
    p: u64,
    precision: u32,
    guard: u32,
    modulus: i128,
}

impl PAdicContext {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        Self::with_guard(p, precision, DEFAULT_GUARD)
    }

    pub fn with_guard(p: u64, precision: u32, guard: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(GeomatchError::NotPrime(p));
        }
        if guard < 1 || precision <= guard {
            return Err(GeomatchError::PrecisionExhausted { p, precision, guard });
        }
        let mut modulus: i128 = 1;
        for _ in 0..precision {
            modulus = modulus.saturating_mul(p as i128);
            if modulus > MAX_MODULUS {
                return Err(GeomatchError::InvalidInput(format!(
                    "p^M too large for p={p}, M={precision}"
                )));
            }
        }
        Ok(Self { p, precision, guard, modulus })
    }

    /// The largest precision that still fits the residue representation.
    pub fn max_precision(p: u64) -> u32 {
        let mut m = 0;
        let mut modulus: i128 = 1;
        while modulus.saturating_mul(p as i128) <= MAX_MODULUS {
            modulus *= p as i128;
            m += 1;
        }
        m
    }

    /// Same prime at twice the precision (capped by the representation).
    pub fn doubled(&self) -> Result<Self> {
        let target = (self.precision * 2).min(Self::max_precision(self.p));
        if target <= self.precision {
            return Err(self.exhausted());
        }
        Self::with_guard(self.p, target, self.guard)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Residue field size. Only `Q_p` is supported as a base, so `q = p`.
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    pub fn modulus(&self) -> i128 {
        self.modulus
    }

    /// Digits below this exponent are trusted.
    pub fn reliable(&self) -> u32 {
        self.precision - self.guard
    }

    pub fn exhausted(&self) -> GeomatchError {
        GeomatchError::PrecisionExhausted {
            p: self.p,
            precision: self.precision,
            guard: self.guard,
        }
    }

    pub fn reduce(&self, x: i128) -> i128 {
        modp(x, self.modulus)
    }

    pub fn add(&self, a: i128, b: i128) -> i128 {
        self.reduce(a + b)
    }

    pub fn sub(&self, a: i128, b: i128) -> i128 {
        self.reduce(a - b)
    }

    pub fn mul(&self, a: i128, b: i128) -> i128 {
        self.reduce(self.reduce(a) * self.reduce(b))
    }

    pub fn pow_p(&self, k: u32) -> i128 {
        pow_i128(self.p as i128, k)
    }

    pub fn is_unit(&self, x: i128) -> bool {
        self.reduce(x) % self.p as i128 != 0
    }

    pub fn inv(&self, x: i128) -> Option<i128> {
        mod_inv(x, self.modulus)
    }

    /// `num / den` as a residue; `den` must be a p-adic unit.
    pub fn from_ratio(&self, num: i128, den: i128) -> Result<i128> {
        let inv = self.inv(den).ok_or_else(|| {
            GeomatchError::InvalidInput(format!("{den} is not a unit at p={}", self.p))
        })?;
        Ok(self.mul(self.reduce(num), inv))
    }

    /// `v(x)`, refused when `x ≡ 0 mod p^(M - guard)`.
    pub fn valuation(&self, x: i128) -> Result<u32> {
        let x = self.reduce(x);
        let p = self.p as i128;
        let mut v = 0;
        let mut y = x;
        while v < self.reliable() {
            if y % p != 0 {
                return Ok(v);
            }
            y /= p;
            v += 1;
        }
        Err(self.exhausted())
    }

    /// Decides `v(x) >= k`. Exact for `k <= M - guard`; above that it only
    /// answers when the reliable digits already show a smaller valuation.
    pub fn valuation_at_least(&self, x: i128, k: u32) -> Result<bool> {
        if k == 0 {
            return Ok(true);
        }
        let x = self.reduce(x);
        if k <= self.reliable() {
            return Ok(x % self.pow_p(k) == 0);
        }
        if x % self.pow_p(self.reliable()) != 0 {
            Ok(false)
        } else {
            Err(self.exhausted())
        }
    }

    /// Whether the unit `u` is a square in `Z_p`.
    pub fn unit_is_square(&self, u: i128) -> bool {
        let u = self.reduce(u);
        debug_assert!(self.is_unit(u));
        if self.p == 2 {
            // Squares of units are decided mod 8; search all residues mod 2^k.
            let k = self.precision.clamp(5, 12);
            let m = 1i128 << k;
            let target = u % m;
            (0..m).filter(|x| x % 2 == 1).any(|x| (x * x) % m == target)
        } else {
            let p = self.p as i128;
            let mut acc = 1i128;
            let mut base = u % p;
            let mut e = (p - 1) / 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * base % p;
                }
                base = base * base % p;
                e >>= 1;
            }
            acc == 1
        }
    }

    /// A square root of the unit square `u`. For `p = 2` the root is correct
    /// modulo `2^(M-1)`, which the guard absorbs.
    pub fn sqrt_unit(&self, u: i128) -> Option<i128> {
        let u = self.reduce(u);
        if !self.is_unit(u) || !self.unit_is_square(u) {
            return None;
        }
        if self.p == 2 {
            let mut s: i128 = 1;
            for j in 3..self.precision {
                let m = 1i128 << (j + 1);
                if (s * s - u).rem_euclid(m) != 0 {
                    s += 1i128 << (j - 1);
                }
            }
            return Some(self.reduce(s));
        }
        let p = self.p as i128;
        let mut s = (1..p).find(|x| (x * x - u).rem_euclid(p) == 0)?;
        let mut modulus = p;
        while modulus < self.modulus {
            modulus = (modulus * modulus).min(self.modulus);
            let f = modp(s * s - u, modulus);
            let d = mod_inv(2 * s, modulus)?;
            s = modp(s - modp(f * d, modulus), modulus);
        }
        Some(self.reduce(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorusKind {
    Split,
    UnramifiedField,
    RamifiedField,
}

/// A quadratic étale algebra `E/Q_p` together with an integral basis
/// `O_E = o ⊕ oθ₀` in the field cases. `θ₀` has minimal polynomial
/// `X² - sX + m` with exact integer `s, m`; in the ramified case `θ₀` is a
/// uniformiser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusData {
    pub ctx: PAdicContext,
    pub kind: TorusKind,
    pub theta_trace: i128,
    pub theta_norm: i128,
    /// The root of `X² - tX + 1` when the torus came from a trace.
    pub generator: Option<RegularElement>,
    pub trace: Option<i64>,
}

/// A regular element of `E^× - F`, in root coordinates (split) or in the
/// `θ₀`-basis (field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularElement {
    Split { a: i128, b: i128 },
    Field { alpha: i128, beta: i128 },
}

impl TorusData {
    pub fn e(&self) -> u32 {
        match self.kind {
            TorusKind::RamifiedField => 2,
            _ => 1,
        }
    }

    pub fn q(&self) -> u64 {
        self.ctx.q()
    }

    pub fn is_field(&self) -> bool {
        self.kind != TorusKind::Split
    }

    pub fn split(ctx: PAdicContext) -> Self {
        Self {
            ctx,
            kind: TorusKind::Split,
            theta_trace: 0,
            theta_norm: 0,
            generator: None,
            trace: None,
        }
    }

    /// Field torus with an explicit `θ₀` polynomial. The polynomial must give
    /// an integral basis: irreducible mod p (unramified) or Eisenstein (ramified).
    pub fn from_theta(ctx: PAdicContext, kind: TorusKind, s: i128, m: i128) -> Result<Self> {
        let p = ctx.p() as i128;
        let ok = match kind {
            TorusKind::Split => false,
            TorusKind::UnramifiedField => {
                (0..p).all(|x| modp(x * x - s * x + m, p) != 0)
            }
            TorusKind::RamifiedField => {
                modp(s, p) == 0 && modp(m, p) == 0 && modp(m, p * p) != 0
            }
        };
        if !ok {
            return Err(GeomatchError::InvalidInput(format!(
                "X^2 - {s}X + {m} does not give an integral basis of a {kind:?} torus at p={p}"
            )));
        }
        Ok(Self {
            ctx,
            kind,
            theta_trace: s,
            theta_norm: m,
            generator: None,
            trace: None,
        })
    }

    /// A default field torus of the requested kind.
    pub fn standard_field(ctx: PAdicContext, kind: TorusKind) -> Result<Self> {
        let p = ctx.p() as i128;
        let (s, m) = match (kind, ctx.p()) {
            (TorusKind::UnramifiedField, 2) => (1, 1),
            (TorusKind::UnramifiedField, _) => {
                let n = (2..p)
                    .find(|&n| !ctx.unit_is_square(n))
                    .expect("odd prime has a non-residue");
                (0, -n)
            }
            (TorusKind::RamifiedField, _) => (0, -p),
            (TorusKind::Split, _) => {
                return Err(GeomatchError::InvalidInput("split torus has no θ₀".into()))
            }
        };
        Self::from_theta(ctx, kind, s, m)
    }

    /// Norm `N(α + βθ₀) = α² + sαβ + mβ²`.
    pub fn norm(&self, alpha: i128, beta: i128) -> i128 {
        let c = &self.ctx;
        let s = c.reduce(self.theta_trace);
        let m = c.reduce(self.theta_norm);
        c.reduce(c.mul(alpha, alpha) + c.mul(c.mul(s, alpha), beta) + c.mul(c.mul(m, beta), beta))
    }

    /// `(α + βθ₀)(γ + δθ₀)` using `θ₀² = sθ₀ - m`.
    pub fn mul(&self, x: (i128, i128), y: (i128, i128)) -> (i128, i128) {
        let c = &self.ctx;
        let bd = c.mul(x.1, y.1);
        let a = c.sub(c.mul(x.0, y.0), c.mul(bd, self.theta_norm));
        let b = c.add(c.add(c.mul(x.0, y.1), c.mul(x.1, y.0)), c.mul(bd, self.theta_trace));
        (a, b)
    }

    pub fn is_unit(&self, alpha: i128, beta: i128) -> bool {
        self.ctx.is_unit(self.norm(alpha, beta))
    }

    /// `x ∈ U_E^level` for a field element in θ₀-coordinates.
    pub fn in_unit_filtration(&self, alpha: i128, beta: i128, level: u32) -> Result<bool> {
        if level == 0 {
            return Ok(self.is_unit(alpha, beta));
        }
        let c = &self.ctx;
        let am1 = c.sub(alpha, 1);
        match self.e() {
            1 => Ok(c.valuation_at_least(am1, level)? && c.valuation_at_least(beta, level)?),
            _ => Ok(c.valuation_at_least(am1, level.div_ceil(2))?
                && c.valuation_at_least(beta, (level - 1).div_ceil(2))?),
        }
    }

    /// `x ∈ (1 + ϖ^n L_r) ∩ L_r^×` with `L_r = o + ϖ^r O_E`.
    pub fn in_order_coset(&self, alpha: i128, beta: i128, n: u32, r: u32) -> Result<bool> {
        let c = &self.ctx;
        if n == 0 {
            return Ok(self.is_unit(alpha, beta) && c.valuation_at_least(beta, r)?);
        }
        Ok(c.valuation_at_least(c.sub(alpha, 1), n)? && c.valuation_at_least(beta, n + r)?)
    }

    /// `x ∈ L_r`.
    pub fn in_order(&self, beta: i128, r: u32) -> Result<bool> {
        self.ctx.valuation_at_least(beta, r)
    }
}

impl RegularElement {
    /// Checks regularity at the context's precision.
    pub fn validate(&self, ctx: &PAdicContext) -> Result<()> {
        match *self {
            RegularElement::Split { a, b } => {
                if !ctx.is_unit(a) || !ctx.is_unit(b) {
                    return Err(GeomatchError::RegularityViolated(
                        "split coordinates must be units".into(),
                    ));
                }
                match ctx.valuation(ctx.sub(a, b)) {
                    Ok(_) => Ok(()),
                    Err(_) => Err(GeomatchError::RegularityViolated(
                        "a = b at working precision".into(),
                    )),
                }
            }
            RegularElement::Field { beta, .. } => ctx.valuation(beta).map(|_| ()),
        }
    }

    /// `v(a - b)` for split elements.
    pub fn split_gap(&self, ctx: &PAdicContext) -> Result<u32> {
        match *self {
            RegularElement::Split { a, b } => ctx.valuation(ctx.sub(a, b)).map_err(|_| {
                GeomatchError::RegularityViolated("a = b at working precision".into())
            }),
            _ => Err(GeomatchError::InvalidInput("not a split element".into())),
        }
    }

    /// Conductor exponent `c(x) = v(β)`: the largest `r` with `x ∈ L_r`.
    pub fn conductor(&self, ctx: &PAdicContext) -> Result<u32> {
        match *self {
            RegularElement::Field { beta, .. } => ctx.valuation(beta),
            _ => Err(GeomatchError::InvalidInput("not a field element".into())),
        }
    }
}

/// Classifies `E = Q_p[X]/(X² - tX + 1)` at a default precision, raising it
/// until the generator's invariants are readable.
pub fn classify_torus(t: i64, p: u64) -> Result<TorusData> {
    let start = 16.min(PAdicContext::max_precision(p));
    let mut ctx = PAdicContext::new(p, start)?;
    loop {
        match classify_torus_with(t, ctx) {
            Err(GeomatchError::PrecisionExhausted { .. }) => ctx = ctx.doubled()?,
            other => return other,
        }
    }
}

/// Classification at a fixed precision.
pub fn classify_torus_with(t: i64, ctx: PAdicContext) -> Result<TorusData> {
    if t.abs() <= 2 {
        return Err(GeomatchError::NonHyperbolicTrace(t));
    }
    let p = ctx.p() as i128;
    let t = t as i128;
    let d = t * t - 4;
    let v = vp(d, ctx.p());
    if v + 2 >= ctx.reliable() {
        return Err(ctx.exhausted());
    }
    let k = v / 2;
    let pk = pow_i128(p, k);
    let u = d / pow_i128(p, v);
    let c = &ctx;

    let (kind, s, m, alpha, beta, split_roots) = if v.is_multiple_of(2) && c.unit_is_square(u) {
        let root = c.sqrt_unit(u).ok_or_else(|| c.exhausted())?;
        let sqrt_d = c.mul(pk, root);
        let (a, b) = if p == 2 {
            // t even and k >= 1 here, so both roots are (t ± 2^k √u)/2.
            let half = c.mul(pow_i128(2, k - 1), root);
            (c.add(t / 2, half), c.sub(t / 2, half))
        } else {
            (c.from_ratio(t + sqrt_d, 2)?, c.from_ratio(t - sqrt_d, 2)?)
        };
        (TorusKind::Split, 0, 0, 0, 0, Some((a, b)))
    } else if p != 2 {
        let half_t = c.from_ratio(t, 2)?;
        let half_pk = c.from_ratio(pk, 2)?;
        if v.is_multiple_of(2) {
            (TorusKind::UnramifiedField, 0, -u, half_t, half_pk, None)
        } else {
            (TorusKind::RamifiedField, 0, -p * u, half_t, half_pk, None)
        }
    } else if v % 2 == 1 {
        // d = 4^k · 2w with w odd; θ₀ = √(2w), k >= 1.
        (TorusKind::RamifiedField, 0, -2 * u, c.reduce(t / 2), pow_i128(2, k - 1), None)
    } else if modp(u, 8) == 5 {
        // θ₀ = (1 + √u)/2, root of X² - X + (1 - u)/4.
        let alpha = (t - pk) / 2;
        (TorusKind::UnramifiedField, 1, (1 - u) / 4, alpha, pk, None)
    } else {
        // u ≡ 3 mod 4: θ₀ = 1 + √u is a uniformiser, root of X² - 2X + (1 - u).
        let alpha = (t - pk) / 2;
        (TorusKind::RamifiedField, 2, 1 - u, alpha, pow_i128(2, k - 1), None)
    };

    let generator = match split_roots {
        Some((a, b)) => RegularElement::Split { a, b },
        None => RegularElement::Field { alpha: c.reduce(alpha), beta: c.reduce(beta) },
    };
    let mut torus = match kind {
        TorusKind::Split => TorusData::split(ctx),
        _ => TorusData::from_theta(ctx, kind, s, m)?,
    };
    generator.validate(&ctx)?;
    torus.generator = Some(generator);
    torus.trace = Some(t as i64);
    Ok(torus)
}

/// `|L_k^× / L_{k+r}^×|`: `q^r` if `k > 0` or `e = 2`, otherwise `q^r (1 + 1/q)`.
pub fn quad_order_unit_index(k: u32, r: u32, e: u32, q: u64) -> u128 {
    assert!(r >= 1, "index needs r >= 1");
    let qr = (q as u128).pow(r);
    if k > 0 || e == 2 {
        qr
    } else {
        qr / q as u128 * (q as u128 + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_examples() {
        let c3 = PAdicContext::new(3, 6).unwrap();
        assert_eq!(c3.valuation(3).unwrap(), 1);
        assert_eq!(c3.valuation(1).unwrap(), 0);
        let c2 = PAdicContext::new(2, 8).unwrap();
        assert_eq!(c2.valuation(12).unwrap(), 2);
    }

    #[test]
    fn valuation_refuses_unreliable_digits() {
        let c2 = PAdicContext::new(2, 8).unwrap();
        assert!(matches!(c2.valuation(64), Err(GeomatchError::PrecisionExhausted { .. })));
        assert!(matches!(c2.valuation(0), Err(GeomatchError::PrecisionExhausted { .. })));
        assert_eq!(c2.valuation(32).unwrap(), 5);
        assert!(!c2.valuation_at_least(32, 7).unwrap());
        assert!(c2.valuation_at_least(64, 7).is_err());
    }

    #[test]
    fn context_rejects_bad_input() {
        assert!(matches!(PAdicContext::new(4, 5), Err(GeomatchError::NotPrime(4))));
        assert!(PAdicContext::new(3, 2).is_err());
        assert!(PAdicContext::new(2, 70).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_torus(3, 11).unwrap().kind, TorusKind::Split);
        let t5 = classify_torus(3, 5).unwrap();
        assert_eq!((t5.kind, t5.e()), (TorusKind::RamifiedField, 2));
        let t2 = classify_torus(3, 2).unwrap();
        assert_eq!((t2.kind, t2.e()), (TorusKind::UnramifiedField, 1));
        assert!(matches!(classify_torus(2, 3), Err(GeomatchError::NonHyperbolicTrace(2))));
        assert!(matches!(classify_torus(-1, 3), Err(GeomatchError::NonHyperbolicTrace(-1))));
    }

    fn brute_is_square_mod(n: i128, p: i128, k: u32) -> bool {
        let m = pow_i128(p, k);
        (0..m).any(|x| (x * x - n).rem_euclid(m) == 0)
    }

    #[test]
    fn classify_matches_square_search() {
        // t=3,p=5: 5 is not a square in Z/5^4; t=3,p=2: 5 is not a square in Z/32.
        assert!(!brute_is_square_mod(5, 5, 4));
        assert!(!brute_is_square_mod(5, 2, 5));
        assert!(brute_is_square_mod(5, 11, 3));
    }

    #[test]
    fn generator_satisfies_its_polynomial() {
        for &p in &[2u64, 3, 5, 7, 11, 13] {
            for t in 3..40i64 {
                for t in [t, -t] {
                    let torus = classify_torus(t, p).unwrap();
                    let c = torus.ctx;
                    // Compare modulo p^(M-2): the p = 2 square root loses a digit.
                    let m = c.pow_p(c.reliable());
                    match torus.generator.unwrap() {
                        RegularElement::Split { a, b } => {
                            assert_eq!(modp(c.add(a, b) - t as i128, m), 0);
                            assert_eq!(modp(c.mul(a, b) - 1, m), 0);
                        }
                        RegularElement::Field { alpha, beta } => {
                            // x = α + βθ₀ must satisfy x² - t x + 1 = 0.
                            let x = (alpha, beta);
                            let x2 = torus.mul(x, x);
                            let r0 = c.reduce(x2.0 - (t as i128) * alpha + 1);
                            let r1 = c.reduce(x2.1 - (t as i128) * beta);
                            assert_eq!(modp(r0, m), 0, "t={t} p={p}");
                            assert_eq!(modp(r1, m), 0, "t={t} p={p}");
                            assert!(torus.is_unit(alpha, beta));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kind_is_stable_under_precision() {
        for &p in &[2u64, 3, 5, 7] {
            for t in 3..30i64 {
                let lo = PAdicContext::new(p, 14.min(PAdicContext::max_precision(p))).unwrap();
                let hi = PAdicContext::new(p, 20.min(PAdicContext::max_precision(p))).unwrap();
                let a = classify_torus_with(t, lo).unwrap();
                let b = classify_torus_with(t, hi).unwrap();
                assert_eq!(a.kind, b.kind);
            }
        }
    }

    #[test]
    fn unit_index_examples() {
        assert_eq!(quad_order_unit_index(0, 1, 1, 3), 4);
        assert_eq!(quad_order_unit_index(1, 1, 1, 3), 3);
        assert_eq!(quad_order_unit_index(0, 2, 2, 2), 4);
    }

    #[test]
    fn sqrt_roundtrip() {
        for &(p, u) in &[(2u64, 17i128), (2, 33), (3, 7), (5, 11), (7, 2)] {
            let c = PAdicContext::new(p, 10).unwrap();
            let s = c.sqrt_unit(u).unwrap();
            let m = c.pow_p(c.precision() - 1);
            assert_eq!(modp(s * s - u, m), 0, "p={p} u={u}");
        }
    }
}
