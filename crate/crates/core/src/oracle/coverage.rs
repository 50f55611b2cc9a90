//! Sampling test of the double-coset decompositions `G = ⊔_r T h_r K`.
//!
//! A coset `T h K` is identified with the `T`-orbit of `h·L0` (for `K = GL_2(o)`)
//! or of the ordered edge `h·(L0, L1)` (for `K = J^×`, with `L1 = o ⊕ p`), with
//! lattices taken up to homothety. Orbits are generated by applying a full set
//! of representatives of `T / (T ∩ h K h^{-1})` (times translations in the
//! split case), so each sample is classified by a set lookup.

use super::embed::companion_at_level;
use super::index::unipotent;
use crate::chain::Mat2;
use crate::error::{GeomatchError, Result};
use crate::padic::{PAdicContext, TorusData, TorusKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decomposition {
    SplitM,
    SplitJ,
    NonsplitM,
    NonsplitJ,
}

impl Decomposition {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "split-M" | "split-m" => Ok(Self::SplitM),
            "split-J" | "split-j" => Ok(Self::SplitJ),
            "nonsplit-M" | "nonsplit-m" => Ok(Self::NonsplitM),
            "nonsplit-J" | "nonsplit-j" => Ok(Self::NonsplitJ),
            _ => Err(GeomatchError::InvalidInput(format!("unknown decomposition {s}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SplitM => "split-M",
            Self::SplitJ => "split-J",
            Self::NonsplitM => "nonsplit-M",
            Self::NonsplitJ => "nonsplit-J",
        }
    }

    fn is_edge(&self) -> bool {
        matches!(self, Self::SplitJ | Self::NonsplitJ)
    }
}

/// A lattice class in Hermite form `⟨(p^a, c), (0, p^b)⟩`, `c mod p^b`,
/// scaled to be primitive.
pub type LatticeClass = (u32, u32, i128);

fn val(ctx: &PAdicContext, x: i128) -> Option<u32> {
    let x = ctx.reduce(x);
    if x == 0 {
        return None;
    }
    let p = ctx.p() as i128;
    let (mut v, mut y) = (0, x);
    while y % p == 0 {
        y /= p;
        v += 1;
    }
    Some(v)
}

/// Homothety class of the column lattice of `g`. Entries must be exact (the
/// context modulus exceeds every true entry times `p^den`).
pub fn lattice_class(ctx: &PAdicContext, g: &Mat2) -> Result<LatticeClass> {
    let [x1, x2, y1, y2] = g.e;
    let (v1, v2) = (val(ctx, x1), val(ctx, x2));
    let (xj, yj, a) = match (v1, v2) {
        (Some(a1), Some(a2)) if a1 <= a2 => (x1, y1, a1),
        (Some(_), Some(a2)) => (x2, y2, a2),
        (Some(a1), None) => (x1, y1, a1),
        (None, Some(a2)) => (x2, y2, a2),
        (None, None) => return Err(GeomatchError::InvalidInput("singular lattice".into())),
    };
    let det = ctx.sub(ctx.mul(x1, y2), ctx.mul(x2, y1));
    let vd = val(ctx, det).ok_or_else(|| GeomatchError::InvalidInput("singular lattice".into()))?;
    let b = vd - a;
    let unit = ctx.reduce(xj / ctx.pow_p(a));
    let inv = ctx.inv(unit).ok_or_else(|| ctx.exhausted())?;
    let c = ctx.mul(yj, inv).rem_euclid(ctx.pow_p(b));
    let vc = if c == 0 { b } else { val(ctx, c).unwrap_or(b) };
    let k = a.min(b).min(vc);
    let nb = b - k;
    Ok((a - k, nb, (c / ctx.pow_p(k)).rem_euclid(ctx.pow_p(nb))))
}

/// A vertex `[h L0]` or an ordered edge `([h L0], [h L1])`.
pub type TreeKey = (LatticeClass, Option<LatticeClass>);

fn tree_key(ctx: &PAdicContext, h: &Mat2, edge: bool) -> Result<TreeKey> {
    let v0 = lattice_class(ctx, h)?;
    if !edge {
        return Ok((v0, None));
    }
    let l1 = h.mul(ctx, &Mat2::new(ctx, [1, 0, 0, ctx.p() as i128]));
    Ok((v0, Some(lattice_class(ctx, &l1)?)))
}

/// The torus used by a decomposition at prime `p`.
fn torus_for(decomp: Decomposition, ctx: PAdicContext, kind: TorusKind) -> Result<Option<TorusData>> {
    match decomp {
        Decomposition::SplitM | Decomposition::SplitJ => Ok(None),
        _ => Ok(Some(TorusData::standard_field(ctx, kind)?)),
    }
}

/// Orbit sets indexed by `(r, side)`; side 1 is the `Π`-translate for edges.
pub struct OrbitTable {
    pub sets: Vec<(u32, u8, HashSet<TreeKey>)>,
}

const TRANSLATIONS: i32 = 3;

/// Per-chunk histogram, sides hit, violation count and first violations.
type ChunkTally = (BTreeMap<u32, u64>, [bool; 2], u64, Vec<String>);

/// Orbit tables with more entries than this are refused.
pub const ORBIT_TABLE_LIMIT: u128 = 1 << 23;

/// Upper bound on the number of torus representatives `build_orbits` visits.
pub fn orbit_table_size(decomp: Decomposition, q: u64, torus: Option<&TorusData>, r_max: u32) -> u128 {
    let sides = if decomp.is_edge() { 2 } else { 1 };
    let q = q as u128;
    let per_r = |r: u32| -> u128 {
        let k = r.max(1);
        match torus {
            None => (2 * TRANSLATIONS as u128 + 1).saturating_mul(q.saturating_pow(k)),
            Some(t) => (t.e() as u128).saturating_mul(q.saturating_pow(2 * k)),
        }
    };
    (0..=r_max).fold(0u128, |acc, r| acc.saturating_add(per_r(r))).saturating_mul(sides)
}

pub fn build_orbits(
    decomp: Decomposition,
    ctx: &PAdicContext,
    torus: Option<&TorusData>,
    r_max: u32,
) -> Result<OrbitTable> {
    let edge = decomp.is_edge();
    let sides: &[u8] = if edge { &[0, 1] } else { &[0] };
    let r_min = match (decomp, torus) {
        (Decomposition::NonsplitJ, Some(t)) => 2 - t.e(),
        _ => 0,
    };
    let mut sets = Vec::new();
    for r in r_min..=r_max {
        // Coset representative h_r.
        let h = match torus {
            None => unipotent(ctx, r).0,
            Some(_) => Mat2::new(ctx, [ctx.pow_p(r), 0, 0, 1]),
        };
        // Torus representatives modulo T ∩ h K h^{-1} and the centre.
        let modulus = ctx.pow_p(r.max(1));
        let mut reps: Vec<Mat2> = Vec::new();
        match torus {
            None => {
                for j in -TRANSLATIONS..=TRANSLATIONS {
                    for a in (1..modulus).filter(|&a| ctx.is_unit(a)) {
                        let d = if j >= 0 {
                            Mat2::new(ctx, [ctx.pow_p(j as u32) * a, 0, 0, 1])
                        } else {
                            Mat2::new(ctx, [a, 0, 0, ctx.pow_p((-j) as u32)])
                        };
                        reps.push(d);
                    }
                }
            }
            Some(t) => {
                // Units mod p^r, and for a ramified torus also θ₀ times them.
                let c0 = companion_at_level(t, 0);
                let mut units = Vec::new();
                for alpha in 0..modulus {
                    for beta in 0..modulus {
                        if t.is_unit(alpha, beta) {
                            let scaled = Mat2 { e: c0.e.map(|x| ctx.mul(x, beta)), den: 0 };
                            units.push(scaled.add(ctx, &Mat2::scalar(ctx, alpha)));
                        }
                    }
                }
                if t.e() == 2 {
                    let shifted: Vec<Mat2> = units.iter().map(|u| c0.mul(ctx, u)).collect();
                    units.extend(shifted);
                }
                reps = units;
            }
        }
        for &side in sides {
            let hs = if side == 0 { h } else { h.mul(ctx, &Mat2::pi(ctx)) };
            let set: HashSet<TreeKey> = reps
                .par_iter()
                .map(|t| tree_key(ctx, &t.mul(ctx, &hs), edge))
                .collect::<Result<HashSet<_>>>()?;
            sets.push((r, side, set));
        }
    }
    Ok(OrbitTable { sets })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub decomposition: Decomposition,
    pub q: u64,
    pub m: u32,
    pub samples: u64,
    pub seed: u64,
    pub r_max: u32,
    pub torus: Option<TorusKind>,
    pub histogram: BTreeMap<u32, u64>,
    pub sides_hit: [bool; 2],
    pub violation_count: u64,
    pub violations: Vec<String>,
}

impl CoverageReport {
    pub fn ok(&self) -> bool {
        self.violation_count == 0
    }
}

fn random_unit(rng: &mut ChaCha8Rng, p: i128, modulus: i128) -> i128 {
    loop {
        let u = rng.gen_range(0..modulus);
        if u % p != 0 {
            return u;
        }
    }
}

/// `g = diag(p^i, 1) · n(p^{-s} u) · k` with `k` uniform in `GL_2(Z/p^M)`.
fn sample(rng: &mut ChaCha8Rng, ctx: &PAdicContext, m: u32) -> Mat2 {
    let p = ctx.p() as i128;
    let pm = p.pow(m);
    let k = loop {
        let e = [0; 4].map(|_| rng.gen_range(0..pm));
        if (e[0] * e[3] - e[1] * e[2]) % p != 0 {
            break Mat2::new(ctx, e);
        }
    };
    let i = rng.gen_range(0..=1u32);
    let s = rng.gen_range(0..m);
    let u = random_unit(rng, p, pm);
    let ps = ctx.pow_p(s);
    let n = Mat2::with_den(ctx, [ps, u, 0, ps], s);
    let d = Mat2::new(ctx, [ctx.pow_p(i), 0, 0, 1]);
    d.mul(ctx, &n).mul(ctx, &k)
}

/// Samples `count` elements and checks each lies in exactly one coset.
pub fn coset_coverage_test(
    decomp: Decomposition,
    q: u64,
    m: u32,
    count: u64,
    seed: u64,
    torus_kind: TorusKind,
) -> Result<CoverageReport> {
    let ctx = PAdicContext::new(q, PAdicContext::max_precision(q))?;
    let torus = torus_for(decomp, ctx, torus_kind)?;
    let r_max = 2 * m + 2;
    let size = orbit_table_size(decomp, q, torus.as_ref(), r_max);
    if size > ORBIT_TABLE_LIMIT {
        return Err(GeomatchError::EnumerationTooLarge { size, limit: ORBIT_TABLE_LIMIT });
    }
    let table = build_orbits(decomp, &ctx, torus.as_ref(), r_max)?;
    let edge = decomp.is_edge();
    const CHUNK: u64 = 1024;
    let chunks = count.div_ceil(CHUNK);
    let results: Vec<Result<ChunkTally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut hist = BTreeMap::new();
            let mut sides = [false; 2];
            let mut bad = 0u64;
            let mut msgs = Vec::new();
            let n = CHUNK.min(count - c * CHUNK);
            for _ in 0..n {
                let g = sample(&mut rng, &ctx, m);
                let key = tree_key(&ctx, &g, edge)?;
                let mut hits: Vec<(u32, u8)> = Vec::new();
                for (r, side, set) in &table.sets {
                    if set.contains(&key) {
                        hits.push((*r, *side));
                    }
                }
                let mut rs: Vec<u32> = hits.iter().map(|h| h.0).collect();
                rs.dedup();
                if rs.len() == 1 {
                    *hist.entry(rs[0]).or_insert(0) += 1;
                    for h in &hits {
                        sides[h.1 as usize] = true;
                    }
                } else {
                    bad += 1;
                    if msgs.len() < 5 {
                        msgs.push(format!("g={:?}/p^{} hits r={:?}", g.e, g.den, rs));
                    }
                }
            }
            Ok((hist, sides, bad, msgs))
        })
        .collect();
    let mut histogram = BTreeMap::new();
    let mut sides_hit = [false; 2];
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for res in results {
        let (h, s, b, msgs) = res?;
        for (r, c) in h {
            *histogram.entry(r).or_insert(0) += c;
        }
        sides_hit[0] |= s[0];
        sides_hit[1] |= s[1];
        violation_count += b;
        for msg in msgs {
            if violations.len() < 10 {
                violations.push(msg);
            }
        }
    }
    Ok(CoverageReport {
        decomposition: decomp,
        q,
        m,
        samples: count,
        seed,
        r_max,
        torus: torus.map(|t| t.kind),
        histogram,
        sides_hit,
        violation_count,
        violations,
    })
}

/// Whether the identity lands in the `r = 0` coset (a sanity probe).
pub fn identity_coset(decomp: Decomposition, q: u64, torus_kind: TorusKind) -> Result<Vec<u32>> {
    let ctx = PAdicContext::new(q, PAdicContext::max_precision(q))?;
    let torus = torus_for(decomp, ctx, torus_kind)?;
    let table = build_orbits(decomp, &ctx, torus.as_ref(), 3)?;
    let key = tree_key(&ctx, &Mat2::identity(&ctx), decomp.is_edge())?;
    let mut rs: Vec<u32> = table.sets.iter().filter(|s| s.2.contains(&key)).map(|s| s.0).collect();
    rs.dedup();
    Ok(rs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_in_the_base_coset() {
        for q in [2u64, 3] {
            assert_eq!(identity_coset(Decomposition::SplitM, q, TorusKind::UnramifiedField).unwrap(), vec![0]);
            assert_eq!(identity_coset(Decomposition::SplitJ, q, TorusKind::UnramifiedField).unwrap(), vec![0]);
            assert_eq!(identity_coset(Decomposition::NonsplitM, q, TorusKind::RamifiedField).unwrap(), vec![0]);
        }
    }

    #[test]
    fn lattice_class_of_unipotent() {
        let ctx = PAdicContext::new(3, 30).unwrap();
        let (n2, _) = unipotent(&ctx, 2);
        assert_eq!(lattice_class(&ctx, &n2).unwrap(), (0, 4, 9));
        assert_eq!(lattice_class(&ctx, &Mat2::scalar(&ctx, 9)).unwrap(), (0, 0, 0));
    }

    #[test]
    fn small_coverage_runs_clean() {
        for d in [Decomposition::SplitM, Decomposition::SplitJ, Decomposition::NonsplitM, Decomposition::NonsplitJ] {
            for kind in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
                let rep = coset_coverage_test(d, 2, 3, 2000, 7, kind).unwrap();
                assert!(rep.ok(), "{d:?} {kind:?}: {:?}", rep.violations);
            }
        }
    }
}
