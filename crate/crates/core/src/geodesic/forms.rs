//! Conjugacy classes of `SL_2(Z)` of a fixed hyperbolic trace, through
//! indefinite binary quadratic forms and their cycles of reduced forms.

use crate::arith::isqrt;
use crate::error::{GeomatchError, Result};
use num_integer::Integer;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};

/// `Ax² + Bxy + Cy²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QuadForm {
    pub a: i128,
    pub b: i128,
    pub c: i128,
}

impl QuadForm {
    pub fn new(a: i128, b: i128, c: i128) -> Self {
        Self { a, b, c }
    }

    pub fn disc(&self) -> i128 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn content(&self) -> i128 {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    /// `0 < B < √D` and `√D - B < 2|A| < √D + B`.
    pub fn is_reduced(&self) -> bool {
        let d = self.disc();
        let a2 = 2 * self.a.abs();
        self.b > 0
            && self.b * self.b < d
            && (a2 + self.b) * (a2 + self.b) > d
            && (a2 - self.b <= 0 || (a2 - self.b) * (a2 - self.b) < d)
    }

    /// The form `(C, r, (r² - D)/4C)` properly equivalent via
    /// `[[0, -1], [1, δ]]`, with `r ≡ -B mod 2C` normalised.
    pub fn rho(&self) -> Self {
        let d = self.disc();
        let c2 = 2 * self.c.abs();
        let r = if self.c * self.c < d {
            let r0 = isqrt(d as u128) as i128;
            r0 - (r0 + self.b).rem_euclid(c2)
        } else {
            let r = (-self.b).rem_euclid(c2);
            if r > self.c.abs() { r - c2 } else { r }
        };
        Self::new(self.c, r, (r * r - d) / (4 * self.c))
    }

    /// The fixed-point form `(c, d - a, -b)` of `[[a, b], [c, d]]`.
    pub fn of_matrix(g: &[i128; 4]) -> Self {
        Self::new(g[2], g[3] - g[0], -g[1])
    }
}

/// Primitive reduced forms of discriminant `d`.
pub fn reduced_forms(d: i128) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let s = isqrt(d as u128) as i128;
    for b in 1..=s {
        if (b - d).rem_euclid(2) != 0 {
            continue;
        }
        let ac = (b * b - d) / 4;
        let n = ac.abs();
        for a0 in (1..=n).filter(|x| n % x == 0) {
            for a in [a0, -a0] {
                let f = QuadForm::new(a, b, ac / a);
                if f.is_reduced() && f.content() == 1 {
                    out.push(f);
                }
            }
        }
    }
    out.sort();
    out
}

/// The `ρ`-cycles of primitive reduced forms of discriminant `d`; one per
/// proper equivalence class. Each cycle starts at its least form.
pub fn form_cycles(d: i128) -> Vec<Vec<QuadForm>> {
    let forms = reduced_forms(d);
    let mut seen = BTreeSet::new();
    let mut cycles = Vec::new();
    for f in forms {
        if seen.contains(&f) {
            continue;
        }
        let mut cycle = vec![f];
        let mut g = f.rho();
        while g != f {
            debug_assert!(g.is_reduced(), "{g:?} from {f:?}");
            cycle.push(g);
            g = g.rho();
        }
        seen.extend(cycle.iter().copied());
        cycles.push(cycle);
    }
    cycles
}

/// An `SL_2(Z)`-conjugacy class of trace `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadFormClass {
    pub t: i64,
    /// `m` with the form equal to `m` times a primitive form.
    pub content: i128,
    /// Least reduced form of the primitive cycle.
    pub primitive: QuadForm,
    /// `m · primitive`, of discriminant `t² - 4`.
    pub form: QuadForm,
    pub cycle_length: usize,
    /// `[[(t - mB)/2, -mC], [mA, (t + mB)/2]]`.
    pub gamma: [i128; 4],
}

pub fn check_hyperbolic(t: i64) -> Result<()> {
    if t.abs() <= 2 {
        Err(GeomatchError::NonHyperbolicTrace(t))
    } else {
        Ok(())
    }
}

pub fn sl2_classes(t: i64) -> Result<Vec<QuadFormClass>> {
    check_hyperbolic(t)?;
    let tt = t as i128;
    let delta = tt * tt - 4;
    let mut out = Vec::new();
    for m in (1..).take_while(|m| m * m <= delta) {
        if delta % (m * m) != 0 {
            continue;
        }
        let d = delta / (m * m);
        if d.rem_euclid(4) > 1 {
            continue;
        }
        for cycle in form_cycles(d) {
            let p = cycle[0];
            out.push(QuadFormClass {
                t,
                content: m,
                primitive: p,
                form: QuadForm::new(m * p.a, m * p.b, m * p.c),
                cycle_length: cycle.len(),
                gamma: [(tt - m * p.b) / 2, -m * p.c, m * p.a, (tt + m * p.b) / 2],
            });
        }
    }
    Ok(out)
}

/// Independent class count: all trace-`t` matrices with entries bounded by
/// `bound`, joined under conjugation by `S`, `T` and `T^{-1}` while the
/// result stays inside the box; the number of components.
pub fn classes_by_matrix_search(t: i64, bound: i128) -> Result<usize> {
    check_hyperbolic(t)?;
    let t = t as i128;
    let mut nodes: HashMap<[i128; 4], usize> = HashMap::new();
    let mut list = Vec::new();
    for a in -bound..=bound {
        let d = t - a;
        if d.abs() > bound {
            continue;
        }
        let bc = a * d - 1;
        for b in (1..=bound).flat_map(|b| [b, -b]) {
            if bc % b != 0 || (bc / b).abs() > bound {
                continue;
            }
            let g = [a, b, bc / b, d];
            nodes.insert(g, list.len());
            list.push(g);
        }
    }
    let mut parent: Vec<usize> = (0..list.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, &[a, b, c, d]) in list.iter().enumerate() {
        let moves = [
            [d, -c, -b, a],
            [a + c, b + d - a - c, c, d - c],
            [a - c, a - c + b - d, c, c + d],
        ];
        for h in moves {
            if let Some(&j) = nodes.get(&h) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let roots: BTreeSet<usize> = (0..list.len()).map(|i| find(&mut parent, i)).collect();
    Ok(roots.len())
}
