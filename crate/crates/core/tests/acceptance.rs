//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails or overruns its time budget.

use geomatch::assembly::{coefficient_sum, predict_dpsi, psi_relation, GroupDescriptor, RamifiedLevelData};
use geomatch::chain::{norm_image_level, order_unit_index, OrderKind};
use geomatch::closed_form::{matching_combination, orbital, verify_matching, TestFunctionSpec};
use geomatch::error::GeomatchError;
use geomatch::geodesic::counting::{dpsi_enumerated, pgt_report, pi_from_rows, psi_from_rows, psi_weight, c_level};
use geomatch::grid::{coset_depth, field_points, split_points};
use geomatch::oracle::coverage::{coset_coverage_test, Decomposition};
use geomatch::oracle::index::{
    enumerate_norm_image, enumerate_order_unit_index, enumerate_quad_order_index, enumerate_split_index,
    unit_filtration_set,
};
use geomatch::oracle::orbital::Oracle;
use geomatch::oracle::radical::radical_intersection_test;
use geomatch::padic::{quad_order_unit_index, PAdicContext, RegularElement, TorusData, TorusKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

/// Tolerance for the numerical cross-checks.
const REL_TOL: f64 = 1e-9;
/// Ψ(x)/x window and envelope constant for `|Ψ - x| ≤ C·x^0.75`.
const PSI_RATIO: (f64, f64) = (0.8, 1.2);
const PSI_ENVELOPE: f64 = 5.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn qpow(q: u64, k: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(q).pow(k))
}

fn random_level_data(rng: &mut ChaCha8Rng) -> RamifiedLevelData {
    let pool = [2u64, 3, 5, 7, 11, 13, 17, 19];
    let count = if rng.gen_bool(0.5) { 2 } else { 4 };
    let mut ram: Vec<u64> = Vec::new();
    while ram.len() < count {
        let p = pool[rng.gen_range(0..pool.len())];
        if !ram.contains(&p) {
            ram.push(p);
        }
    }
    let mut exps = BTreeMap::new();
    for &p in &pool {
        if rng.gen_bool(0.4) {
            exps.insert(p, rng.gen_range(0..=4));
        }
    }
    RamifiedLevelData::new(ram, exps).expect("valid random ramification")
}

fn criterion_1() -> Outcome {
    let primes = geomatch::arith::first_primes(10);
    let mut bad = Vec::new();
    for &q in &primes {
        for n in 0..=8 {
            let c = matching_combination(q, n);
            if c.coeff_f + c.coeff_g != BigRational::one() {
                bad.push(format!("q={q} n={n}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let d = random_level_data(&mut rng);
        if coefficient_sum(&d) != BigRational::one() {
            bad.push(format!("{d:?}"));
        }
    }
    outcome(bad.is_empty(), format!("90 combinations, 20 random level data; failures {bad:?}"))
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for q in [2u64, 3, 5] {
        let ctx = PAdicContext::new(q, 20).unwrap();
        let torus = TorusData::split(ctx);
        for x in split_points(&ctx, 4, 4) {
            for n in 0..=6 {
                for flag in [false, true] {
                    let r = verify_matching(n, &torus, &x, flag).unwrap();
                    checked += 1;
                    if !r.lhs.is_zero() {
                        bad.push(format!("q={q} {x:?} n={n}"));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty() && checked > 0, format!("{checked} split instances vanish; failures {bad:?}"))
}

/// `(2/e)·q^(4k)·(1 - q^-2)·1[x ∈ U_E^(ek)]` for the even-level combination.
fn even_level_value(torus: &TorusData, x: &RegularElement, k: u32) -> BigRational {
    let q = torus.q();
    let e = torus.e();
    let RegularElement::Field { alpha, beta } = *x else { unreachable!() };
    if !torus.in_unit_filtration(alpha, beta, e * k).unwrap() {
        return BigRational::zero();
    }
    let two_over_e = BigRational::new(2.into(), (e as i64).into());
    two_over_e * qpow(q, 4 * k) * (BigRational::one() - BigRational::new(1.into(), BigInt::from(q * q)))
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    let mut proof_values = 0;
    let mut bad = Vec::new();
    for q in [2u64, 3] {
        let ctx = PAdicContext::new(q, 20).unwrap();
        for kind in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
            let torus = TorusData::standard_field(ctx, kind).unwrap();
            for x in field_points(&ctx, 4, 4) {
                for n in 0..=6 {
                    for flag in [false, true] {
                        let r = verify_matching(n, &torus, &x, flag).unwrap();
                        checked += 1;
                        if !r.equal {
                            bad.push(format!("q={q} {kind:?} {x:?} n={n} flag={flag}"));
                        }
                    }
                    if n % 2 == 0 && n > 0 {
                        let r = verify_matching(n, &torus, &x, false).unwrap();
                        proof_values += 1;
                        if r.lhs != even_level_value(&torus, &x, n / 2) {
                            bad.push(format!("even value q={q} {kind:?} {x:?} n={n}: {}", r.lhs));
                        }
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty() && checked > 0,
        format!("{checked} field instances, {proof_values} even-level values; failures {bad:?}"),
    )
}

const ORACLE_MAX_PRECISION: u32 = 5;
const COVERAGE_SAMPLES: u64 = 100_000;

fn criterion_4() -> Outcome {
    let mut oracle = Oracle::new();
    let mut agree = 0;
    let mut bad = Vec::new();
    for p in [2u64, 3] {
        let ctx = PAdicContext::new(p, 20).unwrap();
        let mut tori = vec![(TorusData::split(ctx), split_points(&ctx, 4, 3))];
        for kind in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
            tori.push((TorusData::standard_field(ctx, kind).unwrap(), field_points(&ctx, 4, 4)));
        }
        for (torus, points) in &tori {
            for x in points {
                let depth = coset_depth(&ctx, x).unwrap();
                for kind in [OrderKind::M, OrderKind::J, OrderKind::D] {
                    for n in 0..=3 {
                        let m = depth + n + 3;
                        if m > ORACLE_MAX_PRECISION {
                            continue;
                        }
                        for flag in [false, true] {
                            let spec = TestFunctionSpec::new(kind, n).with_norm_index(flag);
                            let closed = orbital(&spec, torus, x).unwrap().value;
                            match oracle.orbital(&spec, torus, x, m) {
                                Ok(v) if v.value == closed => agree += 1,
                                other => bad.push(format!("p={p} {:?} {x:?} {kind:?} n={n}: {other:?}", torus.kind)),
                            }
                        }
                    }
                }
            }
        }
    }

    let mut coverage = Vec::new();
    for (q, m) in [(2u64, 3u32), (3, 2)] {
        for d in [Decomposition::SplitM, Decomposition::SplitJ, Decomposition::NonsplitM, Decomposition::NonsplitJ] {
            let kinds: &[TorusKind] = match d {
                Decomposition::SplitM | Decomposition::SplitJ => &[TorusKind::UnramifiedField],
                _ => &[TorusKind::UnramifiedField, TorusKind::RamifiedField],
            };
            for &tk in kinds {
                let rep = coset_coverage_test(d, q, m, COVERAGE_SAMPLES, 0, tk).unwrap();
                coverage.push(rep.violation_count);
                if !rep.ok() {
                    bad.push(format!("coverage {} q={q} M={m} {tk:?}: {} violations", d.name(), rep.violation_count));
                }
            }
        }
    }

    let mut radical = 0;
    let mut branches = std::collections::BTreeSet::new();
    for p in [2u64, 3] {
        for tk in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
            let torus = TorusData::standard_field(PAdicContext::new(p, 20).unwrap(), tk).unwrap();
            for kind in [OrderKind::M, OrderKind::J] {
                for r in 0..=3 {
                    for n in 0..=3 {
                        match radical_intersection_test(kind, &torus, r, n) {
                            Ok(rep) => {
                                radical += 1;
                                branches.insert(format!("{:?}", rep.branch));
                                if !rep.ok() {
                                    bad.push(format!("radical {rep:?}"));
                                }
                            }
                            Err(GeomatchError::NoOptimalEmbedding(_)) if kind == OrderKind::J && r == 0 && torus.e() == 1 => {}
                            Err(e) => bad.push(format!("radical p={p} {tk:?} {kind:?} r={r} n={n}: {e}")),
                        }
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty() && agree > 0 && branches.len() == 4,
        format!(
            "{agree} oracle values agree at M <= {ORACLE_MAX_PRECISION}; {} coverage runs of {COVERAGE_SAMPLES}; \
             {radical} radical tests over {} branches; failures {bad:?}",
            coverage.len(),
            branches.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in [2u64, 3] {
        for kind in [OrderKind::M, OrderKind::J, OrderKind::D] {
            for n in 0..=4 {
                checked += 2;
                let e = enumerate_order_unit_index(kind, n, p).unwrap();
                if e != order_unit_index(kind, n, p) {
                    bad.push(format!("index {kind:?} n={n} p={p}: {e}"));
                }
                let (h, image) = enumerate_norm_image(kind, n, p).unwrap();
                if image != unit_filtration_set(p, norm_image_level(kind, n), h) {
                    bad.push(format!("norm image {kind:?} n={n} p={p}"));
                }
            }
        }
        for tk in [TorusKind::UnramifiedField, TorusKind::RamifiedField] {
            let t = TorusData::standard_field(PAdicContext::new(p, 12).unwrap(), tk).unwrap();
            for k in 0..=2 {
                for r in 1..=2 {
                    checked += 1;
                    if enumerate_quad_order_index(&t, k, r).unwrap() != quad_order_unit_index(k, r, t.e(), p) {
                        bad.push(format!("quadratic order p={p} {tk:?} k={k} r={r}"));
                    }
                }
            }
        }
        for r in 0..=4 {
            checked += 1;
            let phi = if r == 0 { 1 } else { (p as u128 - 1) * (p as u128).pow(r - 1) };
            if enumerate_split_index(p, r).unwrap() != phi {
                bad.push(format!("split index p={p} r={r}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} indices and images enumerated; failures {bad:?}"))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for n in [1u64, 2, 3] {
        let group = GroupDescriptor::principal(n).unwrap();
        for t in 3..=20i64 {
            for t in [t, -t] {
                let enumerated = dpsi_enumerated(n, t).unwrap();
                let predicted = predict_dpsi(&group, t, dpsi_enumerated(1, t).unwrap()).unwrap();
                checked += 1;
                let zero_e = enumerated == 0.0;
                let zero_p = predicted.abs() < 1e-12;
                if zero_e != zero_p {
                    bad.push(format!("N={n} t={t}: vanishing mismatch {enumerated} vs {predicted}"));
                    continue;
                }
                let err = rel_err(enumerated, predicted);
                worst = worst.max(err);
                if err > REL_TOL {
                    bad.push(format!("N={n} t={t}: {enumerated} vs {predicted}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} traces, worst relative error {worst:.3e}; failures {bad:?}"))
}

fn norm_of_trace(t: i64) -> f64 {
    let t = t.abs() as f64;
    ((t + (t * t - 4.0).sqrt()) / 2.0).powi(2)
}

fn criterion_7() -> Outcome {
    let grid = [1e3, 1e4];
    let (rows, table) = pgt_report(1, &grid).unwrap();
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for row in &table {
        let x = row.x;
        let ratio = row.psi / x;
        let envelope = PSI_ENVELOPE * x.powf(0.75);
        notes.push(format!("x={x}: psi/x={ratio:.5}, |psi-x|={:.2} vs {envelope:.2}", row.psi_minus_x.abs()));
        if !(PSI_RATIO.0..=PSI_RATIO.1).contains(&ratio) || row.psi_minus_x.abs() > envelope {
            bad.push(format!("envelope at x={x}"));
        }
        let own: f64 = c_level(1)
            * rows
                .iter()
                .filter(|r| norm_of_trace(r.t) <= x * (1.0 + 1e-12))
                .map(|r| psi_weight(r.t, r.dpsi))
                .sum::<f64>();
        if rel_err(own, row.psi) > 1e-12 || rel_err(psi_from_rows(1, &rows, x), row.psi) > 1e-12 {
            bad.push(format!("psi at x={x} is not its own dpsi sum: {own} vs {}", row.psi));
        }
        if pi_from_rows(1, &rows, x) != row.pi {
            bad.push(format!("pi column at x={x}"));
        }
    }
    let mut norms: Vec<f64> = rows
        .iter()
        .filter(|r| r.classes.iter().any(|c| c.level_power == 1 && c.splitting.count > 0))
        .map(|r| norm_of_trace(r.t))
        .collect();
    norms.sort_by(f64::total_cmp);
    norms.dedup();
    for w in norms.windows(2) {
        let (a, b) = (w[0], w[1]);
        let below = pi_from_rows(1, &rows, a * (1.0 - 1e-9));
        let at = pi_from_rows(1, &rows, a * (1.0 + 1e-9));
        let before_next = pi_from_rows(1, &rows, b * (1.0 - 1e-9));
        if at <= below || at != before_next {
            bad.push(format!("pi does not jump exactly at norm {a}"));
        }
    }
    outcome(bad.is_empty(), format!("{}; {} jump points; failures {bad:?}", notes.join("; "), norms.len()))
}

const RELATION_X: f64 = 5e3;

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    type Case<'a> = (&'a [u64], &'a [(u64, u32)], u64);
    let cases: [Case; 2] = [(&[2, 3], &[], 1), (&[2, 3], &[(2, 2)], 2)];
    for (ram, exps, level) in cases {
        let d = RamifiedLevelData::new(ram.to_vec(), exps.iter().copied().collect()).unwrap();
        let rep = psi_relation(&d, RELATION_X).unwrap();
        let sum: f64 = rep.terms.iter().map(|t| t.contribution).sum();
        if sum != rep.psi_d {
            bad.push(format!("{ram:?} {exps:?}: terms sum {sum} != total {}", rep.psi_d));
        }
        let coeffs = rep.terms.iter().fold(BigRational::zero(), |acc, t| acc + &t.coefficient);
        if coeffs != BigRational::one() || coefficient_sum(&d) != BigRational::one() {
            bad.push(format!("{ram:?} {exps:?}: coefficients sum to {coeffs}"));
        }
        let all_matrix = rep.terms.iter().find(|t| t.subset == ram).expect("all-matrix term");
        let direct = geomatch::geodesic::counting::psi_enumerated(level, RELATION_X).unwrap();
        if rel_err(all_matrix.psi, direct) > REL_TOL {
            bad.push(format!("{ram:?} {exps:?}: all-matrix term {} vs enumerated {direct}", all_matrix.psi));
        }
        if rep.scope.is_empty() || !rep.scope.contains("defined through the subset relation") {
            bad.push("scope label missing".into());
        }
        notes.push(format!("{ram:?} {exps:?}: psi_D/x = {:.4}", rep.psi_d / RELATION_X));
    }
    outcome(bad.is_empty(), format!("{}; failures {bad:?}", notes.join("; ")))
}

fn cli_bytes(args: &[&str], threads: &str, dir: &std::path::Path, tag: &str) -> (i32, Vec<u8>) {
    let out = dir.join(format!("{tag}-{threads}.out"));
    let mut argv: Vec<std::ffi::OsString> = vec!["geomatch".into()];
    argv.extend(args.iter().map(|a| a.into()));
    argv.extend(["--seed".into(), "7".into(), "--threads".into(), threads.into(), "--out".into(), out.clone().into()]);
    let code = geomatch::cli::main_with_args(argv);
    (code, std::fs::read(&out).unwrap_or_default())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let suites: [(&str, &[&str]); 5] = [
        ("report", &["report", "--samples", "2000"]),
        ("coverage", &["coverage", "--decomposition", "nonsplit-J", "--q", "2", "--precision", "3", "--samples", "20000"]),
        ("spectrum", &["--format", "csv", "spectrum", "--level", "2", "--x-max", "5000", "--points", "20"]),
        ("relation", &["relation", "--ramified", "2,3", "--exponents", "2=2", "--x-max", "2000"]),
        ("local", &["verify-local", "--prime", "2", "--n-max", "2", "--precision", "5"]),
    ];
    let mut bad = Vec::new();
    for (tag, args) in suites {
        let (c1, a) = cli_bytes(args, "1", dir.path(), tag);
        let (c2, b) = cli_bytes(args, "4", dir.path(), &format!("{tag}-again"));
        if c1 != 0 || c2 != 0 || a.is_empty() || a != b {
            bad.push(format!("{tag}: exit {c1}/{c2}, {} vs {} bytes, identical {}", a.len(), b.len(), a == b));
        }
    }
    outcome(bad.is_empty(), format!("5 commands rerun with 1 and 4 threads; failures {bad:?}"))
}

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        (1, "coefficient identity", Duration::from_secs(1), criterion_1),
        (2, "split vanishing", Duration::from_secs(5), criterion_2),
        (3, "field matching", Duration::from_secs(10), criterion_3),
        (4, "oracle agreement", Duration::from_secs(300), criterion_4),
        (5, "index formulas", Duration::from_secs(60), criterion_5),
        (6, "adelic factorization", Duration::from_secs(120), criterion_6),
        (7, "prime geodesic envelope", Duration::from_secs(120), criterion_7),
        (8, "global relation report", Duration::from_secs(120), criterion_8),
        (9, "determinism", Duration::from_secs(300), criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let ok = o.passed && elapsed <= budget;
        println!(
            "criterion {id} ({name}): {} in {:.2}s (budget {}s): {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
        if !ok {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
