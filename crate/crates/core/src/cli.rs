//! Command-line front end: argument and config-file parsing, dispatch to the
//! library, report output and exit codes.
//!
//! Exit codes: 0 success, 1 identity violation, 2 precision exhausted,
//! 3 enumeration too large, 64 usage.

use crate::assembly::{coefficient_sum, dpsi_relation, predict_dpsi, psi_relation, GroupDescriptor, RamifiedLevelData};
use crate::chain::OrderKind;
use crate::closed_form::{matching_combination, orbital, verify_matching, TestFunctionSpec};
use crate::error::GeomatchError;
use crate::geodesic::counting::{dpsi_enumerated, pgt_report, trace_classes};
use crate::grid::{coset_depth, field_points, split_points};
use crate::oracle::coverage::{coset_coverage_test, Decomposition};
use crate::oracle::orbital::Oracle;
use crate::padic::{PAdicContext, TorusData, TorusKind};
use crate::report::{fmt_sig, rational_string, Envelope};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_PRECISION: i32 = 2;
pub const EXIT_SIZE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "geomatch", version, about = "Orbital integrals, chain-order matching and prime geodesic counts")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (GEOMATCH_THREADS takes precedence).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key=value` file; its entries act as flags placed before the
    /// command-line ones.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Closed forms against the brute-force oracle at one prime.
    VerifyLocal(VerifyLocalArgs),
    /// The matching identity on the valuation grid.
    VerifyMatching(VerifyMatchingArgs),
    /// Sampling test of a double-coset decomposition.
    Coverage(CoverageArgs),
    /// Conjugacy classes of a trace and their splitting at a level.
    Classes(ClassesArgs),
    /// dΨ, Ψ and π for a principal congruence subgroup.
    Spectrum(SpectrumArgs),
    /// The subset relation for a quaternion congruence group.
    Relation(RelationArgs),
    /// A compact self-check of every component.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyLocalArgs {
    #[arg(long)]
    pub prime: u64,
    #[arg(long, default_value_t = 3)]
    pub n_max: u32,
    #[arg(long, default_value_t = 5)]
    pub precision: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyMatchingArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    pub primes: Vec<u64>,
    #[arg(long, default_value_t = 6)]
    pub n_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Unramified,
    Ramified,
}

impl FieldKind {
    fn torus(self) -> TorusKind {
        match self {
            Self::Unramified => TorusKind::UnramifiedField,
            Self::Ramified => TorusKind::RamifiedField,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    /// split-M, split-J, nonsplit-M or nonsplit-J.
    #[arg(long)]
    pub decomposition: String,
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub precision: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "unramified")]
    pub torus: FieldKind,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassesArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub trace: i64,
    #[arg(long, default_value_t = 1)]
    pub level: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Pgt,
    Traces,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 1)]
    pub level: u64,
    #[arg(long)]
    pub x_max: f64,
    /// Grid points `x_max·k/points`, `k = 1..points`.
    #[arg(long, default_value_t = 100)]
    pub points: u32,
    /// Table written in CSV mode.
    #[arg(long, value_enum, default_value = "pgt")]
    pub table: Table,
}

#[derive(Debug, Args, Serialize)]
pub struct RelationArgs {
    /// Ramified primes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ramified: Vec<u64>,
    /// Level exponents `p=n`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exponents: Vec<String>,
    #[arg(long)]
    pub x_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Ψ evaluation point.
    #[arg(long, default_value_t = 1000.0)]
    pub x: f64,
    /// Samples per coverage run.
    #[arg(long, default_value_t = 2000)]
    pub samples: u64,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(GeomatchError),
    Io(std::io::Error),
}

impl From<GeomatchError> for Failure {
    fn from(e: GeomatchError) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

pub fn exit_code(e: &GeomatchError) -> i32 {
    match e {
        GeomatchError::PrecisionExhausted { .. } => EXIT_PRECISION,
        GeomatchError::EnumerationTooLarge { .. } => EXIT_SIZE,
        GeomatchError::NonHyperbolicTrace(_)
        | GeomatchError::LevelTooLarge(_)
        | GeomatchError::InvalidRamification(_)
        | GeomatchError::NotPrime(_)
        | GeomatchError::InvalidInput(_)
        | GeomatchError::SquareDiscriminant(_) => EXIT_USAGE,
        GeomatchError::RegularityViolated(_) | GeomatchError::NoOptimalEmbedding(_) => EXIT_VIOLATION,
    }
}

/// Splices config-file entries in as `--key=value` right after the
/// command name, so explicit flags given later override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", n + 1))?;
        extra.push(OsString::from(format!("--{}={}", k.trim().replace('_', "-"), v.trim())));
    }
    let at = strs.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 2).unwrap_or(args.len());
    let mut out = args;
    let tail = out.split_off(at.min(out.len()));
    out.extend(extra);
    out.extend(tail);
    Ok(out)
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let threads = std::env::var("GEOMATCH_THREADS").ok().and_then(|s| s.parse().ok()).or(cli.threads);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_VIOLATION
        }
    }
}

fn config_echo(cli: &Cli) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(&cli.command) {
        for (k, v) in map {
            let s = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.insert(k, s);
        }
    }
    let format = match cli.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    out.insert("format".into(), format.into());
    out
}

fn write_out(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Writes `result` as JSON, or the given table as CSV.
fn emit<T: Serialize>(cli: &Cli, name: &str, result: T, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), Failure> {
    let env = Envelope::new(name, cli.seed, config_echo(cli), result);
    let text = match cli.format {
        Format::Json => env.to_json()?,
        Format::Csv => env.to_csv(header, &rows)?,
    };
    write_out(cli, &text)
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::VerifyLocal(a) => verify_local(cli, a),
        Command::VerifyMatching(a) => verify_matching_cmd(cli, a),
        Command::Coverage(a) => coverage(cli, a),
        Command::Classes(a) => classes(cli, a),
        Command::Spectrum(a) => spectrum_cmd(cli, a),
        Command::Relation(a) => relation(cli, a),
        Command::Report(a) => report(cli, a),
    }
}

fn tori(ctx: PAdicContext) -> Result<Vec<TorusData>, Failure> {
    Ok(vec![
        TorusData::split(ctx),
        TorusData::standard_field(ctx, TorusKind::UnramifiedField)?,
        TorusData::standard_field(ctx, TorusKind::RamifiedField)?,
    ])
}

fn points(torus: &TorusData) -> Vec<crate::padic::RegularElement> {
    if torus.is_field() {
        field_points(&torus.ctx, 4, 4)
    } else {
        split_points(&torus.ctx, 4, 3)
    }
}

#[derive(Debug, Serialize)]
struct LocalCheck {
    torus: TorusKind,
    x: String,
    kind: OrderKind,
    n: u32,
    norm_index: bool,
    closed_form: String,
    oracle: String,
    equal: bool,
}

#[derive(Debug, Serialize)]
struct LocalSummary {
    prime: u64,
    n_max: u32,
    precision: u32,
    checked: usize,
    skipped_for_precision: usize,
    failures: Vec<LocalCheck>,
}

fn verify_local(cli: &Cli, a: &VerifyLocalArgs) -> Result<i32, Failure> {
    if ![2, 3, 5].contains(&a.prime) || a.n_max > 6 {
        return Err(Failure::Usage("verify-local needs prime in {2,3,5} and n-max <= 6".into()));
    }
    let ctx = PAdicContext::new(a.prime, 20)?;
    let guard = ctx.guard();
    let mut oracle = Oracle::new();
    let mut checks = Vec::new();
    let mut skipped = 0;
    for torus in tori(ctx)? {
        for x in points(&torus) {
            let depth = coset_depth(&ctx, &x)?;
            for kind in [OrderKind::M, OrderKind::J, OrderKind::D] {
                for n in 0..=a.n_max {
                    if depth + n + guard >= a.precision {
                        skipped += 2;
                        continue;
                    }
                    for flag in [false, true] {
                        let spec = TestFunctionSpec::new(kind, n).with_norm_index(flag);
                        let closed = orbital(&spec, &torus, &x)?.value;
                        let brute = oracle.orbital(&spec, &torus, &x, a.precision)?.value;
                        checks.push(LocalCheck {
                            torus: torus.kind,
                            x: format!("{x:?}"),
                            kind,
                            n,
                            norm_index: flag,
                            equal: closed == brute,
                            closed_form: rational_string(&closed),
                            oracle: rational_string(&brute),
                        });
                    }
                }
            }
        }
    }
    if checks.is_empty() {
        return Err(GeomatchError::PrecisionExhausted { p: a.prime, precision: a.precision, guard }.into());
    }
    let ok = checks.iter().all(|c| c.equal);
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                format!("{:?}", c.torus),
                c.x.clone(),
                c.kind.name().into(),
                c.n.to_string(),
                c.norm_index.to_string(),
                c.closed_form.clone(),
                c.oracle.clone(),
                c.equal.to_string(),
            ]
        })
        .collect();
    let summary = LocalSummary {
        prime: a.prime,
        n_max: a.n_max,
        precision: a.precision,
        checked: checks.len(),
        skipped_for_precision: skipped,
        failures: checks.into_iter().filter(|c| !c.equal).collect(),
    };
    emit(cli, "verify-local", summary, &["torus", "x", "kind", "n", "norm_index", "closed_form", "oracle", "equal"], rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(Debug, Serialize)]
struct MatchingSummary {
    primes: Vec<u64>,
    n_max: u32,
    checked: usize,
    coefficient_sums_one: bool,
    failures: Vec<Vec<String>>,
}

fn verify_matching_cmd(cli: &Cli, a: &VerifyMatchingArgs) -> Result<i32, Failure> {
    if a.primes.is_empty() || a.n_max > 8 {
        return Err(Failure::Usage("verify-matching needs primes and n-max <= 8".into()));
    }
    let mut rows = Vec::new();
    let mut sums_one = true;
    for &q in &a.primes {
        if !crate::arith::is_prime(q) {
            return Err(GeomatchError::NotPrime(q).into());
        }
        let ctx = PAdicContext::new(q, 24.min(PAdicContext::max_precision(q)))?;
        for n in 0..=a.n_max {
            let c = matching_combination(q, n);
            sums_one &= c.coeff_f.clone() + c.coeff_g.clone() == num_rational::BigRational::from_integer(1.into());
        }
        for torus in tori(ctx)? {
            for x in points(&torus) {
                for n in 0..=a.n_max {
                    for flag in [false, true] {
                        let r = verify_matching(n, &torus, &x, flag)?;
                        rows.push(vec![
                            q.to_string(),
                            format!("{:?}", torus.kind),
                            format!("{x:?}"),
                            n.to_string(),
                            flag.to_string(),
                            rational_string(&r.lhs),
                            rational_string(&r.rhs),
                            r.equal.to_string(),
                        ]);
                    }
                }
            }
        }
    }
    let failures: Vec<Vec<String>> = rows.iter().filter(|r| r[7] != "true").cloned().collect();
    let ok = failures.is_empty() && sums_one;
    let summary = MatchingSummary { primes: a.primes.clone(), n_max: a.n_max, checked: rows.len(), coefficient_sums_one: sums_one, failures };
    emit(cli, "verify-matching", summary, &["q", "torus", "x", "n", "norm_index", "combination", "division", "equal"], rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn coverage(cli: &Cli, a: &CoverageArgs) -> Result<i32, Failure> {
    let d = Decomposition::parse(&a.decomposition)?;
    if !crate::arith::is_prime(a.q) || a.precision == 0 {
        return Err(Failure::Usage("coverage needs a prime q and precision >= 1".into()));
    }
    let rep = coset_coverage_test(d, a.q, a.precision, a.samples, cli.seed, a.torus.torus())?;
    let ok = rep.ok();
    let rows = rep.histogram.iter().map(|(r, c)| vec![r.to_string(), c.to_string()]).collect();
    emit(cli, "coverage", rep, &["r", "samples"], rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn classes(cli: &Cli, a: &ClassesArgs) -> Result<i32, Failure> {
    let tc = trace_classes(a.level, a.trace)?;
    let rows = tc
        .classes
        .iter()
        .map(|c| {
            let f = c.class.form;
            vec![
                tc.t.to_string(),
                c.class.content.to_string(),
                format!("({},{},{})", f.a, f.b, f.c),
                format!("{:?}", c.class.gamma),
                format!("({},{})", c.centralizer.unit.u, c.centralizer.unit.v),
                c.centralizer.power.to_string(),
                c.splitting.count.to_string(),
                c.splitting.primitive_index.to_string(),
                c.level_power.to_string(),
                fmt_sig(c.log_x0),
            ]
        })
        .collect();
    emit(
        cli,
        "classes",
        &tc,
        &["t", "content", "form", "gamma", "unit", "power", "count", "primitive_index", "level_power", "log_x0"],
        rows,
    )?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct TraceRow {
    t: i64,
    class_count_sl2: usize,
    classes_in_level: u64,
    dpsi: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumResult {
    level: u64,
    c_gamma: f64,
    traces: Vec<TraceRow>,
    table: Vec<crate::geodesic::counting::PgtRow>,
}

fn spectrum_cmd(cli: &Cli, a: &SpectrumArgs) -> Result<i32, Failure> {
    if a.level == 0 || a.level > crate::geodesic::congruence::MAX_LEVEL {
        return Err(GeomatchError::LevelTooLarge(a.level).into());
    }
    if a.x_max.is_nan() || a.x_max < 10.0 || a.points == 0 {
        return Err(Failure::Usage("spectrum needs x-max >= 10 and points >= 1".into()));
    }
    let grid: Vec<f64> = (1..=a.points).map(|k| a.x_max * k as f64 / a.points as f64).collect();
    let (rows, table) = pgt_report(a.level, &grid)?;
    let traces: Vec<TraceRow> = rows
        .iter()
        .map(|r| TraceRow { t: r.t, class_count_sl2: r.class_count_sl2(), classes_in_level: r.classes_in_level(), dpsi: r.dpsi })
        .collect();
    let (header, csv_rows): (Vec<&str>, Vec<Vec<String>>) = match a.table {
        Table::Pgt => (
            vec!["x", "psi", "psi_minus_x", "x_pow_7_10", "pi", "li_x", "pi_minus_li"],
            table
                .iter()
                .map(|r| {
                    vec![
                        fmt_sig(r.x),
                        fmt_sig(r.psi),
                        fmt_sig(r.psi_minus_x),
                        fmt_sig(r.x_pow_7_10),
                        r.pi.to_string(),
                        fmt_sig(r.li_x),
                        fmt_sig(r.pi_minus_li),
                    ]
                })
                .collect(),
        ),
        Table::Traces => (
            vec!["t", "class_count_sl2", "classes_in_level", "dpsi"],
            traces
                .iter()
                .map(|r| vec![r.t.to_string(), r.class_count_sl2.to_string(), r.classes_in_level.to_string(), fmt_sig(r.dpsi)])
                .collect(),
        ),
    };
    let result = SpectrumResult { level: a.level, c_gamma: crate::geodesic::counting::c_level(a.level), traces, table };
    emit(cli, "spectrum", result, &header, csv_rows)?;
    Ok(EXIT_OK)
}

fn parse_exponents(items: &[String]) -> Result<BTreeMap<u64, u32>, Failure> {
    let mut out = BTreeMap::new();
    for it in items.iter().filter(|s| !s.is_empty()) {
        let (p, n) = it
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("exponent {it} is not p=n")))?;
        let p: u64 = p.trim().parse().map_err(|_| Failure::Usage(format!("bad prime in {it}")))?;
        let n: u32 = n.trim().parse().map_err(|_| Failure::Usage(format!("bad exponent in {it}")))?;
        out.insert(p, n);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct RelationResult {
    ramification: RamifiedLevelData,
    coefficient_sum: String,
    report: crate::assembly::PsiRelationReport,
    terms_sum_to_total: bool,
}

fn relation(cli: &Cli, a: &RelationArgs) -> Result<i32, Failure> {
    let d = RamifiedLevelData::new(a.ramified.clone(), parse_exponents(&a.exponents)?)?;
    if a.x_max.is_nan() || a.x_max < 10.0 {
        return Err(Failure::Usage("relation needs x-max >= 10".into()));
    }
    let rep = psi_relation(&d, a.x_max)?;
    let sum: f64 = rep.terms.iter().map(|t| t.contribution).sum();
    let exact = sum == rep.psi_d;
    let coeff = coefficient_sum(&d);
    let ok = exact && coeff == num_rational::BigRational::from_integer(1.into());
    let rows = rep
        .terms
        .iter()
        .map(|t| {
            vec![
                format!("{:?}", t.subset),
                rational_string(&t.coefficient),
                fmt_sig(t.psi),
                format!("{:?}", t.mode).to_lowercase(),
                fmt_sig(t.contribution),
            ]
        })
        .collect();
    let result = RelationResult { ramification: d, coefficient_sum: rational_string(&coeff), report: rep, terms_sum_to_total: exact };
    emit(cli, "relation", result, &["subset", "coefficient", "psi", "mode", "contribution"], rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

fn report(cli: &Cli, a: &ReportArgs) -> Result<i32, Failure> {
    let mut checks = Vec::new();

    let mut sums = true;
    for q in crate::arith::first_primes(5) {
        for n in 0..=6 {
            let c = matching_combination(q, n);
            sums &= c.coeff_f + c.coeff_g == num_rational::BigRational::from_integer(1.into());
        }
    }
    checks.push(check("coefficients", sums, "a + b = 1 for n <= 6, first 5 primes".into()));

    let mut matched = 0;
    let mut unequal = 0;
    for q in [2u64, 3] {
        let ctx = PAdicContext::new(q, 20)?;
        for torus in tori(ctx)? {
            for x in points(&torus).into_iter().take(4) {
                for n in 0..=4 {
                    let r = verify_matching(n, &torus, &x, false)?;
                    matched += 1;
                    unequal += !r.equal as usize;
                }
            }
        }
    }
    checks.push(check("matching", unequal == 0, format!("{matched} points, {unequal} unequal")));

    let mut oracle = Oracle::new();
    let ctx = PAdicContext::new(2, 20)?;
    let mut agree = 0;
    let mut disagree = 0;
    for torus in tori(ctx)? {
        for x in points(&torus).into_iter().take(3) {
            let depth = coset_depth(&ctx, &x)?;
            for kind in [OrderKind::M, OrderKind::J, OrderKind::D] {
                for n in 0..=2 {
                    let m = depth + n + ctx.guard() + 1;
                    if m > 6 {
                        continue;
                    }
                    let spec = TestFunctionSpec::new(kind, n);
                    let c = orbital(&spec, &torus, &x)?.value;
                    let o = oracle.orbital(&spec, &torus, &x, m)?.value;
                    if c == o {
                        agree += 1;
                    } else {
                        disagree += 1;
                    }
                }
            }
        }
    }
    checks.push(check("oracle", disagree == 0 && agree > 0, format!("{agree} agree, {disagree} disagree at p = 2")));

    let mut cov = Vec::new();
    for d in [Decomposition::SplitM, Decomposition::SplitJ, Decomposition::NonsplitM, Decomposition::NonsplitJ] {
        let rep = coset_coverage_test(d, 2, 3, a.samples, cli.seed, TorusKind::UnramifiedField)?;
        cov.push((d.name(), rep.ok(), rep.violation_count));
    }
    checks.push(check(
        "coverage",
        cov.iter().all(|c| c.1),
        cov.iter().map(|c| format!("{}: {} violations", c.0, c.2)).collect::<Vec<_>>().join("; "),
    ));

    let mut worst: f64 = 0.0;
    for n in [2u64, 3] {
        let g = GroupDescriptor::principal(n)?;
        for t in 3..=12i64 {
            for s in [t, -t] {
                let e = dpsi_enumerated(n, s)?;
                let p = predict_dpsi(&g, s, dpsi_enumerated(1, s)?)?;
                let rel = if e == 0.0 { p.abs() } else { ((e - p) / e).abs() };
                worst = worst.max(rel);
            }
        }
    }
    checks.push(check("global", worst < 1e-9, format!("max relative error {}", fmt_sig(worst))));

    let d = RamifiedLevelData::new(vec![2, 3], BTreeMap::new())?;
    let rel = dpsi_relation(&d, 5, dpsi_enumerated(1, 5)?)?;
    let gap = (rel.lhs - rel.rhs).abs() / rel.lhs.abs().max(1e-300);
    checks.push(check("relation", gap < 1e-9, format!("t = 5, ramified {{2,3}}: relative gap {}", fmt_sig(gap))));

    let (_, table) = pgt_report(1, &[a.x])?;
    let ratio = table[0].psi / a.x;
    checks.push(check("psi", (0.7..=1.3).contains(&ratio), format!("psi(x)/x = {} at x = {}", fmt_sig(ratio), fmt_sig(a.x))));

    let ok = checks.iter().all(|c| c.passed);
    let rows = checks.iter().map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]).collect();
    emit(cli, "report", &checks, &["check", "passed", "detail"], rows)?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}
