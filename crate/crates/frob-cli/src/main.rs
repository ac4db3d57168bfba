//! frob — build and verify Frobenius-manifold structures from meromorphic
//! superpotentials.
//!
//! Commands:
//!   frob validate  --config PATH | --example NAME
//!   frob report    --config PATH | --example NAME [--seed U64] [--tol F]
//!                  [--out PATH] [--format json|table] [--timing]
//!   frob sweep     --config PATH | --example NAME [--points N] [--seed U64]
//!                  [--tol F] [--out PATH] [--format json|table]
//!   frob examples
//!
//! Exit codes: 0 success, 2 input error, 3 inadmissible spec, 4 verdict
//! failure (the report is still written).

mod config;

use config::RunConfig;
use frob_core::corpus::{self, CorpusExample};
use frob_core::frobenius::{structure_constants, ChartedPoint};
use frob_core::meromorphic::{AdmissibilityClass, RawCoordinates, SuperpotentialSpec};
use frob_core::report::{point_report, FrobeniusReport, ReportOptions};
use frob_core::wdvv::{third_derivatives, VerdictReport};
use frob_core::C;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 2;
const EXIT_INADMISSIBLE: u8 = 3;
const EXIT_VERDICT: u8 = 4;

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Table,
}

struct Cli {
    command: String,
    config: Option<String>,
    example: Option<String>,
    seed: Option<u64>,
    tol: Option<f64>,
    points: usize,
    out: Option<String>,
    format: Format,
    compact: bool,
    timing: bool,
}

fn usage() -> String {
    "usage: frob <validate|report|sweep|examples> [--config PATH] [--example NAME] \
     [--seed U64] [--tol FLOAT] [--points INT] [--out PATH] [--format json|table] \
     [--compact] [--timing]"
        .to_string()
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut it = args.iter();
    let command = it.next().ok_or_else(usage)?.clone();
    let mut cli = Cli {
        command,
        config: None,
        example: None,
        seed: None,
        tol: None,
        points: 20,
        out: None,
        format: Format::Json,
        compact: false,
        timing: false,
    };
    while let Some(flag) = it.next() {
        let mut value = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("{name} needs a value"))
        };
        match flag.as_str() {
            "--config" => cli.config = Some(value("--config")?),
            "--example" => cli.example = Some(value("--example")?),
            "--seed" => {
                cli.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|e| format!("--seed: {e}"))?,
                )
            }
            "--tol" => {
                cli.tol = Some(
                    value("--tol")?
                        .parse()
                        .map_err(|e| format!("--tol: {e}"))?,
                )
            }
            "--points" => {
                cli.points = value("--points")?
                    .parse()
                    .map_err(|e| format!("--points: {e}"))?
            }
            "--out" => cli.out = Some(value("--out")?),
            "--format" => {
                cli.format = match value("--format")?.as_str() {
                    "json" => Format::Json,
                    "table" => Format::Table,
                    other => return Err(format!("unknown format {other}")),
                }
            }
            "--compact" => cli.compact = true,
            "--timing" => cli.timing = true,
            other => return Err(format!("unknown flag {other}\n{}", usage())),
        }
    }
    Ok(cli)
}

/// The family and point a command operates on.
struct Target {
    spec: SuperpotentialSpec,
    point: Option<RawCoordinates>,
    example: Option<CorpusExample>,
    seed: u64,
    tol: Option<f64>,
    points: usize,
}

fn resolve_target(cli: &Cli) -> Result<Target, String> {
    match (&cli.config, &cli.example) {
        (Some(_), Some(_)) => Err("give --config or --example, not both".into()),
        (None, None) => Err("a --config file or --example name is required".into()),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            let cfg = RunConfig::parse(&text)?;
            let spec = cfg.spec();
            let point = cfg.coordinates()?;
            Ok(Target {
                spec,
                point,
                example: None,
                seed: cli.seed.or(cfg.run.seed).unwrap_or(0x5eed),
                tol: cli.tol.or(cfg.run.tolerance),
                points: cfg.run.points.map_or(cli.points, |p| {
                    if cli.points != 20 {
                        cli.points
                    } else {
                        p
                    }
                }),
            })
        }
        (None, Some(name)) => {
            let ex = corpus::by_name(name)
                .ok_or_else(|| format!("unknown example {name}; run `frob examples`"))?;
            Ok(Target {
                spec: ex.spec.clone(),
                point: None,
                example: Some(ex),
                seed: cli.seed.unwrap_or(0x5eed),
                tol: cli.tol,
                points: cli.points,
            })
        }
    }
}

fn options(target: &Target) -> ReportOptions {
    let mut opts = ReportOptions {
        seed: target.seed,
        ..ReportOptions::default()
    };
    if let Some(tol) = target.tol {
        opts.tol_identity = tol;
        opts.tol_eta_blocks = tol;
        opts.tol_cross = tol;
        opts.tol_wdvv = tol;
        opts.tol_quasi = tol;
        opts.tol_unit = tol;
        opts.tol_nu_equivalence = tol;
    }
    opts
}

/// Pick the working point: explicit coordinates, the example base point,
/// or a seeded sample near it; resample up to 10 times on degeneracy.
fn charted_point(target: &Target, sample_index: Option<u64>) -> Result<ChartedPoint, String> {
    if let Some(point) = &target.point {
        return ChartedPoint::new(&target.spec, point, None).map_err(|e| e.to_string());
    }
    let ex = target
        .example
        .as_ref()
        .ok_or("no coordinates given and no example selected")?;
    match sample_index {
        None => {
            let raw = ex.base_raw().map_err(|e| e.to_string())?;
            ChartedPoint::new(&target.spec, &raw, None).map_err(|e| e.to_string())
        }
        Some(index) => {
            let mut last = String::new();
            for attempt in 0..10 {
                match ex
                    .sample_raw(target.seed ^ index, attempt)
                    .map_err(|e| e.to_string())
                    .and_then(|raw| {
                        ChartedPoint::new(&target.spec, &raw, None).map_err(|e| e.to_string())
                    }) {
                    Ok(cp) => return Ok(cp),
                    Err(e) => last = e,
                }
            }
            Err(format!("no generic point after 10 draws: {last}"))
        }
    }
}

/// Compare the pipeline tensor against the closed-form prepotential of a
/// built-in example.
fn oracle_verdict(ex: &CorpusExample, cp: &ChartedPoint, tol: f64) -> Result<VerdictReport, String> {
    let c_pipe = structure_constants(cp).map_err(|e| e.to_string())?;
    let t_oracle = ex.oracle_t(&cp.chart);
    let f = ex.closed_form_f;
    let d = third_derivatives::<std::convert::Infallible>(&t_oracle, 1e-2, |t| Ok(f(t)))
        .expect("closed-form differentiation");
    let a = ex.chart_matrix(&cp.chart);
    let dim = ex.dimension();
    let mut worst = 0.0f64;
    for ia in 0..dim {
        for ib in 0..dim {
            for ic in 0..dim {
                let mut oracle = C::new(0.0, 0.0);
                for i in 0..dim {
                    for j in 0..dim {
                        for k in 0..dim {
                            let w = a[i][ia] * a[j][ib] * a[k][ic];
                            if w != 0.0 {
                                oracle += C::new(w, 0.0) * d.tensor[i][j][k];
                            }
                        }
                    }
                }
                worst = worst.max((c_pipe[ia][ib][ic] - oracle).norm());
            }
        }
    }
    Ok(VerdictReport::new("example-oracle", worst, tol))
}

#[derive(Serialize)]
struct ValidateOutput {
    schema_version: u32,
    command: &'static str,
    spec: SuperpotentialSpec,
    class: AdmissibilityClass,
    dimension: usize,
    degree_at_infinity: i64,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct ReportOutput {
    schema_version: u32,
    command: &'static str,
    spec: SuperpotentialSpec,
    seed: u64,
    point: PointEcho,
    report: FrobeniusReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<VerdictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<u128>,
}

#[derive(Serialize)]
struct PointEcho {
    zeros: Vec<C>,
    poles: Vec<C>,
}

#[derive(Serialize)]
struct SweepPointOutput {
    index: usize,
    point: PointEcho,
    verdicts: Vec<VerdictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<VerdictReport>,
    all_pass: bool,
}

#[derive(Serialize)]
struct SweepOutput {
    schema_version: u32,
    command: &'static str,
    spec: SuperpotentialSpec,
    seed: u64,
    requested_points: usize,
    rejected_draws: usize,
    reports: Vec<SweepPointOutput>,
    aggregate_max_residuals: BTreeMap<String, f64>,
    all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<u128>,
}

#[derive(Serialize)]
struct ExamplesOutput {
    schema_version: u32,
    command: &'static str,
    examples: Vec<ExampleEntry>,
}

#[derive(Serialize)]
struct ExampleEntry {
    name: String,
    description: String,
    s: u8,
    zeros: usize,
    m0: i64,
    pole_multiplicities: Vec<i64>,
    dimension: usize,
    d: String,
    nonflat_unit: bool,
}

fn emit<T: Serialize>(cli: &Cli, value: &T, table: String) -> Result<(), String> {
    let body = if cli.format == Format::Table {
        table
    } else if cli.compact {
        serde_json::to_string(value).map_err(|e| e.to_string())?
    } else {
        serde_json::to_string_pretty(value).map_err(|e| e.to_string())?
    };
    match &cli.out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| format!("{path}: {e}"))?;
            writeln!(file, "{body}").map_err(|e| e.to_string())?;
        }
        None => println!("{body}"),
    }
    Ok(())
}

fn point_echo(x: &RawCoordinates) -> PointEcho {
    PointEcho {
        zeros: x.zeros.clone(),
        poles: x.poles.clone(),
    }
}

fn cmd_validate(cli: &Cli) -> Result<u8, String> {
    let target = resolve_target(cli)?;
    let report = target.spec.validate();
    let out = ValidateOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "validate",
        spec: target.spec.clone(),
        class: report.class,
        dimension: report.dimension,
        degree_at_infinity: report.degree_at_infinity,
        violations: report.violations.clone(),
    };
    let mut table = format!(
        "class: {:?}\ndimension: {}\ndeg_inf: {}\n",
        report.class, report.dimension, report.degree_at_infinity
    );
    for v in &report.violations {
        table.push_str(&format!("violation: {v}\n"));
    }
    emit(cli, &out, table)?;
    match report.class {
        AdmissibilityClass::Inadmissible => Ok(EXIT_INADMISSIBLE),
        AdmissibilityClass::AdmissibleNonflatUnit => {
            eprintln!("note: admissible family with a nonflat unit vector field");
            Ok(EXIT_OK)
        }
        AdmissibilityClass::AdmissibleFlatUnit => Ok(EXIT_OK),
    }
}

fn verdict_table(verdicts: &[VerdictReport]) -> String {
    let mut s = String::new();
    for v in verdicts {
        s.push_str(&format!(
            "{:<22} {:>12.3e}  (tol {:>8.0e})  {}\n",
            v.name,
            v.max_residual,
            v.tolerance,
            if v.pass { "pass" } else { "FAIL" }
        ));
    }
    s
}

fn cmd_report(cli: &Cli) -> Result<u8, String> {
    let start = std::time::Instant::now();
    let target = resolve_target(cli)?;
    let admissibility = target.spec.validate();
    if admissibility.class == AdmissibilityClass::Inadmissible {
        eprintln!("inadmissible spec: {}", admissibility.violations.join("; "));
        return Ok(EXIT_INADMISSIBLE);
    }
    let sample = cli.seed.map(|_| 0u64);
    let cp = charted_point(&target, sample)?;
    let opts = options(&target);
    let report = point_report(&cp, &opts).map_err(|e| e.to_string())?;
    let oracle = match &target.example {
        Some(ex) => Some(oracle_verdict(ex, &cp, target.tol.unwrap_or(1e-5))?),
        None => None,
    };
    let ok = report.all_pass() && oracle.as_ref().is_none_or(|o| o.pass);
    let mut table = format!(
        "labels: {}\n",
        report.labels.join(", ")
    );
    table.push_str(&format!("d = {}\nunit flat: {}\n", report.d, report.unit_flat));
    table.push_str(&verdict_table(&report.verdicts));
    if let Some(o) = &oracle {
        table.push_str(&verdict_table(std::slice::from_ref(o)));
    }
    for sweep in &report.operator_sweeps {
        table.push_str(&format!(
            "sweep {:<18} at {:<3} s={}  {:>12.3e}\n",
            sweep.identity, sweep.point, sweep.s, sweep.max_residual
        ));
    }
    let out = ReportOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "report",
        spec: target.spec.clone(),
        seed: target.seed,
        point: point_echo(&cp.chart.point),
        report,
        oracle,
        timing_ms: cli.timing.then(|| start.elapsed().as_millis()),
    };
    emit(cli, &out, table)?;
    Ok(if ok { EXIT_OK } else { EXIT_VERDICT })
}

fn cmd_sweep(cli: &Cli) -> Result<u8, String> {
    let start = std::time::Instant::now();
    let target = resolve_target(cli)?;
    if target.example.is_none() {
        // A sweep perturbs a family around a base point; for config input
        // the configured point is the base.
        if target.point.is_none() {
            return Err("sweep needs an --example or configured coordinates".into());
        }
    }
    if target.points == 0 {
        return Err("--points must be at least 1".into());
    }
    let admissibility = target.spec.validate();
    if admissibility.class == AdmissibilityClass::Inadmissible {
        eprintln!("inadmissible spec: {}", admissibility.violations.join("; "));
        return Ok(EXIT_INADMISSIBLE);
    }
    let opts = options(&target);
    let rejected = std::sync::atomic::AtomicUsize::new(0);

    // Bounded worker pool with deterministic assembly by index.
    let n = target.points;
    let workers = n.clamp(1, 4);
    let mut results: Vec<Option<Result<SweepPointOutput, String>>> = Vec::new();
    results.resize_with(n, || None);
    {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots = std::sync::Mutex::new(&mut results);
        let target_ref = &target;
        let opts_ref = &opts;
        let rejected_ref = &rejected;
        let next_ref = &next;
        let slots_ref = &slots;
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(move || loop {
                    let index = next_ref.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if index >= n {
                        break;
                    }
                    let result = sweep_point(target_ref, opts_ref, index, rejected_ref);
                    slots_ref.lock().unwrap()[index] = Some(result);
                });
            }
        });
    }
    let mut reports = Vec::with_capacity(n);
    for slot in results {
        reports.push(slot.expect("worker filled the slot")?);
    }

    let mut aggregate: BTreeMap<String, f64> = BTreeMap::new();
    let mut all_pass = true;
    for point in &reports {
        all_pass &= point.all_pass;
        for v in point
            .verdicts
            .iter()
            .chain(point.oracle.as_ref())
        {
            let slot = aggregate.entry(v.name.clone()).or_insert(0.0);
            *slot = slot.max(v.max_residual);
        }
    }
    let mut table = String::new();
    for point in &reports {
        table.push_str(&format!(
            "point {:>3}: {}\n",
            point.index,
            if point.all_pass { "pass" } else { "FAIL" }
        ));
    }
    table.push_str("aggregate max residuals:\n");
    for (name, v) in &aggregate {
        table.push_str(&format!("  {name:<22} {v:>12.3e}\n"));
    }
    let out = SweepOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "sweep",
        spec: target.spec.clone(),
        seed: target.seed,
        requested_points: n,
        rejected_draws: rejected.load(std::sync::atomic::Ordering::SeqCst),
        reports,
        aggregate_max_residuals: aggregate,
        all_pass,
        timing_ms: cli.timing.then(|| start.elapsed().as_millis()),
    };
    emit(cli, &out, table)?;
    Ok(if out.all_pass { EXIT_OK } else { EXIT_VERDICT })
}

fn sweep_point(
    target: &Target,
    opts: &ReportOptions,
    index: usize,
    rejected: &std::sync::atomic::AtomicUsize,
) -> Result<SweepPointOutput, String> {
    // Per-point deterministic sampling; degenerate draws count as
    // rejections and resample.
    let cp = match &target.example {
        Some(ex) => {
            let mut found = None;
            let mut last = String::new();
            for attempt in 0..10 {
                match ex
                    .sample_raw(target.seed ^ (index as u64 + 1), attempt)
                    .map_err(|e| e.to_string())
                    .and_then(|raw| {
                        ChartedPoint::new(&target.spec, &raw, None).map_err(|e| e.to_string())
                    }) {
                    Ok(cp) => {
                        found = Some(cp);
                        break;
                    }
                    Err(e) => {
                        rejected.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        last = e;
                    }
                }
            }
            found.ok_or_else(|| format!("point {index}: no generic draw: {last}"))?
        }
        None => {
            let base = target.point.as_ref().expect("configured point");
            let free = base.free(&target.spec);
            let mut found = None;
            let mut last = String::new();
            for attempt in 0..10 {
                use rand::Rng;
                use rand_chacha::rand_core::SeedableRng;
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
                    target.seed ^ ((index as u64 + 1) * 0x9e37 + attempt),
                );
                let scale = 0.05 + 0.03 * rng.gen::<f64>();
                let jiggled: Vec<C> = free
                    .iter()
                    .map(|z| z + frob_core::rota_baxter::uniform_disc(&mut rng) * C::new(scale, 0.0))
                    .collect();
                let raw = RawCoordinates::from_free(&target.spec, &jiggled);
                match ChartedPoint::new(&target.spec, &raw, None) {
                    Ok(cp) => {
                        found = Some(cp);
                        break;
                    }
                    Err(e) => {
                        rejected.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        last = e.to_string();
                    }
                }
            }
            found.ok_or_else(|| format!("point {index}: no generic draw: {last}"))?
        }
    };
    let report = point_report(&cp, opts).map_err(|e| e.to_string())?;
    let oracle = match &target.example {
        Some(ex) => Some(oracle_verdict(ex, &cp, target.tol.unwrap_or(1e-5))?),
        None => None,
    };
    let all_pass = report.all_pass() && oracle.as_ref().is_none_or(|o| o.pass);
    Ok(SweepPointOutput {
        index,
        point: point_echo(&cp.chart.point),
        verdicts: report.verdicts,
        oracle,
        all_pass,
    })
}

fn cmd_examples(cli: &Cli) -> Result<u8, String> {
    let examples: Vec<ExampleEntry> = corpus::all()
        .into_iter()
        .map(|ex| ExampleEntry {
            name: ex.name.to_string(),
            description: ex.description.to_string(),
            s: ex.spec.s,
            zeros: ex.spec.zeros,
            m0: ex.spec.m0,
            pole_multiplicities: ex.spec.pole_multiplicities.clone(),
            dimension: ex.dimension(),
            d: ex.d.to_string(),
            nonflat_unit: ex.nonflat_unit,
        })
        .collect();
    let mut table = format!(
        "{:<12} {:>3} {:>2} {:>3} {:>6} {:>5}  description\n",
        "name", "N", "s", "m0", "mults", "d"
    );
    for e in &examples {
        table.push_str(&format!(
            "{:<12} {:>3} {:>2} {:>3} {:>6} {:>5}  {}\n",
            e.name,
            e.dimension,
            e.s,
            e.m0,
            format!("{:?}", e.pole_multiplicities),
            e.d,
            e.description
        ));
    }
    let out = ExamplesOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "examples",
        examples,
    };
    emit(cli, &out, table)?;
    Ok(EXIT_OK)
}

fn run() -> u8 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INPUT;
        }
    };
    let outcome = match cli.command.as_str() {
        "validate" => cmd_validate(&cli),
        "report" => cmd_report(&cli),
        "sweep" => cmd_sweep(&cli),
        "examples" => cmd_examples(&cli),
        other => Err(format!("unknown command {other}\n{}", usage())),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            EXIT_INPUT
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run())
}
