//! Command dispatch.

use std::fmt::Write as _;

use finsler_core::geodesics::DEFAULT_TOL;
use finsler_core::verify::{
    berwald_scalar_check, fan, identity_suite, key_formula_residual, landsberg_equivalence_check,
    second_variation_check, soliton_residual, theorem_1_1_check, theorem_7_checks,
};
use finsler_core::{
    evaluate_all, integrate_geodesic, sample_along, sample_set, BoundReport, Field, FinslerError,
    MeasureSpec, MetricSpec, PointTangent, ResidualReport, Sample, SigmaMode, Verdict,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{BoundCheck, Command, RunConfig};
use crate::output::{emit_plotdata, to_json, Artifacts, Table};

/// Residual bound for the key formula at each sample.
pub const KEY_FORMULA_TOL: f64 = 1e-4;
/// Default soliton residual tolerance.
pub const SOLITON_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    HypothesisNotMet(String),
    Error(String),
}

impl Status {
    fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::HypothesisNotMet(_) => "HYPOTHESIS NOT MET",
            Status::Error(_) => "ERROR",
        }
    }

    fn of(v: Verdict) -> Self {
        if v.passed() {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    /// One-line human summary.
    pub detail: String,
}

/// Everything a run produced. Nothing touches the disk until
/// [`RunOutcome::write`].
#[derive(Debug)]
pub struct RunOutcome {
    pub checks: Vec<CheckOutcome>,
    pub artifacts: Artifacts,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn write(&self, cfg: &RunConfig) -> std::io::Result<()> {
        self.artifacts.write(&cfg.out)
    }
}

fn status_of_error(e: &FinslerError) -> Status {
    match e {
        FinslerError::HypothesisNotMet(_)
        | FinslerError::NotBerwald
        | FinslerError::NotLandsberg { .. }
        | FinslerError::PathNotMinimal { .. } => Status::HypothesisNotMet(e.to_string()),
        _ => Status::Error(e.to_string()),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    checks: Vec<CheckOutcome>,
    results: Map<String, Value>,
    artifacts: Artifacts,
}

impl Ctx<'_> {
    fn metric(&self) -> &MetricSpec {
        &self.cfg.metric
    }

    fn push(&mut self, name: &str, status: Status, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            status,
            detail,
        });
    }

    fn push_err(&mut self, name: &str, e: &FinslerError) {
        let status = status_of_error(e);
        self.results
            .insert(name.to_string(), json!({ "error": e.to_string() }));
        self.push(name, status, e.to_string());
    }

    fn result(&mut self, name: &str, v: Value) {
        self.results.insert(name.to_string(), v);
    }

    fn n(&self) -> usize {
        self.metric().dim()
    }

    fn point(&self) -> Vec<f64> {
        self.cfg.params.point.clone().unwrap_or_else(|| vec![0.0; self.n()])
    }

    fn pole(&self) -> Vec<f64> {
        self.cfg.params.pole.clone().unwrap_or_else(|| vec![0.0; self.n()])
    }

    fn direction(&self) -> Vec<f64> {
        self.cfg.params.direction.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.n()];
            e[0] = 1.0;
            e
        })
    }

    fn samples(&self) -> Vec<Sample> {
        let p = &self.cfg.params;
        sample_set(self.metric(), p.samples, p.directions, p.frac, self.cfg.seed)
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize infallibly")
}

fn axis_columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn sample_columns(n: usize) -> Vec<String> {
    let mut c = vec!["group".to_string()];
    for p in ["x", "y", "v", "w"] {
        c.extend(axis_columns(p, n));
    }
    c
}

fn sample_row(s: &Sample) -> Vec<f64> {
    let mut r = vec![s.group as f64];
    for v in [&s.at.x, &s.at.y, &s.v, &s.w] {
        r.extend_from_slice(v);
    }
    r
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn residual_line(r: &ResidualReport) -> String {
    format!(
        "max residual {:.3e}, mean {:.3e} (tolerance {:.1e}, {} samples)",
        r.max_residual, r.mean_residual, r.tolerance, r.samples
    )
}

fn tensors(cx: &mut Ctx) {
    let at = PointTangent::new(cx.point(), cx.direction());
    match evaluate_all(cx.metric(), &at) {
        Ok(fr) => {
            let spectrum = finsler_core::curvature::flag_spectrum(&fr.curvature, &fr.tensor.g);
            let c_max = max_abs(fr.tensor.cartan.iter().flatten().flatten());
            let l_max = max_abs(fr.curvature.landsberg.iter().flatten().flatten());
            let detail = format!(
                "F {:.6e}, flag curvatures [{}], Ric {:.6e}, scalar R {:.6e}, max|C| {:.3e}, max|L| {:.3e}, tau {:.6e}, S {:.6e}",
                fr.tensor.f,
                spectrum.iter().map(|k| format!("{k:.6e}")).collect::<Vec<_>>().join(", "),
                fr.curvature.ric,
                fr.curvature.scalar,
                c_max,
                l_max,
                fr.measure.tau,
                fr.measure.s,
            );
            let mut v = to_value(&fr);
            v["flag_spectrum"] = to_value(&spectrum);
            cx.result("tensors", v);
            cx.push("tensors", Status::Pass, detail);
        }
        Err(e) => {
            cx.push_err("tensors", &e);
            return;
        }
    }

    let samples = cx.samples();
    let n = cx.n();
    let metric = cx.metric().clone();
    let rows: Result<Vec<Vec<f64>>, (usize, FinslerError)> = samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let fr = evaluate_all(&metric, &s.at).map_err(|e| (k, e))?;
            let mut r = vec![s.group as f64];
            r.extend_from_slice(&s.at.x);
            r.extend_from_slice(&s.at.y);
            r.extend([
                fr.tensor.f,
                fr.curvature.ric,
                fr.curvature.scalar,
                fr.measure.tau,
                fr.measure.s,
                fr.measure.sdot,
                fr.measure.ric_inf,
                max_abs(fr.tensor.cartan.iter().flatten().flatten()),
                max_abs(fr.curvature.landsberg.iter().flatten().flatten()),
            ]);
            Ok(r)
        })
        .collect();
    match rows {
        Ok(rows) => {
            let mut cols = vec!["group".to_string()];
            cols.extend(axis_columns("x", n));
            cols.extend(axis_columns("y", n));
            cols.extend(
                ["F", "Ric", "scalarR", "tau", "S", "Sdot", "Ric_inf", "max_abs_C", "max_abs_L"]
                    .map(String::from),
            );
            let table = Table { columns: cols, rows };
            cx.artifacts.add("samples/tensors.csv", table.to_csv());
        }
        Err((k, e)) => {
            let at = &samples[k].at;
            let msg = format!("at x = {:?}, y = {:?}: {e}", at.x, at.y);
            cx.push("tensor-samples", status_of_error(&e), msg);
        }
    }
}

fn geodesic(cx: &mut Ctx) {
    let p = &cx.cfg.params;
    let t_max = p.t_max.unwrap_or(2.0);
    let tol = p.tolerance.unwrap_or(DEFAULT_TOL);
    let fields: Vec<Field> = p.fields.iter().filter_map(|f| Field::parse(f)).collect();
    let at = PointTangent::new(cx.point(), cx.direction());
    let run = integrate_geodesic(cx.metric(), &at, t_max, tol)
        .and_then(|path| Ok((sample_along(cx.metric(), &path, &fields)?, path)));
    match run {
        Ok((table, path)) => {
            let detail = format!(
                "{} samples to t = {:.4}, max unit-speed drift {:.3e}{}",
                path.len(),
                path.t.last().copied().unwrap_or(0.0),
                path.max_drift,
                path.left_chart
                    .map(|t| format!(", left the chart at t = {t:.4}"))
                    .unwrap_or_default()
            );
            cx.result(
                "geodesic",
                json!({
                    "start": at,
                    "t_max": t_max,
                    "tolerance": tol,
                    "samples": path.len(),
                    "left_chart": path.left_chart,
                    "max_drift": path.max_drift,
                    "endpoint": path.x.last(),
                }),
            );
            let t = Table {
                columns: table.columns,
                rows: table.rows,
            };
            cx.artifacts.add("samples/geodesic.csv", t.to_csv());
            cx.push("geodesic", Status::Pass, detail);
        }
        Err(e) => cx.push_err("geodesic", &e),
    }
}

fn soliton_check(cx: &mut Ctx) {
    let p = cx.cfg.params.clone();
    let samples = cx.samples();
    let n = cx.n();
    let tol = p.tolerance.unwrap_or(SOLITON_TOL);
    let name = format!("soliton-{}", p.kind.tag());
    match soliton_residual(cx.metric(), p.kind, p.sigma, &samples, tol) {
        Ok(r) => {
            let mut cols = sample_columns(n);
            cols.push("residual".into());
            let per_sample_sigma = p.sigma == SigmaMode::FunctionOnSM;
            let per_group_sigma = p.sigma == SigmaMode::FunctionOnM;
            if per_sample_sigma || per_group_sigma {
                cols.push("sigma".into());
            }
            let rows = samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut row = sample_row(s);
                    row.push(r.residuals[k]);
                    if per_sample_sigma {
                        row.push(r.sigma[k]);
                    } else if per_group_sigma {
                        row.push(r.sigma[s.group]);
                    }
                    row
                })
                .collect();
            cx.artifacts
                .add("samples/soliton.csv", Table { columns: cols, rows }.to_csv());
            let detail = format!("sigma {}: {}", p.sigma.tag(), residual_line(&r));
            cx.result(&name, to_value(&r));
            cx.push(&name, Status::of(r.verdict), detail);
        }
        Err(e) => cx.push_err(&name, &e),
    }

    if p.key_formula {
        let metric = cx.metric().clone();
        let res: Result<Vec<f64>, (usize, FinslerError)> = samples
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                key_formula_residual(&metric, &s.at)
                    .map(|v| max_abs(&v))
                    .map_err(|e| (k, e))
            })
            .collect();
        match res {
            Ok(res) => {
                let r = ResidualReport::from_residuals("key-formula", &res, None, KEY_FORMULA_TOL);
                let mut cols = sample_columns(n);
                cols.push("residual".into());
                let rows = samples
                    .iter()
                    .zip(&res)
                    .map(|(s, v)| {
                        let mut row = sample_row(s);
                        row.push(*v);
                        row
                    })
                    .collect();
                cx.artifacts
                    .add("samples/key_formula.csv", Table { columns: cols, rows }.to_csv());
                let detail = residual_line(&r);
                cx.result("key-formula", to_value(&r));
                cx.push("key-formula", Status::of(r.verdict), detail);
            }
            Err((k, e)) => {
                let at = &samples[k].at;
                let status = status_of_error(&e);
                let msg = format!("at x = {:?}, y = {:?}: {e}", at.x, at.y);
                cx.result("key-formula", json!({ "error": msg }));
                cx.push("key-formula", status, msg);
            }
        }
    }

    if p.landsberg {
        let tol = p.tolerance.unwrap_or(1e-6);
        match landsberg_equivalence_check(cx.metric(), &samples, tol) {
            Ok(r) => {
                let detail = residual_line(&r);
                cx.result("landsberg-equivalence", to_value(&r));
                cx.push("landsberg-equivalence", Status::of(r.verdict), detail);
            }
            Err(e) => cx.push_err("landsberg-equivalence", &e),
        }
    }
}

fn identity_suite_cmd(cx: &mut Ctx) {
    let samples = cx.samples();
    let n = cx.n();
    match identity_suite(cx.metric(), &samples) {
        Ok(reports) => {
            let reports: Vec<ResidualReport> = match cx.cfg.params.tolerance {
                Some(t) => reports.into_iter().map(|r| r.with_tolerance(t)).collect(),
                None => reports,
            };
            let mut cols = sample_columns(n);
            cols.extend(reports.iter().map(|r| r.definition.clone()));
            let rows = samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut row = sample_row(s);
                    row.extend(reports.iter().map(|r| r.residuals[k]));
                    row
                })
                .collect();
            cx.artifacts
                .add("samples/identities.csv", Table { columns: cols, rows }.to_csv());
            for r in &reports {
                cx.result(&r.definition, to_value(r));
                cx.push(&r.definition, Status::of(r.verdict), residual_line(r));
            }
        }
        Err(e) => cx.push_err("identity-suite", &e),
    }
}

fn bound_value(r: &BoundReport) -> Value {
    let mut v = to_value(r);
    if let Some(m) = v.as_object_mut() {
        m.remove("rows");
        m.insert("geodesics".into(), json!(r.rows.len()));
        m.insert(
            "left_chart".into(),
            to_value(&r.rows.iter().map(|g| g.left_chart).collect::<Vec<_>>()),
        );
    }
    v
}

fn bound_detail(r: &BoundReport) -> String {
    let mut s = String::new();
    for (k, v) in &r.constants {
        let _ = write!(s, "{k} {v:.4e}, ");
    }
    let margins: Vec<String> = r
        .margins
        .iter()
        .map(|(k, v)| {
            let tag = if r.informational.contains(k) { " (info)" } else { "" };
            format!("margin {k} {v:.4e}{tag}")
        })
        .collect();
    s.push_str(&margins.join(", "));
    s
}

fn record_bound(cx: &mut Ctx, res: finsler_core::Result<BoundReport>, name: &str) {
    match res {
        Ok(r) => {
            emit_plotdata(&r, &mut cx.artifacts);
            cx.result(name, bound_value(&r));
            cx.push(name, Status::of(r.verdict), bound_detail(&r));
        }
        Err(e) => cx.push_err(name, &e),
    }
}

fn verify_bounds(cx: &mut Ctx) {
    let p = cx.cfg.params.clone();
    let pole = cx.pole();
    let t_max = p.t_max.unwrap_or(6.0);
    for check in &p.checks {
        match check {
            BoundCheck::SolitonGrowth => {
                let r = theorem_1_1_check(cx.metric(), &pole, p.fan, t_max);
                record_bound(cx, r, "soliton-growth");
            }
            BoundCheck::LinearGrowth => {
                let r = theorem_7_checks(cx.metric(), &pole, p.fan, t_max, p.k1);
                record_bound(cx, r, "linear-growth");
            }
            BoundCheck::SecondVariation => {
                let start = PointTangent::new(p.point.clone().unwrap_or_else(|| pole.clone()), cx.direction());
                let path = integrate_geodesic(cx.metric(), &start, p.t0, DEFAULT_TOL);
                for profile in &p.profiles {
                    let name = format!("second-variation-{}", to_value(profile).as_str().unwrap_or("profile"));
                    let r = path
                        .clone()
                        .and_then(|path| second_variation_check(cx.metric(), &path, *profile));
                    match r {
                        Ok(r) => {
                            let detail = format!(
                                "t0 {:.4}, distance {:.6}, int f^2 Ric {:.6e} <= {:.6e}, margin {:.4e}, quadrature error {:.1e}",
                                r.t0, r.distance, r.left, r.right, r.margin, r.quadrature_error
                            );
                            cx.result(&name, to_value(&r));
                            cx.push(&name, Status::of(r.verdict), detail);
                        }
                        Err(e) => cx.push_err(&name, &e),
                    }
                }
            }
        }
    }
}

fn berwald_check(cx: &mut Ctx) {
    let p = &cx.cfg.params;
    let t_max = p.t_max.unwrap_or(2.0);
    let r = fan(cx.metric(), &cx.pole(), p.fan, t_max)
        .and_then(|paths| berwald_scalar_check(cx.metric(), &paths));
    record_bound(cx, r, "berwald-scalar");
}

fn summary(cfg: &RunConfig, checks: &[CheckOutcome], passed: bool) -> String {
    let m = &cfg.metric;
    let measure = match &m.measure {
        MeasureSpec::BusemannHausdorff { quadrature } => {
            format!("busemann-hausdorff ({quadrature} nodes)")
        }
        MeasureSpec::ExplicitDensity(d) => format!("explicit density {d:?}"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "command: {}", cfg.command.name());
    let _ = writeln!(s, "metric: {} (dimension {})", m.family.name(), m.dim());
    let _ = writeln!(s, "measure: {measure}");
    let _ = writeln!(s, "seed: {}", cfg.seed);
    let _ = writeln!(s);
    for c in checks {
        let _ = writeln!(s, "[{}] {}: {}", c.status.label(), c.name, c.detail);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "overall: {}", if passed { "PASS" } else { "FAIL" });
    s
}

fn execute(cfg: &RunConfig) -> RunOutcome {
    let mut cx = Ctx {
        cfg,
        checks: Vec::new(),
        results: Map::new(),
        artifacts: Artifacts::default(),
    };
    match cfg.command {
        Command::Tensors => tensors(&mut cx),
        Command::Geodesic => geodesic(&mut cx),
        Command::SolitonCheck => soliton_check(&mut cx),
        Command::IdentitySuite => identity_suite_cmd(&mut cx),
        Command::VerifyBounds => verify_bounds(&mut cx),
        Command::BerwaldCheck => berwald_check(&mut cx),
    }
    let Ctx {
        checks,
        results,
        mut artifacts,
        ..
    } = cx;
    let passed = checks.iter().all(|c| c.status == Status::Pass);
    let verdicts: Vec<Value> = checks
        .iter()
        .map(|c| json!({ "check": c.name, "status": c.status.label(), "detail": c.detail }))
        .collect();
    let report = json!({
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "metric": to_value(&cfg.metric),
        "passed": passed,
        "checks": verdicts,
        "results": Value::Object(results),
    });
    artifacts.add("report.json", to_json(&report));
    artifacts.add("summary.txt", summary(cfg, &checks, passed));
    RunOutcome { checks, artifacts }
}

/// Runs the configured command on a pool sized by `FINSLER_THREADS` when
/// that is set to a positive integer.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    let threads = std::env::var("FINSLER_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0);
    match threads.and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok()) {
        Some(pool) => pool.install(|| execute(cfg)),
        None => execute(cfg),
    }
}
