use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finsler_cli::{plot_tables, PLOT_COLUMNS};
use finsler_core::{BoundReport, GeodesicRows, Verdict};
use tempfile::TempDir;

const EUCLIDEAN: &str = "[metric]\ndimension = 2\nfamily = \"euclidean\"\n";
const GAUSSIAN: &str = "[metric]\ndimension = 2\nfamily = \"euclidean\"\n\
                        [metric.measure]\nkind = \"explicit-density\"\ndensity = \"gaussian\"\n";
const SPHERE: &str = "[metric]\ndimension = 2\nfamily = \"riemannian\"\n\
                      [metric.params]\nbase = \"sphere-stereographic\"\nradius = 1.0\n";

struct Run {
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.out.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    fn summary(&self) -> String {
        self.read("summary.txt")
    }
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn lab(cmd: &str, config: &Path, out: &Path, extra: &[&str], env: &[(&str, &str)]) -> Run {
    let mut c = Command::new(env!("CARGO_BIN_EXE_finsler-lab"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra);
    for (k, v) in env {
        c.env(k, v);
    }
    Run {
        out: out.to_path_buf(),
        output: c.output().expect("binary runs"),
    }
}

fn run_body(cmd: &str, body: &str) -> (TempDir, Run) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", body);
    let run = lab(cmd, &cfg, &dir.path().join("out"), &[], &[]);
    (dir, run)
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let j = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[j]).collect()
}

#[test]
fn tensors_on_euclidean_are_flat() {
    let body = format!("{EUCLIDEAN}[params]\npoint = [0.0, 0.0]\ndirection = [1.0, 0.0]\nsamples = 5\n");
    let (_d, run) = run_body("tensors", &body);
    assert_eq!(run.code(), 0, "{}", run.summary());
    let s = run.summary();
    assert!(s.contains("[PASS] tensors"));
    assert!(s.contains("flag curvatures [0.000000e0]"));
    assert!(s.contains("Ric 0.000000e0"));
    assert!(s.contains("scalar R 0.000000e0"));
    let report: serde_json::Value = serde_json::from_str(&run.read("report.json")).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["results"]["tensors"]["curvature"]["ric"], 0.0);
    let (h, rows) = csv(&run.read("samples/tensors.csv"));
    assert_eq!(rows.len(), 5);
    assert!(column(&h, &rows, "Ric").iter().all(|v| *v == 0.0));
}

#[test]
fn gaussian_asymmetric_essential_soliton_passes() {
    let body = format!(
        "seed = 5\n{GAUSSIAN}[params]\nkind = \"asymmetric-essential\"\nsamples = 40\ntolerance = 1e-5\n"
    );
    let (_d, run) = run_body("soliton-check", &body);
    assert_eq!(run.code(), 0, "{}", run.summary());
    assert!(run.summary().contains("[PASS] soliton-asymmetric-essential"));
    let (h, rows) = csv(&run.read("samples/soliton.csv"));
    assert_eq!(rows.len(), 40);
    assert!(column(&h, &rows, "residual").iter().all(|r| *r <= 1e-5));
}

#[test]
fn flat_measure_fails_the_soliton_check() {
    let (_d, run) = run_body("soliton-check", &format!("{EUCLIDEAN}[params]\nsamples = 4\n"));
    assert_eq!(run.code(), 1);
    assert!(run.summary().contains("[FAIL] soliton-asymmetric-essential"));
}

#[test]
fn verify_bounds_on_euclidean_reports_hypothesis_not_met() {
    let (_d, run) = run_body("verify-bounds", &format!("{EUCLIDEAN}[params]\nfan = 4\nt_max = 1.0\n"));
    assert_ne!(run.code(), 0);
    let s = run.summary();
    assert!(s.contains("[HYPOTHESIS NOT MET] soliton-growth"), "{s}");
    assert!(s.contains("[HYPOTHESIS NOT MET] linear-growth"), "{s}");
    assert!(s.contains("overall: FAIL"));
}

#[test]
fn linear_growth_plotdata_has_s_equal_half_d() {
    let body = format!("{GAUSSIAN}[params]\nfan = 8\nt_max = 6.0\nchecks = [\"linear-growth\"]\n");
    let (_d, run) = run_body("verify-bounds", &body);
    assert_eq!(run.code(), 0, "{}", run.summary());
    let (h, rows) = csv(&run.read("plot/linear-growth_all.csv"));
    let mut expect = vec!["geodesic".to_string()];
    expect.extend(PLOT_COLUMNS.iter().map(|s| s.to_string()));
    assert_eq!(h, expect);
    assert_eq!(rows.len(), 8 * 121);
    let d = column(&h, &rows, "d");
    let s = column(&h, &rows, "S");
    for (d, s) in d.iter().zip(&s) {
        assert!((s - 0.5 * d).abs() <= 1e-4, "S {s} vs d {d}");
    }
    for k in 0..8 {
        let (h1, r1) = csv(&run.read(&format!("plot/linear-growth_{k:03}.csv")));
        assert_eq!(h1, PLOT_COLUMNS.map(String::from));
        assert_eq!(r1.len(), 121);
    }
}

#[test]
fn sphere_berwald_check_has_constant_r_per_file() {
    let body = format!("{SPHERE}[params]\nfan = 10\nt_max = 2.0\n");
    let (_d, run) = run_body("berwald-check", &body);
    assert_eq!(run.code(), 0, "{}", run.summary());
    for k in 0..10 {
        let (h, rows) = csv(&run.read(&format!("plot/berwald-scalar_{k:03}.csv")));
        assert!(!rows.is_empty());
        for r in column(&h, &rows, "R") {
            assert!((r - 2.0).abs() < 1e-6, "R = {r}");
        }
    }
}

#[test]
fn empty_fan_gives_header_only_tables() {
    let mut report = BoundReport {
        theorem: "soliton-growth".into(),
        rows: Vec::new(),
        constants: BTreeMap::new(),
        margins: BTreeMap::new(),
        informational: Vec::new(),
        verdict: Verdict::Pass,
    };
    let (per, agg) = plot_tables(&report);
    assert!(per.is_empty());
    assert_eq!(agg.to_csv().lines().count(), 1);

    report.rows = vec![GeodesicRows::default(); 3];
    let (per, agg) = plot_tables(&report);
    assert_eq!(per.len(), 3);
    for t in per.iter().chain([&agg]) {
        assert_eq!(t.to_csv().lines().count(), 1);
    }
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let body = format!("seed = 3\n{GAUSSIAN}[params]\nsamples = 12\nsigma = \"function-on-M\"\ndirections = 2\n");
    let cfg = write_config(dir.path(), "run.toml", &body);
    let a = lab("soliton-check", &cfg, &dir.path().join("a"), &[], &[]);
    let b = lab("soliton-check", &cfg, &dir.path().join("b"), &[], &[("FINSLER_THREADS", "2")]);
    let c = lab("soliton-check", &cfg, &dir.path().join("c"), &["--seed", "4"], &[]);
    for rel in ["report.json", "summary.txt", "samples/soliton.csv"] {
        assert_eq!(a.read(rel), b.read(rel), "{rel}");
    }
    assert_ne!(a.read("samples/soliton.csv"), c.read("samples/soliton.csv"));
}

#[test]
fn bad_config_exits_with_line_and_field() {
    let (_d, run) = run_body("verify-bounds", &format!("{EUCLIDEAN}[params]\nfan = 2\n"));
    assert_eq!(run.code(), 2);
    let err = String::from_utf8_lossy(&run.output.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("params.fan"), "{err}");

    let (_d, run) = run_body("tensors", &format!("{EUCLIDEAN}[params]\ntolerance = -1.0\n"));
    assert_eq!(run.code(), 2);
    assert!(String::from_utf8_lossy(&run.output.stderr).contains("params.tolerance"));
}

#[test]
fn metric_path_is_resolved_next_to_the_config() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "sphere.toml", "dimension = 2\nfamily = \"riemannian\"\n[params]\nbase = \"sphere-stereographic\"\n");
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "metric = \"sphere.toml\"\n[params]\npoint = [0.0, 0.0]\ndirection = [1.0, 0.0]\nt_max = 1.0\nfields = [\"Ric\"]\n",
    );
    let run = lab("geodesic", &cfg, &dir.path().join("out"), &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.summary());
    let (h, rows) = csv(&run.read("samples/geodesic.csv"));
    assert_eq!(rows.len(), 21);
    for r in column(&h, &rows, "Ric") {
        assert!((r - 1.0).abs() < 1e-8);
    }
}

#[test]
fn second_variation_on_the_sphere() {
    let body = format!(
        "{SPHERE}[params]\npoint = [0.0, 0.0]\ndirection = [1.0, 0.0]\nt0 = 2.0\nchecks = [\"second-variation\"]\n"
    );
    let (_d, run) = run_body("verify-bounds", &body);
    assert_eq!(run.code(), 0, "{}", run.summary());
    let report: serde_json::Value = serde_json::from_str(&run.read("report.json")).unwrap();
    let left = report["results"]["second-variation-sin-bump"]["left"].as_f64().unwrap();
    assert!((left - 1.0).abs() < 1e-6);
}
