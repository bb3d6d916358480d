//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` are reported as failures but do not
//! fail the target; every other failure does.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use support::cauchy::cauchy_partial;
use finsler_core::sampling::rng;
use finsler_core::verify::{
    berwald_scalar_check, fan, identity_suite, key_formula_residual, second_variation_check,
    soliton_residual, theorem_1_1_check, theorem_7_checks, MARGIN_SLACK,
};
use finsler_core::{
    evaluate_all, evaluate_jet, flag_curvature, integrate_geodesic, sample_set,
    FinslerError, MetricSpec, PointTangent, Profile, SigmaMode, SolitonKind,
};

/// The linear-growth lower bound for `R` is false on the Gaussian soliton
/// with the fitted constants; see the decisions ledger.
const EXPECTED_FAIL: &[usize] = &[4];

type Outcome = Result<String, String>;

fn err(e: FinslerError) -> String {
    e.to_string()
}

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn riemannian_reduction() -> Outcome {
    let mut worst = [0.0f64; 4];
    for metric in [MetricSpec::sphere(2, 1.0), MetricSpec::hyperbolic(2)] {
        let base = base_of(&metric);
        let mut r = rng(101);
        for _ in 0..100 {
            let p = random_point(&mut r, &metric, 0.8);
            let n = p.dim();
            let fr = evaluate_all(&metric, &p).map_err(err)?;
            let oracle = riemann(&base, &p.x);
            let scale = max_abs(&flat4(&oracle));
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let e = (fr.curvature.r4[j][i][k][l] - oracle[i][j][k][l]).abs() / scale;
                            worst[0] = worst[0].max(e);
                        }
                    }
                }
            }
            let ric_jl = |j: usize, l: usize| (0..n).map(|i| oracle[i][j][i][l]).sum::<f64>();
            let ai = inv(&a_mat(&base, &p.x));
            let mut ric = 0.0;
            let mut scalar = 0.0;
            for j in 0..n {
                for l in 0..n {
                    ric += ric_jl(j, l) * p.y[j] * p.y[l];
                    scalar += ai[j][l] * ric_jl(j, l);
                }
            }
            worst[1] = worst[1].max((fr.curvature.ric - ric).abs() / ric.abs());
            worst[2] = worst[2].max((fr.curvature.scalar - scalar).abs() / scalar.abs());
            let non_riem = [
                max_abs(&flat3(&fr.tensor.cartan)),
                max_abs(&fr.tensor.mean_cartan),
                max_abs(&flat3(&fr.curvature.landsberg)),
                max_abs(&fr.curvature.mean_landsberg),
                max_abs(&flat4(&fr.curvature.p4)),
            ];
            worst[3] = worst[3].max(max_abs(&non_riem));
        }
    }
    judge(
        worst[0] <= 1e-5 && worst[1] <= 1e-5 && worst[2] <= 1e-5 && worst[3] <= 1e-8,
        format!(
            "rel err R4 {:.2e}, Ric {:.2e}, scalarR {:.2e}; max |C,I,L,J,P| {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn flat_suite() -> Outcome {
    let mut curv = 0.0f64;
    let mut dist = 0.0f64;
    let mut s = 0.0f64;
    let mink3 = MetricSpec::minkowski_randers(
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        vec![0.2, -0.3, 0.1],
    );
    for metric in [MetricSpec::euclidean(3), mink2(), mink3] {
        let riemannian = metric.is_riemannian();
        let mut r = rng(202);
        for _ in 0..100 {
            let p = random_point(&mut r, &metric, 0.8);
            let fr = evaluate_all(&metric, &p).map_err(err)?;
            let c = &fr.curvature;
            let all = [
                max_abs(&flat4(&c.r4)),
                max_abs(&flat4(&c.p4)),
                max_abs(&flat3(&c.landsberg)),
                max_abs(&c.mean_landsberg),
                max_abs(c.flag_low.iter().flatten()),
                c.ric.abs(),
                max_abs(c.bar_ric.iter().flatten()),
                max_abs(c.tilde_ric.iter().flatten()),
                c.scalar.abs(),
                max_abs(&flat4(&c.cartan_h)),
                max_abs(c.mean_cartan_h.iter().flatten()),
            ];
            curv = curv.max(max_abs(&all));
            // Minkowski distortion depends on y alone; only its x-variation
            // can be asked to vanish.
            let origin = PointTangent::new(vec![0.0; p.dim()], p.y.clone());
            let tau0 = evaluate_all(&metric, &origin).map_err(err)?.measure.tau;
            let d = if riemannian { fr.measure.tau.abs() } else { (fr.measure.tau - tau0).abs() };
            dist = dist.max(d).max(max_abs(&fr.measure.tau_grad));
            s = s.max(fr.measure.s.abs());
        }
    }
    judge(
        curv <= 1e-9 && dist <= 1e-6 && s <= 1e-6,
        format!("max curvature {curv:.2e}, distortion defect {dist:.2e}, max |S| {s:.2e}"),
    )
}

fn funk_metric() -> Outcome {
    let mut k_err = 0.0f64;
    let mut s_err = 0.0f64;
    for n in [2, 3] {
        let f = MetricSpec::funk(n);
        let mut r = rng(303);
        for _ in 0..50 {
            let p = random_point(&mut r, &f, 0.7);
            let fr = evaluate_all(&f, &p).map_err(err)?;
            let v = transverse(&mut r, &p.y);
            let k = flag_curvature(&fr.curvature, &fr.tensor.g, &v).map_err(err)?;
            k_err = k_err.max((k + 0.25).abs());
            let expect = 0.5 * (n as f64 + 1.0) * fr.tensor.f;
            s_err = s_err.max((fr.measure.s - expect).abs());
        }
    }
    judge(
        k_err <= 1e-3 && s_err <= 1e-3,
        format!("max |K + 1/4| {k_err:.2e}, max |S - (n+1)F/2| {s_err:.2e} (n = 2, 3)"),
    )
}

fn gaussian_soliton() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let g = MetricSpec::gaussian_soliton(n);
        let samples = sample_set(&g, 200, 1, 0.5, 404);
        let r = soliton_residual(&g, SolitonKind::AsymmetricEssential, SigmaMode::ConstantHalf, &samples, 1e-5)
            .map_err(err)?;
        ok &= r.verdict.passed();
        let mut kf = 0.0f64;
        for s in samples.iter().take(50) {
            kf = kf.max(max_abs(&key_formula_residual(&g, &s.at).map_err(err)?));
        }
        ok &= kf <= 1e-4;
        parts.push(format!("n={n}: residual {:.2e}, key formula {kf:.2e}", r.max_residual));
    }
    let g = MetricSpec::gaussian_soliton(2);
    let t1 = theorem_1_1_check(&g, &[0.0, 0.0], 16, 6.0).map_err(err)?;
    let (k0, k0p) = (t1.constants["K0"], t1.constants["K0_prime"]);
    ok &= t1.verdict.passed() && k0 <= 1e-3 && k0p <= 1e-3;
    parts.push(format!("growth K0 {k0:.2e}, K0' {k0p:.2e}"));
    let t7 = theorem_7_checks(&g, &[0.0, 0.0], 16, 6.0, 0.0).map_err(err)?;
    let mut failing = Vec::new();
    for (name, m) in &t7.margins {
        if *m < -MARGIN_SLACK {
            failing.push(format!("{name} {m:.3e}"));
        }
    }
    ok &= failing.is_empty();
    parts.push(if failing.is_empty() {
        "linear-growth margins all nonnegative".into()
    } else {
        format!("negative linear-growth margins: {}", failing.join(", "))
    });
    judge(ok, parts.join("; "))
}

fn identity_suites() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, m) in [("randers", randers3()), ("funk", MetricSpec::funk(3))] {
        let s = sample_set(&m, 50, 1, 0.5, 505);
        let reports = identity_suite(&m, &s).map_err(err)?;
        let mut worst = 0.0f64;
        for r in &reports {
            if r.definition != "bianchi" {
                worst = worst.max(r.max_residual);
            }
        }
        ok &= worst <= 1e-4;
        parts.push(format!("{name} max {worst:.2e}"));
    }
    judge(ok, parts.join(", "))
}

fn second_variation() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let start = PointTangent::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    let sphere = MetricSpec::sphere(2, 1.0);
    let path = integrate_geodesic(&sphere, &start, 2.0, 1e-9).map_err(err)?;
    for profile in [Profile::Piecewise, Profile::SinBump] {
        let r = second_variation_check(&sphere, &path, profile).map_err(err)?;
        ok &= r.verdict.passed();
        parts.push(format!(
            "sphere {profile:?} margin {:.4} (quadrature {:.1e})",
            r.margin, r.quadrature_error
        ));
    }
    let funk = MetricSpec::funk(2);
    let path = integrate_geodesic(&funk, &start, 2.0, 1e-9).map_err(err)?;
    for profile in [Profile::Piecewise, Profile::SinBump] {
        let r = second_variation_check(&funk, &path, profile).map_err(err)?;
        ok &= r.margin > 0.0;
        parts.push(format!("funk {profile:?} margin {:.4}", r.margin));
    }
    judge(ok, parts.join(", "))
}

fn berwald() -> Outcome {
    let sphere = MetricSpec::sphere(2, 1.0);
    let paths = fan(&sphere, &[0.0, 0.0], 10, 2.0).map_err(err)?;
    let r = berwald_scalar_check(&sphere, &paths).map_err(err)?;
    let sd = r.constants["max_r_sd"];
    let sup = r.constants["sup_abs_r"];
    judge(
        r.verdict.passed() && sd <= 1e-5 && sup.is_finite(),
        format!("10 geodesics, max sd(R) {sd:.2e}, sup |R| {sup:.6}"),
    )
}

fn derivative_engine() -> Outcome {
    let families = [
        MetricSpec::euclidean(3),
        MetricSpec::sphere(2, 1.0),
        MetricSpec::hyperbolic(3),
        MetricSpec::constant_matrix(vec![2.0, 0.3, 0.3, 1.0]),
        randers3(),
        MetricSpec::funk(2),
        mink2(),
    ];
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut count = 0usize;
    for metric in &families {
        let mut r = rng(808);
        for _ in 0..100 {
            let p = random_point(&mut r, metric, 0.7);
            let edge = metric.chart.inner_radius() - p.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rx = 0.1 * edge.min(1.0);
            let ry = 0.05 * p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (ox, oy) in [(2, 4), (3, 1)] {
                let jet = evaluate_jet(metric, &p, ox, oy).map_err(err)?;
                for (a, b, ad) in jet.entries() {
                    let order = a.len() + b.len();
                    if order > 4 || (ox == 3 && a.len() < 3) {
                        continue;
                    }
                    let fd = cauchy_partial(metric, &p, &a, &b, rx, ry);
                    let e = (ad - fd).abs() / ad.abs().max(1.0);
                    count += 1;
                    if e > worst {
                        worst = e;
                        where_ = format!("{} d_x{a:?} d_y{b:?}", metric.family.name());
                    }
                }
            }
        }
    }
    judge(
        worst <= 1e-6,
        format!("{count} partials, worst rel err {worst:.2e} at {where_}"),
    )
}

fn files_under(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let dir = std::env::temp_dir().join(format!("finsler-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let configs = [
        (
            "soliton-check",
            "seed = 9\n[metric]\ndimension = 3\nfamily = \"euclidean\"\n[metric.measure]\n\
             kind = \"explicit-density\"\ndensity = \"gaussian\"\n[params]\nsamples = 40\n\
             sigma = \"function-on-SM\"\nkey_formula = true\n",
        ),
        (
            "identity-suite",
            "seed = 9\n[metric]\ndimension = 2\nfamily = \"funk-ball\"\n[params]\nsamples = 20\n",
        ),
        (
            "verify-bounds",
            "[metric]\ndimension = 2\nfamily = \"euclidean\"\n[metric.measure]\n\
             kind = \"explicit-density\"\ndensity = \"gaussian\"\n[params]\nfan = 6\nt_max = 4.0\n",
        ),
    ];
    let mut compared = 0;
    for (cmd, body) in configs {
        let cfg = dir.join(format!("{cmd}.toml"));
        std::fs::write(&cfg, body).map_err(|e| e.to_string())?;
        let mut outs = Vec::new();
        for k in 0..2 {
            let out = dir.join(format!("{cmd}-{k}"));
            let status = Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
                .args([cmd, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if status.status.code() != Some(0) {
                return Err(format!("{cmd} exited with {:?}", status.status.code()));
            }
            outs.push(out);
        }
        let (a, b) = (files_under(&outs[0]), files_under(&outs[1]));
        if a != b || a.is_empty() {
            return Err(format!("{cmd}: file sets differ"));
        }
        for rel in &a {
            if std::fs::read(outs[0].join(rel)).ok() != std::fs::read(outs[1].join(rel)).ok() {
                return Err(format!("{cmd}: {} differs", rel.display()));
            }
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{compared} files byte-identical across repeated runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("riemannian reduction", riemannian_reduction),
        ("flat suite", flat_suite),
        ("funk metric", funk_metric),
        ("gaussian soliton", gaussian_soliton),
        ("identity suite", identity_suites),
        ("second variation", second_variation),
        ("berwald check", berwald),
        ("derivative engine", derivative_engine),
        ("reproducibility", reproducibility),
    ];
    let mut unexpected = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        let expected_fail = EXPECTED_FAIL.contains(&id);
        match outcome {
            Ok(d) => {
                let note = if expected_fail { " (listed as expected failure)" } else { "" };
                println!("criterion {id} PASS {name}: {d} [{secs:.1}s]{note}");
            }
            Err(d) => {
                let note = if expected_fail { " (expected, recorded)" } else { "" };
                println!("criterion {id} FAIL {name}: {d} [{secs:.1}s]{note}");
                if !expected_fail {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected acceptance failure(s)");
        std::process::exit(1);
    }
}
