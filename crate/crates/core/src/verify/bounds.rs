use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::identities::{growth_gauge, phi};
use super::soliton::point_defect;
use super::{BoundReport, GeodesicRows, SolitonKind, Verdict};
use crate::error::{FinslerError, Result};
use crate::fd;
use crate::geodesics::{forward_distance, integrate_geodesic, GeodesicPath, DEFAULT_TOL, DT_OUT};
use crate::jet::PointTangent;
use crate::linalg::{fit_line, mean_std};
use crate::metrics::{MeasureSpec, MetricSpec};
use crate::sampling;
use crate::tensors::evaluate_all;

/// Slack on curvature hypotheses such as `Ric^inf >= F^2 / 2`.
pub const HYPOTHESIS_TOL: f64 = 1e-6;
/// A bound counts as holding when its margin is at least `-MARGIN_SLACK`.
pub const MARGIN_SLACK: f64 = 1e-9;
/// Lower floor on the fitted linear-growth rate.
pub const GAMMA_FLOOR: f64 = 1e-8;
/// Soliton defect admitted by the linear-growth gate.
pub const SOLITON_GATE: f64 = 1e-4;
/// Tolerance on `S' - 1/2 + Ric` along each path.
pub const DRIVING_TOL: f64 = 1e-5;
pub const MINIMALITY_TOL: f64 = 1e-4;
pub const BERWALD_S_TOL: f64 = 1e-6;
pub const BERWALD_R_TOL: f64 = 1e-5;

/// Unit-speed geodesics from `pole` in `count` deterministic directions.
/// Paths cut by the chart boundary are kept with `left_chart` set.
pub fn fan(metric: &MetricSpec, pole: &[f64], count: usize, t_max: f64) -> Result<Vec<GeodesicPath>> {
    sampling::sphere_directions(metric.dim(), count)
        .into_par_iter()
        .map(|dir| integrate_geodesic(metric, &PointTangent::new(pole.to_vec(), dir), t_max, DEFAULT_TOL))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct FanPoint {
    d: f64,
    f: f64,
    s: f64,
    tau: f64,
    scalar: f64,
    ric: f64,
    ric_inf: f64,
    phi: f64,
    defect: f64,
    gauge: f64,
}

fn fan_points(metric: &MetricSpec, paths: &[GeodesicPath]) -> Result<Vec<Vec<FanPoint>>> {
    paths
        .iter()
        .map(|path| {
            (0..path.len())
                .into_par_iter()
                .map(|k| {
                    let fr = evaluate_all(metric, &path.point(k))?;
                    Ok(FanPoint {
                        d: path.t[k],
                        f: fr.tensor.f,
                        s: fr.measure.s,
                        tau: fr.measure.tau,
                        scalar: fr.curvature.scalar,
                        ric: fr.curvature.ric,
                        ric_inf: fr.measure.ric_inf,
                        phi: phi(&fr),
                        defect: point_defect(&fr, SolitonKind::AsymmetricEssential, 0.5),
                        gauge: growth_gauge(&fr.tensor, &fr.curvature),
                    })
                })
                .collect()
        })
        .collect()
}

fn base_rows(path: &GeodesicPath, pts: &[FanPoint]) -> GeodesicRows {
    GeodesicRows {
        direction: path.y.first().cloned().unwrap_or_default(),
        left_chart: path.left_chart,
        d: pts.iter().map(|p| p.d).collect(),
        s: pts.iter().map(|p| p.s).collect(),
        tau: pts.iter().map(|p| p.tau).collect(),
        scalar_r: pts.iter().map(|p| p.scalar).collect(),
        ..GeodesicRows::default()
    }
}

fn all(pts: &[Vec<FanPoint>]) -> impl Iterator<Item = &FanPoint> {
    pts.iter().flatten()
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

/// Leading run of samples on the uniform `DT_OUT` grid.
fn uniform_prefix(pts: &[FanPoint]) -> usize {
    pts.iter()
        .enumerate()
        .take_while(|(k, p)| (p.d - *k as f64 * DT_OUT).abs() < 1e-9)
        .count()
}

/// Growth of `S` and `tau` along a fan under `Ric^inf >= F^2 / 2`:
/// fits the smallest `K0`, `K0'` with `S >= (d - K0)/2` and
/// `tau >= (d - K0)^2 / 4 - K0'`, and checks `S' - 1/2 + Ric = 0` with `S'`
/// differentiated along each path.
pub fn theorem_1_1_check(
    metric: &MetricSpec,
    pole: &[f64],
    count: usize,
    t_max: f64,
) -> Result<BoundReport> {
    let paths = fan(metric, pole, count, t_max)?;
    let pts = fan_points(metric, &paths)?;
    let worst = min_of(all(&pts).map(|p| p.ric_inf / (p.f * p.f) - 0.5));
    if worst < -HYPOTHESIS_TOL {
        return Err(FinslerError::HypothesisNotMet(format!(
            "Ric^inf - F^2/2 reaches {worst:e} on the fan"
        )));
    }
    let c = max_of(all(&pts).map(|p| (p.ric / (p.f * p.f)).abs()));
    let k0 = max_of(all(&pts).map(|p| p.d - 2.0 * p.s));
    let k0p = max_of(all(&pts).map(|p| 0.25 * (p.d - k0).powi(2) - p.tau));
    let mut driving = 0.0f64;
    let mut rows = Vec::with_capacity(paths.len());
    for (path, pp) in paths.iter().zip(&pts) {
        let m = uniform_prefix(pp);
        if m >= 2 {
            let s: Vec<f64> = pp[..m].iter().map(|p| p.s).collect();
            let ds = fd::differentiate_column(&s, DT_OUT);
            for (p, d) in pp.iter().zip(ds) {
                driving = driving.max((d - 0.5 + p.ric).abs());
            }
        }
        let mut r = base_rows(path, pp);
        r.bound_s = Some(pp.iter().map(|p| 0.5 * (p.d - k0)).collect());
        r.bound_tau_lo = Some(pp.iter().map(|p| 0.25 * (p.d - k0).powi(2) - k0p).collect());
        rows.push(r);
    }
    let s_margin = min_of(all(&pts).map(|p| p.s - 0.5 * (p.d - k0)));
    let tau_margin = min_of(all(&pts).map(|p| p.tau - 0.25 * (p.d - k0).powi(2) + k0p));
    let constants = BTreeMap::from([
        ("c".to_string(), c),
        ("K0".to_string(), k0),
        ("K0_prime".to_string(), k0p),
        ("driving_residual".to_string(), driving),
    ]);
    let margins = BTreeMap::from([
        ("s_lower".to_string(), s_margin),
        ("tau_lower".to_string(), tau_margin),
        ("driving".to_string(), DRIVING_TOL - driving),
    ]);
    Ok(BoundReport::decide("soliton-growth", rows, constants, margins, Vec::new()))
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// Upper and lower growth bounds for `tau`, `|S|` and `R` on an asymmetric
/// essential soliton whose scalar curvature grows at least linearly.
///
/// `gamma` is the least-squares slope of `R` against `d` (floored at
/// [`GAMMA_FLOOR`]), `alpha` the smallest constant with `R >= gamma d - alpha`,
/// and `beta`, `delta` bound `phi = R + F^2_y(grad tau) - tau` above and
/// below per direction. The lower bound for `R` is reported with its
/// best free-sign constant but does not enter the verdict.
pub fn theorem_7_checks(
    metric: &MetricSpec,
    pole: &[f64],
    count: usize,
    t_max: f64,
    k1: f64,
) -> Result<BoundReport> {
    let n = metric.dim() as f64;
    let paths = fan(metric, pole, count, t_max)?;
    let pts = fan_points(metric, &paths)?;
    let defect = max_of(all(&pts).map(|p| p.defect));
    if !(defect <= SOLITON_GATE) {
        return Err(FinslerError::HypothesisNotMet(format!(
            "asymmetric essential soliton defect {defect:e} exceeds {SOLITON_GATE:e}"
        )));
    }
    let gauge = max_of(all(&pts).map(|p| (p.gauge / p.f).abs()));
    let gauge_cap = 0.5 * (n + 1.0) * k1;
    if gauge > gauge_cap + MARGIN_SLACK {
        return Err(FinslerError::HypothesisNotMet(format!(
            "gauge {gauge:e} exceeds (n+1)/2 K1 = {gauge_cap:e}"
        )));
    }
    let ds: Vec<f64> = all(&pts).map(|p| p.d).collect();
    let rs: Vec<f64> = all(&pts).map(|p| p.scalar).collect();
    let gamma = fit_line(&ds, &rs).0.max(GAMMA_FLOOR);
    let alpha = max_of(all(&pts).map(|p| gamma * p.d - p.scalar)).max(0.0);
    let f_hi = max_of(pts.iter().map(|pp| max_of(pp.iter().map(|p| p.phi - gamma * p.d))));
    let beta = f_hi.abs();
    let delta = min_of(pts.iter().map(|pp| min_of(pp.iter().map(|p| p.phi + gamma * p.d))));
    let tau_pole = max_of(pts.iter().filter_map(|pp| pp.first()).map(|p| p.tau));
    let k5 = 2.0 * (tau_pole + alpha + beta).max(0.0).sqrt();
    let ab = alpha + beta;
    let root = |p: &FanPoint| 2.0 * (p.tau + ab).max(0.0).sqrt();
    let k6 = max_of(all(&pts).map(|p| p.d - root(p)));
    let k6_hi = min_of(all(&pts).map(|p| p.d + root(p)));

    let tau_hi = |d: f64| 0.25 * (d + k5).powi(2) - ab;
    let s_hi = |d: f64| 0.5 * d + k5;
    let r_hi = |d: f64| 0.25 * (d + k5).powi(2) + gamma * d - alpha;
    let tau_lo = |d: f64| 0.25 * (d - k6).powi(2) - ab;
    let r_lo = |d: f64, k7: f64| 0.25 * (d + k7).powi(2) + gamma * d + delta - ab;
    let r_lo_margin = |k7: f64| min_of(all(&pts).map(|p| p.scalar - r_lo(p.d, k7)));
    let d_max = max_of(ds.iter().copied()).max(0.0);
    let k7 = golden_max(r_lo_margin, -2.0 * d_max - 2.0, 2.0 * d_max + 2.0);

    let mut rows = Vec::with_capacity(paths.len());
    for (path, pp) in paths.iter().zip(&pts) {
        let mut r = base_rows(path, pp);
        r.bound_s = Some(pp.iter().map(|p| s_hi(p.d)).collect());
        r.bound_tau_hi = Some(pp.iter().map(|p| tau_hi(p.d)).collect());
        r.bound_tau_lo = Some(pp.iter().map(|p| tau_lo(p.d)).collect());
        r.bound_r_hi = Some(pp.iter().map(|p| r_hi(p.d)).collect());
        r.bound_r_lo = Some(pp.iter().map(|p| r_lo(p.d, k7)).collect());
        rows.push(r);
    }
    let constants = BTreeMap::from([
        ("K1".to_string(), k1),
        ("gauge_max".to_string(), gauge),
        ("soliton_defect_max".to_string(), defect),
        ("alpha".to_string(), alpha),
        ("beta".to_string(), beta),
        ("gamma".to_string(), gamma),
        ("delta".to_string(), delta),
        ("K5".to_string(), k5),
        ("K6".to_string(), k6),
        ("K7".to_string(), k7),
        ("K5_fit_tau".to_string(), max_of(all(&pts).map(|p| root(p) - p.d))),
        ("K5_fit_s".to_string(), max_of(all(&pts).map(|p| p.s.abs() - 0.5 * p.d))),
        (
            "K5_fit_r".to_string(),
            max_of(all(&pts).map(|p| 2.0 * (p.scalar - gamma * p.d + alpha).max(0.0).sqrt() - p.d)),
        ),
    ]);
    let margins = BTreeMap::from([
        ("tau_upper".to_string(), min_of(all(&pts).map(|p| tau_hi(p.d) - p.tau))),
        ("s_abs_upper".to_string(), min_of(all(&pts).map(|p| s_hi(p.d) - p.s.abs()))),
        ("r_upper".to_string(), min_of(all(&pts).map(|p| r_hi(p.d) - p.scalar))),
        ("tau_lower".to_string(), min_of(all(&pts).map(|p| p.tau - tau_lo(p.d)))),
        ("tau_lower_window".to_string(), k6_hi - k6),
        ("r_lower".to_string(), r_lo_margin(k7)),
    ]);
    Ok(BoundReport::decide(
        "linear-growth",
        rows,
        constants,
        margins,
        vec!["r_lower".to_string()],
    ))
}

/// Test function for the second variation along `[0, t0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `min(t, 1, t0 - t)`.
    Piecewise,
    /// `sin(pi t / t0)`.
    SinBump,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "piecewise" => Some(Profile::Piecewise),
            "sin-bump" | "sine" => Some(Profile::SinBump),
            _ => None,
        }
    }

    fn value(self, t: f64, t0: f64) -> f64 {
        match self {
            Profile::Piecewise => t.min(1.0).min(t0 - t).max(0.0),
            Profile::SinBump => (std::f64::consts::PI * t / t0).sin(),
        }
    }

    /// `int_0^t0 f'^2 dt`, exact.
    fn energy(self, t0: f64) -> f64 {
        match self {
            Profile::Piecewise => t0.min(2.0),
            Profile::SinBump => std::f64::consts::PI.powi(2) / (2.0 * t0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondVariationReport {
    pub profile: Profile,
    pub t0: f64,
    pub distance: f64,
    /// `int f^2 Ric dt`.
    pub left: f64,
    /// `(n - 1) int f'^2 dt`.
    pub right: f64,
    pub margin: f64,
    /// `|Simpson - trapezoid|` on the left integral.
    pub quadrature_error: f64,
    pub verdict: Verdict,
}

/// Composite Simpson on consecutive equal-width pairs, trapezoid on any
/// leftover interval; also returns the plain trapezoid value.
fn integrate(t: &[f64], v: &[f64]) -> (f64, f64) {
    let trap: f64 = (1..t.len())
        .map(|k| 0.5 * (t[k] - t[k - 1]) * (v[k] + v[k - 1]))
        .sum();
    let mut simpson = 0.0;
    let mut k = 0;
    while k + 1 < t.len() {
        let h1 = t[k + 1] - t[k];
        if k + 2 < t.len() && ((t[k + 2] - t[k + 1]) - h1).abs() < 1e-12 {
            simpson += h1 / 3.0 * (v[k] + 4.0 * v[k + 1] + v[k + 2]);
            k += 2;
        } else {
            simpson += 0.5 * h1 * (v[k] + v[k + 1]);
            k += 1;
        }
    }
    (simpson, trap)
}

/// `int f^2 Ric dt <= (n - 1) int f'^2 dt` along a minimal unit-speed path.
pub fn second_variation_check(
    metric: &MetricSpec,
    path: &GeodesicPath,
    profile: Profile,
) -> Result<SecondVariationReport> {
    if let Some(t) = path.left_chart {
        return Err(FinslerError::LeftChart { t });
    }
    let t0 = path.length();
    let (distance, _) = forward_distance(metric, &path.x[0], path.endpoint(), 4)?;
    if (t0 - distance).abs() > MINIMALITY_TOL {
        return Err(FinslerError::PathNotMinimal {
            length: t0,
            distance,
        });
    }
    let ric: Vec<f64> = (0..path.len())
        .into_par_iter()
        .map(|k| {
            let fr = evaluate_all(metric, &path.point(k))?;
            Ok(fr.curvature.ric / (fr.tensor.f * fr.tensor.f))
        })
        .collect::<Result<_>>()?;
    let integrand: Vec<f64> = path
        .t
        .iter()
        .zip(&ric)
        .map(|(t, r)| profile.value(*t, t0).powi(2) * r)
        .collect();
    let (left, trap) = integrate(&path.t, &integrand);
    let right = (metric.dim() as f64 - 1.0) * profile.energy(t0);
    let margin = right - left;
    let quadrature_error = (left - trap).abs();
    Ok(SecondVariationReport {
        profile,
        t0,
        distance,
        left,
        right,
        margin,
        quadrature_error,
        verdict: Verdict::from_bool(margin >= -quadrature_error.max(MARGIN_SLACK)),
    })
}

/// On a Berwald metric with Busemann-Hausdorff measure: `S = 0` and the
/// scalar curvature is constant along each path; reports `sup |R|`.
pub fn berwald_scalar_check(metric: &MetricSpec, paths: &[GeodesicPath]) -> Result<BoundReport> {
    if !metric.is_berwald() {
        return Err(FinslerError::NotBerwald);
    }
    if !matches!(metric.measure, MeasureSpec::BusemannHausdorff { .. }) {
        return Err(FinslerError::HypothesisNotMet(
            "Busemann-Hausdorff measure required".into(),
        ));
    }
    let pts = fan_points(metric, paths)?;
    let max_s = all(&pts).fold(0.0f64, |a, p| a.max(p.s.abs()));
    let sup_r = all(&pts).fold(0.0f64, |a, p| a.max(p.scalar.abs()));
    let max_sd = pts.iter().fold(0.0f64, |a, pp| {
        let r: Vec<f64> = pp.iter().map(|p| p.scalar).collect();
        a.max(mean_std(&r).1)
    });
    let rows = paths.iter().zip(&pts).map(|(p, pp)| base_rows(p, pp)).collect();
    let constants = BTreeMap::from([
        ("sup_abs_r".to_string(), sup_r),
        ("max_abs_s".to_string(), max_s),
        ("max_r_sd".to_string(), max_sd),
    ]);
    let margins = BTreeMap::from([
        ("s_vanishing".to_string(), BERWALD_S_TOL - max_s),
        ("r_constancy".to_string(), BERWALD_R_TOL - max_sd),
    ]);
    Ok(BoundReport::decide("berwald-scalar", rows, constants, margins, Vec::new()))
}
