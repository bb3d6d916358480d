//! Geodesic integration, parallel frames, forward distance and sampling of
//! fields along paths.
//!
//! The geodesic ODE is `x' = y`, `y' = -2 G(x, y)`. A frame is transported
//! with `E' = -N E`, which is `D_{x'} E = 0` for the Chern connection.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::flag_spectrum;
use crate::error::{FinslerError, Result};
use crate::jet::{check_point, PointTangent};
use crate::linalg::{self, Matrix};
use crate::metrics::MetricSpec;
use crate::sampling;
use crate::tensors::{evaluate_all, fundamental_tensor_at, spray_at};

/// Spacing of the output grid.
pub const DT_OUT: f64 = 0.05;

/// Default unit-speed drift tolerance.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicPath {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `frame[s][a]` is `E_a(t_s)`; the last vector is the velocity.
    pub frame: Option<Vec<Vec<Vec<f64>>>>,
    /// Exit time when the path was cut short by the chart boundary.
    pub left_chart: Option<f64>,
    /// `max |F - 1|` over accepted steps.
    pub max_drift: f64,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Arc length covered.
    pub fn length(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    pub fn point(&self, s: usize) -> PointTangent {
        PointTangent::new(self.x[s].clone(), self.y[s].clone())
    }

    pub fn endpoint(&self) -> &[f64] {
        self.x.last().expect("path has samples")
    }

    /// Converts a chart exit into `LeftChart`.
    pub fn ensure_complete(self) -> Result<Self> {
        match self.left_chart {
            Some(t) => Err(FinslerError::LeftChart { t }),
            None => Ok(self),
        }
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are
// not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Right-hand side on the state `(x, y, E_1, ..., E_n)`.
fn rhs(metric: &MetricSpec, z: &[f64], n: usize, with_frame: bool) -> Result<Vec<f64>> {
    let x = &z[..n];
    if !metric.chart.contains(x) {
        return Err(FinslerError::OutOfChart { x: x.to_vec() });
    }
    let p = PointTangent::new(x.to_vec(), z[n..2 * n].to_vec());
    let (g, nl) = spray_at(metric, &p, with_frame)?;
    let mut out = Vec::with_capacity(z.len());
    out.extend_from_slice(&z[n..2 * n]);
    out.extend(g.iter().map(|v| -2.0 * v));
    if let Some(nl) = nl {
        for a in 0..n {
            let e = &z[2 * n + a * n..2 * n + (a + 1) * n];
            for i in 0..n {
                out.push(-linalg::dot(&nl[i], e));
            }
        }
    }
    Ok(out)
}

fn axpy(z: &[f64], h: f64, ks: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    for (k, &c) in ks.iter().zip(w) {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(k) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// One Dormand-Prince step; returns the fifth-order state and the scaled
/// error norm.
fn dp_step(
    metric: &MetricSpec,
    z: &[f64],
    h: f64,
    n: usize,
    with_frame: bool,
    atol: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let zs = axpy(z, h, &ks, &A[s][..s.min(6)]);
        ks.push(rhs(metric, &zs, n, with_frame)?);
    }
    let z5 = axpy(z, h, &ks, &B5);
    let z4 = axpy(z, h, &ks, &B4);
    let mut err: f64 = 0.0;
    for i in 0..z.len() {
        let scale = atol * (1.0 + z[i].abs().max(z5[i].abs()));
        err = err.max((z5[i] - z4[i]).abs() / scale);
    }
    Ok((z5, err))
}

struct Integration {
    samples: Vec<(f64, Vec<f64>)>,
    left_chart: Option<f64>,
    max_drift: f64,
}

fn is_chart_exit(e: &FinslerError) -> bool {
    matches!(
        e,
        FinslerError::OutOfChart { .. }
            | FinslerError::DegenerateDirection { .. }
            | FinslerError::NotPositiveDefinite { .. }
    )
}

/// Adaptive integration of the state `z0` over `[0, t_end]`, recording
/// samples on the grid `k * dt_out` and at `t_end`.
fn integrate_state(
    metric: &MetricSpec,
    z0: Vec<f64>,
    n: usize,
    with_frame: bool,
    t_end: f64,
    tol: f64,
    dt_out: f64,
) -> Result<Integration> {
    let atol = (1e-3 * tol).clamp(1e-13, 1e-6);
    let mut z = z0;
    let mut t = 0.0;
    let mut h = dt_out.min(t_end).min(0.05);
    let mut samples = vec![(0.0, z.clone())];
    let mut max_drift: f64 = 0.0;
    let mut next_out = 1usize;
    let out_time = |k: usize| (k as f64 * dt_out).min(t_end);
    while t < t_end {
        let target = out_time(next_out);
        let step = h.min(target - t);
        let attempt = dp_step(metric, &z, step, n, with_frame, atol);
        let (z_new, err) = match attempt {
            Ok(v) => v,
            Err(e) if is_chart_exit(&e) => {
                h = step * 0.25;
                if h < 1e-10 * t_end.max(1.0) {
                    return Ok(Integration {
                        samples,
                        left_chart: Some(t),
                        max_drift,
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if err > 1.0 || !err.is_finite() {
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            continue;
        }
        let x_new = &z_new[..n];
        if !metric.chart.contains(x_new) {
            h = step * 0.25;
            if h < 1e-10 * t_end.max(1.0) {
                return Ok(Integration {
                    samples,
                    left_chart: Some(t),
                    max_drift,
                });
            }
            continue;
        }
        let drift = (metric.f_raw(x_new, &z_new[n..2 * n]) - 1.0).abs();
        if drift > tol {
            h = step * 0.5;
            if h < 1e-12 * t_end.max(1.0) {
                return Err(FinslerError::DriftExceeded { drift });
            }
            continue;
        }
        max_drift = max_drift.max(drift);
        t = if step == target - t { target } else { t + step };
        z = z_new;
        if t >= target {
            samples.push((t, z.clone()));
            next_out += 1;
        }
        let grow = if err > 0.0 {
            (0.9 * err.powf(-0.2)).min(5.0)
        } else {
            5.0
        };
        h = (step * grow).max(h.min(step));
    }
    Ok(Integration {
        samples,
        left_chart: None,
        max_drift,
    })
}

fn normalized(metric: &MetricSpec, p0: &PointTangent) -> Result<PointTangent> {
    let f = check_point(metric, p0)?;
    Ok(p0.scaled(1.0 / f))
}

fn assemble(int: Integration, n: usize, with_frame: bool) -> GeodesicPath {
    let mut path = GeodesicPath {
        t: Vec::with_capacity(int.samples.len()),
        x: Vec::with_capacity(int.samples.len()),
        y: Vec::with_capacity(int.samples.len()),
        frame: with_frame.then(Vec::new),
        left_chart: int.left_chart,
        max_drift: int.max_drift,
    };
    for (t, z) in int.samples {
        path.t.push(t);
        path.x.push(z[..n].to_vec());
        path.y.push(z[n..2 * n].to_vec());
        if let Some(fr) = path.frame.as_mut() {
            fr.push((0..n).map(|a| z[2 * n + a * n..2 * n + (a + 1) * n].to_vec()).collect());
        }
    }
    path
}

/// Unit-speed geodesic from `p0` (rescaled to `F = 1`) on `[0, t_end]`.
/// A chart exit returns the partial path with `left_chart` set.
pub fn integrate_geodesic(
    metric: &MetricSpec,
    p0: &PointTangent,
    t_end: f64,
    tol: f64,
) -> Result<GeodesicPath> {
    integrate_geodesic_sampled(metric, p0, t_end, tol, DT_OUT)
}

pub fn integrate_geodesic_sampled(
    metric: &MetricSpec,
    p0: &PointTangent,
    t_end: f64,
    tol: f64,
    dt_out: f64,
) -> Result<GeodesicPath> {
    if !(t_end > 0.0) || !(tol > 0.0) || !(dt_out > 0.0) {
        return Err(FinslerError::SpecInvalid(
            "t_end, tol and dt_out must be positive".into(),
        ));
    }
    let p = normalized(metric, p0)?;
    let n = p.dim();
    let mut z0 = p.x.clone();
    z0.extend_from_slice(&p.y);
    let int = integrate_state(metric, z0, n, false, t_end, tol, dt_out)?;
    Ok(assemble(int, n, false))
}

/// Start of the reverse geodesic through `p`: `(x, -y / F(x, -y))`.
pub fn reverse_start(metric: &MetricSpec, p: &PointTangent) -> Result<PointTangent> {
    normalized(metric, &p.scaled(-1.0))
}

/// `g_y`-orthonormal seed frame at `p` whose last vector is `y / F`.
pub fn seed_frame(metric: &MetricSpec, p: &PointTangent) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    let g = linalg::unflatten(&fundamental_tensor_at(metric, &p.x, &p.y)?, n);
    let mut vs = vec![p.y.clone()];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        vs.push(e);
    }
    let mut basis = linalg::g_orthonormalize(&g, &vs);
    basis.truncate(n);
    basis.rotate_left(1);
    Ok(basis)
}

/// Re-integrates `path` from its initial state, transporting `seed`
/// (default: [`seed_frame`]) along it.
pub fn parallel_frame(
    metric: &MetricSpec,
    path: &GeodesicPath,
    seed: Option<&[Vec<f64>]>,
    tol: f64,
) -> Result<GeodesicPath> {
    let p0 = path.point(0);
    let n = p0.dim();
    let seed = match seed {
        Some(s) => s.to_vec(),
        None => seed_frame(metric, &p0)?,
    };
    if seed.len() != n || seed.iter().any(|e| e.len() != n) {
        return Err(FinslerError::SpecInvalid("seed frame must be n vectors of length n".into()));
    }
    let dt_out = if path.len() > 1 { path.t[1] - path.t[0] } else { DT_OUT };
    let mut z0 = p0.x.clone();
    z0.extend_from_slice(&p0.y);
    for e in &seed {
        z0.extend_from_slice(e);
    }
    let t_end = path.left_chart.unwrap_or(path.length()).max(path.length());
    let int = integrate_state(metric, z0, n, true, t_end, tol, dt_out)?;
    Ok(assemble(int, n, true))
}

/// Fixed-step RK4 flow for signed time `t`; the endpoint `(x, y)`.
pub fn flow(
    metric: &MetricSpec,
    x: &[f64],
    y: &[f64],
    t: f64,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    let mut z = x.to_vec();
    z.extend_from_slice(y);
    if t == 0.0 {
        return Ok((x.to_vec(), y.to_vec()));
    }
    let h = t / steps.max(1) as f64;
    let f = |z: &[f64], s: f64| -> Result<Vec<f64>> {
        rhs(metric, z, n, false).map_err(|e| {
            if is_chart_exit(&e) {
                FinslerError::LeftChart { t: s }
            } else {
                e
            }
        })
    };
    for k in 0..steps.max(1) {
        let s = k as f64 * h;
        let k1 = f(&z, s)?;
        let k2 = f(&axpy(&z, h, &[k1.clone()], &[0.5]), s)?;
        let k3 = f(&axpy(&z, h, &[k2.clone()], &[0.5]), s)?;
        let k4 = f(&axpy(&z, h, &[k3.clone()], &[1.0]), s)?;
        z = axpy(&z, h, &[k1, k2, k3, k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
    }
    Ok((z[..n].to_vec(), z[n..].to_vec()))
}

/// Endpoint of `t -> exp_p(t w / F(w))` at `t = F(w)`.
fn exp_map(metric: &MetricSpec, x: &[f64], w: &[f64], tol: f64) -> Result<Vec<f64>> {
    let len = metric.f_raw(x, w);
    if len < 1e-14 {
        return Ok(x.to_vec());
    }
    let path = integrate_geodesic_sampled(
        metric,
        &PointTangent::new(x.to_vec(), w.to_vec()),
        len,
        tol,
        len,
    )?
    .ensure_complete()?;
    Ok(path.endpoint().to_vec())
}

fn residual(metric: &MetricSpec, p: &[f64], q: &[f64], w: &[f64], tol: f64) -> Option<Vec<f64>> {
    let e = exp_map(metric, p, w, tol).ok()?;
    Some(e.iter().zip(q).map(|(a, b)| a - b).collect())
}

/// Levenberg-Marquardt refinement of `exp_p(w) = q` from `w`.
fn refine(metric: &MetricSpec, p: &[f64], q: &[f64], mut w: Vec<f64>, tol: f64) -> (Vec<f64>, f64) {
    let n = p.len();
    let mut r = match residual(metric, p, q, &w, tol) {
        Some(r) => r,
        None => return (w, f64::INFINITY),
    };
    let mut rn = linalg::norm(&r);
    let mut lambda = 1e-6;
    for _ in 0..40 {
        if rn <= 1e-10 {
            break;
        }
        let scale = linalg::norm(&w).max(1e-3);
        let hfd = 1e-6 * scale;
        let mut jac = vec![vec![0.0; n]; n];
        let mut ok = true;
        for j in 0..n {
            let mut wp = w.clone();
            wp[j] += hfd;
            let mut wm = w.clone();
            wm[j] -= hfd;
            match (residual(metric, p, q, &wp, tol), residual(metric, p, q, &wm, tol)) {
                (Some(a), Some(b)) => {
                    for i in 0..n {
                        jac[i][j] = (a[i] - b[i]) / (2.0 * hfd);
                    }
                }
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let mut improved = false;
        for _ in 0..12 {
            // (J^T J + lambda diag) dw = -J^T r
            let mut m = vec![0.0; n * n];
            let mut rhs = vec![0.0; n];
            for a in 0..n {
                for b in 0..n {
                    let s: f64 = (0..n).map(|i| jac[i][a] * jac[i][b]).sum();
                    m[a * n + b] = s;
                }
                m[a * n + a] *= 1.0 + lambda;
                m[a * n + a] += 1e-300;
                rhs[a] = -(0..n).map(|i| jac[i][a] * r[i]).sum::<f64>();
            }
            let Some(inv) = linalg::inverse(&m, n) else {
                lambda *= 10.0;
                continue;
            };
            let dw: Vec<f64> = (0..n)
                .map(|a| (0..n).map(|b| inv[a * n + b] * rhs[b]).sum())
                .collect();
            let wn: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
            if let Some(rnew) = residual(metric, p, q, &wn, tol) {
                let nn = linalg::norm(&rnew);
                if nn < rn {
                    w = wn;
                    r = rnew;
                    rn = nn;
                    lambda = (lambda * 0.1).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (w, rn)
}

/// Forward distance `d(p, q)` by shooting, with the minimizing path.
pub fn forward_distance(
    metric: &MetricSpec,
    p: &[f64],
    q: &[f64],
    restarts: usize,
) -> Result<(f64, GeodesicPath)> {
    let n = p.len();
    let tol = 1e-9;
    if !metric.chart.contains(p) {
        return Err(FinslerError::OutOfChart { x: p.to_vec() });
    }
    if !metric.chart.contains(q) {
        return Err(FinslerError::OutOfChart { x: q.to_vec() });
    }
    let chord: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    if linalg::norm(&chord) < 1e-14 {
        let y = {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        };
        let f = metric.f_raw(p, &y);
        let path = GeodesicPath {
            t: vec![0.0],
            x: vec![p.to_vec()],
            y: vec![y.iter().map(|v| v / f).collect()],
            frame: None,
            left_chart: None,
            max_drift: 0.0,
        };
        return Ok((0.0, path));
    }
    let l0 = metric.f_raw(p, &chord);
    let t_max = 1.5 * l0;
    let count = if n == 2 { 64 } else { 512 };
    let dirs = sampling::sphere_directions(n, count);
    let dt = t_max / 200.0;
    let mut candidates: Vec<(f64, Vec<f64>)> = dirs
        .par_iter()
        .filter_map(|d| {
            let path = integrate_geodesic_sampled(
                metric,
                &PointTangent::new(p.to_vec(), d.clone()),
                t_max,
                1e-6,
                dt,
            )
            .ok()?;
            let (s, dist) = path
                .x
                .iter()
                .enumerate()
                .map(|(s, x)| (s, linalg::norm(&x.iter().zip(q).map(|(a, b)| a - b).collect::<Vec<_>>())))
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            let w: Vec<f64> = path.y[0].iter().map(|v| v * path.t[s].max(dt)).collect();
            Some((dist, w))
        })
        .collect();
    // The straight chord is always a reasonable start.
    candidates.push((f64::INFINITY, chord.clone()));
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tried: Vec<Vec<f64>> = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_residual = f64::INFINITY;
    for (_, w0) in candidates {
        if tried.len() >= restarts.max(1) + 1 {
            break;
        }
        if tried
            .iter()
            .any(|t| linalg::norm(&t.iter().zip(&w0).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-3 * l0)
        {
            continue;
        }
        tried.push(w0.clone());
        let (w, rn) = refine(metric, p, q, w0, tol);
        best_residual = best_residual.min(rn);
        if rn <= 1e-8 {
            let len = metric.f_raw(p, &w);
            if best.as_ref().is_none_or(|(l, _)| len < *l) {
                best = Some((len, w));
            }
        }
    }
    let Some((len, w)) = best else {
        return Err(FinslerError::NoConvergence {
            residual: best_residual,
        });
    };
    let path = integrate_geodesic(metric, &PointTangent::new(p.to_vec(), w), len, tol)?;
    Ok((len, path))
}

/// Quantities that [`sample_along`] can tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    F,
    Ric,
    S,
    Sdot,
    Tau,
    ScalarR,
    RicInf,
    FlagSpectrum,
}

impl Field {
    pub fn parse(name: &str) -> Option<Field> {
        Some(match name {
            "F" | "f" => Field::F,
            "Ric" | "ric" => Field::Ric,
            "S" | "s" => Field::S,
            "Sdot" | "sdot" => Field::Sdot,
            "tau" | "Tau" => Field::Tau,
            "scalarR" | "scalar-r" | "R" => Field::ScalarR,
            "Ric_inf" | "ric-inf" | "RicInf" => Field::RicInf,
            "flag" | "flag-spectrum" | "FlagSpectrum" => Field::FlagSpectrum,
            _ => return None,
        })
    }

    fn columns(self, n: usize) -> Vec<String> {
        match self {
            Field::F => vec!["F".into()],
            Field::Ric => vec!["Ric".into()],
            Field::S => vec!["S".into()],
            Field::Sdot => vec!["Sdot".into()],
            Field::Tau => vec!["tau".into()],
            Field::ScalarR => vec!["scalarR".into()],
            Field::RicInf => vec!["Ric_inf".into()],
            Field::FlagSpectrum => (1..n).map(|a| format!("K{a}")).collect(),
        }
    }
}

/// Aligned table of samples along a path.
#[derive(Debug, Clone, Serialize)]
pub struct PathTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PathTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Evaluates `fields` at every sample of `path`.
pub fn sample_along(metric: &MetricSpec, path: &GeodesicPath, fields: &[Field]) -> Result<PathTable> {
    let n = metric.dim();
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|i| format!("x{i}")));
    columns.extend((1..=n).map(|i| format!("y{i}")));
    for f in fields {
        columns.extend(f.columns(n));
    }
    let rows: Result<Vec<Vec<f64>>> = (0..path.len())
        .into_par_iter()
        .map(|s| {
            let p = path.point(s);
            let mut row = vec![path.t[s]];
            row.extend_from_slice(&p.x);
            row.extend_from_slice(&p.y);
            let fr = evaluate_all(metric, &p)?;
            for f in fields {
                match f {
                    Field::F => row.push(fr.tensor.f),
                    Field::Ric => row.push(fr.curvature.ric),
                    Field::S => row.push(fr.measure.s),
                    Field::Sdot => row.push(fr.measure.sdot),
                    Field::Tau => row.push(fr.measure.tau),
                    Field::ScalarR => row.push(fr.curvature.scalar),
                    Field::RicInf => row.push(fr.measure.ric_inf),
                    Field::FlagSpectrum => {
                        row.extend(flag_spectrum(&fr.curvature, &fr.tensor.g))
                    }
                }
            }
            Ok(row)
        })
        .collect();
    Ok(PathTable {
        columns,
        rows: rows?,
    })
}

/// `g_{x'}(E_a, E_b)` at every sample of a framed path.
pub fn frame_gram(metric: &MetricSpec, path: &GeodesicPath) -> Result<Vec<Matrix>> {
    let n = metric.dim();
    let frame = path
        .frame
        .as_ref()
        .ok_or_else(|| FinslerError::SpecInvalid("path carries no frame".into()))?;
    (0..path.len())
        .map(|s| {
            let g = linalg::unflatten(&fundamental_tensor_at(metric, &path.x[s], &path.y[s])?, n);
            Ok((0..n)
                .map(|a| (0..n).map(|b| linalg::quad(&g, &frame[s][a], &frame[s][b])).collect())
                .collect())
        })
        .collect()
}
