//! Volume densities, distortion, S-curvature and weighted Ricci curvature.
//!
//! The distortion is `tau = ln(sqrt(det g) / sigma)`.

use serde::Serialize;

use crate::curvature::CurvatureFrame;
use crate::error::{FinslerError, Result};
use crate::fd;
use crate::geodesics;
use crate::jet::{check_point, PointTangent};
use crate::linalg::{self, zeros2, Matrix};
use crate::metrics::{MeasureSpec, MetricSpec};
use crate::quadrature;
use crate::taylor::{Scalar, Taylor, TaylorBasis};
use crate::tensors::{delta, evaluate_all, Stack, TensorFrame};

/// `Ric^N` value; `NegInfinity` is the flagged sentinel for `N = n` with
/// nonvanishing S-curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum WeightedRicci {
    Finite(f64),
    NegInfinity,
}

/// Choice of `N` in `Ric^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NValue {
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureFrame {
    pub at: PointTangent,
    pub sigma: f64,
    pub tau: f64,
    /// `tau_{|i}`.
    pub tau_grad: Vec<f64>,
    /// `tau_{|i|j}`, `[i][j]`.
    pub tau_hess: Matrix,
    /// `tau_{|k;l}`, `[k][l]`.
    pub tau_hv: Matrix,
    pub s: f64,
    pub sdot: f64,
    pub ric_inf: f64,
    /// `Ric^n`.
    pub ric_n: WeightedRicci,
}

/// `ln sigma` as a jet in `x` only, basis `(n, order_x, 0)`.
pub fn ln_density_jet(metric: &MetricSpec, x: &[f64], order_x: usize) -> Result<Taylor> {
    let n = x.len();
    if !metric.chart.contains(x) {
        return Err(FinslerError::OutOfChart { x: x.to_vec() });
    }
    let basis = TaylorBasis::get(n, order_x, 0);
    let xs: Vec<Taylor> = (0..n).map(|i| Taylor::variable(&basis, i, x[i])).collect();
    match &metric.measure {
        MeasureSpec::ExplicitDensity(d) => Ok(d.ln_sigma(&xs)),
        MeasureSpec::BusemannHausdorff { quadrature } => ln_bh(metric, &xs, *quadrature),
    }
}

/// `ln sigma_B = ln Vol(B^n) - ln((1/n) sum_u w_u F(x,u)^{-n})`.
fn ln_bh<T: Scalar>(metric: &MetricSpec, xs: &[T], budget: usize) -> Result<T> {
    let n = xs.len();
    let rule = quadrature::sphere_rule(n, budget);
    let mut acc: Option<T> = None;
    for (u, w) in &rule {
        let us: Vec<T> = u.iter().map(|v| xs[0].constant_like(*v)).collect();
        let term = metric.f_squared(xs, &us).powf(-(n as f64) / 2.0) * *w;
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    let vol = acc.expect("nonempty rule") / n as f64;
    let v = vol.value();
    if !(v.is_finite() && v > 1e-300) {
        return Err(FinslerError::QuadratureUnderflow { volume: v });
    }
    Ok(-vol.ln() + quadrature::unit_ball_volume(n).ln())
}

/// Busemann-Hausdorff density `sigma_B(x)` with a node budget.
pub fn bh_density(metric: &MetricSpec, x: &[f64], quadrature: usize) -> Result<f64> {
    if !metric.chart.contains(x) {
        return Err(FinslerError::OutOfChart { x: x.to_vec() });
    }
    Ok(ln_bh(metric, x, quadrature)?.exp())
}

/// Density of the metric's configured measure at `x`.
pub fn density(metric: &MetricSpec, x: &[f64]) -> Result<f64> {
    Ok(ln_density_jet(metric, x, 0)?.val().exp())
}

/// `tau(x, y)`.
pub fn distortion(metric: &MetricSpec, p: &PointTangent) -> Result<f64> {
    check_point(metric, p)?;
    let n = p.dim();
    let g = crate::tensors::fundamental_tensor_at(metric, &p.x, &p.y)?;
    let det = linalg::det(&g, n);
    if !(det > 0.0) {
        return Err(FinslerError::NotPositiveDefinite {
            x: p.x.clone(),
            y: p.y.clone(),
        });
    }
    Ok(0.5 * det.ln() - ln_density_jet(metric, &p.x, 0)?.val())
}

/// `(tau_{|i}, tau_{|i|j})`.
pub fn tau_derivatives(metric: &MetricSpec, p: &PointTangent) -> Result<(Vec<f64>, Matrix)> {
    let m = evaluate_all(metric, p)?.measure;
    Ok((m.tau_grad, m.tau_hess))
}

impl MeasureFrame {
    pub(crate) fn from_parts(
        s: &Stack,
        tf: &TensorFrame,
        curv: &CurvatureFrame,
        ln_sigma: &Taylor,
    ) -> Self {
        let n = s.n;
        let basis = s.f2.basis().clone();
        let ln_sigma = ln_sigma.embed(&basis, true);
        let tau = s.det.clone().ln() * 0.5 - ln_sigma.clone();
        let grad_jet: Vec<Taylor> = (0..n).map(|i| delta(&tau, i, &s.nl, n)).collect();
        let tau_grad: Vec<f64> = grad_jet.iter().map(|t| t.val()).collect();
        let mut tau_hess = zeros2(n);
        let mut tau_hv = zeros2(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = delta(&grad_jet[i], j, &s.nl, n).val();
                for k in 0..n {
                    v -= tf.gamma[k][i][j] * tau_grad[k];
                }
                tau_hess[i][j] = v;
                tau_hv[i][j] = grad_jet[i].dy(j).val();
            }
        }
        let y = &tf.at.y;
        let s_val = linalg::dot(&tau_grad, y);
        let sdot = linalg::quad(&tau_hess, y, y);
        let ric_inf = curv.ric + sdot;
        let ric_n = if s_val.abs() <= 1e-6 * tf.f {
            WeightedRicci::Finite(ric_inf)
        } else {
            WeightedRicci::NegInfinity
        };
        MeasureFrame {
            at: tf.at.clone(),
            sigma: ln_sigma.val().exp(),
            tau: tau.val(),
            tau_grad,
            tau_hess,
            tau_hv,
            s: s_val,
            sdot,
            ric_inf,
            ric_n,
        }
    }
}

pub fn measure_frame(metric: &MetricSpec, p: &PointTangent) -> Result<MeasureFrame> {
    Ok(evaluate_all(metric, p)?.measure)
}

/// Step in `t` for the geodesic stencil of [`s_curvature`].
pub const S_STEP: f64 = 1e-2;

/// `(S, S')` by differentiating `tau` along the geodesic through `p`
/// (five-point stencil in arc length, rescaled to the length of `y`).
pub fn s_curvature(metric: &MetricSpec, p: &PointTangent) -> Result<(f64, f64)> {
    let f = check_point(metric, p)?;
    let y0: Vec<f64> = p.y.iter().map(|v| v / f).collect();
    let h = S_STEP;
    let mut taus = [0.0; 5];
    for (slot, k) in (-2i32..=2).enumerate() {
        let t = k as f64 * h;
        let (x, y) = geodesics::flow(metric, &p.x, &y0, t, 20 * k.unsigned_abs().max(1) as usize)?;
        taus[slot] = distortion(metric, &PointTangent::new(x, y))?;
    }
    Ok((
        f * fd::five_point_first(&taus, h),
        f * f * fd::five_point_second(&taus, h),
    ))
}

/// `Ric^N = Ric + S' - S^2/(N - n)`; `Ric^n` is finite only when `S = 0`.
pub fn weighted_ricci(
    curv: &CurvatureFrame,
    mf: &MeasureFrame,
    n_value: NValue,
) -> Result<WeightedRicci> {
    let n = curv.dim() as f64;
    match n_value {
        NValue::Infinity => Ok(WeightedRicci::Finite(mf.ric_inf)),
        NValue::Finite(big_n) if big_n < n => Err(FinslerError::NValueInvalid {
            n_value: big_n,
            dim: curv.dim(),
        }),
        NValue::Finite(big_n) if big_n == n => Ok(mf.ric_n),
        NValue::Finite(big_n) => Ok(WeightedRicci::Finite(
            mf.ric_inf - mf.s * mf.s / (big_n - n),
        )),
    }
}
