//! Pointwise tensor stack: fundamental tensor, Cartan tensor, spray,
//! nonlinear and Chern connections, plus horizontal and vertical
//! derivatives of tensor fields.
//!
//! Everything up to the curvature of the Chern connection is obtained by
//! propagating one Taylor jet of `F^2` of order `(2, 4)` through the
//! defining formulas. Tensor-valued jets lose one order per derivative, so
//! the connection is exact to first order in `x` and curvature exact at the
//! point. Derivatives of derived quantities beyond that use central
//! differences of tensors.

use std::sync::Arc;

use serde::Serialize;

use crate::curvature::CurvatureFrame;
use crate::error::{FinslerError, Result};
use crate::fd;
use crate::jet::{check_point, f2_taylor, Jet, PointTangent};
use crate::linalg::{zeros2, zeros3, Matrix, Tensor3};
use crate::measure::{self, MeasureFrame};
use crate::metrics::MetricSpec;
use crate::taylor::{Taylor, TaylorBasis};

/// Index position of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorFrame {
    pub at: PointTangent,
    pub f: f64,
    pub g: Matrix,
    pub g_inv: Matrix,
    /// `C_ijk`.
    pub cartan: Tensor3,
    /// `I_i`.
    pub mean_cartan: Vec<f64>,
    /// `G^i`.
    pub spray: Vec<f64>,
    /// `N^i_j`, stored `[i][j]`.
    pub nonlinear: Matrix,
    /// `Gamma^i_jk`, stored `[i][j][k]`.
    pub gamma: Tensor3,
}

impl TensorFrame {
    pub fn dim(&self) -> usize {
        self.at.dim()
    }
}

/// Tensor, curvature and measure frames from a single `(2, 4)` jet.
#[derive(Debug, Clone, Serialize)]
pub struct PointFrames {
    pub tensor: TensorFrame,
    pub curvature: CurvatureFrame,
    pub measure: MeasureFrame,
}

#[inline]
pub(crate) fn i2(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}

#[inline]
pub(crate) fn i3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

/// Jet-valued tensors at one point. Fields are flat, row-major.
pub(crate) struct Stack {
    pub n: usize,
    pub at: PointTangent,
    pub f2: Taylor,
    pub g: Vec<Taylor>,
    pub ginv: Vec<Taylor>,
    pub det: Taylor,
    pub cartan: Vec<Taylor>,
    pub spray: Vec<Taylor>,
    pub nl: Vec<Taylor>,
    pub gamma: Vec<Taylor>,
}

/// Gauss-Jordan inverse and determinant of a symmetric positive-definite
/// jet matrix. No pivoting: positive pivots are part of the contract.
fn invert(g: &[Taylor], n: usize, p: &PointTangent) -> Result<(Vec<Taylor>, Taylor)> {
    let basis = g[0].basis().clone();
    let mut a = g.to_vec();
    let mut inv: Vec<Taylor> = (0..n * n)
        .map(|k| Taylor::constant(&basis, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    let mut det = Taylor::constant(&basis, 1.0);
    for c in 0..n {
        let pivot = a[i2(n, c, c)].clone();
        if !(pivot.val() > 0.0) {
            return Err(FinslerError::NotPositiveDefinite {
                x: p.x.clone(),
                y: p.y.clone(),
            });
        }
        det = &det * &pivot;
        let r = crate::taylor::Scalar::recip(pivot);
        for j in 0..n {
            a[i2(n, c, j)] = &a[i2(n, c, j)] * &r;
            inv[i2(n, c, j)] = &inv[i2(n, c, j)] * &r;
        }
        for row in 0..n {
            if row == c {
                continue;
            }
            let factor = a[i2(n, row, c)].clone();
            for j in 0..n {
                let da = &factor * &a[i2(n, c, j)];
                let di = &factor * &inv[i2(n, c, j)];
                a[i2(n, row, j)] = a[i2(n, row, j)].clone() - da;
                inv[i2(n, row, j)] = inv[i2(n, row, j)].clone() - di;
            }
        }
    }
    Ok((inv, det))
}

fn sum_taylor(basis: &Arc<TaylorBasis>, terms: impl Iterator<Item = Taylor>) -> Taylor {
    terms.fold(Taylor::constant(basis, 0.0), |acc, t| acc + t)
}

/// `delta_k T = d_{x^k} T - N^s_k d_{y^s} T` for a jet-valued scalar.
pub(crate) fn delta(t: &Taylor, k: usize, nl: &[Taylor], n: usize) -> Taylor {
    let mut out = t.dx(k);
    for s in 0..n {
        out = out - &nl[i2(n, s, k)] * &t.dy(s);
    }
    out
}

struct Core {
    basis: Arc<TaylorBasis>,
    f2: Taylor,
    g: Vec<Taylor>,
    ginv: Vec<Taylor>,
    det: Taylor,
    spray: Vec<Taylor>,
}

fn build_core(metric: &MetricSpec, p: &PointTangent, order_x: usize, order_y: usize) -> Result<Core> {
    check_point(metric, p)?;
    let n = p.dim();
    let basis = TaylorBasis::get(n, order_x, order_y);
    let ys: Vec<Taylor> = (0..n)
        .map(|i| Taylor::variable(&basis, n + i, p.y[i]))
        .collect();
    let f2 = f2_taylor(metric, p, &basis);
    let f2y: Vec<Taylor> = (0..n).map(|i| f2.dy(i)).collect();
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            g.push(f2y[i].dy(j) * 0.5);
        }
    }
    let (ginv, det) = invert(&g, n, p)?;
    let spray_rhs: Vec<Taylor> = (0..n)
        .map(|l| {
            let mixed = sum_taylor(&basis, (0..n).map(|k| &f2y[l].dx(k) * &ys[k]));
            mixed - f2.dx(l)
        })
        .collect();
    let spray: Vec<Taylor> = (0..n)
        .map(|i| sum_taylor(&basis, (0..n).map(|l| &ginv[i2(n, i, l)] * &spray_rhs[l])) * 0.25)
        .collect();
    Ok(Core {
        basis,
        f2,
        g,
        ginv,
        det,
        spray,
    })
}

/// `G^i(x, y)`, and `N^i_j` as `[i][j]` when requested.
pub(crate) fn spray_at(
    metric: &MetricSpec,
    p: &PointTangent,
    with_connection: bool,
) -> Result<(Vec<f64>, Option<Matrix>)> {
    let n = p.dim();
    let core = build_core(metric, p, 1, if with_connection { 3 } else { 2 })?;
    let g: Vec<f64> = core.spray.iter().map(|t| t.val()).collect();
    let nl = with_connection.then(|| {
        (0..n)
            .map(|i| (0..n).map(|j| core.spray[i].dy(j).val()).collect())
            .collect()
    });
    Ok((g, nl))
}

pub(crate) fn build_stack(
    metric: &MetricSpec,
    p: &PointTangent,
    order_x: usize,
    order_y: usize,
) -> Result<Stack> {
    let n = p.dim();
    let Core {
        basis,
        f2,
        g,
        ginv,
        det,
        spray,
    } = build_core(metric, p, order_x, order_y)?;
    let mut cartan = vec![Taylor::constant(&basis, 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (a, b, c) = sorted3(i, j, k);
                cartan[i3(n, i, j, k)] = g[i2(n, a, b)].dy(c) * 0.5;
            }
        }
    }
    let mut nl = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            nl.push(spray[i].dy(j));
        }
    }
    let mut dg = vec![Taylor::constant(&basis, 0.0); n * n * n];
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let v = delta(&g[i2(n, i, j)], k, &nl, n);
                dg[i3(n, j, i, k)] = v.clone();
                dg[i3(n, i, j, k)] = v;
            }
        }
    }
    let mut gamma = vec![Taylor::constant(&basis, 0.0); n * n * n];
    for j in 0..n {
        for k in j..n {
            let lowered: Vec<Taylor> = (0..n)
                .map(|l| {
                    dg[i3(n, j, l, k)].clone() + dg[i3(n, l, k, j)].clone() - dg[i3(n, j, k, l)].clone()
                })
                .collect();
            for i in 0..n {
                let v = sum_taylor(&basis, (0..n).map(|l| &ginv[i2(n, i, l)] * &lowered[l])) * 0.5;
                gamma[i3(n, i, k, j)] = v.clone();
                gamma[i3(n, i, j, k)] = v;
            }
        }
    }
    Ok(Stack {
        n,
        at: p.clone(),
        f2,
        g,
        ginv,
        det,
        cartan,
        spray,
        nl,
        gamma,
    })
}

fn sorted3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let mut v = [a, b, c];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

fn vals2(t: &[Taylor], n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| t[i2(n, i, j)].val()).collect())
        .collect()
}

fn vals3(t: &[Taylor], n: usize) -> Tensor3 {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| t[i3(n, i, j, k)].val()).collect())
                .collect()
        })
        .collect()
}

impl Stack {
    pub(crate) fn tensor_frame(&self) -> TensorFrame {
        let n = self.n;
        let g_inv = vals2(&self.ginv, n);
        let cartan = vals3(&self.cartan, n);
        let mean_cartan = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += g_inv[j][k] * cartan[i][j][k];
                    }
                }
                s
            })
            .collect();
        TensorFrame {
            at: self.at.clone(),
            f: self.f2.val().max(0.0).sqrt(),
            g: vals2(&self.g, n),
            g_inv,
            cartan,
            mean_cartan,
            spray: self.spray.iter().map(|t| t.val()).collect(),
            nonlinear: vals2(&self.nl, n),
            gamma: vals3(&self.gamma, n),
        }
    }
}

/// Tensor frame from a `(1, 3)` jet.
pub fn tensor_frame(metric: &MetricSpec, p: &PointTangent) -> Result<TensorFrame> {
    Ok(build_stack(metric, p, 1, 3)?.tensor_frame())
}

/// Tensor, curvature and measure frames at `p` from one `(2, 4)` jet.
pub fn evaluate_all(metric: &MetricSpec, p: &PointTangent) -> Result<PointFrames> {
    let stack = build_stack(metric, p, 2, 4)?;
    let tensor = stack.tensor_frame();
    let ext = crate::curvature::Extended::new(&stack, &tensor);
    let curvature = CurvatureFrame::from_parts(&stack, &tensor, &ext);
    let ln_sigma = measure::ln_density_jet(metric, &p.x, 2)?;
    let measure = MeasureFrame::from_parts(&stack, &tensor, &curvature, &ln_sigma);
    Ok(PointFrames {
        tensor,
        curvature,
        measure,
    })
}

/// `g_ij(x, u)` as a flat row-major array from a `(0, 2)` jet.
pub fn fundamental_tensor_at(metric: &MetricSpec, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let p = PointTangent::new(x.to_vec(), u.to_vec());
    check_point(metric, &p)?;
    let n = x.len();
    let basis = TaylorBasis::get(n, 0, 2);
    let f2 = f2_taylor(metric, &p, &basis);
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i2(n, i, j)] = 0.5 * f2.dy(i).dy(j).val();
        }
    }
    Ok(g)
}

/// `g_ij = 1/2 F^2_{y^i y^j}` and its inverse from a jet with `order_y >= 2`.
pub fn fundamental_tensor(jet: &Jet) -> Result<(Matrix, Matrix)> {
    let n = jet.center.dim();
    if jet.order_y < 2 {
        return Err(FinslerError::OrderUnsupported {
            order_x: jet.order_x,
            order_y: jet.order_y,
        });
    }
    let mut g = zeros2(n);
    for i in 0..n {
        for j in 0..n {
            g[i][j] = 0.5 * jet.partial(&[], &[i, j]).expect("order_y >= 2");
        }
    }
    let flat = crate::linalg::flatten(&g);
    if crate::linalg::min_eigenvalue_sym(&flat, n) <= 0.0 {
        return Err(FinslerError::NotPositiveDefinite {
            x: jet.center.x.clone(),
            y: jet.center.y.clone(),
        });
    }
    let inv = crate::linalg::inverse(&flat, n).ok_or_else(|| FinslerError::NotPositiveDefinite {
        x: jet.center.x.clone(),
        y: jet.center.y.clone(),
    })?;
    Ok((g, crate::linalg::unflatten(&inv, n)))
}

/// `C_ijk = 1/4 F^2_{y^i y^j y^k}` and `I_i = g^{jk} C_ijk`.
pub fn cartan_tensor(jet: &Jet) -> Result<(Tensor3, Vec<f64>)> {
    let n = jet.center.dim();
    if jet.order_y < 3 {
        return Err(FinslerError::OrderUnsupported {
            order_x: jet.order_x,
            order_y: jet.order_y,
        });
    }
    let (_, g_inv) = fundamental_tensor(jet)?;
    let mut c = zeros3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                c[i][j][k] = 0.25 * jet.partial(&[], &[i, j, k]).expect("order_y >= 3");
            }
        }
    }
    let mean = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += g_inv[j][k] * c[i][j][k];
                }
            }
            s
        })
        .collect();
    Ok((c, mean))
}

/// `G^i = 1/4 g^{il} (F^2_{y^l x^k} y^k - F^2_{x^l})`.
pub fn spray(jet: &Jet, g_inv: &Matrix) -> Result<Vec<f64>> {
    let n = jet.center.dim();
    if jet.order_x < 1 || jet.order_y < 1 {
        return Err(FinslerError::OrderUnsupported {
            order_x: jet.order_x,
            order_y: jet.order_y,
        });
    }
    let y = &jet.center.y;
    let rhs: Vec<f64> = (0..n)
        .map(|l| {
            let mixed: f64 = (0..n)
                .map(|k| jet.partial(&[k], &[l]).expect("order >= (1,1)") * y[k])
                .sum();
            mixed - jet.partial(&[l], &[]).expect("order_x >= 1")
        })
        .collect();
    Ok((0..n)
        .map(|i| 0.25 * (0..n).map(|l| g_inv[i][l] * rhs[l]).sum::<f64>())
        .collect())
}

/// `N^i_j = dG^i/dy^j`, stored `[i][j]`.
pub fn nonlinear_connection(metric: &MetricSpec, p: &PointTangent) -> Result<Matrix> {
    Ok(tensor_frame(metric, p)?.nonlinear)
}

/// `Gamma^i_jk`, stored `[i][j][k]`.
pub fn chern_connection(metric: &MetricSpec, p: &PointTangent) -> Result<Tensor3> {
    Ok(tensor_frame(metric, p)?.gamma)
}

/// Point moved along the horizontal lift of `e_k`.
fn horizontal_shift(p: &PointTangent, nl: &Matrix, k: usize, s: f64) -> PointTangent {
    let mut x = p.x.clone();
    x[k] += s;
    let y = p
        .y
        .iter()
        .enumerate()
        .map(|(i, v)| v - s * nl[i][k])
        .collect();
    PointTangent::new(x, y)
}

fn check_stencil(metric: &MetricSpec, p: &PointTangent, h: f64) -> Result<()> {
    for k in 0..p.dim() {
        for s in [-h, h] {
            let mut x = p.x.clone();
            x[k] += s;
            if !metric.chart.contains(&x) {
                return Err(FinslerError::StencilLeavesChart { x });
            }
        }
    }
    Ok(())
}

/// `delta T / delta x^k` for every `k`, by central differences along the
/// horizontal lift of the coordinate directions.
pub fn horizontal_deriv_scalar<F>(metric: &MetricSpec, p: &PointTangent, field: F) -> Result<Vec<f64>>
where
    F: Fn(&PointTangent) -> Result<f64>,
{
    let frame = tensor_frame(metric, p)?;
    let raw = horizontal_partials(metric, p, &frame.nonlinear, &|q| Ok(vec![field(q)?]))?;
    Ok(raw.into_iter().map(|v| v[0]).collect())
}

/// `delta_k` of each component, `out[k][component]`.
pub(crate) fn horizontal_partials(
    metric: &MetricSpec,
    p: &PointTangent,
    nl: &Matrix,
    field: &dyn Fn(&PointTangent) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let h = p.x.iter().fold(0.0f64, |m, v| m.max(fd::step_for(*v)));
    horizontal_partials_with(metric, p, nl, field, h, Stencil::Central)
}

/// Difference scheme for horizontal partials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    /// Three-point forward formula with one Richardson level.
    Forward,
}

pub(crate) fn horizontal_partials_with(
    metric: &MetricSpec,
    p: &PointTangent,
    nl: &Matrix,
    field: &dyn Fn(&PointTangent) -> Result<Vec<f64>>,
    h: f64,
    stencil: Stencil,
) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    match stencil {
        Stencil::Central => {
            check_stencil(metric, p, h)?;
            (0..n)
                .map(|k| fd::derivative_along(|s| field(&horizontal_shift(p, nl, k, s)), h))
                .collect()
        }
        Stencil::Forward => {
            check_stencil(metric, p, 2.0 * h)?;
            (0..n)
                .map(|k| fd::forward_derivative(|s| field(&horizontal_shift(p, nl, k, s)), h))
                .collect()
        }
    }
}

/// Horizontal covariant derivative `T_{...|k}` of a tensor field given as
/// flat row-major components with slot kinds `valence`. The result has one
/// extra lower index appended last.
pub fn horizontal_deriv_tensor<F>(
    metric: &MetricSpec,
    p: &PointTangent,
    field: F,
    valence: &[Slot],
) -> Result<Vec<f64>>
where
    F: Fn(&PointTangent) -> Result<Vec<f64>>,
{
    let frame = tensor_frame(metric, p)?;
    let t0 = field(p)?;
    let raw = horizontal_partials(metric, p, &frame.nonlinear, &field)?;
    Ok(covariant_correction(&t0, &raw, &frame.gamma, valence, p.dim()))
}

/// [`horizontal_deriv_tensor`] with an explicit step and stencil.
pub fn horizontal_deriv_tensor_with<F>(
    metric: &MetricSpec,
    p: &PointTangent,
    field: F,
    valence: &[Slot],
    h: f64,
    stencil: Stencil,
) -> Result<Vec<f64>>
where
    F: Fn(&PointTangent) -> Result<Vec<f64>>,
{
    let frame = tensor_frame(metric, p)?;
    let t0 = field(p)?;
    let raw = horizontal_partials_with(metric, p, &frame.nonlinear, &field, h, stencil)?;
    Ok(covariant_correction(&t0, &raw, &frame.gamma, valence, p.dim()))
}

/// Adds the connection terms to coordinate horizontal derivatives
/// `raw[k][component]`: `+Gamma` per upper slot, `-Gamma` per lower slot.
pub(crate) fn covariant_correction(
    t0: &[f64],
    raw: &[Vec<f64>],
    gamma: &Tensor3,
    valence: &[Slot],
    n: usize,
) -> Vec<f64> {
    let rank = valence.len();
    let size = n.pow(rank as u32);
    assert_eq!(t0.len(), size, "component count does not match valence");
    let mut out = vec![0.0; size * n];
    let mut idx = vec![0usize; rank];
    for c in 0..size {
        let mut rem = c;
        for r in (0..rank).rev() {
            idx[r] = rem % n;
            rem /= n;
        }
        for k in 0..n {
            let mut v = raw[k][c];
            for (r, slot) in valence.iter().enumerate() {
                let stride = n.pow((rank - 1 - r) as u32);
                let base = c - idx[r] * stride;
                for s in 0..n {
                    let other = t0[base + s * stride];
                    match slot {
                        Slot::Upper => v += gamma[idx[r]][k][s] * other,
                        Slot::Lower => v -= gamma[s][idx[r]][k] * other,
                    }
                }
            }
            out[c * n + k] = v;
        }
    }
    out
}

/// Vertical derivative `T_{...;k} = dT/dy^k`, extra index appended last.
pub fn vertical_deriv_tensor<F>(metric: &MetricSpec, p: &PointTangent, field: F) -> Result<Vec<f64>>
where
    F: Fn(&PointTangent) -> Result<Vec<f64>>,
{
    check_point(metric, p)?;
    let n = p.dim();
    let ynorm = crate::linalg::norm(&p.y);
    let h = fd::TENSOR_STEP * ynorm.max(1.0);
    let parts: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            fd::derivative_along(
                |s| {
                    let mut q = p.clone();
                    q.y[k] += s;
                    field(&q)
                },
                h,
            )
        })
        .collect::<Result<_>>()?;
    let size = parts[0].len();
    let mut out = vec![0.0; size * n];
    for c in 0..size {
        for k in 0..n {
            out[c * n + k] = parts[k][c];
        }
    }
    Ok(out)
}
