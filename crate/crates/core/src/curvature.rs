//! Chern curvature `R`, non-Riemannian curvature `P`, Landsberg tensor,
//! flag/Ricci/scalar curvatures and the g-Ricci tensors.
//!
//! Index conventions:
//! - `R_j^i_kl = delta_k Gamma^i_jl - delta_l Gamma^i_jk + Gamma^i_km Gamma^m_jl - Gamma^i_lm Gamma^m_jk`, stored `[j][i][k][l]`
//! - `P_j^i_kl = -dGamma^i_jk/dy^l`, stored `[j][i][k][l]`
//! - `R^i_kl = y^j R_j^i_kl`, `R^i_k = R^i_kl y^l`, `R_jk = g_ij R^i_k`
//! - `bar R_ij = g^kl g_ih R_k^h_jl`

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::jet::PointTangent;
use crate::linalg::{self, zeros2, zeros3, zeros4, Matrix, Tensor3, Tensor4};
use crate::metrics::MetricSpec;
use crate::taylor::Taylor;
use crate::tensors::{build_stack, delta, i2, i3, Stack, TensorFrame};

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureFrame {
    pub at: PointTangent,
    /// `R_j^i_kl`, `[j][i][k][l]`.
    pub r4: Tensor4,
    /// `P_j^i_kl`, `[j][i][k][l]`.
    pub p4: Tensor4,
    /// `L^i_jk`, `[i][j][k]`.
    pub landsberg: Tensor3,
    /// `J_i`.
    pub mean_landsberg: Vec<f64>,
    /// `R^i_kl`, `[i][k][l]`.
    pub r3: Tensor3,
    /// `R^i_k`, `[i][k]`.
    pub flag_up: Matrix,
    /// `R_jk`.
    pub flag_low: Matrix,
    pub ric: f64,
    pub bar_ric: Matrix,
    pub tilde_ric: Matrix,
    pub scalar: f64,
    /// `C_{ijk|l}`, `[i][j][k][l]`.
    pub cartan_h: Tensor4,
    /// `I_{s|k}`, `[s][k]`.
    pub mean_cartan_h: Matrix,
}

/// Value-level quantities that need one more derivative of the stack.
pub(crate) struct Extended {
    /// `delta_l Gamma^i_jk`, `[i][j][k][l]`.
    pub dgamma: Tensor4,
    pub p4: Tensor4,
    pub landsberg: Tensor3,
    pub cartan_h: Tensor4,
    pub mean_cartan_h: Matrix,
}

impl Extended {
    pub(crate) fn new(s: &Stack, tf: &TensorFrame) -> Self {
        let n = s.n;
        let gam = &tf.gamma;
        let mut dgamma = zeros4(n);
        let mut p4 = zeros4(n);
        let mut landsberg = zeros3(n);
        for i in 0..n {
            let gyy: Vec<Taylor> = (0..n).map(|j| s.spray[i].dy(j)).collect();
            for j in 0..n {
                for k in 0..n {
                    let gm = &s.gamma[i3(n, i, j, k)];
                    for l in 0..n {
                        dgamma[i][j][k][l] = delta(gm, l, &s.nl, n).val();
                        p4[j][i][k][l] = -gm.dy(l).val();
                    }
                    landsberg[i][j][k] = gyy[j].dy(k).val() - gam[i][j][k];
                }
            }
        }
        let c = &tf.cartan;
        let mut cartan_h = zeros4(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = delta(&s.cartan[i3(n, i, j, k)], l, &s.nl, n).val();
                        for t in 0..n {
                            v -= gam[t][i][l] * c[t][j][k]
                                + gam[t][j][l] * c[i][t][k]
                                + gam[t][k][l] * c[i][j][t];
                        }
                        cartan_h[i][j][k][l] = v;
                    }
                }
            }
        }
        let basis = s.f2.basis().clone();
        let mean_jet: Vec<Taylor> = (0..n)
            .map(|i| {
                let mut acc = Taylor::constant(&basis, 0.0);
                for j in 0..n {
                    for k in 0..n {
                        acc = acc + &s.ginv[i2(n, j, k)] * &s.cartan[i3(n, i, j, k)];
                    }
                }
                acc
            })
            .collect();
        let mut mean_cartan_h = zeros2(n);
        for a in 0..n {
            for k in 0..n {
                let mut v = delta(&mean_jet[a], k, &s.nl, n).val();
                for t in 0..n {
                    v -= gam[t][a][k] * tf.mean_cartan[t];
                }
                mean_cartan_h[a][k] = v;
            }
        }
        Extended {
            dgamma,
            p4,
            landsberg,
            cartan_h,
            mean_cartan_h,
        }
    }
}

impl CurvatureFrame {
    pub(crate) fn from_parts(s: &Stack, tf: &TensorFrame, ext: &Extended) -> Self {
        let n = s.n;
        let gam = &tf.gamma;
        let dg = &ext.dgamma;
        let y = &tf.at.y;
        let g = &tf.g;
        let gi = &tf.g_inv;
        let mut r4 = zeros4(n);
        for j in 0..n {
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = dg[i][j][l][k] - dg[i][j][k][l];
                        for m in 0..n {
                            v += gam[i][k][m] * gam[m][j][l] - gam[i][l][m] * gam[m][j][k];
                        }
                        r4[j][i][k][l] = v;
                    }
                }
            }
        }
        let mut r3 = zeros3(n);
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    r3[i][k][l] = (0..n).map(|j| y[j] * r4[j][i][k][l]).sum();
                }
            }
        }
        let mut flag_up = zeros2(n);
        for i in 0..n {
            for k in 0..n {
                flag_up[i][k] = (0..n).map(|l| r3[i][k][l] * y[l]).sum();
            }
        }
        let mut flag_low = zeros2(n);
        for j in 0..n {
            for k in 0..n {
                flag_low[j][k] = (0..n).map(|i| g[j][i] * flag_up[i][k]).sum();
            }
        }
        let ric = (0..n).map(|k| flag_up[k][k]).sum();
        let mut bar_ric = zeros2(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        for h in 0..n {
                            v += gi[k][l] * g[i][h] * r4[k][h][j][l];
                        }
                    }
                }
                bar_ric[i][j] = v;
            }
        }
        let mut tilde_ric = zeros2(n);
        for i in 0..n {
            for j in 0..n {
                tilde_ric[i][j] = 0.5 * (bar_ric[i][j] + bar_ric[j][i]);
            }
        }
        let mut scalar = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    scalar += gi[i][j] * r4[i][k][k][j];
                }
            }
        }
        let mut mean_landsberg = vec![0.0; n];
        for (i, ji) in mean_landsberg.iter_mut().enumerate() {
            for p in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        *ji += g[i][p] * gi[j][k] * ext.landsberg[p][j][k];
                    }
                }
            }
        }
        CurvatureFrame {
            at: tf.at.clone(),
            r4,
            p4: ext.p4.clone(),
            landsberg: ext.landsberg.clone(),
            mean_landsberg,
            r3,
            flag_up,
            flag_low,
            ric,
            bar_ric,
            tilde_ric,
            scalar,
            cartan_h: ext.cartan_h.clone(),
            mean_cartan_h: ext.mean_cartan_h.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.at.dim()
    }
}

/// Curvature frame from a `(2, 4)` jet.
pub fn curvature_frame(metric: &MetricSpec, p: &PointTangent) -> Result<CurvatureFrame> {
    let stack = build_stack(metric, p, 2, 4)?;
    let tf = stack.tensor_frame();
    let ext = Extended::new(&stack, &tf);
    Ok(CurvatureFrame::from_parts(&stack, &tf, &ext))
}

/// Tensor and curvature frames without the measure.
pub(crate) fn geometry_frames(
    metric: &MetricSpec,
    p: &PointTangent,
) -> Result<(TensorFrame, CurvatureFrame)> {
    let stack = build_stack(metric, p, 2, 4)?;
    let tf = stack.tensor_frame();
    let ext = Extended::new(&stack, &tf);
    let cf = CurvatureFrame::from_parts(&stack, &tf, &ext);
    Ok((tf, cf))
}

pub fn chern_riemann(metric: &MetricSpec, p: &PointTangent) -> Result<Tensor4> {
    Ok(curvature_frame(metric, p)?.r4)
}

#[allow(non_snake_case)]
pub fn chern_P(metric: &MetricSpec, p: &PointTangent) -> Result<Tensor4> {
    Ok(curvature_frame(metric, p)?.p4)
}

/// `L^i_jk` and `J_i`.
pub fn landsberg(metric: &MetricSpec, p: &PointTangent) -> Result<(Tensor3, Vec<f64>)> {
    let c = curvature_frame(metric, p)?;
    Ok((c.landsberg, c.mean_landsberg))
}

/// `K(P, y) = R_jk v^j v^k / (F^2 g(v,v) - g(y,v)^2)` for the flag spanned
/// by `y` and `v`.
pub fn flag_curvature(curv: &CurvatureFrame, g: &Matrix, v: &[f64]) -> Result<f64> {
    let y = &curv.at.y;
    let f2 = linalg::quad(g, y, y);
    let gyv = linalg::quad(g, y, v);
    let gvv = linalg::quad(g, v, v);
    let denom = f2 * gvv - gyv * gyv;
    if !(denom > 1e-12 * f2 * gvv) {
        return Err(FinslerError::DegenerateFlag);
    }
    Ok(linalg::quad(&curv.flag_low, v, v) / denom)
}

/// Flag curvatures of a `g_y`-orthonormal basis diagonalising the flag
/// operator on `y^perp`, ascending.
pub fn flag_spectrum(curv: &CurvatureFrame, g: &Matrix) -> Vec<f64> {
    let n = curv.dim();
    let y = &curv.at.y;
    let mut seeds = vec![y.clone()];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        seeds.push(e);
    }
    let basis = linalg::g_orthonormalize(g, &seeds);
    let f2 = linalg::quad(g, y, y);
    let perp = &basis[1..n.min(basis.len())];
    let m = perp.len();
    let mut mat = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let sym = 0.5
                * (linalg::quad(&curv.flag_low, &perp[a], &perp[b])
                    + linalg::quad(&curv.flag_low, &perp[b], &perp[a]));
            mat[a * m + b] = sym / f2;
        }
    }
    linalg::sym_eigen(&mat, m).0
}

pub fn ricci(curv: &CurvatureFrame) -> f64 {
    curv.ric
}

/// `(bar R_ij, tilde R_ij)`.
pub fn g_ricci(curv: &CurvatureFrame) -> (Matrix, Matrix) {
    (curv.bar_ric.clone(), curv.tilde_ric.clone())
}

pub fn scalar_curvature(curv: &CurvatureFrame) -> f64 {
    curv.scalar
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_curvature_vanishes() {
        let e = MetricSpec::euclidean(2);
        let c = curvature_frame(&e, &PointTangent::new(vec![0.3, 0.1], vec![1.0, 2.0])).unwrap();
        assert_eq!(c.ric, 0.0);
        assert_eq!(c.scalar, 0.0);
        assert!(c.r4.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_sphere_constant_curvature() {
        let s = MetricSpec::sphere(2, 1.0);
        let p = PointTangent::new(vec![0.4, -0.3], vec![0.7, 0.2]);
        let stack = build_stack(&s, &p, 2, 4).unwrap();
        let tf = stack.tensor_frame();
        let c = curvature_frame(&s, &p).unwrap();
        let k = flag_curvature(&c, &tf.g, &[0.1, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-10, "{k}");
        assert!((c.scalar - 2.0).abs() < 1e-10);
        let f2 = linalg::quad(&tf.g, &p.y, &p.y);
        assert!((c.ric - f2).abs() < 1e-10 * f2);
        assert!(matches!(
            flag_curvature(&c, &tf.g, &[1.4, 0.4]),
            Err(FinslerError::DegenerateFlag)
        ));
    }
}
