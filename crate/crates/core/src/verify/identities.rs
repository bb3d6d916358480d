use rayon::prelude::*;
use serde::Serialize;

use super::soliton::point_defect;
use super::{ResidualReport, Sample, SolitonKind};
use crate::curvature::{geometry_frames, CurvatureFrame};
use crate::error::{FinslerError, Result};
use crate::fd;
use crate::geodesics::GeodesicPath;
use crate::jet::PointTangent;
use crate::linalg::{zeros3, zeros4, Tensor3, Tensor4};
use crate::metrics::MetricSpec;
use crate::tensors::{
    evaluate_all, horizontal_deriv_scalar, horizontal_deriv_tensor,
    horizontal_deriv_tensor_with, PointFrames, Slot, Stencil, TensorFrame,
};

/// The key formula is evaluated only where the essential soliton equation
/// with `sigma = 1/2` holds to this defect.
pub const KEY_FORMULA_GATE: f64 = 1e-4;

/// `C^t_ms = g^tp C_pms`, `[t][m][s]`.
fn cartan_up(tf: &TensorFrame) -> Tensor3 {
    let n = tf.dim();
    let mut c = zeros3(n);
    for t in 0..n {
        for m in 0..n {
            for s in 0..n {
                c[t][m][s] = (0..n).map(|p| tf.g_inv[t][p] * tf.cartan[p][m][s]).sum();
            }
        }
    }
    c
}

/// `C^t_ms R^s_ti`, flat `[m][i]`.
fn v_field(tf: &TensorFrame, cf: &CurvatureFrame) -> Vec<f64> {
    let n = tf.dim();
    let c = cartan_up(tf);
    let mut v = vec![0.0; n * n];
    for m in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for t in 0..n {
                for s in 0..n {
                    acc += c[t][m][s] * cf.r3[s][t][i];
                }
            }
            v[m * n + i] = acc;
        }
    }
    v
}

/// Zeroth and first order pieces of `K_m` that need no further derivative.
struct KmParts {
    /// `(C^{t|i}_ms - C^t_ml L^{li}_s) R^s_ti`.
    second: Vec<f64>,
    /// `(C^t_il L^{li}_s - C^{t|i}_is) R^s_tm`.
    third: Vec<f64>,
}

fn km_parts(tf: &TensorFrame, cf: &CurvatureFrame) -> KmParts {
    let n = tf.dim();
    let gi = &tf.g_inv;
    let c = cartan_up(tf);
    // C^{t|i}_ms = g^tp g^ij C_{pms|j}
    let mut ch = zeros4(n);
    for t in 0..n {
        for m in 0..n {
            for s in 0..n {
                for i in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        for j in 0..n {
                            acc += gi[t][p] * gi[i][j] * cf.cartan_h[p][m][s][j];
                        }
                    }
                    ch[t][m][s][i] = acc;
                }
            }
        }
    }
    // L^{li}_s = g^ij L^l_js
    let mut lu = zeros3(n);
    for l in 0..n {
        for i in 0..n {
            for s in 0..n {
                lu[l][i][s] = (0..n).map(|j| gi[i][j] * cf.landsberg[l][j][s]).sum();
            }
        }
    }
    let mut second = vec![0.0; n];
    let mut third = vec![0.0; n];
    for m in 0..n {
        for t in 0..n {
            for s in 0..n {
                for i in 0..n {
                    let cl: f64 = (0..n).map(|l| c[t][m][l] * lu[l][i][s]).sum();
                    second[m] += (ch[t][m][s][i] - cl) * cf.r3[s][t][i];
                    let cl: f64 = (0..n).map(|l| c[t][i][l] * lu[l][i][s]).sum();
                    third[m] += (cl - ch[t][i][s][i]) * cf.r3[s][t][m];
                }
            }
        }
    }
    KmParts { second, third }
}

/// `(C^t_il L^{li}_s - C^{t|i}_is) R^s_t`, the hypothesis gauge of the
/// linear-growth bounds.
pub(super) fn growth_gauge(tf: &TensorFrame, cf: &CurvatureFrame) -> f64 {
    let n = tf.dim();
    let gi = &tf.g_inv;
    let c = cartan_up(tf);
    let mut total = 0.0;
    for t in 0..n {
        for s in 0..n {
            let mut a = 0.0;
            for i in 0..n {
                for l in 0..n {
                    let lu: f64 = (0..n).map(|j| gi[i][j] * cf.landsberg[l][j][s]).sum();
                    a += c[t][i][l] * lu;
                }
                for p in 0..n {
                    for j in 0..n {
                        a -= gi[t][p] * gi[i][j] * cf.cartan_h[p][i][s][j];
                    }
                }
            }
            total += a * cf.flag_up[s][t];
        }
    }
    total
}

/// `K_m` and its contraction `K_0 = K_m y^m`.
#[derive(Debug, Clone, Serialize)]
pub struct KmTerm {
    pub k: Vec<f64>,
    pub k0: f64,
}

/// `K_m = (C^t_ms R^s_ti)^{|i} + (C^{t|i}_ms - C^t_ml L^{li}_s) R^s_ti
/// + (C^t_il L^{li}_s - C^{t|i}_is) R^s_tm`. Raised indices are applied
/// after the horizontal derivative; the divergence is a tensor-level
/// finite difference.
pub fn km_term(metric: &MetricSpec, p: &PointTangent) -> Result<KmTerm> {
    let h = p.x.iter().fold(0.0f64, |m, v| m.max(fd::step_for(*v)));
    km_term_with(metric, p, h, Stencil::Central)
}

pub fn km_term_with(
    metric: &MetricSpec,
    p: &PointTangent,
    h: f64,
    stencil: Stencil,
) -> Result<KmTerm> {
    let n = p.dim();
    let (tf, cf) = geometry_frames(metric, p)?;
    let parts = km_parts(&tf, &cf);
    let dv = horizontal_deriv_tensor_with(
        metric,
        p,
        |q| {
            let (tf, cf) = geometry_frames(metric, q)?;
            Ok(v_field(&tf, &cf))
        },
        &[Slot::Lower, Slot::Lower],
        h,
        stencil,
    )?;
    let k: Vec<f64> = (0..n)
        .map(|m| {
            let mut div = 0.0;
            for i in 0..n {
                for j in 0..n {
                    div += tf.g_inv[i][j] * dv[(m * n + i) * n + j];
                }
            }
            div + parts.second[m] + parts.third[m]
        })
        .collect();
    let k0 = k.iter().zip(&p.y).map(|(a, b)| a * b).sum();
    Ok(KmTerm { k, k0 })
}

/// `R + F^2_y(grad tau) - tau` with `F^2_y(grad tau) = g^ij tau_|i tau_|j`.
pub fn phi(fr: &PointFrames) -> f64 {
    let n = fr.tensor.dim();
    let t = &fr.measure.tau_grad;
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += fr.tensor.g_inv[i][j] * t[i] * t[j];
        }
    }
    fr.curvature.scalar + q - fr.measure.tau
}

/// `phi` at every sample of a path.
pub fn hamilton_quantity(metric: &MetricSpec, path: &GeodesicPath) -> Result<Vec<f64>> {
    (0..path.len())
        .into_par_iter()
        .map(|s| Ok(phi(&evaluate_all(metric, &path.point(s))?)))
        .collect()
}

/// Per-index residual of
/// `1/2 phi_{|m} + tau^{|i}(C^t_ms R^s_ti - C^t_is R^s_tm) - K_m`.
pub fn key_formula_residual(metric: &MetricSpec, p: &PointTangent) -> Result<Vec<f64>> {
    let n = p.dim();
    let fr = evaluate_all(metric, p)?;
    let gate = point_defect(&fr, SolitonKind::Essential, 0.5);
    if !(gate <= KEY_FORMULA_GATE) {
        return Err(FinslerError::HypothesisNotMet(format!(
            "essential soliton defect {gate:e} with sigma = 1/2 exceeds {KEY_FORMULA_GATE:e}"
        )));
    }
    let dphi = horizontal_deriv_scalar(metric, p, |q| Ok(phi(&evaluate_all(metric, q)?)))?;
    let km = km_term(metric, p)?;
    let c = cartan_up(&fr.tensor);
    let r3 = &fr.curvature.r3;
    let tau_up: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| fr.tensor.g_inv[i][j] * fr.measure.tau_grad[j]).sum())
        .collect();
    Ok((0..n)
        .map(|m| {
            let mut cross = 0.0;
            for i in 0..n {
                for t in 0..n {
                    for s in 0..n {
                        cross += tau_up[i] * (c[t][m][s] * r3[s][t][i] - c[t][i][s] * r3[s][t][m]);
                    }
                }
            }
            (0.5 * dphi[m] + cross - km.k[m]).abs()
        })
        .collect())
}

/// Tolerance for identities between jet-exact tensors.
pub const SINGLE_LAYER_TOL: f64 = 1e-6;
/// Tolerance for identities that need one finite-difference layer.
pub const DOUBLE_LAYER_TOL: f64 = 1e-4;

/// `P_i^i_kl + tau_{|k;l}` and `tau_{|k;s} - (I_{s|k} - I_t L^t_ks)`.
fn p_trace(fr: &PointFrames) -> f64 {
    let n = fr.tensor.dim();
    let cf = &fr.curvature;
    let ihv = &fr.measure.tau_hv;
    let mut worst = 0.0f64;
    for k in 0..n {
        for l in 0..n {
            let tr: f64 = (0..n).map(|i| cf.p4[i][i][k][l]).sum();
            worst = worst.max((tr + ihv[k][l]).abs());
            let il: f64 = (0..n)
                .map(|t| fr.tensor.mean_cartan[t] * cf.landsberg[t][k][l])
                .sum();
            worst = worst.max((ihv[k][l] - (cf.mean_cartan_h[l][k] - il)).abs());
        }
    }
    worst
}

/// `tau_{|i|j} - tau_{|j|i} - I_s R^s_ij`.
fn tau_commutation(fr: &PointFrames) -> f64 {
    let n = fr.tensor.dim();
    let h = &fr.measure.tau_hess;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let ir: f64 = (0..n)
                .map(|s| fr.tensor.mean_cartan[s] * fr.curvature.r3[s][i][j])
                .sum();
            worst = worst.max((h[i][j] - h[j][i] - ir).abs());
        }
    }
    worst
}

/// `bar R_ij - bar R_ji + 2 C^t_js R^s_ti - 2 C^t_is R^s_tj + I_s R^s_ij`.
fn bar_ricci_antisymmetry(fr: &PointFrames) -> f64 {
    let n = fr.tensor.dim();
    let c = cartan_up(&fr.tensor);
    let cf = &fr.curvature;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut rhs = 0.0;
            for t in 0..n {
                for s in 0..n {
                    rhs += -2.0 * c[t][j][s] * cf.r3[s][t][i] + 2.0 * c[t][i][s] * cf.r3[s][t][j];
                }
            }
            for s in 0..n {
                rhs -= fr.tensor.mean_cartan[s] * cf.r3[s][i][j];
            }
            worst = worst.max((cf.bar_ric[i][j] - cf.bar_ric[j][i] - rhs).abs());
        }
    }
    worst
}

fn flat4(t: &Tensor4) -> Vec<f64> {
    t.iter()
        .flat_map(|a| a.iter().flat_map(|b| b.iter().flatten().copied()))
        .collect()
}

/// Second Bianchi identity `R_j^i_kl|m + cyclic(k, l, m) = P_j^i_ms R^s_kl + cyclic`
/// in full and traced over `i = k`.
fn bianchi(metric: &MetricSpec, p: &PointTangent, cf: &CurvatureFrame) -> Result<(f64, f64)> {
    let n = p.dim();
    let d = horizontal_deriv_tensor(
        metric,
        p,
        |q| Ok(flat4(&geometry_frames(metric, q)?.1.r4)),
        &[Slot::Lower, Slot::Upper, Slot::Lower, Slot::Lower],
    )?;
    let at = |j: usize, i: usize, k: usize, l: usize, m: usize| {
        d[(((j * n + i) * n + k) * n + l) * n + m]
    };
    let pr = |j: usize, i: usize, a: usize, b: usize, c: usize| -> f64 {
        (0..n).map(|s| cf.p4[j][i][a][s] * cf.r3[s][b][c]).sum()
    };
    let term = |j: usize, i: usize, k: usize, l: usize, m: usize| {
        at(j, i, k, l, m) + at(j, i, l, m, k) + at(j, i, m, k, l)
            - pr(j, i, m, k, l)
            - pr(j, i, k, l, m)
            - pr(j, i, l, m, k)
    };
    let mut full = 0.0f64;
    let mut trace = 0.0f64;
    for j in 0..n {
        for l in 0..n {
            for m in 0..n {
                let mut tr = 0.0;
                for i in 0..n {
                    tr += term(j, i, i, l, m);
                    for k in 0..n {
                        full = full.max(term(j, i, k, l, m).abs());
                    }
                }
                trace = trace.max(tr.abs());
            }
        }
    }
    Ok((full, trace))
}

/// Pointwise identities between curvature, Cartan, Landsberg and
/// distortion tensors at each sample.
pub fn identity_suite(metric: &MetricSpec, samples: &[Sample]) -> Result<Vec<ResidualReport>> {
    let rows: Vec<[f64; 5]> = samples
        .par_iter()
        .map(|s| {
            let fr = evaluate_all(metric, &s.at)?;
            let (full, trace) = bianchi(metric, &s.at, &fr.curvature)?;
            Ok([
                p_trace(&fr),
                tau_commutation(&fr),
                bar_ricci_antisymmetry(&fr),
                trace,
                full,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    Ok(vec![
        ResidualReport::from_residuals("p-trace", &col(0), None, SINGLE_LAYER_TOL),
        ResidualReport::from_residuals("tau-commutation", &col(1), None, SINGLE_LAYER_TOL),
        ResidualReport::from_residuals("bar-r-antisymmetry", &col(2), None, SINGLE_LAYER_TOL),
        ResidualReport::from_residuals("bianchi-trace", &col(3), None, DOUBLE_LAYER_TOL),
        ResidualReport::from_residuals("bianchi", &col(4), None, DOUBLE_LAYER_TOL),
    ])
}
