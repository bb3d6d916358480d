use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{weighted_bar_ricci, ResidualReport, Sample, SigmaMode, SolitonKind};
use crate::error::{FinslerError, Result};
use crate::linalg::quad;
use crate::metrics::MetricSpec;
use crate::tensors::{evaluate_all, PointFrames};

/// One contraction normalized by `sqrt(g(a, a) g(b, b))`: `m` is the
/// weighted Ricci side, `g` the metric side.
#[derive(Debug, Clone, Copy)]
struct Pair {
    m: f64,
    g: f64,
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

/// Contractions tested for `kind`: the sample's own vectors plus the
/// coordinate basis, so a point passes only if the identity holds for
/// every `V` (and `W`).
fn pairs(fr: &PointFrames, kind: SolitonKind, v: &[f64], w: &[f64]) -> Vec<Pair> {
    let n = fr.tensor.dim();
    let m = weighted_bar_ricci(fr);
    let g = &fr.tensor.g;
    let y = fr.tensor.at.y.clone();
    let mut vecs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    match kind {
        SolitonKind::InftyEinstein => vecs.push((y.clone(), y.clone())),
        SolitonKind::Asymmetric | SolitonKind::Symmetric => {
            vecs.push((y.clone(), v.to_vec()));
            vecs.extend((0..n).map(|k| (y.clone(), unit(n, k))));
        }
        SolitonKind::Essential => {
            vecs.push((v.to_vec(), v.to_vec()));
            for a in 0..n {
                for b in a..n {
                    let mut e = unit(n, a);
                    e[b] += 1.0;
                    vecs.push((e.clone(), e));
                }
            }
        }
        SolitonKind::AsymmetricEssential => {
            vecs.push((v.to_vec(), w.to_vec()));
            for a in 0..n {
                for b in 0..n {
                    vecs.push((unit(n, a), unit(n, b)));
                }
            }
        }
    }
    vecs.iter()
        .map(|(a, b)| {
            let raw = if kind == SolitonKind::Symmetric {
                0.5 * (quad(&m, a, b) + quad(&m, b, a))
            } else {
                quad(&m, a, b)
            };
            let scale = (quad(g, a, a) * quad(g, b, b)).sqrt().max(1e-300);
            Pair {
                m: raw / scale,
                g: quad(g, a, b) / scale,
            }
        })
        .collect()
}

fn fit_sigma<'a>(ps: impl IntoIterator<Item = &'a Pair>) -> f64 {
    let (num, den) = ps
        .into_iter()
        .fold((0.0, 0.0), |(n, d), p| (n + p.m * p.g, d + p.g * p.g));
    if den > 1e-300 {
        num / den
    } else {
        0.0
    }
}

fn defect(ps: &[Pair], sigma: f64) -> f64 {
    ps.iter().fold(0.0f64, |a, p| a.max((p.m - sigma * p.g).abs()))
}

/// Largest normalized defect of `kind` at one point over the coordinate
/// basis, for a given `sigma`.
pub fn point_defect(fr: &PointFrames, kind: SolitonKind, sigma: f64) -> f64 {
    let n = fr.tensor.dim();
    let v = unit(n, 0);
    let w = unit(n, n - 1);
    defect(&pairs(fr, kind, &v, &w), sigma)
}

fn frames(metric: &MetricSpec, samples: &[Sample]) -> Result<Vec<PointFrames>> {
    samples
        .par_iter()
        .map(|s| evaluate_all(metric, &s.at))
        .collect()
}

/// Residual of the soliton equation of type `kind` at every sample.
pub fn soliton_residual(
    metric: &MetricSpec,
    kind: SolitonKind,
    sigma_mode: SigmaMode,
    samples: &[Sample],
    tolerance: f64,
) -> Result<ResidualReport> {
    let frs = frames(metric, samples)?;
    let ps: Vec<Vec<Pair>> = frs
        .iter()
        .zip(samples)
        .map(|(fr, s)| pairs(fr, kind, &s.v, &s.w))
        .collect();
    let (residuals, sigma) = match sigma_mode {
        SigmaMode::ConstantHalf => (ps.iter().map(|p| defect(p, 0.5)).collect(), Vec::new()),
        SigmaMode::FunctionOnSM => {
            let sig: Vec<f64> = ps.iter().map(|p| fit_sigma(p)).collect();
            (ps.iter().zip(&sig).map(|(p, s)| defect(p, *s)).collect(), sig)
        }
        SigmaMode::FunctionOnM => {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                groups.entry(s.group).or_default().push(i);
            }
            let mut res = vec![0.0; samples.len()];
            let mut sig = Vec::with_capacity(groups.len());
            for idx in groups.values() {
                let s = fit_sigma(idx.iter().flat_map(|&i| ps[i].iter()));
                for &i in idx {
                    res[i] = defect(&ps[i], s);
                }
                sig.push(s);
            }
            (res, sig)
        }
    };
    let mut report =
        ResidualReport::from_residuals(kind.tag(), &residuals, Some(sigma_mode), tolerance);
    report.sigma = sigma;
    Ok(report)
}

/// Above this `max |L^i_jk|` a metric is treated as non-Landsberg.
pub const LANDSBERG_TOL: f64 = 1e-6;

/// On Landsberg samples, compares the asymmetric essential equation with
/// the asymmetric one: fitted `sigma` and remaining defect must agree.
pub fn landsberg_equivalence_check(
    metric: &MetricSpec,
    samples: &[Sample],
    tolerance: f64,
) -> Result<ResidualReport> {
    let frs = frames(metric, samples)?;
    let l_norm = frs.iter().fold(0.0f64, |a, fr| {
        fr.curvature
            .landsberg
            .iter()
            .flatten()
            .flatten()
            .fold(a, |a, v| a.max(v.abs()))
    });
    if l_norm > LANDSBERG_TOL {
        return Err(FinslerError::NotLandsberg { l_norm });
    }
    let residuals: Vec<f64> = frs
        .iter()
        .zip(samples)
        .map(|(fr, s)| {
            let p5 = pairs(fr, SolitonKind::AsymmetricEssential, &s.v, &s.w);
            let p2 = pairs(fr, SolitonKind::Asymmetric, &s.v, &s.w);
            let (s5, s2) = (fit_sigma(&p5), fit_sigma(&p2));
            (s5 - s2).abs() + (defect(&p5, s5) - defect(&p2, s2)).abs()
        })
        .collect();
    Ok(ResidualReport::from_residuals(
        "landsberg-equivalence",
        &residuals,
        Some(SigmaMode::FunctionOnSM),
        tolerance,
    ))
}
