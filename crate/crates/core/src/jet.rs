//! Mixed partial derivatives of `F^2(x, y)` from truncated Taylor jets, and
//! an independent finite-difference oracle.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::fd;
use crate::metrics::MetricSpec;
use crate::taylor::{Taylor, TaylorBasis};

/// Positivity floor on `F`.
pub const F_FLOOR: f64 = 1e-8;

/// A point of the punched tangent bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTangent {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PointTangent {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        PointTangent { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        PointTangent::new(self.x.clone(), self.y.iter().map(|v| v * lambda).collect())
    }
}

/// Jet of `F^2` at a point: all partials `D^a_x D^b_y F^2` with
/// `|a| <= order_x`, `|b| <= order_y`.
#[derive(Debug, Clone)]
pub struct Jet {
    pub center: PointTangent,
    pub order_x: usize,
    pub order_y: usize,
    taylor: Taylor,
}

fn exponents(indices: &[usize], n: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    for &i in indices {
        e[i] += 1;
    }
    e
}

fn indices(exp: &[u8]) -> Vec<usize> {
    exp.iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
        .collect()
}

impl Jet {
    /// Partial for multi-indices given as index lists, e.g. `alpha = [0, 0]`
    /// is `d^2/dx^1dx^1`. Order within a list is irrelevant.
    pub fn partial(&self, alpha: &[usize], beta: &[usize]) -> Option<f64> {
        let n = self.center.dim();
        if alpha.iter().chain(beta).any(|&i| i >= n) {
            return None;
        }
        self.taylor
            .partial(&exponents(alpha, n), &exponents(beta, n))
    }

    /// All stored partials as `(alpha, beta, value)` with sorted index lists.
    pub fn entries(&self) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
        self.taylor
            .partials()
            .into_iter()
            .map(|(a, b, v)| (indices(&a), indices(&b), v))
            .collect()
    }

    pub fn taylor(&self) -> &Taylor {
        &self.taylor
    }

    pub fn value(&self) -> f64 {
        self.taylor.val()
    }
}

/// Checks chart membership and the positivity floor on `F`.
pub fn check_point(metric: &MetricSpec, p: &PointTangent) -> Result<f64> {
    metric.check_point(p)?;
    let f2 = metric.f_squared(&p.x, &p.y);
    let f = f2.max(0.0).sqrt();
    if !(f >= F_FLOOR) {
        return Err(FinslerError::DegenerateDirection { f });
    }
    Ok(f)
}

/// Taylor jet of `F^2` seeded at `p` in the given basis.
pub(crate) fn f2_taylor(metric: &MetricSpec, p: &PointTangent, basis: &Arc<TaylorBasis>) -> Taylor {
    let (xs, ys) = Taylor::seed(basis, &p.x, &p.y);
    metric.f_squared(&xs, &ys)
}

pub fn evaluate_jet(
    metric: &MetricSpec,
    p: &PointTangent,
    order_x: usize,
    order_y: usize,
) -> Result<Jet> {
    if order_x > 3 || order_y > 4 || order_x + order_y > 6 {
        return Err(FinslerError::OrderUnsupported { order_x, order_y });
    }
    check_point(metric, p)?;
    let basis = TaylorBasis::get(p.dim(), order_x, order_y);
    Ok(Jet {
        center: p.clone(),
        order_x,
        order_y,
        taylor: f2_taylor(metric, p, &basis),
    })
}

/// Finite-difference estimate of `D^alpha_x D^beta_y F^2` at `p`.
///
/// Uses a tensor-product central stencil in every differentiated variable,
/// step `step * max(1, |coordinate|)`, and one Richardson level. Pass
/// [`fd::oracle_step`] of the total order for a balanced default.
pub fn fd_jet_oracle(
    metric: &MetricSpec,
    p: &PointTangent,
    alpha: &[usize],
    beta: &[usize],
    step: f64,
) -> Result<f64> {
    let n = p.dim();
    check_point(metric, p)?;
    let ex = exponents(alpha, n);
    let ey = exponents(beta, n);
    // (variable, order, step)
    let mut vars: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        if ex[i] > 0 {
            vars.push((i, ex[i] as usize, step * p.x[i].abs().max(1.0)));
        }
        if ey[i] > 0 {
            vars.push((n + i, ey[i] as usize, step * p.y[i].abs().max(1.0)));
        }
    }
    let estimate = |scale: f64| -> Result<f64> {
        let mut total = 0.0;
        let stencils: Vec<&[(i32, f64)]> =
            vars.iter().map(|&(_, k, _)| fd::central_stencil(k)).collect();
        let mut idx = vec![0usize; vars.len()];
        loop {
            let mut x = p.x.clone();
            let mut y = p.y.clone();
            let mut w = 1.0;
            for (v, &(var, _, h)) in vars.iter().enumerate() {
                let (off, wt) = stencils[v][idx[v]];
                w *= wt;
                let shift = off as f64 * h * scale;
                if var < n {
                    x[var] += shift;
                } else {
                    y[var - n] += shift;
                }
            }
            if !metric.chart.contains(&x) {
                return Err(FinslerError::StencilLeavesChart { x });
            }
            let f2 = metric.f_squared(&x, &y);
            if !(f2 > F_FLOOR * F_FLOOR) {
                return Err(FinslerError::StencilLeavesChart { x });
            }
            total += w * f2;
            let mut j = 0;
            loop {
                if j == vars.len() {
                    let denom: f64 = vars
                        .iter()
                        .map(|&(_, k, h)| (h * scale).powi(k as i32))
                        .product();
                    return Ok(total / denom);
                }
                idx[j] += 1;
                if idx[j] < stencils[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    };
    if vars.is_empty() {
        return estimate(1.0);
    }
    Ok(fd::richardson(estimate(1.0)?, estimate(0.5)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricSpec;

    fn pt(x: &[f64], y: &[f64]) -> PointTangent {
        PointTangent::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn euclidean_jet_is_exact() {
        let e = MetricSpec::euclidean(3);
        let j = evaluate_jet(&e, &pt(&[0.1, 0.2, -0.3], &[1.0, 0.5, 0.2]), 2, 4).unwrap();
        for (a, b, v) in j.entries() {
            let expected = match (a.len(), b.len()) {
                (0, 2) if b[0] == b[1] => 2.0,
                (0, 0) => 1.29,
                (0, 1) => 2.0 * [1.0, 0.5, 0.2][b[0]],
                _ => 0.0,
            };
            assert!((v - expected).abs() < 1e-14, "{a:?} {b:?} {v}");
        }
    }

    #[test]
    fn order_limits() {
        let e = MetricSpec::euclidean(2);
        let p = pt(&[0.0, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            evaluate_jet(&e, &p, 3, 4),
            Err(FinslerError::OrderUnsupported { .. })
        ));
        assert!(matches!(
            evaluate_jet(&e, &pt(&[0.0, 0.0], &[0.0, 0.0]), 1, 1),
            Err(FinslerError::DegenerateDirection { .. })
        ));
    }

    #[test]
    fn oracle_on_euclidean() {
        let e = MetricSpec::euclidean(2);
        let p = pt(&[0.3, -0.2], &[0.6, 0.8]);
        let d = fd_jet_oracle(&e, &p, &[], &[0, 0], fd::oracle_step(2)).unwrap();
        assert!((d - 2.0).abs() < 1e-9, "{d}");
        let d = fd_jet_oracle(&e, &p, &[0], &[], 1e-4).unwrap();
        assert!(d.abs() < 1e-10);
    }

    /// Hand differentiation of the Funk formula at `x = s e_1`, `y = e_2`:
    /// there `<x,y> = 0` and `F = 1/sqrt(1 - s^2)`.
    #[test]
    fn oracle_on_funk_matches_hand_derivatives() {
        let funk = MetricSpec::funk(2);
        let s = 0.2;
        let p = pt(&[s, 0.0], &[0.0, 1.0]);
        let d = 1.0 - s * s;
        // F^2 = (sqrt(d |y|^2 + <x,y>^2) + <x,y>)^2 / d^2.
        // d/dy^1: <x,y>_y1 = s, sqrt term derivative = s<x,y>/.. = 0 at y = e2.
        // dF^2/dy^1 = 2 (sqrt(d) + 0)(0 + s) / d^2 = 2 s / d^{3/2}.
        let expected_y1 = 2.0 * s / d.powf(1.5);
        let est = fd_jet_oracle(&funk, &p, &[], &[0], fd::oracle_step(1)).unwrap();
        assert!((est - expected_y1).abs() < 1e-9, "{est} vs {expected_y1}");
        // dF^2/dx^1 at y = e2: F^2 = 1/d, so d/ds (1/(1-s^2)) = 2s/d^2.
        let expected_x1 = 2.0 * s / (d * d);
        let est = fd_jet_oracle(&funk, &p, &[0], &[], fd::oracle_step(1)).unwrap();
        assert!((est - expected_x1).abs() < 1e-9, "{est} vs {expected_x1}");
        let jet = evaluate_jet(&funk, &p, 1, 1).unwrap();
        assert!((jet.partial(&[], &[0]).unwrap() - expected_y1).abs() < 1e-14);
        assert!((jet.partial(&[0], &[]).unwrap() - expected_x1).abs() < 1e-14);
    }
}
