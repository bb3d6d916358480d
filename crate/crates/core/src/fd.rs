//! Central finite differences with one Richardson level.

use crate::error::Result;

/// Base relative step for tensor-level differences.
pub const TENSOR_STEP: f64 = 1e-4;

pub fn step_for(coordinate: f64) -> f64 {
    TENSOR_STEP * coordinate.abs().max(1.0)
}

/// Step used by the jet oracle for a partial of total order `k`. A fixed
/// `1e-4` is swamped by rounding beyond second order, so the step grows
/// with the order.
pub fn oracle_step(k: usize) -> f64 {
    match k {
        0 | 1 => 1e-3,
        2 => 3e-3,
        3 => 6e-3,
        _ => 1.2e-2,
    }
}

/// Central stencil for the `k`-th derivative: offsets in units of `h` with
/// weights; the result is divided by `h^k`. Truncation error is `O(h^2)`.
pub fn central_stencil(k: usize) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("stencil order {k} unsupported"),
    }
}

/// Richardson combination of two `O(h^2)` estimates at `h` and `h/2`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// First derivative at `s = 0` of a vector-valued function of one
/// parameter, central differences at `h` and `h/2` plus Richardson.
pub fn derivative_along<F>(mut f: F, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let d = |fp: Vec<f64>, fm: Vec<f64>, h: f64| -> Vec<f64> {
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let coarse = d(f(h)?, f(-h)?, h);
    let fine = d(f(0.5 * h)?, f(-0.5 * h)?, 0.5 * h);
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| richardson(*c, *f))
        .collect())
}

/// One-sided counterpart of [`derivative_along`]: `(-3f(0) + 4f(h) - f(2h)) / 2h`
/// at `h` and `h/2`, combined by Richardson.
pub fn forward_derivative<F>(mut f: F, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let f0 = f(0.0)?;
    let mut d = |h: f64| -> Result<Vec<f64>> {
        let a = f(h)?;
        let b = f(2.0 * h)?;
        Ok(f0
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(z, (a, b))| (-3.0 * z + 4.0 * a - b) / (2.0 * h))
            .collect())
    };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| richardson(*c, *f))
        .collect())
}

/// Five-point first derivative from samples at `-2h..2h`.
pub fn five_point_first(v: &[f64; 5], h: f64) -> f64 {
    (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h)
}

/// Five-point second derivative from samples at `-2h..2h`.
pub fn five_point_second(v: &[f64; 5], h: f64) -> f64 {
    (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h)
}

/// First derivative of a uniformly sampled column: five-point stencil in
/// the interior, one-sided four-point formulas at the ends.
pub fn differentiate_column(v: &[f64], h: f64) -> Vec<f64> {
    let k = v.len();
    if k < 5 {
        return (0..k)
            .map(|i| {
                let (a, b) = if i == 0 {
                    (0, 1.min(k - 1))
                } else if i + 1 == k {
                    (i - 1, i)
                } else {
                    (i - 1, i + 1)
                };
                if a == b {
                    0.0
                } else {
                    (v[b] - v[a]) / ((b - a) as f64 * h)
                }
            })
            .collect();
    }
    (0..k)
        .map(|i| {
            if i >= 2 && i + 2 < k {
                five_point_first(&[v[i - 2], v[i - 1], v[i], v[i + 1], v[i + 2]], h)
            } else if i < 2 {
                one_sided(&v[..5], i, h)
            } else {
                let s = &v[k - 5..];
                one_sided(s, i + 5 - k, h)
            }
        })
        .collect()
}

/// Derivative at node `at` (0..5) of the quartic through five samples.
fn one_sided(s: &[f64], at: usize, h: f64) -> f64 {
    const W: [[f64; 5]; 5] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
        [1.0, -8.0, 0.0, 8.0, -1.0],
        [-1.0, 6.0, -18.0, 10.0, 3.0],
        [3.0, -16.0, 36.0, -48.0, 25.0],
    ];
    W[at].iter().zip(s).map(|(w, v)| w * v).sum::<f64>() / (12.0 * h)
}
