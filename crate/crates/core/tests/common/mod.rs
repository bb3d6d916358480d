//! Independent oracles shared by the integration tests. Nothing here goes
//! through the Taylor engine.

#![allow(dead_code)]

use finsler_core::metrics::{Family, RiemannianBase};
use finsler_core::sampling;
use finsler_core::{MetricSpec, PointTangent};
use rand_chacha::ChaCha8Rng;

pub type M = Vec<Vec<f64>>;

pub fn a_mat(base: &RiemannianBase, x: &[f64]) -> M {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| base.a_ij::<f64>(x, i, j)).collect())
        .collect()
}

pub fn inv(a: &M) -> M {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let m = m.try_inverse().expect("invertible");
    (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()
}

fn central<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let d = |h: f64| {
        let mut xp = x.to_vec();
        xp[k] += h;
        let mut xm = x.to_vec();
        xm[k] -= h;
        f(&xp)
            .iter()
            .zip(f(&xm))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect::<Vec<f64>>()
    };
    let c = d(h);
    let f2 = d(h / 2.0);
    c.iter().zip(&f2).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

/// Christoffel symbols `gamma^i_jk` of `a_ij`, `[i][j][k]`.
pub fn christoffel(base: &RiemannianBase, x: &[f64]) -> Vec<M> {
    let n = x.len();
    let flat = |x: &[f64]| -> Vec<f64> { a_mat(base, x).concat() };
    let da: Vec<Vec<f64>> = (0..n).map(|k| central(&flat, x, k, 1e-4)).collect();
    let d = |i: usize, j: usize, k: usize| da[k][i * n + j];
    let ai = inv(&a_mat(base, x));
    let mut g = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                g[i][j][k] = (0..n)
                    .map(|l| 0.5 * ai[i][l] * (d(l, k, j) + d(l, j, k) - d(j, k, l)))
                    .sum();
            }
        }
    }
    g
}

/// Riemann tensor `R^i_jkl`, `[i][j][k][l]`.
pub fn riemann(base: &RiemannianBase, x: &[f64]) -> Vec<Vec<M>> {
    let n = x.len();
    let flat = |x: &[f64]| -> Vec<f64> {
        christoffel(base, x)
            .into_iter()
            .flat_map(|m| m.into_iter().flatten())
            .collect()
    };
    let dg: Vec<Vec<f64>> = (0..n).map(|k| central(&flat, x, k, 1e-3)).collect();
    let d = |k: usize, i: usize, j: usize, l: usize| dg[k][(i * n + j) * n + l];
    let g = christoffel(base, x);
    let mut r = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = d(k, i, l, j) - d(l, i, k, j);
                    for m in 0..n {
                        v += g[i][k][m] * g[m][l][j] - g[i][l][m] * g[m][k][j];
                    }
                    r[i][j][k][l] = v;
                }
            }
        }
    }
    r
}

pub fn base_of(metric: &MetricSpec) -> RiemannianBase {
    match &metric.family {
        Family::Riemannian { base } => base.clone(),
        Family::Euclidean => RiemannianBase::Euclidean,
        _ => panic!("not riemannian"),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, metric: &MetricSpec, frac: f64) -> PointTangent {
    let n = metric.dim();
    let x = sampling::point_in_chart(rng, &metric.chart, n, frac);
    let y = sampling::random_unit(rng, n);
    PointTangent::new(x, y)
}

/// A random unit vector not parallel to `y`.
pub fn transverse(rng: &mut ChaCha8Rng, y: &[f64]) -> Vec<f64> {
    loop {
        let v = sampling::random_unit(rng, y.len());
        let c: f64 = v.iter().zip(y).map(|(a, b)| a * b).sum();
        let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (c / ny).abs() < 0.9 {
            return v;
        }
    }
}

pub fn randers2() -> MetricSpec {
    MetricSpec::randers(vec![0.2, -0.1], vec![0.1, 0.05, -0.05, 0.1])
}

pub fn randers3() -> MetricSpec {
    MetricSpec::randers(
        vec![0.15, -0.1, 0.05],
        vec![0.1, 0.05, 0.0, -0.05, 0.1, 0.02, 0.0, -0.03, 0.05],
    )
}

pub fn mink2() -> MetricSpec {
    MetricSpec::minkowski_randers(vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.0])
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn flat4(t: &[Vec<M>]) -> Vec<f64> {
    t.iter()
        .flat_map(|a| a.iter().flat_map(|b| b.iter().flatten().copied()))
        .collect()
}

pub fn flat3(t: &[M]) -> Vec<f64> {
    t.iter().flat_map(|a| a.iter().flatten().copied()).collect()
}

/// One representative of each catalog family, by name.
pub fn catalog() -> Vec<(&'static str, MetricSpec)> {
    vec![
        ("euclidean", MetricSpec::euclidean(3)),
        ("sphere", MetricSpec::sphere(2, 1.0)),
        ("hyperbolic", MetricSpec::hyperbolic(3)),
        ("randers", randers3()),
        ("minkowski-randers", mink2()),
        ("funk", MetricSpec::funk(2)),
        ("gaussian", MetricSpec::gaussian_soliton(2)),
    ]
}
