//! Small dense helpers on row-major slices and nested matrices.

use nalgebra::DMatrix;

pub type Matrix = Vec<Vec<f64>>;
pub type Tensor3 = Vec<Vec<Vec<f64>>>;
pub type Tensor4 = Vec<Vec<Vec<Vec<f64>>>>;

pub fn zeros2(n: usize) -> Matrix {
    vec![vec![0.0; n]; n]
}

pub fn zeros3(n: usize) -> Tensor3 {
    vec![zeros2(n); n]
}

pub fn zeros4(n: usize) -> Tensor4 {
    vec![zeros3(n); n]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn flatten(m: &Matrix) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

pub fn unflatten(a: &[f64], n: usize) -> Matrix {
    a.chunks(n).map(|r| r.to_vec()).collect()
}

/// `u^T A v` for a nested matrix.
pub fn quad(a: &Matrix, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, aij) in row.iter().enumerate() {
            s += aij * u[i] * v[j];
        }
    }
    s
}

pub fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

pub fn inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    m.try_inverse().map(|inv| {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = inv[(i, j)];
            }
        }
        out
    })
}

pub fn det(a: &[f64], n: usize) -> f64 {
    DMatrix::from_row_slice(n, n, a).determinant()
}

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_row_slice(n, n, a);
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| (0..n).map(|r| eig.eigenvectors[(r, i)]).collect())
        .collect();
    (vals, vecs)
}

pub fn min_eigenvalue_sym(a: &[f64], n: usize) -> f64 {
    sym_eigen(a, n).0[0]
}

/// Gram-Schmidt in the inner product `g`, keeping the span order of `vs`.
/// Vectors that become numerically dependent are dropped.
pub fn g_orthonormalize(g: &Matrix, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for e in &out {
            let c = quad(g, e, &w);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        let nn = quad(g, &w, &w);
        let scale = quad(g, v, v).max(1e-300);
        if nn > 1e-20 * scale {
            let s = nn.sqrt();
            out.push(w.iter().map(|x| x / s).collect());
        }
    }
    out
}

/// Least-squares line `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
    (mean, var.sqrt())
}
