//! Quadrature rules: Gauss-Legendre, product rules on the unit sphere and
//! composite rules on uniform grids.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `Vol(B^n(1))`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Product rule on `S^{n-1}`: trapezoid in the azimuth and Gauss-Legendre in
/// each polar angle, with roughly `budget` nodes. Weights include the
/// spherical area element, so they sum to the sphere area.
pub fn sphere_rule(n: usize, budget: usize) -> Vec<(Vec<f64>, f64)> {
    if n == 2 {
        let m = budget.max(4);
        let w = 2.0 * PI / m as f64;
        return (0..m)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                (vec![th.cos(), th.sin()], w)
            })
            .collect();
    }
    let polar = n - 2;
    let m = ((budget as f64 / 2.0).powf(1.0 / (polar + 1) as f64).round() as usize).max(4);
    let n_phi = 2 * m;
    let (gx, gw) = gauss_legendre(m);
    let thetas: Vec<(f64, f64)> = gx
        .iter()
        .zip(&gw)
        .map(|(z, w)| (0.5 * PI * (z + 1.0), 0.5 * PI * w))
        .collect();
    let mut out = Vec::with_capacity(n_phi * m.pow(polar as u32));
    let mut idx = vec![0usize; polar];
    loop {
        let mut prefix = 1.0;
        let mut weight = 1.0;
        let mut u = Vec::with_capacity(n);
        for (j, &k) in idx.iter().enumerate() {
            let (th, w) = thetas[k];
            u.push(prefix * th.cos());
            weight *= w * th.sin().powi((polar - j) as i32);
            prefix *= th.sin();
        }
        for k in 0..n_phi {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            let mut v = u.clone();
            v.push(prefix * phi.cos());
            v.push(prefix * phi.sin());
            out.push((v, weight * 2.0 * PI / n_phi as f64));
        }
        let mut j = 0;
        loop {
            if j == polar {
                return out;
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Composite trapezoid on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        k => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[k - 1])),
    }
}

/// Composite Simpson on a uniform grid; falls back to a trapezoid panel at
/// the end when the interval count is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let k = values.len();
    if k < 3 {
        return trapezoid(values, h);
    }
    let panels = (k - 1) / 2 * 2;
    let mut s = 0.0;
    for i in (0..panels).step_by(2) {
        s += values[i] + 4.0 * values[i + 1] + values[i + 2];
    }
    s *= h / 3.0;
    if panels < k - 1 {
        s += 0.5 * h * (values[k - 2] + values[k - 1]);
    }
    s
}
