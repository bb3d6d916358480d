//! Seeded sample generation. Every random quantity in the crate flows from a
//! `ChaCha8Rng` seeded here, so identical seeds reproduce identical samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::Chart;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; `1 - u` keeps the log argument away from zero.
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    (-2.0 * (1.0 - u).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let r = crate::linalg::norm(&v);
        if r > 1e-6 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Uniform point in the ball of radius `frac * chart.inner_radius()`.
pub fn point_in_chart(rng: &mut ChaCha8Rng, chart: &Chart, n: usize, frac: f64) -> Vec<f64> {
    let radius = frac * chart.inner_radius();
    loop {
        let u = random_unit(rng, n);
        let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        let x: Vec<f64> = u.iter().map(|v| v * r).collect();
        if chart.contains(&x) {
            return x;
        }
    }
}

/// Deterministic unit directions: equally spaced angles for `n = 2`, the
/// coordinate axes followed by seeded random directions otherwise.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..n {
        for s in [1.0, -1.0] {
            if out.len() < count {
                let mut e = vec![0.0; n];
                e[i] = s;
                out.push(e);
            }
        }
    }
    let mut r = rng(0xd1ec_7105 + n as u64);
    while out.len() < count {
        out.push(random_unit(&mut r, n));
    }
    out
}
