//! Mixed partials of `F^2` from trapezoid sums of the Cauchy integral on a
//! torus of small complex circles. Rounding stays near `eps |F^2| k! / r^k`
//! instead of the `eps / h^k` of real stencils, which is what fourth
//! derivatives need to reach 1e-6.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use finsler_core::taylor::Scalar;
use finsler_core::{MetricSpec, PointTangent};
use nalgebra::Complex;

type C = Complex<f64>;

#[derive(Clone, Debug)]
pub struct Cx(pub C);

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Cx {
            type Output = Cx;
            fn $f(self, o: Cx) -> Cx {
                Cx(self.0 $op o.0)
            }
        }
        impl $tr<f64> for Cx {
            type Output = Cx;
            fn $f(self, o: f64) -> Cx {
                Cx(self.0 $op C::new(o, 0.0))
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx(-self.0)
    }
}

impl Scalar for Cx {
    fn constant_like(&self, v: f64) -> Self {
        Cx(C::new(v, 0.0))
    }
    fn value(&self) -> f64 {
        self.0.re
    }
    fn sqrt(self) -> Self {
        Cx(self.0.sqrt())
    }
    fn ln(self) -> Self {
        Cx(self.0.ln())
    }
    fn exp(self) -> Self {
        Cx(self.0.exp())
    }
    fn recip(self) -> Self {
        Cx(self.0.inv())
    }
    fn powf(self, p: f64) -> Self {
        Cx(self.0.powf(p))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// `D^alpha_x D^beta_y F^2` at `p` (index lists as in the jet API), with
/// circle radius `rx` in each `x` variable and `ry` in each `y` variable.
pub fn cauchy_partial(
    metric: &MetricSpec,
    p: &PointTangent,
    alpha: &[usize],
    beta: &[usize],
    rx: f64,
    ry: f64,
) -> f64 {
    let n = p.dim();
    // (variable in 0..2n, order, radius)
    let mut vars: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let kx = alpha.iter().filter(|&&a| a == i).count();
        if kx > 0 {
            vars.push((i, kx, rx));
        }
        let ky = beta.iter().filter(|&&b| b == i).count();
        if ky > 0 {
            vars.push((n + i, ky, ry));
        }
    }
    let nodes: usize = if vars.len() >= 4 { 10 } else { 12 };
    let m = vars.len();
    let total_points = nodes.pow(m as u32);
    let mut acc = C::new(0.0, 0.0);
    for flat in 0..total_points {
        let mut x: Vec<Cx> = p.x.iter().map(|v| Cx(C::new(*v, 0.0))).collect();
        let mut y: Vec<Cx> = p.y.iter().map(|v| Cx(C::new(*v, 0.0))).collect();
        let mut phase = 0.0;
        let mut rest = flat;
        for &(var, k, r) in &vars {
            let j = rest % nodes;
            rest /= nodes;
            let theta = 2.0 * PI * j as f64 / nodes as f64;
            let shift = C::from_polar(r, theta);
            if var < n {
                x[var].0 += shift;
            } else {
                y[var - n].0 += shift;
            }
            phase -= k as f64 * theta;
        }
        acc += metric.f_squared(&x, &y).0 * C::from_polar(1.0, phase);
    }
    let scale: f64 = vars
        .iter()
        .map(|&(_, k, r)| factorial(k) / r.powi(k as i32))
        .product();
    acc.re / total_points as f64 * scale
}
