//! Closed-form catalog of Finsler metrics and measures.
//!
//! Every family is written once over [`Scalar`] so the same expression feeds
//! plain `f64` evaluation, the finite-difference oracle and the Taylor jet
//! engine.

mod spec_file;

pub use spec_file::{parse_inline_metric, parse_metric_spec, RawMeasure, SpecFileError};

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::jet::PointTangent;
use crate::linalg;
use crate::sampling;
use crate::taylor::{sum, Scalar};

/// Riemannian sub-catalog used by the `riemannian` and `randers` families.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiemannianBase {
    Euclidean,
    /// Round sphere of radius `radius` in stereographic coordinates.
    SphereStereographic { radius: f64 },
    /// Curvature `-1` hyperbolic space in the Poincaré ball.
    HyperbolicPoincare,
    /// Constant symmetric positive-definite matrix, row-major.
    ConstantMatrix { a: Vec<f64> },
}

impl RiemannianBase {
    /// Conformal factor or matrix entry `a_ij(x)`.
    pub fn a_ij<T: Scalar>(&self, x: &[T], i: usize, j: usize) -> T {
        let n = x.len();
        let delta = if i == j { 1.0 } else { 0.0 };
        let r2 = || sum(x.iter().map(|xi| xi.clone() * xi.clone()));
        match self {
            RiemannianBase::Euclidean => x[0].constant_like(delta),
            RiemannianBase::SphereStereographic { radius } => {
                if delta == 0.0 {
                    return x[0].constant_like(0.0);
                }
                let d = r2() / (radius * radius) + 1.0;
                (d.clone() * d).recip() * 4.0
            }
            RiemannianBase::HyperbolicPoincare => {
                if delta == 0.0 {
                    return x[0].constant_like(0.0);
                }
                let d = -r2() + 1.0;
                (d.clone() * d).recip() * 4.0
            }
            RiemannianBase::ConstantMatrix { a } => x[0].constant_like(a[i * n + j]),
        }
    }

    /// `a_ij(x) y^i y^j`.
    pub fn quadratic<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        let n = x.len();
        match self {
            RiemannianBase::Euclidean => sum(y.iter().map(|v| v.clone() * v.clone())),
            RiemannianBase::SphereStereographic { .. } | RiemannianBase::HyperbolicPoincare => {
                let yy = sum(y.iter().map(|v| v.clone() * v.clone()));
                self.a_ij(x, 0, 0) * yy
            }
            RiemannianBase::ConstantMatrix { a } => sum((0..n).flat_map(|i| {
                (0..n).map(move |j| (i, j))
            })
            .map(|(i, j)| y[i].clone() * y[j].clone() * a[i * n + j])),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            RiemannianBase::Euclidean => "euclidean",
            RiemannianBase::SphereStereographic { .. } => "sphere-stereographic",
            RiemannianBase::HyperbolicPoincare => "hyperbolic-poincare",
            RiemannianBase::ConstantMatrix { .. } => "constant-matrix",
        }
    }
}

/// Closed catalog of metric families.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Euclidean,
    Riemannian { base: RiemannianBase },
    /// `F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i` with `b(x) = b + B x`.
    Randers {
        base: RiemannianBase,
        b: Vec<f64>,
        b_linear: Vec<f64>,
    },
    /// Funk metric of the unit ball.
    FunkBall,
    MinkowskiRanders { a: Vec<f64>, b: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Euclidean => "euclidean".into(),
            Family::Riemannian { base } => format!("riemannian/{}", base.name()),
            Family::Randers { base, .. } => format!("randers/{}", base.name()),
            Family::FunkBall => "funk-ball".into(),
            Family::MinkowskiRanders { .. } => "minkowski-randers".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ChartShape {
    Ball { radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

/// Coordinate domain; points are admitted strictly inside `guard * domain`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub shape: ChartShape,
    pub guard: f64,
}

impl Chart {
    pub fn ball(radius: f64) -> Self {
        Chart {
            shape: ChartShape::Ball { radius },
            guard: 1.0,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            ChartShape::Ball { radius } => linalg::norm(x) < self.guard * radius,
            ChartShape::Box { lower, upper } => x.iter().enumerate().all(|(i, &v)| {
                let mid = 0.5 * (lower[i] + upper[i]);
                let half = 0.5 * (upper[i] - lower[i]) * self.guard;
                (v - mid).abs() < half
            }),
        }
    }

    /// Radius of the largest admitted ball around the origin.
    pub fn inner_radius(&self) -> f64 {
        match &self.shape {
            ChartShape::Ball { radius } => self.guard * radius,
            ChartShape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (0.5 * (u - l) * self.guard - (0.5 * (l + u)).abs()).max(0.0))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Closed-form positive densities `sigma(x)` for explicit measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "density", rename_all = "kebab-case")]
pub enum Density {
    Constant { scale: f64 },
    /// `scale * exp(-coefficient * |x|^2)`.
    Gaussian { coefficient: f64, scale: f64 },
}

impl Density {
    pub fn ln_sigma<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Density::Constant { scale } => x[0].constant_like(scale.ln()),
            Density::Gaussian { coefficient, scale } => {
                sum(x.iter().map(|v| v.clone() * v.clone())) * (-coefficient) + scale.ln()
            }
        }
    }
}

/// Quadrature nodes for the Busemann-Hausdorff integral: 2048 directions on
/// the circle, about `10^4` on higher spheres.
pub fn default_quadrature(n: usize) -> usize {
    if n == 2 {
        2048
    } else {
        10_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Busemann-Hausdorff volume, computed with roughly `quadrature`
    /// directions on the unit sphere.
    BusemannHausdorff { quadrature: usize },
    ExplicitDensity(Density),
}

impl MeasureSpec {
    /// Busemann-Hausdorff with the default node budget for dimension `n`.
    pub fn busemann_hausdorff(n: usize) -> Self {
        MeasureSpec::BusemannHausdorff {
            quadrature: default_quadrature(n),
        }
    }
}

/// A Finsler metric from the catalog together with its chart and measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSpec {
    pub dimension: usize,
    pub family: Family,
    pub chart: Chart,
    pub measure: MeasureSpec,
}

impl MetricSpec {
    pub fn euclidean(n: usize) -> Self {
        MetricSpec {
            dimension: n,
            family: Family::Euclidean,
            chart: Chart::ball(10.0),
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    /// Euclidean space with `sigma = exp(-|x|^2/4)`: the shrinking Gaussian soliton.
    pub fn gaussian_soliton(n: usize) -> Self {
        MetricSpec {
            measure: MeasureSpec::ExplicitDensity(Density::Gaussian {
                coefficient: 0.25,
                scale: 1.0,
            }),
            ..MetricSpec::euclidean(n)
        }
    }

    pub fn sphere(n: usize, radius: f64) -> Self {
        MetricSpec {
            dimension: n,
            family: Family::Riemannian {
                base: RiemannianBase::SphereStereographic { radius },
            },
            chart: Chart {
                shape: ChartShape::Ball {
                    radius: 2.0 * radius,
                },
                guard: 0.9,
            },
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    pub fn hyperbolic(n: usize) -> Self {
        MetricSpec {
            dimension: n,
            family: Family::Riemannian {
                base: RiemannianBase::HyperbolicPoincare,
            },
            chart: Chart {
                shape: ChartShape::Ball { radius: 1.0 },
                guard: 0.9,
            },
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    pub fn constant_matrix(a: Vec<f64>) -> Self {
        let n = (a.len() as f64).sqrt().round() as usize;
        MetricSpec {
            dimension: n,
            family: Family::Riemannian {
                base: RiemannianBase::ConstantMatrix { a },
            },
            chart: Chart::ball(10.0),
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    pub fn funk(n: usize) -> Self {
        MetricSpec {
            dimension: n,
            family: Family::FunkBall,
            chart: Chart::ball(1.0),
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    pub fn minkowski_randers(a: Vec<f64>, b: Vec<f64>) -> Self {
        let n = b.len();
        MetricSpec {
            dimension: n,
            family: Family::MinkowskiRanders { a, b },
            chart: Chart::ball(10.0),
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    /// Randers metric over the Euclidean base with `b(x) = b + B x` on the unit ball.
    pub fn randers(b: Vec<f64>, b_linear: Vec<f64>) -> Self {
        let n = b.len();
        MetricSpec {
            dimension: n,
            family: Family::Randers {
                base: RiemannianBase::Euclidean,
                b,
                b_linear,
            },
            chart: Chart::ball(1.0),
            measure: MeasureSpec::busemann_hausdorff(n),
        }
    }

    pub fn with_measure(mut self, measure: MeasureSpec) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn dim(&self) -> usize {
        self.dimension
    }

    /// `F^2(x, y)` over any scalar type.
    pub fn f_squared<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        match &self.family {
            Family::Euclidean => sum(y.iter().map(|v| v.clone() * v.clone())),
            Family::Riemannian { base } => base.quadratic(x, y),
            Family::Randers { base, .. } => {
                let alpha = base.quadratic(x, y).sqrt();
                let beta = self.beta(x, y);
                let f = alpha + beta;
                f.clone() * f
            }
            Family::FunkBall => {
                let xx = sum(x.iter().map(|v| v.clone() * v.clone()));
                let yy = sum(y.iter().map(|v| v.clone() * v.clone()));
                let xy = sum(x.iter().zip(y).map(|(a, b)| a.clone() * b.clone()));
                let one_minus = -xx + 1.0;
                let root = (one_minus.clone() * yy + xy.clone() * xy.clone()).sqrt();
                let f = (root + xy) / one_minus;
                f.clone() * f
            }
            Family::MinkowskiRanders { a, b } => {
                let n = y.len();
                let alpha2 = sum((0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| y[i].clone() * y[j].clone() * a[i * n + j]));
                let beta = sum(y.iter().zip(b).map(|(v, bi)| v.clone() * *bi));
                let f = alpha2.sqrt() + beta;
                f.clone() * f
            }
        }
    }

    /// Randers one-form `b_i(x) y^i`; zero for other families.
    fn beta<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        match &self.family {
            Family::Randers { b, b_linear, .. } => {
                let n = x.len();
                sum((0..n).map(|i| {
                    let bi = sum((0..n).map(|j| x[j].clone() * b_linear[i * n + j])) + b[i];
                    bi * y[i].clone()
                }))
            }
            _ => y[0].constant_like(0.0),
        }
    }

    /// `b(x)` for Randers-type families.
    pub fn b_field(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        match &self.family {
            Family::Randers { b, b_linear, .. } => Some(
                (0..n)
                    .map(|i| b[i] + (0..n).map(|j| b_linear[i * n + j] * x[j]).sum::<f64>())
                    .collect(),
            ),
            Family::MinkowskiRanders { b, .. } => Some(b.clone()),
            _ => None,
        }
    }

    /// `a_ij(x)` of the underlying Riemannian data (row-major), when the
    /// family has one.
    pub fn riemannian_a(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        let base = match &self.family {
            Family::Euclidean => RiemannianBase::Euclidean,
            Family::Riemannian { base } | Family::Randers { base, .. } => base.clone(),
            Family::MinkowskiRanders { a, .. } => RiemannianBase::ConstantMatrix { a: a.clone() },
            Family::FunkBall => return None,
        };
        Some(
            (0..n * n)
                .map(|k| base.a_ij(x, k / n, k % n))
                .collect(),
        )
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.family, Family::Euclidean | Family::Riemannian { .. })
    }

    /// Catalog tag: connection coefficients independent of `y`.
    pub fn is_berwald(&self) -> bool {
        match &self.family {
            Family::Euclidean | Family::Riemannian { .. } | Family::MinkowskiRanders { .. } => {
                true
            }
            Family::Randers {
                base, b_linear, ..
            } => {
                matches!(
                    base,
                    RiemannianBase::Euclidean | RiemannianBase::ConstantMatrix { .. }
                ) && b_linear.iter().all(|&v| v == 0.0)
            }
            Family::FunkBall => false,
        }
    }

    /// Landsberg members of the catalog coincide with the Berwald ones.
    pub fn is_landsberg(&self) -> bool {
        self.is_berwald()
    }

    pub fn check_point(&self, p: &PointTangent) -> Result<()> {
        if p.x.len() != self.dimension || p.y.len() != self.dimension {
            return Err(FinslerError::SpecInvalid(format!(
                "point dimension {} does not match metric dimension {}",
                p.x.len(),
                self.dimension
            )));
        }
        if !self.chart.contains(&p.x) {
            return Err(FinslerError::OutOfChart { x: p.x.clone() });
        }
        Ok(())
    }

    /// Finsler norm `F(x, y)`.
    pub fn f_value(&self, p: &PointTangent) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.f_squared(&p.x, &p.y).max(0.0).sqrt())
    }

    /// `F(x, y)` without chart checks, for internal sweeps.
    pub(crate) fn f_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        self.f_squared(x, y).max(0.0).sqrt()
    }

    /// Samples the chart and checks the invariants of the family.
    pub fn validate_spec(&self, samples: usize) -> Result<ValidationReport> {
        let n = self.dimension;
        if !(2..=crate::taylor::MAX_DIM).contains(&n) {
            return Err(FinslerError::SpecInvalid(format!(
                "dimension {n} outside supported range 2..={}",
                crate::taylor::MAX_DIM
            )));
        }
        self.check_parameters()?;
        if samples == 0 {
            return Err(FinslerError::SpecInvalid("samples must be at least 1".into()));
        }
        let mut rng = sampling::rng(0x5eed_0f_c4a7);
        let dirs = sampling::sphere_directions(n, 16);
        let mut min_eig = f64::INFINITY;
        let mut max_b = 0.0f64;
        for s in 0..samples {
            let x = if s == 0 {
                vec![0.0; n]
            } else {
                sampling::point_in_chart(&mut rng, &self.chart, n, 1.0)
            };
            if !self.chart.contains(&x) {
                continue;
            }
            if let Some(bn) = self.b_norm(&x) {
                max_b = max_b.max(bn);
                if bn >= 1.0 {
                    return Err(FinslerError::SpecInvalid(format!(
                        "randers one-form has |b|_a = {bn:.6} >= 1 at x = {x:?}"
                    )));
                }
            }
            if let MeasureSpec::ExplicitDensity(
                Density::Constant { scale } | Density::Gaussian { scale, .. },
            ) = &self.measure
            {
                if *scale <= 0.0 {
                    return Err(FinslerError::SpecInvalid("density scale must be > 0".into()));
                }
            }
            for u in &dirs {
                let g = crate::tensors::fundamental_tensor_at(self, &x, u)?;
                let e = linalg::min_eigenvalue_sym(&g, n);
                min_eig = min_eig.min(e);
                if e <= 0.0 {
                    return Err(FinslerError::SpecInvalid(format!(
                        "fundamental tensor not positive definite at x = {x:?}, y = {u:?}"
                    )));
                }
            }
        }
        Ok(ValidationReport {
            samples,
            min_eigenvalue: min_eig,
            max_b_norm: max_b,
        })
    }

    fn check_parameters(&self) -> Result<()> {
        let n = self.dimension;
        let bad = |m: String| Err(FinslerError::SpecInvalid(m));
        let check_matrix = |a: &[f64], what: &str| -> Result<()> {
            if a.len() != n * n {
                return Err(FinslerError::SpecInvalid(format!(
                    "{what} must have {n}x{n} entries"
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    if (a[i * n + j] - a[j * n + i]).abs() > 1e-14 {
                        return Err(FinslerError::SpecInvalid(format!("{what} is not symmetric")));
                    }
                }
            }
            if linalg::min_eigenvalue_sym(a, n) <= 0.0 {
                return Err(FinslerError::SpecInvalid(format!(
                    "{what} is not positive definite"
                )));
            }
            Ok(())
        };
        let check_base = |base: &RiemannianBase| -> Result<()> {
            match base {
                RiemannianBase::ConstantMatrix { a } => check_matrix(a, "params.matrix"),
                RiemannianBase::SphereStereographic { radius } if *radius <= 0.0 => Err(
                    FinslerError::SpecInvalid("params.radius must be positive".into()),
                ),
                _ => Ok(()),
            }
        };
        match &self.family {
            Family::Euclidean | Family::FunkBall => {}
            Family::Riemannian { base } => check_base(base)?,
            Family::Randers { base, b, b_linear } => {
                check_base(base)?;
                if b.len() != n || b_linear.len() != n * n {
                    return bad(format!("params.b needs {n} and params.b_linear {n}x{n} entries"));
                }
            }
            Family::MinkowskiRanders { a, b } => {
                check_matrix(a, "params.matrix")?;
                if b.len() != n {
                    return bad(format!("params.b needs {n} entries"));
                }
            }
        }
        if let Family::FunkBall = self.family {
            if let ChartShape::Ball { radius } = self.chart.shape {
                if radius * self.chart.guard > 1.0 {
                    return bad("funk-ball chart must lie inside the unit ball".into());
                }
            } else {
                return bad("funk-ball requires a ball chart".into());
            }
        }
        if let ChartShape::Box { lower, upper } = &self.chart.shape {
            if lower.len() != n || upper.len() != n || lower.iter().zip(upper).any(|(l, u)| l >= u)
            {
                return bad("chart box bounds malformed".into());
            }
        }
        Ok(())
    }

    /// `|b(x)|_a` for Randers-type families.
    pub fn b_norm(&self, x: &[f64]) -> Option<f64> {
        let b = self.b_field(x)?;
        let a = self.riemannian_a(x)?;
        let n = x.len();
        let a_inv = linalg::inverse(&a, n)?;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a_inv[i * n + j] * b[i] * b[j];
            }
        }
        Some(s.sqrt())
    }

    /// `rho_x = max F(x,-u)/F(x,u)` over `samples` unit directions.
    pub fn reversibility(&self, x: &[f64], samples: usize) -> Result<f64> {
        if !self.chart.contains(x) {
            return Err(FinslerError::OutOfChart { x: x.to_vec() });
        }
        let dirs = sampling::sphere_directions(self.dimension, samples.max(2));
        Ok(dirs
            .iter()
            .map(|u| {
                let neg: Vec<f64> = u.iter().map(|v| -v).collect();
                self.f_raw(x, &neg) / self.f_raw(x, u)
            })
            .fold(1.0f64, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub min_eigenvalue: f64,
    pub max_b_norm: f64,
}
