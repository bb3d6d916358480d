//! Soliton residuals, pointwise identities, the second-variation
//! inequality and distance-indexed bounds along geodesic fans.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::jet::PointTangent;
use crate::linalg::{zeros2, Matrix};
use crate::metrics::MetricSpec;
use crate::sampling;
use crate::tensors::PointFrames;

mod bounds;
mod identities;
mod soliton;

pub use bounds::{
    berwald_scalar_check, fan, second_variation_check, theorem_1_1_check, theorem_7_checks,
    Profile, SecondVariationReport, GAMMA_FLOOR, HYPOTHESIS_TOL, MARGIN_SLACK,
};
pub use identities::{
    hamilton_quantity, identity_suite, key_formula_residual, km_term, km_term_with, phi,
    KmTerm, KEY_FORMULA_GATE,
};
pub use soliton::{landsberg_equivalence_check, point_defect, soliton_residual};

/// Contraction of `bar R^inf_ij = bar R_ij + tau_{|i|j}` compared with
/// `sigma g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonKind {
    /// `(y, y)`.
    InftyEinstein,
    /// `(y, V)`.
    Asymmetric,
    /// Symmetrized `(y, V)`.
    Symmetric,
    /// `(V, V)`.
    Essential,
    /// `(V, W)`.
    AsymmetricEssential,
}

impl SolitonKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolitonKind::InftyEinstein => "infty-einstein",
            SolitonKind::Asymmetric => "asymmetric",
            SolitonKind::Symmetric => "symmetric",
            SolitonKind::Essential => "essential",
            SolitonKind::AsymmetricEssential => "asymmetric-essential",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "infty-einstein" => SolitonKind::InftyEinstein,
            "asymmetric" => SolitonKind::Asymmetric,
            "symmetric" => SolitonKind::Symmetric,
            "essential" => SolitonKind::Essential,
            "asymmetric-essential" => SolitonKind::AsymmetricEssential,
            _ => return None,
        })
    }
}

/// How the Einstein factor `sigma` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// Least-squares fit per sample point `(x, y)`.
    FunctionOnSM,
    /// Least-squares fit per base point `x`.
    FunctionOnM,
    /// Fixed `sigma = 1/2`.
    ConstantHalf,
}

impl SigmaMode {
    pub fn tag(self) -> &'static str {
        match self {
            SigmaMode::FunctionOnSM => "function-on-SM",
            SigmaMode::FunctionOnM => "function-on-M",
            SigmaMode::ConstantHalf => "constant-1/2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub definition: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub sigma_mode: Option<SigmaMode>,
    /// Fitted `sigma`, one value per sample or per base point.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Per-sample residuals, in sample order.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl ResidualReport {
    pub fn from_residuals(
        definition: &str,
        residuals: &[f64],
        sigma_mode: Option<SigmaMode>,
        tolerance: f64,
    ) -> Self {
        let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let mean_residual = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
        };
        ResidualReport {
            definition: definition.to_string(),
            samples: residuals.len(),
            max_residual,
            mean_residual,
            sigma_mode,
            sigma: Vec::new(),
            tolerance,
            verdict: Verdict::from_bool(max_residual <= tolerance),
            residuals: residuals.to_vec(),
        }
    }

    /// Re-judges the report against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = Verdict::from_bool(self.max_residual <= tolerance);
        self
    }
}

/// Per-geodesic columns of a bound check. Bound columns are present only
/// for the bounds the check states.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GeodesicRows {
    pub direction: Vec<f64>,
    pub left_chart: Option<f64>,
    pub d: Vec<f64>,
    pub s: Vec<f64>,
    pub tau: Vec<f64>,
    pub scalar_r: Vec<f64>,
    pub bound_s: Option<Vec<f64>>,
    pub bound_tau_lo: Option<Vec<f64>>,
    pub bound_tau_hi: Option<Vec<f64>>,
    pub bound_r_lo: Option<Vec<f64>>,
    pub bound_r_hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// One of `soliton-growth`, `linear-growth`, `berwald-scalar`.
    pub theorem: String,
    pub rows: Vec<GeodesicRows>,
    pub constants: BTreeMap<String, f64>,
    /// `min (quantity - bound)` per bound, or `tolerance - defect` for
    /// residual-type checks.
    pub margins: BTreeMap<String, f64>,
    /// Margins reported but left out of the verdict.
    pub informational: Vec<String>,
    pub verdict: Verdict,
}

impl BoundReport {
    pub(crate) fn decide(
        theorem: &str,
        rows: Vec<GeodesicRows>,
        constants: BTreeMap<String, f64>,
        margins: BTreeMap<String, f64>,
        informational: Vec<String>,
    ) -> Self {
        let ok = margins
            .iter()
            .filter(|(k, _)| !informational.contains(k))
            .all(|(_, m)| *m >= -MARGIN_SLACK);
        let ok = ok && constants.values().all(|c| c.is_finite());
        BoundReport {
            theorem: theorem.to_string(),
            rows,
            constants,
            margins,
            informational,
            verdict: Verdict::from_bool(ok),
        }
    }
}

/// A point of `TM` with two test vectors. `group` indexes the base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub at: PointTangent,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub group: usize,
}

/// `points` base points drawn in `frac` of the chart, each carrying
/// `dirs_per_point` random `(y, V, W)`.
pub fn sample_set(
    metric: &MetricSpec,
    points: usize,
    dirs_per_point: usize,
    frac: f64,
    seed: u64,
) -> Vec<Sample> {
    let n = metric.dim();
    let mut rng = sampling::rng(seed);
    let mut out = Vec::with_capacity(points * dirs_per_point);
    for group in 0..points {
        let x = sampling::point_in_chart(&mut rng, &metric.chart, n, frac);
        for _ in 0..dirs_per_point {
            let y = sampling::random_unit(&mut rng, n);
            let v = sampling::random_unit(&mut rng, n);
            let w = sampling::random_unit(&mut rng, n);
            out.push(Sample {
                at: PointTangent::new(x.clone(), y),
                v,
                w,
                group,
            });
        }
    }
    out
}

/// `bar R^inf_ij = bar R_ij + tau_{|i|j}`.
pub fn weighted_bar_ricci(fr: &PointFrames) -> Matrix {
    let n = fr.tensor.dim();
    let mut m = zeros2(n);
    for i in 0..n {
        for j in 0..n {
            m[i][j] = fr.curvature.bar_ric[i][j] + fr.measure.tau_hess[i][j];
        }
    }
    m
}
