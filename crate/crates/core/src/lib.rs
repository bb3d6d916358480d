//! Numerical laboratory for Finsler metric measure spaces.
//!
//! The crate evaluates the Chern tensor stack, curvatures, distortion and
//! S-curvature of closed-form Finsler metrics from truncated Taylor jets of
//! `F^2`, integrates geodesics with parallel frames, and checks soliton
//! equations, curvature identities and distance-indexed bounds.

pub mod curvature;
pub mod error;
pub mod fd;
pub mod geodesics;
pub mod jet;
pub mod linalg;
pub mod measure;
pub mod metrics;
pub mod quadrature;
pub mod sampling;
pub mod taylor;
pub mod tensors;
pub mod verify;

pub use curvature::{curvature_frame, flag_curvature, CurvatureFrame};
pub use error::{FinslerError, Result};
pub use geodesics::{
    forward_distance, integrate_geodesic, parallel_frame, sample_along, Field, GeodesicPath,
};
pub use jet::{evaluate_jet, fd_jet_oracle, Jet, PointTangent};
pub use measure::{bh_density, distortion, measure_frame, s_curvature, weighted_ricci, MeasureFrame, NValue};
pub use metrics::{
    parse_metric_spec, Chart, ChartShape, Density, Family, MeasureSpec, MetricSpec,
    RiemannianBase,
};
pub use tensors::{evaluate_all, tensor_frame, PointFrames, Slot, Stencil, TensorFrame};
pub use verify::{
    sample_set, BoundReport, GeodesicRows, Profile, ResidualReport, Sample, SigmaMode, SolitonKind,
    Verdict,
};
