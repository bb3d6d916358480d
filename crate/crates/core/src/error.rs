use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("point {x:?} lies outside the chart")]
    OutOfChart { x: Vec<f64> },
    #[error("degenerate direction: F = {f:e} below positivity floor")]
    DegenerateDirection { f: f64 },
    #[error("jet order (x: {order_x}, y: {order_y}) unsupported")]
    OrderUnsupported { order_x: usize, order_y: usize },
    #[error("finite-difference stencil around {x:?} leaves the chart")]
    StencilLeavesChart { x: Vec<f64> },
    #[error("invalid metric spec: {0}")]
    SpecInvalid(String),
    #[error("fundamental tensor not positive definite at x = {x:?}, y = {y:?}")]
    NotPositiveDefinite { x: Vec<f64>, y: Vec<f64> },
    #[error("degenerate flag: v is parallel to y")]
    DegenerateFlag,
    #[error("Busemann-Hausdorff quadrature underflow (indicatrix volume {volume:e})")]
    QuadratureUnderflow { volume: f64 },
    #[error("weighted Ricci parameter N = {n_value} is below the dimension {dim}")]
    NValueInvalid { n_value: f64, dim: usize },
    #[error("geodesic left the chart at t = {t}")]
    LeftChart { t: f64 },
    #[error("shooting did not converge (best endpoint residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("path is not minimal: length {length} vs forward distance {distance}")]
    PathNotMinimal { length: f64, distance: f64 },
    #[error("metric is not Berwald on the catalog")]
    NotBerwald,
    #[error("metric is not Landsberg (max |L| = {l_norm:e})")]
    NotLandsberg { l_norm: f64 },
    #[error("step rejected: unit-speed drift {drift:e} exceeds tolerance")]
    DriftExceeded { drift: f64 },
}

pub type Result<T, E = FinslerError> = std::result::Result<T, E>;
