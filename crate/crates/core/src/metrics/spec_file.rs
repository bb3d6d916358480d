//! TOML metric spec files. See the README for the schema.

use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use super::{
    default_quadrature, Chart, ChartShape, Density, Family, MeasureSpec, MetricSpec,
    RiemannianBase,
};

/// Parse or validation failure tied to a line and a field of the document.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFileError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for SpecFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, field `{}`: {}",
            self.line, self.field, self.message
        )
    }
}

impl std::error::Error for SpecFileError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
    prefix: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> SpecFileError {
        SpecFileError {
            line: line_of(self.text, span.start),
            field: format!("{}{}", self.prefix, field),
            message: message.into(),
        }
    }

    fn from_toml(&self, e: toml::de::Error) -> SpecFileError {
        let msg = e.message().to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(|s| format!("{}{}", self.prefix, s))
            .unwrap_or_else(|| {
                if self.prefix.is_empty() {
                    "<document>".into()
                } else {
                    self.prefix.trim_end_matches('.').into()
                }
            });
        SpecFileError {
            line: e.span().map(|s| line_of(self.text, s.start)).unwrap_or(1),
            field,
            message: msg,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: Spanned<i64>,
    family: Spanned<String>,
    #[serde(default)]
    params: Option<Spanned<RawParams>>,
    #[serde(default)]
    chart: Option<Spanned<RawChart>>,
    #[serde(default)]
    measure: Option<Spanned<RawMeasure>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    base: Option<Spanned<String>>,
    radius: Option<Spanned<f64>>,
    matrix: Option<Spanned<Vec<Vec<f64>>>>,
    b: Option<Spanned<Vec<f64>>>,
    b_linear: Option<Spanned<Vec<Vec<f64>>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    shape: Spanned<String>,
    radius: Option<Spanned<f64>>,
    lower: Option<Spanned<Vec<f64>>>,
    upper: Option<Spanned<Vec<f64>>>,
    guard: Option<Spanned<f64>>,
}

/// `[measure]` table; also accepted by run configs as an override.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMeasure {
    kind: Spanned<String>,
    quadrature: Option<Spanned<i64>>,
    density: Option<Spanned<String>>,
    coefficient: Option<Spanned<f64>>,
    scale: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
struct InlineDoc {
    metric: RawSpec,
}

/// Parses a standalone metric spec document.
pub fn parse_metric_spec(text: &str) -> Result<MetricSpec, SpecFileError> {
    let ctx = Ctx { text, prefix: "" };
    let raw: RawSpec = toml::from_str(text).map_err(|e| ctx.from_toml(e))?;
    build(&raw, &ctx)
}

/// Parses a `[metric]` table embedded in a larger document; line numbers
/// refer to the whole document.
pub fn parse_inline_metric(text: &str) -> Result<MetricSpec, SpecFileError> {
    let ctx = Ctx {
        text,
        prefix: "metric.",
    };
    let raw: InlineDoc = toml::from_str(text).map_err(|e| ctx.from_toml(e))?;
    build(&raw.metric, &ctx)
}

fn matrix(
    ctx: &Ctx,
    m: &Spanned<Vec<Vec<f64>>>,
    n: usize,
    field: &str,
) -> Result<Vec<f64>, SpecFileError> {
    let rows = m.get_ref();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ctx.err(m.span(), field, format!("expected a {n}x{n} matrix")));
    }
    Ok(rows.iter().flatten().copied().collect())
}

fn vector(ctx: &Ctx, v: &Spanned<Vec<f64>>, n: usize, field: &str) -> Result<Vec<f64>, SpecFileError> {
    if v.get_ref().len() != n {
        return Err(ctx.err(v.span(), field, format!("expected {n} entries")));
    }
    Ok(v.get_ref().clone())
}

fn build(raw: &RawSpec, ctx: &Ctx) -> Result<MetricSpec, SpecFileError> {
    let dim = *raw.dimension.get_ref();
    if !(2..=crate::taylor::MAX_DIM as i64).contains(&dim) {
        return Err(ctx.err(
            raw.dimension.span(),
            "dimension",
            format!("must be between 2 and {}", crate::taylor::MAX_DIM),
        ));
    }
    let n = dim as usize;
    let params = raw.params.as_ref().map(|p| p.get_ref());
    let require_b = || -> Result<Vec<f64>, SpecFileError> {
        match params.and_then(|p| p.b.as_ref()) {
            Some(b) => vector(ctx, b, n, "params.b"),
            None => Err(ctx.err(raw.family.span(), "params.b", "required for this family")),
        }
    };
    let base = || -> Result<RiemannianBase, SpecFileError> {
        let Some(p) = params else {
            return Ok(RiemannianBase::Euclidean);
        };
        let Some(name) = p.base.as_ref() else {
            return Ok(RiemannianBase::Euclidean);
        };
        match name.get_ref().as_str() {
            "euclidean" => Ok(RiemannianBase::Euclidean),
            "sphere-stereographic" => {
                let radius = p.radius.as_ref().map(|r| *r.get_ref()).unwrap_or(1.0);
                if radius <= 0.0 {
                    let span = p.radius.as_ref().map(|r| r.span()).unwrap_or(name.span());
                    return Err(ctx.err(span, "params.radius", "must be positive"));
                }
                Ok(RiemannianBase::SphereStereographic { radius })
            }
            "hyperbolic-poincare" => Ok(RiemannianBase::HyperbolicPoincare),
            "constant-matrix" => match p.matrix.as_ref() {
                Some(m) => Ok(RiemannianBase::ConstantMatrix {
                    a: matrix(ctx, m, n, "params.matrix")?,
                }),
                None => Err(ctx.err(name.span(), "params.matrix", "required for constant-matrix")),
            },
            other => Err(ctx.err(
                name.span(),
                "params.base",
                format!(
                    "unknown base `{other}` (expected euclidean, sphere-stereographic, \
                     hyperbolic-poincare or constant-matrix)"
                ),
            )),
        }
    };
    let family = match raw.family.get_ref().as_str() {
        "euclidean" => Family::Euclidean,
        "riemannian" => {
            if params.and_then(|p| p.base.as_ref()).is_none() {
                return Err(ctx.err(raw.family.span(), "params.base", "required for riemannian"));
            }
            Family::Riemannian { base: base()? }
        }
        "randers" => {
            let b = require_b()?;
            let b_linear = match params.and_then(|p| p.b_linear.as_ref()) {
                Some(m) => matrix(ctx, m, n, "params.b_linear")?,
                None => vec![0.0; n * n],
            };
            Family::Randers {
                base: base()?,
                b,
                b_linear,
            }
        }
        "funk-ball" => Family::FunkBall,
        "minkowski-randers" => {
            let b = require_b()?;
            let a = match params.and_then(|p| p.matrix.as_ref()) {
                Some(m) => matrix(ctx, m, n, "params.matrix")?,
                None => (0..n * n)
                    .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
                    .collect(),
            };
            Family::MinkowskiRanders { a, b }
        }
        other => {
            return Err(ctx.err(
                raw.family.span(),
                "family",
                format!(
                    "unknown family `{other}` (expected euclidean, riemannian, randers, \
                     funk-ball or minkowski-randers)"
                ),
            ))
        }
    };
    let chart = match raw.chart.as_ref() {
        Some(c) => build_chart(c.get_ref(), n, &family, ctx)?,
        None => default_chart(&family),
    };
    let measure = match raw.measure.as_ref() {
        Some(m) => m.get_ref().build(n, ctx.text, ctx.prefix)?,
        None => MeasureSpec::busemann_hausdorff(n),
    };
    Ok(MetricSpec {
        dimension: n,
        family,
        chart,
        measure,
    })
}

fn base_of(family: &Family) -> Option<&RiemannianBase> {
    match family {
        Family::Riemannian { base } | Family::Randers { base, .. } => Some(base),
        _ => None,
    }
}

fn default_guard(family: &Family) -> f64 {
    match base_of(family) {
        Some(RiemannianBase::SphereStereographic { .. }) | Some(RiemannianBase::HyperbolicPoincare) => 0.9,
        _ => 1.0,
    }
}

/// Default chart per family.
pub(crate) fn default_chart(family: &Family) -> Chart {
    let guard = default_guard(family);
    let radius = match (family, base_of(family)) {
        (_, Some(RiemannianBase::SphereStereographic { radius })) => 2.0 * radius,
        (_, Some(RiemannianBase::HyperbolicPoincare)) => 1.0,
        (Family::Randers { .. }, _) | (Family::FunkBall, _) => 1.0,
        _ => 10.0,
    };
    Chart {
        shape: ChartShape::Ball { radius },
        guard,
    }
}

fn build_chart(c: &RawChart, n: usize, family: &Family, ctx: &Ctx) -> Result<Chart, SpecFileError> {
    let guard = match c.guard.as_ref() {
        Some(g) => {
            let v = *g.get_ref();
            if !(v > 0.0 && v <= 1.0) {
                return Err(ctx.err(g.span(), "chart.guard", "must lie in (0, 1]"));
            }
            v
        }
        None => default_guard(family),
    };
    let shape = match c.shape.get_ref().as_str() {
        "ball" => {
            let Some(r) = c.radius.as_ref() else {
                return Err(ctx.err(c.shape.span(), "chart.radius", "required for a ball chart"));
            };
            if *r.get_ref() <= 0.0 {
                return Err(ctx.err(r.span(), "chart.radius", "must be positive"));
            }
            ChartShape::Ball {
                radius: *r.get_ref(),
            }
        }
        "box" => {
            let (Some(lo), Some(hi)) = (c.lower.as_ref(), c.upper.as_ref()) else {
                return Err(ctx.err(
                    c.shape.span(),
                    "chart.lower",
                    "box charts need `lower` and `upper`",
                ));
            };
            let lower = vector(ctx, lo, n, "chart.lower")?;
            let upper = vector(ctx, hi, n, "chart.upper")?;
            if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
                return Err(ctx.err(hi.span(), "chart.upper", "must exceed `lower` componentwise"));
            }
            ChartShape::Box { lower, upper }
        }
        other => {
            return Err(ctx.err(
                c.shape.span(),
                "chart.shape",
                format!("unknown shape `{other}` (expected ball or box)"),
            ))
        }
    };
    Ok(Chart { shape, guard })
}

impl RawMeasure {
    /// Builds the measure; `text` is the document the table was read from.
    pub fn build(&self, n: usize, text: &str, prefix: &str) -> Result<MeasureSpec, SpecFileError> {
        let ctx = Ctx { text, prefix };
        match self.kind.get_ref().as_str() {
            "busemann-hausdorff" => {
                let quadrature = match self.quadrature.as_ref() {
                    Some(q) => {
                        if *q.get_ref() < 16 {
                            return Err(ctx.err(q.span(), "measure.quadrature", "must be at least 16"));
                        }
                        *q.get_ref() as usize
                    }
                    None => default_quadrature(n),
                };
                Ok(MeasureSpec::BusemannHausdorff { quadrature })
            }
            "explicit-density" => {
                let scale = self.scale.as_ref().map(|s| *s.get_ref()).unwrap_or(1.0);
                if scale <= 0.0 {
                    let span = self.scale.as_ref().map(|s| s.span()).unwrap_or(self.kind.span());
                    return Err(ctx.err(span, "measure.scale", "density must be positive"));
                }
                let Some(d) = self.density.as_ref() else {
                    return Err(ctx.err(
                        self.kind.span(),
                        "measure.density",
                        "required for explicit-density (constant or gaussian)",
                    ));
                };
                match d.get_ref().as_str() {
                    "constant" => Ok(MeasureSpec::ExplicitDensity(Density::Constant { scale })),
                    "gaussian" => Ok(MeasureSpec::ExplicitDensity(Density::Gaussian {
                        coefficient: self.coefficient.as_ref().map(|c| *c.get_ref()).unwrap_or(0.25),
                        scale,
                    })),
                    other => Err(ctx.err(
                        d.span(),
                        "measure.density",
                        format!("unknown density `{other}` (expected constant or gaussian)"),
                    )),
                }
            }
            other => Err(ctx.err(
                self.kind.span(),
                "measure.kind",
                format!("unknown kind `{other}` (expected busemann-hausdorff or explicit-density)"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_randers_spec() {
        let text = r#"
dimension = 2
family = "randers"

[params]
base = "euclidean"
b = [0.3, 0.0]
b_linear = [[0.0, 0.1], [-0.1, 0.0]]

[chart]
shape = "ball"
radius = 0.8

[measure]
kind = "busemann-hausdorff"
quadrature = 512
"#;
        let spec = parse_metric_spec(text).unwrap();
        assert_eq!(spec.dimension, 2);
        assert!(matches!(spec.family, Family::Randers { .. }));
        assert_eq!(spec.measure, MeasureSpec::BusemannHausdorff { quadrature: 512 });
        assert_eq!(spec.chart.shape, ChartShape::Ball { radius: 0.8 });
    }

    #[test]
    fn gaussian_soliton_defaults() {
        let text = "dimension = 3\nfamily = \"euclidean\"\n[measure]\nkind = \"explicit-density\"\ndensity = \"gaussian\"\n";
        let spec = parse_metric_spec(text).unwrap();
        assert_eq!(spec, MetricSpec::gaussian_soliton(3));
    }

    #[test]
    fn errors_cite_line_and_field() {
        let text = "dimension = 2\nfamily = \"riemannian\"\n[params]\nbase = \"torus\"\n";
        let e = parse_metric_spec(text).unwrap_err();
        assert_eq!(e.line, 4);
        assert_eq!(e.field, "params.base");

        let text = "dimension = 2\nfamily = \"minkowski-randers\"\n[params]\nb = [0.1, 0.2, 0.3]\n";
        let e = parse_metric_spec(text).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (4, "params.b"));

        let text = "dimension = 2\nfamily = \"euclidean\"\ncolour = 3\n";
        let e = parse_metric_spec(text).unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.field, "colour");

        let text = "family = \"euclidean\"\n";
        let e = parse_metric_spec(text).unwrap_err();
        assert_eq!(e.field, "dimension");
    }

    #[test]
    fn inline_metric_lines_refer_to_whole_document() {
        let text = "command = \"tensors\"\n\n[metric]\ndimension = 2\nfamily = \"spiral\"\n";
        let e = parse_inline_metric(text).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (5, "metric.family"));
    }
}
