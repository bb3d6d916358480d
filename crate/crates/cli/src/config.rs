//! Run configuration files.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use finsler_core::metrics::{parse_inline_metric, RawMeasure, SpecFileError};
use finsler_core::{parse_metric_spec, MetricSpec, Profile, SigmaMode, SolitonKind};
use serde::Deserialize;
use toml::Spanned;

/// Bad configuration, located by line and dotted field name. Line 0 means
/// the problem is not tied to a place in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigInvalid {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config field `{}`: {}", self.field, self.message)
        } else {
            write!(
                f,
                "config line {}, field `{}`: {}",
                self.line, self.field, self.message
            )
        }
    }
}

impl std::error::Error for ConfigInvalid {}

impl From<SpecFileError> for ConfigInvalid {
    fn from(e: SpecFileError) -> Self {
        ConfigInvalid {
            line: e.line,
            field: e.field,
            message: e.message,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tensors,
    Geodesic,
    SolitonCheck,
    IdentitySuite,
    VerifyBounds,
    BerwaldCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Tensors,
        Command::Geodesic,
        Command::SolitonCheck,
        Command::IdentitySuite,
        Command::VerifyBounds,
        Command::BerwaldCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tensors => "tensors",
            Command::Geodesic => "geodesic",
            Command::SolitonCheck => "soliton-check",
            Command::IdentitySuite => "identity-suite",
            Command::VerifyBounds => "verify-bounds",
            Command::BerwaldCheck => "berwald-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Bound checks selectable under `verify-bounds`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCheck {
    SolitonGrowth,
    LinearGrowth,
    SecondVariation,
}

impl BoundCheck {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "soliton-growth" => Some(BoundCheck::SolitonGrowth),
            "linear-growth" => Some(BoundCheck::LinearGrowth),
            "second-variation" => Some(BoundCheck::SecondVariation),
            _ => None,
        }
    }
}

fn parse_sigma(s: &str) -> Option<SigmaMode> {
    match s {
        "constant-half" | "constant-1/2" => Some(SigmaMode::ConstantHalf),
        "function-on-SM" | "function-on-sm" => Some(SigmaMode::FunctionOnSM),
        "function-on-M" | "function-on-m" => Some(SigmaMode::FunctionOnM),
        _ => None,
    }
}

/// Command parameters; every field has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub point: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub pole: Option<Vec<f64>>,
    pub fan: usize,
    pub t_max: Option<f64>,
    pub tolerance: Option<f64>,
    pub kind: SolitonKind,
    pub sigma: SigmaMode,
    pub samples: usize,
    pub directions: usize,
    pub frac: f64,
    pub k1: f64,
    pub checks: Vec<BoundCheck>,
    pub profiles: Vec<Profile>,
    pub t0: f64,
    pub fields: Vec<String>,
    pub key_formula: bool,
    pub landsberg: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            point: None,
            direction: None,
            pole: None,
            fan: 16,
            t_max: None,
            tolerance: None,
            kind: SolitonKind::AsymmetricEssential,
            sigma: SigmaMode::ConstantHalf,
            samples: 50,
            directions: 1,
            frac: 0.5,
            k1: 0.0,
            checks: vec![BoundCheck::SolitonGrowth, BoundCheck::LinearGrowth],
            profiles: vec![Profile::Piecewise, Profile::SinBump],
            t0: 2.0,
            fields: ["F", "S", "tau", "Ric", "scalarR"].map(String::from).to_vec(),
            key_formula: false,
            landsberg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub metric: MetricSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Spanned<String>>,
    seed: Option<Spanned<i64>>,
    out: Option<Spanned<String>>,
    metric: Option<Spanned<toml::Value>>,
    measure: Option<RawMeasure>,
    params: Option<RawParams>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    point: Option<Spanned<Vec<f64>>>,
    direction: Option<Spanned<Vec<f64>>>,
    pole: Option<Spanned<Vec<f64>>>,
    fan: Option<Spanned<i64>>,
    t_max: Option<Spanned<f64>>,
    tolerance: Option<Spanned<f64>>,
    kind: Option<Spanned<String>>,
    sigma: Option<Spanned<String>>,
    samples: Option<Spanned<i64>>,
    directions: Option<Spanned<i64>>,
    frac: Option<Spanned<f64>>,
    k1: Option<Spanned<f64>>,
    checks: Option<Spanned<Vec<String>>>,
    profiles: Option<Spanned<Vec<String>>>,
    t0: Option<Spanned<f64>>,
    fields: Option<Spanned<Vec<String>>>,
    key_formula: Option<bool>,
    landsberg: Option<bool>,
}

/// Overrides applied on top of the file, typically from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

struct Doc<'a> {
    text: &'a str,
}

impl Doc<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> Result<T, ConfigInvalid> {
        Err(ConfigInvalid {
            line: self.line(span),
            field: field.to_string(),
            message: message.into(),
        })
    }

    fn count(&self, v: &Option<Spanned<i64>>, field: &str, min: i64, default: usize) -> Result<usize, ConfigInvalid> {
        match v {
            None => Ok(default),
            Some(s) if *s.get_ref() >= min => Ok(*s.get_ref() as usize),
            Some(s) => self.err(s.span(), field, format!("must be at least {min}")),
        }
    }

    fn positive(&self, v: &Option<Spanned<f64>>, field: &str) -> Result<Option<f64>, ConfigInvalid> {
        match v {
            None => Ok(None),
            Some(s) if *s.get_ref() > 0.0 && s.get_ref().is_finite() => Ok(Some(*s.get_ref())),
            Some(s) => self.err(s.span(), field, "must be positive and finite"),
        }
    }

    fn vector(&self, v: &Option<Spanned<Vec<f64>>>, field: &str, n: usize) -> Result<Option<Vec<f64>>, ConfigInvalid> {
        match v {
            None => Ok(None),
            Some(s) if s.get_ref().len() == n => Ok(Some(s.get_ref().clone())),
            Some(s) => self.err(
                s.span(),
                field,
                format!("expected {n} components, got {}", s.get_ref().len()),
            ),
        }
    }

    fn list<T>(
        &self,
        v: &Option<Spanned<Vec<String>>>,
        field: &str,
        parse: impl Fn(&str) -> Option<T>,
        default: Vec<T>,
    ) -> Result<Vec<T>, ConfigInvalid> {
        let Some(s) = v else { return Ok(default) };
        if s.get_ref().is_empty() {
            return self.err(s.span(), field, "must not be empty");
        }
        s.get_ref()
            .iter()
            .map(|name| match parse(name) {
                Some(t) => Ok(t),
                None => self.err(s.span(), field, format!("unknown entry `{name}`")),
            })
            .collect()
    }
}

fn from_toml(text: &str, e: toml::de::Error) -> ConfigInvalid {
    let msg = e.message().to_string();
    ConfigInvalid {
        line: e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1),
        field: msg.split('`').nth(1).unwrap_or("<document>").to_string(),
        message: msg,
    }
}

impl RunConfig {
    /// Reads a config file; a `metric = "<path>"` entry is resolved
    /// relative to the file's directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigInvalid> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigInvalid {
            line: 0,
            field: "<file>".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RunConfig::parse(&text, base, overrides)
    }

    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigInvalid> {
        let doc = Doc { text };
        let raw: RawConfig = toml::from_str(text).map_err(|e| from_toml(text, e))?;

        let command = match (overrides.command, &raw.command) {
            (Some(c), _) => c,
            (None, Some(s)) => match Command::parse(s.get_ref()) {
                Some(c) => c,
                None => return doc.err(s.span(), "command", format!("unknown command `{}`", s.get_ref())),
            },
            (None, None) => {
                return Err(ConfigInvalid {
                    line: 0,
                    field: "command".into(),
                    message: "no command given in the file or on the command line".into(),
                })
            }
        };

        let Some(metric_entry) = &raw.metric else {
            return Err(ConfigInvalid {
                line: 0,
                field: "metric".into(),
                message: "missing metric (a spec file path or a [metric] table)".into(),
            });
        };
        let mut metric = match metric_entry.get_ref() {
            toml::Value::String(p) => {
                let file = base.join(p);
                let spec_text = std::fs::read_to_string(&file).map_err(|e| ConfigInvalid {
                    line: doc.line(metric_entry.span()),
                    field: "metric".into(),
                    message: format!("cannot read {}: {e}", file.display()),
                })?;
                parse_metric_spec(&spec_text).map_err(|e| ConfigInvalid {
                    line: doc.line(metric_entry.span()),
                    field: "metric".into(),
                    message: format!("{}: {e}", file.display()),
                })?
            }
            toml::Value::Table(_) => parse_inline_metric(text)?,
            _ => return doc.err(metric_entry.span(), "metric", "expected a path or a table"),
        };
        let n = metric.dim();
        if let Some(m) = &raw.measure {
            metric.measure = m.build(n, text, "")?;
        }

        let seed = match (overrides.seed, &raw.seed) {
            (Some(s), _) => s,
            (None, Some(s)) if *s.get_ref() >= 0 => *s.get_ref() as u64,
            (None, Some(s)) => return doc.err(s.span(), "seed", "must be nonnegative"),
            (None, None) => 0,
        };
        let out = match (&overrides.out, &raw.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o.get_ref()),
            (None, None) => base.join("out"),
        };

        let rp = raw.params.unwrap_or_default();
        let d = Params::default();
        let p = |f: &str| format!("params.{f}");
        let params = Params {
            point: doc.vector(&rp.point, &p("point"), n)?,
            direction: doc.vector(&rp.direction, &p("direction"), n)?,
            pole: doc.vector(&rp.pole, &p("pole"), n)?,
            fan: doc.count(&rp.fan, &p("fan"), 4, d.fan)?,
            t_max: doc.positive(&rp.t_max, &p("t_max"))?,
            tolerance: doc.positive(&rp.tolerance, &p("tolerance"))?,
            kind: match &rp.kind {
                None => d.kind,
                Some(s) => match SolitonKind::parse(s.get_ref()) {
                    Some(k) => k,
                    None => return doc.err(s.span(), &p("kind"), format!("unknown soliton kind `{}`", s.get_ref())),
                },
            },
            sigma: match &rp.sigma {
                None => d.sigma,
                Some(s) => match parse_sigma(s.get_ref()) {
                    Some(m) => m,
                    None => return doc.err(s.span(), &p("sigma"), format!("unknown sigma mode `{}`", s.get_ref())),
                },
            },
            samples: doc.count(&rp.samples, &p("samples"), 1, d.samples)?,
            directions: doc.count(&rp.directions, &p("directions"), 1, d.directions)?,
            frac: match &rp.frac {
                None => d.frac,
                Some(s) if *s.get_ref() > 0.0 && *s.get_ref() <= 1.0 => *s.get_ref(),
                Some(s) => return doc.err(s.span(), &p("frac"), "must lie in (0, 1]"),
            },
            k1: match &rp.k1 {
                None => d.k1,
                Some(s) if *s.get_ref() >= 0.0 => *s.get_ref(),
                Some(s) => return doc.err(s.span(), &p("k1"), "must be nonnegative"),
            },
            checks: doc.list(&rp.checks, &p("checks"), BoundCheck::parse, d.checks)?,
            profiles: doc.list(&rp.profiles, &p("profiles"), Profile::parse, d.profiles)?,
            t0: doc.positive(&rp.t0, &p("t0"))?.unwrap_or(d.t0),
            fields: doc.list(
                &rp.fields,
                &p("fields"),
                |s| finsler_core::Field::parse(s).map(|_| s.to_string()),
                d.fields,
            )?,
            key_formula: rp.key_formula.unwrap_or(d.key_formula),
            landsberg: rp.landsberg.unwrap_or(d.landsberg),
        };

        Ok(RunConfig {
            command,
            metric,
            seed,
            out,
            params,
        })
    }
}
