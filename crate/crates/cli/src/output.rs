//! Report serialization: JSON with 17 significant digits, CSV tables and
//! plot data.

use std::io;
use std::path::{Path, PathBuf};

use finsler_core::BoundReport;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Files produced by a run, written together once every check is done.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    pub fn add(&mut self, rel: impl Into<PathBuf>, content: String) {
        self.files.push((rel.into(), content));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn get(&self, rel: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(rel))
            .map(|(_, c)| c.as_str())
    }

    pub fn write(&self, root: &Path) -> io::Result<()> {
        for (rel, content) in &self.files {
            let path = root.join(rel);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, content)?;
        }
        Ok(())
    }
}

pub const PLOT_COLUMNS: [&str; 9] = [
    "d",
    "S",
    "tau",
    "R",
    "bound_S",
    "bound_tau_lo",
    "bound_tau_hi",
    "bound_R_lo",
    "bound_R_hi",
];

/// Plot tables of a bound report: one per geodesic, then the aggregate
/// (which prepends a `geodesic` index column). Bounds a check does not
/// state are written as `nan`.
pub fn plot_tables(report: &BoundReport) -> (Vec<Table>, Table) {
    let header = || PLOT_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut agg_cols = vec!["geodesic".to_string()];
    agg_cols.extend(header());
    let mut aggregate = Table::new(agg_cols);
    let mut per = Vec::with_capacity(report.rows.len());
    for (g, rows) in report.rows.iter().enumerate() {
        let mut t = Table::new(header());
        let opt = |c: &Option<Vec<f64>>, k: usize| c.as_ref().map_or(f64::NAN, |v| v[k]);
        for k in 0..rows.d.len() {
            let row = vec![
                rows.d[k],
                rows.s[k],
                rows.tau[k],
                rows.scalar_r[k],
                opt(&rows.bound_s, k),
                opt(&rows.bound_tau_lo, k),
                opt(&rows.bound_tau_hi, k),
                opt(&rows.bound_r_lo, k),
                opt(&rows.bound_r_hi, k),
            ];
            let mut arow = vec![g as f64];
            arow.extend_from_slice(&row);
            aggregate.rows.push(arow);
            t.rows.push(row);
        }
        per.push(t);
    }
    (per, aggregate)
}

/// Adds `plot/<theorem>_<k>.csv` per geodesic and `plot/<theorem>_all.csv`.
pub fn emit_plotdata(report: &BoundReport, artifacts: &mut Artifacts) {
    let (per, aggregate) = plot_tables(report);
    for (k, t) in per.iter().enumerate() {
        artifacts.add(format!("plot/{}_{k:03}.csv", report.theorem), t.to_csv());
    }
    artifacts.add(format!("plot/{}_all.csv", report.theorem), aggregate.to_csv());
}
