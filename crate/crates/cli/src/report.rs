//! Result tables, plots and checks, and their on-disk form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Int,
    Float,
    Text,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Int(_) => ColumnKind::Int,
            Cell::Float(_) => ColumnKind::Float,
            Cell::Text(_) => ColumnKind::Text,
            Cell::Bool(_) => ColumnKind::Bool,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// Floats with 17 significant digits, so values round-trip exactly.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A typed table. The schema is fixed at construction and every row is checked against it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[(&str, ColumnKind)]) -> Self {
        ResultTable {
            name: name.to_string(),
            columns: columns.iter().map(|(n, k)| Column { name: n.to_string(), kind: *k }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Schema {
                table: self.name.clone(),
                message: format!("row has {} cells, schema has {} columns", row.len(), self.columns.len()),
            });
        }
        for (cell, col) in row.iter().zip(&self.columns) {
            if cell.kind() != col.kind {
                return Err(CliError::Schema {
                    table: self.name.clone(),
                    message: format!("column `{}` expects {:?}, got {:?}", col.name, col.kind, cell.kind()),
                });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.to_string(), points, style: Style::Line }
    }

    pub fn points(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.to_string(), points, style: Style::Points }
    }
}

/// A categorical raster on a regular grid; cells are `(x, y, category index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub categories: Vec<(String, &'static str)>,
    pub cells: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotBody {
    Curves(Vec<Series>),
    Raster(Raster),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub body: PlotBody,
}

impl Plot {
    pub fn curves(name: &str, title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Self {
        Plot {
            name: name.to_string(),
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_x: false,
            log_y: false,
            body: PlotBody::Curves(series),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    /// Exactly the plotted data, one row per point.
    pub fn data_table(&self) -> ResultTable {
        match &self.body {
            PlotBody::Curves(series) => {
                let mut t =
                    ResultTable::new(&self.name, &[("series", ColumnKind::Text), ("x", ColumnKind::Float), ("y", ColumnKind::Float)]);
                for s in series {
                    for &(x, y) in &s.points {
                        t.rows.push(vec![s.name.as_str().into(), x.into(), y.into()]);
                    }
                }
                t
            }
            PlotBody::Raster(r) => {
                let mut t =
                    ResultTable::new(&self.name, &[("x", ColumnKind::Float), ("y", ColumnKind::Float), ("category", ColumnKind::Text)]);
                for &(x, y, c) in &r.cells {
                    t.rows.push(vec![x.into(), y.into(), r.categories[c].0.as_str().into()]);
                }
                t
            }
        }
    }
}

/// An acceptance check: a measured value against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

/// Everything a scenario produces.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<ResultTable>,
    pub plots: Vec<Plot>,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Size of the worker pool the report was produced on; only written to the timing file.
    pub threads: usize,
}

impl Report {
    pub fn table(&mut self, t: ResultTable) {
        self.tables.push(t);
    }

    pub fn plot(&mut self, p: Plot) {
        self.plots.push(p);
    }

    pub fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn check(&mut self, name: &str, value: f64, target: impl Into<String>, pass: bool) -> bool {
        self.checks.push(Check { name: name.to_string(), value, target: target.into(), pass });
        pass
    }

    /// `|value - expected| <= tol`.
    pub fn check_abs(&mut self, name: &str, value: f64, expected: f64, tol: f64) -> bool {
        let pass = (value - expected).abs() <= tol;
        self.check(name, value, format!("{expected} ± {tol}"), pass)
    }

    /// `|value / expected - 1| <= rel`.
    pub fn check_rel(&mut self, name: &str, value: f64, expected: f64, rel: f64) -> bool {
        let pass = (value / expected - 1.0).abs() <= rel;
        self.check(name, value, format!("{expected} within {}%", rel * 100.0), pass)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Merges another report, prefixing its names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        let p = |s: &str| format!("{prefix}.{s}");
        for mut t in other.tables {
            t.name = p(&t.name);
            self.tables.push(t);
        }
        for mut pl in other.plots {
            pl.name = p(&pl.name);
            self.plots.push(pl);
        }
        for mut c in other.checks {
            c.name = p(&c.name);
            self.checks.push(c);
        }
        for (k, v) in other.metrics {
            self.metrics.insert(p(&k), v);
        }
        self.notes.extend(other.notes);
    }

    /// Writes CSV tables, SVG plots with their data, `summary.json` and `timing.json`.
    /// Everything except `timing.json` is a pure function of the config.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig, wall_seconds: f64) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let provenance = json!({
            "config_hash": cfg.hash(),
            "seed": cfg.seed,
            "scenario": cfg.scenario,
            "versions": { "rwre-cli": env!("CARGO_PKG_VERSION"), "rwre-core": env!("CARGO_PKG_VERSION") },
        });
        let mut tables = serde_json::Map::new();
        for t in &self.tables {
            write_file(&dir.join(format!("{}.csv", t.name)), &t.to_csv()?)?;
            tables.insert(t.name.clone(), json!({ "columns": t.columns, "rows": t.rows.len(), "provenance": provenance }));
        }
        let mut plots = serde_json::Map::new();
        for p in &self.plots {
            let data = p.data_table();
            write_file(&dir.join(format!("{}.csv", p.name)), &data.to_csv()?)?;
            write_file(&dir.join(format!("{}.svg", p.name)), svg::render(p).as_bytes())?;
            plots.insert(p.name.clone(), json!({ "data": format!("{}.csv", p.name), "points": data.rows.len() }));
        }
        let metrics: serde_json::Map<String, serde_json::Value> =
            self.metrics.iter().map(|(k, v)| (k.clone(), finite_or_string(*v))).collect();
        let checks: Vec<serde_json::Value> = self
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "value": finite_or_string(c.value), "target": c.target, "pass": c.pass }))
            .collect();
        let summary = json!({
            "provenance": provenance,
            "config": cfg_without_runtime(cfg),
            "passed": self.passed(),
            "checks": checks,
            "metrics": metrics,
            "notes": self.notes,
            "tables": tables,
            "plots": plots,
        });
        write_file(&dir.join("summary.json"), pretty(&summary)?.as_bytes())?;
        let timing = json!({ "config_hash": cfg.hash(), "wall_seconds": wall_seconds, "threads": self.threads });
        write_file(&dir.join("timing.json"), pretty(&timing)?.as_bytes())
    }

    /// Human-readable check table.
    pub fn render_checks(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{}  {:width$}  {:<24}  target {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                format!("{:.6}", c.value),
                c.target,
            ));
        }
        out
    }
}

fn cfg_without_runtime(cfg: &ExperimentConfig) -> serde_json::Value {
    let mut c = cfg.clone();
    c.threads = None;
    c.output = None;
    serde_json::to_value(c).expect("configs always serialize")
}

/// JSON has no infinities; they are spelled out.
fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(float(v))
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
