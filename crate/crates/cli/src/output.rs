//! Text renderings of results: CSV tables, density dumps and JSON summaries.

use serde_json::{Map, Value};
use tfdw::model::RealField;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scientific notation with 17 significant digits, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

fn config_comment(cfg: &RunConfig, out: &mut String) {
    for (k, v) in cfg.entries() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
}

/// A CSV table whose comment header carries the tool version, the full
/// configuration and a description of every column.
pub struct Table {
    columns: Vec<(&'static str, &'static str)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<(&'static str, &'static str)>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self, subcommand: &str, cfg: &RunConfig) -> String {
        let mut out = format!("# tfdw {VERSION} {subcommand}\n");
        config_comment(cfg, &mut out);
        for (name, doc) in &self.columns {
            out.push_str(&format!("# column {name}: {doc}\n"));
        }
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| *n).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Field and density at every grid point, x-fastest.
pub fn density_dump(field: &RealField, cfg: &RunConfig) -> String {
    let grid = field.grid();
    let cell = grid.cell();
    let n = grid.n();
    let mut out = format!("# tfdw {VERSION} periodic-min density dump\n");
    out.push_str(&format!("# dims = {n} {n} {n}\n"));
    out.push_str(&format!(
        "# cell edge = {}, multiplier = {}, side = {}, spacing = {}\n",
        cell.edge,
        cell.multiplier,
        num(grid.side()),
        num(grid.spacing())
    ));
    out.push_str(&format!(
        "# lambda = {}, c = {}\n",
        cfg.params.lambda, cfg.params.c_dirac
    ));
    config_comment(cfg, &mut out);
    out.push_str("# row index = ix + n*(iy + n*iz); point = spacing*(ix, iy, iz)\n");
    out.push_str("# column w: minimizer value\n# column rho: density w^2\n");
    out.push_str("w,rho\n");
    for &w in field.values() {
        out.push_str(&num(w));
        out.push(',');
        out.push_str(&num(w * w));
        out.push('\n');
    }
    out
}

/// Summary envelope shared by every subcommand.
pub fn summary(
    subcommand: &str,
    cfg: &RunConfig,
    failure: Option<String>,
    results: Value,
) -> Value {
    let config: Map<String, Value> = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    serde_json::json!({
        "tool": "tfdw",
        "version": VERSION,
        "subcommand": subcommand,
        "seed": cfg.opts.seed,
        "config": config,
        "failed": failure.is_some(),
        "failure": failure,
        "results": results,
    })
}
