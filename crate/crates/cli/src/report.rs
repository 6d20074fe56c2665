//! Machine-readable reports.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Matrix2;
use polfocus_core::{DensityMatrix3, C64};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub results: Results,
    pub quadrature: QuadratureInfo,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    /// Row-major nested arrays of `[re, im]` pairs.
    pub matrices: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    pub scalars: BTreeMap<String, f64>,
    pub oracle_values: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    /// Plot-ready rows, emitted by `sweep`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureInfo {
    pub tol: f64,
    pub error_estimates: BTreeMap<String, f64>,
    pub converged: bool,
}

impl Results {
    pub fn matrix(&mut self, name: &str, rho: &DensityMatrix3) {
        self.matrices
            .insert(name.into(), rho.to_pairs().iter().map(|row| row.to_vec()).collect());
    }

    pub fn matrix2(&mut self, name: &str, m: &Matrix2<C64>) {
        let rows = (0..2)
            .map(|i| (0..2).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        self.matrices.insert(name.into(), rows);
    }

    pub fn scalar(&mut self, name: &str, v: f64) {
        self.scalars.insert(name.into(), v);
    }

    pub fn oracle(&mut self, name: &str, v: f64) {
        self.oracle_values.insert(name.into(), v);
    }

    pub fn residual(&mut self, name: &str, v: f64) {
        self.residuals.insert(name.into(), v);
    }
}

pub fn write_json(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, report)?;
    writeln!(out)
}

/// Sweep tables are written as rows; every other report in long form,
/// one `section,name,value` record per number.
pub fn write_csv(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(table) = &report.results.table {
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        return w.flush();
    }
    w.write_record(["section", "name", "value"])?;
    for (k, v) in &report.params {
        let s = match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        w.write_record(["params", k.as_str(), s.as_str()])?;
    }
    for (name, rows) in &report.results.matrices {
        for (i, row) in rows.iter().enumerate() {
            for (j, [re, im]) in row.iter().enumerate() {
                w.write_record(["matrices", &format!("{name}[{i}][{j}].re"), &re.to_string()])?;
                w.write_record(["matrices", &format!("{name}[{i}][{j}].im"), &im.to_string()])?;
            }
        }
    }
    let sections = [
        ("scalars", &report.results.scalars),
        ("oracle_values", &report.results.oracle_values),
        ("residuals", &report.results.residuals),
        ("error_estimates", &report.quadrature.error_estimates),
    ];
    for (section, map) in sections {
        for (k, v) in map {
            w.write_record([section, k.as_str(), &v.to_string()])?;
        }
    }
    w.write_record(["quadrature", "tol", &report.quadrature.tol.to_string()])?;
    w.write_record(["quadrature", "converged", &report.quadrature.converged.to_string()])?;
    w.flush()
}
