use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::EvalMethod;

/// Bumped whenever a field of the JSON or CSV output changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "method,expression_id,median_s,min_s,evals_per_s,n_points,repetitions,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub schema_version: u32,
    pub seed: u64,
    pub n_points: usize,
    pub repetitions: usize,
    pub min_window_s: f64,
    pub clock: String,
    pub build_profile: String,
    pub rng: String,
    /// SHA-256 of the input point sequence.
    pub input_hash: String,
    pub threads: usize,
}

/// Timing for one (method, function) pair. Times are CPU seconds per sweep
/// over all `n_points` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: EvalMethod,
    pub expression_id: u32,
    pub median_s: f64,
    pub min_s: f64,
    pub evals_per_s: f64,
    pub n_points: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Sum of the function over all input points, from the warm-up sweep.
    pub checksum: f64,
    pub input_hash: String,
    /// Seconds per sweep, one entry per repetition.
    pub repetition_s: Vec<f64>,
    /// Sweeps run in each repetition's window.
    pub sweeps: Vec<u64>,
    /// Length of each repetition's window.
    pub window_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub metadata: ReportMetadata,
    pub cells: Vec<Cell>,
}

impl BenchReport {
    pub fn cell(&self, method: EvalMethod, expression_id: u32) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.expression_id == expression_id)
    }

    /// Methods present, in canonical order.
    pub fn methods(&self) -> Vec<EvalMethod> {
        let mut m: Vec<_> = self.cells.iter().map(|c| c.method).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn expression_ids(&self) -> Vec<u32> {
        let mut ids: Vec<_> = self.cells.iter().map(|c| c.expression_id).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Sum of per-function medians for `method`.
    pub fn total_median(&self, method: EvalMethod) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.method == method)
            .map(|c| c.median_s)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!(
                "unknown format '{s}' (expected table, csv or json)"
            )),
        }
    }
}

pub fn emit_report(r: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => table(r),
        ReportFormat::Csv => csv(r),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn csv(r: &BenchReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &r.cells {
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{},{},{}",
            c.method,
            c.expression_id,
            c.median_s,
            c.min_s,
            c.evals_per_s,
            c.n_points,
            c.repetitions,
            c.seed
        );
    }
    out
}

fn table(r: &BenchReport) -> String {
    let m = &r.metadata;
    let ids = r.expression_ids();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Median CPU seconds per sweep of {} points (seed {}, median of {} repetitions, windows >= {} s)",
        m.n_points, m.seed, m.repetitions, m.min_window_s
    );
    let _ = writeln!(out, "clock: {}", m.clock);
    let _ = writeln!(out, "build: {}", m.build_profile);
    let _ = writeln!(out);

    let _ = write!(out, "{:<12}", "Method");
    for id in &ids {
        let _ = write!(out, " {:>10}", format!("f{id}"));
    }
    let _ = writeln!(out, " {:>10}", "Total");
    for method in r.methods() {
        let _ = write!(out, "{:<12}", method.label());
        for &id in &ids {
            match r.cell(method, id) {
                Some(c) => {
                    let _ = write!(out, " {:>10.3e}", c.median_s);
                }
                None => {
                    let _ = write!(out, " {:>10}", "-");
                }
            }
        }
        let _ = writeln!(out, " {:>10.3e}", r.total_median(method));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(method: EvalMethod, id: u32, median_s: f64) -> Cell {
        Cell {
            method,
            expression_id: id,
            median_s,
            min_s: median_s * 0.9,
            evals_per_s: 5000.0 / median_s,
            n_points: 5000,
            repetitions: 3,
            seed: 42,
            checksum: 1_234.567_890_123_456_7,
            input_hash: "ab".repeat(32),
            repetition_s: vec![median_s * 0.9, median_s, median_s * 1.1],
            sweeps: vec![10, 11, 12],
            window_s: vec![0.1, 0.1, 0.1],
        }
    }

    fn report(cells: Vec<Cell>) -> BenchReport {
        BenchReport {
            metadata: ReportMetadata {
                schema_version: SCHEMA_VERSION,
                seed: 42,
                n_points: 5000,
                repetitions: 3,
                min_window_s: 0.1,
                clock: "test clock".into(),
                build_profile: "test".into(),
                rng: "test rng".into(),
                input_hash: "ab".repeat(32),
                threads: 1,
            },
            cells,
        }
    }

    #[test]
    fn table_has_one_row_per_method() {
        let cells = EvalMethod::ALL
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| (1..=8).map(move |id| cell(m, id, 1e-5 * (i + 1) as f64)))
            .collect();
        let t = emit_report(&report(cells), ReportFormat::Table);
        let rows: Vec<&str> = t.lines().skip(5).collect();
        assert_eq!(rows.len(), 4);
        for (row, label) in rows.iter().zip(["Black-box", "Binary", "N-ary", "String"]) {
            assert!(row.starts_with(label), "{row}");
            assert_eq!(row.split_whitespace().count(), 1 + 8 + 1);
        }
    }

    #[test]
    fn minimal_csv() {
        let out = emit_report(
            &report(vec![cell(EvalMethod::NaryTree, 7, 2.5e-5)]),
            ReportFormat::Csv,
        );
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "nary");
        assert_eq!(fields[1], "7");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 2.5e-5);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = report(vec![
            cell(EvalMethod::BlackBox, 1, 1.0 / 3.0 * 1e-5),
            cell(EvalMethod::StringParse, 8, std::f64::consts::PI * 1e-4),
        ]);
        let json = emit_report(&r, ReportFormat::Json);
        let back: BenchReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        for (a, b) in back.cells.iter().zip(&r.cells) {
            assert_eq!(a.median_s.to_bits(), b.median_s.to_bits());
            assert_eq!(a.checksum.to_bits(), b.checksum.to_bits());
        }
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["cells"][1]["method"], "string");
    }
}
