//! Cross-method agreement check.

use std::fmt;

use crate::eval::{eval_binary, eval_nary, Bindings, EvalMethod};
use crate::parser::{eval_string, SymbolTable};

use super::{generate_inputs, select, BenchError, TestFunction};

/// `|a - b| / max(|a|, |b|)`; 0 when the two are equal (including both
/// zero), infinite when exactly one is NaN.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        return 0.0;
    }
    let d = (a - b).abs() / a.abs().max(b.abs());
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offender {
    pub point_index: usize,
    pub x: f64,
    pub y: f64,
    pub methods: (EvalMethod, EvalMethod),
    pub values: (f64, f64),
    pub deviation: f64,
}

impl fmt::Display for Offender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vs {} at point {} (x={}, y={}): {} vs {} (relative deviation {:.3e})",
            self.methods.0,
            self.methods.1,
            self.point_index,
            self.x,
            self.y,
            self.values.0,
            self.values.1,
            self.deviation
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionValidation {
    pub id: u32,
    pub display: &'static str,
    pub max_deviation: f64,
    /// The pair and point behind `max_deviation`; `None` when nothing was compared.
    pub worst: Option<Offender>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub sig_digits: u32,
    pub threshold: f64,
    pub n_points: usize,
    pub seed: u64,
    pub methods: Vec<EvalMethod>,
    pub expressions: Vec<ExpressionValidation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.expressions
            .iter()
            .all(|e| e.max_deviation <= self.threshold)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ExpressionValidation> {
        self.expressions
            .iter()
            .filter(|e| e.max_deviation > self.threshold)
    }

    /// The single largest deviation across all expressions.
    pub fn worst(&self) -> Option<&ExpressionValidation> {
        self.expressions
            .iter()
            .max_by(|a, b| a.max_deviation.total_cmp(&b.max_deviation))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure {
    pub report: ValidationReport,
}

impl std::error::Error for ValidationFailure {}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "methods disagree beyond {} significant digits (threshold {:.1e}):",
            self.report.sig_digits, self.report.threshold
        )?;
        for e in self.report.failures() {
            write!(f, "\n  function {} ({}): ", e.id, e.display)?;
            match &e.worst {
                Some(o) => write!(f, "{o}")?,
                None => write!(f, "max deviation {:.3e}", e.max_deviation)?,
            }
        }
        Ok(())
    }
}

fn value_of(method: EvalMethod, f: &TestFunction, b: &Bindings) -> Result<f64, BenchError> {
    let v = match method {
        EvalMethod::BlackBox => (f.native)(b.get(0)?, b.get(1)?),
        EvalMethod::BinaryTree => eval_binary(&f.binary, b)?.value,
        EvalMethod::NaryTree => eval_nary(&f.nary, b)?.value,
        EvalMethod::StringParse => eval_string(f.source, SymbolTable::default_ref(), b)?,
    };
    Ok(v)
}

/// Evaluates each selected function at `n_points` seeded points with every
/// selected method and compares all method pairs. Passes iff every relative
/// deviation is at most `0.5 * 10^-sig_digits`.
pub fn cross_validate(
    suite: &[TestFunction],
    methods: &[EvalMethod],
    expressions: &[u32],
    n_points: usize,
    seed: u64,
    sig_digits: u32,
) -> Result<ValidationReport, BenchError> {
    if sig_digits == 0 {
        return Err(BenchError::InvalidConfig(
            "tolerance must be at least 1 significant digit".into(),
        ));
    }
    let threshold = 0.5 * 10f64.powi(-(sig_digits as i32));
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let points = generate_inputs(n_points, seed);

    let mut results = Vec::new();
    for f in select(suite, expressions) {
        let mut max_deviation = 0.0;
        let mut worst = None;
        for (point_index, &(x, y)) in points.iter().enumerate() {
            let b = Bindings::xy(x, y)?;
            let values = methods
                .iter()
                .map(|&m| value_of(m, &f, &b))
                .collect::<Result<Vec<_>, _>>()?;
            for i in 0..methods.len() {
                for j in i + 1..methods.len() {
                    let deviation = relative_deviation(values[i], values[j]);
                    if worst.is_none() || deviation > max_deviation {
                        max_deviation = deviation;
                        worst = Some(Offender {
                            point_index,
                            x,
                            y,
                            methods: (methods[i], methods[j]),
                            values: (values[i], values[j]),
                            deviation,
                        });
                    }
                }
            }
        }
        results.push(ExpressionValidation {
            id: f.id.get(),
            display: f.display,
            max_deviation,
            worst,
        });
    }

    let report = ValidationReport {
        sig_digits,
        threshold,
        n_points,
        seed,
        methods,
        expressions: results,
    };
    if report.passed() {
        Ok(report)
    } else {
        Err(ValidationFailure { report }.into())
    }
}
