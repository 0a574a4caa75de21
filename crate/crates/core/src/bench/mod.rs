//! Timed comparison of the four evaluation methods on the standard suite.
//!
//! For every (method, function) cell the harness prepares the method's source
//! once (untimed), runs one untimed warm-up sweep over all input points, then
//! times `repetitions` windows. A window keeps sweeping until at least
//! `min_window` of CPU time has elapsed, so clock resolution never dominates.
//! Each repetition yields seconds per sweep; the cell reports their median and
//! minimum. Measurement is single-threaded.
//!
//! Inputs come from `ChaCha8Rng::seed_from_u64(seed)`; each point draws `x`
//! then `y` as uniform `f64` in `[0, 1)`.

mod clock;
mod report;
mod suite;
mod validate;

use std::hint::black_box;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{
    blackbox_lookup, sweep_blackbox, walk_unchecked, BlackBoxId, EvalError, EvalMethod, NativeFn,
};
use crate::expr::ExprNode;
use crate::parser::{eval_string_fast, SymbolTable};

pub use clock::{ClockKind, CpuClock};
pub use report::{emit_report, BenchReport, Cell, ReportFormat, ReportMetadata, SCHEMA_VERSION};
pub use suite::{select, standard_suite, TestFunction};
pub use validate::{
    cross_validate, relative_deviation, ExpressionValidation, Offender, ValidationFailure,
    ValidationReport,
};

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(seed); x then y per point, uniform f64 in [0,1)";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("CPU clock unavailable: {0}")]
    ClockUnavailable(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Validation(#[from] ValidationFailure),
    #[error("{method} on function {id} produced different sums on identical sweeps")]
    NonDeterministic { method: EvalMethod, id: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n_points: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub min_window: Duration,
    pub methods: Vec<EvalMethod>,
    pub expressions: Vec<u32>,
    pub clock: ClockKind,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_points: 5000,
            seed: 42,
            repetitions: 10,
            min_window: Duration::from_millis(100),
            methods: EvalMethod::ALL.to_vec(),
            expressions: (1..=8).collect(),
            clock: ClockKind::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::InvalidConfig(msg.to_owned()));
        if self.n_points == 0 {
            return bad("n_points must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.min_window.is_zero() {
            return bad("min_window must be positive");
        }
        if self.methods.is_empty() {
            return bad("at least one method must be selected");
        }
        if self.expressions.is_empty() {
            return bad("at least one expression must be selected");
        }
        if let Some(id) = self.expressions.iter().find(|id| !(1..=8).contains(*id)) {
            return Err(BenchError::InvalidConfig(format!(
                "expression id {id} is outside 1..=8"
            )));
        }
        Ok(())
    }
}

/// `n` seeded points, uniform in the unit square.
pub fn generate_inputs(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            (x, y)
        })
        .collect()
}

/// SHA-256 over the little-endian bit patterns of every coordinate, in order.
pub fn input_hash(points: &[(f64, f64)]) -> String {
    let mut hasher = Sha256::new();
    for &(x, y) in points {
        hasher.update(x.to_bits().to_le_bytes());
        hasher.update(y.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// A method's source, prepared outside the timed region.
#[derive(Clone, Copy)]
enum Prepared<'a> {
    /// The suite's own compiled routine, inlined into the sweep loop.
    BlackBox(BlackBoxId),
    /// A replacement routine reached through a function pointer.
    Native(NativeFn),
    Tree(&'a ExprNode),
    Text(&'a str, &'a SymbolTable),
}

impl<'a> Prepared<'a> {
    fn new(method: EvalMethod, f: &'a TestFunction) -> Result<Prepared<'a>, BenchError> {
        let tree = |t: &'a ExprNode| {
            if t.variable_span() > 2 {
                return Err(BenchError::Eval(EvalError::UnboundVariable {
                    index: t.variable_span() - 1,
                    bound: 2,
                }));
            }
            Ok(Prepared::Tree(t))
        };
        match method {
            EvalMethod::BlackBox if std::ptr::fn_addr_eq(f.native, blackbox_lookup(f.id)) => {
                Ok(Prepared::BlackBox(f.id))
            }
            EvalMethod::BlackBox => Ok(Prepared::Native(f.native)),
            EvalMethod::BinaryTree => tree(&f.binary),
            EvalMethod::NaryTree => tree(&f.nary),
            EvalMethod::StringParse => Ok(Prepared::Text(f.source, SymbolTable::default_ref())),
        }
    }

    /// One pass over every point; returns the sum of the results.
    #[inline(never)]
    fn sweep(self, points: &[[f64; 2]]) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        match self {
            Prepared::BlackBox(id) => acc = sweep_blackbox(id, points),
            Prepared::Native(f) => {
                for p in points {
                    acc += f(p[0], p[1]);
                }
            }
            Prepared::Tree(t) => {
                for p in points {
                    acc += walk_unchecked(t, p);
                }
            }
            Prepared::Text(s, symbols) => {
                for p in points {
                    acc += eval_string_fast(s, symbols, p)?;
                }
            }
        }
        Ok(acc)
    }
}

struct Measurement {
    checksum: f64,
    per_sweep: Vec<f64>,
    sweeps: Vec<u64>,
    windows: Vec<f64>,
}

fn measure(
    prepared: Prepared<'_>,
    points: &[[f64; 2]],
    cfg: &BenchConfig,
    clock: &CpuClock,
) -> Result<Option<Measurement>, BenchError> {
    let prepared = black_box(prepared);
    let checksum = prepared.sweep(points)?;
    let mut m = Measurement {
        checksum,
        per_sweep: Vec::with_capacity(cfg.repetitions),
        sweeps: Vec::with_capacity(cfg.repetitions),
        windows: Vec::with_capacity(cfg.repetitions),
    };
    for _ in 0..cfg.repetitions {
        let start = clock.now()?;
        let mut sweeps = 0u64;
        let elapsed = loop {
            let sum = black_box(prepared.sweep(black_box(points))?);
            sweeps += 1;
            if sum.to_bits() != checksum.to_bits() {
                return Ok(None);
            }
            let elapsed = clock.now()? - start;
            if elapsed >= cfg.min_window {
                break elapsed;
            }
        };
        let secs = elapsed.as_secs_f64();
        m.per_sweep.push(secs / sweeps as f64);
        m.sweeps.push(sweeps);
        m.windows.push(secs);
    }
    Ok(Some(m))
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs the timed comparison. Cells are ordered by function id, then method.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    run_benchmark_on(&standard_suite(), cfg)
}

pub fn run_benchmark_on(
    suite: &[TestFunction],
    cfg: &BenchConfig,
) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let clock = CpuClock::new(cfg.clock)?;
    let inputs = generate_inputs(cfg.n_points, cfg.seed);
    let hash = input_hash(&inputs);
    let points: Vec<[f64; 2]> = inputs.iter().map(|&(x, y)| [x, y]).collect();

    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let functions = select(suite, &cfg.expressions);

    let mut cells = Vec::with_capacity(methods.len() * functions.len());
    for f in &functions {
        for &method in &methods {
            let prepared = Prepared::new(method, f)?;
            let m =
                measure(prepared, &points, cfg, &clock)?.ok_or(BenchError::NonDeterministic {
                    method,
                    id: f.id.get(),
                })?;
            let median_s = median(&m.per_sweep);
            let min_s = m.per_sweep.iter().copied().fold(f64::INFINITY, f64::min);
            cells.push(Cell {
                method,
                expression_id: f.id.get(),
                median_s,
                min_s,
                evals_per_s: cfg.n_points as f64 / median_s,
                n_points: cfg.n_points,
                repetitions: cfg.repetitions,
                seed: cfg.seed,
                checksum: m.checksum,
                input_hash: hash.clone(),
                repetition_s: m.per_sweep,
                sweeps: m.sweeps,
                window_s: m.windows,
            });
        }
    }

    Ok(BenchReport {
        metadata: ReportMetadata {
            schema_version: SCHEMA_VERSION,
            seed: cfg.seed,
            n_points: cfg.n_points,
            repetitions: cfg.repetitions,
            min_window_s: cfg.min_window.as_secs_f64(),
            clock: clock.describe(),
            build_profile: build_profile(),
            rng: RNG_DESCRIPTION.to_owned(),
            input_hash: hash,
            threads: 1,
        },
        cells,
    })
}

pub fn build_profile() -> String {
    format!(
        "profile={}, opt-level={}, debug-assertions={}",
        env!("EXPRBENCH_PROFILE"),
        env!("EXPRBENCH_OPT_LEVEL"),
        if cfg!(debug_assertions) { "on" } else { "off" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(methods: Vec<EvalMethod>, expressions: Vec<u32>) -> BenchConfig {
        BenchConfig {
            n_points: 50,
            repetitions: 3,
            min_window: Duration::from_micros(200),
            methods,
            expressions,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn inputs_are_deterministic_and_in_range() {
        let a = generate_inputs(5000, 42);
        assert_eq!(a.len(), 5000);
        assert!(a
            .iter()
            .all(|&(x, y)| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)));
        assert_eq!(a, generate_inputs(5000, 42));
        assert_ne!(a, generate_inputs(5000, 43));
        assert!(generate_inputs(0, 7).is_empty());
        assert_eq!(input_hash(&a), input_hash(&generate_inputs(5000, 42)));
        assert_ne!(input_hash(&a), input_hash(&a[1..]));
    }

    #[test]
    fn config_validation() {
        assert!(BenchConfig::default().validate().is_ok());
        let cases = [
            BenchConfig {
                n_points: 0,
                ..BenchConfig::default()
            },
            BenchConfig {
                repetitions: 0,
                ..BenchConfig::default()
            },
            BenchConfig {
                min_window: Duration::ZERO,
                ..BenchConfig::default()
            },
            BenchConfig {
                methods: vec![],
                ..BenchConfig::default()
            },
            BenchConfig {
                expressions: vec![9],
                ..BenchConfig::default()
            },
        ];
        for cfg in cases {
            assert!(
                matches!(run_benchmark(&cfg), Err(BenchError::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn subset_selection() {
        let r = run_benchmark(&quick(vec![EvalMethod::NaryTree], (1..=8).collect())).unwrap();
        assert_eq!(r.cells.len(), 8);
        assert!(r.cells.iter().all(|c| c.method == EvalMethod::NaryTree));
    }

    #[test]
    fn cells_are_sane() {
        let cfg = quick(EvalMethod::ALL.to_vec(), vec![7, 8]);
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!(r.cells.len(), 8);
        for c in &r.cells {
            assert!(c.min_s > 0.0 && c.min_s <= c.median_s, "{c:?}");
            assert!(c
                .window_s
                .iter()
                .all(|&w| w >= cfg.min_window.as_secs_f64()));
            assert_eq!(c.input_hash, r.metadata.input_hash);
            assert_eq!(c.repetition_s.len(), cfg.repetitions);
        }
        for id in [7, 8] {
            let sums: Vec<f64> = r
                .cells
                .iter()
                .filter(|c| c.expression_id == id)
                .map(|c| c.checksum)
                .collect();
            for s in &sums {
                assert!(relative_deviation(*s, sums[0]) <= 1e-9);
            }
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
