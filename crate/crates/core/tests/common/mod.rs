// Helpers shared by the integration test targets. Not every target uses
// every helper.
#![allow(dead_code)]

use exprbench::expr::build::*;
use exprbench::{Bindings, EvalError, ExprNode, OpKind, UnaryFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VARIABLES: usize = 3;
pub const MAX_DEPTH: usize = 5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn constant(rng: &mut ChaCha8Rng) -> ExprNode {
    // Mostly small magnitudes, some integers so powers of negatives stay legal.
    if rng.random_bool(0.3) {
        c(f64::from(rng.random_range(-3i32..=3)))
    } else {
        c(rng.random_range(-3.0..3.0))
    }
}

fn leaf(rng: &mut ChaCha8Rng) -> ExprNode {
    if rng.random_bool(0.6) {
        var(rng.random_range(0..VARIABLES))
    } else {
        constant(rng)
    }
}

/// A random valid tree of depth at most `depth` (a lone leaf has depth 1).
/// Every operator kind appears; sums and products are usually binary so
/// like-kind chains are common, and occasionally already n-ary.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> ExprNode {
    if depth <= 1 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.random_range(0..10) {
        0..=2 => sum(children(rng, d)),
        3..=5 => product(children(rng, d)),
        6 => sub(random_tree(rng, d), random_tree(rng, d)),
        7 => div(random_tree(rng, d), random_tree(rng, d)),
        8 => {
            if rng.random_bool(0.5) {
                pow(random_tree(rng, d), random_tree(rng, d))
            } else {
                neg(random_tree(rng, d))
            }
        }
        _ => {
            let f = UnaryFn::ALL[rng.random_range(0..UnaryFn::ALL.len())];
            call(f, random_tree(rng, d))
        }
    }
}

fn children(rng: &mut ChaCha8Rng, depth: usize) -> Vec<ExprNode> {
    let n = if rng.random_bool(0.8) {
        2
    } else {
        rng.random_range(3..=4)
    };
    (0..n).map(|_| random_tree(rng, depth)).collect()
}

pub fn random_bindings(rng: &mut ChaCha8Rng) -> Bindings {
    let vals = (0..VARIABLES)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    Bindings::new(vals).expect("finite bindings")
}

/// Relative agreement with a floor of 1 on the scale, so results near zero
/// are compared absolutely. Non-finite results must match exactly.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_finite() && b.is_finite() {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    } else {
        a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
    }
}

/// Plain relative agreement, no floor: |a-b| <= tol * max(|a|, |b|).
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_finite() && b.is_finite() {
        a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
    } else {
        a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
    }
}

/// Outcome comparison: equal within `tol`, or both faulted the same way.
pub fn same_outcome(a: &Result<f64, EvalError>, b: &Result<f64, EvalError>, tol: f64) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => close(*a, *b, tol),
        (
            Err(EvalError::DomainFault { op: oa, .. }),
            Err(EvalError::DomainFault { op: ob, .. }),
        ) => oa == ob,
        (Err(a), Err(b)) => a == b,
        _ => false,
    }
}

/// Fully parenthesised source text that parses back to a tree with the same
/// value. Variables are named `x`, `y`, `z`; n-ary nodes print as chains.
pub fn to_source(t: &ExprNode) -> String {
    const NAMES: [&str; VARIABLES] = ["x", "y", "z"];
    let kids: Vec<String> = t.children().iter().map(to_source).collect();
    match t.kind() {
        OpKind::Constant => {
            let v = t.value().unwrap();
            if v < 0.0 {
                format!("(-{})", -v)
            } else {
                format!("{v}")
            }
        }
        OpKind::Variable => NAMES[t.var_index().unwrap()].to_owned(),
        OpKind::Sum => format!("({})", kids.join("+")),
        OpKind::Product => format!("({})", kids.join("*")),
        OpKind::Difference => format!("({}-{})", kids[0], kids[1]),
        OpKind::Quotient => format!("({}/{})", kids[0], kids[1]),
        OpKind::Power => format!("({}^{})", kids[0], kids[1]),
        OpKind::Negate => format!("(-{})", kids[0]),
        OpKind::UnaryFn(f) => format!("{}({})", f.name(), kids[0]),
    }
}

pub fn xyz_symbols() -> exprbench::SymbolTable {
    exprbench::SymbolTable::with_variables(["x", "y", "z"]).expect("valid names")
}
