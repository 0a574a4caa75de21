//! Evaluation strategies: native black-box routines, binary-tree walking and
//! n-ary-tree walking, plus a uniform dispatcher that also reaches the direct
//! string evaluator in [`crate::parser`].
//!
//! Binary and n-ary trees go through the same recursive walk. The difference
//! between the two methods is the shape of the tree, not the walker: a chain
//! `x+y+1` costs two operator visits in binary form and one in n-ary form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprNode, OpKind, UnaryFn};
use crate::parser::{self, ParseError, SymbolTable};

/// Dense variable values indexed by variable index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bindings {
    values: Vec<f64>,
}

impl Bindings {
    pub fn new(values: Vec<f64>) -> Result<Bindings, EvalError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EvalError::NonFiniteBinding { index, value });
        }
        Ok(Bindings { values })
    }

    pub fn empty() -> Bindings {
        Bindings::default()
    }

    pub fn xy(x: f64, y: f64) -> Result<Bindings, EvalError> {
        Bindings::new(vec![x, y])
    }

    #[inline]
    pub fn get(&self, index: usize) -> Result<f64, EvalError> {
        self.values
            .get(index)
            .copied()
            .ok_or(EvalError::UnboundVariable {
                index,
                bound: self.values.len(),
            })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable index {index} is unbound ({bound} values bound)")]
    UnboundVariable { index: usize, bound: usize },
    #[error("binding {index} is not finite: {value}")]
    NonFiniteBinding { index: usize, value: f64 },
    #[error("domain fault in {op} with operands {operands:?}")]
    DomainFault { op: OpKind, operands: Vec<f64> },
    #[error("tree is not in binary form")]
    NotBinaryForm,
    #[error("no black-box function with id {0} (valid ids are 1..=8)")]
    UnknownFunctionId(u32),
    #[error("method {method} cannot evaluate a {source_kind} source")]
    MethodSourceMismatch {
        method: EvalMethod,
        source_kind: &'static str,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// What to do when an operation leaves its mathematical domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultMode {
    /// Report `DomainFault`.
    #[default]
    Error,
    /// Skip the checks and let IEEE arithmetic produce NaN or ±inf.
    PropagateNan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub value: f64,
    /// Nodes entered during the evaluation; 0 for black-box routines.
    pub visits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalMethod {
    #[serde(rename = "blackbox")]
    BlackBox,
    #[serde(rename = "binary")]
    BinaryTree,
    #[serde(rename = "nary")]
    NaryTree,
    #[serde(rename = "string")]
    StringParse,
}

impl EvalMethod {
    pub const ALL: [EvalMethod; 4] = [
        EvalMethod::BlackBox,
        EvalMethod::BinaryTree,
        EvalMethod::NaryTree,
        EvalMethod::StringParse,
    ];

    /// Short machine name, as used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            EvalMethod::BlackBox => "blackbox",
            EvalMethod::BinaryTree => "binary",
            EvalMethod::NaryTree => "nary",
            EvalMethod::StringParse => "string",
        }
    }

    /// Row label for human-readable tables.
    pub fn label(self) -> &'static str {
        match self {
            EvalMethod::BlackBox => "Black-box",
            EvalMethod::BinaryTree => "Binary",
            EvalMethod::NaryTree => "N-ary",
            EvalMethod::StringParse => "String",
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EvalMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method '{s}' (expected blackbox, binary, nary or string)")
            })
    }
}

// ---------------------------------------------------------------------------
// Black-box routines

/// Selects one of the eight natively compiled test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlackBoxId(u8);

impl BlackBoxId {
    pub fn new(id: u32) -> Result<BlackBoxId, EvalError> {
        if (1..=8).contains(&id) {
            Ok(BlackBoxId(id as u8))
        } else {
            Err(EvalError::UnknownFunctionId(id))
        }
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }

    pub fn all() -> impl Iterator<Item = BlackBoxId> {
        (1..=8).map(BlackBoxId)
    }
}

pub type NativeFn = fn(f64, f64) -> f64;

fn f1(x: f64, _y: f64) -> f64 {
    x
}

fn f2(x: f64, y: f64) -> f64 {
    x + y
}

fn f3(x: f64, y: f64) -> f64 {
    x.powf(y)
}

fn f4(x: f64, y: f64) -> f64 {
    (x + y) * x.powf(y)
}

fn f5(x: f64, _y: f64) -> f64 {
    x.sin()
}

fn f6(x: f64, y: f64) -> f64 {
    ((x + y) * x.powf(y)).sin()
}

fn f7(x: f64, y: f64) -> f64 {
    x + y + 1.0
}

fn f8(x: f64, y: f64) -> f64 {
    2.0 * x * y * (x + y + 1.0)
}

const NATIVE: [NativeFn; 8] = [f1, f2, f3, f4, f5, f6, f7, f8];

/// The compiled routine for `id`.
pub fn blackbox_lookup(id: BlackBoxId) -> NativeFn {
    NATIVE[usize::from(id.0) - 1]
}

/// Calls a black-box routine with `x = b[0]`, `y = b[1]`.
pub fn eval_blackbox(id: BlackBoxId, b: &Bindings) -> Result<EvalOutcome, EvalError> {
    let f = blackbox_lookup(id);
    Ok(EvalOutcome {
        value: f(b.get(0)?, b.get(1)?),
        visits: 0,
    })
}

// ---------------------------------------------------------------------------
// Tree walking

pub(crate) trait VisitSink {
    fn visit(&mut self);
    fn count(&self) -> u64;
}

impl VisitSink for u64 {
    #[inline(always)]
    fn visit(&mut self) {
        *self += 1;
    }

    fn count(&self) -> u64 {
        *self
    }
}

/// Compiled-out counter for timing runs.
impl VisitSink for () {
    #[inline(always)]
    fn visit(&mut self) {}

    fn count(&self) -> u64 {
        0
    }
}

fn fault(op: OpKind, operands: &[f64]) -> EvalError {
    EvalError::DomainFault {
        op,
        operands: operands.to_vec(),
    }
}

#[inline]
pub(crate) fn checked_quotient(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        return Err(fault(OpKind::Quotient, &[a, b]));
    }
    Ok(a / b)
}

/// `pow(0, 0)` is 1. Negative bases need integral exponents and zero bases
/// need non-negative ones.
#[inline]
pub(crate) fn checked_power(a: f64, b: f64) -> Result<f64, EvalError> {
    if (a < 0.0 && b.fract() != 0.0) || (a == 0.0 && b < 0.0) {
        return Err(fault(OpKind::Power, &[a, b]));
    }
    Ok(a.powf(b))
}

#[inline]
pub(crate) fn checked_unary(f: UnaryFn, v: f64) -> Result<f64, EvalError> {
    let out_of_domain = match f {
        UnaryFn::Log => v <= 0.0,
        UnaryFn::Sqrt => v < 0.0,
        _ => false,
    };
    if out_of_domain {
        return Err(fault(OpKind::UnaryFn(f), &[v]));
    }
    Ok(f.apply(v))
}

/// Recursive tree walk. Sums and products fold over all children starting
/// from 0 and 1 respectively; every other operator has fixed arity.
fn walk<V: VisitSink, const CHECKED: bool>(
    node: &ExprNode,
    vals: &[f64],
    visits: &mut V,
) -> Result<f64, EvalError> {
    visits.visit();
    let children = node.children();
    match node.kind() {
        OpKind::Constant => Ok(node.raw_value()),
        OpKind::Variable => {
            let index = node.raw_var_index();
            vals.get(index).copied().ok_or(EvalError::UnboundVariable {
                index,
                bound: vals.len(),
            })
        }
        OpKind::Sum => {
            let mut ret = 0.0;
            for child in children {
                ret += walk::<V, CHECKED>(child, vals, visits)?;
            }
            Ok(ret)
        }
        OpKind::Product => {
            let mut ret = 1.0;
            for child in children {
                ret *= walk::<V, CHECKED>(child, vals, visits)?;
            }
            Ok(ret)
        }
        OpKind::Difference => {
            let a = walk::<V, CHECKED>(&children[0], vals, visits)?;
            let b = walk::<V, CHECKED>(&children[1], vals, visits)?;
            Ok(a - b)
        }
        OpKind::Quotient => {
            let a = walk::<V, CHECKED>(&children[0], vals, visits)?;
            let b = walk::<V, CHECKED>(&children[1], vals, visits)?;
            if CHECKED {
                checked_quotient(a, b)
            } else {
                Ok(a / b)
            }
        }
        OpKind::Power => {
            let a = walk::<V, CHECKED>(&children[0], vals, visits)?;
            let b = walk::<V, CHECKED>(&children[1], vals, visits)?;
            if CHECKED {
                checked_power(a, b)
            } else {
                Ok(a.powf(b))
            }
        }
        OpKind::Negate => Ok(-walk::<V, CHECKED>(&children[0], vals, visits)?),
        OpKind::UnaryFn(f) => {
            let v = walk::<V, CHECKED>(&children[0], vals, visits)?;
            if CHECKED {
                checked_unary(f, v)
            } else {
                Ok(f.apply(v))
            }
        }
    }
}

fn walk_counted(t: &ExprNode, b: &Bindings, mode: FaultMode) -> Result<EvalOutcome, EvalError> {
    let mut visits = 0u64;
    let value = match mode {
        FaultMode::Error => walk::<u64, true>(t, b.as_slice(), &mut visits)?,
        FaultMode::PropagateNan => walk::<u64, false>(t, b.as_slice(), &mut visits)?,
    };
    Ok(EvalOutcome {
        value,
        visits: visits.count(),
    })
}

/// Evaluates a binary-form tree, counting node visits.
pub fn eval_binary(t: &ExprNode, b: &Bindings) -> Result<EvalOutcome, EvalError> {
    eval_binary_with(t, b, FaultMode::Error)
}

pub fn eval_binary_with(
    t: &ExprNode,
    b: &Bindings,
    mode: FaultMode,
) -> Result<EvalOutcome, EvalError> {
    if !t.is_binary_form() {
        return Err(EvalError::NotBinaryForm);
    }
    walk_counted(t, b, mode)
}

/// Evaluates a tree of any shape, counting node visits.
pub fn eval_nary(t: &ExprNode, b: &Bindings) -> Result<EvalOutcome, EvalError> {
    eval_nary_with(t, b, FaultMode::Error)
}

pub fn eval_nary_with(
    t: &ExprNode,
    b: &Bindings,
    mode: FaultMode,
) -> Result<EvalOutcome, EvalError> {
    walk_counted(t, b, mode)
}

/// Uninstrumented evaluation for timed loops: no visit counter and no domain
/// checks. Faults propagate as NaN or infinity.
pub fn eval_tree_fast(t: &ExprNode, vals: &[f64]) -> Result<f64, EvalError> {
    let span = t.variable_span();
    if span > vals.len() {
        return Err(EvalError::UnboundVariable {
            index: span - 1,
            bound: vals.len(),
        });
    }
    Ok(walk_unchecked(t, vals))
}

/// The same fold as [`walk`] without visit counting or error plumbing.
/// Every variable index must be below `vals.len()`; an unbound one panics.
pub(crate) fn walk_unchecked(node: &ExprNode, vals: &[f64]) -> f64 {
    let children = node.children();
    match node.kind() {
        OpKind::Constant => node.raw_value(),
        OpKind::Variable => vals[node.raw_var_index()],
        OpKind::Sum => {
            let mut ret = 0.0;
            for child in children {
                ret += walk_unchecked(child, vals);
            }
            ret
        }
        OpKind::Product => {
            let mut ret = 1.0;
            for child in children {
                ret *= walk_unchecked(child, vals);
            }
            ret
        }
        OpKind::Difference => {
            walk_unchecked(&children[0], vals) - walk_unchecked(&children[1], vals)
        }
        OpKind::Quotient => walk_unchecked(&children[0], vals) / walk_unchecked(&children[1], vals),
        OpKind::Power => {
            walk_unchecked(&children[0], vals).powf(walk_unchecked(&children[1], vals))
        }
        OpKind::Negate => -walk_unchecked(&children[0], vals),
        OpKind::UnaryFn(f) => f.apply(walk_unchecked(&children[0], vals)),
    }
}

/// Sum of `id`'s native routine over `points`, with the routine inlined into
/// the loop rather than called through a pointer.
pub fn sweep_blackbox(id: BlackBoxId, points: &[[f64; 2]]) -> f64 {
    fn run(f: impl Fn(f64, f64) -> f64, points: &[[f64; 2]]) -> f64 {
        let mut acc = 0.0;
        for p in points {
            acc += f(p[0], p[1]);
        }
        acc
    }
    match id.0 {
        1 => run(f1, points),
        2 => run(f2, points),
        3 => run(f3, points),
        4 => run(f4, points),
        5 => run(f5, points),
        6 => run(f6, points),
        7 => run(f7, points),
        _ => run(f8, points),
    }
}

// ---------------------------------------------------------------------------
// Uniform dispatch

/// What a method evaluates: a function id, a tree or an expression string.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    BlackBox(BlackBoxId),
    Tree(&'a ExprNode),
    Text {
        input: &'a str,
        symbols: &'a SymbolTable,
    },
}

impl<'a> Source<'a> {
    /// A string source resolved against the default `x`, `y` symbol table.
    pub fn text(input: &'a str) -> Source<'a> {
        Source::Text {
            input,
            symbols: SymbolTable::default_ref(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Source::BlackBox(_) => "function-id",
            Source::Tree(_) => "tree",
            Source::Text { .. } => "string",
        }
    }
}

pub fn eval(
    method: EvalMethod,
    source: Source<'_>,
    b: &Bindings,
) -> Result<EvalOutcome, EvalError> {
    match (method, source) {
        (EvalMethod::BlackBox, Source::BlackBox(id)) => eval_blackbox(id, b),
        (EvalMethod::BinaryTree, Source::Tree(t)) => eval_binary(t, b),
        (EvalMethod::NaryTree, Source::Tree(t)) => eval_nary(t, b),
        (EvalMethod::StringParse, Source::Text { input, symbols }) => {
            parser::eval_string_counted(input, symbols, b, FaultMode::Error)
        }
        (method, source) => Err(EvalError::MethodSourceMismatch {
            method,
            source_kind: source.kind_name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;

    fn xy(x: f64, y: f64) -> Bindings {
        Bindings::xy(x, y).unwrap()
    }

    fn bb(id: u32) -> NativeFn {
        blackbox_lookup(BlackBoxId::new(id).unwrap())
    }

    #[test]
    fn bindings_reject_non_finite_and_out_of_range() {
        assert!(matches!(
            Bindings::new(vec![1.0, f64::NAN]),
            Err(EvalError::NonFiniteBinding { index: 1, .. })
        ));
        let b = xy(0.5, 0.25);
        assert_eq!(b.get(1), Ok(0.25));
        assert_eq!(
            b.get(2),
            Err(EvalError::UnboundVariable { index: 2, bound: 2 })
        );
    }

    #[test]
    fn blackbox_examples() {
        assert_eq!(bb(4)(1.0, 1.0), 2.0);
        assert_eq!(bb(1)(0.3, 0.9), 0.3);
        assert_eq!(BlackBoxId::new(9), Err(EvalError::UnknownFunctionId(9)));
        assert_eq!(BlackBoxId::new(0), Err(EvalError::UnknownFunctionId(0)));
        assert_eq!(bb(8)(1.0, 1.0), 6.0);
        assert_eq!(bb(7)(0.5, 0.25), 1.75);
    }

    #[test]
    fn binary_examples() {
        let fig1 = add(x(), add(y(), c(1.0)));
        let out = eval_binary(&fig1, &xy(0.5, 0.25)).unwrap();
        assert_eq!(
            out,
            EvalOutcome {
                value: 1.75,
                visits: 5
            }
        );

        let sin_x = call(UnaryFn::Sin, x());
        assert_eq!(
            eval_binary(&sin_x, &Bindings::new(vec![0.0]).unwrap())
                .unwrap()
                .value,
            0.0
        );

        assert_eq!(
            eval_binary(&pow(x(), y()), &xy(0.0, 0.0)).unwrap().value,
            1.0
        );

        let fig2 = sum(vec![x(), y(), c(1.0)]);
        assert_eq!(
            eval_binary(&fig2, &xy(0.5, 0.25)),
            Err(EvalError::NotBinaryForm)
        );
    }

    #[test]
    fn nary_examples() {
        let fig2 = sum(vec![x(), y(), c(1.0)]);
        assert_eq!(
            eval_nary(&fig2, &xy(0.5, 0.25)).unwrap(),
            EvalOutcome {
                value: 1.75,
                visits: 4
            }
        );

        let f8 = product(vec![c(2.0), x(), y(), sum(vec![x(), y(), c(1.0)])]);
        assert_eq!(eval_nary(&f8, &xy(1.0, 1.0)).unwrap().value, 6.0);

        let f6 = call(UnaryFn::Sin, mul(add(x(), y()), pow(x(), y())));
        let got = eval_nary(&f6, &xy(0.5, 0.5)).unwrap().value;
        let want = bb(6)(0.5, 0.5);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let t = add(x(), var(2));
        assert_eq!(
            eval_nary(&t, &xy(1.0, 2.0)),
            Err(EvalError::UnboundVariable { index: 2, bound: 2 })
        );
        assert!(eval_tree_fast(&t, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn domain_faults() {
        let b = xy(-1.0, 0.0);
        let cases = [
            call(UnaryFn::Log, y()),
            call(UnaryFn::Log, x()),
            call(UnaryFn::Sqrt, x()),
            pow(x(), c(0.5)),
            pow(y(), c(-1.0)),
            div(c(1.0), y()),
        ];
        for t in &cases {
            assert!(
                matches!(eval_binary(t, &b), Err(EvalError::DomainFault { .. })),
                "{t:?} should fault"
            );
            let v = eval_binary_with(t, &b, FaultMode::PropagateNan)
                .unwrap()
                .value;
            assert!(
                !v.is_finite(),
                "{t:?} should propagate a non-finite value, got {v}"
            );
        }
        // integral exponents of negative bases are fine
        assert_eq!(eval_binary(&pow(x(), c(3.0)), &b).unwrap().value, -1.0);
        assert_eq!(
            eval_binary(&call(UnaryFn::Sqrt, y()), &b).unwrap().value,
            0.0
        );
    }

    #[test]
    fn fault_reports_operands() {
        let err = eval_nary(&div(x(), y()), &xy(3.0, 0.0)).unwrap_err();
        assert_eq!(
            err,
            EvalError::DomainFault {
                op: OpKind::Quotient,
                operands: vec![3.0, 0.0]
            }
        );
    }

    #[test]
    fn dispatch() {
        let fig2 = sum(vec![x(), y(), c(1.0)]);
        let b = xy(0.5, 0.25);
        assert_eq!(
            eval(EvalMethod::NaryTree, Source::Tree(&fig2), &b)
                .unwrap()
                .value,
            1.75
        );

        let id2 = BlackBoxId::new(2).unwrap();
        let out = eval(EvalMethod::BlackBox, Source::BlackBox(id2), &xy(0.2, 0.3)).unwrap();
        assert_eq!(
            out,
            EvalOutcome {
                value: 0.5,
                visits: 0
            }
        );

        assert!(matches!(
            eval(EvalMethod::BinaryTree, Source::text("x+y"), &b),
            Err(EvalError::MethodSourceMismatch {
                method: EvalMethod::BinaryTree,
                ..
            })
        ));
        assert!(matches!(
            eval(EvalMethod::StringParse, Source::Tree(&fig2), &b),
            Err(EvalError::MethodSourceMismatch { .. })
        ));

        let s = eval(EvalMethod::StringParse, Source::text("x+y+1"), &b).unwrap();
        assert_eq!(s.value, 1.75);
        assert!(s.visits > 0);
    }

    #[test]
    fn evaluation_is_pure() {
        let t = call(UnaryFn::Sin, mul(add(x(), y()), pow(x(), y())));
        let b = xy(0.123, 0.987);
        let first = eval_nary(&t, &b).unwrap();
        let second = eval_nary(&t, &b).unwrap();
        assert_eq!(first.value.to_bits(), second.value.to_bits());
        assert_eq!(
            eval_tree_fast(&t, b.as_slice()).unwrap().to_bits(),
            first.value.to_bits()
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in EvalMethod::ALL {
            assert_eq!(m.name().parse::<EvalMethod>(), Ok(m));
        }
        assert!("tree".parse::<EvalMethod>().is_err());
    }
}
