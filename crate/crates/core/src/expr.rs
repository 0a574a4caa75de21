//! Expression-tree data model shared by every evaluation strategy.
//!
//! A node mirrors the classic C tree record: an operator tag, a constant value
//! for constant leaves, a variable index for variable leaves and an ordered
//! list of subnodes. The same record carries both binary-form trees (every sum
//! and product has two operands) and n-ary trees (sums and products may own any
//! number of operands ≥ 2).
//!
//! Nodes are immutable once built; the only way to get one is through the
//! checked constructors below.

use std::fmt;

use thiserror::Error;

/// Unary functions understood by the evaluators and the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl UnaryFn {
    pub const ALL: [UnaryFn; 6] = [
        UnaryFn::Sin,
        UnaryFn::Cos,
        UnaryFn::Tan,
        UnaryFn::Exp,
        UnaryFn::Log,
        UnaryFn::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryFn> {
        UnaryFn::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Raw IEEE application, no domain checks.
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            UnaryFn::Sin => v.sin(),
            UnaryFn::Cos => v.cos(),
            UnaryFn::Tan => v.tan(),
            UnaryFn::Exp => v.exp(),
            UnaryFn::Log => v.ln(),
            UnaryFn::Sqrt => v.sqrt(),
        }
    }
}

impl fmt::Display for UnaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operator or leaf kind of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Constant,
    Variable,
    Sum,
    Product,
    Difference,
    Quotient,
    Power,
    Negate,
    UnaryFn(UnaryFn),
}

/// How many children a kind accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Leaf,
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Leaf => n == 0,
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Leaf => f.write_str("no children"),
            Arity::Exactly(k) => write!(f, "exactly {k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

impl OpKind {
    pub fn arity(self) -> Arity {
        match self {
            OpKind::Constant | OpKind::Variable => Arity::Leaf,
            OpKind::Sum | OpKind::Product => Arity::AtLeast(2),
            OpKind::Difference | OpKind::Quotient | OpKind::Power => Arity::Exactly(2),
            OpKind::Negate | OpKind::UnaryFn(_) => Arity::Exactly(1),
        }
    }

    pub fn is_leaf(self) -> bool {
        matches!(self, OpKind::Constant | OpKind::Variable)
    }

    /// Sum and product: the kinds that flattening may collapse.
    pub fn is_associative(self) -> bool {
        matches!(self, OpKind::Sum | OpKind::Product)
    }

    /// The function name, present only for `UnaryFn`.
    pub fn fn_name(self) -> Option<&'static str> {
        match self {
            OpKind::UnaryFn(f) => Some(f.name()),
            _ => None,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpKind::Constant => f.write_str("Constant"),
            OpKind::Variable => f.write_str("Variable"),
            OpKind::Sum => f.write_str("Sum"),
            OpKind::Product => f.write_str("Product"),
            OpKind::Difference => f.write_str("Difference"),
            OpKind::Quotient => f.write_str("Quotient"),
            OpKind::Power => f.write_str("Power"),
            OpKind::Negate => f.write_str("Negate"),
            OpKind::UnaryFn(func) => write!(f, "UnaryFn({func})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("constant value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("{kind} takes {expected} children, got {got}")]
    ArityMismatch {
        kind: OpKind,
        got: usize,
        expected: Arity,
    },
    #[error("{0} is a leaf kind; use the leaf constructors")]
    LeafKind(OpKind),
}

/// A node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprNode {
    kind: OpKind,
    value: f64,
    var_index: usize,
    children: Vec<ExprNode>,
}

impl ExprNode {
    pub fn constant(v: f64) -> Result<ExprNode, ExprError> {
        if !v.is_finite() {
            return Err(ExprError::NonFiniteValue(v));
        }
        Ok(ExprNode {
            kind: OpKind::Constant,
            value: v,
            var_index: 0,
            children: Vec::new(),
        })
    }

    pub fn variable(index: usize) -> ExprNode {
        ExprNode {
            kind: OpKind::Variable,
            value: 0.0,
            var_index: index,
            children: Vec::new(),
        }
    }

    pub fn op(kind: OpKind, children: Vec<ExprNode>) -> Result<ExprNode, ExprError> {
        if kind.is_leaf() {
            return Err(ExprError::LeafKind(kind));
        }
        let expected = kind.arity();
        if !expected.accepts(children.len()) {
            return Err(ExprError::ArityMismatch {
                kind,
                got: children.len(),
                expected,
            });
        }
        Ok(ExprNode {
            kind,
            value: 0.0,
            var_index: 0,
            children,
        })
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    /// Constant value; `None` for every other kind.
    pub fn value(&self) -> Option<f64> {
        (self.kind == OpKind::Constant).then_some(self.value)
    }

    /// Variable index; `None` for every other kind.
    pub fn var_index(&self) -> Option<usize> {
        (self.kind == OpKind::Variable).then_some(self.var_index)
    }

    pub fn children(&self) -> &[ExprNode] {
        &self.children
    }

    // Unchecked field access for the evaluators' hot loop.
    #[inline(always)]
    pub(crate) fn raw_value(&self) -> f64 {
        self.value
    }

    #[inline(always)]
    pub(crate) fn raw_var_index(&self) -> usize {
        self.var_index
    }

    /// True iff every sum and product in the tree has exactly two children.
    pub fn is_binary_form(&self) -> bool {
        if self.kind.is_associative() && self.children.len() != 2 {
            return false;
        }
        self.children.iter().all(ExprNode::is_binary_form)
    }

    /// Total node count, leaves included.
    pub fn count_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ExprNode::count_nodes)
            .sum::<usize>()
    }

    /// One past the largest variable index referenced, or 0 if there are none.
    pub fn variable_span(&self) -> usize {
        match self.kind {
            OpKind::Variable => self.var_index + 1,
            _ => self
                .children
                .iter()
                .map(ExprNode::variable_span)
                .max()
                .unwrap_or(0),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&ExprNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ExprNode>) {
        if self.children.is_empty() {
            out.push(self);
        }
        for child in &self.children {
            child.collect_leaves(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ExprNode::depth).max().unwrap_or(0)
    }
}

/// Shorthand constructors used by hand-built trees and tests. They panic on
/// invalid input, so keep them to trees whose shape is known statically.
pub mod build {
    use super::{ExprNode, OpKind, UnaryFn};

    pub fn c(v: f64) -> ExprNode {
        ExprNode::constant(v).expect("finite constant")
    }

    pub fn var(i: usize) -> ExprNode {
        ExprNode::variable(i)
    }

    pub fn x() -> ExprNode {
        var(0)
    }

    pub fn y() -> ExprNode {
        var(1)
    }

    fn op(kind: OpKind, children: Vec<ExprNode>) -> ExprNode {
        ExprNode::op(kind, children).expect("valid arity")
    }

    pub fn sum(children: Vec<ExprNode>) -> ExprNode {
        op(OpKind::Sum, children)
    }

    pub fn product(children: Vec<ExprNode>) -> ExprNode {
        op(OpKind::Product, children)
    }

    pub fn add(a: ExprNode, b: ExprNode) -> ExprNode {
        sum(vec![a, b])
    }

    pub fn mul(a: ExprNode, b: ExprNode) -> ExprNode {
        product(vec![a, b])
    }

    pub fn sub(a: ExprNode, b: ExprNode) -> ExprNode {
        op(OpKind::Difference, vec![a, b])
    }

    pub fn div(a: ExprNode, b: ExprNode) -> ExprNode {
        op(OpKind::Quotient, vec![a, b])
    }

    pub fn pow(a: ExprNode, b: ExprNode) -> ExprNode {
        op(OpKind::Power, vec![a, b])
    }

    pub fn neg(a: ExprNode) -> ExprNode {
        op(OpKind::Negate, vec![a])
    }

    pub fn call(f: UnaryFn, a: ExprNode) -> ExprNode {
        op(OpKind::UnaryFn(f), vec![a])
    }
}
