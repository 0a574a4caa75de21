//! The eight two-variable test functions, each in every form the four
//! evaluation methods need.

use crate::eval::{blackbox_lookup, BlackBoxId, NativeFn};
use crate::expr::build::*;
use crate::expr::{ExprNode, UnaryFn};

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub id: BlackBoxId,
    /// Conventional mathematical notation, for humans.
    pub display: &'static str,
    /// The same function in the parser's grammar.
    pub source: &'static str,
    pub native: NativeFn,
    /// Hand-built, left-leaning binary form.
    pub binary: ExprNode,
    /// Hand-built n-ary form.
    pub nary: ExprNode,
}

// (x+y)*x^y in binary form; shared by functions 4 and 6
fn f4_binary() -> ExprNode {
    mul(add(x(), y()), pow(x(), y()))
}

fn f4_nary() -> ExprNode {
    product(vec![sum(vec![x(), y()]), pow(x(), y())])
}

/// The full suite, ordered by id.
pub fn standard_suite() -> Vec<TestFunction> {
    let entry = |id: u32, display, source, binary, nary| {
        let id = BlackBoxId::new(id).expect("suite ids are 1..=8");
        TestFunction {
            id,
            display,
            source,
            native: blackbox_lookup(id),
            binary,
            nary,
        }
    };
    vec![
        entry(1, "x", "x", x(), x()),
        entry(2, "x+y", "x+y", add(x(), y()), sum(vec![x(), y()])),
        entry(3, "x^y", "x^y", pow(x(), y()), pow(x(), y())),
        entry(4, "(x+y)x^y", "(x+y)*x^y", f4_binary(), f4_nary()),
        entry(
            5,
            "sin(x)",
            "sin(x)",
            call(UnaryFn::Sin, x()),
            call(UnaryFn::Sin, x()),
        ),
        entry(
            6,
            "sin((x+y)x^y)",
            "sin((x+y)*x^y)",
            call(UnaryFn::Sin, f4_binary()),
            call(UnaryFn::Sin, f4_nary()),
        ),
        entry(
            7,
            "x+y+1",
            "x+y+1",
            add(add(x(), y()), c(1.0)),
            sum(vec![x(), y(), c(1.0)]),
        ),
        entry(
            8,
            "2xy(x+y+1)",
            "2*x*y*(x+y+1)",
            mul(mul(mul(c(2.0), x()), y()), add(add(x(), y()), c(1.0))),
            product(vec![c(2.0), x(), y(), sum(vec![x(), y(), c(1.0)])]),
        ),
    ]
}

/// Suite entries whose ids are in `ids`, in suite order.
pub fn select(suite: &[TestFunction], ids: &[u32]) -> Vec<TestFunction> {
    suite
        .iter()
        .filter(|f| ids.contains(&f.id.get()))
        .cloned()
        .collect()
}
