//! Lexing and recursive-descent parsing of algebraic expression strings.
//!
//! ```text
//! expr  := term { ("+" | "-") term }        left-associative
//! term  := unary { ("*" | "/") unary }      left-associative
//! unary := "-" unary | power
//! power := atom [ "^" unary ]               right-associative
//! atom  := Number | Ident | Ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)` while `2^-1` is
//! still accepted. An identifier followed by `(` must name a function,
//! anything else must name a variable.
//!
//! The grammar is written once, against [`Semantics`]. Plugging in
//! [`TreeBuilder`] yields a binary-form [`ExprNode`]; plugging in the value
//! folder used by [`eval_string`] computes the result while parsing, with no
//! intermediate tree.

mod lexer;

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use thiserror::Error;

use crate::eval::{
    checked_power, checked_quotient, checked_unary, Bindings, EvalError, EvalOutcome, FaultMode,
    VisitSink,
};
use crate::expr::{ExprNode, OpKind, UnaryFn};

pub use lexer::{tokenize, Lexer, Token, TokenKind};

/// Nesting limit; deeper input is rejected instead of exhausting the stack.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    UnexpectedToken,
    UnknownIdentifier,
    UnbalancedParen,
    BadNumber,
    TrailingInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::UnexpectedToken => "UnexpectedToken",
            ParseErrorKind::UnknownIdentifier => "UnknownIdentifier",
            ParseErrorKind::UnbalancedParen => "UnbalancedParen",
            ParseErrorKind::BadNumber => "BadNumber",
            ParseErrorKind::TrailingInput => "TrailingInput",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {position}: {message}")]
pub struct ParseError {
    /// 0-based character offset of the first offending character.
    pub position: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    /// The input, a caret under the offending character and the message.
    pub fn render(&self, input: &str) -> String {
        format!(
            "{input}\n{:>width$}\n{self}",
            "^",
            width = self.position + 1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("'{0}' is not a valid identifier")]
    InvalidName(String),
    #[error("'{0}' is a function name and cannot be a variable")]
    ReservedName(String),
}

/// Variable names mapped to dense indices, plus the unary function table.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

static DEFAULT_SYMBOLS: LazyLock<SymbolTable> = LazyLock::new(SymbolTable::default);

impl Default for SymbolTable {
    /// `x` → 0, `y` → 1.
    fn default() -> Self {
        SymbolTable::with_variables(["x", "y"]).expect("x and y are valid names")
    }
}

impl SymbolTable {
    pub fn empty() -> SymbolTable {
        SymbolTable {
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn default_ref() -> &'static SymbolTable {
        &DEFAULT_SYMBOLS
    }

    pub fn with_variables<I, S>(names: I) -> Result<SymbolTable, SymbolError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = SymbolTable::empty();
        for name in names {
            table.ensure_variable(name.as_ref())?;
        }
        Ok(table)
    }

    /// Index of `name`, appending it to the table if it is new.
    pub fn ensure_variable(&mut self, name: &str) -> Result<usize, SymbolError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(SymbolError::InvalidName(name.to_owned()));
        }
        if UnaryFn::from_name(name).is_some() {
            return Err(SymbolError::ReservedName(name.to_owned()));
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        Ok(i)
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn variable_name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn function(&self, name: &str) -> Option<UnaryFn> {
        UnaryFn::from_name(name)
    }

    pub fn variable_count(&self) -> usize {
        self.names.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// What the grammar does with each reduction.
pub trait Semantics {
    type Value;
    type Error: From<ParseError>;

    fn number(&mut self, v: f64) -> Self::Value;
    fn variable(&mut self, index: usize) -> Self::Value;
    /// `kind` is one of Sum, Difference, Product, Quotient, Power.
    fn binary(&mut self, kind: OpKind, a: Self::Value, b: Self::Value) -> Self::Value;
    fn negate(&mut self, a: Self::Value) -> Self::Value;
    fn call(&mut self, f: UnaryFn, a: Self::Value) -> Self::Value;
    /// Called once after a successful parse.
    fn finish(&mut self, v: Self::Value) -> Result<Self::Value, Self::Error>;
}

struct Parser<'a, 's, S> {
    lexer: Lexer<'a>,
    current: Token<'a>,
    symbols: &'s SymbolTable,
    depth: usize,
    open_parens: usize,
    sem: S,
}

impl<'a, 's, S: Semantics> Parser<'a, 's, S> {
    fn new(input: &'a str, symbols: &'s SymbolTable, sem: S) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(input);
        let current = lexer.next_token()?;
        Ok(Parser {
            lexer,
            current,
            symbols,
            depth: 0,
            open_parens: 0,
            sem,
        })
    }

    #[inline]
    fn advance(&mut self) -> Result<(), ParseError> {
        self.current = self.lexer.next_token()?;
        Ok(())
    }

    fn error(&self, kind: ParseErrorKind, message: String) -> ParseError {
        // token positions are byte offsets; they only differ from character
        // offsets after a non-ASCII character, which the lexer never accepts
        ParseError {
            position: self.current.position,
            kind,
            message,
        }
    }

    /// Parses the whole input; hands back the semantics for inspection.
    fn run(mut self) -> Result<(S::Value, S), S::Error> {
        let v = self.expr()?;
        match self.current.kind {
            TokenKind::End => {
                let v = self.sem.finish(v)?;
                Ok((v, self.sem))
            }
            TokenKind::RParen => Err(self
                .error(ParseErrorKind::UnbalancedParen, "unmatched ')'".into())
                .into()),
            other => Err(self
                .error(
                    ParseErrorKind::TrailingInput,
                    format!("unexpected {other} after complete expression"),
                )
                .into()),
        }
    }

    fn expr(&mut self) -> Result<S::Value, ParseError> {
        let mut v = self.term()?;
        loop {
            let kind = match self.current.kind {
                TokenKind::Plus => OpKind::Sum,
                TokenKind::Minus => OpKind::Difference,
                _ => return Ok(v),
            };
            self.advance()?;
            let rhs = self.term()?;
            v = self.sem.binary(kind, v, rhs);
        }
    }

    fn term(&mut self) -> Result<S::Value, ParseError> {
        let mut v = self.unary()?;
        loop {
            let kind = match self.current.kind {
                TokenKind::Star => OpKind::Product,
                TokenKind::Slash => OpKind::Quotient,
                _ => return Ok(v),
            };
            self.advance()?;
            let rhs = self.unary()?;
            v = self.sem.binary(kind, v, rhs);
        }
    }

    // Every recursive path passes through here, so this is where depth is capped.
    fn unary(&mut self) -> Result<S::Value, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(self.error(
                ParseErrorKind::UnexpectedToken,
                format!("expression nested deeper than {MAX_DEPTH} levels"),
            ));
        }
        self.depth += 1;
        let out = if self.current.kind == TokenKind::Minus {
            self.advance()?;
            self.unary().map(|v| self.sem.negate(v))
        } else {
            self.power()
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<S::Value, ParseError> {
        let base = self.atom()?;
        if self.current.kind != TokenKind::Caret {
            return Ok(base);
        }
        self.advance()?;
        let exponent = self.unary()?;
        Ok(self.sem.binary(OpKind::Power, base, exponent))
    }

    fn atom(&mut self) -> Result<S::Value, ParseError> {
        match self.current.kind {
            TokenKind::Number(v) => {
                self.advance()?;
                Ok(self.sem.number(v))
            }
            TokenKind::Ident(name) => {
                let at = self.current;
                self.advance()?;
                if self.current.kind == TokenKind::LParen {
                    let Some(f) = self.symbols.function(name) else {
                        return Err(ParseError {
                            position: at.position,
                            kind: ParseErrorKind::UnknownIdentifier,
                            message: format!("unknown function '{name}'"),
                        });
                    };
                    let open = self.open_paren()?;
                    let arg = self.expr()?;
                    self.close_paren(open)?;
                    Ok(self.sem.call(f, arg))
                } else {
                    let Some(index) = self.symbols.variable(name) else {
                        let message = if self.symbols.function(name).is_some() {
                            format!("'{name}' is a function; call it as {name}(...)")
                        } else {
                            format!("unknown variable '{name}'")
                        };
                        return Err(ParseError {
                            position: at.position,
                            kind: ParseErrorKind::UnknownIdentifier,
                            message,
                        });
                    };
                    Ok(self.sem.variable(index))
                }
            }
            TokenKind::LParen => {
                let open = self.open_paren()?;
                let v = self.expr()?;
                self.close_paren(open)?;
                Ok(v)
            }
            TokenKind::End if self.open_parens > 0 => Err(self.error(
                ParseErrorKind::UnbalancedParen,
                "input ends inside an unclosed '('".into(),
            )),
            TokenKind::End => Err(self.error(
                ParseErrorKind::UnexpectedToken,
                "unexpected end of input, expected an operand".into(),
            )),
            other => Err(self.error(
                ParseErrorKind::UnexpectedToken,
                format!("unexpected {other}, expected an operand"),
            )),
        }
    }

    fn open_paren(&mut self) -> Result<Token<'a>, ParseError> {
        let open = self.current;
        self.open_parens += 1;
        self.advance()?;
        Ok(open)
    }

    fn close_paren(&mut self, open: Token<'a>) -> Result<(), ParseError> {
        match self.current.kind {
            TokenKind::RParen => {
                self.open_parens -= 1;
                self.advance()
            }
            TokenKind::End => Err(self.error(
                ParseErrorKind::UnbalancedParen,
                format!("'(' at offset {} is never closed", open.position),
            )),
            other => Err(self.error(
                ParseErrorKind::UnexpectedToken,
                format!("unexpected {other}, expected ')'"),
            )),
        }
    }
}

/// Builds a binary-form tree.
pub struct TreeBuilder;

impl Semantics for TreeBuilder {
    type Value = ExprNode;
    type Error = ParseError;

    fn number(&mut self, v: f64) -> ExprNode {
        ExprNode::constant(v).expect("lexer only yields finite numbers")
    }

    fn variable(&mut self, index: usize) -> ExprNode {
        ExprNode::variable(index)
    }

    fn binary(&mut self, kind: OpKind, a: ExprNode, b: ExprNode) -> ExprNode {
        ExprNode::op(kind, vec![a, b]).expect("binary operator with two operands")
    }

    fn negate(&mut self, a: ExprNode) -> ExprNode {
        ExprNode::op(OpKind::Negate, vec![a]).expect("one operand")
    }

    fn call(&mut self, f: UnaryFn, a: ExprNode) -> ExprNode {
        ExprNode::op(OpKind::UnaryFn(f), vec![a]).expect("one operand")
    }

    fn finish(&mut self, v: ExprNode) -> Result<ExprNode, ParseError> {
        Ok(v)
    }
}

/// Folds values during the parse. Evaluation faults do not stop the parse:
/// the first one is remembered and reported only if the whole input is
/// well-formed, so syntax errors always win.
struct ValueFolder<'b, V, const CHECKED: bool> {
    vals: &'b [f64],
    fault: Option<EvalError>,
    visits: V,
}

impl<V: VisitSink, const CHECKED: bool> ValueFolder<'_, V, CHECKED> {
    #[inline]
    fn settle(&mut self, r: Result<f64, EvalError>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.fault.get_or_insert(e);
                f64::NAN
            }
        }
    }
}

impl<V: VisitSink, const CHECKED: bool> Semantics for ValueFolder<'_, V, CHECKED> {
    type Value = f64;
    type Error = EvalError;

    #[inline]
    fn number(&mut self, v: f64) -> f64 {
        self.visits.visit();
        v
    }

    #[inline]
    fn variable(&mut self, index: usize) -> f64 {
        self.visits.visit();
        match self.vals.get(index) {
            Some(&v) => v,
            None => self.settle(Err(EvalError::UnboundVariable {
                index,
                bound: self.vals.len(),
            })),
        }
    }

    #[inline]
    fn binary(&mut self, kind: OpKind, a: f64, b: f64) -> f64 {
        self.visits.visit();
        match kind {
            OpKind::Sum => a + b,
            OpKind::Difference => a - b,
            OpKind::Product => a * b,
            OpKind::Quotient if CHECKED => {
                let r = checked_quotient(a, b);
                self.settle(r)
            }
            OpKind::Quotient => a / b,
            OpKind::Power if CHECKED => {
                let r = checked_power(a, b);
                self.settle(r)
            }
            OpKind::Power => a.powf(b),
            _ => unreachable!("grammar only reduces binary operators here"),
        }
    }

    #[inline]
    fn negate(&mut self, a: f64) -> f64 {
        self.visits.visit();
        -a
    }

    #[inline]
    fn call(&mut self, f: UnaryFn, a: f64) -> f64 {
        self.visits.visit();
        if CHECKED {
            let r = checked_unary(f, a);
            self.settle(r)
        } else {
            f.apply(a)
        }
    }

    fn finish(&mut self, v: f64) -> Result<f64, EvalError> {
        match self.fault.take() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

fn fold<V: VisitSink, const CHECKED: bool>(
    input: &str,
    symbols: &SymbolTable,
    vals: &[f64],
    visits: V,
) -> Result<(f64, u64), EvalError> {
    let folder = ValueFolder::<V, CHECKED> {
        vals,
        fault: None,
        visits,
    };
    let (v, folder) = Parser::new(input, symbols, folder)?.run()?;
    Ok((v, folder.visits.count()))
}

/// Parses `input` into a binary-form tree.
pub fn parse_to_tree(input: &str, symbols: &SymbolTable) -> Result<ExprNode, ParseError> {
    Parser::new(input, symbols, TreeBuilder)?
        .run()
        .map(|(t, _)| t)
}

/// Parses with any [`Semantics`].
pub fn parse_with<S: Semantics>(
    input: &str,
    symbols: &SymbolTable,
    sem: S,
) -> Result<S::Value, S::Error> {
    Parser::new(input, symbols, sem)?.run().map(|(v, _)| v)
}

/// Evaluates `input` directly while parsing it. Every call re-lexes and
/// re-parses the whole string.
pub fn eval_string(input: &str, symbols: &SymbolTable, b: &Bindings) -> Result<f64, EvalError> {
    eval_string_with(input, symbols, b, FaultMode::Error)
}

pub fn eval_string_with(
    input: &str,
    symbols: &SymbolTable,
    b: &Bindings,
    mode: FaultMode,
) -> Result<f64, EvalError> {
    match mode {
        FaultMode::Error => fold::<(), true>(input, symbols, b.as_slice(), ()),
        FaultMode::PropagateNan => fold::<(), false>(input, symbols, b.as_slice(), ()),
    }
    .map(|(v, _)| v)
}

/// Like [`eval_string_with`], also counting reductions; the count equals the
/// node count of the tree [`parse_to_tree`] would build.
pub fn eval_string_counted(
    input: &str,
    symbols: &SymbolTable,
    b: &Bindings,
    mode: FaultMode,
) -> Result<EvalOutcome, EvalError> {
    let (value, visits) = match mode {
        FaultMode::Error => fold::<u64, true>(input, symbols, b.as_slice(), 0u64)?,
        FaultMode::PropagateNan => fold::<u64, false>(input, symbols, b.as_slice(), 0u64)?,
    };
    Ok(EvalOutcome { value, visits })
}

/// Uninstrumented, unchecked variant for timed loops.
#[inline]
pub fn eval_string_fast(
    input: &str,
    symbols: &SymbolTable,
    vals: &[f64],
) -> Result<f64, EvalError> {
    fold::<(), false>(input, symbols, vals, ()).map(|(v, _)| v)
}
