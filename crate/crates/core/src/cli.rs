//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 evaluation fault,
//! 3 validation failure, 4 environment (no CPU clock).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    cross_validate, emit_report, run_benchmark, standard_suite, BenchConfig, BenchError, ClockKind,
    ReportFormat, ValidationReport,
};
use crate::eval::{
    eval_binary, eval_blackbox, eval_nary, Bindings, BlackBoxId, EvalError, EvalMethod,
};
use crate::expr::{ExprNode, OpKind};
use crate::parser::{eval_string, parse_to_tree, ParseError, SymbolTable};
use crate::transform::flatten;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EVAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_ENVIRONMENT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "exprbench",
    version,
    about = "Evaluate, parse, cross-check and time algebraic expressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one expression with one method.
    Eval(EvalArgs),
    /// Print the tree for an expression.
    Parse(ParseArgs),
    /// Time the four methods on the eight test functions.
    Bench(BenchArgs),
    /// Check that all four methods agree on the eight test functions.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Expression, e.g. "sin((x+y)*x^y)".
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
    /// blackbox, binary, nary or string.
    #[arg(long, default_value = "nary")]
    method: EvalMethod,
    /// Variable binding NAME=VALUE; repeatable. x and y are indices 0 and 1,
    /// other names follow in the order given.
    #[arg(long = "bind", value_name = "NAME=VALUE")]
    binds: Vec<String>,
    /// Black-box function id (1-8); replaces --expr for --method blackbox.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    function: Option<u32>,
}

#[derive(Debug, Args)]
struct ParseArgs {
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    /// Show the n-ary form instead of the binary form.
    #[arg(long)]
    flatten: bool,
    /// Print a nested-list form instead of the indented rendering.
    #[arg(long)]
    dump: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Input points per sweep.
    #[arg(long = "n", default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    n_points: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
    /// Minimum CPU time per repetition, in milliseconds.
    #[arg(long = "min-window-ms", default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    min_window_ms: u64,
    /// Comma-separated subset of blackbox,binary,nary,string.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "blackbox,binary,nary,string"
    )]
    methods: Vec<EvalMethod>,
    /// Comma-separated subset of function ids 1-8.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8",
          value_parser = clap::value_parser!(u32).range(1..=8))]
    expressions: Vec<u32>,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// process or thread CPU time.
    #[arg(long, default_value = "process")]
    clock: ClockKind,
    /// Significant digits the pre-run cross-validation demands.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    digits: u32,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    digits: u32,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Parse(a) => cmd_parse(a, out, err),
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Validate(a) => cmd_validate(a, out, err),
    }
}

fn parse_failure(input: &str, e: &ParseError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(
        err,
        "error: failed to parse expression\n{}",
        e.render(input)
    );
    EXIT_USAGE
}

fn eval_failure(e: &EvalError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_EVAL
}

fn usage(msg: impl std::fmt::Display, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    EXIT_USAGE
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut symbols = SymbolTable::default();
    let mut bound: BTreeMap<usize, f64> = BTreeMap::new();
    for bind in &a.binds {
        let Some((name, value)) = bind.split_once('=') else {
            return usage(format!("binding '{bind}' is not NAME=VALUE"), err);
        };
        let index = match symbols.ensure_variable(name.trim()) {
            Ok(i) => i,
            Err(e) => return usage(e, err),
        };
        let value: f64 = match value.trim().parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                return usage(
                    format!("binding '{bind}' does not have a finite numeric value"),
                    err,
                )
            }
        };
        if bound.insert(index, value).is_some() {
            return usage(format!("variable '{}' is bound twice", name.trim()), err);
        }
    }

    let (input, tree) = match (&a.expr, a.function) {
        (Some(input), _) => match parse_to_tree(input, &symbols) {
            Ok(t) => (input.clone(), Some(t)),
            Err(e) => return parse_failure(input, &e, err),
        },
        (None, Some(_)) if a.method == EvalMethod::BlackBox => (String::new(), None),
        (None, Some(_)) => return usage("--function only applies to --method blackbox", err),
        (None, None) => return usage("--expr is required", err),
    };

    // every variable the expression reads must be bound; unread slots are filler
    let referenced: Vec<usize> = match &tree {
        Some(t) => t.leaves().iter().filter_map(|l| l.var_index()).collect(),
        None => vec![0, 1],
    };
    if let Some(&missing) = referenced.iter().find(|i| !bound.contains_key(i)) {
        let name = symbols.variable_name(missing).unwrap_or("?");
        let _ = writeln!(
            err,
            "error: variable '{name}' is not bound (use --bind {name}=VALUE)"
        );
        return EXIT_EVAL;
    }
    let span = bound.keys().next_back().map_or(0, |&i| i + 1);
    let values: Vec<f64> = (0..span)
        .map(|i| bound.get(&i).copied().unwrap_or(0.0))
        .collect();
    let b = match Bindings::new(values) {
        Ok(b) => b,
        Err(e) => return eval_failure(&e, err),
    };

    let result = match a.method {
        EvalMethod::BlackBox => {
            let id = match (a.function, &tree) {
                (Some(id), _) => BlackBoxId::new(id),
                (None, Some(t)) => match standard_suite().into_iter().find(|f| &f.binary == t) {
                    Some(f) => Ok(f.id),
                    None => {
                        return usage(
                            format!("'{input}' is not one of the compiled black-box functions; see --function"),
                            err,
                        )
                    }
                },
                (None, None) => unreachable!("checked above"),
            };
            id.and_then(|id| eval_blackbox(id, &b)).map(|o| o.value)
        }
        EvalMethod::BinaryTree => eval_binary(tree.as_ref().expect("parsed"), &b).map(|o| o.value),
        EvalMethod::NaryTree => {
            eval_nary(&flatten(tree.as_ref().expect("parsed")), &b).map(|o| o.value)
        }
        EvalMethod::StringParse => eval_string(&input, &symbols, &b),
    };
    match result {
        Ok(v) => {
            let _ = writeln!(out, "{v}");
            EXIT_OK
        }
        Err(e) => eval_failure(&e, err),
    }
}

/// One line per node: kind, payload, child count.
pub fn render_tree(t: &ExprNode, symbols: &SymbolTable) -> String {
    fn go(t: &ExprNode, symbols: &SymbolTable, depth: usize, out: &mut String) {
        use std::fmt::Write as _;
        let n = t.children().len();
        let _ = write!(out, "{:indent$}", "", indent = depth * 2);
        let _ = match (t.value(), t.var_index()) {
            (Some(v), _) => writeln!(out, "Constant {v}, {n} children"),
            (_, Some(i)) => {
                let name = symbols.variable_name(i).unwrap_or("?");
                writeln!(out, "Variable {i} ({name}), {n} children")
            }
            _ => writeln!(out, "{}, {n} children", t.kind()),
        };
        for child in t.children() {
            go(child, symbols, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(t, symbols, 0, &mut out);
    out
}

/// Nested-list form, e.g. `(sum (var 0) (var 1) (const 1))`.
pub fn dump_tree(t: &ExprNode) -> String {
    if let Some(v) = t.value() {
        return format!("(const {v:?})");
    }
    if let Some(i) = t.var_index() {
        return format!("(var {i})");
    }
    let head = match t.kind() {
        OpKind::Sum => "sum",
        OpKind::Product => "mul",
        OpKind::Difference => "sub",
        OpKind::Quotient => "div",
        OpKind::Power => "pow",
        OpKind::Negate => "neg",
        OpKind::UnaryFn(f) => f.name(),
        OpKind::Constant | OpKind::Variable => unreachable!("leaves handled above"),
    };
    let children: Vec<String> = t.children().iter().map(dump_tree).collect();
    format!("({head} {})", children.join(" "))
}

fn cmd_parse(a: ParseArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let symbols = SymbolTable::default();
    let tree = match parse_to_tree(&a.expr, &symbols) {
        Ok(t) => t,
        Err(e) => return parse_failure(&a.expr, &e, err),
    };
    let tree = if a.flatten { flatten(&tree) } else { tree };
    if a.dump {
        let _ = writeln!(out, "{}", dump_tree(&tree));
    } else {
        let _ = write!(out, "{}", render_tree(&tree, &symbols));
    }
    EXIT_OK
}

fn bench_failure(e: &BenchError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    match e {
        BenchError::InvalidConfig(_) => EXIT_USAGE,
        BenchError::ClockUnavailable(_) => EXIT_ENVIRONMENT,
        BenchError::Validation(_) => EXIT_VALIDATION,
        BenchError::Eval(_) | BenchError::NonDeterministic { .. } => EXIT_EVAL,
    }
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = BenchConfig {
        n_points: a.n_points as usize,
        seed: a.seed,
        repetitions: a.repetitions as usize,
        min_window: Duration::from_millis(a.min_window_ms),
        methods: a.methods,
        expressions: a.expressions,
        clock: a.clock,
    };
    if let Err(e) = cfg.validate() {
        return bench_failure(&e, err);
    }
    if let Err(e) = cross_validate(
        &standard_suite(),
        &cfg.methods,
        &cfg.expressions,
        cfg.n_points,
        cfg.seed,
        a.digits,
    ) {
        return bench_failure(&e, err);
    }
    match run_benchmark(&cfg) {
        Ok(report) => {
            let _ = write!(out, "{}", emit_report(&report, a.format));
            EXIT_OK
        }
        Err(e) => bench_failure(&e, err),
    }
}

fn print_validation(r: &ValidationReport, out: &mut dyn Write) {
    let _ = writeln!(
        out,
        "validating {} functions with {} methods at {} points (seed {}), threshold {:.1e} ({} significant digits)",
        r.expressions.len(),
        r.methods.len(),
        r.n_points,
        r.seed,
        r.threshold,
        r.sig_digits
    );
    for e in &r.expressions {
        let verdict = if e.max_deviation <= r.threshold {
            "ok"
        } else {
            "FAIL"
        };
        let _ = write!(
            out,
            "f{} {:<14} max deviation {:.3e}  {verdict}",
            e.id, e.display, e.max_deviation
        );
        if let Some(w) = &e.worst {
            let _ = write!(out, "  ({} vs {})", w.methods.0, w.methods.1);
        }
        let _ = writeln!(out);
    }
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if a.points == 0 {
        let _ = writeln!(err, "warning: 0 points requested; validation is vacuous");
    }
    let all: Vec<u32> = (1..=8).collect();
    match cross_validate(
        &standard_suite(),
        &EvalMethod::ALL,
        &all,
        a.points,
        a.seed,
        a.digits,
    ) {
        Ok(r) => {
            print_validation(&r, out);
            let _ = writeln!(out, "PASS");
            EXIT_OK
        }
        Err(BenchError::Validation(failure)) => {
            print_validation(&failure.report, out);
            let _ = writeln!(out, "FAIL");
            if let Some(worst) = failure.report.worst() {
                let _ = write!(
                    err,
                    "error: worst offender is function {} ({})",
                    worst.id, worst.display
                );
                if let Some(o) = &worst.worst {
                    let _ = write!(err, ": {o}");
                }
                let _ = writeln!(err);
            }
            EXIT_VALIDATION
        }
        Err(e) => bench_failure(&e, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("exprbench").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn eval_each_method() {
        for m in ["binary", "nary", "string", "blackbox"] {
            let (code, out, _) = run_cli(&[
                "eval", "--expr", "x+y+1", "--method", m, "--bind", "x=0.5", "--bind", "y=0.25",
            ]);
            assert_eq!((code, out.as_str()), (0, "1.75\n"), "{m}");
        }
        let (code, out, _) = run_cli(&["eval", "--expr", "sin(0)", "--method", "string"]);
        assert_eq!((code, out.as_str()), (0, "0\n"));
    }

    #[test]
    fn eval_blackbox_by_id_and_by_shape() {
        let (code, out, _) = run_cli(&[
            "eval",
            "--method",
            "blackbox",
            "--function",
            "8",
            "--bind",
            "x=1",
            "--bind",
            "y=1",
        ]);
        assert_eq!((code, out.as_str()), (0, "6\n"));
        let (code, _, err) = run_cli(&[
            "eval", "--method", "blackbox", "--expr", "x*y", "--bind", "x=1", "--bind", "y=1",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("not one of the compiled"));
    }

    #[test]
    fn eval_extra_variables() {
        let (code, out, _) = run_cli(&[
            "eval", "--expr", "x*z+w", "--bind", "w=1", "--bind", "z=3", "--bind", "x=2",
        ]);
        assert_eq!((code, out.as_str()), (0, "7\n"));
    }

    #[test]
    fn eval_errors() {
        let (code, _, err) = run_cli(&["eval", "--expr", "x+"]);
        assert_eq!(code, EXIT_USAGE);
        let lines: Vec<&str> = err.lines().collect();
        assert_eq!(lines[1], "x+");
        assert_eq!(lines[2], "  ^");

        let (code, _, err) = run_cli(&["eval", "--expr", "x+y", "--bind", "x=1"]);
        assert_eq!(code, EXIT_EVAL);
        assert!(err.contains("'y'"));

        let (code, _, _) = run_cli(&["eval", "--expr", "log(x)", "--bind", "x=0"]);
        assert_eq!(code, EXIT_EVAL);

        let (code, _, _) = run_cli(&["eval", "--expr", "x", "--bind", "x=abc"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_cli(&["eval", "--expr", "x", "--bind", "sin=1"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_cli(&["eval", "--expr", "x", "--frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn parse_renderings() {
        let (code, out, _) = run_cli(&["parse", "--expr", "x+y+1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 5);
        assert!(out.starts_with("Sum, 2 children\n"));

        let (code, out, _) = run_cli(&["parse", "--expr", "x+y+1", "--flatten"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 4);
        assert!(out.starts_with("Sum, 3 children\n"));

        let (_, out, _) = run_cli(&["parse", "--expr", "x+y+1", "--flatten", "--dump"]);
        assert_eq!(out, "(sum (var 0) (var 1) (const 1.0))\n");
        let (_, out, _) = run_cli(&["parse", "--expr", "-sin(x)^2/3", "--dump"]);
        assert_eq!(
            out,
            "(div (neg (pow (sin (var 0)) (const 2.0))) (const 3.0))\n"
        );

        let (code, _, err) = run_cli(&["parse", "--expr", "("]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("UnbalancedParen"));
    }

    #[test]
    fn validate_outcomes() {
        let (code, out, _) = run_cli(&["validate", "--digits", "3", "--points", "200"]);
        assert_eq!(code, 0);
        assert!(out.ends_with("PASS\n"));
        assert_eq!(out.lines().filter(|l| l.starts_with('f')).count(), 8);

        let (code, _, err) = run_cli(&["validate", "--points", "0"]);
        assert_eq!(code, 0);
        assert!(err.contains("0 points"));

        let (code, _, _) = run_cli(&["validate", "--digits", "0"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bench_flag_errors() {
        let (code, out, _) = run_cli(&["bench", "--n", "0"]);
        assert_eq!((code, out.as_str()), (EXIT_USAGE, ""));
        let (code, _, _) = run_cli(&["bench", "--methods", "nary,quantum"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_cli(&["bench", "--expressions", "9"]);
        assert_eq!(code, EXIT_USAGE);
    }
}
