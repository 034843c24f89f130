//! Bottom-up program execution over a linearized context, plus the
//! tolerance-aware answer comparison used by search and evaluation.

use crate::answer::{Answer, AnswerKind, Pair, Scale, Value};
use crate::dsl::{HigherKind, Node, Op, Program};
use crate::knowledge::{parse_number, LinearizedInput, RangeError};
use crate::text::normalize_answer;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("division by zero")]
    DivisionByZero,
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error("token range {start}..={end} does not read as a number")]
    NonNumericRange { start: usize, end: usize },
    #[error("{op} received a {got} argument where {expected} was needed")]
    TypeMismatch { op: &'static str, got: &'static str, expected: &'static str },
    #[error("{op} executed with {found} arguments")]
    BadArity { op: &'static str, found: usize },
}

/// Execute a program. The program is expected to have passed legality
/// validation; ranges or argument types that slipped through still surface
/// as errors rather than panics.
pub fn execute(p: &Program, ctx: &LinearizedInput) -> Result<Answer, ExecError> {
    let value = eval(&p.root, ctx)?;
    finalize(value)
}

/// Execute and attach a unit to the answer.
pub fn execute_scaled(
    p: &Program,
    ctx: &LinearizedInput,
    scale: Option<Scale>,
) -> Result<Answer, ExecError> {
    let mut a = execute(p, ctx)?;
    a.scale = scale;
    Ok(a)
}

fn finalize(value: Value) -> Result<Answer, ExecError> {
    match value {
        Value::Text(items) => {
            if items.len() <= 1 {
                return Ok(Answer { kind: AnswerKind::Span, value: Value::Text(items), scale: None });
            }
            let mut unique = items;
            unique.sort();
            unique.dedup();
            let kind = if unique.len() == 1 { AnswerKind::Span } else { AnswerKind::Spans };
            Ok(Answer { kind, value: Value::Text(unique), scale: None })
        }
        Value::Number(x) => Ok(Answer { kind: AnswerKind::Number, value: Value::Number(x), scale: None }),
        Value::Count { value, items } => {
            Ok(Answer { kind: AnswerKind::Count, value: Value::Count { value, items }, scale: None })
        }
        Value::Pairs(_) => Err(ExecError::TypeMismatch {
            op: "program root",
            got: "key-value pairs",
            expected: "an answer value",
        }),
    }
}

fn eval(node: &Node, ctx: &LinearizedInput) -> Result<Value, ExecError> {
    match node {
        Node::Const(c) => Ok(Value::Number(c.value())),
        Node::Atomic { kind, start, end } => {
            let surface = ctx.detokenize(*start, *end)?;
            if kind.is_numeric() {
                let parsed = parse_number(&surface)
                    .ok_or(ExecError::NonNumericRange { start: *start, end: *end })?;
                Ok(Value::Number(parsed.value))
            } else {
                Ok(Value::Text(vec![surface]))
            }
        }
        Node::Higher { kind, args } => eval_higher(*kind, args, ctx),
    }
}

fn eval_higher(kind: HigherKind, args: &[Node], ctx: &LinearizedInput) -> Result<Value, ExecError> {
    let (min, max) = kind.arity();
    if args.len() < min || args.len() > max {
        return Err(ExecError::BadArity { op: Op::from(kind).name(), found: args.len() });
    }
    match kind {
        HigherKind::Kv => {
            let key = single_text(Op::Kv.name(), eval(&args[0], ctx)?)?;
            let value = number(Op::Kv.name(), eval(&args[1], ctx)?)?;
            Ok(Value::Pairs(vec![Pair { key, value }]))
        }
        HigherKind::Count => {
            let items = surfaces(Op::Count.name(), args, ctx)?;
            Ok(Value::Count { value: items.len() as u64, items })
        }
        HigherKind::MultiSpans => Ok(Value::Text(surfaces(Op::MultiSpans.name(), args, ctx)?)),
        HigherKind::ArgMax | HigherKind::ArgMin => {
            let name = Op::from(kind).name();
            let mut best: Option<Pair> = None;
            for a in args {
                let mut pairs = match eval(a, ctx)? {
                    Value::Pairs(p) => p,
                    other => {
                        return Err(ExecError::TypeMismatch {
                            op: name,
                            got: value_name(&other),
                            expected: "a key-value pair",
                        })
                    }
                };
                for p in pairs.drain(..) {
                    // Strict comparison: the earliest argument wins ties.
                    let take = match &best {
                        None => true,
                        Some(b) if kind == HigherKind::ArgMax => p.value > b.value,
                        Some(b) => p.value < b.value,
                    };
                    if take {
                        best = Some(p);
                    }
                }
            }
            let best = best.ok_or(ExecError::TypeMismatch {
                op: name,
                got: "no pairs",
                expected: "a key-value pair",
            })?;
            Ok(Value::Text(vec![best.key]))
        }
        HigherKind::Sum | HigherKind::Diff | HigherKind::Times | HigherKind::Div
        | HigherKind::ChangeR => {
            let name = Op::from(kind).name();
            let a = number(name, eval(&args[0], ctx)?)?;
            let b = number(name, eval(&args[1], ctx)?)?;
            let out = match kind {
                HigherKind::Sum => a + b,
                HigherKind::Diff => a - b,
                HigherKind::Times => a * b,
                HigherKind::Div => {
                    if b == 0.0 {
                        return Err(ExecError::DivisionByZero);
                    }
                    a / b
                }
                HigherKind::ChangeR => {
                    if b == 0.0 {
                        return Err(ExecError::DivisionByZero);
                    }
                    (a - b) / b
                }
                _ => unreachable!(),
            };
            Ok(Value::Number(out))
        }
        HigherKind::Avg => {
            let name = Op::Avg.name();
            let mut sum = 0.0;
            for a in args {
                sum += number(name, eval(a, ctx)?)?;
            }
            Ok(Value::Number(sum / args.len() as f64))
        }
    }
}

/// Surface strings of extraction arguments, for COUNT and MULTI_SPANS.
fn surfaces(op: &'static str, args: &[Node], ctx: &LinearizedInput) -> Result<Vec<String>, ExecError> {
    args.iter()
        .map(|a| match a {
            Node::Atomic { start, end, .. } => Ok(ctx.detokenize(*start, *end)?),
            Node::Higher { .. } => Err(ExecError::TypeMismatch {
                op,
                got: "an operation",
                expected: "an extraction",
            }),
            Node::Const(_) => Err(ExecError::TypeMismatch {
                op,
                got: "a constant",
                expected: "an extraction",
            }),
        })
        .collect()
}

fn single_text(op: &'static str, v: Value) -> Result<String, ExecError> {
    match v {
        Value::Text(mut items) if items.len() == 1 => Ok(items.remove(0)),
        other => Err(ExecError::TypeMismatch { op, got: value_name(&other), expected: "one text piece" }),
    }
}

fn number(op: &'static str, v: Value) -> Result<f64, ExecError> {
    match v {
        Value::Number(x) => Ok(x),
        other => Err(ExecError::TypeMismatch { op, got: value_name(&other), expected: "a number" }),
    }
}

fn value_name(v: &Value) -> &'static str {
    match v {
        Value::Text(_) => "text",
        Value::Number(_) => "a number",
        Value::Pairs(_) => "key-value pairs",
        Value::Count { .. } => "a count",
    }
}

/// Round to four decimal places, the granularity answers are compared at.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Numeric match at 4-decimal granularity: the rounded values may differ by
/// at most `tol`, inclusive. Compared in units of 1e-4, where both sides are
/// integral, so a half-unit of slack puts the cut between representable
/// differences instead of on one.
pub fn numbers_match(x: f64, y: f64, tol: f64) -> bool {
    if !x.is_finite() || !y.is_finite() {
        return false;
    }
    let dx = (x * 1e4).round() - (y * 1e4).round();
    dx.abs() <= tol * 1e4 + 0.5
}

/// Compare a predicted answer against gold. Numbers (and counts) match when
/// their 4-decimal roundings differ by at most `tol`; texts match on
/// normalized equality; multi-spans match as multisets. When both sides
/// carry a unit the units must agree.
pub fn answers_match(pred: &Answer, gold: &Answer, tol: f64) -> bool {
    if let (Some(a), Some(b)) = (pred.scale, gold.scale) {
        if a != b {
            return false;
        }
    }
    match (pred.as_number(), gold.as_number()) {
        (Some(x), Some(y)) => numbers_match(x, y, tol),
        (None, None) => {
            let (Some(pt), Some(gt)) = (pred.as_texts(), gold.as_texts()) else {
                return false;
            };
            let mut a: Vec<String> = pt.iter().map(|s| normalize_answer(s)).collect();
            let mut b: Vec<String> = gt.iter().map(|s| normalize_answer(s)).collect();
            a.sort();
            b.sort();
            a == b
        }
        (Some(x), None) => text_as_number(gold).is_some_and(|y| numbers_match(x, y, tol)),
        (None, Some(y)) => text_as_number(pred).is_some_and(|x| numbers_match(x, y, tol)),
    }
}

fn text_as_number(a: &Answer) -> Option<f64> {
    match a.as_texts() {
        Some([one]) => parse_number(one).map(|p| p.value),
        _ => None,
    }
}
