//! The program language: extraction atoms over token ranges, key-value
//! pairing, counting, argmax/argmin, and arithmetic, with a canonical text
//! syntax and a flat decoding-token form.

mod parser;
mod tokens;

pub use parser::{parse_program, ParseError};
pub use tokens::{
    from_decoding_tokens, to_decoding_tokens, token_from_id, token_id, DecodingToken,
    TokenSeqError, FIRST_POS_ID,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Extraction operations addressing an inclusive token range `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomicKind {
    /// Text piece from the question or a paragraph.
    Span,
    /// Text of a table cell.
    Cell,
    /// Number read from question or paragraph text.
    Value,
    /// Number read from a table cell.
    CellValue,
}

impl AtomicKind {
    pub const ALL: [AtomicKind; 4] =
        [AtomicKind::Span, AtomicKind::Cell, AtomicKind::Value, AtomicKind::CellValue];

    /// True when the range must evaluate to a number.
    pub fn is_numeric(self) -> bool {
        matches!(self, AtomicKind::Value | AtomicKind::CellValue)
    }

    /// True when the range must sit inside a table cell.
    pub fn is_table(self) -> bool {
        matches!(self, AtomicKind::Cell | AtomicKind::CellValue)
    }
}

/// Operations that take other nodes as arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HigherKind {
    Kv,
    Count,
    MultiSpans,
    ArgMax,
    ArgMin,
    Sum,
    Diff,
    Times,
    Div,
    Avg,
    ChangeR,
}

impl HigherKind {
    pub const ALL: [HigherKind; 11] = [
        HigherKind::Kv,
        HigherKind::Count,
        HigherKind::MultiSpans,
        HigherKind::ArgMax,
        HigherKind::ArgMin,
        HigherKind::Sum,
        HigherKind::Diff,
        HigherKind::Times,
        HigherKind::Div,
        HigherKind::Avg,
        HigherKind::ChangeR,
    ];

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            HigherKind::Sum
                | HigherKind::Diff
                | HigherKind::Times
                | HigherKind::Div
                | HigherKind::Avg
                | HigherKind::ChangeR
        )
    }

    /// Structural arity bounds `(min, max)`; configuration may tighten the
    /// variadic maxima but never loosen these.
    pub fn arity(self) -> (usize, usize) {
        match self {
            HigherKind::Kv => (2, 2),
            HigherKind::Count | HigherKind::MultiSpans => (1, usize::MAX),
            HigherKind::ArgMax | HigherKind::ArgMin => (2, usize::MAX),
            HigherKind::Avg => (2, 3),
            HigherKind::Sum
            | HigherKind::Diff
            | HigherKind::Times
            | HigherKind::Div
            | HigherKind::ChangeR => (2, 2),
        }
    }
}

/// Every operation, in decoding-alphabet order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Span,
    Cell,
    Value,
    CellValue,
    Kv,
    Count,
    MultiSpans,
    ArgMax,
    ArgMin,
    Sum,
    Diff,
    Times,
    Div,
    Avg,
    ChangeR,
}

impl Op {
    pub const ALL: [Op; 15] = [
        Op::Span,
        Op::Cell,
        Op::Value,
        Op::CellValue,
        Op::Kv,
        Op::Count,
        Op::MultiSpans,
        Op::ArgMax,
        Op::ArgMin,
        Op::Sum,
        Op::Diff,
        Op::Times,
        Op::Div,
        Op::Avg,
        Op::ChangeR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Span => "SPAN",
            Op::Cell => "CELL",
            Op::Value => "VALUE",
            Op::CellValue => "CV",
            Op::Kv => "KV",
            Op::Count => "COUNT",
            Op::MultiSpans => "MULTI_SPANS",
            Op::ArgMax => "ARGMAX",
            Op::ArgMin => "ARGMIN",
            Op::Sum => "SUM",
            Op::Diff => "DIFF",
            Op::Times => "TIMES",
            Op::Div => "DIV",
            Op::Avg => "AVG",
            Op::ChangeR => "CHANGE_R",
        }
    }

    /// Inverse of [`Op::name`], case-insensitive, with `CELL_VALUE`
    /// accepted as an alias for `CV`.
    pub fn from_name(name: &str) -> Option<Op> {
        let upper = name.to_ascii_uppercase();
        match upper.as_str() {
            "CELL_VALUE" => return Some(Op::CellValue),
            _ => {}
        }
        Op::ALL.into_iter().find(|op| op.name() == upper)
    }

    /// Position in the decoding alphabet's operation block.
    pub fn index(self) -> usize {
        Op::ALL.iter().position(|o| *o == self).expect("op listed")
    }

    pub fn as_atomic(self) -> Option<AtomicKind> {
        match self {
            Op::Span => Some(AtomicKind::Span),
            Op::Cell => Some(AtomicKind::Cell),
            Op::Value => Some(AtomicKind::Value),
            Op::CellValue => Some(AtomicKind::CellValue),
            _ => None,
        }
    }

    pub fn as_higher(self) -> Option<HigherKind> {
        match self {
            Op::Kv => Some(HigherKind::Kv),
            Op::Count => Some(HigherKind::Count),
            Op::MultiSpans => Some(HigherKind::MultiSpans),
            Op::ArgMax => Some(HigherKind::ArgMax),
            Op::ArgMin => Some(HigherKind::ArgMin),
            Op::Sum => Some(HigherKind::Sum),
            Op::Diff => Some(HigherKind::Diff),
            Op::Times => Some(HigherKind::Times),
            Op::Div => Some(HigherKind::Div),
            Op::Avg => Some(HigherKind::Avg),
            Op::ChangeR => Some(HigherKind::ChangeR),
            _ => None,
        }
    }
}

impl From<AtomicKind> for Op {
    fn from(k: AtomicKind) -> Op {
        match k {
            AtomicKind::Span => Op::Span,
            AtomicKind::Cell => Op::Cell,
            AtomicKind::Value => Op::Value,
            AtomicKind::CellValue => Op::CellValue,
        }
    }
}

impl From<HigherKind> for Op {
    fn from(k: HigherKind) -> Op {
        match k {
            HigherKind::Kv => Op::Kv,
            HigherKind::Count => Op::Count,
            HigherKind::MultiSpans => Op::MultiSpans,
            HigherKind::ArgMax => Op::ArgMax,
            HigherKind::ArgMin => Op::ArgMin,
            HigherKind::Sum => Op::Sum,
            HigherKind::Diff => Op::Diff,
            HigherKind::Times => Op::Times,
            HigherKind::Div => Op::Div,
            HigherKind::Avg => Op::Avg,
            HigherKind::ChangeR => Op::ChangeR,
        }
    }
}

/// The three literal constants programs may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstValue {
    Zero,
    One,
    Hundred,
}

impl ConstValue {
    pub const ALL: [ConstValue; 3] = [ConstValue::Zero, ConstValue::One, ConstValue::Hundred];

    pub fn value(self) -> f64 {
        match self {
            ConstValue::Zero => 0.0,
            ConstValue::One => 1.0,
            ConstValue::Hundred => 100.0,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            ConstValue::Zero => 0,
            ConstValue::One => 1,
            ConstValue::Hundred => 100,
        }
    }

    pub fn from_int(n: u64) -> Option<ConstValue> {
        match n {
            0 => Some(ConstValue::Zero),
            1 => Some(ConstValue::One),
            100 => Some(ConstValue::Hundred),
            _ => None,
        }
    }
}

/// One node of a program tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Atomic { kind: AtomicKind, start: usize, end: usize },
    Higher { kind: HigherKind, args: Vec<Node> },
    Const(ConstValue),
}

impl Node {
    pub fn atomic(kind: AtomicKind, start: usize, end: usize) -> Node {
        Node::Atomic { kind, start, end }
    }

    pub fn higher(kind: HigherKind, args: Vec<Node>) -> Node {
        Node::Higher { kind, args }
    }

    /// The token range addressed by an atomic node.
    pub fn range(&self) -> Option<(usize, usize)> {
        match self {
            Node::Atomic { start, end, .. } => Some((*start, *end)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub root: Node,
}

impl Program {
    pub fn new(root: Node) -> Program {
        Program { root }
    }
}

/// Canonical text form: `DIFF(CV(131, 134), CV(135, 138))`.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    print_node(&p.root, &mut out);
    out
}

fn print_node(node: &Node, out: &mut String) {
    match node {
        Node::Atomic { kind, start, end } => {
            out.push_str(Op::from(*kind).name());
            out.push('(');
            out.push_str(&start.to_string());
            out.push_str(", ");
            out.push_str(&end.to_string());
            out.push(')');
        }
        Node::Higher { kind, args } => {
            out.push_str(Op::from(*kind).name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_node(a, out);
            }
            out.push(')');
        }
        Node::Const(c) => out.push_str(&c.as_int().to_string()),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

/// Pre-order operation names joined with `/`, constants and indices elided.
/// Programs with the same signature share one reasoning shape.
pub fn operation_signature(p: &Program) -> String {
    let mut parts = Vec::new();
    signature_walk(&p.root, &mut parts);
    parts.join("/")
}

fn signature_walk(node: &Node, parts: &mut Vec<&'static str>) {
    match node {
        Node::Atomic { kind, .. } => parts.push(Op::from(*kind).name()),
        Node::Higher { kind, args } => {
            parts.push(Op::from(*kind).name());
            for a in args {
                signature_walk(a, parts);
            }
        }
        Node::Const(_) => {}
    }
}
