//! Grammar, typing, and composition rules for programs over a context.
//!
//! [`validate`] checks a complete program and reports every violation.
//! [`LegalitySession`] is the incremental form: it feeds a decoder exactly
//! the tokens that can still grow into a complete valid program, so greedy
//! or beam decoding can never paint itself into a corner.

mod index;
mod session;

pub use index::ContextIndex;
pub use session::{open_session, LegalitySession, SessionError};

use crate::dsl::{
    to_decoding_tokens, AtomicKind, HigherKind, Node, Op, Program,
};
use crate::knowledge::{parse_number, LinearizedInput};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Tunable limits. The defaults fit finance-report QA; [`LegalityConfig::drop_profile`]
/// matches span/count/add-sub style datasets with no table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegalityConfig {
    /// Most tokens a SPAN may cover.
    pub max_span_length: usize,
    /// Most tokens a VALUE or CV may cover; numeric literals with a unit
    /// word or stray currency token stay well under this.
    pub max_numeric_tokens: usize,
    /// Most arguments for AVG (never above its structural cap of 3).
    pub max_avg_args: usize,
    /// Most arguments for COUNT, MULTI_SPANS, ARGMAX, and ARGMIN.
    pub max_variadic_args: usize,
    /// Budget for the decoded token sequence, counted after BOS and
    /// including EOS.
    pub max_program_tokens: usize,
    /// Operations removed from the language entirely.
    pub disabled_ops: BTreeSet<Op>,
}

impl Default for LegalityConfig {
    fn default() -> LegalityConfig {
        LegalityConfig {
            max_span_length: 8,
            max_numeric_tokens: 4,
            max_avg_args: 3,
            max_variadic_args: 16,
            max_program_tokens: 50,
            disabled_ops: BTreeSet::new(),
        }
    }
}

impl LegalityConfig {
    /// Profile for table-free reading comprehension: no cell operations and
    /// no multiplicative arithmetic.
    pub fn drop_profile() -> LegalityConfig {
        LegalityConfig {
            disabled_ops: [Op::Cell, Op::CellValue, Op::Times, Op::Div].into_iter().collect(),
            ..LegalityConfig::default()
        }
    }

    pub fn is_disabled(&self, op: Op) -> bool {
        self.disabled_ops.contains(&op)
    }
}

/// The three constraint families violations are reported under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Token indices: bounds, ordering, range length, distinctness.
    Index,
    /// What a range must contain or evaluate to.
    Type,
    /// Which operations may appear where, arities, budget.
    Composition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    /// Child-index path from the root to the offending node.
    pub path: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at /{}: {}", self.kind, path_str(&self.path), self.message)
    }
}

fn path_str(path: &[usize]) -> String {
    path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("/")
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Where a node sits, which decides what is allowed in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Root,
    ArithArg,
    CountItem,
    MultiSpansItem,
    KvKey,
    KvValue { key: Option<AtomicKind> },
    CompareArg,
}

/// Check a whole program against a context. Collects every violation; an
/// empty report means the program is valid.
pub fn validate(p: &Program, ctx: &LinearizedInput, cfg: &LegalityConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut path = Vec::new();
    visit(&p.root, ctx, cfg, Slot::Root, &mut path, &mut report);

    let decoded = to_decoding_tokens(p).len() - 1;
    if decoded > cfg.max_program_tokens {
        report.violations.push(Violation {
            kind: ConstraintKind::Composition,
            path: vec![],
            message: format!(
                "program decodes to {decoded} tokens, budget is {}",
                cfg.max_program_tokens
            ),
        });
    }
    report
}

fn push_violation(
    report: &mut ValidationReport,
    kind: ConstraintKind,
    path: &[usize],
    message: String,
) {
    report.violations.push(Violation { kind, path: path.to_vec(), message });
}

fn visit(
    node: &Node,
    ctx: &LinearizedInput,
    cfg: &LegalityConfig,
    slot: Slot,
    path: &mut Vec<usize>,
    report: &mut ValidationReport,
) {
    match node {
        Node::Const(_) => {
            if slot != Slot::ArithArg {
                push_violation(
                    report,
                    ConstraintKind::Composition,
                    path,
                    "constants may only appear as arithmetic arguments".into(),
                );
            }
        }
        Node::Atomic { kind, start, end } => {
            let op = Op::from(*kind);
            if cfg.is_disabled(op) {
                push_violation(
                    report,
                    ConstraintKind::Composition,
                    path,
                    format!("{} is disabled", op.name()),
                );
            }
            check_slot_for_atomic(*kind, slot, path, report);
            check_range(*kind, *start, *end, ctx, cfg, path, report);
        }
        Node::Higher { kind, args } => {
            let op = Op::from(*kind);
            if cfg.is_disabled(op) {
                push_violation(
                    report,
                    ConstraintKind::Composition,
                    path,
                    format!("{} is disabled", op.name()),
                );
            }
            let slot_ok = match slot {
                Slot::Root => *kind != HigherKind::Kv,
                Slot::ArithArg => kind.is_arithmetic(),
                Slot::CompareArg => *kind == HigherKind::Kv,
                Slot::CountItem | Slot::MultiSpansItem | Slot::KvKey | Slot::KvValue { .. } => {
                    false
                }
            };
            if !slot_ok {
                let message = match (kind, slot) {
                    (HigherKind::Kv, Slot::Root) => "KV cannot be the program root".into(),
                    (_, Slot::CompareArg) => {
                        format!("ARGMAX/ARGMIN arguments must be KV, found {}", op.name())
                    }
                    _ => format!("{} is not allowed in this position", op.name()),
                };
                push_violation(report, ConstraintKind::Composition, path, message);
            }
            check_arity(*kind, args.len(), slot, cfg, path, report);
            if matches!(kind, HigherKind::Count | HigherKind::MultiSpans) {
                check_distinct_ranges(args, path, report);
            }
            if *kind == HigherKind::Kv {
                check_kv_pairing(args, path, report);
            }
            let key_kind = match (kind, args.first()) {
                (HigherKind::Kv, Some(Node::Atomic { kind, .. })) => Some(*kind),
                _ => None,
            };
            for (i, a) in args.iter().enumerate() {
                let child_slot = match kind {
                    HigherKind::Kv => {
                        if i == 0 {
                            Slot::KvKey
                        } else {
                            Slot::KvValue { key: key_kind }
                        }
                    }
                    HigherKind::Count => Slot::CountItem,
                    HigherKind::MultiSpans => Slot::MultiSpansItem,
                    HigherKind::ArgMax | HigherKind::ArgMin => Slot::CompareArg,
                    _ => Slot::ArithArg,
                };
                path.push(i);
                visit(a, ctx, cfg, child_slot, path, report);
                path.pop();
            }
        }
    }
}

fn check_slot_for_atomic(
    kind: AtomicKind,
    slot: Slot,
    path: &[usize],
    report: &mut ValidationReport,
) {
    let op = Op::from(kind);
    let complaint = match slot {
        Slot::Root | Slot::CountItem | Slot::MultiSpansItem => None,
        Slot::ArithArg => (!kind.is_numeric())
            .then(|| format!("arithmetic arguments must be numeric, found {}", op.name())),
        Slot::CompareArg => {
            Some(format!("ARGMAX/ARGMIN arguments must be KV, found {}", op.name()))
        }
        Slot::KvKey => (kind.is_numeric())
            .then(|| format!("KV keys must be CELL or SPAN, found {}", op.name())),
        Slot::KvValue { key } => {
            let want = match key {
                Some(AtomicKind::Cell) => Some(AtomicKind::CellValue),
                Some(AtomicKind::Span) => Some(AtomicKind::Value),
                _ => None,
            };
            match want {
                Some(w) if kind != w => Some(format!(
                    "KV value must be {} for this key, found {}",
                    Op::from(w).name(),
                    op.name()
                )),
                None if !kind.is_numeric() => {
                    Some(format!("KV values must be numeric, found {}", op.name()))
                }
                _ => None,
            }
        }
    };
    if let Some(message) = complaint {
        report.violations.push(Violation { kind: ConstraintKind::Composition, path: path.to_vec(), message });
    }
}

fn check_range(
    kind: AtomicKind,
    start: usize,
    end: usize,
    ctx: &LinearizedInput,
    cfg: &LegalityConfig,
    path: &[usize],
    report: &mut ValidationReport,
) {
    let mut add = |ck: ConstraintKind, message: String| {
        report.violations.push(Violation { kind: ck, path: path.to_vec(), message });
    };
    let op = Op::from(kind);
    if start > end {
        add(ConstraintKind::Index, format!("range {start}..={end} is reversed"));
        return;
    }
    if end >= ctx.len() {
        add(
            ConstraintKind::Index,
            format!("range {start}..={end} is outside the context (length {})", ctx.len()),
        );
        return;
    }
    let len = end - start + 1;
    if kind == AtomicKind::Span && len > cfg.max_span_length {
        add(
            ConstraintKind::Index,
            format!("SPAN covers {len} tokens, limit is {}", cfg.max_span_length),
        );
    }
    if kind.is_numeric() && len > cfg.max_numeric_tokens {
        add(
            ConstraintKind::Index,
            format!("{} covers {len} tokens, limit is {}", op.name(), cfg.max_numeric_tokens),
        );
    }

    let ra = ctx.region_for(start).expect("start in bounds");
    if ra.key.is_separator() {
        add(ConstraintKind::Type, format!("range {start}..={end} starts on a separator"));
        return;
    }
    if end > ra.last {
        add(ConstraintKind::Type, format!("range {start}..={end} crosses region boundaries"));
        return;
    }
    let region_ok = if kind.is_table() { ra.key.is_cell() } else { ra.key.is_text() };
    if !region_ok {
        let place = if kind.is_table() { "a table cell" } else { "question or paragraph text" };
        add(ConstraintKind::Type, format!("{} must address {place}", op.name()));
        return;
    }
    if kind.is_numeric() {
        let surface = ctx.detokenize(start, end).expect("range checked");
        if parse_number(&surface).is_none() {
            add(
                ConstraintKind::Type,
                format!("{} range {start}..={end} does not read as a number", op.name()),
            );
        }
    }
}

fn check_arity(
    kind: HigherKind,
    found: usize,
    slot: Slot,
    cfg: &LegalityConfig,
    path: &[usize],
    report: &mut ValidationReport,
) {
    let mut add = |message: String| {
        report.violations.push(Violation {
            kind: ConstraintKind::Composition,
            path: path.to_vec(),
            message,
        });
    };
    let (smin, smax) = kind.arity();
    let mut min = smin;
    let mut max = smax;
    match kind {
        HigherKind::Avg => max = max.min(cfg.max_avg_args),
        HigherKind::Count | HigherKind::MultiSpans | HigherKind::ArgMax | HigherKind::ArgMin => {
            max = max.min(cfg.max_variadic_args);
        }
        _ => {}
    }
    if kind == HigherKind::MultiSpans && slot == Slot::Root {
        min = min.max(2);
    }
    let op = Op::from(kind).name();
    if found < min {
        add(format!("{op} needs at least {min} arguments, found {found}"));
    } else if found > max {
        add(format!("{op} allows at most {max} arguments, found {found}"));
    }
}

fn check_distinct_ranges(args: &[Node], path: &[usize], report: &mut ValidationReport) {
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for a in args {
        if let Some(r) = a.range() {
            if !seen.insert(r) {
                report.violations.push(Violation {
                    kind: ConstraintKind::Index,
                    path: path.to_vec(),
                    message: format!("range {}..={} is used twice", r.0, r.1),
                });
            }
        }
    }
}

fn check_kv_pairing(args: &[Node], path: &[usize], report: &mut ValidationReport) {
    if let (Some(Node::Atomic { kind: k, .. }), Some(Node::Atomic { kind: v, .. })) =
        (args.first(), args.get(1))
    {
        let ok = matches!(
            (k, v),
            (AtomicKind::Cell, AtomicKind::CellValue) | (AtomicKind::Span, AtomicKind::Value)
        );
        if !ok {
            report.violations.push(Violation {
                kind: ConstraintKind::Composition,
                path: path.to_vec(),
                message: format!(
                    "KV pairs CELL with CV or SPAN with VALUE, found {} with {}",
                    Op::from(*k).name(),
                    Op::from(*v).name()
                ),
            });
        }
    }
}
