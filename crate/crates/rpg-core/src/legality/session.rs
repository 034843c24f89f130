//! Incremental decoding sessions.
//!
//! A session tracks a partial token sequence and offers exactly the tokens
//! that can still be extended into a complete valid program within the
//! budget. "Exactly" is load-bearing: every offered token is backed by a
//! feasibility check (range pools, pair availability, distinctness
//! headroom, minimal completion cost), so a decoder that only ever picks
//! offered tokens cannot reach a dead end.

use super::index::ContextIndex;
use super::LegalityConfig;
use crate::dsl::{AtomicKind, ConstValue, DecodingToken, HigherKind, Node, Op, Program};
use crate::knowledge::LinearizedInput;
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("session is closed")]
    Closed,
    #[error("token {token} is not legal here")]
    Illegal { token: DecodingToken },
}

/// Start a session for one context. Sessions are cheap to clone (the range
/// index is shared), which is what beam search wants.
pub fn open_session(ctx: &LinearizedInput, cfg: &LegalityConfig) -> LegalitySession {
    LegalitySession {
        shared: Arc::new(Shared { index: ContextIndex::build(ctx, cfg), cfg: cfg.clone() }),
        history: vec![DecodingToken::Bos],
        stack: Vec::new(),
        root: None,
        closed: false,
    }
}

#[derive(Debug)]
struct Shared {
    index: ContextIndex,
    cfg: LegalityConfig,
}

#[derive(Debug, Clone)]
enum Frame {
    /// An extraction waiting for its positions.
    Pending { kind: AtomicKind, start: Option<usize> },
    /// An operation collecting arguments. `used` holds the ranges taken by
    /// COUNT/MULTI_SPANS items; `key` remembers the KV key kind.
    Open { kind: HigherKind, args: Vec<Node>, used: Vec<(usize, usize)>, key: Option<AtomicKind> },
}

/// Effective frame summary for completion-cost estimates. `args`/`used`
/// already include any argument currently in flight.
#[derive(Debug, Clone, Copy)]
enum Fs {
    Atomic { pos_needed: usize },
    Open { kind: HigherKind, args: usize, used: usize },
}

#[derive(Debug, Clone)]
pub struct LegalitySession {
    shared: Arc<Shared>,
    history: Vec<DecodingToken>,
    stack: Vec<Frame>,
    root: Option<Node>,
    closed: bool,
}

impl LegalitySession {
    /// Tokens consumed so far, starting with BOS.
    pub fn prefix(&self) -> &[DecodingToken] {
        &self.history
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// The finished program once EOS has been accepted.
    pub fn finished(&self) -> Option<Program> {
        if self.closed {
            self.root.clone().map(Program::new)
        } else {
            None
        }
    }

    /// True when the session is stuck: not closed and nothing is legal.
    /// Reachable only from the initial state of a degenerate configuration;
    /// advancing through offered tokens never strands a session.
    pub fn is_dead_end(&self) -> bool {
        !self.closed && self.legal_next().map(|s| s.is_empty()).unwrap_or(false)
    }

    /// The exact set of tokens that may come next.
    pub fn legal_next(&self) -> Result<BTreeSet<DecodingToken>, SessionError> {
        if self.closed {
            return Err(SessionError::Closed);
        }
        let mut out = BTreeSet::new();
        let decoded = self.history.len() - 1;
        let remaining = self.shared.cfg.max_program_tokens.saturating_sub(decoded);

        if self.root.is_some() {
            if remaining >= 1 {
                out.insert(DecodingToken::Eos);
            }
            return Ok(out);
        }

        match self.stack.last() {
            Some(Frame::Pending { kind, start: None }) => {
                let frames = self.frames_with_child(Fs::Atomic { pos_needed: 1 }, true);
                if self.fits(&frames, remaining) {
                    let used = self.used_of_parent_of_pending();
                    for s in 0..self.shared.index.len() {
                        if self.has_end(*kind, s, used) {
                            out.insert(DecodingToken::Pos(s));
                        }
                    }
                }
            }
            Some(Frame::Pending { kind, start: Some(s) }) => {
                let frames = self.frames_after_attach();
                if self.fits(&frames, remaining) {
                    let used = self.used_of_parent_of_pending();
                    for &e in self.shared.index.ends(*kind, *s) {
                        if !used.contains(&(*s, e)) {
                            out.insert(DecodingToken::Pos(e));
                        }
                    }
                }
            }
            top => self.node_candidates(top, remaining, &mut out),
        }
        Ok(out)
    }

    /// Consume one token, which must be in [`LegalitySession::legal_next`].
    pub fn advance(&mut self, t: DecodingToken) -> Result<(), SessionError> {
        let legal = self.legal_next()?;
        if !legal.contains(&t) {
            return Err(SessionError::Illegal { token: t });
        }
        self.history.push(t);
        match t {
            DecodingToken::Eos => self.closed = true,
            DecodingToken::Pos(p) => {
                let done = match self.stack.last_mut() {
                    Some(Frame::Pending { kind, start }) => match *start {
                        None => {
                            *start = Some(p);
                            None
                        }
                        Some(s) => Some(Node::Atomic { kind: *kind, start: s, end: p }),
                    },
                    _ => unreachable!("positions only while an extraction is pending"),
                };
                if let Some(node) = done {
                    self.stack.pop();
                    self.attach(node);
                }
            }
            DecodingToken::Op(op) => {
                if let Some(kind) = op.as_atomic() {
                    self.stack.push(Frame::Pending { kind, start: None });
                } else {
                    self.stack.push(Frame::Open {
                        kind: op.as_higher().expect("op is atomic or higher"),
                        args: Vec::new(),
                        used: Vec::new(),
                        key: None,
                    });
                }
            }
            DecodingToken::Const(c) => self.attach(Node::Const(c)),
            DecodingToken::Close => {
                let Some(Frame::Open { kind, args, .. }) = self.stack.pop() else {
                    unreachable!("CLOSE only while an operation is open")
                };
                self.attach(Node::Higher { kind, args });
            }
            DecodingToken::Bos => unreachable!("BOS is never offered"),
        }
        Ok(())
    }

    fn attach(&mut self, node: Node) {
        match self.stack.last_mut() {
            Some(Frame::Open { kind, args, used, key }) => {
                if matches!(kind, HigherKind::Count | HigherKind::MultiSpans) {
                    if let Some(r) = node.range() {
                        used.push(r);
                    }
                }
                if *kind == HigherKind::Kv && args.is_empty() {
                    if let Node::Atomic { kind: k, .. } = &node {
                        *key = Some(*k);
                    }
                }
                args.push(node);
            }
            None => self.root = Some(node),
            Some(Frame::Pending { .. }) => unreachable!("extractions take no child nodes"),
        }
    }

    // Candidate generation at a node boundary: the next token either opens a
    // new node in the top frame (or the root), or closes the top frame.
    fn node_candidates(
        &self,
        top: Option<&Frame>,
        remaining: usize,
        out: &mut BTreeSet<DecodingToken>,
    ) {
        let cfg = &self.shared.cfg;
        let index = &self.shared.index;

        let (atomic_cands, higher_cands, consts_ok): (Vec<AtomicKind>, Vec<HigherKind>, bool) =
            match top {
                None => (
                    AtomicKind::ALL.to_vec(),
                    HigherKind::ALL.iter().copied().filter(|k| *k != HigherKind::Kv).collect(),
                    false,
                ),
                Some(Frame::Open { kind, args, key, .. }) => match kind {
                    HigherKind::Kv => {
                        if args.is_empty() {
                            let mut keys = Vec::new();
                            if index.kv_cell_ok() {
                                keys.push(AtomicKind::Cell);
                            }
                            if index.kv_span_ok() {
                                keys.push(AtomicKind::Span);
                            }
                            (keys, vec![], false)
                        } else {
                            let value_kind = match key {
                                Some(AtomicKind::Cell) => vec![AtomicKind::CellValue],
                                Some(AtomicKind::Span) => vec![AtomicKind::Value],
                                _ => vec![],
                            };
                            (value_kind, vec![], false)
                        }
                    }
                    HigherKind::Count | HigherKind::MultiSpans => {
                        (AtomicKind::ALL.to_vec(), vec![], false)
                    }
                    HigherKind::ArgMax | HigherKind::ArgMin => (vec![], vec![HigherKind::Kv], false),
                    _ => (
                        vec![AtomicKind::Value, AtomicKind::CellValue],
                        HigherKind::ALL.iter().copied().filter(|k| k.is_arithmetic()).collect(),
                        true,
                    ),
                },
                Some(Frame::Pending { .. }) => unreachable!("handled by the caller"),
            };

        let headroom = match top {
            None => true,
            Some(Frame::Open { kind, args, .. }) => args.len() < self.max_args(*kind),
            _ => false,
        };

        if headroom {
            let used = match top {
                Some(Frame::Open { kind, used, .. })
                    if matches!(kind, HigherKind::Count | HigherKind::MultiSpans) =>
                {
                    used.as_slice()
                }
                _ => &[],
            };
            let atom_frames = self.frames_with_child(Fs::Atomic { pos_needed: 2 }, false);
            let atom_fits = self.fits(&atom_frames, remaining.saturating_sub(1));
            for kind in atomic_cands {
                if !atom_fits || !self.kind_available(kind, used) {
                    continue;
                }
                out.insert(DecodingToken::Op(Op::from(kind)));
            }
            for kind in higher_cands {
                if cfg.is_disabled(Op::from(kind)) {
                    continue;
                }
                let frames =
                    self.frames_with_child(Fs::Open { kind, args: 0, used: 0 }, false);
                if self.fits(&frames, remaining.saturating_sub(1)) {
                    out.insert(DecodingToken::Op(Op::from(kind)));
                }
            }
            if consts_ok {
                let frames = self.frames_after_attach();
                if self.fits(&frames, remaining.saturating_sub(1)) {
                    for c in ConstValue::ALL {
                        out.insert(DecodingToken::Const(c));
                    }
                }
            }
        }

        // CLOSE: the top operation has enough arguments and the rest of the
        // program still fits.
        if let Some(Frame::Open { kind, args, .. }) = top {
            if args.len() >= self.min_args(*kind) {
                let frames = self.frames_after_close();
                if self.fits(&frames, remaining.saturating_sub(1)) {
                    out.insert(DecodingToken::Close);
                }
            }
        }
    }

    fn fits(&self, frames: &Option<Vec<Fs>>, budget: usize) -> bool {
        match frames {
            Some(fs) => self.completion_cost(fs).is_some_and(|c| c <= budget),
            None => false,
        }
    }

    /// Minimal further tokens (including EOS) to finish a program whose
    /// stack looks like `frames`, top first; `None` when no completion
    /// exists at all.
    fn completion_cost(&self, frames: &[Fs]) -> Option<usize> {
        let mut cost = 0usize;
        for f in frames {
            match *f {
                Fs::Atomic { pos_needed } => cost += pos_needed,
                Fs::Open { kind, args, used } => {
                    let need = self.min_args(kind).saturating_sub(args);
                    match kind {
                        HigherKind::Count | HigherKind::MultiSpans => {
                            if self.shared.index.merged_count().saturating_sub(used) < need {
                                return None;
                            }
                            cost += 3 * need;
                        }
                        HigherKind::ArgMax | HigherKind::ArgMin => {
                            if need > 0 && !self.kv_possible() {
                                return None;
                            }
                            cost += 8 * need;
                        }
                        HigherKind::Kv => {
                            if need == 2 && !self.kv_possible() {
                                return None;
                            }
                            cost += 3 * need;
                        }
                        // Arithmetic: a constant is always a 1-token argument.
                        _ => cost += need,
                    }
                    cost += 1; // CLOSE
                }
            }
        }
        Some(cost + 1) // EOS
    }

    /// Structural/config minimum arguments before CLOSE is allowed.
    /// MULTI_SPANS only ever sits at the root, where it needs two spans.
    fn min_args(&self, kind: HigherKind) -> usize {
        match kind {
            HigherKind::Count => 1,
            _ => 2,
        }
    }

    fn max_args(&self, kind: HigherKind) -> usize {
        let cfg = &self.shared.cfg;
        match kind {
            HigherKind::Kv => 2,
            HigherKind::Count
            | HigherKind::MultiSpans
            | HigherKind::ArgMax
            | HigherKind::ArgMin => cfg.max_variadic_args,
            HigherKind::Avg => cfg.max_avg_args.min(3),
            _ => 2,
        }
    }

    fn kv_possible(&self) -> bool {
        !self.shared.cfg.is_disabled(Op::Kv)
            && (self.shared.index.kv_cell_ok() || self.shared.index.kv_span_ok())
    }

    /// Ranges already taken by the COUNT/MULTI_SPANS frame enclosing the
    /// pending extraction on top of the stack.
    fn used_of_parent_of_pending(&self) -> &[(usize, usize)] {
        if self.stack.len() >= 2 {
            if let Frame::Open { kind, used, .. } = &self.stack[self.stack.len() - 2] {
                if matches!(kind, HigherKind::Count | HigherKind::MultiSpans) {
                    return used;
                }
            }
        }
        &[]
    }

    fn has_end(&self, kind: AtomicKind, start: usize, used: &[(usize, usize)]) -> bool {
        self.shared.index.ends(kind, start).iter().any(|&e| !used.contains(&(start, e)))
    }

    fn kind_available(&self, kind: AtomicKind, used: &[(usize, usize)]) -> bool {
        if used.is_empty() {
            return self.shared.index.has_kind(kind);
        }
        (0..self.shared.index.len()).any(|s| self.has_end(kind, s, used))
    }

    // Hypothetical stack summaries. `completion_cost` expects effective
    // argument counts, so frames below an in-flight child count that child.

    /// Every real frame with one in-flight argument added.
    fn frames_all_bumped(&self) -> Vec<Fs> {
        self.stack
            .iter()
            .rev()
            .map(|f| match f {
                Frame::Pending { start, .. } => {
                    Fs::Atomic { pos_needed: if start.is_some() { 1 } else { 2 } }
                }
                Frame::Open { kind, args, used, .. } => Fs::Open {
                    kind: *kind,
                    args: args.len() + 1,
                    used: used.len()
                        + usize::from(matches!(
                            kind,
                            HigherKind::Count | HigherKind::MultiSpans
                        )),
                },
            })
            .collect()
    }

    /// Stack after a new child starts in the current top frame. With
    /// `replace_top`, the child replaces the top frame instead (used when
    /// the top is the pending extraction being costed).
    fn frames_with_child(&self, child: Fs, replace_top: bool) -> Option<Vec<Fs>> {
        let mut frames = self.frames_all_bumped();
        if replace_top {
            if frames.is_empty() {
                return None;
            }
            frames[0] = child;
        } else {
            frames.insert(0, child);
        }
        Some(frames)
    }

    /// Stack after the top frame's node (pending extraction completing, or
    /// a constant landing in the top frame) attaches to its parent.
    fn frames_after_attach(&self) -> Option<Vec<Fs>> {
        match self.stack.last() {
            Some(Frame::Pending { .. }) => {
                let mut frames = self.frames_all_bumped();
                frames.remove(0);
                Some(frames)
            }
            Some(Frame::Open { .. }) => Some(self.frames_all_bumped()),
            None => None,
        }
    }

    /// Stack after CLOSE pops the top operation and attaches it.
    fn frames_after_close(&self) -> Option<Vec<Fs>> {
        if self.stack.is_empty() {
            return None;
        }
        let mut frames = self.frames_all_bumped();
        frames.remove(0);
        Some(frames)
    }
}
