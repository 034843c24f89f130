//! Flat decoding-token form of programs, as a sequence model sees them.
//!
//! The alphabet has fixed ids: `BOS`=0, `EOS`=1, `CLOSE`=2, the fifteen
//! operations in [`Op::ALL`] order at 3..=17, the constants 0/1/100 at
//! 18/19/20, and position `i` at `21+i`. Extraction operations emit exactly
//! two positions and no `CLOSE`; every other operation is closed explicitly.

use super::{ConstValue, Node, Op, Program};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// First id of the position block; position `i` has id `FIRST_POS_ID + i`.
pub const FIRST_POS_ID: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecodingToken {
    Bos,
    Eos,
    Close,
    Op(Op),
    Const(ConstValue),
    Pos(usize),
}

/// Stable id of a token in the decoding alphabet.
pub fn token_id(t: DecodingToken) -> usize {
    match t {
        DecodingToken::Bos => 0,
        DecodingToken::Eos => 1,
        DecodingToken::Close => 2,
        DecodingToken::Op(op) => 3 + op.index(),
        DecodingToken::Const(ConstValue::Zero) => 18,
        DecodingToken::Const(ConstValue::One) => 19,
        DecodingToken::Const(ConstValue::Hundred) => 20,
        DecodingToken::Pos(i) => FIRST_POS_ID + i,
    }
}

/// Inverse of [`token_id`].
pub fn token_from_id(id: usize) -> DecodingToken {
    match id {
        0 => DecodingToken::Bos,
        1 => DecodingToken::Eos,
        2 => DecodingToken::Close,
        3..=17 => DecodingToken::Op(Op::ALL[id - 3]),
        18 => DecodingToken::Const(ConstValue::Zero),
        19 => DecodingToken::Const(ConstValue::One),
        20 => DecodingToken::Const(ConstValue::Hundred),
        _ => DecodingToken::Pos(id - FIRST_POS_ID),
    }
}

impl fmt::Display for DecodingToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodingToken::Bos => f.write_str("BOS"),
            DecodingToken::Eos => f.write_str("EOS"),
            DecodingToken::Close => f.write_str("CLOSE"),
            DecodingToken::Op(op) => write!(f, "OP({})", op.name()),
            DecodingToken::Const(c) => write!(f, "CONST({})", c.as_int()),
            DecodingToken::Pos(i) => write!(f, "POS({i})"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unrecognized decoding token {0:?}")]
pub struct TokenParseError(pub String);

impl FromStr for DecodingToken {
    type Err = TokenParseError;

    fn from_str(s: &str) -> Result<DecodingToken, TokenParseError> {
        let s = s.trim();
        match s {
            "BOS" => return Ok(DecodingToken::Bos),
            "EOS" => return Ok(DecodingToken::Eos),
            "CLOSE" => return Ok(DecodingToken::Close),
            _ => {}
        }
        let inner = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')
        };
        if let Some(name) = inner("OP") {
            if let Some(op) = Op::from_name(name.trim()) {
                return Ok(DecodingToken::Op(op));
            }
        }
        if let Some(num) = inner("CONST") {
            if let Some(c) = num.trim().parse().ok().and_then(ConstValue::from_int) {
                return Ok(DecodingToken::Const(c));
            }
        }
        if let Some(num) = inner("POS") {
            if let Ok(i) = num.trim().parse() {
                return Ok(DecodingToken::Pos(i));
            }
        }
        Err(TokenParseError(s.to_string()))
    }
}

/// Pre-order flattening bracketed by `BOS`/`EOS`.
pub fn to_decoding_tokens(p: &Program) -> Vec<DecodingToken> {
    let mut out = vec![DecodingToken::Bos];
    flatten(&p.root, &mut out);
    out.push(DecodingToken::Eos);
    out
}

fn flatten(node: &Node, out: &mut Vec<DecodingToken>) {
    match node {
        Node::Atomic { kind, start, end } => {
            out.push(DecodingToken::Op(Op::from(*kind)));
            out.push(DecodingToken::Pos(*start));
            out.push(DecodingToken::Pos(*end));
        }
        Node::Higher { kind, args } => {
            out.push(DecodingToken::Op(Op::from(*kind)));
            for a in args {
                flatten(a, out);
            }
            out.push(DecodingToken::Close);
        }
        Node::Const(c) => out.push(DecodingToken::Const(*c)),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenSeqError {
    #[error("unexpected {token} at position {at}")]
    UnexpectedToken { at: usize, token: DecodingToken },
    #[error("sequence ended before the program was complete")]
    UnexpectedEnd,
    #[error("{op} closed with {found} arguments")]
    Arity { op: String, found: usize },
    #[error("trailing tokens after EOS at position {at}")]
    Trailing { at: usize },
}

/// Rebuild the tree form; inverse of [`to_decoding_tokens`] on well-formed
/// sequences, with the same structural arity rules as the text parser.
pub fn from_decoding_tokens(tokens: &[DecodingToken]) -> Result<Program, TokenSeqError> {
    let mut cur = Cursor { tokens, at: 0 };
    cur.take(DecodingToken::Bos)?;
    let root = cur.node()?;
    cur.take(DecodingToken::Eos)?;
    if cur.at != tokens.len() {
        return Err(TokenSeqError::Trailing { at: cur.at });
    }
    Ok(Program { root })
}

struct Cursor<'a> {
    tokens: &'a [DecodingToken],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<DecodingToken, TokenSeqError> {
        let t = *self.tokens.get(self.at).ok_or(TokenSeqError::UnexpectedEnd)?;
        self.at += 1;
        Ok(t)
    }

    fn take(&mut self, want: DecodingToken) -> Result<(), TokenSeqError> {
        let at = self.at;
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(TokenSeqError::UnexpectedToken { at, token: got })
        }
    }

    fn pos(&mut self) -> Result<usize, TokenSeqError> {
        let at = self.at;
        match self.next()? {
            DecodingToken::Pos(i) => Ok(i),
            other => Err(TokenSeqError::UnexpectedToken { at, token: other }),
        }
    }

    fn node(&mut self) -> Result<Node, TokenSeqError> {
        let at = self.at;
        match self.next()? {
            DecodingToken::Const(c) => Ok(Node::Const(c)),
            DecodingToken::Op(op) => {
                if let Some(kind) = op.as_atomic() {
                    let start = self.pos()?;
                    let end = self.pos()?;
                    return Ok(Node::Atomic { kind, start, end });
                }
                let kind = op.as_higher().expect("op is atomic or higher");
                let mut args = Vec::new();
                loop {
                    match self.tokens.get(self.at) {
                        Some(DecodingToken::Close) => {
                            self.at += 1;
                            break;
                        }
                        Some(_) => args.push(self.node()?),
                        None => return Err(TokenSeqError::UnexpectedEnd),
                    }
                }
                let (min, max) = kind.arity();
                if args.len() < min || args.len() > max {
                    return Err(TokenSeqError::Arity {
                        op: Op::from(kind).name().to_string(),
                        found: args.len(),
                    });
                }
                Ok(Node::Higher { kind, args })
            }
            other => Err(TokenSeqError::UnexpectedToken { at, token: other }),
        }
    }
}
