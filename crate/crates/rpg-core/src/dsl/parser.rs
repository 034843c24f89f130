//! Recursive-descent parser for the canonical program syntax.

use super::{AtomicKind, ConstValue, HigherKind, Node, Op, Program};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("{op} takes {expected} arguments, found {found}")]
    Arity { op: String, expected: String, found: usize },
}

/// Parse the canonical text form. Whitespace between tokens is free;
/// operation names are case-insensitive; `CELL_VALUE` is accepted for `CV`.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0 };
    let root = p.node()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input after program"));
    }
    Ok(Program { root })
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn node(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                let c = ConstValue::from_int(n)
                    .ok_or_else(|| self.err("constant must be 0, 1, or 100"))?;
                Ok(Node::Const(c))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name_start = self.pos;
                let name = self.ident();
                let op = Op::from_name(name).ok_or_else(|| ParseError::Syntax {
                    offset: name_start,
                    message: format!("unknown operation {name:?}"),
                })?;
                self.expect(b'(')?;
                let node = if let Some(kind) = op.as_atomic() {
                    self.atomic_tail(kind)?
                } else {
                    self.higher_tail(op.as_higher().expect("op is atomic or higher"))?
                };
                self.expect(b')')?;
                Ok(node)
            }
            _ => Err(self.err("expected an operation or constant")),
        }
    }

    fn atomic_tail(&mut self, kind: AtomicKind) -> Result<Node, ParseError> {
        self.skip_ws();
        if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(self.err("extraction operations take two token indices"));
        }
        let start = self.integer()? as usize;
        self.expect(b',')?;
        self.skip_ws();
        if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(self.err("extraction operations take two token indices"));
        }
        let end = self.integer()? as usize;
        Ok(Node::Atomic { kind, start, end })
    }

    fn higher_tail(&mut self, kind: HigherKind) -> Result<Node, ParseError> {
        let mut args = vec![self.node()?];
        loop {
            self.skip_ws();
            if self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.node()?);
            } else {
                break;
            }
        }
        let (min, max) = kind.arity();
        if args.len() < min || args.len() > max {
            let expected = if min == max {
                format!("exactly {min}")
            } else if max == usize::MAX {
                format!("at least {min}")
            } else {
                format!("{min} to {max}")
            };
            return Err(ParseError::Arity {
                op: Op::from(kind).name().to_string(),
                expected,
                found: args.len(),
            });
        }
        Ok(Node::Higher { kind, args })
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii ident")
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| self.err("integer out of range"))
    }
}
