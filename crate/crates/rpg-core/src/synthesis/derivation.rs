//! Grounding annotated derivations.
//!
//! Datasets with arithmetic answers often ship the annotator's expression,
//! e.g. `(11,386-9,162)/9,162`. Parsing it and grounding each literal to a
//! numeric token range yields the intended program directly, with the
//! relative-change and average shapes recovered from their spelled-out
//! forms. Anything that fails to parse or ground simply falls through to
//! the blind strategies.

use super::ground::{numeric_sites, NumericSite};
use super::{Origin, Searcher};
use crate::dsl::{ConstValue, HigherKind, Node, Program};
use crate::knowledge::parse_number;

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Lit(f64),
    Bin(char, Box<Expr>, Box<Expr>),
}

pub(crate) fn run(s: &mut Searcher, derivation: Option<&str>) {
    let Some(text) = derivation else { return };
    if text.trim().is_empty() {
        return;
    }
    s.tick();
    let Some(expr) = parse(text) else { return };
    let sites = numeric_sites(s.li, &s.index, false);
    let Some(node) = ground_expr(&expr, &sites) else { return };
    // Push the grounded program and its two rescalings; whichever misses
    // the gold is dropped by the execution check.
    for wrapped in [
        node.clone(),
        rescale(HigherKind::Times, node.clone()),
        rescale(HigherKind::Div, node),
    ] {
        s.try_push(Program::new(wrapped), Origin::Derivation);
    }
}

fn rescale(kind: HigherKind, node: Node) -> Node {
    Node::Higher { kind, args: vec![node, Node::Const(ConstValue::Hundred)] }
}

fn ground_expr(e: &Expr, sites: &[NumericSite]) -> Option<Node> {
    match e {
        Expr::Lit(v) => ground_lit(*v, sites),
        Expr::Bin('/', l, r) => {
            // (a - b) / b is a relative change.
            if let Expr::Bin('-', a, b) = &**l {
                if let (Expr::Lit(bv), Expr::Lit(rv)) = (&**b, &**r) {
                    if bv == rv {
                        return Some(Node::Higher {
                            kind: HigherKind::ChangeR,
                            args: vec![ground_expr(a, sites)?, ground_expr(b, sites)?],
                        });
                    }
                }
            }
            // (a + b) / 2 and (a + b + c) / 3 are averages.
            let chain = sum_chain(l);
            if (2..=3).contains(&chain.len()) {
                if let Expr::Lit(n) = &**r {
                    if *n == chain.len() as f64 {
                        let args = chain
                            .iter()
                            .map(|t| ground_expr(t, sites))
                            .collect::<Option<Vec<_>>>()?;
                        return Some(Node::Higher { kind: HigherKind::Avg, args });
                    }
                }
            }
            ground_bin(HigherKind::Div, l, r, sites)
        }
        Expr::Bin('+', l, r) => ground_bin(HigherKind::Sum, l, r, sites),
        Expr::Bin('-', l, r) => ground_bin(HigherKind::Diff, l, r, sites),
        Expr::Bin('*', l, r) => ground_bin(HigherKind::Times, l, r, sites),
        Expr::Bin(_, _, _) => None,
    }
}

fn ground_bin(kind: HigherKind, l: &Expr, r: &Expr, sites: &[NumericSite]) -> Option<Node> {
    Some(Node::Higher { kind, args: vec![ground_expr(l, sites)?, ground_expr(r, sites)?] })
}

/// A literal grounds to the first context range with its value, or to a
/// constant of the language.
fn ground_lit(v: f64, sites: &[NumericSite]) -> Option<Node> {
    if let Some(site) = sites.iter().find(|s| (s.value - v).abs() <= 1e-9) {
        return Some(Node::Atomic { kind: site.kind, start: site.start, end: site.end });
    }
    if v < 0.0 {
        return None;
    }
    ConstValue::from_int(v as u64).filter(|c| c.value() == v).map(Node::Const)
}

fn sum_chain(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Bin('+', l, r) => {
            let mut out = sum_chain(l);
            out.push(r);
            out
        }
        other => vec![other],
    }
}

// Expression parsing: literals with digit grouping, currency and percent
// marks, the four operators (unicode variants included), and parentheses.

fn parse(text: &str) -> Option<Expr> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, at: 0 };
    let e = p.expr()?;
    (p.at == p.tokens.len()).then_some(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
    Open,
    Close,
}

fn lex(text: &str) -> Option<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '$' | '€' | '£' | '%' => i += 1,
            '(' | '[' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' | ']' => {
                out.push(Tok::Close);
                i += 1;
            }
            '+' => {
                out.push(Tok::Op('+'));
                i += 1;
            }
            '-' | '\u{2212}' | '\u{2013}' => {
                out.push(Tok::Op('-'));
                i += 1;
            }
            '*' | '\u{d7}' | 'x' | 'X' => {
                out.push(Tok::Op('*'));
                i += 1;
            }
            '/' | '\u{f7}' => {
                out.push(Tok::Op('/'));
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || ",.".contains(chars[i])) {
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                let parsed = parse_number(lit.trim_end_matches([',', '.']))?;
                out.push(Tok::Num(parsed.value));
            }
            _ => return None,
        }
    }
    Some(out)
}

struct Parser {
    tokens: Vec<Tok>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.tokens.get(self.at).copied()
    }

    fn expr(&mut self) -> Option<Expr> {
        let mut left = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            self.at += 1;
            let right = self.term()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
        Some(left)
    }

    fn term(&mut self) -> Option<Expr> {
        let mut left = self.factor()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            self.at += 1;
            let right = self.factor()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
        Some(left)
    }

    fn factor(&mut self) -> Option<Expr> {
        match self.peek()? {
            Tok::Num(v) => {
                self.at += 1;
                Some(Expr::Lit(v))
            }
            Tok::Op('-') => {
                self.at += 1;
                match self.factor()? {
                    Expr::Lit(v) => Some(Expr::Lit(-v)),
                    e => Some(Expr::Bin('-', Box::new(Expr::Lit(0.0)), Box::new(e))),
                }
            }
            Tok::Open => {
                self.at += 1;
                let e = self.expr()?;
                (self.peek()? == Tok::Close).then(|| {
                    self.at += 1;
                    e
                })
            }
            _ => None,
        }
    }
}
