//! Hybrid table+text contexts and their flat token form.
//!
//! A [`HybridContext`] holds a question, a table, and ranked paragraphs.
//! [`linearize`] flattens it into one token sequence with per-token
//! provenance so that every downstream stage (legality, execution,
//! supervision search) can target tokens by index and still recover the
//! original text and table coordinates.

mod masks;
mod tokenize;

pub use masks::{build_attention_masks, AttentionMasks, BitMatrix};
pub use tokenize::{parse_number, tokenize, ParsedNumber, RawToken};

use crate::answer::{Answer, AnswerSource, Scale};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One table cell with its grid position and, when the whole cell text
/// normalizes to a number, the parsed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub text: String,
    pub number: Option<f64>,
    pub percent: bool,
}

/// Dense row-major table. Ragged input rows are padded with empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl Table {
    pub fn from_grid(grid: &[Vec<String>]) -> Table {
        let rows = grid.len();
        let cols = grid.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut cells = Vec::with_capacity(rows * cols);
        for (r, row) in grid.iter().enumerate() {
            for c in 0..cols {
                let text = row.get(c).cloned().unwrap_or_default();
                let parsed = parse_number(&text);
                cells.push(Cell {
                    row: r,
                    col: c,
                    text,
                    number: parsed.map(|p| p.value),
                    percent: parsed.is_some_and(|p| p.percent),
                });
            }
        }
        Table { rows, cols, cells }
    }

    pub fn empty() -> Table {
        Table { rows: 0, cols: 0, cells: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        if row < self.rows && col < self.cols {
            self.cells.get(row * self.cols + col)
        } else {
            None
        }
    }

    /// Row-major iteration over all cells.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    pub fn to_grid(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.cell(r, c).unwrap().text.clone()).collect())
            .collect()
    }
}

// Tables serialize as the plain grid of cell texts; numbers are re-derived
// on load so the parsed values can never drift from the text.
impl Serialize for Table {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        self.to_grid().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Table {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Table, D::Error> {
        let grid = Vec::<Vec<String>>::deserialize(de)?;
        Ok(Table::from_grid(&grid))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: usize,
    pub text: String,
    /// Question-overlap score filled in by [`rank_paragraphs`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_score: Option<f64>,
}

/// One question over a table and its supporting paragraphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridContext {
    pub id: String,
    pub question: String,
    pub table: Table,
    #[serde(default)]
    pub paragraphs: Vec<Paragraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_from: Option<AnswerSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<String>,
}

/// Which part of the context a token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    /// One of the four separators: 0 leading, 1 after the question,
    /// 2 after the table, 3 trailing.
    Separator { slot: u8 },
    Question,
    TableCell { row: usize, col: usize },
    Paragraph { id: usize },
}

impl Provenance {
    pub fn is_separator(self) -> bool {
        matches!(self, Provenance::Separator { .. })
    }

    pub fn is_cell(self) -> bool {
        matches!(self, Provenance::TableCell { .. })
    }

    /// True for question and paragraph tokens, the regions spans may cover.
    pub fn is_text(self) -> bool {
        matches!(self, Provenance::Question | Provenance::Paragraph { .. })
    }
}

/// One token of the linearized sequence. `start`/`end` are byte offsets into
/// the region source (empty for separators).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub percent: bool,
}

/// A maximal run of tokens sharing one provenance, with the source text the
/// token offsets point into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub key: Provenance,
    /// First and last token index, inclusive.
    pub first: usize,
    pub last: usize,
    pub source: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("linearized context has {len} tokens, cap is {cap}")]
    OversizeContext { len: usize, cap: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RangeError {
    #[error("token range {start}..={end} is outside the sequence (length {len})")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("token range {start}..={end} crosses region boundaries")]
    CrossesRegions { start: usize, end: usize },
    #[error("token {index} is a separator")]
    Separator { index: usize },
}

/// The flat form of a context: tokens plus the region partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedInput {
    tokens: Vec<Token>,
    regions: Vec<Region>,
}

impl LinearizedInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> Option<&Token> {
        self.tokens.get(i)
    }

    /// Regions in sequence order; together they partition `0..len()`.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region_for(&self, index: usize) -> Option<&Region> {
        if index >= self.tokens.len() {
            return None;
        }
        let at = self.regions.partition_point(|r| r.last < index);
        self.regions.get(at).filter(|r| r.first <= index && index <= r.last)
    }

    /// Inclusive token bounds of the region with this provenance, if the
    /// region produced any tokens.
    pub fn bounds(&self, key: Provenance) -> Option<(usize, usize)> {
        self.regions.iter().find(|r| r.key == key).map(|r| (r.first, r.last))
    }

    /// Recover the source text covered by tokens `start..=end`. The range
    /// must stay inside one non-separator region; interior whitespace is
    /// collapsed to single spaces.
    pub fn detokenize(&self, start: usize, end: usize) -> Result<String, RangeError> {
        let len = self.tokens.len();
        if start > end || end >= len {
            return Err(RangeError::OutOfBounds { start, end, len });
        }
        let ra = self.region_for(start).expect("index in range");
        if ra.key.is_separator() {
            return Err(RangeError::Separator { index: start });
        }
        if !(ra.first <= start && end <= ra.last) {
            return Err(RangeError::CrossesRegions { start, end });
        }
        let a = &self.tokens[start];
        let b = &self.tokens[end];
        let slice = &ra.source[a.start..b.end];
        Ok(slice.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

/// Score each paragraph by token-F1 overlap with the question and return
/// them sorted best-first. Ties keep the input order.
pub fn rank_paragraphs(question: &str, paragraphs: &[Paragraph]) -> Vec<Paragraph> {
    let mut ranked: Vec<Paragraph> = paragraphs
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.rank_score = Some(crate::text::bag_f1(question, &p.text));
            p
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.rank_score
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.rank_score.unwrap_or(f64::NEG_INFINITY))
    });
    ranked
}

/// Flatten a context into `[SEP, question, SEP, table row-major, SEP,
/// paragraphs best-first, SEP]`. Paragraphs are ordered by rank score
/// (descending, ties by id); paragraphs without a score keep id order at the
/// end. Fails when the sequence would exceed `cap` tokens.
pub fn linearize(ctx: &HybridContext, cap: usize) -> Result<LinearizedInput, LinearizeError> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut regions: Vec<Region> = Vec::new();

    let push_sep = |tokens: &mut Vec<Token>, regions: &mut Vec<Region>, slot: u8| {
        let key = Provenance::Separator { slot };
        let idx = tokens.len();
        tokens.push(Token {
            surface: String::new(),
            start: 0,
            end: 0,
            provenance: key,
            number: None,
            percent: false,
        });
        regions.push(Region { key, first: idx, last: idx, source: String::new() });
    };
    let push_text =
        |tokens: &mut Vec<Token>, regions: &mut Vec<Region>, key: Provenance, source: &str| {
            let raw = tokenize(source);
            if raw.is_empty() {
                return;
            }
            let first = tokens.len();
            for t in raw {
                let parsed = parse_number(&t.surface);
                tokens.push(Token {
                    surface: t.surface,
                    start: t.start,
                    end: t.end,
                    provenance: key,
                    number: parsed.map(|p| p.value),
                    percent: parsed.is_some_and(|p| p.percent),
                });
            }
            regions.push(Region { key, first, last: tokens.len() - 1, source: source.to_string() });
        };

    push_sep(&mut tokens, &mut regions, 0);
    push_text(&mut tokens, &mut regions, Provenance::Question, &ctx.question);
    push_sep(&mut tokens, &mut regions, 1);
    for cell in ctx.table.cells() {
        push_text(
            &mut tokens,
            &mut regions,
            Provenance::TableCell { row: cell.row, col: cell.col },
            &cell.text,
        );
    }
    push_sep(&mut tokens, &mut regions, 2);

    let mut paras: Vec<&Paragraph> = ctx.paragraphs.iter().collect();
    paras.sort_by(|a, b| {
        b.rank_score
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.rank_score.unwrap_or(f64::NEG_INFINITY))
            .then(a.id.cmp(&b.id))
    });
    for p in paras {
        push_text(&mut tokens, &mut regions, Provenance::Paragraph { id: p.id }, &p.text);
    }
    push_sep(&mut tokens, &mut regions, 3);

    if tokens.len() > cap {
        return Err(LinearizeError::OversizeContext { len: tokens.len(), cap });
    }
    Ok(LinearizedInput { tokens, regions })
}

/// Rank the paragraphs against the question (unless scores are already
/// present) and linearize. This is the one pipeline every consumer uses, so
/// token indices agree across legality, execution, search, and export.
pub fn prepare(ctx: &HybridContext, cap: usize) -> Result<LinearizedInput, LinearizeError> {
    if ctx.paragraphs.iter().all(|p| p.rank_score.is_none()) && !ctx.paragraphs.is_empty() {
        let mut ranked_ctx = ctx.clone();
        ranked_ctx.paragraphs = rank_paragraphs(&ctx.question, &ctx.paragraphs);
        linearize(&ranked_ctx, cap)
    } else {
        linearize(ctx, cap)
    }
}
