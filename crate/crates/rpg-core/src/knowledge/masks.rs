//! Structure-aware attention masks derived from token provenance.
//!
//! Cell tokens only see their own row in the lower tier; the upper tier adds
//! the rest of their column. Everything that is not a cell token (separators,
//! question, paragraphs) attends everywhere in both tiers.

use super::{LinearizedInput, Provenance};
use serde::{Deserialize, Serialize};

/// Square bit matrix, row-major, packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    n: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> BitMatrix {
        let per_row = n.div_ceil(64);
        BitMatrix { n, words: vec![0; per_row * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn word(&self, i: usize, j: usize) -> (usize, u64) {
        let per_row = self.n.div_ceil(64);
        (i * per_row + j / 64, 1u64 << (j % 64))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        let (w, bit) = self.word(i, j);
        self.words[w] & bit != 0
    }

    pub fn set(&mut self, i: usize, j: usize) {
        let (w, bit) = self.word(i, j);
        self.words[w] |= bit;
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when every bit set here is also set in `other`.
    pub fn subset_of(&self, other: &BitMatrix) -> bool {
        self.n == other.n
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Row `i` as a hex string, least-significant word first.
    pub fn row_hex(&self, i: usize) -> String {
        let per_row = self.n.div_ceil(64);
        (0..per_row).map(|k| format!("{:016x}", self.words[i * per_row + k])).collect()
    }
}

/// The two visibility tiers; `lower` is always a subset of `upper`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionMasks {
    pub lower: BitMatrix,
    pub upper: BitMatrix,
}

/// Build both tiers for a linearized context.
pub fn build_attention_masks(input: &LinearizedInput) -> AttentionMasks {
    let n = input.len();
    let mut lower = BitMatrix::new(n);
    let mut upper = BitMatrix::new(n);
    let cells: Vec<Option<(usize, usize)>> = input
        .tokens()
        .iter()
        .map(|t| match t.provenance {
            Provenance::TableCell { row, col } => Some((row, col)),
            _ => None,
        })
        .collect();

    for i in 0..n {
        for j in i..n {
            let (in_lower, in_upper) = match (cells[i], cells[j]) {
                (Some((r1, c1)), Some((r2, c2))) => (r1 == r2, r1 == r2 || c1 == c2),
                _ => (true, true),
            };
            if in_lower {
                lower.set(i, j);
                lower.set(j, i);
            }
            if in_upper {
                upper.set(i, j);
                upper.set(j, i);
            }
        }
    }
    AttentionMasks { lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{linearize, HybridContext, Table};

    fn grid_ctx(grid: &[&[&str]]) -> LinearizedInput {
        let ctx = HybridContext {
            id: "m".into(),
            question: "q one".into(),
            table: Table::from_grid(
                &grid.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect::<Vec<_>>(),
            ),
            paragraphs: vec![],
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        linearize(&ctx, 2048).unwrap()
    }

    fn cell_index(li: &LinearizedInput, row: usize, col: usize) -> usize {
        li.bounds(Provenance::TableCell { row, col }).unwrap().0
    }

    #[test]
    fn row_and_column_visibility() {
        let li = grid_ctx(&[&["a", "b"], &["c", "d"]]);
        let m = build_attention_masks(&li);
        let a = cell_index(&li, 0, 0);
        let b = cell_index(&li, 0, 1);
        let c = cell_index(&li, 1, 0);
        let d = cell_index(&li, 1, 1);

        // Same row: visible in both tiers.
        assert!(m.lower.get(a, b) && m.upper.get(a, b));
        // Same column, different row: upper only.
        assert!(!m.lower.get(a, c) && m.upper.get(a, c));
        // Different row and column: neither.
        assert!(!m.lower.get(a, d) && !m.upper.get(a, d));
        // Diagonal.
        assert!(m.lower.get(d, d));
    }

    #[test]
    fn non_cell_tokens_see_everything() {
        let li = grid_ctx(&[&["a", "b"], &["c", "d"]]);
        let m = build_attention_masks(&li);
        let a = cell_index(&li, 0, 0);
        for i in 0..li.len() {
            if !li.tokens()[i].provenance.is_cell() {
                assert!(m.lower.get(i, a) && m.lower.get(a, i), "token {i}");
                for j in 0..li.len() {
                    if !li.tokens()[j].provenance.is_cell() {
                        assert!(m.lower.get(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn lower_is_subset_and_both_symmetric() {
        let li = grid_ctx(&[&["a", "b", "c"], &["d", "e", "f"], &["g", "h", "i"]]);
        let m = build_attention_masks(&li);
        assert!(m.lower.subset_of(&m.upper));
        for i in 0..li.len() {
            for j in 0..li.len() {
                assert_eq!(m.lower.get(i, j), m.lower.get(j, i));
                assert_eq!(m.upper.get(i, j), m.upper.get(j, i));
            }
        }
    }

    #[test]
    fn multi_token_cells_share_visibility() {
        let li = grid_ctx(&[&["net sales", "10"], &["cost of goods", "20"]]);
        let m = build_attention_masks(&li);
        let (s0, e0) = li.bounds(Provenance::TableCell { row: 0, col: 0 }).unwrap();
        assert!(m.lower.get(s0, e0), "tokens of one cell see each other");
        let (s1, _) = li.bounds(Provenance::TableCell { row: 1, col: 0 }).unwrap();
        assert!(!m.lower.get(s0, s1));
        assert!(m.upper.get(s0, s1));
    }
}
