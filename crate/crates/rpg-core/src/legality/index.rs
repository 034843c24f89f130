//! Precomputed range pools: for each extraction kind, every `(start, end)`
//! the context admits under a configuration. The incremental session reads
//! these to decide which positions are worth offering.

use super::LegalityConfig;
use crate::dsl::{AtomicKind, Op};
use crate::knowledge::{parse_number, LinearizedInput};

#[derive(Debug, Clone)]
pub struct ContextIndex {
    len: usize,
    /// `ends[kind][start]` holds the legal inclusive ends, sorted ascending.
    ends: [Vec<Vec<usize>>; 4],
    counts: [usize; 4],
    /// Distinct ranges across all enabled kinds, per start; COUNT and
    /// MULTI_SPANS items draw from this shared pool.
    merged: Vec<Vec<usize>>,
    merged_count: usize,
}

fn kind_slot(kind: AtomicKind) -> usize {
    match kind {
        AtomicKind::Span => 0,
        AtomicKind::Cell => 1,
        AtomicKind::Value => 2,
        AtomicKind::CellValue => 3,
    }
}

impl ContextIndex {
    pub fn build(ctx: &LinearizedInput, cfg: &LegalityConfig) -> ContextIndex {
        let len = ctx.len();
        let mut ends: [Vec<Vec<usize>>; 4] = std::array::from_fn(|_| vec![Vec::new(); len]);

        for region in ctx.regions() {
            if region.key.is_separator() {
                continue;
            }
            let (textual, tabular) = (region.key.is_text(), region.key.is_cell());
            for s in region.first..=region.last {
                for e in s..=region.last {
                    let span_tokens = e - s + 1;
                    if textual
                        && !cfg.is_disabled(Op::Span)
                        && span_tokens <= cfg.max_span_length
                    {
                        ends[kind_slot(AtomicKind::Span)][s].push(e);
                    }
                    if tabular && !cfg.is_disabled(Op::Cell) {
                        ends[kind_slot(AtomicKind::Cell)][s].push(e);
                    }
                    if span_tokens <= cfg.max_numeric_tokens {
                        let numeric_kind = if textual { AtomicKind::Value } else { AtomicKind::CellValue };
                        if !cfg.is_disabled(Op::from(numeric_kind)) {
                            let surface = ctx.detokenize(s, e).expect("range inside region");
                            if parse_number(&surface).is_some() {
                                ends[kind_slot(numeric_kind)][s].push(e);
                            }
                        }
                    }
                }
            }
        }

        let counts = std::array::from_fn(|k| ends[k].iter().map(Vec::len).sum());
        let mut merged = vec![Vec::new(); len];
        let mut merged_count = 0;
        for (s, slot) in merged.iter_mut().enumerate() {
            let mut all: Vec<usize> = ends.iter().flat_map(|per_kind| per_kind[s].iter().copied()).collect();
            all.sort_unstable();
            all.dedup();
            merged_count += all.len();
            *slot = all;
        }

        ContextIndex { len, ends, counts, merged, merged_count }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Legal end positions for a range of `kind` starting at `start`.
    pub fn ends(&self, kind: AtomicKind, start: usize) -> &[usize] {
        &self.ends[kind_slot(kind)][start]
    }

    /// Total ranges available for one kind.
    pub fn count(&self, kind: AtomicKind) -> usize {
        self.counts[kind_slot(kind)]
    }

    pub fn has_kind(&self, kind: AtomicKind) -> bool {
        self.count(kind) > 0
    }

    /// Distinct ranges across all enabled kinds.
    pub fn merged_count(&self) -> usize {
        self.merged_count
    }

    pub fn merged_ends(&self, start: usize) -> &[usize] {
        &self.merged[start]
    }

    /// Can `KV(CELL, CV)` be completed here?
    pub fn kv_cell_ok(&self) -> bool {
        self.has_kind(AtomicKind::Cell) && self.has_kind(AtomicKind::CellValue)
    }

    /// Can `KV(SPAN, VALUE)` be completed here?
    pub fn kv_span_ok(&self) -> bool {
        self.has_kind(AtomicKind::Span) && self.has_kind(AtomicKind::Value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{linearize, HybridContext, Paragraph, Provenance, Table};

    fn build(question: &str, grid: &[&[&str]], para: Option<&str>, cfg: &LegalityConfig) -> (LinearizedInput, ContextIndex) {
        let ctx = HybridContext {
            id: "i".into(),
            question: question.into(),
            table: Table::from_grid(
                &grid.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect::<Vec<_>>(),
            ),
            paragraphs: para
                .map(|t| vec![Paragraph { id: 0, text: t.into(), rank_score: None }])
                .unwrap_or_default(),
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        let li = linearize(&ctx, 2048).unwrap();
        let idx = ContextIndex::build(&li, cfg);
        (li, idx)
    }

    #[test]
    fn pools_respect_regions_and_kinds() {
        let cfg = LegalityConfig::default();
        let (li, idx) = build("why", &[&["Rate", "0.53"]], Some("It fell 0.1 points."), &cfg);
        let (qs, _) = li.bounds(Provenance::Question).unwrap();
        // Question word: a SPAN start but never a VALUE.
        assert_eq!(idx.ends(AtomicKind::Span, qs), &[qs]);
        assert!(idx.ends(AtomicKind::Value, qs).is_empty());
        // Numeric cell: CELL and CV.
        let (cs, _) = li.bounds(Provenance::TableCell { row: 0, col: 1 }).unwrap();
        assert_eq!(idx.ends(AtomicKind::Cell, cs), &[cs]);
        assert_eq!(idx.ends(AtomicKind::CellValue, cs), &[cs]);
        assert!(idx.ends(AtomicKind::Span, cs).is_empty(), "spans never cover cells");
        // Numeric token in the paragraph: VALUE but not CV.
        let (ps, pe) = li.bounds(Provenance::Paragraph { id: 0 }).unwrap();
        let num = (ps..=pe).find(|&i| li.token(i).unwrap().surface == "0.1").unwrap();
        assert!(idx.ends(AtomicKind::Value, num).contains(&num));
        assert!(idx.ends(AtomicKind::CellValue, num).is_empty());
        // Separators are in no pool.
        assert!(idx.merged_ends(0).is_empty());
    }

    #[test]
    fn span_length_cap_limits_ends() {
        let mut cfg = LegalityConfig::default();
        cfg.max_span_length = 2;
        let (li, idx) = build("alpha beta gamma delta", &[], None, &cfg);
        let (qs, _) = li.bounds(Provenance::Question).unwrap();
        assert_eq!(idx.ends(AtomicKind::Span, qs), &[qs, qs + 1]);
    }

    #[test]
    fn disabled_ops_empty_their_pools() {
        let cfg = LegalityConfig::drop_profile();
        let (_, idx) = build("q", &[&["Rate", "0.53"]], Some("grew 5 points"), &cfg);
        assert!(!idx.has_kind(AtomicKind::Cell));
        assert!(!idx.has_kind(AtomicKind::CellValue));
        assert!(idx.has_kind(AtomicKind::Span));
        assert!(idx.has_kind(AtomicKind::Value));
        assert!(!idx.kv_cell_ok());
        assert!(idx.kv_span_ok());
    }

    #[test]
    fn merged_pool_counts_distinct_ranges() {
        let cfg = LegalityConfig::default();
        // One numeric cell: the same range serves CELL and CV but counts once.
        let (li, idx) = build("q", &[&["7"]], None, &cfg);
        let (cs, _) = li.bounds(Provenance::TableCell { row: 0, col: 0 }).unwrap();
        assert_eq!(idx.merged_ends(cs), &[cs]);
        // q contributes one span range, the cell one merged range.
        assert_eq!(idx.merged_count(), 2);
    }

    #[test]
    fn numeric_ranges_must_parse() {
        let cfg = LegalityConfig::default();
        let (li, idx) = build("q", &[&["1,496.5 million"]], None, &cfg);
        let (cs, ce) = li.bounds(Provenance::TableCell { row: 0, col: 0 }).unwrap();
        assert_eq!(ce - cs, 1);
        // "1,496.5" parses alone; "1,496.5 million" does not.
        assert_eq!(idx.ends(AtomicKind::CellValue, cs), &[cs]);
        assert!(idx.ends(AtomicKind::CellValue, ce).is_empty());
    }
}
