//! Shared grounding helpers: where numbers live and where a target string
//! occurs in the linearized context.

use crate::dsl::{AtomicKind, Op};
use crate::knowledge::{parse_number, LinearizedInput, Provenance};
use crate::legality::{ContextIndex, LegalityConfig};
use crate::text::normalize_answer;

/// A numeric token range and its parsed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NumericSite {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub kind: AtomicKind,
}

/// Numeric ranges in context order, one minimal range per start position.
/// Question numbers are skipped unless asked for: they restate the ask,
/// they are not evidence.
pub(crate) fn numeric_sites(
    li: &LinearizedInput,
    index: &ContextIndex,
    include_question: bool,
) -> Vec<NumericSite> {
    let mut out = Vec::new();
    for region in li.regions() {
        if region.key.is_separator() {
            continue;
        }
        if !include_question && region.key == Provenance::Question {
            continue;
        }
        let kind = if region.key.is_cell() { AtomicKind::CellValue } else { AtomicKind::Value };
        for s in region.first..=region.last {
            if let Some(&e) = index.ends(kind, s).first() {
                let surface = li.detokenize(s, e).expect("pooled range stays in one region");
                let value = parse_number(&surface).expect("pooled range parses").value;
                out.push(NumericSite { start: s, end: e, value, kind });
            }
        }
    }
    out
}

/// First site per distinct value, capped. Arithmetic search runs over
/// these: later repeats of a value add nothing but combinations.
pub(crate) fn distinct_values(sites: &[NumericSite], cap: usize) -> Vec<NumericSite> {
    let mut out: Vec<NumericSite> = Vec::new();
    for s in sites {
        if out.len() >= cap {
            break;
        }
        if !out.iter().any(|t| t.value == s.value) {
            out.push(*s);
        }
    }
    out
}

/// Ranges whose surface normalizes to the same string as `target`:
/// cell sub-ranges as CELL, question/paragraph windows as SPAN. Matches
/// that strictly contain a smaller match are dropped; at most
/// `max_occurrences` survive, in context order.
pub(crate) fn text_occurrences(
    li: &LinearizedInput,
    lcfg: &LegalityConfig,
    target: &str,
    max_occurrences: usize,
) -> Vec<(AtomicKind, usize, usize)> {
    let want = normalize_answer(target);
    if want.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<(AtomicKind, usize, usize)> = Vec::new();
    for region in li.regions() {
        if region.key.is_separator() {
            continue;
        }
        let kind = if region.key.is_cell() { AtomicKind::Cell } else { AtomicKind::Span };
        if lcfg.is_disabled(Op::from(kind)) {
            continue;
        }
        let window = if kind == AtomicKind::Span {
            lcfg.max_span_length
        } else {
            region.last - region.first + 1
        };
        for offset in 0..=(region.last - region.first) {
            let s = region.first + offset;
            for e in s..=region.last.min(s + window.saturating_sub(1)) {
                let surface = li.detokenize(s, e).expect("within one region");
                if normalize_answer(&surface) == want {
                    hits.push((kind, s, e));
                }
            }
        }
    }
    let minimal: Vec<(AtomicKind, usize, usize)> = hits
        .iter()
        .filter(|(_, s, e)| {
            !hits.iter().any(|&(_, s2, e2)| (s2, e2) != (*s, *e) && *s <= s2 && e2 <= *e)
        })
        .copied()
        .collect();
    minimal.into_iter().take(max_occurrences).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{linearize, HybridContext, Paragraph, Table};

    // 0 SEP | 1 total 2 2019 | 3 SEP | 4 Net 5 sales 6 1,496.5 7 531
    // | 8 SEP | 9 Net 10 sales 11 fell 12 0.5 13 in 14 2019 15 . | 16 SEP
    fn li() -> LinearizedInput {
        let ctx = HybridContext {
            id: "g".into(),
            question: "total 2019".into(),
            table: Table::from_grid(&[vec![
                "Net sales".into(),
                "1,496.5".into(),
                "531".into(),
            ]]),
            paragraphs: vec![Paragraph {
                id: 0,
                text: "Net sales fell 0.5 in 2019.".into(),
                rank_score: None,
            }],
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        linearize(&ctx, 2048).unwrap()
    }

    #[test]
    fn sites_cover_table_then_text_and_skip_the_question() {
        let li = li();
        let index = ContextIndex::build(&li, &LegalityConfig::default());
        let sites = numeric_sites(&li, &index, false);
        let flat: Vec<(usize, f64)> = sites.iter().map(|s| (s.start, s.value)).collect();
        assert_eq!(flat, vec![(6, 1496.5), (7, 531.0), (12, 0.5), (14, 2019.0)]);
        assert_eq!(sites[0].kind, AtomicKind::CellValue);
        assert_eq!(sites[2].kind, AtomicKind::Value);

        let with_q = numeric_sites(&li, &index, true);
        assert_eq!(with_q.first().map(|s| (s.start, s.value)), Some((2, 2019.0)));
        assert_eq!(with_q.len(), 5);
    }

    #[test]
    fn distinct_values_keep_first_occurrence() {
        let li = li();
        let index = ContextIndex::build(&li, &LegalityConfig::default());
        let sites = numeric_sites(&li, &index, true);
        // 2019 appears in the question and the paragraph; one survives.
        let distinct = distinct_values(&sites, 10);
        assert_eq!(distinct.len(), 4);
        assert_eq!(distinct[0].start, 2);
        assert!(distinct.iter().all(|s| s.start != 14));
        assert_eq!(distinct_values(&sites, 2).len(), 2);
    }

    #[test]
    fn occurrences_find_cells_and_windows() {
        let li = li();
        let lcfg = LegalityConfig::default();
        let occ = text_occurrences(&li, &lcfg, "net sales", 10);
        assert_eq!(
            occ,
            vec![(AtomicKind::Cell, 4, 5), (AtomicKind::Span, 9, 10)],
            "cell prefix and paragraph window"
        );
        let occ = text_occurrences(&li, &lcfg, "NET, SALES!", 10);
        assert_eq!(occ.len(), 2, "matching is normalization-invariant");
    }

    #[test]
    fn occurrences_are_minimal_and_capped() {
        let li = li();
        let lcfg = LegalityConfig::default();
        // "2019" occurs in the question and the paragraph; the span (13, 14)
        // "in 2019" would normalize to "in 2019", not a match, while any
        // containing window is non-minimal anyway.
        let occ = text_occurrences(&li, &lcfg, "2019", 10);
        assert_eq!(occ, vec![(AtomicKind::Span, 2, 2), (AtomicKind::Span, 14, 14)]);
        let occ = text_occurrences(&li, &lcfg, "2019", 1);
        assert_eq!(occ.len(), 1);
    }

    #[test]
    fn empty_targets_match_nowhere() {
        let li = li();
        assert!(text_occurrences(&li, &LegalityConfig::default(), " - ", 5).is_empty());
    }

    #[test]
    fn span_windows_respect_the_length_limit() {
        let li = li();
        let mut lcfg = LegalityConfig::default();
        lcfg.max_span_length = 2;
        assert!(
            text_occurrences(&li, &lcfg, "net sales fell", 5).is_empty(),
            "a three-token window cannot be addressed"
        );
        assert_eq!(text_occurrences(&li, &lcfg, "net sales", 5).len(), 2);
    }
}
