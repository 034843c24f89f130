//! Extraction, span lists, counting, and superlative comparison.

use super::arithmetic::{close, gold_number};
use super::ground::{numeric_sites, text_occurrences};
use super::{Origin, Searcher};
use crate::answer::Value;
use crate::dsl::{AtomicKind, ConstValue, HigherKind, Node, Program};
use crate::knowledge::{Provenance, Region};
use std::collections::BTreeMap;

fn atomic(kind: AtomicKind, range: (usize, usize)) -> Node {
    Node::Atomic { kind, start: range.0, end: range.1 }
}

/// Ground a single-piece answer directly: surface matches as CELL/SPAN,
/// numeric matches as CV/VALUE (rescaled by 100 when the gold is stated on
/// another scale).
pub(crate) fn extraction(s: &mut Searcher) {
    if let Some([t]) = s.gold.as_texts() {
        let t = t.clone();
        for (kind, a, b) in
            text_occurrences(s.li, s.lcfg, &t, s.scfg.max_occurrences_per_span)
        {
            if s.spent() {
                return;
            }
            s.tick();
            s.try_push(Program::new(atomic(kind, (a, b))), Origin::Extraction);
        }
    }
    let Some(g) = gold_number(s.gold) else { return };
    let sites = numeric_sites(s.li, &s.index, true);
    for site in sites {
        if s.spent() {
            return;
        }
        s.tick();
        let base = atomic(site.kind, (site.start, site.end));
        if close(site.value, g, s.scfg.tolerance) {
            s.try_push(Program::new(base.clone()), Origin::Extraction);
            // The whole cell read as text bridges to the same number.
            if site.kind == AtomicKind::CellValue {
                s.try_push(
                    Program::new(atomic(AtomicKind::Cell, (site.start, site.end))),
                    Origin::Extraction,
                );
            }
        } else if close(site.value * 100.0, g, s.scfg.tolerance) {
            s.try_push(
                Program::new(Node::Higher {
                    kind: HigherKind::Times,
                    args: vec![base, Node::Const(ConstValue::Hundred)],
                }),
                Origin::Extraction,
            );
        } else if close(site.value / 100.0, g, s.scfg.tolerance) {
            s.try_push(
                Program::new(Node::Higher {
                    kind: HigherKind::Div,
                    args: vec![base, Node::Const(ConstValue::Hundred)],
                }),
                Origin::Extraction,
            );
        }
    }
}

/// Distinct-range groundings for a list of target strings, one choice per
/// item, in item order. Bounded by the configured combination budget.
fn item_groundings(s: &mut Searcher, items: &[String]) -> Vec<Vec<(AtomicKind, usize, usize)>> {
    let per_item: Vec<Vec<(AtomicKind, usize, usize)>> = items
        .iter()
        .map(|t| text_occurrences(s.li, s.lcfg, t, s.scfg.max_occurrences_per_span))
        .collect();
    if per_item.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut combos = Vec::new();
    let mut picked: Vec<(AtomicKind, usize, usize)> = Vec::new();
    fn go(
        per_item: &[Vec<(AtomicKind, usize, usize)>],
        depth: usize,
        cap: usize,
        picked: &mut Vec<(AtomicKind, usize, usize)>,
        combos: &mut Vec<Vec<(AtomicKind, usize, usize)>>,
    ) {
        if combos.len() >= cap {
            return;
        }
        if depth == per_item.len() {
            combos.push(picked.clone());
            return;
        }
        for &(kind, a, b) in &per_item[depth] {
            if picked.iter().any(|&(_, x, y)| (x, y) == (a, b)) {
                continue; // ranges must stay pairwise distinct
            }
            picked.push((kind, a, b));
            go(per_item, depth + 1, cap, picked, combos);
            picked.pop();
        }
    }
    go(&per_item, 0, s.scfg.max_multispan_combinations, &mut picked, &mut combos);
    for _ in 0..combos.len() {
        s.tick();
    }
    combos
}

pub(crate) fn multi_spans(s: &mut Searcher) {
    let Some(texts) = s.gold.as_texts() else { return };
    if texts.len() < 2 || texts.len() > s.lcfg.max_variadic_args {
        return;
    }
    let texts = texts.to_vec();
    for combo in item_groundings(s, &texts) {
        if s.spent() {
            return;
        }
        let args = combo.into_iter().map(|(k, a, b)| atomic(k, (a, b))).collect();
        s.try_push(
            Program::new(Node::Higher { kind: HigherKind::MultiSpans, args }),
            Origin::MultiSpan,
        );
    }
}

pub(crate) fn count(s: &mut Searcher) {
    let Value::Count { value, items } = &s.gold.value else { return };
    if items.is_empty() || items.len() != *value as usize || items.len() > s.lcfg.max_variadic_args
    {
        return;
    }
    let items = items.clone();
    for combo in item_groundings(s, &items) {
        if s.spent() {
            return;
        }
        let args = combo.into_iter().map(|(k, a, b)| atomic(k, (a, b))).collect();
        s.try_push(Program::new(Node::Higher { kind: HigherKind::Count, args }), Origin::Count);
    }
}

/// Superlative answers: the gold names a table cell, and some aligned run
/// of numeric cells picks it out as ARGMAX or ARGMIN over key/value pairs.
pub(crate) fn comparison(s: &mut Searcher) {
    let Some([gold_text]) = s.gold.as_texts() else { return };
    let gold_text = gold_text.clone();

    let mut cells: BTreeMap<(usize, usize), &Region> = BTreeMap::new();
    let (mut rows, mut cols) = (0usize, 0usize);
    for region in s.li.regions() {
        if let Provenance::TableCell { row, col } = region.key {
            cells.insert((row, col), region);
            rows = rows.max(row + 1);
            cols = cols.max(col + 1);
        }
    }
    let keys: Vec<(usize, usize)> =
        text_occurrences(s.li, s.lcfg, &gold_text, s.scfg.max_occurrences_per_span)
            .into_iter()
            .filter_map(|(kind, a, _)| match (kind, s.li.region_for(a).map(|r| r.key)) {
                (AtomicKind::Cell, Some(Provenance::TableCell { row, col })) => Some((row, col)),
                _ => None,
            })
            .collect();
    if keys.is_empty() {
        return;
    }

    let numeric_range = |r: usize, c: usize| -> Option<(usize, usize)> {
        let region = cells.get(&(r, c))?;
        (region.first..=region.last)
            .find_map(|p| s.index.ends(AtomicKind::CellValue, p).first().map(|&e| (p, e)))
    };

    // One series per (key line, value line) pair, on both table axes.
    let mut series: Vec<Vec<((usize, usize), (usize, usize))>> = Vec::new();
    for &(kr, kc) in &keys {
        for vc in 0..cols {
            if vc == kc {
                continue;
            }
            let entries: Vec<_> = (0..rows)
                .filter_map(|r| {
                    let key = cells.get(&(r, kc))?;
                    let value = numeric_range(r, vc)?;
                    Some(((key.first, key.last), value))
                })
                .collect();
            if entries.len() >= 2 && entries.iter().any(|(k, _)| *k == key_range(&cells, kr, kc))
            {
                series.push(entries);
            }
        }
        for vr in 0..rows {
            if vr == kr {
                continue;
            }
            let entries: Vec<_> = (0..cols)
                .filter_map(|c| {
                    let key = cells.get(&(kr, c))?;
                    let value = numeric_range(vr, c)?;
                    Some(((key.first, key.last), value))
                })
                .collect();
            if entries.len() >= 2 && entries.iter().any(|(k, _)| *k == key_range(&cells, kr, kc))
            {
                series.push(entries);
            }
        }
    }

    for entries in series {
        if entries.len() > s.lcfg.max_variadic_args {
            continue;
        }
        for kind in [HigherKind::ArgMax, HigherKind::ArgMin] {
            if s.spent() {
                return;
            }
            s.tick();
            let args = entries
                .iter()
                .map(|&(k, v)| Node::Higher {
                    kind: HigherKind::Kv,
                    args: vec![atomic(AtomicKind::Cell, k), atomic(AtomicKind::CellValue, v)],
                })
                .collect();
            s.try_push(Program::new(Node::Higher { kind, args }), Origin::Comparison);
        }
    }
}

fn key_range(
    cells: &BTreeMap<(usize, usize), &Region>,
    r: usize,
    c: usize,
) -> (usize, usize) {
    let region = cells[&(r, c)];
    (region.first, region.last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answer::Answer;
    use crate::dsl::print_program;
    use crate::knowledge::{linearize, HybridContext, LinearizedInput, Paragraph, Table};
    use crate::legality::LegalityConfig;
    use crate::synthesis::SynthesisConfig;

    // 0 SEP | 1 what 2 segment | 3 SEP | 4 Networking 5 531 | 6 SEP
    // | 7 Networking 8 led 9 all 10 segments 11 . | 12 SEP
    fn segment_context() -> LinearizedInput {
        let ctx = HybridContext {
            id: "s".into(),
            question: "what segment".into(),
            table: Table::from_grid(&[vec!["Networking".into(), "531".into()]]),
            paragraphs: vec![Paragraph {
                id: 0,
                text: "Networking led all segments.".into(),
                rank_score: None,
            }],
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        linearize(&ctx, 2048).unwrap()
    }

    // 0 SEP | 1 which 2 years | 3 SEP | 4 2019 5 10 6 2018 7 12 | 8 SEP | 9 SEP
    fn years_context() -> LinearizedInput {
        let ctx = HybridContext {
            id: "y".into(),
            question: "which years".into(),
            table: Table::from_grid(&[
                vec!["2019".into(), "10".into()],
                vec!["2018".into(), "12".into()],
            ]),
            paragraphs: vec![],
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        linearize(&ctx, 2048).unwrap()
    }

    fn texts(s: &Searcher) -> Vec<String> {
        s.found.iter().map(|(p, _)| print_program(p)).collect()
    }

    #[test]
    fn extraction_grounds_text_in_cells_and_spans() {
        let li = segment_context();
        let gold = Answer::span("Networking");
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        extraction(&mut s);
        assert_eq!(texts(&s), vec!["CELL(4, 4)", "SPAN(7, 7)"]);
        assert!(s.found.iter().all(|(_, o)| *o == Origin::Extraction));
    }

    #[test]
    fn extraction_grounds_numbers_and_bridges_whole_cells() {
        let li = segment_context();
        let gold = Answer::number(531.0);
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        extraction(&mut s);
        assert_eq!(texts(&s), vec!["CV(5, 5)", "CELL(5, 5)"]);
    }

    #[test]
    fn extraction_rescales_when_the_gold_sits_on_another_scale() {
        let li = segment_context();
        let gold = Answer::number(5.31);
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        extraction(&mut s);
        assert_eq!(texts(&s), vec!["DIV(CV(5, 5), 100)"]);
    }

    #[test]
    fn multi_spans_ground_in_item_order() {
        let li = years_context();
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());

        let gold = Answer::spans(vec!["2019".into(), "2018".into()]);
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        multi_spans(&mut s);
        assert_eq!(texts(&s), vec!["MULTI_SPANS(CELL(4, 4), CELL(6, 6))"]);

        let gold = Answer::spans(vec!["12".into(), "10".into()]);
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        multi_spans(&mut s);
        assert_eq!(texts(&s), vec!["MULTI_SPANS(CELL(7, 7), CELL(5, 5))"]);
    }

    #[test]
    fn multi_span_items_need_pairwise_distinct_ranges() {
        let li = years_context();
        let gold = Answer::spans(vec!["10".into(), "10".into()]);
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        multi_spans(&mut s);
        assert!(texts(&s).is_empty(), "both items would reuse one range");
    }

    #[test]
    fn count_requires_items_that_explain_the_value() {
        let li = years_context();
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());

        let gold = Answer::count(2, vec!["2019".into(), "2018".into()]);
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        count(&mut s);
        assert_eq!(texts(&s), vec!["COUNT(CELL(4, 4), CELL(6, 6))"]);
        assert!(s.found.iter().all(|(_, o)| *o == Origin::Count));

        // Item list inconsistent with the count, or empty: nothing grounds.
        let gold = Answer::count(3, vec!["2019".into(), "2018".into()]);
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        count(&mut s);
        assert!(texts(&s).is_empty());
        let gold = Answer::count(0, vec![]);
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        count(&mut s);
        assert!(texts(&s).is_empty());
    }

    // 0 SEP | 1 which 2 segment 3 was 4 largest | 5 SEP | 6 2019 7 2018
    // 8 Networking 9 531 10 495 11 Storage 12 512 13 540 | 14 SEP
    // | 15 Both 16 segments 17 grew 18 . | 19 SEP
    fn comparison_context() -> LinearizedInput {
        let ctx = HybridContext {
            id: "c".into(),
            question: "which segment was largest".into(),
            table: Table::from_grid(&[
                vec!["".into(), "2019".into(), "2018".into()],
                vec!["Networking".into(), "531".into(), "495".into()],
                vec!["Storage".into(), "512".into(), "540".into()],
            ]),
            paragraphs: vec![Paragraph {
                id: 0,
                text: "Both segments grew.".into(),
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
    fn comparison_builds_superlatives_over_aligned_columns() {
        let li = comparison_context();
        let gold = Answer::span("Networking");
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        comparison(&mut s);
        assert_eq!(
            texts(&s),
            vec![
                "ARGMAX(KV(CELL(8, 8), CV(9, 9)), KV(CELL(11, 11), CV(12, 12)))",
                "ARGMIN(KV(CELL(8, 8), CV(10, 10)), KV(CELL(11, 11), CV(13, 13)))",
            ],
            "largest in the 2019 column, smallest in the 2018 column"
        );
        assert!(s.found.iter().all(|(_, o)| *o == Origin::Comparison));
    }

    #[test]
    fn comparison_needs_the_answer_as_a_table_key() {
        let li = comparison_context();
        let gold = Answer::span("Both");
        let (scfg, lcfg) = (SynthesisConfig::default(), LegalityConfig::default());
        let mut s = Searcher::new(&li, &gold, &scfg, &lcfg);
        comparison(&mut s);
        assert!(texts(&s).is_empty(), "a paragraph word keys no series");
    }
}
