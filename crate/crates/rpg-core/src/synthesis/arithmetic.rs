//! Blind arithmetic search over the numbers in the context.
//!
//! Operands are the distinct numeric values outside the question. Binary
//! combinations, constant variants, and three-way averages run first; a
//! nested rescue pass only fires when nothing simpler reproduces the gold,
//! keeping the common case cheap. A result that lands at 1/100 or 100x the
//! gold is wrapped in DIV/TIMES by 100, absorbing unit mismatches like
//! percents stated as whole numbers.

use super::ground::{distinct_values, numeric_sites, NumericSite};
use super::{Origin, Searcher};
use crate::answer::Answer;
use crate::dsl::{ConstValue, HigherKind, Node, Program};
use crate::executor::numbers_match;
use crate::knowledge::parse_number;

/// Numeric reading of the gold answer: a number, a count, or a single
/// text piece that parses as a number.
pub(crate) fn gold_number(gold: &Answer) -> Option<f64> {
    gold.as_number().or_else(|| match gold.as_texts() {
        Some([t]) => parse_number(t).map(|p| p.value),
        _ => None,
    })
}

/// The comparison the executor applies to numeric answers.
pub(crate) fn close(a: f64, b: f64, tol: f64) -> bool {
    numbers_match(a, b, tol)
}

fn site_node(s: NumericSite) -> Node {
    Node::Atomic { kind: s.kind, start: s.start, end: s.end }
}

fn bin(kind: HigherKind, l: Node, r: Node) -> Node {
    Node::Higher { kind, args: vec![l, r] }
}

fn commutative(kind: HigherKind) -> bool {
    matches!(kind, HigherKind::Sum | HigherKind::Times | HigherKind::Avg)
}

fn apply2(kind: HigherKind, a: f64, b: f64) -> Option<f64> {
    let v = match kind {
        HigherKind::Sum => a + b,
        HigherKind::Diff => a - b,
        HigherKind::Times => a * b,
        HigherKind::Div => {
            if b == 0.0 {
                return None;
            }
            a / b
        }
        HigherKind::Avg => (a + b) / 2.0,
        HigherKind::ChangeR => {
            if b == 0.0 {
                return None;
            }
            (a - b) / b
        }
        _ => return None,
    };
    v.is_finite().then_some(v)
}

/// Wrap `node` so its value meets the gold exactly, if `v` lands on the
/// gold directly or off by a factor of 100 either way. Wrapping that would
/// just undo a by-100 rescale already at the top of `node` is skipped.
fn absorbed(v: f64, g: f64, tol: f64, node: Node) -> Option<Node> {
    let rescaled_by = |k: HigherKind| {
        matches!(&node, Node::Higher { kind, args }
            if *kind == k && args.get(1) == Some(&Node::Const(ConstValue::Hundred)))
    };
    if close(v, g, tol) {
        Some(node)
    } else if close(v * 100.0, g, tol) && !rescaled_by(HigherKind::Div) {
        Some(bin(HigherKind::Times, node, Node::Const(ConstValue::Hundred)))
    } else if close(v / 100.0, g, tol) && !rescaled_by(HigherKind::Times) {
        Some(bin(HigherKind::Div, node, Node::Const(ConstValue::Hundred)))
    } else {
        None
    }
}

const BINARY: [HigherKind; 6] = [
    HigherKind::Sum,
    HigherKind::Diff,
    HigherKind::Times,
    HigherKind::Div,
    HigherKind::Avg,
    HigherKind::ChangeR,
];

pub(crate) fn run(s: &mut Searcher) {
    let Some(g) = gold_number(s.gold) else { return };
    let tol = s.scfg.tolerance;
    let all = numeric_sites(s.li, &s.index, false);
    let sites = distinct_values(&all, s.scfg.max_operand_values);
    if sites.is_empty() {
        return;
    }
    let n = sites.len();

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if s.spent() {
                return;
            }
            s.tick();
            let (a, b) = (sites[i], sites[j]);
            for kind in BINARY {
                if commutative(kind) && j < i {
                    continue;
                }
                let Some(v) = apply2(kind, a.value, b.value) else { continue };
                if let Some(node) = absorbed(v, g, tol, bin(kind, site_node(a), site_node(b))) {
                    s.try_push(Program::new(node), Origin::Arithmetic);
                }
            }
        }
    }

    // Constants pair with one real operand; identities and annihilators
    // (plus or minus zero, times or over one) are skipped, and two
    // constants never combine.
    for &a in &sites {
        if s.spent() {
            return;
        }
        s.tick();
        for c in [ConstValue::One, ConstValue::Hundred] {
            let cv = c.value();
            for kind in [HigherKind::Sum, HigherKind::Diff, HigherKind::Times, HigherKind::Div] {
                if matches!(kind, HigherKind::Times | HigherKind::Div) && c == ConstValue::One {
                    continue;
                }
                if let Some(v) = apply2(kind, a.value, cv) {
                    if let Some(node) = absorbed(v, g, tol, bin(kind, site_node(a), Node::Const(c)))
                    {
                        s.try_push(Program::new(node), Origin::Arithmetic);
                    }
                }
            }
            for kind in [HigherKind::Diff, HigherKind::Div] {
                if let Some(v) = apply2(kind, cv, a.value) {
                    if let Some(node) = absorbed(v, g, tol, bin(kind, Node::Const(c), site_node(a)))
                    {
                        s.try_push(Program::new(node), Origin::Arithmetic);
                    }
                }
            }
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if s.spent() {
                    return;
                }
                s.tick();
                let v = (sites[i].value + sites[j].value + sites[k].value) / 3.0;
                if !v.is_finite() {
                    continue;
                }
                let node = Node::Higher {
                    kind: HigherKind::Avg,
                    args: vec![site_node(sites[i]), site_node(sites[j]), site_node(sites[k])],
                };
                if let Some(node) = absorbed(v, g, tol, node) {
                    s.try_push(Program::new(node), Origin::Arithmetic);
                }
            }
        }
    }

    if !s.found_any() {
        nested(s, &sites, g, tol);
    }
}

/// Rescue pass: one nested level. Covers an operation against a compound
/// (difference of averages, change rates of change rates, a compound
/// scaled by a third operand) without paying for it on every instance.
fn nested(s: &mut Searcher, sites: &[NumericSite], g: f64, tol: f64) {
    let n = sites.len();
    let mut inner: Vec<(f64, HigherKind, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for kind in BINARY {
                if commutative(kind) && j < i {
                    continue;
                }
                if let Some(v) = apply2(kind, sites[i].value, sites[j].value) {
                    inner.push((v, kind, i, j));
                }
            }
        }
    }
    let build = |(_, kind, i, j): (f64, HigherKind, usize, usize)| {
        bin(kind, site_node(sites[i]), site_node(sites[j]))
    };

    // Compound against a plain operand or constant, both directions.
    for &e @ (v1, ..) in &inner {
        if s.spent() {
            return;
        }
        s.tick();
        let mut others: Vec<(f64, Option<NumericSite>)> =
            sites.iter().map(|t| (t.value, Some(*t))).collect();
        others.push((1.0, None));
        others.push((100.0, None));
        for (v2, site) in others {
            let rhs = || match site {
                Some(t) => site_node(t),
                None if v2 == 1.0 => Node::Const(ConstValue::One),
                None => Node::Const(ConstValue::Hundred),
            };
            for kind in [HigherKind::Sum, HigherKind::Diff, HigherKind::Times, HigherKind::Div] {
                if matches!(kind, HigherKind::Times | HigherKind::Div)
                    && site.is_none()
                    && v2 == 1.0
                {
                    continue;
                }
                if let Some(v) = apply2(kind, v1, v2) {
                    if let Some(node) = absorbed(v, g, tol, bin(kind, build(e), rhs())) {
                        s.try_push(Program::new(node), Origin::Arithmetic);
                    }
                }
                if commutative(kind) {
                    continue;
                }
                if let Some(v) = apply2(kind, v2, v1) {
                    if let Some(node) = absorbed(v, g, tol, bin(kind, rhs(), build(e))) {
                        s.try_push(Program::new(node), Origin::Arithmetic);
                    }
                }
            }
        }
    }

    // Differences and ratios of two same-shaped compounds.
    for &e1 @ (v1, k1, ..) in &inner {
        if !matches!(k1, HigherKind::Avg | HigherKind::ChangeR | HigherKind::Sum) {
            continue;
        }
        for &e2 @ (v2, k2, ..) in &inner {
            if k2 != k1 || e1 == e2 {
                continue;
            }
            if s.spent() {
                return;
            }
            s.tick();
            for kind in [HigherKind::Diff, HigherKind::Div] {
                if let Some(v) = apply2(kind, v1, v2) {
                    if let Some(node) = absorbed(v, g, tol, bin(kind, build(e1), build(e2))) {
                        s.try_push(Program::new(node), Origin::Arithmetic);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::print_program;
    use crate::executor::{answers_match, execute};
    use crate::knowledge::{linearize, HybridContext, Paragraph, Table};
    use crate::legality::{validate, LegalityConfig};
    use crate::synthesis::SynthesisConfig;

    fn instance(cells: &[&str], question: &str, gold: Answer) -> (HybridContext, Answer) {
        let ctx = HybridContext {
            id: "a".into(),
            question: question.into(),
            table: Table::from_grid(&[cells.iter().map(|s| s.to_string()).collect()]),
            paragraphs: vec![Paragraph {
                id: 0,
                text: "Figures are from the annual report.".into(),
                rank_score: None,
            }],
            gold_answer: None,
            gold_scale: None,
            answer_from: None,
            derivation: None,
        };
        (ctx, gold)
    }

    fn run_search(ctx: &HybridContext, gold: &Answer) -> Vec<String> {
        let li = linearize(ctx, 2048).unwrap();
        let scfg = SynthesisConfig::default();
        let lcfg = LegalityConfig::default();
        let mut s = Searcher::new(&li, gold, &scfg, &lcfg);
        run(&mut s);
        for (p, _) in &s.found {
            assert!(validate(p, &li, &lcfg).is_ok(), "{}", print_program(p));
            let ans = execute(p, &li).unwrap();
            assert!(answers_match(&ans, gold, scfg.tolerance), "{}", print_program(p));
        }
        s.found.iter().map(|(p, _)| print_program(p)).collect()
    }

    #[test]
    fn finds_the_difference_of_two_cells() {
        let (ctx, gold) = instance(&["0.53", "0.47"], "change in rate?", Answer::number(0.06));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().any(|t| t.starts_with("DIFF(CV(")), "{texts:?}");
    }

    #[test]
    fn question_numbers_are_not_operands() {
        let (ctx, gold) =
            instance(&["0.53"], "what is 0.53 minus 0.47?", Answer::number(0.06));
        let texts = run_search(&ctx, &gold);
        assert!(texts.is_empty(), "0.47 only exists in the question: {texts:?}");
    }

    #[test]
    fn absorbs_percent_scale_with_times_100() {
        let (ctx, gold) = instance(&["0.53", "0.47"], "change?", Answer::number(6.0));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().any(|t| t.starts_with("TIMES(DIFF(") && t.ends_with("100)")));
    }

    #[test]
    fn change_rate_and_averages_appear() {
        let (ctx, gold) = instance(&["110", "100"], "growth?", Answer::number(0.1));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().any(|t| t.starts_with("CHANGE_R(")), "{texts:?}");

        let (ctx, gold) = instance(&["3", "5", "10"], "mean?", Answer::number(6.0));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().any(|t| t.starts_with("AVG(") && t.matches("CV(").count() == 3));
    }

    #[test]
    fn constants_combine_but_never_alone() {
        let (ctx, gold) = instance(&["0.42"], "complement?", Answer::number(0.58));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().any(|t| t.starts_with("DIFF(1, CV(")), "{texts:?}");
        // Nothing should manufacture the answer from constants only.
        let (ctx, gold) = instance(&["7"], "q?", Answer::number(101.0));
        let texts = run_search(&ctx, &gold);
        assert!(texts.iter().all(|t| t.contains("CV(")), "{texts:?}");
    }

    #[test]
    fn nested_rescue_finds_two_level_programs() {
        let (ctx, gold) = instance(&["7", "11", "13"], "q?", Answer::number(234.0));
        let texts = run_search(&ctx, &gold);
        assert!(!texts.is_empty(), "needs TIMES(SUM(7,11),13)");
        assert!(texts.iter().all(|t| t.matches("CV(").count() >= 2));
    }

    #[test]
    fn identity_programs_are_pruned() {
        let (ctx, gold) = instance(&["6", "3"], "q?", Answer::number(6.0));
        let texts = run_search(&ctx, &gold);
        for t in &texts {
            assert!(!t.contains("TIMES(CV(3, 3), 1)"), "{t}");
            assert!(!t.contains(", 0)"), "{t}");
        }
        // TIMES(3, 2)? No 2 on hand; DIFF with the other cell still works.
        assert!(texts.iter().any(|t| t.starts_with("SUM(") || t.starts_with("TIMES(")), "{texts:?}");
    }

    #[test]
    fn gold_without_numeric_reading_is_skipped() {
        let (ctx, gold) = instance(&["1", "2"], "q?", Answer::span("hello"));
        assert!(run_search(&ctx, &gold).is_empty());
    }
}
