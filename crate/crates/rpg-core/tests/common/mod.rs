//! Shared machinery for the acceptance suite: a reference interpreter
//! written straight from the operation table, random generators, and the
//! deterministic synthetic corpus the coverage thresholds run against.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpg_core::answer::{Answer, AnswerKind, AnswerSource, Value};
use rpg_core::dsl::{AtomicKind, ConstValue, HigherKind, Node, Program};
use rpg_core::knowledge::{parse_number, HybridContext, LinearizedInput, Paragraph, Table};
use rpg_core::legality::{open_session, LegalityConfig};
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

// ---------------------------------------------------------------- reference

/// Intermediate value of the reference interpreter.
enum V {
    N(f64),
    T(Vec<String>),
    P(Vec<(String, f64)>),
    C(u64, Vec<String>),
}

/// Reference interpreter: a separate, direct transcription of the operation
/// semantics. It shares only the tokenizer's number reader with the
/// production evaluator, so a slip in either one shows up as a mismatch.
pub fn naive_execute(p: &Program, li: &LinearizedInput) -> Result<Answer, String> {
    match ev(&p.root, li)? {
        V::P(_) => Err("pairs are not an answer".into()),
        V::N(x) => Ok(Answer::number(x)),
        V::C(n, items) => Ok(Answer::count(n, items)),
        V::T(texts) => {
            if texts.len() <= 1 {
                return Ok(Answer { kind: AnswerKind::Span, value: Value::Text(texts), scale: None });
            }
            let mut unique = texts;
            unique.sort();
            unique.dedup();
            if unique.len() == 1 {
                Ok(Answer::span(unique.remove(0)))
            } else {
                Ok(Answer::spans(unique))
            }
        }
    }
}

fn ev(node: &Node, li: &LinearizedInput) -> Result<V, String> {
    match node {
        Node::Const(c) => Ok(V::N(c.value())),
        Node::Atomic { kind, start, end } => {
            let surface = li.detokenize(*start, *end).map_err(|e| e.to_string())?;
            if matches!(kind, AtomicKind::Value | AtomicKind::CellValue) {
                match parse_number(&surface) {
                    Some(n) => Ok(V::N(n.value)),
                    None => Err(format!("{surface:?} is not a number")),
                }
            } else {
                Ok(V::T(vec![surface]))
            }
        }
        Node::Higher { kind, args } => {
            let (lo, hi) = kind.arity();
            if args.len() < lo || args.len() > hi {
                return Err(format!("{kind:?} with {} arguments", args.len()));
            }
            match kind {
                HigherKind::Kv => {
                    let key = match ev(&args[0], li)? {
                        V::T(mut t) if t.len() == 1 => t.remove(0),
                        _ => return Err("KV key must be one text piece".into()),
                    };
                    Ok(V::P(vec![(key, num(&args[1], li)?)]))
                }
                HigherKind::Count | HigherKind::MultiSpans => {
                    let mut items = Vec::new();
                    for a in args {
                        match a {
                            Node::Atomic { start, end, .. } => {
                                items.push(li.detokenize(*start, *end).map_err(|e| e.to_string())?)
                            }
                            _ => return Err("items must be extractions".into()),
                        }
                    }
                    if *kind == HigherKind::Count {
                        Ok(V::C(items.len() as u64, items))
                    } else {
                        Ok(V::T(items))
                    }
                }
                HigherKind::ArgMax | HigherKind::ArgMin => {
                    let mut best: Option<(String, f64)> = None;
                    for a in args {
                        let V::P(pairs) = ev(a, li)? else {
                            return Err("comparison arguments must be pairs".into());
                        };
                        for (k, v) in pairs {
                            let better = match &best {
                                None => true,
                                Some((_, b)) if *kind == HigherKind::ArgMax => v > *b,
                                Some((_, b)) => v < *b,
                            };
                            if better {
                                best = Some((k, v));
                            }
                        }
                    }
                    match best {
                        Some((k, _)) => Ok(V::T(vec![k])),
                        None => Err("nothing to compare".into()),
                    }
                }
                HigherKind::Avg => {
                    let mut sum = 0.0;
                    for a in args {
                        sum += num(a, li)?;
                    }
                    Ok(V::N(sum / args.len() as f64))
                }
                _ => {
                    let a = num(&args[0], li)?;
                    let b = num(&args[1], li)?;
                    let out = match kind {
                        HigherKind::Sum => a + b,
                        HigherKind::Diff => a - b,
                        HigherKind::Times => a * b,
                        HigherKind::Div | HigherKind::ChangeR if b == 0.0 => {
                            return Err("divide by zero".into())
                        }
                        HigherKind::Div => a / b,
                        HigherKind::ChangeR => (a - b) / b,
                        _ => unreachable!("arithmetic kinds only"),
                    };
                    Ok(V::N(out))
                }
            }
        }
    }
}

fn num(node: &Node, li: &LinearizedInput) -> Result<f64, String> {
    match ev(node, li)? {
        V::N(x) => Ok(x),
        _ => Err("expected a number".into()),
    }
}

// --------------------------------------------------------------- generators

const METRICS: &[&str] = &[
    "Revenue",
    "Gross profit",
    "Operating income",
    "Net sales",
    "Deferred revenue",
    "Total expenses",
];
const SEGMENTS: &[&str] = &["Networking", "Storage", "Compute", "Services", "Software"];
const FILLER: &[&str] = &["grew", "steadily", "across", "both", "markets", "during", "the", "period"];

/// A printable number whose surface form survives the tokenizer whole.
pub fn fmt_number(rng: &mut ChaCha8Rng) -> String {
    let whole = rng.random_range(0..10_000u32);
    let frac = rng.random_range(0..10u32);
    let plain = if whole >= 1_000 {
        format!("{},{:03}.{}", whole / 1_000, whole % 1_000, frac)
    } else {
        format!("{whole}.{frac}")
    };
    match rng.random_range(0..5) {
        0 => format!("{whole}"),
        1 => format!("${plain}"),
        2 => format!("{}.{}%", whole % 100, frac),
        3 => format!("({plain})"),
        _ => plain,
    }
}

/// A small random table+text context with no gold answer, for differential
/// testing of the evaluators.
pub fn random_context(rng: &mut ChaCha8Rng, id: usize) -> HybridContext {
    let rows = rng.random_range(2..=3usize);
    let cols = rng.random_range(2..=4usize);
    let mut grid = Vec::new();
    let mut header = vec![String::new()];
    for c in 1..cols {
        header.push((2020 - c).to_string());
    }
    grid.push(header);
    for r in 1..rows {
        let mut row = vec![METRICS[(id + r) % METRICS.len()].to_string()];
        for _ in 1..cols {
            row.push(fmt_number(rng));
        }
        grid.push(row);
    }
    let mut sentence: Vec<String> = vec![SEGMENTS[id % SEGMENTS.len()].to_string()];
    for _ in 0..rng.random_range(2..=5usize) {
        sentence.push((*FILLER.choose(rng).unwrap()).to_string());
    }
    if rng.random_bool(0.7) {
        sentence.push(fmt_number(rng));
    }
    sentence.push(".".to_string());
    HybridContext {
        id: format!("rand-{id}"),
        question: format!("What changed in {}?", 2020 - rng.random_range(1..=3u32)),
        table: Table::from_grid(&grid),
        paragraphs: vec![Paragraph { id: 0, text: sentence.join(" "), rank_score: None }],
        gold_answer: None,
        gold_scale: None,
        answer_from: None,
        derivation: None,
    }
}

/// Walk the legality session with uniform random choices until EOS.
pub fn sample_legal_program(
    li: &LinearizedInput,
    cfg: &LegalityConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Program> {
    let mut session = open_session(li, cfg);
    while !session.is_closed() {
        let legal: Vec<_> = session.legal_next().ok()?.into_iter().collect();
        let &t = legal.choose(rng)?;
        session.advance(t).ok()?;
    }
    session.finished()
}

/// A random grammatical program: arities respected, everything else free.
pub fn random_program(rng: &mut ChaCha8Rng) -> Program {
    Program::new(random_node(rng, 3))
}

fn random_node(rng: &mut ChaCha8Rng, depth: usize) -> Node {
    if depth == 0 || rng.random_bool(0.45) {
        if rng.random_bool(0.25) {
            return Node::Const(*ConstValue::ALL.choose(rng).unwrap());
        }
        let kind = *AtomicKind::ALL.choose(rng).unwrap();
        let start = rng.random_range(0..40usize);
        return Node::atomic(kind, start, start + rng.random_range(0..4usize));
    }
    let kind = *HigherKind::ALL.choose(rng).unwrap();
    let (lo, hi) = kind.arity();
    let n = rng.random_range(lo..=hi.min(lo + 2));
    Node::higher(kind, (0..n).map(|_| random_node(rng, depth - 1)).collect())
}

/// Six linearized tokens: separator, "5" in the question, separator, "7" in
/// the single cell, separator, separator. Small enough to enumerate every
/// decoding sequence exhaustively.
pub fn mini_context() -> HybridContext {
    HybridContext {
        id: "mini".into(),
        question: "5".into(),
        table: Table::from_grid(&[vec!["7".into()]]),
        paragraphs: vec![],
        gold_answer: None,
        gold_scale: None,
        answer_from: None,
        derivation: None,
    }
}

// ------------------------------------------------------------------- corpus

fn corpus_ctx(
    id: String,
    question: String,
    grid: Vec<Vec<String>>,
    paragraphs: Vec<String>,
    gold: Answer,
    source: AnswerSource,
    derivation: Option<String>,
) -> HybridContext {
    HybridContext {
        id,
        question,
        table: Table::from_grid(&grid),
        paragraphs: paragraphs
            .into_iter()
            .enumerate()
            .map(|(i, text)| Paragraph { id: i, text, rank_score: None })
            .collect(),
        gold_answer: Some(gold),
        gold_scale: None,
        answer_from: Some(source),
        derivation,
    }
}

/// One-decimal value in [100.0, 999.9]: never collides with years, counts,
/// or the search constants.
fn value(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(1_000..10_000u32) as f64 / 10.0
}

fn pick2<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> (&'a str, &'a str) {
    let a = rng.random_range(0..pool.len());
    let b = (a + 1 + rng.random_range(0..pool.len() - 1)) % pool.len();
    (pool[a], pool[b])
}

/// 200 deterministic instances in the hybrid-QA shape: span lookups,
/// multi-span lists, counts, superlative comparisons, derivation
/// arithmetic, and a block of deliberately unanswerable questions that no
/// program search should cover.
pub fn synthetic_corpus() -> Vec<HybridContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut out = Vec::new();
    for i in 0..200usize {
        let year = 2015 + (i % 5) as u32;
        let prior = year - 1;
        let (m1, m2) = pick2(&mut rng, METRICS);
        let (s1, s2) = pick2(&mut rng, SEGMENTS);
        let v11 = value(&mut rng);
        let v12 = value(&mut rng);
        let v21 = value(&mut rng);
        let v22 = value(&mut rng);
        let grid = vec![
            vec!["".into(), year.to_string(), prior.to_string()],
            vec![m1.into(), format!("{v11:.1}"), format!("{v12:.1}")],
            vec![m2.into(), format!("{v21:.1}"), format!("{v22:.1}")],
        ];
        let ctx = match i % 10 {
            // Span lookup: the gold number sits in a cell and twice in text.
            0..=2 => corpus_ctx(
                format!("span-{i}"),
                format!("What was the {m1} in {year}?"),
                grid,
                vec![
                    format!("{m1} reached {v11:.1} in {year} , against {v12:.1} a year earlier ."),
                    format!("The {year} figure of {v11:.1} was a record for {s1} ."),
                ],
                Answer::span(format!("{v11:.1}")),
                AnswerSource::TableText,
                None,
            ),
            // Multi-span: both metric names, from cells or the paragraph.
            3..=4 => corpus_ctx(
                format!("multi-{i}"),
                format!("Which metrics are reported for {year}?"),
                grid,
                vec![format!("Both {m1} and {m2} moved during {year} .")],
                Answer::spans(vec![m1.into(), m2.into()]),
                AnswerSource::TableText,
                None,
            ),
            // Count: items named in cells and once more in text.
            5..=6 => {
                let grid = vec![
                    vec!["".into(), year.to_string()],
                    vec![s1.into(), format!("{v11:.1}")],
                    vec![s2.into(), format!("{v21:.1}")],
                ];
                corpus_ctx(
                    format!("count-{i}"),
                    format!("How many segments reported sales in {year}?"),
                    grid,
                    vec![format!("{s1} and {s2} both reported sales in {year} .")],
                    Answer::count(2, vec![s1.into(), s2.into()]),
                    AnswerSource::TableText,
                    Some(format!("{s1} ## {s2}")),
                )
            }
            // Superlative: ARGMAX/ARGMIN ground truth over one value column.
            7 => {
                let (hi, lo) = (v11.max(v21), v11.min(v21));
                let (winner, ask_max) = if rng.random_bool(0.5) {
                    (if v11 >= v21 { s1 } else { s2 }, true)
                } else {
                    (if v11 <= v21 { s1 } else { s2 }, false)
                };
                let _ = (hi, lo);
                let grid = vec![
                    vec!["".into(), year.to_string()],
                    vec![s1.into(), format!("{v11:.1}")],
                    vec![s2.into(), format!("{v21:.1}")],
                ];
                corpus_ctx(
                    format!("cmp-{i}"),
                    format!(
                        "Which segment had the {} revenue in {year}?",
                        if ask_max { "highest" } else { "lowest" }
                    ),
                    grid,
                    vec![format!("{winner} stood out among the segments .")],
                    Answer::span(winner),
                    AnswerSource::Table,
                    None,
                )
            }
            // Arithmetic from a recorded derivation.
            8 => {
                if i % 20 == 8 {
                    corpus_ctx(
                        format!("arith-{i}"),
                        format!("What was the change in {m1} from {prior} to {year}?"),
                        grid,
                        vec![format!("{m1} moved between {prior} and {year} .")],
                        Answer::number(v11 - v12),
                        AnswerSource::Table,
                        Some(format!("{v11:.1}-{v12:.1}")),
                    )
                } else {
                    corpus_ctx(
                        format!("arith-{i}"),
                        format!("What was the average {m1} across {prior} and {year}?"),
                        grid,
                        vec![format!("{m1} was roughly level across both years .")],
                        Answer::number((v11 + v12) / 2.0),
                        AnswerSource::Table,
                        Some(format!("({v11:.1}+{v12:.1})/2")),
                    )
                }
            }
            // Unanswerable: the gold span appears nowhere in the context.
            _ => corpus_ctx(
                format!("hard-{i}"),
                format!("What opinion did the auditor issue for {year}?"),
                grid,
                vec![format!("{s1} {} in {year} .", FILLER[i % FILLER.len()])],
                Answer::span("unqualified opinion"),
                AnswerSource::Text,
                None,
            ),
        };
        out.push(ctx);
    }
    out
}
