//! Search-based program supervision.
//!
//! Given an instance with a gold answer, enumerate executable programs that
//! reproduce the answer. Every emitted program is validated and executed
//! before it is kept, so the output is correct by construction. Strategies
//! run in a fixed order (annotated derivations, extraction, span lists,
//! counting, superlative comparison, blind arithmetic); all limits are
//! deterministic work counts so the same input always yields the same
//! supervision.

mod arithmetic;
mod derivation;
mod ground;
mod strategies;

use crate::answer::Answer;
use crate::dsl::{
    operation_signature, parse_program, print_program, to_decoding_tokens, token_id, HigherKind,
    Node, Program, FIRST_POS_ID,
};
use crate::executor::{answers_match, execute};
use crate::knowledge::{prepare, HybridContext, LinearizedInput};
use crate::legality::{validate, ContextIndex, LegalityConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Absolute slack for numeric answer matching (after rounding to four
    /// decimals).
    pub tolerance: f64,
    /// Occurrences kept per searched surface string.
    pub max_occurrences_per_span: usize,
    /// Span-list groundings tried per instance.
    pub max_multispan_combinations: usize,
    /// Distinct operand values fed to arithmetic search.
    pub max_operand_values: usize,
    /// Programs kept per instance.
    pub max_programs_per_instance: usize,
    /// Deterministic cap on search steps per instance.
    pub work_limit: u64,
    /// Wall-clock ceiling per instance, checked between strategies.
    pub time_budget_ms: u64,
}

impl Default for SynthesisConfig {
    fn default() -> SynthesisConfig {
        SynthesisConfig {
            tolerance: 1e-4,
            max_occurrences_per_span: 4,
            max_multispan_combinations: 64,
            max_operand_values: 12,
            max_programs_per_instance: 64,
            work_limit: 200_000,
            time_budget_ms: 1_000,
        }
    }
}

/// Which strategy produced a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Derivation,
    Extraction,
    MultiSpan,
    Count,
    Comparison,
    Arithmetic,
    Augmented,
}

/// One supervised program in wire form. `text` parses back into the
/// program; `tokens` is its decoding-token id sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub tokens: Vec<usize>,
    pub signature: String,
    pub weight: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSupervision {
    pub id: String,
    pub programs: Vec<Candidate>,
    /// True when a limit cut the search short.
    pub truncated: bool,
    pub elapsed_ms: u64,
}

/// Shared search state: the context, its range pools, the target answer,
/// and the dedup/limit bookkeeping strategies report into.
pub(crate) struct Searcher<'a> {
    pub li: &'a LinearizedInput,
    pub index: ContextIndex,
    pub gold: &'a Answer,
    pub scfg: &'a SynthesisConfig,
    pub lcfg: &'a LegalityConfig,
    deadline_ms: u64,
    started: Instant,
    work: u64,
    seen: BTreeSet<String>,
    found: Vec<(Program, Origin)>,
    truncated: bool,
}

impl<'a> Searcher<'a> {
    fn new(
        li: &'a LinearizedInput,
        gold: &'a Answer,
        scfg: &'a SynthesisConfig,
        lcfg: &'a LegalityConfig,
    ) -> Searcher<'a> {
        Searcher {
            li,
            index: ContextIndex::build(li, lcfg),
            gold,
            scfg,
            lcfg,
            deadline_ms: scfg.time_budget_ms,
            started: Instant::now(),
            work: 0,
            seen: BTreeSet::new(),
            found: Vec::new(),
            truncated: false,
        }
    }

    /// Deterministic in-loop limit: work steps and the program cap.
    pub fn spent(&mut self) -> bool {
        if self.work >= self.scfg.work_limit
            || self.found.len() >= self.scfg.max_programs_per_instance
        {
            self.truncated = true;
        }
        self.truncated
    }

    /// Strategy-boundary limit: adds the wall clock. Kept out of inner
    /// loops so results stay reproducible under load.
    fn boundary_spent(&mut self) -> bool {
        if self.started.elapsed().as_millis() as u64 >= self.deadline_ms {
            self.truncated = true;
        }
        self.spent()
    }

    /// Count one unit of search work.
    pub fn tick(&mut self) {
        self.work += 1;
    }

    /// Keep `program` if it is new, valid, and reproduces the gold answer.
    pub fn try_push(&mut self, program: Program, origin: Origin) {
        if self.found.len() >= self.scfg.max_programs_per_instance {
            self.truncated = true;
            return;
        }
        let text = print_program(&program);
        if self.seen.contains(&text) {
            return;
        }
        self.work += 1;
        if !validate(&program, self.li, self.lcfg).is_ok() {
            return;
        }
        let Ok(answer) = execute(&program, self.li) else { return };
        if !answers_match(&answer, self.gold, self.scfg.tolerance) {
            return;
        }
        self.seen.insert(text);
        self.found.push((program, origin));
    }

    pub fn found_any(&self) -> bool {
        !self.found.is_empty()
    }
}

/// Search one instance for programs that reproduce its gold answer.
pub fn synthesize(
    ctx: &HybridContext,
    scfg: &SynthesisConfig,
    lcfg: &LegalityConfig,
    max_context_tokens: usize,
) -> InstanceSupervision {
    let started = Instant::now();
    let mut sup = InstanceSupervision {
        id: ctx.id.clone(),
        programs: Vec::new(),
        truncated: false,
        elapsed_ms: 0,
    };
    let Some(gold) = &ctx.gold_answer else {
        return sup;
    };
    let Ok(li) = prepare(ctx, max_context_tokens) else {
        sup.truncated = true;
        return sup;
    };

    let mut s = Searcher::new(&li, gold, scfg, lcfg);
    derivation::run(&mut s, ctx.derivation.as_deref());
    if !s.boundary_spent() {
        strategies::extraction(&mut s);
    }
    if !s.boundary_spent() {
        strategies::multi_spans(&mut s);
    }
    if !s.boundary_spent() {
        strategies::count(&mut s);
    }
    if !s.boundary_spent() {
        strategies::comparison(&mut s);
    }
    if !s.boundary_spent() {
        arithmetic::run(&mut s);
    }

    sup.truncated = s.truncated;
    sup.programs = s
        .found
        .iter()
        .map(|(p, origin)| Candidate {
            text: print_program(p),
            tokens: to_decoding_tokens(p).into_iter().map(token_id).collect(),
            signature: operation_signature(p),
            weight: 0.0,
            origin: *origin,
        })
        .collect();
    assign_weights(&mut sup.programs);
    sup.elapsed_ms = started.elapsed().as_millis() as u64;
    sup
}

/// [`synthesize`] across instances, in parallel, preserving input order.
pub fn synthesize_batch(
    instances: &[HybridContext],
    scfg: &SynthesisConfig,
    lcfg: &LegalityConfig,
    max_context_tokens: usize,
) -> Vec<InstanceSupervision> {
    instances
        .par_iter()
        .map(|ctx| synthesize(ctx, scfg, lcfg, max_context_tokens))
        .collect()
}

/// [`synthesize_batch`] on a pool of `workers` threads; 0 keeps the
/// machine-wide default.
pub fn synthesize_batch_with_workers(
    instances: &[HybridContext],
    scfg: &SynthesisConfig,
    lcfg: &LegalityConfig,
    max_context_tokens: usize,
    workers: usize,
) -> Vec<InstanceSupervision> {
    if workers == 0 {
        return synthesize_batch(instances, scfg, lcfg, max_context_tokens);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(|| synthesize_batch(instances, scfg, lcfg, max_context_tokens))
}

/// Programs with the same operation shape split one unit of weight, so no
/// single shape dominates training just by grounding in many places.
fn assign_weights(programs: &mut [Candidate]) {
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    for c in programs.iter() {
        *sizes.entry(c.signature.clone()).or_insert(0) += 1;
    }
    for c in programs.iter_mut() {
        c.weight = 1.0 / sizes[&c.signature] as f64;
    }
}

/// A counting variant derived from a span-list program, with its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingAugmentation {
    pub candidate: Candidate,
    pub answer: Answer,
}

/// Turn every span-list program into the counting program over the same
/// items. The result carries its own (synthetic) gold answer and is meant
/// to be attached to a counting rephrase of the original question.
pub fn counting_augmentations(
    sup: &InstanceSupervision,
    li: &LinearizedInput,
    lcfg: &LegalityConfig,
) -> Vec<CountingAugmentation> {
    let mut out: Vec<CountingAugmentation> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &sup.programs {
        let Ok(p) = parse_program(&c.text) else { continue };
        let Node::Higher { kind: HigherKind::MultiSpans, args } = p.root else { continue };
        let counted = Program::new(Node::Higher { kind: HigherKind::Count, args });
        let text = print_program(&counted);
        if !seen.insert(text.clone()) {
            continue;
        }
        if !validate(&counted, li, lcfg).is_ok() {
            continue;
        }
        let Ok(answer) = execute(&counted, li) else { continue };
        out.push(CountingAugmentation {
            candidate: Candidate {
                text,
                tokens: to_decoding_tokens(&counted).into_iter().map(token_id).collect(),
                signature: operation_signature(&counted),
                weight: 0.0,
                origin: Origin::Augmented,
            },
            answer,
        });
    }
    let mut cands: Vec<Candidate> = out.iter().map(|a| a.candidate.clone()).collect();
    assign_weights(&mut cands);
    for (a, c) in out.iter_mut().zip(cands) {
        a.candidate = c;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub instances: usize,
    /// Instances with at least one program.
    pub covered: usize,
    pub coverage: f64,
    /// Mean program count over covered instances.
    pub mean_programs: f64,
    pub truncated: usize,
    pub max_elapsed_ms: u64,
}

pub fn coverage_summary(sups: &[InstanceSupervision]) -> CoverageSummary {
    let covered = sups.iter().filter(|s| !s.programs.is_empty()).count();
    let programs: usize = sups.iter().map(|s| s.programs.len()).sum();
    CoverageSummary {
        instances: sups.len(),
        covered,
        coverage: if sups.is_empty() { 0.0 } else { covered as f64 / sups.len() as f64 },
        mean_programs: if covered == 0 { 0.0 } else { programs as f64 / covered as f64 },
        truncated: sups.iter().filter(|s| s.truncated).count(),
        max_elapsed_ms: sups.iter().map(|s| s.elapsed_ms).max().unwrap_or(0),
    }
}

/// Write supervision as line-delimited JSON: one header line describing the
/// format and the token alphabet, then one line per instance.
pub fn export_supervision<W: io::Write>(
    mut w: W,
    sups: &[InstanceSupervision],
) -> io::Result<()> {
    let header = serde_json::json!({
        "format": "program-supervision",
        "version": 1,
        "alphabet": {
            "bos": 0,
            "eos": 1,
            "close": 2,
            "first_op": 3,
            "first_const": 18,
            "first_pos": FIRST_POS_ID,
        },
    });
    writeln!(w, "{header}")?;
    for sup in sups {
        writeln!(w, "{}", serde_json::to_string(sup).map_err(io::Error::other)?)?;
    }
    Ok(())
}
