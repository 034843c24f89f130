//! `rpg`: inspect, validate, execute, and supervise reasoning programs over
//! table+text contexts.
//!
//! Every subcommand writes line-delimited JSON to stdout. Exit codes: 0 on
//! success, 1 when the input program/prefix/prediction is well-formed but
//! wrong (invalid program, failed execution, illegal prefix), 2 for unusable
//! input (bad flags, unreadable files, schema errors).

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rpg_core::answer::Scale;
use rpg_core::dataio::{
    load_contexts, load_drop, load_predictions, load_tatqa, RunConfig,
};
use rpg_core::dsl::{
    from_decoding_tokens, operation_signature, parse_program, print_program, to_decoding_tokens,
    token_from_id, token_id, DecodingToken, Program,
};
use rpg_core::executor::execute_scaled;
use rpg_core::knowledge::{build_attention_masks, prepare, HybridContext, LinearizedInput};
use rpg_core::legality::{open_session, validate};
use rpg_core::metrics::{score_dataset, score_instance, ScoreRow};
use rpg_core::synthesis::{coverage_summary, export_supervision, synthesize_batch_with_workers};
use serde_json::json;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rpg", version, about = "Reasoning programs over table+text contexts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program from text or token ids and print its wire form.
    Parse(ParseArgs),
    /// Validate a program against a context.
    Check(CheckArgs),
    /// Execute a program against a context and print the answer.
    Exec(ExecArgs),
    /// Flatten a context into tokens with provenance.
    Linearize(LinearizeArgs),
    /// Print the legal next decoding tokens for a prefix.
    Mask(MaskArgs),
    /// Search contexts for programs that reproduce their gold answers.
    Search(SearchArgs),
    /// Score a predictions file against gold answers.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ContextArg {
    /// Context file: one context object or an array of them.
    #[arg(long)]
    context: PathBuf,
    /// Instance to use when the file holds several (default: the first).
    #[arg(long)]
    id: Option<String>,
}

impl ContextArg {
    fn load(&self) -> Result<HybridContext> {
        let mut ctxs = load_contexts(&self.context)?;
        match &self.id {
            None => ctxs
                .drain(..)
                .next()
                .ok_or_else(|| anyhow!("{}: no contexts in file", self.context.display())),
            Some(id) => ctxs
                .into_iter()
                .find(|c| &c.id == id)
                .ok_or_else(|| anyhow!("{}: no context with id {id:?}", self.context.display())),
        }
    }
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration JSON; RPG_* environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        Ok(match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::from_env()?,
        })
    }
}

#[derive(Args)]
struct ProgramArg {
    /// Program text, e.g. 'DIFF(CV(8, 8), CV(9, 9))'.
    #[arg(long, conflicts_with = "tokens")]
    program: Option<String>,
    /// Decoding-token ids, comma or space separated, e.g. '0,6,29,29,1'.
    #[arg(long)]
    tokens: Option<String>,
}

impl ProgramArg {
    /// Build the program; `Err(message)` is a domain failure, not a crash.
    fn build(&self) -> Result<std::result::Result<Program, String>> {
        match (&self.program, &self.tokens) {
            (Some(text), None) => Ok(parse_program(text).map_err(|e| e.to_string())),
            (None, Some(ids)) => {
                let ids = parse_ids(ids)?;
                let toks: Vec<DecodingToken> = ids.into_iter().map(token_from_id).collect();
                Ok(from_decoding_tokens(&toks).map_err(|e| e.to_string()))
            }
            _ => bail!("provide exactly one of --program or --tokens"),
        }
    }
}

fn parse_ids(s: &str) -> Result<Vec<usize>> {
    s.split([',', ' '])
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad token id {p:?}")))
        .collect()
}

fn emit(v: serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, &v)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Print a domain failure as JSON and signal exit code 1.
fn fail(message: String) -> Result<ExitCode> {
    emit(json!({ "error": message }))?;
    Ok(ExitCode::from(1))
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    program: ProgramArg,
}

fn cmd_parse(args: &ParseArgs) -> Result<ExitCode> {
    let program = match args.program.build()? {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let ids: Vec<usize> = to_decoding_tokens(&program).into_iter().map(token_id).collect();
    emit(json!({
        "text": print_program(&program),
        "tokens": ids,
        "signature": operation_signature(&program),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn prepared(ctx: &HybridContext, cfg: &RunConfig) -> Result<LinearizedInput> {
    prepare(ctx, cfg.max_context_tokens).map_err(|e| anyhow!("{}: {e}", ctx.id))
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    context: ContextArg,
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    program: ProgramArg,
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let ctx = args.context.load()?;
    let li = prepared(&ctx, &cfg)?;
    let program = match args.program.build()? {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let report = validate(&program, &li, &cfg.effective_legality());
    let ok = report.is_ok();
    emit(json!({
        "id": ctx.id,
        "valid": ok,
        "violations": report.violations,
    }))?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Args)]
struct ExecArgs {
    #[command(flatten)]
    context: ContextArg,
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    program: ProgramArg,
    /// Unit to attach to numeric answers: thousand, million, billion,
    /// percent, or the empty string for an explicit "no unit".
    #[arg(long)]
    scale: Option<String>,
}

fn cmd_exec(args: &ExecArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let ctx = args.context.load()?;
    let li = prepared(&ctx, &cfg)?;
    let program = match args.program.build()? {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let scale = match &args.scale {
        None => None,
        Some(label) => {
            Some(Scale::from_label(label).ok_or_else(|| anyhow!("unknown scale {label:?}"))?)
        }
    };
    let report = validate(&program, &li, &cfg.effective_legality());
    if !report.is_ok() {
        emit(json!({ "id": ctx.id, "valid": false, "violations": report.violations }))?;
        return Ok(ExitCode::from(1));
    }
    match execute_scaled(&program, &li, scale) {
        Ok(answer) => {
            emit(json!({ "id": ctx.id, "answer": answer }))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => fail(e.to_string()),
    }
}

#[derive(Args)]
struct LinearizeArgs {
    #[command(flatten)]
    context: ContextArg,
    #[command(flatten)]
    config: ConfigArg,
    /// Include the structure-aware attention masks.
    #[arg(long)]
    masks: bool,
}

fn cmd_linearize(args: &LinearizeArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let ctx = args.context.load()?;
    let li = prepared(&ctx, &cfg)?;
    let mut line = json!({ "id": ctx.id, "input": li });
    if args.masks {
        line["masks"] = serde_json::to_value(build_attention_masks(&li))?;
    }
    emit(line)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    context: ContextArg,
    #[command(flatten)]
    config: ConfigArg,
    /// Already-decoded token ids, comma or space separated, starting with
    /// BOS (0). Empty means a fresh sequence.
    #[arg(long, default_value = "")]
    prefix: String,
}

fn cmd_mask(args: &MaskArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let ctx = args.context.load()?;
    let li = prepared(&ctx, &cfg)?;
    let mut session = open_session(&li, &cfg.effective_legality());
    for id in parse_ids(&args.prefix)? {
        if let Err(e) = session.advance(token_from_id(id)) {
            return fail(format!("token {id}: {e}"));
        }
    }
    let prefix: Vec<usize> = session.prefix().iter().map(|&t| token_id(t)).collect();
    if session.is_closed() {
        let program = session.finished().expect("closed sessions carry a program");
        emit(json!({
            "id": ctx.id,
            "prefix": prefix,
            "finished": true,
            "program": print_program(&program),
        }))?;
        return Ok(ExitCode::SUCCESS);
    }
    let legal = session.legal_next().map_err(|e| anyhow!("{e}"))?;
    emit(json!({
        "id": ctx.id,
        "prefix": prefix,
        "finished": false,
        "legal": legal.iter().map(|&t| token_id(t)).collect::<Vec<_>>(),
        "spelled": legal.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "dead_end": legal.is_empty(),
    }))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Native context JSON.
    Context,
    /// TAT-QA release file.
    Tatqa,
    /// DROP release file.
    Drop,
}

fn load_dataset(path: &PathBuf, format: Format) -> Result<Vec<HybridContext>> {
    Ok(match format {
        Format::Context => load_contexts(path)?,
        Format::Tatqa => load_tatqa(path)?,
        Format::Drop => load_drop(path)?,
    })
}

#[derive(Args)]
struct SearchArgs {
    /// Dataset file to search.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Context)]
    format: Format,
    #[command(flatten)]
    config: ConfigArg,
    /// Write supervision here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_search(args: &SearchArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let ctxs = load_dataset(&args.input, args.format)?;
    let sups = synthesize_batch_with_workers(
        &ctxs,
        &cfg.synthesis,
        &cfg.effective_legality(),
        cfg.max_context_tokens,
        cfg.workers,
    );
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            export_supervision(BufWriter::new(file), &sups)?;
        }
        None => export_supervision(std::io::stdout().lock(), &sups)?,
    }
    let s = coverage_summary(&sups);
    eprintln!(
        "covered {}/{} instances ({:.1}%), {:.2} programs each, {} truncated, slowest {}ms",
        s.covered,
        s.instances,
        100.0 * s.coverage,
        s.mean_programs,
        s.truncated,
        s.max_elapsed_ms
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct EvalArgs {
    /// Gold dataset file.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Context)]
    format: Format,
    /// Predictions: one {"id", "answer"} object per line.
    #[arg(long)]
    preds: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Also print one score line per instance.
    #[arg(long)]
    per_instance: bool,
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let tol = cfg.synthesis.tolerance;
    let golds = load_dataset(&args.gold, args.format)?;
    let preds = load_predictions(&args.preds)?;
    let by_id: BTreeMap<&str, _> = preds.iter().map(|p| (p.id.as_str(), &p.answer)).collect();

    let mut rows = Vec::new();
    let mut missing = 0usize;
    for ctx in &golds {
        let Some(gold) = &ctx.gold_answer else { continue };
        match by_id.get(ctx.id.as_str()) {
            Some(&pred) => {
                if args.per_instance {
                    let s = score_instance(pred, gold, tol);
                    emit(json!({ "id": ctx.id, "em": s.em, "f1": s.f1 }))?;
                }
                rows.push(ScoreRow {
                    pred: pred.clone(),
                    gold: gold.clone(),
                    source: ctx.answer_from,
                });
            }
            None => missing += 1,
        }
    }
    let gold_ids: std::collections::BTreeSet<&str> =
        golds.iter().map(|c| c.id.as_str()).collect();
    let unmatched = preds.iter().filter(|p| !gold_ids.contains(p.id.as_str())).count();
    emit(json!({
        "scored": rows.len(),
        "missing_predictions": missing,
        "unmatched_predictions": unmatched,
        "scores": score_dataset(&rows, tol),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Parse(a) => cmd_parse(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Exec(a) => cmd_exec(a),
        Cmd::Linearize(a) => cmd_linearize(a),
        Cmd::Mask(a) => cmd_mask(a),
        Cmd::Search(a) => cmd_search(a),
        Cmd::Eval(a) => cmd_eval(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
