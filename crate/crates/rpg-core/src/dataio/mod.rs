//! Dataset ingestion and run configuration.
//!
//! Three input shapes load into [`HybridContext`]: the native context JSON
//! this crate writes, TAT-QA release files (table + paragraphs + questions),
//! and DROP release files (passage + questions, no table). Loader errors
//! carry a locator into the offending document instead of just failing.

use crate::answer::{Answer, AnswerSource, Scale};
use crate::knowledge::{parse_number, HybridContext, Paragraph, Table};
use crate::legality::LegalityConfig;
use crate::synthesis::SynthesisConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

impl SchemaError {
    fn shape(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
        SchemaError::Shape { path: path.into(), message: message.into() }
    }

    /// Prefix the locator with the file the document came from.
    fn located_in(self, file: &Path) -> SchemaError {
        let prefix = file.display();
        match self {
            SchemaError::Json { context, source } => {
                SchemaError::Json { context: format!("{prefix}: {context}"), source }
            }
            SchemaError::Shape { path, message } => {
                SchemaError::Shape { path: format!("{prefix}: {path}"), message }
            }
            other => other,
        }
    }
}

fn read(path: &Path) -> Result<String, SchemaError> {
    fs::read_to_string(path)
        .map_err(|e| SchemaError::Io { path: path.display().to_string(), source: e })
}

// ---------------------------------------------------------------- contexts

/// Parse native context JSON: either one context object or an array of them.
pub fn parse_contexts(text: &str) -> Result<Vec<HybridContext>, SchemaError> {
    let json_err = |source| SchemaError::Json { context: "context input".into(), source };
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(json_err)
    } else {
        serde_json::from_str::<HybridContext>(text).map(|c| vec![c]).map_err(json_err)
    }
}

pub fn load_contexts(path: &Path) -> Result<Vec<HybridContext>, SchemaError> {
    parse_contexts(&read(path)?).map_err(|e| e.located_in(path))
}

// ------------------------------------------------------------------ TAT-QA

#[derive(Deserialize)]
struct TatBlock {
    table: TatTable,
    #[serde(default)]
    paragraphs: Vec<TatParagraph>,
    #[serde(default)]
    questions: Vec<TatQuestion>,
}

#[derive(Deserialize)]
struct TatTable {
    table: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct TatParagraph {
    #[serde(default)]
    order: Option<usize>,
    text: String,
}

#[derive(Deserialize)]
struct TatQuestion {
    uid: String,
    question: String,
    #[serde(default)]
    answer: serde_json::Value,
    #[serde(default)]
    answer_type: Option<String>,
    #[serde(default)]
    answer_from: Option<AnswerSource>,
    #[serde(default)]
    scale: Option<String>,
    #[serde(default)]
    derivation: Option<String>,
}

/// Parse a TAT-QA release file: an array of blocks, each a table with
/// paragraphs and questions. Every question becomes one context.
pub fn parse_tatqa(text: &str) -> Result<Vec<HybridContext>, SchemaError> {
    let blocks: Vec<TatBlock> = serde_json::from_str(text)
        .map_err(|source| SchemaError::Json { context: "tatqa input".into(), source })?;
    let mut out = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let table = Table::from_grid(&block.table.table);
        let mut ordered: Vec<(usize, &TatParagraph)> = block.paragraphs.iter().enumerate().collect();
        ordered.sort_by_key(|(idx, p)| (p.order.unwrap_or(usize::MAX), *idx));
        let paragraphs: Vec<Paragraph> = ordered
            .iter()
            .enumerate()
            .map(|(id, (_, p))| Paragraph { id, text: p.text.clone(), rank_score: None })
            .collect();

        for (j, q) in block.questions.iter().enumerate() {
            let at = format!("block[{i}].questions[{j}]");
            let scale = match &q.scale {
                None => None,
                Some(label) => Some(Scale::from_label(label).ok_or_else(|| {
                    SchemaError::shape(&at, format!("unknown scale label {label:?}"))
                })?),
            };
            let derivation = q.derivation.as_deref().map(str::trim).filter(|d| !d.is_empty());
            let gold = tatqa_answer(&at, q, derivation)?.map(|answer| match scale {
                Some(scale) => answer.with_scale(scale),
                None => answer,
            });
            out.push(HybridContext {
                id: q.uid.clone(),
                question: q.question.clone(),
                table: table.clone(),
                paragraphs: paragraphs.clone(),
                gold_answer: gold,
                gold_scale: scale,
                answer_from: q.answer_from,
                derivation: derivation.map(String::from),
            });
        }
    }
    Ok(out)
}

pub fn load_tatqa(path: &Path) -> Result<Vec<HybridContext>, SchemaError> {
    parse_tatqa(&read(path)?).map_err(|e| e.located_in(path))
}

fn tatqa_answer(
    at: &str,
    q: &TatQuestion,
    derivation: Option<&str>,
) -> Result<Option<Answer>, SchemaError> {
    if q.answer.is_null() {
        return Ok(None);
    }
    let Some(kind) = q.answer_type.as_deref() else {
        return Ok(None);
    };
    match kind {
        "span" | "multi-span" => {
            let texts = answer_texts(at, &q.answer)?;
            Ok(match (kind, texts.len()) {
                (_, 0) => None,
                ("span", 1) => Some(Answer::span(texts.into_iter().next().unwrap())),
                _ => Some(Answer::spans(texts)),
            })
        }
        "count" => {
            let n = answer_number(at, &q.answer)?;
            if n < 0.0 || n.fract() != 0.0 {
                return Err(SchemaError::shape(at, format!("count answer {n} is not a count")));
            }
            // Count derivations list the counted items joined by "##".
            let items: Vec<String> = derivation
                .map(|d| d.split("##").map(|s| s.trim().to_string()).collect())
                .unwrap_or_default();
            let items = if items.len() == n as usize { items } else { Vec::new() };
            Ok(Some(Answer::count(n as u64, items)))
        }
        "arithmetic" => Ok(Some(Answer::number(answer_number(at, &q.answer)?))),
        other => Err(SchemaError::shape(at, format!("unknown answer_type {other:?}"))),
    }
}

fn answer_texts(at: &str, v: &serde_json::Value) -> Result<Vec<String>, SchemaError> {
    let text = |item: &serde_json::Value| -> Result<String, SchemaError> {
        match item {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => Err(SchemaError::shape(at, format!("unusable span {other}"))),
        }
    };
    match v {
        serde_json::Value::Array(items) => {
            items.iter().map(text).collect::<Result<Vec<_>, _>>().map(|texts| {
                texts.into_iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
            })
        }
        single => Ok(vec![text(single)?.trim().to_string()].into_iter().filter(|t| !t.is_empty()).collect()),
    }
}

fn answer_number(at: &str, v: &serde_json::Value) -> Result<f64, SchemaError> {
    let scalar = |item: &serde_json::Value| -> Option<f64> {
        match item {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => parse_number(s).map(|p| p.value),
            _ => None,
        }
    };
    let got = match v {
        serde_json::Value::Array(items) if items.len() == 1 => scalar(&items[0]),
        other => scalar(other),
    };
    got.ok_or_else(|| SchemaError::shape(at, format!("expected a numeric answer, got {v}")))
}

// -------------------------------------------------------------------- DROP

#[derive(Deserialize)]
struct DropPassage {
    passage: String,
    #[serde(default)]
    qa_pairs: Vec<DropQa>,
}

#[derive(Deserialize)]
struct DropQa {
    question: String,
    query_id: String,
    #[serde(default)]
    answer: Option<DropAnswer>,
}

#[derive(Deserialize, Default)]
struct DropAnswer {
    #[serde(default)]
    number: String,
    #[serde(default)]
    date: DropDate,
    #[serde(default)]
    spans: Vec<String>,
}

#[derive(Deserialize, Default)]
struct DropDate {
    #[serde(default)]
    day: String,
    #[serde(default)]
    month: String,
    #[serde(default)]
    year: String,
}

/// Parse a DROP release file: passages keyed by id, each with questions.
/// Contexts come out with an empty table and the passage as paragraph 0,
/// in passage-key order.
pub fn parse_drop(text: &str) -> Result<Vec<HybridContext>, SchemaError> {
    let passages: BTreeMap<String, DropPassage> = serde_json::from_str(text)
        .map_err(|source| SchemaError::Json { context: "drop input".into(), source })?;
    let mut out = Vec::new();
    for (key, passage) in &passages {
        for (j, qa) in passage.qa_pairs.iter().enumerate() {
            let at = format!("{key}.qa_pairs[{j}]");
            let gold = match &qa.answer {
                Some(a) => drop_answer(&at, a)?,
                None => None,
            };
            out.push(HybridContext {
                id: qa.query_id.clone(),
                question: qa.question.clone(),
                table: Table::empty(),
                paragraphs: vec![Paragraph {
                    id: 0,
                    text: passage.passage.clone(),
                    rank_score: None,
                }],
                gold_answer: gold,
                gold_scale: None,
                answer_from: Some(AnswerSource::Text),
                derivation: None,
            });
        }
    }
    Ok(out)
}

pub fn load_drop(path: &Path) -> Result<Vec<HybridContext>, SchemaError> {
    parse_drop(&read(path)?).map_err(|e| e.located_in(path))
}

fn drop_answer(at: &str, a: &DropAnswer) -> Result<Option<Answer>, SchemaError> {
    if !a.number.trim().is_empty() {
        let value = parse_number(&a.number)
            .map(|p| p.value)
            .ok_or_else(|| SchemaError::shape(at, format!("bad number {:?}", a.number)))?;
        return Ok(Some(Answer::number(value)));
    }
    let spans: Vec<String> =
        a.spans.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    match spans.len() {
        1 => return Ok(Some(Answer::span(spans.into_iter().next().unwrap()))),
        n if n > 1 => return Ok(Some(Answer::spans(spans))),
        _ => {}
    }
    let date: Vec<&str> = [&a.date.day, &a.date.month, &a.date.year]
        .into_iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    if !date.is_empty() {
        return Ok(Some(Answer::span(date.join(" "))));
    }
    Ok(None)
}

// ------------------------------------------------------------- predictions

/// One predicted answer keyed by instance id, as read from a predictions
/// file (one JSON object per line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub answer: Answer,
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, SchemaError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|source| SchemaError::Json {
            context: format!("predictions line {}", i + 1),
            source,
        })?);
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, SchemaError> {
    parse_predictions(&read(path)?).map_err(|e| e.located_in(path))
}

// ------------------------------------------------------------------ config

/// Which operations a run exposes. `text` is for datasets without tables:
/// it switches off the table ops on top of whatever the legality section
/// already disables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Hybrid,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub legality: LegalityConfig,
    pub synthesis: SynthesisConfig,
    pub max_context_tokens: usize,
    pub profile: Profile,
    /// Worker threads for batch work; 0 picks the machine default.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            legality: LegalityConfig::default(),
            synthesis: SynthesisConfig::default(),
            max_context_tokens: 2048,
            profile: Profile::Hybrid,
            workers: 0,
        }
    }
}

impl RunConfig {
    /// The legality config with the profile folded in.
    pub fn effective_legality(&self) -> LegalityConfig {
        let mut cfg = self.legality.clone();
        if self.profile == Profile::Text {
            cfg.disabled_ops.extend(LegalityConfig::drop_profile().disabled_ops);
        }
        cfg
    }

    /// Read a config file and fold in any `RPG_*` environment overrides.
    pub fn load(path: &Path) -> Result<RunConfig, SchemaError> {
        let text = read(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|source| SchemaError::Json { context: "run config".into(), source })
            .map_err(|e| e.located_in(path))?;
        cfg.apply_overrides(std::env::vars())?;
        Ok(cfg)
    }

    /// Defaults plus any `RPG_*` environment overrides.
    pub fn from_env() -> Result<RunConfig, SchemaError> {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides(std::env::vars())?;
        Ok(cfg)
    }

    /// Apply `RPG_*` overrides from an explicit variable list.
    pub fn apply_overrides<I>(&mut self, vars: I) -> Result<(), SchemaError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        fn int(name: &str, value: &str) -> Result<usize, SchemaError> {
            value
                .trim()
                .parse()
                .map_err(|_| SchemaError::shape(name, format!("expected an integer, got {value:?}")))
        }
        for (name, value) in vars {
            match name.as_str() {
                "RPG_MAX_CONTEXT_TOKENS" => self.max_context_tokens = int(&name, &value)?,
                "RPG_MAX_PROGRAM_TOKENS" => {
                    self.legality.max_program_tokens = int(&name, &value)?
                }
                "RPG_WORK_LIMIT" => self.synthesis.work_limit = int(&name, &value)? as u64,
                "RPG_TIME_BUDGET_MS" => {
                    self.synthesis.time_budget_ms = int(&name, &value)? as u64
                }
                "RPG_WORKERS" => self.workers = int(&name, &value)?,
                "RPG_PROFILE" => {
                    self.profile = match value.trim() {
                        "hybrid" => Profile::Hybrid,
                        "text" => Profile::Text,
                        other => {
                            return Err(SchemaError::shape(
                                &name,
                                format!("expected \"hybrid\" or \"text\", got {other:?}"),
                            ))
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
