//! Typed answers produced by program execution and carried by datasets.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Unit attached to a numeric answer. `None` is an explicit "no unit", which
/// is distinct from an answer that does not carry scale information at all
/// (`Option<Scale>` = `None`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    None,
    Thousand,
    Million,
    Billion,
    Percent,
}

impl Scale {
    /// Parse the dataset spelling; the empty string means "no unit".
    pub fn from_label(s: &str) -> Option<Scale> {
        match s {
            "" => Some(Scale::None),
            "thousand" => Some(Scale::Thousand),
            "million" => Some(Scale::Million),
            "billion" => Some(Scale::Billion),
            "percent" => Some(Scale::Percent),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scale::None => "",
            Scale::Thousand => "thousand",
            Scale::Million => "million",
            Scale::Billion => "billion",
            Scale::Percent => "percent",
        }
    }
}

/// Where the evidence for an answer lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnswerSource {
    #[serde(rename = "table")]
    Table,
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "table-text")]
    TableText,
}

impl AnswerSource {
    pub fn label(self) -> &'static str {
        match self {
            AnswerSource::Table => "table",
            AnswerSource::Text => "text",
            AnswerSource::TableText => "table-text",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AnswerKind {
    Span,
    Spans,
    Number,
    Count,
}

impl AnswerKind {
    pub fn label(self) -> &'static str {
        match self {
            AnswerKind::Span => "SPAN",
            AnswerKind::Spans => "SPANS",
            AnswerKind::Number => "NUMBER",
            AnswerKind::Count => "COUNT",
        }
    }
}

/// Payload of an answer or of an intermediate execution result.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// One or more extracted text pieces, in order.
    Text(Vec<String>),
    Number(f64),
    /// Key/value pairs produced by `KV`, consumed by `ARGMAX`/`ARGMIN`.
    Pairs(Vec<Pair>),
    /// A count plus the surface strings that were counted.
    Count { value: u64, items: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub key: String,
    pub value: f64,
}

/// A finished answer: payload plus kind plus optional unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub kind: AnswerKind,
    pub value: Value,
    pub scale: Option<Scale>,
}

impl Answer {
    pub fn span(text: impl Into<String>) -> Answer {
        Answer { kind: AnswerKind::Span, value: Value::Text(vec![text.into()]), scale: None }
    }

    pub fn spans(texts: Vec<String>) -> Answer {
        Answer { kind: AnswerKind::Spans, value: Value::Text(texts), scale: None }
    }

    pub fn number(x: f64) -> Answer {
        Answer { kind: AnswerKind::Number, value: Value::Number(x), scale: None }
    }

    pub fn count(n: u64, items: Vec<String>) -> Answer {
        Answer { kind: AnswerKind::Count, value: Value::Count { value: n, items }, scale: None }
    }

    pub fn with_scale(mut self, scale: Scale) -> Answer {
        self.scale = Some(scale);
        self
    }

    /// Numeric view: the number itself, or a count as a number.
    pub fn as_number(&self) -> Option<f64> {
        match &self.value {
            Value::Number(x) => Some(*x),
            Value::Count { value, .. } => Some(*value as f64),
            _ => None,
        }
    }

    /// Text view: the extracted pieces, if this is a text answer.
    pub fn as_texts(&self) -> Option<&[String]> {
        match &self.value {
            Value::Text(items) => Some(items),
            _ => None,
        }
    }
}

/// Flat JSON shape: `{"kind":"NUMBER","value":0.06,"scale":"percent"}`,
/// `{"kind":"SPAN","spans":["2019"]}`, `{"kind":"COUNT","value":3,"items":[...]}`.
#[derive(Serialize, Deserialize)]
struct AnswerWire {
    kind: AnswerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spans: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    items: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<Scale>,
}

impl Serialize for Answer {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut wire = AnswerWire {
            kind: self.kind,
            value: None,
            spans: None,
            items: None,
            scale: self.scale,
        };
        match &self.value {
            Value::Text(texts) => wire.spans = Some(texts.clone()),
            Value::Number(x) => wire.value = Some(serde_json::json!(x)),
            Value::Count { value, items } => {
                wire.value = Some(serde_json::json!(value));
                wire.items = Some(items.clone());
            }
            Value::Pairs(pairs) => {
                let list: Vec<serde_json::Value> = pairs
                    .iter()
                    .map(|p| serde_json::json!({"key": p.key, "value": p.value}))
                    .collect();
                wire.value = Some(serde_json::Value::Array(list));
            }
        }
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Answer, D::Error> {
        let wire = AnswerWire::deserialize(de)?;
        let value = match wire.kind {
            AnswerKind::Span | AnswerKind::Spans => {
                let spans = wire
                    .spans
                    .ok_or_else(|| D::Error::custom("text answer requires \"spans\""))?;
                Value::Text(spans)
            }
            AnswerKind::Number => {
                let v = wire
                    .value
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| D::Error::custom("number answer requires numeric \"value\""))?;
                Value::Number(v)
            }
            AnswerKind::Count => {
                let v = wire
                    .value
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| D::Error::custom("count answer requires integer \"value\""))?;
                Value::Count { value: v, items: wire.items.unwrap_or_default() }
            }
        };
        Ok(Answer { kind: wire.kind, value, scale: wire.scale })
    }
}
