//! Discrete reasoning over hybrid table+text contexts as small symbolic programs.
//!
//! The crate covers the full symbolic pipeline:
//!
//! * [`knowledge`] turns a table plus paragraphs into one flat token sequence
//!   with provenance, and derives structure-aware attention masks from it.
//! * [`dsl`] defines the program language (span/cell extraction, key-value
//!   pairs, counting, argmax/argmin, arithmetic), its text syntax, and the
//!   flat decoding-token form used by sequence models.
//! * [`legality`] validates whole programs against a context and, through
//!   [`legality::LegalitySession`], hands a decoder the exact set of tokens
//!   that can still be extended into a complete valid program.
//! * [`executor`] runs programs bottom-up and produces typed answers.
//! * [`synthesis`] searches for pseudo programs that explain a gold answer,
//!   for use as distant supervision.
//! * [`metrics`] scores predicted answers with exact-match and token-F1.
//! * [`dataio`] reads TAT-QA and DROP style JSON into [`knowledge::HybridContext`].

pub mod answer;
pub mod dataio;
pub mod dsl;
pub mod executor;
pub mod knowledge;
pub mod legality;
pub mod metrics;
pub mod synthesis;
pub mod text;

pub use answer::{Answer, AnswerKind, AnswerSource, Scale, Value};
pub use dsl::{parse_program, print_program, Program};
pub use knowledge::{HybridContext, LinearizedInput};
