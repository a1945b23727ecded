//! Candidate proposal: a remote chat-completions client and an offline
//! expression mutator behind one [`Generator`] trait.
//!
//! The engine only ever receives validated DSL text or a failure status; raw
//! model output never leaves this module except in [`ProposalResponse::raw`]
//! for the audit trail.

mod offline;
mod prompt;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, ExprTree};

pub use offline::OfflineGenerator;
pub use prompt::{build_prompt, grammar_reference, PromptParts, PROMPT_VERSION, SYSTEM_PROMPT};
pub use remote::{RemoteConfig, RemoteGenerator, API_KEY_ENV};

/// Declared dimension of generated expressions; higher dimensions are
/// evaluated through sliding-window lifting.
pub const GENOME_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("generator configuration: {0}")]
    Config(String),
}

impl GeneratorError {
    /// Whether a retry may help.
    pub fn is_transient(&self) -> bool {
        match self {
            GeneratorError::Transport(_) => true,
            GeneratorError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRequest {
    pub prompt: String,
    /// Parent expression the proposal should improve on, if any.
    pub parent: Option<String>,
    pub dims: Vec<usize>,
    pub max_tokens: u32,
    /// Drives the offline generator; ignored by remote endpoints.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum ExtractionStatus {
    Ok,
    NoEnvelope,
    Unparseable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalResponse {
    pub raw: String,
    pub expr: Option<String>,
    pub status: ExtractionStatus,
}

impl ProposalResponse {
    /// Extracts and validates the first `<expr>…</expr>` envelope of `raw`.
    pub fn from_raw(raw: String) -> Self {
        match extract_envelope(&raw) {
            None => ProposalResponse {
                raw,
                expr: None,
                status: ExtractionStatus::NoEnvelope,
            },
            Some(text) => match parse(text, GENOME_DIM) {
                Ok(_) => ProposalResponse {
                    expr: Some(text.to_string()),
                    raw,
                    status: ExtractionStatus::Ok,
                },
                Err(e) => ProposalResponse {
                    raw,
                    expr: None,
                    status: ExtractionStatus::Unparseable(e.to_string()),
                },
            },
        }
    }

    pub fn tree(&self) -> Option<ExprTree> {
        self.expr.as_deref().and_then(|e| parse(e, GENOME_DIM).ok())
    }
}

const OPEN: &str = "<expr>";
const CLOSE: &str = "</expr>";

/// Trimmed contents of the first complete `<expr>` envelope.
pub fn extract_envelope(text: &str) -> Option<&str> {
    let start = text.find(OPEN)? + OPEN.len();
    let end = text[start..].find(CLOSE)? + start;
    Some(text[start..end].trim())
}

pub trait Generator: Send + Sync {
    fn propose(&self, request: &ProposalRequest) -> Result<ProposalResponse, GeneratorError>;

    /// Short identifier recorded in provenance.
    fn name(&self) -> String;

    /// Proposals that may be outstanding at once.
    fn max_in_flight(&self) -> usize;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_extraction() {
        let r = ProposalResponse::from_raw("noise <expr>x1^2 - sin(x2)</expr> noise".into());
        assert_eq!(r.expr.as_deref(), Some("x1^2 - sin(x2)"));
        assert_eq!(r.status, ExtractionStatus::Ok);
        let r = ProposalResponse::from_raw("just x1 + x2".into());
        assert_eq!(r.status, ExtractionStatus::NoEnvelope);
        assert!(r.expr.is_none());
        let r = ProposalResponse::from_raw("<expr>x1 +</expr>".into());
        assert!(matches!(r.status, ExtractionStatus::Unparseable(_)));
        let r = ProposalResponse::from_raw("<expr>x1</expr> then <expr>x2</expr>".into());
        assert_eq!(r.expr.as_deref(), Some("x1"));
        assert_eq!(extract_envelope("<expr>unterminated"), None);
    }

    #[test]
    fn transient_errors() {
        assert!(GeneratorError::Transport("reset".into()).is_transient());
        assert!(GeneratorError::Http { status: 503, body: String::new() }.is_transient());
        assert!(!GeneratorError::Http { status: 401, body: String::new() }.is_transient());
        assert!(!GeneratorError::Malformed("x".into()).is_transient());
    }
}
