use thiserror::Error;

use super::lexer::Span;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LangError {
    #[error("{span}: {message} ({found:?})")]
    Lex {
        span: Span,
        found: char,
        message: String,
    },
    #[error("{span}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: {message}")]
    Semantic { span: Span, message: String },
    /// The payload is a well-formed term whose head is not `norm`.
    #[error("literal is not a norm")]
    NotANorm,
}

impl LangError {
    /// Source position of the error, when it has one.
    pub fn span(&self) -> Option<Span> {
        match self {
            LangError::Lex { span, .. }
            | LangError::Parse { span, .. }
            | LangError::Semantic { span, .. } => Some(*span),
            LangError::NotANorm => None,
        }
    }
}
