//! The agent-definition language: tokens, syntax tree, parser and renderer.

pub mod ast;
pub mod error;
pub mod lexer;
pub mod parser;

pub use ast::*;
pub use error::LangError;
pub use lexer::{tokenize, Span, Token, TokenKind};
pub use parser::{
    parse_agent_program, parse_agent_program_with_coverage, parse_feedback, parse_literal,
    parse_norm_literal, parse_normative_plan, parse_plan, CondLit, FeedbackMessage, Production,
};

/// Renders a program as source text that parses back to an equal program.
pub fn render(program: &AgentProgram) -> String {
    program.to_string()
}
