//! Tokenizer for `.nea` agent sources and runtime message payloads.

use std::fmt;

use super::error::LangError;

/// Location of a token in the source text. `line` and `column` are 1-based;
/// `column` counts characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Num(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    Plus,
    Minus,
    Bang,
    At,
    Amp,
    /// `<-`
    Arrow,
    /// `<=`
    Le,
    /// `>=`
    Ge,
}

impl TokenKind {
    /// Short human-readable description used in diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Num(n) => format!("number `{n}`"),
            TokenKind::Str(s) => format!("string {s:?}"),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Comma => ",",
            TokenKind::Colon => ":",
            TokenKind::Semi => ";",
            TokenKind::Dot => ".",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Bang => "!",
            TokenKind::At => "@",
            TokenKind::Amp => "&",
            TokenKind::Arrow => "<-",
            TokenKind::Le => "<=",
            TokenKind::Ge => ">=",
            TokenKind::Ident(_) | TokenKind::Num(_) | TokenKind::Str(_) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn span(&mut self) -> Span {
        let offset = self.chars.peek().map_or(self.src.len(), |&(i, _)| i);
        Span {
            offset,
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits `source` into tokens. Whitespace and `//` / `/* */` comments are
/// dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LangError> {
    let mut cur = Cursor::new(source);
    let mut out = Vec::new();
    loop {
        let span = cur.span();
        let Some(c) = cur.peek() else { break };
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '/' if cur.peek2() == Some('/') => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            '/' if cur.peek2() == Some('*') => {
                cur.bump();
                cur.bump();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    if c == '*' && cur.peek() == Some('/') {
                        cur.bump();
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(LangError::Lex {
                        span,
                        found: '/',
                        message: "unterminated block comment".into(),
                    });
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                TokenKind::Ident(s)
            }
            c if c.is_ascii_digit() => {
                let start = span.offset;
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                let end = cur.span().offset;
                // Only ASCII digits and one dot were consumed, so this cannot fail.
                TokenKind::Num(source[start..end].parse().expect("numeric lexeme"))
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => {
                            return Err(LangError::Lex {
                                span,
                                found: '"',
                                message: "unterminated string literal".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            Some(c) => {
                                return Err(LangError::Lex {
                                    span,
                                    found: c,
                                    message: "unknown escape sequence".into(),
                                })
                            }
                            None => {
                                return Err(LangError::Lex {
                                    span,
                                    found: '\\',
                                    message: "unterminated string literal".into(),
                                })
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                TokenKind::Str(s)
            }
            '<' => {
                cur.bump();
                match cur.peek() {
                    Some('-') => {
                        cur.bump();
                        TokenKind::Arrow
                    }
                    Some('=') => {
                        cur.bump();
                        TokenKind::Le
                    }
                    _ => return Err(illegal(span, '<')),
                }
            }
            '>' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    TokenKind::Ge
                } else {
                    return Err(illegal(span, '>'));
                }
            }
            other => {
                let kind = match other {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    ';' => TokenKind::Semi,
                    '.' => TokenKind::Dot,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '!' => TokenKind::Bang,
                    '@' => TokenKind::At,
                    '&' => TokenKind::Amp,
                    _ => return Err(illegal(span, other)),
                };
                cur.bump();
                kind
            }
        };
        out.push(Token { kind, span });
    }
    Ok(out)
}

fn illegal(span: Span, found: char) -> LangError {
    LangError::Lex {
        span,
        found,
        message: "character is not part of the language".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn empty_norms_block() {
        assert_eq!(
            kinds("norms__: { }"),
            vec![
                TokenKind::Ident("norms__".into()),
                TokenKind::Colon,
                TokenKind::LBrace,
                TokenKind::RBrace
            ]
        );
    }

    #[test]
    fn pre_appraisal_vector() {
        assert_eq!(
            kinds("[0.5,0.5]"),
            vec![
                TokenKind::LBracket,
                TokenKind::Num(0.5),
                TokenKind::Comma,
                TokenKind::Num(0.5),
                TokenKind::RBracket
            ]
        );
    }

    #[test]
    fn illegal_character_reports_column() {
        match tokenize("@€") {
            Err(LangError::Lex { span, found, .. }) => {
                assert_eq!(found, '€');
                assert_eq!(span.column, 2);
                assert_eq!(span.line, 1);
            }
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// header\n  a. /* x\n y */ +b <- c.").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Ident("a".into()));
        assert_eq!((toks[0].span.line, toks[0].span.column), (2, 3));
        assert_eq!(toks[2].kind, TokenKind::Plus);
        assert_eq!(toks[4].kind, TokenKind::Arrow);
    }

    #[test]
    fn number_followed_by_terminator() {
        assert_eq!(
            kinds("count(5)."),
            vec![
                TokenKind::Ident("count".into()),
                TokenKind::LParen,
                TokenKind::Num(5.0),
                TokenKind::RParen,
                TokenKind::Dot
            ]
        );
        assert_eq!(kinds("50."), vec![TokenKind::Num(50.0), TokenKind::Dot]);
    }

    #[test]
    fn strings_with_escapes() {
        assert_eq!(
            kinds(r#""a \"b\" c""#),
            vec![TokenKind::Str("a \"b\" c".into())]
        );
        assert!(matches!(tokenize("\"open"), Err(LangError::Lex { .. })));
    }

    #[test]
    fn comparison_operators() {
        assert_eq!(
            kinds("<= >= <-"),
            vec![TokenKind::Le, TokenKind::Ge, TokenKind::Arrow]
        );
        assert!(tokenize("a < b").is_err());
    }
}
