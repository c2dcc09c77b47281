//! Tokenizer for MissionScript.
//!
//! Whitespace and `--` line comments separate tokens and are dropped. Every
//! token keeps the exact byte span of its lexeme, which is what later lets a
//! computed value point back at the characters that produced it.

use serde::{Deserialize, Serialize};

use super::span::SourceSpan;
use super::LexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Number,
    Identifier,
    String,
    Keyword,
    Operator,
    Punctuation,
}

pub const KEYWORDS: &[&str] = &["for", "do", "end", "if", "then", "else"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer { src: source, bytes: source.as_bytes(), pos: 0 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut tokens = Vec::new();
        loop {
            self.skip_trivia();
            let Some(&b) = self.bytes.get(self.pos) else {
                return Ok(tokens);
            };
            let start = self.pos;
            let kind = match b {
                b'0'..=b'9' => self.number(),
                b'.' if self.peek_is_digit(1) => self.number(),
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while matches!(self.bytes.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
                        self.pos += 1;
                    }
                    if KEYWORDS.contains(&&self.src[start..self.pos]) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    }
                }
                b'"' | b'\'' => self.string(b)?,
                b'(' | b')' | b',' => {
                    self.pos += 1;
                    TokenKind::Punctuation
                }
                b'+' | b'-' | b'*' | b'/' => {
                    self.pos += 1;
                    TokenKind::Operator
                }
                b'<' | b'>' | b'=' => {
                    self.pos += 1;
                    if self.bytes.get(self.pos) == Some(&b'=') {
                        self.pos += 1;
                    }
                    TokenKind::Operator
                }
                b'~' | b'!' if self.bytes.get(self.pos + 1) == Some(&b'=') => {
                    self.pos += 2;
                    TokenKind::Operator
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('\u{fffd}');
                    return Err(LexError {
                        span: SourceSpan::new(start, start + ch.len_utf8()),
                        message: format!("unexpected character {ch:?}"),
                    });
                }
            };
            tokens.push(Token {
                kind,
                text: self.src[start..self.pos].to_string(),
                span: SourceSpan::new(start, self.pos),
            });
        }
    }

    fn peek_is_digit(&self, ahead: usize) -> bool {
        matches!(self.bytes.get(self.pos + ahead), Some(b'0'..=b'9'))
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'-') if self.bytes.get(self.pos + 1) == Some(&b'-') => {
                    while !matches!(self.bytes.get(self.pos), None | Some(b'\n')) {
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self) -> TokenKind {
        while self.peek_is_digit(0) {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.') && self.peek_is_digit(1) {
            self.pos += 1;
            while self.peek_is_digit(0) {
                self.pos += 1;
            }
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(self.bytes.get(self.pos + 1), Some(b'+' | b'-')));
            if self.peek_is_digit(1 + sign) {
                self.pos += 1 + sign;
                while self.peek_is_digit(0) {
                    self.pos += 1;
                }
            }
        }
        TokenKind::Number
    }

    fn string(&mut self, quote: u8) -> Result<TokenKind, LexError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.bytes.get(self.pos) {
                None | Some(b'\n') => {
                    return Err(LexError {
                        span: SourceSpan::new(start, self.pos),
                        message: "unterminated string".into(),
                    })
                }
                Some(b'\\') => self.pos += 2,
                Some(&c) if c == quote => {
                    self.pos += 1;
                    return Ok(TokenKind::String);
                }
                Some(_) => self.pos += 1,
            }
        }
    }
}

/// Decodes the body of a string token (quotes stripped, escapes resolved).
pub fn unquote(lexeme: &str) -> String {
    let inner = &lexeme[1..lexeme.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}
