use std::fmt;

use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TokenKind<'a> {
    Number(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl fmt::Display for TokenKind<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "number {v}"),
            TokenKind::Ident(name) => write!(f, "identifier '{name}'"),
            TokenKind::Plus => f.write_str("'+'"),
            TokenKind::Minus => f.write_str("'-'"),
            TokenKind::Star => f.write_str("'*'"),
            TokenKind::Slash => f.write_str("'/'"),
            TokenKind::Caret => f.write_str("'^'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Token<'a> {
    pub kind: TokenKind<'a>,
    /// 0-based character offset of the token's first character.
    pub position: usize,
}

/// On-demand tokenizer. Every valid token is ASCII, so byte offsets equal
/// character offsets up to the first error.
pub struct Lexer<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(input: &'a str) -> Self {
        Lexer { input, pos: 0 }
    }

    fn error_at(&self, byte: usize, kind: ParseErrorKind, message: String) -> ParseError {
        let position = self.input[..byte].chars().count();
        ParseError {
            position,
            kind,
            message,
        }
    }

    #[inline]
    fn peek_byte(&self, at: usize) -> Option<u8> {
        self.input.as_bytes().get(at).copied()
    }

    pub fn next_token(&mut self) -> Result<Token<'a>, ParseError> {
        let bytes = self.input.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_byte(start) else {
            return Ok(Token {
                kind: TokenKind::End,
                position: start,
            });
        };
        let kind = match b {
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => return self.number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = start + 1;
                while matches!(self.peek_byte(end), Some(c) if c.is_ascii_alphanumeric() || c == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                return Ok(Token {
                    kind: TokenKind::Ident(&self.input[start..end]),
                    position: start,
                });
            }
            _ => {
                let ch = self.input[start..].chars().next().unwrap_or('?');
                return Err(self.error_at(
                    start,
                    ParseErrorKind::UnexpectedToken,
                    format!("unexpected character '{ch}'"),
                ));
            }
        };
        self.pos = start + 1;
        Ok(Token {
            kind,
            position: start,
        })
    }

    /// digits [ "." digits* ] [ ("e"|"E") ["+"|"-"] digits ], or "." digits [...]
    fn number(&mut self, start: usize) -> Result<Token<'a>, ParseError> {
        let digits_from = |mut at: usize| {
            while matches!(self.peek_byte(at), Some(b'0'..=b'9')) {
                at += 1;
            }
            at
        };
        let bad = |msg: &str| {
            self.error_at(
                start,
                ParseErrorKind::BadNumber,
                format!("malformed number literal: {msg}"),
            )
        };

        let mut end = digits_from(start);
        let int_digits = end - start;
        let mut frac_digits = 0;
        if self.peek_byte(end) == Some(b'.') {
            let after = digits_from(end + 1);
            frac_digits = after - end - 1;
            end = after;
        }
        if int_digits == 0 && frac_digits == 0 {
            return Err(bad("no digits"));
        }
        if matches!(self.peek_byte(end), Some(b'e' | b'E')) {
            let mut exp = end + 1;
            if matches!(self.peek_byte(exp), Some(b'+' | b'-')) {
                exp += 1;
            }
            let exp_end = digits_from(exp);
            if exp_end == exp {
                return Err(bad("exponent has no digits"));
            }
            end = exp_end;
        }
        if self.peek_byte(end) == Some(b'.') {
            return Err(bad("second decimal point"));
        }
        let text = &self.input[start..end];
        let value: f64 = text.parse().map_err(|_| bad(text))?;
        if !value.is_finite() {
            return Err(bad("value out of range"));
        }
        self.pos = end;
        Ok(Token {
            kind: TokenKind::Number(value),
            position: start,
        })
    }
}

/// Lexes the whole input. The returned list always ends with `End`.
pub fn tokenize(input: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let mut lexer = Lexer::new(input);
    let mut tokens = Vec::new();
    loop {
        let token = lexer.next_token()?;
        tokens.push(token);
        if token.kind == TokenKind::End {
            return Ok(tokens);
        }
    }
}
