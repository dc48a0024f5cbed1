use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{ParseError, ParseErrorKind, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Token {
    Ident(String),
    Int(usize),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Int(n) => format!("`{n}`"),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Semi => "`;`".into(),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Token, Span)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let single = match b {
            b'{' => Some(Token::LBrace),
            b'}' => Some(Token::RBrace),
            b'[' => Some(Token::LBracket),
            b']' => Some(Token::RBracket),
            b',' => Some(Token::Comma),
            b';' => Some(Token::Semi),
            _ => None,
        };
        if let Some(token) = single {
            tokens.push((token, Span::new(i, i + 1)));
            i += 1;
        } else if b.is_ascii_whitespace() {
            i += 1;
        } else if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if b.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((Token::Ident(text[start..i].into()), Span::new(start, i)));
        } else if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let span = Span::new(start, i);
            let value = text[start..i].parse::<usize>().map_err(|_| {
                ParseError::new(
                    ParseErrorKind::Lexical,
                    span,
                    "integer literal is too large",
                )
            })?;
            tokens.push((Token::Int(value), span));
        } else {
            // report the whole (possibly multi-byte) character
            let ch = text[i..]
                .chars()
                .next()
                .expect("index is on a char boundary");
            let span = Span::new(i, i + ch.len_utf8());
            return Err(ParseError::new(
                ParseErrorKind::Lexical,
                span,
                format!("unexpected character {ch:?}"),
            ));
        }
    }
    Ok(tokens)
}
