//! Rule-based word tokenizer with exact detokenization.
//!
//! Text is split on whitespace. Within each whitespace-delimited chunk,
//! leading and trailing non-alphanumeric characters become single-character
//! punctuation tokens and the remaining core stays whole, so intra-word
//! apostrophes and hyphens (`I'm`, `well-known`) stay attached. Each token
//! records the exact whitespace preceding it; whitespace after the last token
//! is kept in a final [`TokenKind::Whitespace`] token. Concatenating
//! `space_before + surface` over the stream reproduces the input byte for byte.
//!
//! No lemmatization or stemming is applied.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    /// Core containing at least one letter.
    Word,
    /// Core with digits but no letters (`2024`, `3.14`, `1,000`).
    Number,
    /// A single punctuation or symbol character.
    Punctuation,
    /// Trailing whitespace after the last token.
    Whitespace,
}

impl TokenKind {
    /// Word and number tokens are the ones looked up in a lexicon.
    pub fn is_lexical(self) -> bool {
        matches!(self, TokenKind::Word | TokenKind::Number)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    /// Exact whitespace between the previous token and this one.
    #[serde(default)]
    pub space_before: String,
}

impl Token {
    pub fn preceding_space(&self) -> bool {
        !self.space_before.is_empty()
    }

    /// Same kind and spacing, new surface.
    pub fn with_surface(&self, surface: impl Into<String>) -> Token {
        Token {
            surface: surface.into(),
            kind: self.kind,
            space_before: self.space_before.clone(),
        }
    }
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pending_space = String::new();
    let mut rest = text;
    while !rest.is_empty() {
        let ws_len = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
        pending_space.push_str(&rest[..ws_len]);
        rest = &rest[ws_len..];
        if rest.is_empty() {
            break;
        }
        let chunk_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        split_chunk(&rest[..chunk_len], std::mem::take(&mut pending_space), &mut tokens);
        rest = &rest[chunk_len..];
    }
    if !pending_space.is_empty() {
        tokens.push(Token {
            surface: pending_space,
            kind: TokenKind::Whitespace,
            space_before: String::new(),
        });
    }
    tokens
}

fn split_chunk(chunk: &str, space_before: String, out: &mut Vec<Token>) {
    let mut space = Some(space_before);
    let mut push = |surface: &str, kind: TokenKind| {
        out.push(Token {
            surface: surface.to_string(),
            kind,
            space_before: space.take().unwrap_or_default(),
        });
    };

    let core_start = chunk.char_indices().find(|(_, c)| c.is_alphanumeric()).map(|(i, _)| i);
    let Some(core_start) = core_start else {
        for (i, c) in chunk.char_indices() {
            push(&chunk[i..i + c.len_utf8()], TokenKind::Punctuation);
        }
        return;
    };
    // The core ends after the last alphanumeric character plus any combining
    // marks attached to it.
    let mut core_end = core_start;
    let mut in_core_tail = false;
    for (i, c) in chunk.char_indices() {
        if c.is_alphanumeric() {
            core_end = i + c.len_utf8();
            in_core_tail = true;
        } else if in_core_tail && is_combining_mark(c) {
            core_end = i + c.len_utf8();
        } else {
            in_core_tail = false;
        }
    }

    for (i, c) in chunk[..core_start].char_indices() {
        push(&chunk[i..i + c.len_utf8()], TokenKind::Punctuation);
    }
    let core = &chunk[core_start..core_end];
    let kind = if core.chars().any(char::is_alphabetic) {
        TokenKind::Word
    } else {
        TokenKind::Number
    };
    push(core, kind);
    for (i, c) in chunk[core_end..].char_indices() {
        let at = core_end + i;
        push(&chunk[at..at + c.len_utf8()], TokenKind::Punctuation);
    }
}

fn is_combining_mark(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x0483..=0x0489 | 0x0591..=0x05BD | 0x0610..=0x061A | 0x064B..=0x065F
        | 0x0E31 | 0x0E34..=0x0E3A | 0x0E47..=0x0E4E
        | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x200C..=0x200D | 0x20D0..=0x20FF | 0xFE00..=0xFE0F | 0xFE20..=0xFE2F)
}

pub fn detokenize(tokens: &[Token]) -> String {
    let len = tokens.iter().map(|t| t.space_before.len() + t.surface.len()).sum();
    let mut out = String::with_capacity(len);
    for t in tokens {
        out.push_str(&t.space_before);
        out.push_str(&t.surface);
    }
    out
}
