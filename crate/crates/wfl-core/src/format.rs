//! Line-oriented text format for structures.
//!
//! ```text
//! signature graphs
//! domain 3
//! rel E 2
//! E 0 1
//! E 1 0
//! ```
//!
//! `#` starts a comment anywhere on a line; blank lines are skipped. The
//! serializer emits relations in declaration order with tuples sorted
//! lexicographically, so canonical files round-trip bit-exactly.

use std::sync::Arc;

use thiserror::Error;

use crate::structure::{FiniteStructure, Signature, SignatureError, Violation};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected `{expected}`, got `{got}`")]
    Expected {
        line: usize,
        expected: &'static str,
        got: String,
    },
    #[error("line {line}: malformed number `{token}`")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: unknown relation symbol `{symbol}`")]
    UnknownSymbol { line: usize, symbol: String },
    #[error("line {line}: {source}")]
    Signature { line: usize, source: SignatureError },
    #[error("line {line}: {source}")]
    Structure { line: usize, source: Violation },
    #[error("unexpected end of input, expected `{0}`")]
    UnexpectedEof(&'static str),
    #[error("line {line}: trailing input `{got}`")]
    Trailing { line: usize, got: String },
}

/// Comment-stripping cursor over the meaningful lines of a text file.
pub struct LineCursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> LineCursor<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let content = content.trim();
            if !content.is_empty() {
                lines.push((i + 1, content));
            }
        }
        LineCursor { lines, pos: 0 }
    }

    pub fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        let l = self.peek();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }
}

pub(crate) fn parse_usize(line: usize, token: &str) -> Result<usize, ParseError> {
    token.parse().map_err(|_| ParseError::BadNumber {
        line,
        token: token.to_string(),
    })
}

/// Parses one structure block starting at the cursor. Stops at the first
/// line that does not belong to the block, leaving it unconsumed.
pub fn parse_structure_block(cursor: &mut LineCursor<'_>) -> Result<FiniteStructure, ParseError> {
    let (line, text) = cursor
        .next_line()
        .ok_or(ParseError::UnexpectedEof("signature <name>"))?;
    let name = match text.strip_prefix("signature ") {
        Some(rest) => rest.trim().to_string(),
        None => {
            return Err(ParseError::Expected {
                line,
                expected: "signature <name>",
                got: text.to_string(),
            })
        }
    };

    let (line, text) = cursor
        .next_line()
        .ok_or(ParseError::UnexpectedEof("domain <n>"))?;
    let domain = match text.strip_prefix("domain ") {
        Some(rest) => parse_usize(line, rest.trim())?,
        None => {
            return Err(ParseError::Expected {
                line,
                expected: "domain <n>",
                got: text.to_string(),
            })
        }
    };

    let mut relations: Vec<(String, usize)> = Vec::new();
    let mut tuples: Vec<Vec<Vec<usize>>> = Vec::new();
    while let Some((line, text)) = cursor.peek() {
        let mut toks = text.split_whitespace();
        let head = toks.next().unwrap();
        if head == "rel" {
            cursor.next_line();
            let sym = toks.next().ok_or(ParseError::Expected {
                line,
                expected: "rel <symbol> <arity>",
                got: text.to_string(),
            })?;
            let arity = parse_usize(
                line,
                toks.next().ok_or(ParseError::Expected {
                    line,
                    expected: "rel <symbol> <arity>",
                    got: text.to_string(),
                })?,
            )?;
            relations.push((sym.to_string(), arity));
            tuples.push(Vec::new());
        } else if let Some(idx) = relations.iter().position(|(s, _)| s == head) {
            cursor.next_line();
            let mut t = Vec::new();
            for tok in toks {
                t.push(parse_usize(line, tok)?);
            }
            tuples[idx].push(t);
        } else {
            break;
        }
    }

    let first_line = line_of_start(cursor);
    let sig = Signature::new(name, relations).map_err(|source| ParseError::Signature {
        line: first_line,
        source,
    })?;
    FiniteStructure::try_new(Arc::new(sig), domain, tuples).map_err(|source| {
        ParseError::Structure {
            line: first_line,
            source,
        }
    })
}

fn line_of_start(cursor: &LineCursor<'_>) -> usize {
    cursor.peek().map(|(l, _)| l).unwrap_or(0)
}

/// Parses a file containing exactly one structure.
pub fn parse_structure(text: &str) -> Result<FiniteStructure, ParseError> {
    let mut cursor = LineCursor::new(text);
    let s = parse_structure_block(&mut cursor)?;
    if let Some((line, got)) = cursor.peek() {
        return Err(ParseError::Trailing {
            line,
            got: got.to_string(),
        });
    }
    Ok(s)
}

/// Canonical serialization: relations in declaration order, tuples sorted.
pub fn serialize_structure(s: &FiniteStructure) -> String {
    let mut out = String::new();
    let sig = s.signature();
    out.push_str(&format!("signature {}\n", sig.name()));
    out.push_str(&format!("domain {}\n", s.domain_size()));
    for rel in 0..sig.relation_count() {
        let (sym, arity) = &sig.relations()[rel];
        out.push_str(&format!("rel {} {}\n", sym, arity));
        for t in s.tuples(rel) {
            out.push_str(sym);
            for &e in t {
                out.push_str(&format!(" {}", e));
            }
            out.push('\n');
        }
    }
    out
}
