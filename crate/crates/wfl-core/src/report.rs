//! Deterministic report rendering and parsing. Reports with an identical
//! run configuration are byte-identical except for the trailing timing
//! comment; every witness block re-parses into the core types so checkers
//! can replay it.

use std::sync::Arc;

use crate::amalgam::Span;
use crate::embedding::Embedding;
use crate::format::{parse_structure_block, serialize_structure, LineCursor};
use crate::structure::FiniteStructure;
use crate::verdict::{CertificateKind, SearchBudget, Verdict, VerdictStatus, Witness};

pub fn budget_line(b: &SearchBudget) -> String {
    format!(
        "budget small {} ext {} steps {} seed {}",
        b.small_size, b.ext_size, b.steps, b.seed
    )
}

fn ints(map: &[usize]) -> String {
    map.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn block(s: &FiniteStructure) -> String {
    serialize_structure(s)
}

/// Renders the full report: header, verdict line, witness block. The caller
/// appends the timing comment.
pub fn render(command: &str, class: &str, budget: &SearchBudget, verdict: &Verdict) -> String {
    let mut out = String::new();
    out.push_str("wfl-report 1\n");
    out.push_str(&format!("command {}\n", command));
    out.push_str(&format!("class {}\n", class));
    out.push_str(&budget_line(budget));
    out.push('\n');
    out.push_str(&format!("verdict {}\n", verdict.status()));
    if let Some(w) = verdict.witness() {
        render_witness(&mut out, w);
    }
    out
}

fn render_witness(out: &mut String, w: &Witness) {
    match w {
        Witness::Certificate { kind, arrow } => {
            out.push_str(&format!("witness certificate {}\n", kind));
            out.push_str("source\n");
            out.push_str(&block(arrow.source()));
            out.push_str("target\n");
            out.push_str(&block(arrow.target()));
            out.push_str(&format!("map {}\n", ints(arrow.map())));
        }
        Witness::SpanRefuted {
            base,
            left,
            right,
            bound,
        } => {
            out.push_str(&format!("witness span bound {}\n", bound));
            out.push_str("shared\n");
            out.push_str(&block(base.source()));
            out.push_str("over\n");
            out.push_str(&block(base.target()));
            out.push_str("leftside\n");
            out.push_str(&block(left.target()));
            out.push_str("rightside\n");
            out.push_str(&block(right.target()));
            out.push_str(&format!("e {}\n", ints(base.map())));
            out.push_str(&format!("f {}\n", ints(left.map())));
            out.push_str(&format!("g {}\n", ints(right.map())));
        }
        Witness::Extensions(table) => {
            out.push_str(&format!("witness extensions {}\n", table.len()));
            for (e, kind) in table {
                out.push_str(&format!("entry {}\n", kind));
                out.push_str("source\n");
                out.push_str(&block(e.source()));
                out.push_str("target\n");
                out.push_str(&block(e.target()));
                out.push_str(&format!("map {}\n", ints(e.map())));
            }
        }
        Witness::Joint(table) => {
            out.push_str(&format!("witness joint {}\n", table.len()));
            for (l, r) in table {
                out.push_str("entry\n");
                out.push_str("firstobject\n");
                out.push_str(&block(l.source()));
                out.push_str("secondobject\n");
                out.push_str(&block(r.source()));
                out.push_str("codomain\n");
                out.push_str(&block(l.target()));
                out.push_str(&format!("leftmap {}\n", ints(l.map())));
                out.push_str(&format!("rightmap {}\n", ints(r.map())));
            }
        }
    }
}

#[derive(Debug)]
pub struct ParsedReport {
    pub command: String,
    pub class: String,
    pub budget: SearchBudget,
    pub status: VerdictStatus,
    pub witness: Option<ParsedWitness>,
}

#[derive(Debug)]
pub enum ParsedWitness {
    Certificate {
        kind: CertificateKind,
        arrow: Embedding,
    },
    Span {
        span: Span,
        bound: usize,
    },
    Extensions(Vec<(Embedding, CertificateKind)>),
    Joint(Vec<(Embedding, Embedding)>),
}

fn fail(line: usize, what: &str) -> String {
    format!("report line {}: {}", line, what)
}

fn expect_tag<'a>(cursor: &mut LineCursor<'a>, tag: &str) -> Result<(usize, &'a str), String> {
    let (line, text) = cursor
        .next_line()
        .ok_or_else(|| format!("unexpected end of report, expected `{tag}`"))?;
    if text == tag || text.starts_with(&format!("{tag} ")) {
        Ok((line, text))
    } else {
        Err(fail(line, &format!("expected `{tag}`, got `{text}`")))
    }
}

fn parse_map(text: &str) -> Result<Vec<usize>, String> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad map entry `{t}`")))
        .collect()
}

fn parse_block(cursor: &mut LineCursor<'_>) -> Result<Arc<FiniteStructure>, String> {
    parse_structure_block(cursor)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

/// Parses a rendered report back into core types (timing comments are
/// stripped by the cursor).
pub fn parse(text: &str) -> Result<ParsedReport, String> {
    let mut cursor = LineCursor::new(text);
    expect_tag(&mut cursor, "wfl-report 1")?;
    let (_, cmd) = expect_tag(&mut cursor, "command")?;
    let command = cmd.trim_start_matches("command").trim().to_string();
    let (_, cls) = expect_tag(&mut cursor, "class")?;
    let class = cls.trim_start_matches("class").trim().to_string();
    let (line, b) = expect_tag(&mut cursor, "budget")?;
    let toks: Vec<&str> = b.split_whitespace().collect();
    if toks.len() != 9 {
        return Err(fail(line, "malformed budget line"));
    }
    let budget = SearchBudget::new(
        toks[2].parse().map_err(|_| fail(line, "bad small"))?,
        toks[4].parse().map_err(|_| fail(line, "bad ext"))?,
        toks[6].parse().map_err(|_| fail(line, "bad steps"))?,
        toks[8].parse().map_err(|_| fail(line, "bad seed"))?,
    )
    .map_err(|e| fail(line, &e.to_string()))?;
    let (line, v) = expect_tag(&mut cursor, "verdict")?;
    let status = match v.trim_start_matches("verdict").trim() {
        "holds" => VerdictStatus::Holds,
        "fails" => VerdictStatus::Fails,
        "unknown-at-bound" => VerdictStatus::UnknownAtBound,
        other => return Err(fail(line, &format!("unknown verdict `{other}`"))),
    };
    let witness = match cursor.peek() {
        None => None,
        Some((line, w)) => {
            cursor.next_line();
            let toks: Vec<&str> = w.split_whitespace().collect();
            if toks.first() != Some(&"witness") || toks.len() < 2 {
                return Err(fail(line, "expected witness header"));
            }
            Some(match toks[1] {
                "certificate" => {
                    let kind = CertificateKind::parse(toks.get(2).copied().unwrap_or(""))
                        .ok_or_else(|| fail(line, "unknown certificate kind"))?;
                    expect_tag(&mut cursor, "source")?;
                    let source = parse_block(&mut cursor)?;
                    expect_tag(&mut cursor, "target")?;
                    let target = parse_block(&mut cursor)?;
                    let (_, m) = expect_tag(&mut cursor, "map")?;
                    let map = parse_map(m.trim_start_matches("map"))?;
                    let arrow = Embedding::new(source, target, map).map_err(|e| e.to_string())?;
                    ParsedWitness::Certificate { kind, arrow }
                }
                "span" => {
                    let bound: usize = toks
                        .get(3)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(line, "missing span bound"))?;
                    expect_tag(&mut cursor, "shared")?;
                    let a = parse_block(&mut cursor)?;
                    expect_tag(&mut cursor, "over")?;
                    let b2 = parse_block(&mut cursor)?;
                    expect_tag(&mut cursor, "leftside")?;
                    let c = parse_block(&mut cursor)?;
                    expect_tag(&mut cursor, "rightside")?;
                    let d = parse_block(&mut cursor)?;
                    let (_, e) = expect_tag(&mut cursor, "e")?;
                    let e_map = parse_map(e.trim_start_matches('e'))?;
                    let (_, f) = expect_tag(&mut cursor, "f")?;
                    let f_map = parse_map(f.trim_start_matches('f'))?;
                    let (_, g) = expect_tag(&mut cursor, "g")?;
                    let g_map = parse_map(g.trim_start_matches('g'))?;
                    let base = Embedding::new(a, b2.clone(), e_map).map_err(|e| e.to_string())?;
                    let left = Embedding::new(b2.clone(), c, f_map).map_err(|e| e.to_string())?;
                    let right = Embedding::new(b2, d, g_map).map_err(|e| e.to_string())?;
                    let span = Span::new(base, left, right).map_err(|e| e.to_string())?;
                    ParsedWitness::Span { span, bound }
                }
                "extensions" => {
                    let count: usize = toks
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(line, "missing extension count"))?;
                    let mut table = Vec::with_capacity(count);
                    for _ in 0..count {
                        let (line, entry) = expect_tag(&mut cursor, "entry")?;
                        let kind = CertificateKind::parse(entry.trim_start_matches("entry").trim())
                            .ok_or_else(|| fail(line, "unknown certificate kind"))?;
                        expect_tag(&mut cursor, "source")?;
                        let source = parse_block(&mut cursor)?;
                        expect_tag(&mut cursor, "target")?;
                        let target = parse_block(&mut cursor)?;
                        let (_, m) = expect_tag(&mut cursor, "map")?;
                        let map = parse_map(m.trim_start_matches("map"))?;
                        table.push((
                            Embedding::new(source, target, map).map_err(|e| e.to_string())?,
                            kind,
                        ));
                    }
                    ParsedWitness::Extensions(table)
                }
                "joint" => {
                    let count: usize = toks
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(line, "missing joint count"))?;
                    let mut table = Vec::with_capacity(count);
                    for _ in 0..count {
                        expect_tag(&mut cursor, "entry")?;
                        expect_tag(&mut cursor, "firstobject")?;
                        let a = parse_block(&mut cursor)?;
                        expect_tag(&mut cursor, "secondobject")?;
                        let b2 = parse_block(&mut cursor)?;
                        expect_tag(&mut cursor, "codomain")?;
                        let s = parse_block(&mut cursor)?;
                        let (_, lm) = expect_tag(&mut cursor, "leftmap")?;
                        let left = parse_map(lm.trim_start_matches("leftmap"))?;
                        let (_, rm) = expect_tag(&mut cursor, "rightmap")?;
                        let right = parse_map(rm.trim_start_matches("rightmap"))?;
                        table.push((
                            Embedding::new(a, s.clone(), left).map_err(|e| e.to_string())?,
                            Embedding::new(b2, s, right).map_err(|e| e.to_string())?,
                        ));
                    }
                    ParsedWitness::Joint(table)
                }
                other => return Err(fail(line, &format!("unknown witness tag `{other}`"))),
            })
        }
    };
    Ok(ParsedReport {
        command,
        class,
        budget,
        status,
        witness,
    })
}
