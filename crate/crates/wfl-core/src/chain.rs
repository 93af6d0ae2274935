//! Chains of structures with connecting embeddings, and the `wfc` checkpoint
//! format. A chain's truncation (its last stage) stands in for the colimit
//! in every verifiable claim.

use std::sync::Arc;

use thiserror::Error;

use crate::embedding::{Embedding, EmbeddingError};
use crate::format::{parse_structure_block, parse_usize, LineCursor, ParseError};
use crate::structure::FiniteStructure;
use crate::verdict::{SearchBudget, VerdictStatus};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("link {index} connects stages {from}->{to}, expected {index}->{next}")]
    LinkEndpoints {
        index: usize,
        from: usize,
        to: usize,
        next: usize,
    },
    #[error("chain has {stages} stages but {links} links")]
    LinkCount { stages: usize, links: usize },
    #[error("line {line}: bad chain header `{got}`")]
    Header { line: usize, got: String },
    #[error("chain is empty")]
    Empty,
    #[error("stage {0} is not a member of the class")]
    NotMember(usize),
}

/// One processed diagram: when it entered the queue, the queue length at
/// that moment, when it was processed, and the diagram data itself
/// (canonical-form references plus the three maps).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramLogEntry {
    pub enqueued_at_step: usize,
    pub queue_len_at_enqueue: usize,
    pub processed_at_step: usize,
    /// stage index the recorded `u` map targets
    pub u_stage: usize,
    pub a_form: String,
    pub b_form: String,
    pub c_form: String,
    pub e_map: Vec<usize>,
    pub u_map: Vec<usize>,
    pub g_map: Vec<usize>,
}

/// An ω-indexed chain truncation: stages, connecting links, per-link
/// amalgamability verdicts, and the provenance needed to reproduce the run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    class_name: String,
    budget: SearchBudget,
    stages: Vec<Arc<FiniteStructure>>,
    links: Vec<Embedding>,
    link_verdicts: Vec<VerdictStatus>,
    log: Vec<DiagramLogEntry>,
}

impl Chain {
    pub fn new(class_name: &str, budget: SearchBudget, seed: Arc<FiniteStructure>) -> Chain {
        Chain {
            class_name: class_name.to_string(),
            budget,
            stages: vec![seed],
            links: Vec::new(),
            link_verdicts: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn from_parts(
        class_name: &str,
        budget: SearchBudget,
        stages: Vec<Arc<FiniteStructure>>,
        links: Vec<Embedding>,
        link_verdicts: Vec<VerdictStatus>,
        log: Vec<DiagramLogEntry>,
    ) -> Result<Chain, ChainError> {
        if stages.is_empty() {
            return Err(ChainError::Empty);
        }
        if links.len() + 1 != stages.len() || link_verdicts.len() != links.len() {
            return Err(ChainError::LinkCount {
                stages: stages.len(),
                links: links.len(),
            });
        }
        for (i, link) in links.iter().enumerate() {
            if link.source() != &stages[i] || link.target() != &stages[i + 1] {
                return Err(ChainError::LinkEndpoints {
                    index: i,
                    from: i,
                    to: i + 1,
                    next: i + 1,
                });
            }
        }
        Ok(Chain {
            class_name: class_name.to_string(),
            budget,
            stages,
            links,
            link_verdicts,
            log,
        })
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, i: usize) -> &Arc<FiniteStructure> {
        &self.stages[i]
    }

    pub fn stages(&self) -> &[Arc<FiniteStructure>] {
        &self.stages
    }

    pub fn last_stage(&self) -> &Arc<FiniteStructure> {
        self.stages.last().expect("chains are nonempty")
    }

    pub fn link(&self, i: usize) -> &Embedding {
        &self.links[i]
    }

    pub fn links(&self) -> &[Embedding] {
        &self.links
    }

    pub fn link_verdict(&self, i: usize) -> VerdictStatus {
        self.link_verdicts[i]
    }

    pub fn log(&self) -> &[DiagramLogEntry] {
        &self.log
    }

    pub(crate) fn push_stage(
        &mut self,
        stage: Arc<FiniteStructure>,
        link: Embedding,
        verdict: VerdictStatus,
    ) {
        debug_assert!(link.source() == self.last_stage() && link.target() == &stage);
        self.stages.push(stage);
        self.links.push(link);
        self.link_verdicts.push(verdict);
    }

    pub(crate) fn push_log(&mut self, entry: DiagramLogEntry) {
        self.log.push(entry);
    }

    /// The composite embedding `stage i -> stage j` (identity when `i == j`).
    pub fn composite(&self, i: usize, j: usize) -> Embedding {
        assert!(i <= j && j < self.stages.len());
        let mut acc = Embedding::identity(&self.stages[i]);
        for k in i..j {
            acc = acc
                .compose(&self.links[k])
                .expect("consecutive links compose");
        }
        acc
    }

    /// True when every link is a prefix inclusion (chains built here always
    /// are); transports along such chains are free.
    pub fn all_inclusions(&self) -> bool {
        self.links.iter().all(|l| l.is_identity_inclusion())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("wfc 1\n");
        out.push_str(&format!("class {}\n", self.class_name));
        out.push_str(&format!(
            "budget small {} ext {} steps {} seed {}\n",
            self.budget.small_size, self.budget.ext_size, self.budget.steps, self.budget.seed
        ));
        for (i, stage) in self.stages.iter().enumerate() {
            out.push_str(&format!("stage {}\n", i));
            out.push_str(&crate::format::serialize_structure(stage));
        }
        for (i, link) in self.links.iter().enumerate() {
            out.push_str(&format!(
                "link {} {} {}",
                i,
                i + 1,
                verdict_token(self.link_verdicts[i])
            ));
            for &v in link.map() {
                out.push_str(&format!(" {}", v));
            }
            out.push('\n');
        }
        for d in &self.log {
            out.push_str(&format!(
                "diag enq {} qlen {} proc {} stage {} A {} B {} C {} e{} u{} g{}\n",
                d.enqueued_at_step,
                d.queue_len_at_enqueue,
                d.processed_at_step,
                d.u_stage,
                d.a_form,
                d.b_form,
                d.c_form,
                ints(&d.e_map),
                ints(&d.u_map),
                ints(&d.g_map),
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Chain, ChainError> {
        let mut cursor = LineCursor::new(text);
        let (line, head) = cursor
            .next_line()
            .ok_or(ParseError::UnexpectedEof("wfc 1"))?;
        if head != "wfc 1" {
            return Err(ChainError::Header {
                line,
                got: head.to_string(),
            });
        }
        let (line, text_line) = cursor
            .next_line()
            .ok_or(ParseError::UnexpectedEof("class <name>"))?;
        let class_name = text_line
            .strip_prefix("class ")
            .ok_or_else(|| ChainError::Header {
                line,
                got: text_line.to_string(),
            })?
            .trim()
            .to_string();
        let (line, text_line) = cursor
            .next_line()
            .ok_or(ParseError::UnexpectedEof("budget ..."))?;
        let budget = parse_budget_line(line, text_line)?;

        let mut stages: Vec<Arc<FiniteStructure>> = Vec::new();
        while let Some((_, l)) = cursor.peek() {
            if !l.starts_with("stage ") {
                break;
            }
            cursor.next_line();
            let s = parse_structure_block(&mut cursor)?;
            stages.push(Arc::new(s));
        }
        if stages.is_empty() {
            return Err(ChainError::Empty);
        }

        let mut links = Vec::new();
        let mut verdicts = Vec::new();
        while let Some((line, l)) = cursor.peek() {
            if !l.starts_with("link ") {
                break;
            }
            cursor.next_line();
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() < 4 {
                return Err(ChainError::Header {
                    line,
                    got: l.to_string(),
                });
            }
            let from = parse_usize(line, toks[1])?;
            let to = parse_usize(line, toks[2])?;
            if to != from + 1 || from != links.len() || to >= stages.len() {
                return Err(ChainError::LinkEndpoints {
                    index: links.len(),
                    from,
                    to,
                    next: links.len() + 1,
                });
            }
            let verdict = parse_verdict_token(line, toks[3])?;
            let mut map = Vec::new();
            for t in &toks[4..] {
                map.push(parse_usize(line, t)?);
            }
            let link = Embedding::new(stages[from].clone(), stages[to].clone(), map)?;
            links.push(link);
            verdicts.push(verdict);
        }
        if links.len() + 1 != stages.len() {
            return Err(ChainError::LinkCount {
                stages: stages.len(),
                links: links.len(),
            });
        }

        let mut log = Vec::new();
        while let Some((line, l)) = cursor.next_line() {
            if !l.starts_with("diag ") {
                return Err(ChainError::Header {
                    line,
                    got: l.to_string(),
                });
            }
            log.push(parse_diag_line(line, l)?);
        }

        Ok(Chain {
            class_name,
            budget,
            stages,
            links,
            link_verdicts: verdicts,
            log,
        })
    }

    /// Checks that every stage is a member of `class`.
    pub fn validate_members(&self, class: &crate::class::StructureClass) -> Result<(), ChainError> {
        for (i, s) in self.stages.iter().enumerate() {
            if !class.is_member(s) {
                return Err(ChainError::NotMember(i));
            }
        }
        Ok(())
    }
}

fn ints(v: &[usize]) -> String {
    let mut s = String::new();
    for x in v {
        s.push_str(&format!(" {}", x));
    }
    s
}

fn verdict_token(v: VerdictStatus) -> &'static str {
    match v {
        VerdictStatus::Holds => "holds",
        VerdictStatus::Fails => "fails",
        VerdictStatus::UnknownAtBound => "unknown",
    }
}

fn parse_verdict_token(line: usize, tok: &str) -> Result<VerdictStatus, ChainError> {
    match tok {
        "holds" => Ok(VerdictStatus::Holds),
        "fails" => Ok(VerdictStatus::Fails),
        "unknown" => Ok(VerdictStatus::UnknownAtBound),
        _ => Err(ChainError::Header {
            line,
            got: tok.to_string(),
        }),
    }
}

fn parse_budget_line(line: usize, text: &str) -> Result<SearchBudget, ChainError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != 9
        || toks[0] != "budget"
        || toks[1] != "small"
        || toks[3] != "ext"
        || toks[5] != "steps"
        || toks[7] != "seed"
    {
        return Err(ChainError::Header {
            line,
            got: text.to_string(),
        });
    }
    let small = parse_usize(line, toks[2])?;
    let ext = parse_usize(line, toks[4])?;
    let steps = parse_usize(line, toks[6])?;
    let seed: u64 = toks[8].parse().map_err(|_| {
        ChainError::Parse(ParseError::BadNumber {
            line,
            token: toks[8].to_string(),
        })
    })?;
    SearchBudget::new(small, ext, steps, seed).map_err(|_| ChainError::Header {
        line,
        got: text.to_string(),
    })
}

fn parse_diag_line(line: usize, text: &str) -> Result<DiagramLogEntry, ChainError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let bad = || ChainError::Header {
        line,
        got: text.to_string(),
    };
    let mut i = 0;
    let expect = |kw: &str, i: &mut usize| -> Result<(), ChainError> {
        if toks.get(*i) != Some(&kw) {
            return Err(bad());
        }
        *i += 1;
        Ok(())
    };
    expect("diag", &mut i)?;
    expect("enq", &mut i)?;
    let enq = parse_usize(line, toks.get(i).ok_or_else(bad)?)?;
    i += 1;
    expect("qlen", &mut i)?;
    let qlen = parse_usize(line, toks.get(i).ok_or_else(bad)?)?;
    i += 1;
    expect("proc", &mut i)?;
    let proc = parse_usize(line, toks.get(i).ok_or_else(bad)?)?;
    i += 1;
    expect("stage", &mut i)?;
    let u_stage = parse_usize(line, toks.get(i).ok_or_else(bad)?)?;
    i += 1;
    expect("A", &mut i)?;
    let a_form = toks.get(i).ok_or_else(bad)?.to_string();
    i += 1;
    expect("B", &mut i)?;
    let b_form = toks.get(i).ok_or_else(bad)?.to_string();
    i += 1;
    expect("C", &mut i)?;
    let c_form = toks.get(i).ok_or_else(bad)?.to_string();
    i += 1;
    expect("e", &mut i)?;
    let mut e_map = Vec::new();
    while i < toks.len() && toks[i] != "u" {
        e_map.push(parse_usize(line, toks[i])?);
        i += 1;
    }
    expect("u", &mut i)?;
    let mut u_map = Vec::new();
    while i < toks.len() && toks[i] != "g" {
        u_map.push(parse_usize(line, toks[i])?);
        i += 1;
    }
    expect("g", &mut i)?;
    let mut g_map = Vec::new();
    while i < toks.len() {
        g_map.push(parse_usize(line, toks[i])?);
        i += 1;
    }
    Ok(DiagramLogEntry {
        enqueued_at_step: enq,
        queue_len_at_enqueue: qlen,
        processed_at_step: proc,
        u_stage,
        a_form,
        b_form,
        c_form,
        e_map,
        u_map,
        g_map,
    })
}
