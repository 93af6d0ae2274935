//! Three-valued verdicts with replayable witnesses, and the search budget
//! that every bounded checker runs under.

use thiserror::Error;

use crate::embedding::Embedding;

/// Bounds for every search: `small_size` plays the role the finite setting
/// assigns to "presentable", `ext_size` caps amalgam and extension searches,
/// `steps` caps chain construction, and `seed` drives the deterministic
/// scheduling perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SearchBudget {
    pub small_size: usize,
    pub ext_size: usize,
    pub steps: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BudgetError {
    #[error("small-size must be at least 1")]
    SmallSizeZero,
    #[error("ext-size ({ext}) must be at least small-size ({small})")]
    ExtBelowSmall { small: usize, ext: usize },
}

impl SearchBudget {
    pub fn new(
        small_size: usize,
        ext_size: usize,
        steps: usize,
        seed: u64,
    ) -> Result<Self, BudgetError> {
        if small_size == 0 {
            return Err(BudgetError::SmallSizeZero);
        }
        if ext_size < small_size {
            return Err(BudgetError::ExtBelowSmall {
                small: small_size,
                ext: ext_size,
            });
        }
        Ok(SearchBudget {
            small_size,
            ext_size,
            steps,
            seed,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictStatus {
    Holds,
    Fails,
    UnknownAtBound,
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerdictStatus::Holds => write!(f, "holds"),
            VerdictStatus::Fails => write!(f, "fails"),
            VerdictStatus::UnknownAtBound => write!(f, "unknown-at-bound"),
        }
    }
}

/// How a holds-witness was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertificateKind {
    /// spans complete freely over the shared part
    FreeAmalgam,
    /// spans complete by interleaving the two extensions
    OrderInterleaving,
    /// every component of the target meeting the image is a completed clique
    CompletedComponents,
    /// exhaustive bounded span search
    ExhaustiveSpans,
}

impl std::fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertificateKind::FreeAmalgam => write!(f, "free-amalgam"),
            CertificateKind::OrderInterleaving => write!(f, "interleaving"),
            CertificateKind::CompletedComponents => write!(f, "completion"),
            CertificateKind::ExhaustiveSpans => write!(f, "span-table"),
        }
    }
}

impl CertificateKind {
    pub fn parse(s: &str) -> Option<CertificateKind> {
        match s {
            "free-amalgam" => Some(CertificateKind::FreeAmalgam),
            "interleaving" => Some(CertificateKind::OrderInterleaving),
            "completion" => Some(CertificateKind::CompletedComponents),
            "span-table" => Some(CertificateKind::ExhaustiveSpans),
            _ => None,
        }
    }
}

/// Witness payloads. `Holds` and `Fails` verdicts always carry one;
/// `UnknownAtBound` never does.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// An arrow certified amalgamable, with how.
    Certificate {
        kind: CertificateKind,
        arrow: Embedding,
    },
    /// A span `(base e, left f, right g)` with no amalgam up to `bound`;
    /// the search up to that bound was complete.
    SpanRefuted {
        base: Embedding,
        left: Embedding,
        right: Embedding,
        bound: usize,
    },
    /// Per-object amalgamable arrows (AP/WAP tables).
    Extensions(Vec<(Embedding, CertificateKind)>),
    /// Per-pair joint embeddings into a common codomain.
    Joint(Vec<(Embedding, Embedding)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    status: VerdictStatus,
    witness: Option<Witness>,
    budget: SearchBudget,
}

impl Verdict {
    pub fn holds(witness: Witness, budget: SearchBudget) -> Verdict {
        Verdict {
            status: VerdictStatus::Holds,
            witness: Some(witness),
            budget,
        }
    }

    pub fn fails(witness: Witness, budget: SearchBudget) -> Verdict {
        Verdict {
            status: VerdictStatus::Fails,
            witness: Some(witness),
            budget,
        }
    }

    pub fn unknown(budget: SearchBudget) -> Verdict {
        Verdict {
            status: VerdictStatus::UnknownAtBound,
            witness: None,
            budget,
        }
    }

    pub fn status(&self) -> VerdictStatus {
        self.status
    }

    pub fn is_holds(&self) -> bool {
        self.status == VerdictStatus::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == VerdictStatus::Fails
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }
}
