//! Finite relational structures over a declared signature.
//!
//! Elements of a structure are the contiguous integers `0..n-1`; relations
//! are stored as sorted, duplicate-free tuple sets. Everything is immutable
//! after construction, so values can be shared freely across threads.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A relational signature: a name plus an ordered list of `(symbol, arity)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    name: String,
    relations: Vec<(String, usize)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate relation symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("relation `{0}` declares arity 0, arities must be >= 1")]
    ZeroArity(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Signature {
    pub fn new(
        name: impl Into<String>,
        relations: Vec<(String, usize)>,
    ) -> Result<Self, SignatureError> {
        let name = name.into();
        if !valid_identifier(&name) {
            return Err(SignatureError::BadIdentifier(name));
        }
        for (i, (sym, arity)) in relations.iter().enumerate() {
            if !valid_identifier(sym) {
                return Err(SignatureError::BadIdentifier(sym.clone()));
            }
            if *arity == 0 {
                return Err(SignatureError::ZeroArity(sym.clone()));
            }
            if relations[..i].iter().any(|(s, _)| s == sym) {
                return Err(SignatureError::DuplicateSymbol(sym.clone()));
            }
        }
        Ok(Signature { name, relations })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].1
    }

    pub fn symbol(&self, rel: usize) -> &str {
        &self.relations[rel].0
    }

    pub fn relation_index(&self, symbol: &str) -> Option<usize> {
        self.relations.iter().position(|(s, _)| s == symbol)
    }
}

/// A finite relational structure. Tuples are kept flat per relation
/// (stride = arity), sorted lexicographically without duplicates.
/// The derived ordering (signature, size, tuple data) is the canonical
/// tie-break order used throughout the search code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteStructure {
    signature: Arc<Signature>,
    domain_size: usize,
    tuples: Vec<Vec<usize>>,
}

/// First violated invariant found by [`FiniteStructure::try_new`] or
/// [`FiniteStructure::validate`], with the offending tuple.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("relation `{relation}`: arity mismatch, expected {expected} indices but tuple {tuple:?} has {got}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
        tuple: Vec<usize>,
    },
    #[error("relation `{relation}`: index out of range in tuple {tuple:?}, domain size is {domain_size}")]
    IndexOutOfRange {
        relation: String,
        tuple: Vec<usize>,
        domain_size: usize,
    },
    #[error("expected tuple sets for {expected} relations, got {got}")]
    RelationCountMismatch { expected: usize, got: usize },
}

impl FiniteStructure {
    /// Validates and builds a structure from per-relation tuple lists.
    /// Tuples are sorted and de-duplicated; the first violated invariant is
    /// reported otherwise.
    pub fn try_new(
        signature: Arc<Signature>,
        domain_size: usize,
        relation_tuples: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self, Violation> {
        if relation_tuples.len() != signature.relation_count() {
            return Err(Violation::RelationCountMismatch {
                expected: signature.relation_count(),
                got: relation_tuples.len(),
            });
        }
        let mut flat = Vec::with_capacity(relation_tuples.len());
        for (rel, tuples) in relation_tuples.into_iter().enumerate() {
            let arity = signature.arity(rel);
            for t in &tuples {
                if t.len() != arity {
                    return Err(Violation::ArityMismatch {
                        relation: signature.symbol(rel).to_string(),
                        expected: arity,
                        got: t.len(),
                        tuple: t.clone(),
                    });
                }
                if let Some(&bad) = t.iter().find(|&&i| i >= domain_size) {
                    let _ = bad;
                    return Err(Violation::IndexOutOfRange {
                        relation: signature.symbol(rel).to_string(),
                        tuple: t.clone(),
                        domain_size,
                    });
                }
            }
            let mut tuples = tuples;
            tuples.sort();
            tuples.dedup();
            let mut f = Vec::with_capacity(tuples.len() * arity);
            for t in tuples {
                f.extend_from_slice(&t);
            }
            flat.push(f);
        }
        Ok(FiniteStructure {
            signature,
            domain_size,
            tuples: flat,
        })
    }

    /// The empty structure over `signature`.
    pub fn empty(signature: Arc<Signature>) -> Self {
        let rels = signature.relation_count();
        FiniteStructure {
            signature,
            domain_size: 0,
            tuples: vec![Vec::new(); rels],
        }
    }

    /// Builds from already-sorted flat tuple data. Callers must uphold the
    /// invariants; debug builds re-check them.
    pub(crate) fn from_sorted_flat(
        signature: Arc<Signature>,
        domain_size: usize,
        tuples: Vec<Vec<usize>>,
    ) -> Self {
        let s = FiniteStructure {
            signature,
            domain_size,
            tuples,
        };
        debug_assert!(s.validate().is_ok());
        debug_assert!(s.flat_is_sorted());
        s
    }

    fn flat_is_sorted(&self) -> bool {
        (0..self.signature.relation_count()).all(|rel| {
            let arity = self.signature.arity(rel);
            self.tuples[rel]
                .chunks_exact(arity)
                .collect::<Vec<_>>()
                .windows(2)
                .all(|w| w[0] < w[1])
        })
    }

    /// Re-checks all structure invariants, reporting the first violation.
    pub fn validate(&self) -> Result<(), Violation> {
        for rel in 0..self.signature.relation_count() {
            let arity = self.signature.arity(rel);
            if self.tuples[rel].len() % arity != 0 {
                return Err(Violation::ArityMismatch {
                    relation: self.signature.symbol(rel).to_string(),
                    expected: arity,
                    got: self.tuples[rel].len() % arity,
                    tuple: Vec::new(),
                });
            }
            for t in self.tuples[rel].chunks_exact(arity) {
                if t.iter().any(|&i| i >= self.domain_size) {
                    return Err(Violation::IndexOutOfRange {
                        relation: self.signature.symbol(rel).to_string(),
                        tuple: t.to_vec(),
                        domain_size: self.domain_size,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.domain_size
    }

    pub fn tuple_count(&self, rel: usize) -> usize {
        self.tuples[rel].len() / self.signature.arity(rel)
    }

    pub fn tuples(&self, rel: usize) -> impl Iterator<Item = &[usize]> {
        self.tuples[rel].chunks_exact(self.signature.arity(rel))
    }

    /// Membership test by binary search over the sorted tuple set.
    pub fn contains(&self, rel: usize, tuple: &[usize]) -> bool {
        let arity = self.signature.arity(rel);
        debug_assert_eq!(tuple.len(), arity);
        let chunks = self.tuples[rel].len() / arity;
        let (mut lo, mut hi) = (0usize, chunks);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let t = &self.tuples[rel][mid * arity..(mid + 1) * arity];
            match t.cmp(tuple) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Number of tuples of `rel` having `elem` at position `pos`.
    pub fn degree(&self, rel: usize, pos: usize, elem: usize) -> usize {
        self.tuples(rel).filter(|t| t[pos] == elem).count()
    }

    /// The induced substructure on `keep` (in the given order); `keep[i]`
    /// becomes element `i`. Indices must be distinct and in range.
    pub fn induced(&self, keep: &[usize]) -> FiniteStructure {
        let mut back = vec![usize::MAX; self.domain_size];
        for (new, &old) in keep.iter().enumerate() {
            debug_assert!(back[old] == usize::MAX);
            back[old] = new;
        }
        let mut rels = Vec::with_capacity(self.signature.relation_count());
        for rel in 0..self.signature.relation_count() {
            let mut tuples: Vec<Vec<usize>> = Vec::new();
            for t in self.tuples(rel) {
                if t.iter().all(|&i| back[i] != usize::MAX) {
                    tuples.push(t.iter().map(|&i| back[i]).collect());
                }
            }
            tuples.sort();
            let arity = self.signature.arity(rel);
            let mut f = Vec::with_capacity(tuples.len() * arity);
            for t in tuples {
                f.extend_from_slice(&t);
            }
            rels.push(f);
        }
        FiniteStructure::from_sorted_flat(self.signature.clone(), keep.len(), rels)
    }

    /// Disjoint union; elements of `other` are shifted up by `self.domain_size()`.
    pub fn disjoint_union(&self, other: &FiniteStructure) -> FiniteStructure {
        debug_assert_eq!(self.signature, other.signature);
        let shift = self.domain_size;
        let mut rels = Vec::with_capacity(self.signature.relation_count());
        for rel in 0..self.signature.relation_count() {
            let mut f = self.tuples[rel].clone();
            f.extend(other.tuples[rel].iter().map(|&i| i + shift));
            rels.push(f);
        }
        // shifted tuples all compare greater than originals only if arity-wise
        // lexicographic order is preserved, which holds since every shifted
        // index exceeds every original index
        FiniteStructure::from_sorted_flat(
            self.signature.clone(),
            self.domain_size + other.domain_size,
            rels,
        )
    }

    /// Relabels elements by `map` (old index -> new index), a bijection onto
    /// `0..domain_size`.
    pub fn relabel(&self, map: &[usize]) -> FiniteStructure {
        debug_assert_eq!(map.len(), self.domain_size);
        let mut rels = Vec::with_capacity(self.signature.relation_count());
        for rel in 0..self.signature.relation_count() {
            let arity = self.signature.arity(rel);
            let mut tuples: Vec<Vec<usize>> = self
                .tuples(rel)
                .map(|t| t.iter().map(|&i| map[i]).collect())
                .collect();
            tuples.sort();
            let mut f = Vec::with_capacity(tuples.len() * arity);
            for t in tuples {
                f.extend_from_slice(&t);
            }
            rels.push(f);
        }
        FiniteStructure::from_sorted_flat(self.signature.clone(), self.domain_size, rels)
    }
}

impl fmt::Debug for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[n={}", self.signature.name(), self.domain_size)?;
        for rel in 0..self.signature.relation_count() {
            if self.tuple_count(rel) > 0 {
                write!(f, " {}:{{", self.signature.symbol(rel))?;
                for (i, t) in self.tuples(rel).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{:?}", t)?;
                }
                write!(f, "}}")?;
            }
        }
        write!(f, "]")
    }
}
