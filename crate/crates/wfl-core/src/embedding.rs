//! Embeddings between finite structures: injective maps that preserve and
//! reflect every relation (induced-substructure semantics), plus the
//! backtracking search used to enumerate them.

use std::sync::Arc;

use thiserror::Error;

use crate::canon::canonical_labeling;
use crate::structure::FiniteStructure;

/// An injective, relation-preserving-and-reflecting map between two
/// structures over the same signature.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Embedding {
    source: Arc<FiniteStructure>,
    target: Arc<FiniteStructure>,
    map: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("source and target have different signatures")]
    SignatureMismatch,
    #[error("map has length {got}, source has {expected} elements")]
    MapLengthMismatch { expected: usize, got: usize },
    #[error("map image {0} is out of range for the target")]
    ImageOutOfRange(usize),
    #[error("map is not injective: elements {0} and {1} share an image")]
    NotInjective(usize, usize),
    #[error("relation `{relation}` not preserved on tuple {tuple:?}")]
    NotPreserved { relation: String, tuple: Vec<usize> },
    #[error("relation `{relation}` not reflected on target tuple {tuple:?}")]
    NotReflected { relation: String, tuple: Vec<usize> },
    #[error("endpoints do not match for composition")]
    MismatchedEndpoints,
    #[error("embedding is not bijective")]
    NotBijective,
}

impl Embedding {
    /// Validates injectivity and the preserve/reflect conditions.
    pub fn new(
        source: Arc<FiniteStructure>,
        target: Arc<FiniteStructure>,
        map: Vec<usize>,
    ) -> Result<Self, EmbeddingError> {
        if source.signature() != target.signature() {
            return Err(EmbeddingError::SignatureMismatch);
        }
        if map.len() != source.domain_size() {
            return Err(EmbeddingError::MapLengthMismatch {
                expected: source.domain_size(),
                got: map.len(),
            });
        }
        let mut back = vec![usize::MAX; target.domain_size()];
        for (x, &v) in map.iter().enumerate() {
            if v >= target.domain_size() {
                return Err(EmbeddingError::ImageOutOfRange(v));
            }
            if back[v] != usize::MAX {
                return Err(EmbeddingError::NotInjective(back[v], x));
            }
            back[v] = x;
        }
        let sig = source.signature();
        for rel in 0..sig.relation_count() {
            let mut image = Vec::new();
            for t in source.tuples(rel) {
                image.clear();
                image.extend(t.iter().map(|&i| map[i]));
                if !target.contains(rel, &image) {
                    return Err(EmbeddingError::NotPreserved {
                        relation: sig.symbol(rel).to_string(),
                        tuple: t.to_vec(),
                    });
                }
            }
            let mut pre = Vec::new();
            for t in target.tuples(rel) {
                if t.iter().all(|&i| back[i] != usize::MAX) {
                    pre.clear();
                    pre.extend(t.iter().map(|&i| back[i]));
                    if !source.contains(rel, &pre) {
                        return Err(EmbeddingError::NotReflected {
                            relation: sig.symbol(rel).to_string(),
                            tuple: t.to_vec(),
                        });
                    }
                }
            }
        }
        Ok(Embedding {
            source,
            target,
            map,
        })
    }

    /// Internal constructor for maps produced by the search, which only
    /// yields valid embeddings.
    pub(crate) fn new_unchecked(
        source: Arc<FiniteStructure>,
        target: Arc<FiniteStructure>,
        map: Vec<usize>,
    ) -> Self {
        debug_assert!(
            Embedding::new(source.clone(), target.clone(), map.clone()).is_ok(),
            "search produced an invalid embedding"
        );
        Embedding {
            source,
            target,
            map,
        }
    }

    pub fn identity(s: &Arc<FiniteStructure>) -> Self {
        Embedding {
            source: s.clone(),
            target: s.clone(),
            map: (0..s.domain_size()).collect(),
        }
    }

    /// The prefix inclusion of `small` into `big` (element i maps to i).
    /// Fails unless `small` really is an induced prefix of `big`.
    pub fn prefix_inclusion(
        small: &Arc<FiniteStructure>,
        big: &Arc<FiniteStructure>,
    ) -> Result<Self, EmbeddingError> {
        Embedding::new(
            small.clone(),
            big.clone(),
            (0..small.domain_size()).collect(),
        )
    }

    pub fn source(&self) -> &Arc<FiniteStructure> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteStructure> {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn is_identity_inclusion(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_bijective(&self) -> bool {
        self.map.len() == self.target.domain_size()
    }

    /// Compose `self: A -> B` with `next: B -> C` to get `A -> C`.
    pub fn compose(&self, next: &Embedding) -> Result<Embedding, EmbeddingError> {
        if !Arc::ptr_eq(&self.target, &next.source) && self.target != next.source {
            return Err(EmbeddingError::MismatchedEndpoints);
        }
        let map = self.map.iter().map(|&v| next.map[v]).collect();
        Ok(Embedding {
            source: self.source.clone(),
            target: next.target.clone(),
            map,
        })
    }

    /// Inverse of a bijective embedding.
    pub fn inverse(&self) -> Result<Embedding, EmbeddingError> {
        if !self.is_bijective() {
            return Err(EmbeddingError::NotBijective);
        }
        let mut inv = vec![0usize; self.map.len()];
        for (x, &v) in self.map.iter().enumerate() {
            inv[v] = x;
        }
        Ok(Embedding {
            source: self.target.clone(),
            target: self.source.clone(),
            map: inv,
        })
    }
}

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Embedding({:?} -> {:?}; {:?})",
            self.source, self.target, self.map
        )
    }
}

/// All embeddings `a -> b`, complete and duplicate-free, in lexicographic
/// order of the map array.
pub fn enumerate_embeddings(
    a: &Arc<FiniteStructure>,
    b: &Arc<FiniteStructure>,
) -> Result<Vec<Embedding>, EmbeddingError> {
    if a.signature() != b.signature() {
        return Err(EmbeddingError::SignatureMismatch);
    }
    let maps = EmbeddingSearch::new(a, b).run();
    Ok(maps
        .into_iter()
        .map(|m| Embedding::new_unchecked(a.clone(), b.clone(), m))
        .collect())
}

/// First embedding `a -> b` in lexicographic order, if any.
pub fn find_embedding(
    a: &Arc<FiniteStructure>,
    b: &Arc<FiniteStructure>,
) -> Result<Option<Embedding>, EmbeddingError> {
    if a.signature() != b.signature() {
        return Err(EmbeddingError::SignatureMismatch);
    }
    let mut search = EmbeddingSearch::new(a, b);
    search.limit = Some(1);
    Ok(search
        .run()
        .into_iter()
        .next()
        .map(|m| Embedding::new_unchecked(a.clone(), b.clone(), m)))
}

/// A bijective embedding `a -> b` if the structures are isomorphic.
/// Compares canonical forms first, then composes the canonical labelings
/// into a witness. Deterministic.
pub fn find_isomorphism(
    a: &Arc<FiniteStructure>,
    b: &Arc<FiniteStructure>,
) -> Result<Option<Embedding>, EmbeddingError> {
    if a.signature() != b.signature() {
        return Err(EmbeddingError::SignatureMismatch);
    }
    if a.domain_size() != b.domain_size() {
        return Ok(None);
    }
    for rel in 0..a.signature().relation_count() {
        if a.tuple_count(rel) != b.tuple_count(rel) {
            return Ok(None);
        }
    }
    let la = canonical_labeling(a, None);
    let lb = canonical_labeling(b, None);
    if a.relabel(&la) != b.relabel(&lb) {
        return Ok(None);
    }
    // iso = lb^{-1} . la
    let mut lb_inv = vec![0usize; lb.len()];
    for (x, &v) in lb.iter().enumerate() {
        lb_inv[v] = x;
    }
    let map: Vec<usize> = la.iter().map(|&v| lb_inv[v]).collect();
    Ok(Some(
        Embedding::new(a.clone(), b.clone(), map).expect("canonical labelings compose to an iso"),
    ))
}

/// Backtracking search for embedding maps. Source elements are assigned in
/// ascending index order with ascending candidate targets, so results come
/// out in lexicographic order of the map array. Prunes on per-element
/// relation-degree vectors.
pub(crate) struct EmbeddingSearch<'a> {
    pub source: &'a FiniteStructure,
    pub target: &'a FiniteStructure,
    /// (source element, forced target element)
    pub pins: Vec<(usize, usize)>,
    pub limit: Option<usize>,
}

impl<'a> EmbeddingSearch<'a> {
    pub fn new(source: &'a FiniteStructure, target: &'a FiniteStructure) -> Self {
        EmbeddingSearch {
            source,
            target,
            pins: Vec::new(),
            limit: None,
        }
    }

    pub fn with_pins(mut self, pins: Vec<(usize, usize)>) -> Self {
        self.pins = pins;
        self
    }

    pub fn first(mut self) -> Option<Vec<usize>> {
        self.limit = Some(1);
        self.run().into_iter().next()
    }

    /// All embedding maps under the configured constraints.
    pub fn run(&self) -> Vec<Vec<usize>> {
        self.run_filtered(None)
    }

    /// Embeddings whose image includes at least one element >= `min_new`.
    /// Used for incremental enumeration as a chain stage grows.
    pub fn run_with_new_element(&self, min_new: usize) -> Vec<Vec<usize>> {
        let mut out = self.run_filtered(Some(min_new));
        out.sort();
        out
    }

    fn run_filtered(&self, min_new: Option<usize>) -> Vec<Vec<usize>> {
        let n = self.source.domain_size();
        let m = self.target.domain_size();
        if n > m {
            return Vec::new();
        }
        let mut state = SearchState::new(self.source, self.target);
        for &(x, v) in &self.pins {
            if !state.assign(x, v) {
                return Vec::new();
            }
        }
        let order: Vec<usize> = (0..n).filter(|x| state.map[*x] == usize::MAX).collect();
        let mut results = Vec::new();
        match min_new {
            None => {
                state.search(&order, 0, None, self.limit, &mut results);
            }
            Some(k) => {
                if self.pins.iter().any(|&(_, v)| v >= k) {
                    state.search(&order, 0, None, self.limit, &mut results);
                } else {
                    // split by which element is the first to land on a new
                    // target; branches are disjoint so no duplicates arise
                    for split in 0..order.len() {
                        let mut st = state.clone();
                        st.first_new_at = Some((split, k));
                        st.search(&order, 0, None, self.limit, &mut results);
                        if let Some(l) = self.limit {
                            if results.len() >= l {
                                break;
                            }
                        }
                    }
                }
            }
        }
        results
    }
}

#[derive(Clone)]
struct SearchState<'a> {
    source: &'a FiniteStructure,
    target: &'a FiniteStructure,
    map: Vec<usize>,
    used: Vec<bool>,
    source_deg: Vec<Vec<usize>>,
    target_deg: Vec<Vec<usize>>,
    /// (position in assignment order, threshold): that position must map to
    /// >= threshold, earlier positions must map below it
    first_new_at: Option<(usize, usize)>,
}

impl<'a> SearchState<'a> {
    fn new(source: &'a FiniteStructure, target: &'a FiniteStructure) -> Self {
        SearchState {
            source,
            target,
            map: vec![usize::MAX; source.domain_size()],
            used: vec![false; target.domain_size()],
            source_deg: degree_table(source),
            target_deg: degree_table(target),
            first_new_at: None,
        }
    }

    fn degree_ok(&self, x: usize, v: usize) -> bool {
        self.source_deg[x]
            .iter()
            .zip(&self.target_deg[v])
            .all(|(s, t)| s <= t)
    }

    /// Attempts to extend the partial map by x -> v, checking injectivity,
    /// degrees, and both directions of the induced condition on tuples whose
    /// elements are all assigned.
    fn assign(&mut self, x: usize, v: usize) -> bool {
        if self.map[x] != usize::MAX || self.used[v] || !self.degree_ok(x, v) {
            return false;
        }
        self.map[x] = v;
        self.used[v] = true;
        if self.consistent_around(x, v) {
            true
        } else {
            self.map[x] = usize::MAX;
            self.used[v] = false;
            false
        }
    }

    fn unassign(&mut self, x: usize) {
        let v = self.map[x];
        self.map[x] = usize::MAX;
        self.used[v] = false;
    }

    fn consistent_around(&self, x: usize, v: usize) -> bool {
        let sig = self.source.signature();
        let mut image = Vec::new();
        for rel in 0..sig.relation_count() {
            for t in self.source.tuples(rel) {
                if t.contains(&x) && t.iter().all(|&i| self.map[i] != usize::MAX) {
                    image.clear();
                    image.extend(t.iter().map(|&i| self.map[i]));
                    if !self.target.contains(rel, &image) {
                        return false;
                    }
                }
            }
            // reflection: target tuples through v lying inside the image must
            // pull back to source tuples
            for t in self.target.tuples(rel) {
                if t.contains(&v) {
                    image.clear();
                    let mut inside = true;
                    for &w in t {
                        match self.preimage(w) {
                            Some(s) => image.push(s),
                            None => {
                                inside = false;
                                break;
                            }
                        }
                    }
                    if inside && !self.source.contains(rel, &image) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn preimage(&self, v: usize) -> Option<usize> {
        if !self.used[v] {
            return None;
        }
        self.map.iter().position(|&w| w == v)
    }

    fn search(
        &mut self,
        order: &[usize],
        depth: usize,
        _unused: Option<()>,
        limit: Option<usize>,
        results: &mut Vec<Vec<usize>>,
    ) {
        if let Some(l) = limit {
            if results.len() >= l {
                return;
            }
        }
        if depth == order.len() {
            results.push(self.map.clone());
            return;
        }
        let x = order[depth];
        let (lo, hi) = match self.first_new_at {
            Some((split, k)) if depth < split => (0, k.min(self.target.domain_size())),
            Some((split, k)) if depth == split => (k, self.target.domain_size()),
            _ => (0, self.target.domain_size()),
        };
        for v in lo..hi {
            if self.assign(x, v) {
                self.search(order, depth + 1, None, limit, results);
                self.unassign(x);
                if let Some(l) = limit {
                    if results.len() >= l {
                        return;
                    }
                }
            }
        }
    }
}

/// Per-element degree vectors: for each element, the count of tuples having
/// it at each (relation, position) slot.
fn degree_table(s: &FiniteStructure) -> Vec<Vec<usize>> {
    let sig = s.signature();
    let slots: usize = (0..sig.relation_count()).map(|r| sig.arity(r)).sum();
    let mut table = vec![vec![0usize; slots]; s.domain_size()];
    let mut base = 0;
    for rel in 0..sig.relation_count() {
        let arity = sig.arity(rel);
        for t in s.tuples(rel) {
            for (pos, &e) in t.iter().enumerate() {
                table[e][base + pos] += 1;
            }
        }
        base += arity;
    }
    table
}
