//! Diagram completion and the bounded checkers: amalgamation of spans,
//! amalgamable arrows, AP / WAP / JEP, the smallness-condition factorization,
//! and weak purity.
//!
//! A span `A -e-> B, f: B -> C, g: B -> D` is completed by an apex `E` with
//! embeddings from `C` and `D` whose square commutes over `A` (not
//! necessarily over `B`). Apexes are quotients of the set-pushout of `C` and
//! `D` over `A`: identifications between the two sides are allowed, and
//! relations on cross positions may be added when the class needs them.
//! Since every class here is hereditary, a span with no amalgam among
//! apexes of size `|C| + |D| - |A|` has none at all, so exhausting that
//! bound refutes definitively.

use std::sync::Arc;

use thiserror::Error;

use crate::class::{order_of, CompletionStyle, StructureClass};
use crate::embedding::{find_embedding, Embedding, EmbeddingSearch};
use crate::structure::FiniteStructure;
use crate::verdict::{CertificateKind, SearchBudget, Verdict, VerdictStatus, Witness};

/// Cross-position cap for blind completion enumeration on custom classes.
const EXHAUSTIVE_POSITION_CAP: usize = 16;
/// Cap for intermediate-substructure enumeration in factorization searches.
const FACTOR_SUBSET_CAP: usize = 100_000;
/// Cap used when checkers enumerate class members.
pub(crate) const MEMBER_CAP: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AmalgamationError {
    #[error("span endpoints do not match (need base.target = left.source = right.source)")]
    MismatchedSpan,
    #[error("no amalgam exists: apex search complete up to size {bound}")]
    Exhausted { bound: usize },
    #[error("search truncated at size {searched_to}, structural bound is {needed}")]
    BudgetExceeded { searched_to: usize, needed: usize },
}

/// The configuration `A -e-> B` with legs `f: B -> C` and `g: B -> D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    base: Embedding,
    left: Embedding,
    right: Embedding,
}

impl Span {
    pub fn new(
        base: Embedding,
        left: Embedding,
        right: Embedding,
    ) -> Result<Span, AmalgamationError> {
        if base.target() != left.source() || base.target() != right.source() {
            return Err(AmalgamationError::MismatchedSpan);
        }
        Ok(Span { base, left, right })
    }

    /// The degenerate span with `e = f = g = id`.
    pub fn identity(a: &Arc<FiniteStructure>) -> Span {
        let id = Embedding::identity(a);
        Span {
            base: id.clone(),
            left: id.clone(),
            right: id,
        }
    }

    pub fn base(&self) -> &Embedding {
        &self.base
    }

    pub fn left(&self) -> &Embedding {
        &self.left
    }

    pub fn right(&self) -> &Embedding {
        &self.right
    }

    pub fn shared(&self) -> &Arc<FiniteStructure> {
        self.base.source()
    }
}

/// A completed square: apex plus the two legs. The commutation invariant is
/// over the span's `A` only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Amalgam {
    apex: Arc<FiniteStructure>,
    into_left: Embedding,
    into_right: Embedding,
}

impl Amalgam {
    pub fn apex(&self) -> &Arc<FiniteStructure> {
        &self.apex
    }

    pub fn into_left(&self) -> &Embedding {
        &self.into_left
    }

    pub fn into_right(&self) -> &Embedding {
        &self.into_right
    }
}

/// Re-validates an amalgam against its span: embedding conditions, class
/// membership of the apex, and commutation over `A`. Used by witness replay.
pub fn validate_amalgam(
    class: &StructureClass,
    span: &Span,
    amalgam: &Amalgam,
) -> Result<(), String> {
    Embedding::new(
        amalgam.into_left.source().clone(),
        amalgam.into_left.target().clone(),
        amalgam.into_left.map().to_vec(),
    )
    .map_err(|e| format!("into_left: {e}"))?;
    Embedding::new(
        amalgam.into_right.source().clone(),
        amalgam.into_right.target().clone(),
        amalgam.into_right.map().to_vec(),
    )
    .map_err(|e| format!("into_right: {e}"))?;
    if !class.is_member(amalgam.apex()) {
        return Err("apex is not a class member".into());
    }
    if amalgam.into_left.source() != span.left.target()
        || amalgam.into_right.source() != span.right.target()
    {
        return Err("amalgam legs do not match span targets".into());
    }
    let a = span.shared();
    for x in a.elements() {
        let via_left = amalgam.into_left.apply(span.left.apply(span.base.apply(x)));
        let via_right = amalgam
            .into_right
            .apply(span.right.apply(span.base.apply(x)));
        if via_left != via_right {
            return Err(format!("square does not commute over element {x}"));
        }
    }
    Ok(())
}

/// Searches apex candidates in canonical order (size ascending, then
/// lexicographic on the right-leg assignment, then on the completion) and
/// returns the first valid amalgam, i.e. the canonically least one of
/// minimal apex size. A definite [`AmalgamationError::Exhausted`] is
/// reported only when the full structural bound was covered.
///
/// Built-in classes carry complete completion strategies. For custom
/// classes the blind cross-tuple enumeration is capped: past the cap only
/// the free completion is tried, so a returned amalgam is guaranteed valid
/// but minimal only within the searched space, and a miss is reported as
/// truncated rather than exhausted.
pub fn amalgamate(
    class: &StructureClass,
    span: &Span,
    budget: &SearchBudget,
) -> Result<Amalgam, AmalgamationError> {
    amalgamate_with_cap(class, span, budget.ext_size)
}

pub(crate) fn amalgamate_with_cap(
    class: &StructureClass,
    span: &Span,
    cap: usize,
) -> Result<Amalgam, AmalgamationError> {
    let c = span.left.target();
    let d = span.right.target();
    let a = span.shared();
    let full_bound = c.domain_size() + d.domain_size() - a.domain_size();

    // pins: the image of A on the right must coincide with its image on the left
    let mut pins: Vec<(usize, usize)> = Vec::new();
    for x in a.elements() {
        let d_elem = span.right.apply(span.base.apply(x));
        let c_slot = span.left.apply(span.base.apply(x));
        if !pins.contains(&(d_elem, c_slot)) {
            pins.push((d_elem, c_slot));
        }
    }

    let lo = c.domain_size().max(d.domain_size());
    let hi = full_bound.min(cap.max(lo));
    let mut truncated_by_positions = false;
    for size in lo..=hi {
        let mut search = ApexSearch::new(class, c, d, &pins, size);
        match search.run() {
            ApexOutcome::Found(apex, assignment) => {
                let apex = Arc::new(apex);
                let into_left = Embedding::new_unchecked(
                    c.clone(),
                    apex.clone(),
                    (0..c.domain_size()).collect(),
                );
                let into_right = Embedding::new_unchecked(d.clone(), apex.clone(), assignment);
                let amalgam = Amalgam {
                    apex,
                    into_left,
                    into_right,
                };
                debug_assert!(validate_amalgam(class, span, &amalgam).is_ok());
                return Ok(amalgam);
            }
            ApexOutcome::NoneAtSize => {}
            ApexOutcome::PositionsOverflow => {
                truncated_by_positions = true;
            }
        }
    }
    if hi < full_bound || truncated_by_positions {
        Err(AmalgamationError::BudgetExceeded {
            searched_to: hi,
            needed: full_bound,
        })
    } else {
        Err(AmalgamationError::Exhausted { bound: full_bound })
    }
}

enum ApexOutcome {
    Found(FiniteStructure, Vec<usize>),
    NoneAtSize,
    PositionsOverflow,
}

/// Backtracking search for a right-leg assignment into `|C| + fresh` slots
/// at one fixed apex size, with per-step consistency checks against both
/// reflection conditions.
struct ApexSearch<'a> {
    class: &'a StructureClass,
    c: &'a Arc<FiniteStructure>,
    d: &'a Arc<FiniteStructure>,
    pins: &'a [(usize, usize)],
    size: usize,
    assignment: Vec<usize>,
    used: Vec<bool>,
    fresh_used: usize,
    c_incidence: Vec<Vec<(usize, usize)>>,
    overflow: bool,
}

const UNASSIGNED: usize = usize::MAX;

impl<'a> ApexSearch<'a> {
    fn new(
        class: &'a StructureClass,
        c: &'a Arc<FiniteStructure>,
        d: &'a Arc<FiniteStructure>,
        pins: &'a [(usize, usize)],
        size: usize,
    ) -> Self {
        let mut c_incidence = vec![Vec::new(); c.domain_size()];
        let sig = c.signature();
        for rel in 0..sig.relation_count() {
            for (i, t) in c.tuples(rel).enumerate() {
                for &e in t {
                    if c_incidence[e].last() != Some(&(rel, i)) {
                        c_incidence[e].push((rel, i));
                    }
                }
            }
        }
        ApexSearch {
            class,
            c,
            d,
            pins,
            size,
            assignment: vec![UNASSIGNED; d.domain_size()],
            used: vec![false; size],
            fresh_used: 0,
            c_incidence,
            overflow: false,
        }
    }

    fn run(&mut self) -> ApexOutcome {
        for &(d_elem, c_slot) in self.pins {
            if self.assignment[d_elem] == c_slot {
                continue;
            }
            if !self.try_assign(d_elem, c_slot) {
                return ApexOutcome::NoneAtSize;
            }
        }
        let order: Vec<usize> = (0..self.d.domain_size())
            .filter(|&x| self.assignment[x] == UNASSIGNED)
            .collect();
        let mut result = None;
        self.search(&order, 0, &mut result);
        match result {
            Some(r) => ApexOutcome::Found(r.0, r.1),
            None if self.overflow => ApexOutcome::PositionsOverflow,
            None => ApexOutcome::NoneAtSize,
        }
    }

    fn search(
        &mut self,
        order: &[usize],
        depth: usize,
        result: &mut Option<(FiniteStructure, Vec<usize>)>,
    ) {
        if result.is_some() {
            return;
        }
        let fresh_needed = self.size - self.c.domain_size();
        if depth == order.len() {
            if self.fresh_used == fresh_needed {
                if let Some(apex) = self.complete() {
                    *result = Some((apex, self.assignment.clone()));
                }
            }
            return;
        }
        // each remaining element consumes at most one fresh slot
        if self.fresh_used + (order.len() - depth) < fresh_needed {
            return;
        }
        let x = order[depth];
        for slot in 0..self.c.domain_size() {
            if self.try_assign(x, slot) {
                self.search(order, depth + 1, result);
                self.unassign(x);
                if result.is_some() {
                    return;
                }
            }
        }
        if self.fresh_used < fresh_needed {
            let slot = self.c.domain_size() + self.fresh_used;
            if self.try_assign(x, slot) {
                self.fresh_used += 1;
                self.search(order, depth + 1, result);
                self.fresh_used -= 1;
                self.unassign(x);
            }
        }
    }

    fn try_assign(&mut self, x: usize, slot: usize) -> bool {
        if self.assignment[x] != UNASSIGNED || slot >= self.size || self.used[slot] {
            return false;
        }
        self.assignment[x] = slot;
        self.used[slot] = true;
        if self.consistent(x, slot) {
            true
        } else {
            self.assignment[x] = UNASSIGNED;
            self.used[slot] = false;
            false
        }
    }

    fn unassign(&mut self, x: usize) {
        let slot = self.assignment[x];
        self.assignment[x] = UNASSIGNED;
        self.used[slot] = false;
    }

    fn consistent(&self, x: usize, slot: usize) -> bool {
        let sig = self.d.signature();
        let c_size = self.c.domain_size();
        let mut image = Vec::new();
        for rel in 0..sig.relation_count() {
            // right tuples that land entirely on left slots must be left tuples
            for t in self.d.tuples(rel) {
                if !t.contains(&x) {
                    continue;
                }
                image.clear();
                let mut all_assigned = true;
                let mut all_left = true;
                for &e in t {
                    let s = self.assignment[e];
                    if s == UNASSIGNED {
                        all_assigned = false;
                        break;
                    }
                    if s >= c_size {
                        all_left = false;
                    }
                    image.push(s);
                }
                if all_assigned && all_left && !self.c.contains(rel, &image) {
                    return false;
                }
            }
        }
        // left tuples inside the right image must pull back to right tuples
        if slot < c_size {
            let mut slot_to_d = vec![UNASSIGNED; self.size];
            for (d_elem, &s) in self.assignment.iter().enumerate() {
                if s != UNASSIGNED {
                    slot_to_d[s] = d_elem;
                }
            }
            let mut pre = Vec::new();
            for &(rel, idx) in &self.c_incidence[slot] {
                let arity = self.c.signature().arity(rel);
                let t = self
                    .c
                    .tuples(rel)
                    .nth(idx)
                    .expect("incidence index in range");
                let _ = arity;
                pre.clear();
                let mut inside = true;
                for &e in t {
                    if slot_to_d[e] == UNASSIGNED {
                        inside = false;
                        break;
                    }
                    pre.push(slot_to_d[e]);
                }
                if inside && !self.d.contains(rel, &pre) {
                    return false;
                }
            }
        }
        true
    }

    /// Builds apex candidates over the finished assignment by completing the
    /// cross positions per the class's completion style; returns the first
    /// class member.
    fn complete(&mut self) -> Option<FiniteStructure> {
        let sig = self.c.signature().clone();
        let c_size = self.c.domain_size();
        let mut determined: Vec<Vec<Vec<usize>>> = Vec::with_capacity(sig.relation_count());
        for rel in 0..sig.relation_count() {
            let mut tuples: Vec<Vec<usize>> = self.c.tuples(rel).map(|t| t.to_vec()).collect();
            for t in self.d.tuples(rel) {
                tuples.push(t.iter().map(|&e| self.assignment[e]).collect());
            }
            tuples.sort();
            tuples.dedup();
            determined.push(tuples);
        }
        let c_only: Vec<usize> = (0..c_size).filter(|&s| !self.used[s]).collect();
        let fresh: Vec<usize> = (c_size..self.size).collect();

        if fresh.is_empty() || c_only.is_empty() {
            return self.finish(determined);
        }
        match self.class.completion_style() {
            CompletionStyle::FreeOnly => self.finish(determined),
            CompletionStyle::CliqueClosure => {
                self.complete_clique_closure(determined, &c_only, &fresh)
            }
            CompletionStyle::LinearGaps => self.complete_linear(determined, &c_only, &fresh),
            CompletionStyle::Exhaustive => self.complete_exhaustive(determined, &c_only, &fresh),
        }
    }

    fn finish(&self, determined: Vec<Vec<Vec<usize>>>) -> Option<FiniteStructure> {
        let apex = FiniteStructure::try_new(self.c.signature().clone(), self.size, determined)
            .expect("assigned slots are in range");
        if self.class.is_member(&apex) {
            Some(apex)
        } else {
            None
        }
    }

    /// Clique-component classes: every valid completion must contain the
    /// missing pairs of each incomplete component (components can only grow),
    /// so closing them is both forced and minimal. A missing pair that is
    /// not a cross position refutes the assignment outright.
    fn complete_clique_closure(
        &self,
        mut determined: Vec<Vec<Vec<usize>>>,
        c_only: &[usize],
        fresh: &[usize],
    ) -> Option<FiniteStructure> {
        let mut parent: Vec<usize> = (0..self.size).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for t in &determined[0] {
            let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[1]));
            if a != b {
                parent[a] = b;
            }
        }
        let mut comps: Vec<Vec<usize>> = vec![Vec::new(); self.size];
        for x in 0..self.size {
            let r = find(&mut parent, x);
            comps[r].push(x);
        }
        let mut added = Vec::new();
        for comp in comps.iter().filter(|c| c.len() > 1) {
            for (i, &a) in comp.iter().enumerate() {
                for &b in comp.iter().skip(i + 1) {
                    if determined[0].binary_search(&vec![a, b]).is_err() {
                        let cross = (c_only.contains(&a) && fresh.contains(&b))
                            || (c_only.contains(&b) && fresh.contains(&a));
                        if !cross {
                            return None;
                        }
                        added.push(vec![a, b]);
                        added.push(vec![b, a]);
                    }
                }
            }
        }
        determined[0].extend(added);
        determined[0].sort();
        self.finish(determined)
    }

    /// Linear orders: every fresh slot is placed into a gap of the
    /// left-side order, lowest admissible gaps first.
    fn complete_linear(
        &self,
        determined: Vec<Vec<Vec<usize>>>,
        _c_only: &[usize],
        fresh: &[usize],
    ) -> Option<FiniteStructure> {
        let order = order_of(self.c);
        let pos_of: Vec<usize> = {
            let mut p = vec![0usize; self.c.domain_size()];
            for (i, &x) in order.iter().enumerate() {
                p[x] = i;
            }
            p
        };
        // admissible gap interval per fresh slot from the determined tuples
        let mut lo = vec![0usize; fresh.len()];
        let mut hi = vec![order.len(); fresh.len()];
        for t in &determined[0] {
            let (a, b) = (t[0], t[1]);
            if a >= self.c.domain_size() && b < self.c.domain_size() {
                let i = a - self.c.domain_size();
                hi[i] = hi[i].min(pos_of[b]);
            } else if b >= self.c.domain_size() && a < self.c.domain_size() {
                let i = b - self.c.domain_size();
                lo[i] = lo[i].max(pos_of[a] + 1);
            }
        }
        let mut gaps = vec![0usize; fresh.len()];
        self.linear_rec(&determined, &order, &lo, &hi, &mut gaps, 0)
    }

    fn linear_rec(
        &self,
        determined: &[Vec<Vec<usize>>],
        order: &[usize],
        lo: &[usize],
        hi: &[usize],
        gaps: &mut Vec<usize>,
        i: usize,
    ) -> Option<FiniteStructure> {
        if i == gaps.len() {
            return self.linear_build(determined, order, gaps);
        }
        for g in lo[i]..=hi[i].min(order.len()) {
            if hi[i] < lo[i] {
                break;
            }
            gaps[i] = g;
            if let Some(apex) = self.linear_rec(determined, order, lo, hi, gaps, i + 1) {
                return Some(apex);
            }
        }
        None
    }

    fn linear_build(
        &self,
        determined: &[Vec<Vec<usize>>],
        order: &[usize],
        gaps: &[usize],
    ) -> Option<FiniteStructure> {
        let c_size = self.c.domain_size();
        // full sequence: left elements with fresh slots inserted at their gaps;
        // fresh slots sharing a gap keep their determined mutual order
        let mut seq: Vec<usize> = Vec::with_capacity(self.size);
        for g in 0..=order.len() {
            if g > 0 {
                seq.push(order[g - 1]);
            }
            let mut here: Vec<usize> = (0..gaps.len()).filter(|&i| gaps[i] == g).collect();
            here.sort_by(|&i, &j| {
                let (a, b) = (c_size + i, c_size + j);
                if determined[0].binary_search(&vec![a, b]).is_ok() {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            });
            seq.extend(here.into_iter().map(|i| c_size + i));
        }
        let mut tuples = Vec::new();
        for i in 0..seq.len() {
            for j in (i + 1)..seq.len() {
                tuples.push(vec![seq[i], seq[j]]);
            }
        }
        tuples.sort();
        // determined relations must be extended, not contradicted
        for t in &determined[0] {
            if tuples.binary_search(t).is_err() {
                return None;
            }
        }
        let apex = FiniteStructure::try_new(self.c.signature().clone(), self.size, vec![tuples])
            .expect("sequence tuples are in range");
        if self.class.is_member(&apex) {
            Some(apex)
        } else {
            None
        }
    }

    /// Custom classes: enumerate all subsets of the cross positions, absent
    /// positions first.
    fn complete_exhaustive(
        &mut self,
        determined: Vec<Vec<Vec<usize>>>,
        c_only: &[usize],
        fresh: &[usize],
    ) -> Option<FiniteStructure> {
        let sig = self.c.signature().clone();
        let mut positions: Vec<(usize, Vec<usize>)> = Vec::new();
        for rel in 0..sig.relation_count() {
            let arity = sig.arity(rel);
            let mut t = vec![0usize; arity];
            'odometer: loop {
                let has_conly = t.iter().any(|e| c_only.contains(e));
                let has_fresh = t.iter().any(|e| fresh.contains(e));
                if has_conly && has_fresh && !determined[rel].contains(&t) {
                    positions.push((rel, t.clone()));
                }
                let mut pos = arity;
                while pos > 0 {
                    pos -= 1;
                    if t[pos] + 1 < self.size {
                        t[pos] += 1;
                        for y in t.iter_mut().skip(pos + 1) {
                            *y = 0;
                        }
                        continue 'odometer;
                    }
                }
                break;
            }
        }
        // the free completion is always tried; richer completions only
        // within the position cap, after which the search is truncated
        // rather than definitely exhausted
        let mask_count = if positions.len() > EXHAUSTIVE_POSITION_CAP {
            self.overflow = true;
            1
        } else {
            1u64 << positions.len()
        };
        for mask in 0..mask_count {
            let mut tuples = determined.clone();
            for (k, (rel, t)) in positions.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    tuples[*rel].push(t.clone());
                }
            }
            let apex = FiniteStructure::try_new(sig.clone(), self.size, tuples)
                .expect("positions are in range");
            if self.class.is_member(&apex) {
                return Some(apex);
            }
        }
        None
    }
}

/// Bounded check that `e` is amalgamable: the class oracle first, otherwise
/// an exhaustive search over spans with both legs bounded by
/// `budget.small_size`.
pub fn is_amalgamable(class: &StructureClass, e: &Embedding, budget: &SearchBudget) -> Verdict {
    if let Some(kind) = class.certify_amalgamable(e) {
        return Verdict::holds(
            Witness::Certificate {
                kind,
                arrow: e.clone(),
            },
            *budget,
        );
    }
    let b = e.target();
    if b.domain_size() > budget.small_size {
        // no spans with presentable legs exist over an oversized target, so
        // there is no exhaustive evidence either way
        return Verdict::unknown(*budget);
    }
    let mut candidates = vec![b.clone()];
    match class.extensions(b, budget.small_size - b.domain_size()) {
        Ok(exts) => candidates.extend(exts),
        Err(_) => return Verdict::unknown(*budget),
    }
    let mut any_truncated = false;
    for c in &candidates {
        let f = Embedding::new_unchecked(b.clone(), c.clone(), (0..b.domain_size()).collect());
        for d in &candidates {
            let g = Embedding::new_unchecked(b.clone(), d.clone(), (0..b.domain_size()).collect());
            let span = Span::new(e.clone(), f.clone(), g).expect("span endpoints match");
            match amalgamate_with_cap(class, &span, usize::MAX) {
                Ok(_) => {}
                Err(AmalgamationError::Exhausted { bound }) => {
                    return Verdict::fails(
                        Witness::SpanRefuted {
                            base: span.base.clone(),
                            left: span.left.clone(),
                            right: span.right.clone(),
                            bound,
                        },
                        *budget,
                    );
                }
                Err(_) => any_truncated = true,
            }
        }
    }
    if any_truncated {
        Verdict::unknown(*budget)
    } else {
        Verdict::holds(
            Witness::Certificate {
                kind: CertificateKind::ExhaustiveSpans,
                arrow: e.clone(),
            },
            *budget,
        )
    }
}

/// Breadth-first search for the least amalgamable extension of `a`:
/// extensions by 0, 1, 2, ... elements up to `budget.ext_size`, canonical
/// tie-break. Returns `None` when the bound is exhausted.
pub fn find_amalgamable_extension(
    class: &StructureClass,
    a: &Arc<FiniteStructure>,
    budget: &SearchBudget,
) -> Option<(Embedding, Verdict)> {
    if let Some(hull) = class.amalgamable_hull(a) {
        if hull.target().domain_size() <= budget.ext_size {
            let verdict = is_amalgamable(class, &hull, budget);
            if verdict.is_holds() {
                return Some((hull, verdict));
            }
        }
        return None;
    }
    let id = Embedding::identity(a);
    let verdict = is_amalgamable(class, &id, budget);
    if verdict.is_holds() {
        return Some((id, verdict));
    }
    let k = budget.ext_size.saturating_sub(a.domain_size());
    let exts = class.extensions(a, k).ok()?;
    for ext in exts {
        let e = Embedding::new_unchecked(a.clone(), ext.clone(), (0..a.domain_size()).collect());
        let verdict = is_amalgamable(class, &e, budget);
        if verdict.is_holds() {
            return Some((e, verdict));
        }
    }
    None
}

fn witness_kind(v: &Verdict) -> CertificateKind {
    match v.witness() {
        Some(Witness::Certificate { kind, .. }) => *kind,
        _ => CertificateKind::ExhaustiveSpans,
    }
}

/// Classical AP at bound: every identity arrow over a member of size
/// `<= small_size` must be amalgamable.
pub fn check_ap(class: &StructureClass, budget: &SearchBudget) -> Verdict {
    let members = match class.members_up_to(budget.small_size, MEMBER_CAP) {
        Ok(m) => m,
        Err(_) => return Verdict::unknown(*budget),
    };
    let mut table = Vec::new();
    let mut any_unknown = false;
    for m in &members {
        let id = Embedding::identity(m);
        let v = is_amalgamable(class, &id, budget);
        match v.status() {
            VerdictStatus::Holds => table.push((id, witness_kind(&v))),
            VerdictStatus::Fails => {
                let w = v.witness().cloned().expect("fails carries a witness");
                return Verdict::fails(w, *budget);
            }
            VerdictStatus::UnknownAtBound => any_unknown = true,
        }
    }
    if any_unknown {
        Verdict::unknown(*budget)
    } else {
        Verdict::holds(Witness::Extensions(table), *budget)
    }
}

/// WAP at bound: every member of size `<= small_size` admits an amalgamable
/// extension within `ext_size`. Never definitively fails at a bound.
pub fn check_wap(class: &StructureClass, budget: &SearchBudget) -> Verdict {
    let members = match class.members_up_to(budget.small_size, MEMBER_CAP) {
        Ok(m) => m,
        Err(_) => return Verdict::unknown(*budget),
    };
    let mut table = Vec::new();
    for m in &members {
        match find_amalgamable_extension(class, m, budget) {
            Some((e, v)) => table.push((e, witness_kind(&v))),
            None => return Verdict::unknown(*budget),
        }
    }
    Verdict::holds(Witness::Extensions(table), *budget)
}

/// JEP at bound: every pair of members of size `<= small_size` embeds into a
/// common member (class oracle, else search up to `ext_size`).
pub fn check_jep(class: &StructureClass, budget: &SearchBudget) -> Verdict {
    let members = match class.members_up_to(budget.small_size, MEMBER_CAP) {
        Ok(m) => m,
        Err(_) => return Verdict::unknown(*budget),
    };
    let mut table = Vec::new();
    for (i, a) in members.iter().enumerate() {
        for b in members.iter().skip(i) {
            if let Some((l, r)) = class.jep_witness(a, b) {
                table.push((l, r));
                continue;
            }
            match jep_search(class, a, b, budget) {
                Some((l, r)) => table.push((l, r)),
                None => return Verdict::unknown(*budget),
            }
        }
    }
    Verdict::holds(Witness::Joint(table), *budget)
}

fn jep_search(
    class: &StructureClass,
    a: &Arc<FiniteStructure>,
    b: &Arc<FiniteStructure>,
    budget: &SearchBudget,
) -> Option<(Embedding, Embedding)> {
    let lo = a.domain_size().max(b.domain_size());
    for size in lo..=budget.ext_size {
        let hosts = class.enumerate_members(size, MEMBER_CAP).ok()?;
        for s in hosts {
            let Ok(Some(l)) = find_embedding(a, &s) else {
                continue;
            };
            if let Ok(Some(r)) = find_embedding(b, &s) {
                return Some((l, r));
            }
        }
    }
    None
}

/// Smallness-condition factorization: given amalgamable `e: A -> M`, find
/// `A -> B -> M` with `B` of size `<= small_size` and `A -> B` amalgamable.
/// Searches induced substructures of `M` containing the image of `A`,
/// smallest first; `B = M` is the built-in fallback when `M` is small.
pub fn factor_amalgamable(
    class: &StructureClass,
    e: &Embedding,
    budget: &SearchBudget,
) -> Option<(Embedding, Embedding)> {
    let m = e.target();
    let image: Vec<usize> = e.map().to_vec();
    let mut sorted_image = image.clone();
    sorted_image.sort();
    let others: Vec<usize> = m.elements().filter(|x| !sorted_image.contains(x)).collect();
    let max_extra = budget.small_size.saturating_sub(sorted_image.len());
    let mut budget_guard = 0usize;
    for extra in 0..=max_extra.min(others.len()) {
        let mut combo: Vec<usize> = (0..extra).collect();
        loop {
            budget_guard += 1;
            if budget_guard > FACTOR_SUBSET_CAP {
                return None;
            }
            let mut keep = sorted_image.clone();
            keep.extend(combo.iter().map(|&i| others[i]));
            keep.sort();
            let b = Arc::new(m.induced(&keep));
            if class.is_member(&b) {
                // position of each original image element inside `keep`
                let e1_map: Vec<usize> = image
                    .iter()
                    .map(|&v| keep.binary_search(&v).expect("image kept"))
                    .collect();
                if let Ok(e1) = Embedding::new(e.source().clone(), b.clone(), e1_map) {
                    if is_amalgamable(class, &e1, budget).is_holds() {
                        let incl = Embedding::new(b, m.clone(), keep.clone())
                            .expect("induced substructure includes back");
                        return Some((e1, incl));
                    }
                }
            }
            if !next_combination(&mut combo, others.len()) {
                break;
            }
        }
    }
    None
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    if combo.is_empty() {
        return false;
    }
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] + (k - i) <= n {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            if combo[k - 1] < n {
                return true;
            }
        }
    }
    false
}

/// The consistency-lemma square for an amalgamable `e: A -> K`: an
/// amalgamable `A -> B` with `B` small and a cospan `K -> N <- B` commuting
/// over `A`, found by amalgamating `(A -> K, A -> B)` over candidate
/// amalgamable extensions `B`.
pub fn weak_sc_diagram(
    class: &StructureClass,
    e: &Embedding,
    budget: &SearchBudget,
) -> Option<(Embedding, Embedding, Embedding)> {
    let a = e.source();
    let id = Embedding::identity(a);
    let mut candidates: Vec<Embedding> = Vec::new();
    if let Some((first, _)) = find_amalgamable_extension(class, a, budget) {
        candidates.push(first);
    }
    if let Ok(exts) = class.extensions(a, budget.small_size.saturating_sub(a.domain_size())) {
        for ext in exts {
            let cand =
                Embedding::new_unchecked(a.clone(), ext.clone(), (0..a.domain_size()).collect());
            if !candidates.contains(&cand) && is_amalgamable(class, &cand, budget).is_holds() {
                candidates.push(cand);
            }
        }
    }
    for e_w in candidates {
        let span = Span::new(id.clone(), e.clone(), e_w.clone()).expect("legs share A");
        let cap = e.target().domain_size() + e_w.target().domain_size();
        if let Ok(am) = amalgamate_with_cap(class, &span, cap) {
            return Some((e_w, am.into_right().clone(), am.into_left().clone()));
        }
    }
    None
}

/// Bounded weak purity of `k: K -> M`: for every `s: A -> K` with `A` small
/// there must be an amalgamable `A -> B` such that either no `B -> M` closes
/// the square, or some `B -> K` closes the upper triangle.
pub fn is_weakly_pure(class: &StructureClass, k: &Embedding, budget: &SearchBudget) -> Verdict {
    let kk = k.source();
    let m = k.target();
    if m.domain_size() > budget.ext_size {
        return Verdict::unknown(*budget);
    }
    let members = match class.members_up_to(budget.small_size, MEMBER_CAP) {
        Ok(ms) => ms,
        Err(_) => return Verdict::unknown(*budget),
    };
    let mut chosen = Vec::new();
    for a in &members {
        let ss = match crate::embedding::enumerate_embeddings(a, kk) {
            Ok(ss) => ss,
            Err(_) => return Verdict::unknown(*budget),
        };
        for s in ss {
            match weakly_pure_instance(class, k, &s, budget) {
                Some(e) => chosen.push((e, CertificateKind::ExhaustiveSpans)),
                None => return Verdict::unknown(*budget),
            }
        }
    }
    Verdict::holds(Witness::Extensions(chosen), *budget)
}

fn weakly_pure_instance(
    class: &StructureClass,
    k: &Embedding,
    s: &Embedding,
    budget: &SearchBudget,
) -> Option<Embedding> {
    let a = s.source().clone();
    let try_candidate = |e: &Embedding| -> bool {
        if !is_amalgamable(class, e, budget).is_holds() {
            return false;
        }
        let b = e.target();
        // any v: B -> M with v . e = k . s?
        let pins: Vec<(usize, usize)> = a
            .elements()
            .map(|x| (e.apply(x), k.apply(s.apply(x))))
            .collect();
        let has_v = EmbeddingSearch::new(b, k.target())
            .with_pins(pins)
            .first()
            .is_some();
        if !has_v {
            return true;
        }
        // a w: B -> K with w . e = s closes the upper triangle for every v
        let pins: Vec<(usize, usize)> = a.elements().map(|x| (e.apply(x), s.apply(x))).collect();
        EmbeddingSearch::new(b, k.source())
            .with_pins(pins)
            .first()
            .is_some()
    };
    // the identity usually suffices; deeper extension layers are generated
    // lazily only when it does not
    let id = Embedding::identity(&a);
    if try_candidate(&id) {
        return Some(id);
    }
    let mut layer: Vec<Arc<FiniteStructure>> = vec![a.clone()];
    for _ in 0..budget.ext_size.saturating_sub(a.domain_size()) {
        let mut seen: std::collections::BTreeSet<Vec<u8>> = std::collections::BTreeSet::new();
        let mut next = Vec::new();
        for host in &layer {
            if let Ok(exts) = class.one_point_extensions(host) {
                for ext in exts {
                    let ext = Arc::new(ext);
                    let key = crate::class::pinned_form(&ext, a.domain_size());
                    if seen.insert(key) {
                        next.push(ext);
                    }
                }
            }
        }
        next.sort();
        layer = next;
        for ext in &layer {
            let e =
                Embedding::new_unchecked(a.clone(), ext.clone(), (0..a.domain_size()).collect());
            if try_candidate(&e) {
                return Some(e);
            }
        }
    }
    None
}
