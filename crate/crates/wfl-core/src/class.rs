//! The ambient category: which finite structures are objects, how to grow
//! them, and the structural shortcuts each built-in class provides
//! (amalgamability certificates, joint-embedding witnesses, hulls).
//!
//! All built-in classes are hereditary (closed under induced substructures);
//! generation by one-point extensions is therefore complete, and a span with
//! no amalgam among apexes of size `|C| + |D| - |A|` has none at all.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::canon::{canonical_form, canonical_labeling};
use crate::embedding::{find_embedding, Embedding};
use crate::format::{LineCursor, ParseError};
use crate::structure::{FiniteStructure, Signature};
use crate::verdict::CertificateKind;

/// Hard cap on candidate generation inside extension/member enumeration.
pub const ENUMERATION_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("unknown class name `{0}` (built-ins: graphs, linear-orders, triad)")]
    UnknownClass(String),
    #[error("enumeration budget exceeded, more than {cap} candidates")]
    BudgetExceeded { cap: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("forbidden entry has signature `{got}`, class declares `{expected}`")]
    ForbiddenSignatureMismatch { expected: String, got: String },
    #[error("class file declares no `forbidden` entries")]
    NoForbiddenEntries,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ClassKind {
    Graphs,
    LinearOrders,
    Triad,
    Forbidden {
        forbidden: Vec<Arc<FiniteStructure>>,
    },
}

/// How the amalgam search may complete relations on cross positions between
/// the two glued sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CompletionStyle {
    /// Adding no cross tuples is valid whenever any completion is; the class
    /// is closed under removing cross tuples.
    FreeOnly,
    /// Clique-component classes: each incomplete component is closed by
    /// adding its missing pairs, which is forced for any valid completion.
    CliqueClosure,
    /// Linear orders: fresh elements are placed into gaps of the host order.
    LinearGaps,
    /// No structural knowledge; enumerate all cross-tuple subsets.
    Exhaustive,
}

/// A category of finite structures: membership predicate, extension
/// generator, and the optional oracles the built-ins carry. Immutable and
/// safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureClass {
    name: String,
    signature: Arc<Signature>,
    kind: ClassKind,
}

pub fn graphs_signature() -> Arc<Signature> {
    Arc::new(Signature::new("graphs", vec![("E".to_string(), 2)]).unwrap())
}

pub fn linear_orders_signature() -> Arc<Signature> {
    Arc::new(Signature::new("linear-orders", vec![("lt".to_string(), 2)]).unwrap())
}

pub fn triad_signature() -> Arc<Signature> {
    Arc::new(
        Signature::new(
            "triad",
            vec![
                ("E".to_string(), 2),
                ("R".to_string(), 1),
                ("Bl".to_string(), 1),
            ],
        )
        .unwrap(),
    )
}

/// Convenience constructor: a graph on `n` vertices from undirected edges.
pub fn graph(n: usize, edges: &[(usize, usize)]) -> FiniteStructure {
    let mut tuples = Vec::new();
    for &(a, b) in edges {
        tuples.push(vec![a, b]);
        tuples.push(vec![b, a]);
    }
    FiniteStructure::try_new(graphs_signature(), n, vec![tuples]).expect("valid graph")
}

/// The n-element chain 0 < 1 < ... < n-1.
pub fn linear_order(n: usize) -> FiniteStructure {
    let mut tuples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            tuples.push(vec![i, j]);
        }
    }
    FiniteStructure::try_new(linear_orders_signature(), n, vec![tuples]).expect("valid order")
}

/// A triad structure from undirected edges and unary decorations.
pub fn triad(n: usize, edges: &[(usize, usize)], r: &[usize], bl: &[usize]) -> FiniteStructure {
    let mut e = Vec::new();
    for &(a, b) in edges {
        e.push(vec![a, b]);
        e.push(vec![b, a]);
    }
    let r = r.iter().map(|&x| vec![x]).collect();
    let b = bl.iter().map(|&x| vec![x]).collect();
    FiniteStructure::try_new(triad_signature(), n, vec![e, r, b]).expect("valid triad structure")
}

/// Connected components under the symmetric closure of `rel`.
pub(crate) fn components(s: &FiniteStructure, rel: usize) -> Vec<Vec<usize>> {
    let n = s.domain_size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for t in s.tuples(rel) {
        let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[1]));
        if a != b {
            parent[a] = b;
        }
    }
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        let r = find(&mut parent, x);
        comps[r].push(x);
    }
    comps.into_iter().filter(|c| !c.is_empty()).collect()
}

impl StructureClass {
    /// The named built-in class.
    pub fn builtin(name: &str) -> Result<StructureClass, ClassError> {
        match name {
            "graphs" => Ok(StructureClass {
                name: "graphs".into(),
                signature: graphs_signature(),
                kind: ClassKind::Graphs,
            }),
            "linear-orders" => Ok(StructureClass {
                name: "linear-orders".into(),
                signature: linear_orders_signature(),
                kind: ClassKind::LinearOrders,
            }),
            "triad" => Ok(StructureClass {
                name: "triad".into(),
                signature: triad_signature(),
                kind: ClassKind::Triad,
            }),
            other => Err(ClassError::UnknownClass(other.to_string())),
        }
    }

    /// A custom hereditary class: membership is "no induced copy of any
    /// forbidden structure".
    pub fn from_forbidden(
        signature: Arc<Signature>,
        forbidden: Vec<FiniteStructure>,
    ) -> Result<StructureClass, ClassError> {
        for f in &forbidden {
            if f.signature() != &signature {
                return Err(ClassError::ForbiddenSignatureMismatch {
                    expected: signature.name().to_string(),
                    got: f.signature().name().to_string(),
                });
            }
        }
        Ok(StructureClass {
            name: signature.name().to_string(),
            signature,
            kind: ClassKind::Forbidden {
                forbidden: forbidden.into_iter().map(Arc::new).collect(),
            },
        })
    }

    /// Loads a declarative class file: a signature header (signature plus
    /// rel lines), then one structure block per `forbidden` line.
    pub fn parse_class_file(text: &str) -> Result<StructureClass, ClassError> {
        let mut cursor = LineCursor::new(text);
        let (line, head) = cursor
            .next_line()
            .ok_or(ParseError::UnexpectedEof("signature <name>"))
            .map_err(ClassError::Parse)?;
        let name = head
            .strip_prefix("signature ")
            .ok_or_else(|| {
                ClassError::Parse(ParseError::Expected {
                    line,
                    expected: "signature <name>",
                    got: head.to_string(),
                })
            })?
            .trim()
            .to_string();
        let mut relations = Vec::new();
        while let Some((line, text)) = cursor.peek() {
            if let Some(rest) = text.strip_prefix("rel ") {
                cursor.next_line();
                let mut toks = rest.split_whitespace();
                let sym = toks.next().ok_or(ClassError::Parse(ParseError::Expected {
                    line,
                    expected: "rel <symbol> <arity>",
                    got: text.to_string(),
                }))?;
                let arity = toks.next().ok_or(ClassError::Parse(ParseError::Expected {
                    line,
                    expected: "rel <symbol> <arity>",
                    got: text.to_string(),
                }))?;
                let arity = crate::format::parse_usize(line, arity).map_err(ClassError::Parse)?;
                relations.push((sym.to_string(), arity));
            } else {
                break;
            }
        }
        let signature = Arc::new(
            Signature::new(name, relations)
                .map_err(|source| ClassError::Parse(ParseError::Signature { line, source }))?,
        );
        let mut forbidden = Vec::new();
        while let Some((line, text)) = cursor.next_line() {
            if text != "forbidden" {
                return Err(ClassError::Parse(ParseError::Expected {
                    line,
                    expected: "forbidden",
                    got: text.to_string(),
                }));
            }
            let block = crate::format::parse_structure_block(&mut cursor)?;
            forbidden.push(block);
        }
        if forbidden.is_empty() {
            return Err(ClassError::NoForbiddenEntries);
        }
        StructureClass::from_forbidden(signature, forbidden)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    /// Membership predicate. Isomorphism-invariant by construction.
    pub fn is_member(&self, s: &FiniteStructure) -> bool {
        if s.signature() != &self.signature {
            return false;
        }
        match &self.kind {
            ClassKind::Graphs => graph_member(s),
            ClassKind::LinearOrders => linear_order_member(s),
            ClassKind::Triad => triad_member(s),
            ClassKind::Forbidden { forbidden } => {
                let arc = Arc::new(s.clone());
                forbidden
                    .iter()
                    .all(|f| find_embedding(f, &arc).map(|e| e.is_none()).unwrap_or(true))
            }
        }
    }

    /// Classes closed under disjoint union get joint embeddings for free.
    pub fn union_closed(&self) -> bool {
        matches!(self.kind, ClassKind::Graphs | ClassKind::Triad)
    }

    pub(crate) fn completion_style(&self) -> CompletionStyle {
        match self.kind {
            ClassKind::Graphs => CompletionStyle::FreeOnly,
            ClassKind::Triad => CompletionStyle::CliqueClosure,
            ClassKind::LinearOrders => CompletionStyle::LinearGaps,
            ClassKind::Forbidden { .. } => CompletionStyle::Exhaustive,
        }
    }

    /// Class oracle: a certificate that `e` is amalgamable, when the class
    /// can see one structurally. `None` means "no certificate", not "fails".
    pub fn certify_amalgamable(&self, e: &Embedding) -> Option<CertificateKind> {
        match self.kind {
            ClassKind::Graphs => Some(CertificateKind::FreeAmalgam),
            ClassKind::LinearOrders => Some(CertificateKind::OrderInterleaving),
            ClassKind::Triad => {
                let target = e.target();
                let image: BTreeSet<usize> = e.map().iter().copied().collect();
                for comp in components(target, 0) {
                    if comp.iter().any(|x| image.contains(x)) && comp.len() != 3 {
                        return None;
                    }
                }
                Some(CertificateKind::CompletedComponents)
            }
            ClassKind::Forbidden { .. } => None,
        }
    }

    /// Joint-embedding oracle: maps of `a` and `b` into a common member.
    pub fn jep_witness(
        &self,
        a: &Arc<FiniteStructure>,
        b: &Arc<FiniteStructure>,
    ) -> Option<(Embedding, Embedding)> {
        match self.kind {
            ClassKind::Graphs | ClassKind::Triad => {
                let u = Arc::new(a.disjoint_union(b));
                let left = Embedding::new(a.clone(), u.clone(), (0..a.domain_size()).collect())
                    .expect("left injection into disjoint union");
                let right = Embedding::new(
                    b.clone(),
                    u,
                    (a.domain_size()..a.domain_size() + b.domain_size()).collect(),
                )
                .expect("right injection into disjoint union");
                Some((left, right))
            }
            ClassKind::LinearOrders => {
                // concatenation: all of a below all of b
                let n = a.domain_size();
                let m = b.domain_size();
                let mut tuples: Vec<Vec<usize>> = a.tuples(0).map(|t| t.to_vec()).collect();
                for t in b.tuples(0) {
                    tuples.push(vec![t[0] + n, t[1] + n]);
                }
                for i in 0..n {
                    for j in 0..m {
                        tuples.push(vec![i, j + n]);
                    }
                }
                let s = Arc::new(
                    FiniteStructure::try_new(self.signature.clone(), n + m, vec![tuples])
                        .expect("concatenation is a linear order"),
                );
                let left = Embedding::new(a.clone(), s.clone(), (0..n).collect()).ok()?;
                let right = Embedding::new(b.clone(), s, (n..n + m).collect()).ok()?;
                Some((left, right))
            }
            ClassKind::Forbidden { .. } => None,
        }
    }

    /// Hull oracle: a canonical amalgamable extension of `s`, when the class
    /// can construct one directly. For graphs and linear orders the identity
    /// already is amalgamable; for triad, every undersized component is
    /// completed to a plain 3-clique.
    pub fn amalgamable_hull(&self, s: &Arc<FiniteStructure>) -> Option<Embedding> {
        match self.kind {
            ClassKind::Graphs | ClassKind::LinearOrders => Some(Embedding::identity(s)),
            ClassKind::Triad => {
                let comps = components(s, 0);
                let mut edges: Vec<(usize, usize)> = Vec::new();
                for t in s.tuples(0) {
                    if t[0] < t[1] {
                        edges.push((t[0], t[1]));
                    }
                }
                let mut next = s.domain_size();
                for comp in &comps {
                    let mut members = comp.clone();
                    while members.len() < 3 {
                        for &m in &members {
                            edges.push((m, next));
                        }
                        members.push(next);
                        next += 1;
                    }
                }
                let r: Vec<usize> = s.tuples(1).map(|t| t[0]).collect();
                let bl: Vec<usize> = s.tuples(2).map(|t| t[0]).collect();
                let hull = Arc::new(triad(next, &edges, &r, &bl));
                debug_assert!(self.is_member(&hull));
                Some(
                    Embedding::prefix_inclusion(s, &hull)
                        .expect("completion extends the structure in place"),
                )
            }
            ClassKind::Forbidden { .. } => None,
        }
    }

    /// All member extensions of `s` by exactly one new element (the new
    /// element is the last index; `s` is fixed pointwise). Sorted.
    pub fn one_point_extensions(
        &self,
        s: &FiniteStructure,
    ) -> Result<Vec<FiniteStructure>, ClassError> {
        let n = s.domain_size();
        let mut out = match &self.kind {
            ClassKind::Graphs => {
                guard(1usize << n.min(40))?;
                let mut exts = Vec::with_capacity(1 << n);
                for mask in 0..(1u64 << n) {
                    let mut edges: Vec<(usize, usize)> = Vec::new();
                    for t in s.tuples(0) {
                        if t[0] < t[1] {
                            edges.push((t[0], t[1]));
                        }
                    }
                    for v in 0..n {
                        if mask & (1 << v) != 0 {
                            edges.push((v, n));
                        }
                    }
                    exts.push(graph(n + 1, &edges));
                }
                exts
            }
            ClassKind::LinearOrders => {
                if !linear_order_member(s) {
                    return Ok(Vec::new());
                }
                let order = order_of(s);
                let mut exts = Vec::new();
                for gap in 0..=n {
                    // new element sits after the first `gap` elements
                    let mut tuples: Vec<Vec<usize>> = s.tuples(0).map(|t| t.to_vec()).collect();
                    for (pos, &x) in order.iter().enumerate() {
                        if pos < gap {
                            tuples.push(vec![x, n]);
                        } else {
                            tuples.push(vec![n, x]);
                        }
                    }
                    exts.push(
                        FiniteStructure::try_new(self.signature.clone(), n + 1, vec![tuples])
                            .expect("gap insertion keeps a linear order"),
                    );
                }
                exts
            }
            ClassKind::Triad => {
                let mut exts = Vec::new();
                let mut edge_list: Vec<(usize, usize)> = Vec::new();
                for t in s.tuples(0) {
                    if t[0] < t[1] {
                        edge_list.push((t[0], t[1]));
                    }
                }
                let r: Vec<usize> = s.tuples(1).map(|t| t[0]).collect();
                let bl: Vec<usize> = s.tuples(2).map(|t| t[0]).collect();
                let mut attach_targets: Vec<Vec<usize>> = vec![Vec::new()];
                for comp in components(s, 0) {
                    if comp.len() < 3 {
                        attach_targets.push(comp);
                    }
                }
                for targets in attach_targets {
                    for deco in 0..3 {
                        let mut edges = edge_list.clone();
                        for &t in &targets {
                            edges.push((t, n));
                        }
                        let mut r2 = r.clone();
                        let mut bl2 = bl.clone();
                        match deco {
                            1 => r2.push(n),
                            2 => bl2.push(n),
                            _ => {}
                        }
                        exts.push(triad(n + 1, &edges, &r2, &bl2));
                    }
                }
                exts
            }
            ClassKind::Forbidden { .. } => {
                let sig = &self.signature;
                // all tuple slots that involve the new element
                let mut slots: Vec<(usize, Vec<usize>)> = Vec::new();
                for rel in 0..sig.relation_count() {
                    let arity = sig.arity(rel);
                    let mut t = vec![0usize; arity];
                    'odometer: loop {
                        if t.contains(&n) {
                            slots.push((rel, t.clone()));
                        }
                        let mut pos = arity;
                        while pos > 0 {
                            pos -= 1;
                            if t[pos] < n {
                                t[pos] += 1;
                                for x in t.iter_mut().skip(pos + 1) {
                                    *x = 0;
                                }
                                continue 'odometer;
                            }
                        }
                        break;
                    }
                }
                guard(1usize << slots.len().min(40))?;
                let mut exts = Vec::new();
                for mask in 0..(1u64 << slots.len()) {
                    let mut tuples: Vec<Vec<Vec<usize>>> = (0..sig.relation_count())
                        .map(|rel| s.tuples(rel).map(|t| t.to_vec()).collect())
                        .collect();
                    for (k, (rel, t)) in slots.iter().enumerate() {
                        if mask & (1 << k) != 0 {
                            tuples[*rel].push(t.clone());
                        }
                    }
                    let ext = FiniteStructure::try_new(self.signature.clone(), n + 1, tuples)
                        .expect("slot tuples are in range");
                    if self.is_member(&ext) {
                        exts.push(ext);
                    }
                }
                exts
            }
        };
        out.retain(|e| self.is_member(e));
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Extension generator: all members extending `s` by 1..=k new elements,
    /// up to isomorphism over `s` (s fixed pointwise), in canonical order.
    /// Every result has `s` as its element prefix.
    pub fn extensions(
        &self,
        s: &Arc<FiniteStructure>,
        k: usize,
    ) -> Result<Vec<Arc<FiniteStructure>>, ClassError> {
        let base = s.domain_size();
        let mut layer: Vec<Arc<FiniteStructure>> = vec![s.clone()];
        let mut out: Vec<Arc<FiniteStructure>> = Vec::new();
        for _ in 0..k {
            let mut next: Vec<Arc<FiniteStructure>> = Vec::new();
            let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
            for host in &layer {
                for ext in self.one_point_extensions(host)? {
                    let ext = Arc::new(ext);
                    let key = pinned_form(&ext, base);
                    if seen.insert(key) {
                        next.push(ext);
                    }
                    guard(seen.len())?;
                }
            }
            next.sort();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out.sort();
        Ok(out)
    }

    /// All members of size exactly `n` up to isomorphism, as canonical
    /// representatives in canonical order.
    pub fn enumerate_members(
        &self,
        n: usize,
        cap: usize,
    ) -> Result<Vec<Arc<FiniteStructure>>, ClassError> {
        let empty = FiniteStructure::empty(self.signature.clone());
        if !self.is_member(&empty) {
            // hereditary classes always contain the empty structure; a
            // forbidden entry of size zero empties the whole class
            return Ok(Vec::new());
        }
        let mut layer: Vec<Arc<FiniteStructure>> = vec![Arc::new(empty)];
        for _ in 0..n {
            let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
            let mut next = Vec::new();
            for host in &layer {
                for ext in self.one_point_extensions(host)? {
                    let ext = Arc::new(ext);
                    let form = canonical_form(&ext);
                    if seen.insert(form) {
                        let lab = canonical_labeling(&ext, None);
                        next.push(Arc::new(ext.relabel(&lab)));
                    }
                    if seen.len() > cap {
                        return Err(ClassError::BudgetExceeded { cap });
                    }
                }
            }
            next.sort();
            layer = next;
        }
        Ok(layer)
    }

    /// Members of every size `0..=n`, concatenated in size order.
    pub fn members_up_to(
        &self,
        n: usize,
        cap: usize,
    ) -> Result<Vec<Arc<FiniteStructure>>, ClassError> {
        let mut out = Vec::new();
        for size in 0..=n {
            out.extend(self.enumerate_members(size, cap)?);
        }
        Ok(out)
    }
}

fn guard(count: usize) -> Result<(), ClassError> {
    if count > ENUMERATION_CAP {
        Err(ClassError::BudgetExceeded {
            cap: ENUMERATION_CAP,
        })
    } else {
        Ok(())
    }
}

/// Canonical form with the first `pinned` elements held fixed pointwise.
pub(crate) fn pinned_form(s: &Arc<FiniteStructure>, pinned: usize) -> Vec<u8> {
    let mut cells: Vec<Vec<usize>> = (0..pinned).map(|i| vec![i]).collect();
    let rest: Vec<usize> = (pinned..s.domain_size()).collect();
    if !rest.is_empty() {
        cells.push(rest);
    }
    let lab = canonical_labeling(s, Some(&cells));
    let canon = s.relabel(&lab);
    crate::format::serialize_structure(&canon).into_bytes()
}

fn graph_member(s: &FiniteStructure) -> bool {
    s.tuples(0)
        .all(|t| t[0] != t[1] && s.contains(0, &[t[1], t[0]]))
}

fn linear_order_member(s: &FiniteStructure) -> bool {
    let n = s.domain_size();
    if s.tuple_count(0) != n.saturating_sub(1) * n / 2 {
        return false;
    }
    if s.tuples(0).any(|t| t[0] == t[1]) {
        return false;
    }
    // out-degrees of a strict total order are a permutation of 0..n
    let order = order_of(s);
    if order.len() != n {
        return false;
    }
    for (i, &x) in order.iter().enumerate() {
        for &y in order.iter().skip(i + 1) {
            if !s.contains(0, &[x, y]) || s.contains(0, &[y, x]) {
                return false;
            }
        }
    }
    true
}

/// Elements of a linear order sorted ascending, assuming membership.
pub(crate) fn order_of(s: &FiniteStructure) -> Vec<usize> {
    let n = s.domain_size();
    let mut outdeg = vec![0usize; n];
    for t in s.tuples(0) {
        outdeg[t[0]] += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| std::cmp::Reverse(outdeg[x]));
    // ascending order: out-degree n-1 is the least element
    order
}

fn triad_member(s: &FiniteStructure) -> bool {
    if !s
        .tuples(0)
        .all(|t| t[0] != t[1] && s.contains(0, &[t[1], t[0]]))
    {
        return false;
    }
    for x in s.tuples(1) {
        if s.contains(2, &[x[0]]) {
            return false;
        }
    }
    for comp in components(s, 0) {
        if comp.len() > 3 {
            return false;
        }
        for (i, &a) in comp.iter().enumerate() {
            for &b in comp.iter().skip(i + 1) {
                if !s.contains(0, &[a, b]) {
                    return false;
                }
            }
        }
    }
    true
}
