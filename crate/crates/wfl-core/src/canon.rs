//! Canonical forms via iterative partition refinement with backtracking
//! over refinement-stable orderings. Two structures over the same signature
//! get equal canonical byte strings exactly when they are isomorphic.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::structure::FiniteStructure;

/// Canonical byte string of a structure. Equal strings iff isomorphic
/// (over identical signatures).
pub fn canonical_form(s: &Arc<FiniteStructure>) -> Vec<u8> {
    let labeling = canonical_labeling(s, None);
    let canon = s.relabel(&labeling);
    encode(&canon)
}

/// Hex rendering of [`canonical_form`], used as a reference key in logs and
/// checkpoint files.
pub fn canonical_hex(s: &Arc<FiniteStructure>) -> String {
    hex::encode(canonical_form(s))
}

/// A relabeling map (old index -> new index) whose induced relabeled
/// structure is minimal among all refinement-stable orderings. An initial
/// partition pins colors: elements of different initial cells never mix,
/// making this usable for isomorphism-over-a-fixed-subset tests.
pub fn canonical_labeling(s: &Arc<FiniteStructure>, initial: Option<&[Vec<usize>]>) -> Vec<usize> {
    let n = s.domain_size();
    if n == 0 {
        return Vec::new();
    }
    let cells: Vec<Vec<usize>> = match initial {
        Some(p) => p.to_vec(),
        None => vec![(0..n).collect()],
    };
    debug_assert_eq!(cells.iter().map(|c| c.len()).sum::<usize>(), n);

    let degrees = total_degrees(s);
    let mut best: Option<(Vec<usize>, FiniteStructure)> = None;
    let mut leaves = 0usize;
    branch(s, refine(s, cells), &degrees, &mut best, &mut leaves);
    best.expect("canonical search visits at least one leaf").0
}

const LEAF_GUARD: usize = 1_000_000;

fn branch(
    s: &Arc<FiniteStructure>,
    cells: Vec<Vec<usize>>,
    degrees: &[usize],
    best: &mut Option<(Vec<usize>, FiniteStructure)>,
    leaves: &mut usize,
) {
    // pick the first non-singleton cell with a related element; cells made
    // entirely of isolated elements are interchangeable and need no branching
    let target = cells
        .iter()
        .position(|c| c.len() > 1 && c.iter().any(|&x| degrees[x] > 0));
    match target {
        None => {
            *leaves += 1;
            assert!(
                *leaves <= LEAF_GUARD,
                "canonical form search exceeded {LEAF_GUARD} orderings; structure too large"
            );
            let mut labeling = vec![0usize; s.domain_size()];
            let mut next = 0;
            for cell in &cells {
                for &x in cell {
                    labeling[x] = next;
                    next += 1;
                }
            }
            let relabeled = s.relabel(&labeling);
            match best {
                None => *best = Some((labeling, relabeled)),
                Some((_, b)) => {
                    if relabeled < *b {
                        *best = Some((labeling, relabeled));
                    }
                }
            }
        }
        Some(i) => {
            for &v in &cells[i] {
                let mut next = Vec::with_capacity(cells.len() + 1);
                for (j, cell) in cells.iter().enumerate() {
                    if j == i {
                        next.push(vec![v]);
                        next.push(cell.iter().copied().filter(|&x| x != v).collect());
                    } else {
                        next.push(cell.clone());
                    }
                }
                branch(s, refine(s, next), degrees, best, leaves);
            }
        }
    }
}

/// Splits cells by tuple-incidence keys until stable. The key of an element
/// is the sorted multiset of (relation, own position, cell ids of the whole
/// tuple) over all tuples containing it.
fn refine(s: &FiniteStructure, mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let n = s.domain_size();
    let sig = s.signature();
    loop {
        let mut cell_id = vec![0usize; n];
        for (i, cell) in cells.iter().enumerate() {
            for &x in cell {
                cell_id[x] = i;
            }
        }
        let mut keys: Vec<Vec<(usize, usize, Vec<usize>)>> = vec![Vec::new(); n];
        for rel in 0..sig.relation_count() {
            for t in s.tuples(rel) {
                let ids: Vec<usize> = t.iter().map(|&e| cell_id[e]).collect();
                for (pos, &e) in t.iter().enumerate() {
                    keys[e].push((rel, pos, ids.clone()));
                }
            }
        }
        for k in &mut keys {
            k.sort();
        }
        let mut next = Vec::with_capacity(cells.len());
        let mut changed = false;
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut groups: BTreeMap<&Vec<(usize, usize, Vec<usize>)>, Vec<usize>> =
                BTreeMap::new();
            for &x in cell {
                groups.entry(&keys[x]).or_default().push(x);
            }
            if groups.len() > 1 {
                changed = true;
            }
            for (_, g) in groups {
                next.push(g);
            }
        }
        cells = next;
        if !changed {
            return cells;
        }
    }
}

fn total_degrees(s: &FiniteStructure) -> Vec<usize> {
    let mut deg = vec![0usize; s.domain_size()];
    for rel in 0..s.signature().relation_count() {
        for t in s.tuples(rel) {
            for &e in t {
                deg[e] += 1;
            }
        }
    }
    deg
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn encode(s: &FiniteStructure) -> Vec<u8> {
    let sig = s.signature();
    let mut out = Vec::new();
    out.extend_from_slice(b"c1");
    push_u32(&mut out, sig.name().len());
    out.extend_from_slice(sig.name().as_bytes());
    push_u32(&mut out, sig.relation_count());
    for (sym, arity) in sig.relations() {
        push_u32(&mut out, sym.len());
        out.extend_from_slice(sym.as_bytes());
        push_u32(&mut out, *arity);
    }
    push_u32(&mut out, s.domain_size());
    for rel in 0..sig.relation_count() {
        push_u32(&mut out, s.tuple_count(rel));
        for t in s.tuples(rel) {
            for &e in t {
                push_u32(&mut out, e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::graph;
    use crate::embedding::find_isomorphism;

    fn arc(g: FiniteStructure) -> Arc<FiniteStructure> {
        Arc::new(g)
    }

    #[test]
    fn path_relabelings_share_form() {
        let p = arc(graph(3, &[(0, 1), (1, 2)]));
        let q = arc(p.relabel(&[2, 0, 1]));
        assert_eq!(canonical_form(&p), canonical_form(&q));
    }

    #[test]
    fn path_and_triangle_differ() {
        let p = arc(graph(3, &[(0, 1), (1, 2)]));
        let k3 = arc(graph(3, &[(0, 1), (1, 2), (0, 2)]));
        assert_ne!(canonical_form(&p), canonical_form(&k3));
    }

    /// Brute-force oracle: isomorphism by trying all bijections.
    fn brute_iso(a: &Arc<FiniteStructure>, b: &Arc<FiniteStructure>) -> bool {
        if a.domain_size() != b.domain_size() {
            return false;
        }
        let n = a.domain_size();
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if crate::embedding::Embedding::new(a.clone(), b.clone(), perm.clone()).is_ok() {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        if p.len() < 2 {
            return false;
        }
        let mut i = p.len() - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = p.len() - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    fn all_graphs(n: usize) -> Vec<Arc<FiniteStructure>> {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        let mut out = Vec::new();
        for mask in 0..(1u32 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &e)| e)
                .collect();
            out.push(arc(graph(n, &edges)));
        }
        out
    }

    #[test]
    fn eleven_distinct_forms_on_four_vertices() {
        // oracle: brute-force pairwise isomorphism over all 4-vertex graphs
        let gs = all_graphs(4);
        let mut reps: Vec<Arc<FiniteStructure>> = Vec::new();
        for g in &gs {
            if !reps.iter().any(|r| brute_iso(r, g)) {
                reps.push(g.clone());
            }
        }
        assert_eq!(reps.len(), 11);
        let mut forms: Vec<Vec<u8>> = gs.iter().map(canonical_form).collect();
        forms.sort();
        forms.dedup();
        assert_eq!(forms.len(), 11);
    }

    #[test]
    fn form_equality_matches_isomorphism_on_small_graphs() {
        for n in 0..=4 {
            let gs = all_graphs(n);
            for a in &gs {
                for b in &gs {
                    let same = canonical_form(a) == canonical_form(b);
                    let iso = find_isomorphism(a, b).unwrap().is_some();
                    assert_eq!(same, iso, "mismatch on {a:?} vs {b:?}");
                    assert_eq!(iso, brute_iso(a, b));
                }
            }
        }
    }

    #[test]
    fn empty_graph_canonicalizes_fast() {
        let e = arc(graph(9, &[]));
        let f = arc(graph(9, &[]));
        assert_eq!(canonical_form(&e), canonical_form(&f));
    }

    #[test]
    fn linear_order_forms_track_isomorphism() {
        use crate::class::linear_order;
        // all orders of one size are isomorphic; sizes differ
        for n in 0..=5usize {
            let a = arc(linear_order(n));
            let relabeled = arc(a.relabel(&(0..n).rev().collect::<Vec<_>>()));
            assert_eq!(canonical_form(&a), canonical_form(&relabeled));
            assert!(find_isomorphism(&a, &relabeled).unwrap().is_some());
            for m in 0..n {
                let b = arc(linear_order(m));
                assert_ne!(canonical_form(&a), canonical_form(&b));
                assert!(find_isomorphism(&a, &b).unwrap().is_none());
            }
        }
    }

    #[test]
    fn pinned_labeling_separates_pinned_elements() {
        // path 0-1-2 with 0 pinned apart: relabeling must keep 0 first
        let p = arc(graph(3, &[(0, 1), (1, 2)]));
        let lab = canonical_labeling(&p, Some(&[vec![0], vec![1, 2]]));
        assert_eq!(lab[0], 0);
    }
}
