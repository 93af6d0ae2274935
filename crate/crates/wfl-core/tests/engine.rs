//! Amalgamation engine tests against an independent brute-force oracle.
//!
//! The oracle enumerates apexes from first principles: both legs as raw
//! injections, all relation completions on undetermined positions, validated
//! through the public embedding/membership contracts only.

use std::sync::Arc;

use wfl_core::amalgam::AmalgamationError;
use wfl_core::class::{graph, linear_order, triad};
use wfl_core::verdict::CertificateKind;
use wfl_core::{
    amalgamate, check_ap, check_jep, check_wap, factor_amalgamable, find_amalgamable_extension,
    is_amalgamable, is_weakly_pure, weak_sc_diagram, Embedding, FiniteStructure, SearchBudget,
    Span, StructureClass, VerdictStatus, Witness,
};

fn arc(s: FiniteStructure) -> Arc<FiniteStructure> {
    Arc::new(s)
}

fn budget(small: usize, ext: usize) -> SearchBudget {
    SearchBudget::new(small, ext, 100, 0).unwrap()
}

fn kn(n: usize) -> FiniteStructure {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    graph(n, &edges)
}

// ---------------------------------------------------------------------
// the oracle
// ---------------------------------------------------------------------

/// All injective maps of `0..k` into `0..s`.
fn injections(k: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(k: usize, s: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..s {
            if !cur.contains(&v) {
                cur.push(v);
                rec(k, s, cur, out);
                cur.pop();
            }
        }
    }
    rec(k, s, &mut cur, &mut out);
    out
}

/// Brute-force minimal apex size for a span, or None if no amalgam exists
/// with apex size <= bound. `over_b` additionally requires commutation over
/// the whole of B. `paired` adds cross edges in symmetric pairs (sound for
/// classes whose membership forces symmetry; blind otherwise).
fn brute_minimal_apex(
    class: &StructureClass,
    span: &Span,
    bound: usize,
    over_b: bool,
    paired: bool,
) -> Option<usize> {
    let c = span.left().target();
    let d = span.right().target();
    let nrel = c.signature().relation_count();
    let lo = c.domain_size().max(d.domain_size());
    for s in lo..=bound {
        // wlog the left leg is the identity onto the first |C| slots
        for ir in injections(d.domain_size(), s) {
            // coverage: minimal apexes are covered by the two images
            let mut covered = vec![false; s];
            for v in 0..c.domain_size() {
                covered[v] = true;
            }
            for &v in &ir {
                covered[v] = true;
            }
            if covered.iter().any(|&x| !x) {
                continue;
            }
            // commutation over A (or additionally over B)
            let a = span.shared();
            let ok_a = a.elements().all(|x| {
                let via_left = span.left().apply(span.base().apply(x));
                let via_right = ir[span.right().apply(span.base().apply(x))];
                via_left == via_right
            });
            if !ok_a {
                continue;
            }
            if over_b {
                let b = span.base().target();
                let ok_b = b
                    .elements()
                    .all(|y| span.left().apply(y) == ir[span.right().apply(y)]);
                if !ok_b {
                    continue;
                }
            }
            // determined tuples
            let mut determined: Vec<Vec<Vec<usize>>> = vec![Vec::new(); nrel];
            for rel in 0..nrel {
                for t in c.tuples(rel) {
                    determined[rel].push(t.to_vec());
                }
                for t in d.tuples(rel) {
                    determined[rel].push(t.iter().map(|&x| ir[x]).collect());
                }
            }
            // free positions: tuples touching both a C-only and a D-only slot
            let c_only: Vec<usize> = (0..c.domain_size()).filter(|v| !ir.contains(v)).collect();
            let d_only: Vec<usize> = ir
                .iter()
                .copied()
                .filter(|&v| v >= c.domain_size())
                .collect();
            let mut positions: Vec<(usize, Vec<usize>)> = Vec::new();
            for rel in 0..nrel {
                let arity = c.signature().arity(rel);
                let mut t = vec![0usize; arity];
                'odo: loop {
                    let has_c = t.iter().any(|e| c_only.contains(e));
                    let has_d = t.iter().any(|e| d_only.contains(e));
                    if has_c && has_d && !determined[rel].contains(&t) && (!paired || t[0] <= t[1])
                    {
                        positions.push((rel, t.clone()));
                    }
                    let mut p = arity;
                    while p > 0 {
                        p -= 1;
                        if t[p] + 1 < s {
                            t[p] += 1;
                            for y in t.iter_mut().skip(p + 1) {
                                *y = 0;
                            }
                            continue 'odo;
                        }
                    }
                    break;
                }
            }
            assert!(positions.len() <= 20, "oracle span too large");
            for mask in 0u64..(1 << positions.len()) {
                let mut tuples = determined.clone();
                for (k, (rel, t)) in positions.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        tuples[*rel].push(t.clone());
                        if paired && t[0] != t[1] {
                            tuples[*rel].push(vec![t[1], t[0]]);
                        }
                    }
                }
                let apex = match FiniteStructure::try_new(c.signature().clone(), s, tuples) {
                    Ok(a) => arc(a),
                    Err(_) => continue,
                };
                if !class.is_member(&apex) {
                    continue;
                }
                let il = Embedding::new(c.clone(), apex.clone(), (0..c.domain_size()).collect());
                let irr = Embedding::new(d.clone(), apex.clone(), ir.clone());
                if il.is_ok() && irr.is_ok() {
                    return Some(s);
                }
            }
        }
    }
    None
}

fn id_span(a: &Arc<FiniteStructure>, c: &Arc<FiniteStructure>, d: &Arc<FiniteStructure>) -> Span {
    let id = Embedding::identity(a);
    let f = Embedding::new(a.clone(), c.clone(), (0..a.domain_size()).collect()).unwrap();
    let g = Embedding::new(a.clone(), d.clone(), (0..a.domain_size()).collect()).unwrap();
    Span::new(id, f, g).unwrap()
}

// ---------------------------------------------------------------------
// amalgamate
// ---------------------------------------------------------------------

#[test]
fn identity_span_amalgamates_to_itself() {
    let class = StructureClass::builtin("graphs").unwrap();
    let a = arc(kn(3));
    let span = Span::identity(&a);
    let am = amalgamate(&class, &span, &budget(4, 6)).unwrap();
    assert_eq!(am.apex().as_ref(), a.as_ref());
    assert!(am.into_left().is_identity_inclusion());
    assert!(am.into_right().is_identity_inclusion());
}

#[test]
fn vertex_with_two_edges_minimal_apex_matches_oracle() {
    // A = vertex, C = D = edge over A; the oracle fixes the expected minimum
    let class = StructureClass::builtin("graphs").unwrap();
    let a = arc(graph(1, &[]));
    let c = arc(graph(2, &[(0, 1)]));
    let span = id_span(&a, &c, &c);
    let expect = brute_minimal_apex(&class, &span, 3, false, true).unwrap();
    assert_eq!(expect, 2); // identifying the two new endpoints is allowed
    let am = amalgamate(&class, &span, &budget(3, 6)).unwrap();
    assert_eq!(am.apex().domain_size(), expect);
}

#[test]
fn triad_red_blue_span_fails_definitively() {
    let class = StructureClass::builtin("triad").unwrap();
    let a = arc(triad(2, &[(0, 1)], &[], &[]));
    let red = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[2], &[]));
    let blue = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[], &[2]));
    let span = id_span(&a, &red, &blue);
    assert_eq!(brute_minimal_apex(&class, &span, 6, false, true), None);
    match amalgamate(&class, &span, &budget(4, 6)) {
        Err(AmalgamationError::Exhausted { bound }) => assert_eq!(bound, 4),
        other => panic!("expected definite exhaustion, got {other:?}"),
    }
}

#[test]
fn engine_matches_oracle_on_small_graph_spans() {
    let class = StructureClass::builtin("graphs").unwrap();
    let b = budget(3, 8);
    for a in class.members_up_to(2, 1000).unwrap() {
        let exts = class.extensions(&a, 3 - a.domain_size().min(3)).unwrap();
        let mut legs = vec![a.clone()];
        legs.extend(exts);
        for c in &legs {
            for d in &legs {
                if c.domain_size() + d.domain_size() > 6 {
                    continue;
                }
                let span = id_span(&a, c, d);
                let oracle = brute_minimal_apex(&class, &span, 6, false, true);
                let engine = amalgamate(&class, &span, &b);
                match (oracle, engine) {
                    (Some(s), Ok(am)) => {
                        assert_eq!(am.apex().domain_size(), s, "span over {a:?}: {c:?} {d:?}")
                    }
                    (None, Err(_)) => {}
                    (o, e) => panic!("oracle {o:?} vs engine {e:?} on {c:?} {d:?}"),
                }
            }
        }
    }
}

#[test]
fn engine_matches_oracle_on_small_triad_spans() {
    let class = StructureClass::builtin("triad").unwrap();
    let b = budget(3, 8);
    for a in class.members_up_to(1, 1000).unwrap() {
        let exts = class.extensions(&a, 2).unwrap();
        let mut legs = vec![a.clone()];
        legs.extend(exts);
        for c in &legs {
            for d in &legs {
                if c.domain_size() + d.domain_size() > 5 {
                    continue;
                }
                let span = id_span(&a, c, d);
                let oracle = brute_minimal_apex(&class, &span, 5, false, true);
                let engine = amalgamate(&class, &span, &b);
                match (oracle, engine) {
                    (Some(s), Ok(am)) => {
                        assert_eq!(am.apex().domain_size(), s, "span over {a:?}: {c:?} {d:?}")
                    }
                    (None, Err(AmalgamationError::Exhausted { .. })) => {}
                    (o, e) => panic!("oracle {o:?} vs engine {e:?} on {c:?} {d:?}"),
                }
            }
        }
    }
}

#[test]
fn linear_order_span_interleaves() {
    // C: a < b, D: a < c; minimal apex is the 2-chain via identification
    let class = StructureClass::builtin("linear-orders").unwrap();
    let a = arc(linear_order(1));
    let c = arc(linear_order(2));
    let span = id_span(&a, &c, &c);
    let oracle = brute_minimal_apex(&class, &span, 3, false, false).unwrap();
    let am = amalgamate(&class, &span, &budget(3, 6)).unwrap();
    assert_eq!(am.apex().domain_size(), oracle);
    assert!(class.is_member(am.apex()));
}

#[test]
fn linear_order_incompatible_sides_need_fresh_point() {
    // C extends a upward, D extends a downward: no identification possible
    let class = StructureClass::builtin("linear-orders").unwrap();
    let a = arc(linear_order(1));
    let up = arc(linear_order(2)); // a=0 < 1
    let down = {
        let s =
            FiniteStructure::try_new(class.signature().clone(), 2, vec![vec![vec![1, 0]]]).unwrap();
        arc(s)
    };
    let span = id_span(&a, &up, &down);
    let am = amalgamate(&class, &span, &budget(3, 6)).unwrap();
    assert_eq!(am.apex().domain_size(), 3);
    assert!(class.is_member(am.apex()));
    let oracle = brute_minimal_apex(&class, &span, 3, false, false).unwrap();
    assert_eq!(oracle, 3);
}

#[test]
fn weak_square_separates_from_strong_square() {
    // over the certified extension K2 -> K3 | K2-component, a span completed
    // over A exists while no completion commutes over all of B
    let class = StructureClass::builtin("triad").unwrap();
    let b_struct = arc(triad(5, &[(0, 1), (0, 2), (1, 2), (3, 4)], &[], &[]));
    let c_struct = arc(triad(
        6,
        &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
        &[5],
        &[],
    ));
    let d_struct = arc(triad(
        6,
        &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
        &[],
        &[5],
    ));
    let a = arc(triad(2, &[(0, 1)], &[], &[]));
    let e = Embedding::new(a.clone(), b_struct.clone(), vec![0, 1]).unwrap();
    assert!(class.certify_amalgamable(&e).is_some());
    let f = Embedding::new(b_struct.clone(), c_struct.clone(), vec![0, 1, 2, 3, 4]).unwrap();
    let g = Embedding::new(b_struct.clone(), d_struct.clone(), vec![0, 1, 2, 3, 4]).unwrap();
    let span = Span::new(e, f, g).unwrap();
    // over A: the engine completes (disjoint copies of the partial component)
    let am = amalgamate(&class, &span, &budget(4, 12)).unwrap();
    assert!(class.is_member(am.apex()));
    // over B: impossible at the full structural bound
    assert_eq!(brute_minimal_apex(&class, &span, 7, true, true), None);
    // and the motivating red/blue span fails over A and over B alike
    let red = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[2], &[]));
    let blue = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[], &[2]));
    let rb = id_span(&a, &red, &blue);
    assert_eq!(brute_minimal_apex(&class, &rb, 6, true, true), None);
    assert_eq!(brute_minimal_apex(&class, &rb, 6, false, true), None);
}

// ---------------------------------------------------------------------
// is_amalgamable / find_amalgamable_extension
// ---------------------------------------------------------------------

#[test]
fn graph_embeddings_are_amalgamable_with_certificate() {
    let class = StructureClass::builtin("graphs").unwrap();
    let e = Embedding::new(arc(graph(2, &[(0, 1)])), arc(kn(4)), vec![0, 1]).unwrap();
    let v = is_amalgamable(&class, &e, &budget(4, 6));
    assert!(v.is_holds());
    match v.witness() {
        Some(Witness::Certificate { kind, .. }) => {
            assert_eq!(*kind, CertificateKind::FreeAmalgam)
        }
        w => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn triad_identity_on_k2_fails_with_replayable_span() {
    let class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let v = is_amalgamable(&class, &Embedding::identity(&k2), &budget(4, 6));
    assert!(v.is_fails());
    match v.witness() {
        Some(Witness::SpanRefuted {
            base,
            left,
            right,
            bound,
        }) => {
            let span = Span::new(base.clone(), left.clone(), right.clone()).unwrap();
            match amalgamate(&class, &span, &budget(4, 6)) {
                Err(AmalgamationError::Exhausted { bound: b2 }) => assert_eq!(b2, *bound),
                other => panic!("witness did not replay: {other:?}"),
            }
        }
        w => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn triad_completion_inclusion_is_amalgamable() {
    let class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let k3 = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[], &[]));
    let e = Embedding::new(k2, k3, vec![0, 1]).unwrap();
    let v = is_amalgamable(&class, &e, &budget(4, 6));
    assert!(v.is_holds());
}

#[test]
fn graphs_extension_search_returns_identity() {
    let class = StructureClass::builtin("graphs").unwrap();
    for a in class.members_up_to(3, 1000).unwrap() {
        let (e, v) = find_amalgamable_extension(&class, &a, &budget(3, 6)).unwrap();
        assert!(e.is_identity_inclusion() && e.target().domain_size() == a.domain_size());
        assert!(v.is_holds());
    }
}

#[test]
fn triad_k2_extends_to_plain_triangle() {
    let class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let (e, _) = find_amalgamable_extension(&class, &k2, &budget(4, 12)).unwrap();
    assert_eq!(e.target().domain_size(), 3);
    // plain completion: no decorations
    assert_eq!(e.target().tuple_count(1), 0);
    assert_eq!(e.target().tuple_count(2), 0);
    assert_eq!(e.target().tuple_count(0), 6);
}

#[test]
fn triad_two_k2_components_complete_to_six() {
    let class = StructureClass::builtin("triad").unwrap();
    let two_k2 = arc(triad(4, &[(0, 1), (2, 3)], &[], &[]));
    let (e, _) = find_amalgamable_extension(&class, &two_k2, &budget(4, 12)).unwrap();
    assert_eq!(e.target().domain_size(), 6);
}

#[test]
fn triad_hull_matches_breadth_first_least_witness() {
    // the hull shortcut must agree with an honest breadth-first scan; kept
    // to members whose completions stay enumerable
    let class = StructureClass::builtin("triad").unwrap();
    let b = budget(4, 12);
    let comps_of = |s: &FiniteStructure| {
        let mut seen = vec![false; s.domain_size()];
        let mut count = 0;
        for v in 0..s.domain_size() {
            if !seen[v] {
                count += 1;
                let mut stack = vec![v];
                while let Some(x) = stack.pop() {
                    if seen[x] {
                        continue;
                    }
                    seen[x] = true;
                    for t in s.tuples(0) {
                        if t[0] == x && !seen[t[1]] {
                            stack.push(t[1]);
                        }
                    }
                }
            }
        }
        count
    };
    for a in class.members_up_to(3, 10_000).unwrap() {
        if comps_of(&a) > 2 {
            continue;
        }
        let (hull, _) = find_amalgamable_extension(&class, &a, &b).unwrap();
        let hull_size = hull.target().domain_size();
        // nothing strictly smaller is certified
        if hull_size > a.domain_size() {
            for cand in class
                .extensions(&a, hull_size - a.domain_size() - 1)
                .unwrap()
            {
                let e = Embedding::new(a.clone(), cand.clone(), (0..a.domain_size()).collect())
                    .unwrap();
                assert!(
                    class.certify_amalgamable(&e).is_none(),
                    "smaller certified extension exists for {a:?}"
                );
            }
            assert!(
                class
                    .certify_amalgamable(&Embedding::identity(&a))
                    .is_none(),
                "identity already certified for {a:?}"
            );
        }
        // the hull is the canonically least certified extension at its size
        let mut candidates = vec![a.clone()];
        candidates.extend(class.extensions(&a, hull_size - a.domain_size()).unwrap());
        let best = candidates
            .into_iter()
            .find(|cand| {
                let e = Embedding::new(a.clone(), cand.clone(), (0..a.domain_size()).collect())
                    .unwrap();
                class.certify_amalgamable(&e).is_some()
            })
            .expect("completion exists within bound");
        assert_eq!(
            hull.target().as_ref(),
            best.as_ref(),
            "hull disagrees with scan on {a:?}"
        );
    }
}

// ---------------------------------------------------------------------
// checkers
// ---------------------------------------------------------------------

#[test]
fn ap_holds_for_graphs_and_orders() {
    let b = budget(3, 6);
    for name in ["graphs", "linear-orders"] {
        let class = StructureClass::builtin(name).unwrap();
        let v = check_ap(&class, &b);
        assert!(v.is_holds(), "{name}: {:?}", v.status());
    }
}

#[test]
fn ap_fails_for_triad_with_witness() {
    let class = StructureClass::builtin("triad").unwrap();
    let v = check_ap(&class, &budget(3, 6));
    assert!(v.is_fails());
    match v.witness() {
        Some(Witness::SpanRefuted {
            base, left, right, ..
        }) => {
            let span = Span::new(base.clone(), left.clone(), right.clone()).unwrap();
            assert!(matches!(
                amalgamate(&class, &span, &budget(3, 6)),
                Err(AmalgamationError::Exhausted { .. })
            ));
        }
        w => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn wap_holds_for_triad_with_completion_witnesses() {
    let class = StructureClass::builtin("triad").unwrap();
    let v = check_wap(&class, &SearchBudget::new(4, 12, 100, 0).unwrap());
    assert!(v.is_holds());
    match v.witness() {
        Some(Witness::Extensions(table)) => {
            assert!(!table.is_empty());
            for (e, _) in table {
                assert!(is_amalgamable(&class, e, &budget(4, 12)).is_holds());
            }
        }
        w => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn ap_implies_wap_with_identity_witnesses() {
    let b = budget(3, 6);
    for name in ["graphs", "linear-orders"] {
        let class = StructureClass::builtin(name).unwrap();
        assert!(check_ap(&class, &b).is_holds());
        let v = check_wap(&class, &b);
        assert!(v.is_holds());
        match v.witness() {
            Some(Witness::Extensions(table)) => {
                for (e, _) in table {
                    assert!(e.is_identity_inclusion(), "{name}: non-identity witness");
                    assert_eq!(e.source().domain_size(), e.target().domain_size());
                }
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }
}

#[test]
fn jep_holds_with_disjoint_union_or_concatenation() {
    let b = budget(3, 6);
    for name in ["graphs", "triad", "linear-orders"] {
        let class = StructureClass::builtin(name).unwrap();
        let v = check_jep(&class, &b);
        assert!(v.is_holds(), "{name}");
    }
    // two chains of lengths 2 and 3 concatenate to a 5-chain
    let class = StructureClass::builtin("linear-orders").unwrap();
    let (l, r) = class
        .jep_witness(&arc(linear_order(2)), &arc(linear_order(3)))
        .unwrap();
    assert_eq!(l.target().domain_size(), 5);
    assert_eq!(l.target(), r.target());
    assert!(class.is_member(l.target()));
}

#[test]
fn verdict_monotone_under_budget_increase() {
    let triad_class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let small = is_amalgamable(&triad_class, &Embedding::identity(&k2), &budget(3, 6));
    let large = is_amalgamable(&triad_class, &Embedding::identity(&k2), &budget(4, 8));
    assert_eq!(small.status(), large.status());
    assert_eq!(small.status(), VerdictStatus::Fails);

    let graphs = StructureClass::builtin("graphs").unwrap();
    let e = Embedding::identity(&arc(kn(3)));
    assert_eq!(
        is_amalgamable(&graphs, &e, &budget(3, 6)).status(),
        is_amalgamable(&graphs, &e, &budget(4, 8)).status()
    );
}

#[test]
fn certificates_replay_through_bounded_search() {
    // every oracle certificate must be confirmed by exhausting small spans
    let b = budget(3, 6);
    for name in ["graphs", "linear-orders", "triad"] {
        let class = StructureClass::builtin(name).unwrap();
        for a in class.members_up_to(2, 1000).unwrap() {
            let Some((e, v)) = find_amalgamable_extension(&class, &a, &b) else {
                continue;
            };
            assert!(v.is_holds());
            if e.target().domain_size() > b.small_size {
                continue;
            }
            // replay: all small spans over the target must amalgamate
            let target = e.target().clone();
            let mut legs = vec![target.clone()];
            legs.extend(
                class
                    .extensions(&target, b.small_size - target.domain_size())
                    .unwrap(),
            );
            for c in &legs {
                for d in &legs {
                    let f = Embedding::new(
                        target.clone(),
                        c.clone(),
                        (0..target.domain_size()).collect(),
                    )
                    .unwrap();
                    let g = Embedding::new(
                        target.clone(),
                        d.clone(),
                        (0..target.domain_size()).collect(),
                    )
                    .unwrap();
                    let span = Span::new(e.clone(), f, g).unwrap();
                    assert!(
                        amalgamate(&class, &span, &budget(4, 12)).is_ok(),
                        "{name}: certified arrow failed replay on a span"
                    );
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// factorization, the consistency square, weak purity
// ---------------------------------------------------------------------

#[test]
fn factor_through_image_for_graphs() {
    let class = StructureClass::builtin("graphs").unwrap();
    let k1 = arc(graph(1, &[]));
    let k5 = arc(kn(5));
    let e = Embedding::new(k1.clone(), k5, vec![0]).unwrap();
    let (e1, incl) = factor_amalgamable(&class, &e, &budget(3, 6)).unwrap();
    assert_eq!(e1.target().domain_size(), 1);
    let composed = e1.compose(&incl).unwrap();
    assert_eq!(composed.map(), e.map());
}

#[test]
fn factor_falls_back_to_whole_target() {
    let class = StructureClass::builtin("linear-orders").unwrap();
    let two = arc(linear_order(2));
    let three = arc(linear_order(3));
    let e = Embedding::new(two, three, vec![0, 2]).unwrap();
    let (e1, incl) = factor_amalgamable(&class, &e, &budget(2, 6)).unwrap();
    assert!(e1.target().domain_size() <= 2);
    assert_eq!(e1.compose(&incl).unwrap().map(), e.map());
    assert!(is_amalgamable(&class, &e1, &budget(2, 6)).is_holds());
}

#[test]
fn factor_completes_triad_component_inside_target() {
    let class = StructureClass::builtin("triad").unwrap();
    // M: a completed triangle over the K2 image plus a separate component
    let m = arc(triad(
        6,
        &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
        &[5],
        &[],
    ));
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let e = Embedding::new(k2, m, vec![0, 1]).unwrap();
    let (e1, incl) = factor_amalgamable(&class, &e, &budget(3, 6)).unwrap();
    assert_eq!(e1.target().domain_size(), 3);
    assert!(is_amalgamable(&class, &e1, &budget(3, 6)).is_holds());
    assert_eq!(e1.compose(&incl).unwrap().map(), e.map());
}

#[test]
fn weak_sc_square_for_graphs_is_trivial() {
    let class = StructureClass::builtin("graphs").unwrap();
    let k1 = arc(graph(1, &[]));
    let k3 = arc(kn(3));
    let e = Embedding::new(k1, k3.clone(), vec![1]).unwrap();
    let (e_w, b_to_n, k_to_n) = weak_sc_diagram(&class, &e, &budget(3, 6)).unwrap();
    assert_eq!(e_w.target().domain_size(), 1); // B = A, id amalgamable
    assert_eq!(k_to_n.source().as_ref(), k3.as_ref());
    // square commutes over A
    let via_k = e.compose(&k_to_n).unwrap();
    let via_b = e_w.compose(&b_to_n).unwrap();
    assert_eq!(via_k.map(), via_b.map());
}

#[test]
fn weak_sc_square_for_identity_arrow() {
    let class = StructureClass::builtin("graphs").unwrap();
    let k2 = arc(kn(2));
    let e = Embedding::identity(&k2);
    let (e_w, b_to_n, k_to_n) = weak_sc_diagram(&class, &e, &budget(3, 6)).unwrap();
    assert!(is_amalgamable(&class, &e_w, &budget(3, 6)).is_holds());
    let via_k = e.compose(&k_to_n).unwrap();
    let via_b = e_w.compose(&b_to_n).unwrap();
    assert_eq!(via_k.map(), via_b.map());
}

#[test]
fn weak_sc_square_for_triad_uses_completion() {
    let class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let k = arc(triad(4, &[(0, 1), (0, 2), (1, 2)], &[], &[2]));
    let e = Embedding::new(k2.clone(), k, vec![0, 1]).unwrap();
    assert!(is_amalgamable(&class, &e, &budget(4, 8)).is_holds());
    let (e_w, b_to_n, k_to_n) = weak_sc_diagram(&class, &e, &budget(4, 8)).unwrap();
    assert_eq!(e_w.target().domain_size(), 3);
    assert!(is_amalgamable(&class, &e_w, &budget(4, 8)).is_holds());
    let via_k = e.compose(&k_to_n).unwrap();
    let via_b = e_w.compose(&b_to_n).unwrap();
    assert_eq!(via_k.map(), via_b.map());
    assert!(k_to_n.target().domain_size() <= 4);
}

#[test]
fn identity_is_weakly_pure() {
    let class = StructureClass::builtin("graphs").unwrap();
    let k = arc(kn(2));
    let v = is_weakly_pure(&class, &Embedding::identity(&k), &budget(2, 4));
    assert!(v.is_holds());
}

#[test]
fn graph_inclusion_is_weakly_pure() {
    let class = StructureClass::builtin("graphs").unwrap();
    let k1 = arc(graph(1, &[]));
    let k2 = arc(kn(2));
    let e = Embedding::new(k1, k2, vec![0]).unwrap();
    let v = is_weakly_pure(&class, &e, &budget(2, 4));
    assert!(v.is_holds());
}

#[test]
fn triad_completion_is_weakly_pure() {
    let class = StructureClass::builtin("triad").unwrap();
    let k2 = arc(triad(2, &[(0, 1)], &[], &[]));
    let k3 = arc(triad(3, &[(0, 1), (0, 2), (1, 2)], &[], &[]));
    let e = Embedding::new(k2, k3, vec![0, 1]).unwrap();
    let v = is_weakly_pure(&class, &e, &budget(2, 6));
    assert!(v.is_holds());
}
