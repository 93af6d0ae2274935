//! Back-and-forth machinery between two chains: routing small structures
//! into a saturated chain, extraction of subchains with amalgamable links,
//! the alternating zig-zag whose composites reproduce the chain links, and
//! the homogeneity variant that pins the first map.
//!
//! Each half-round realizes the chains' return property: given the current
//! cross map factored through the next stage, the search finds the least
//! stage of the host chain admitting a return map that closes the triangle
//! over the previous subchain stage exactly. When the truncation is too
//! short to host a return map, construction fails loudly with the blocking
//! stage instead of guessing.

use std::sync::Arc;

use thiserror::Error;

use crate::amalgam::{check_jep, find_amalgamable_extension, is_amalgamable};
use crate::chain::Chain;
use crate::class::StructureClass;
use crate::embedding::{Embedding, EmbeddingSearch};
use crate::structure::FiniteStructure;
use crate::verdict::{SearchBudget, VerdictStatus};

#[derive(Debug, Error)]
pub enum ZigZagError {
    #[error("chain `{chain}` has no saturation witness for the requested structure within its truncation")]
    SaturationWitnessMissing { chain: String },
    #[error("joint embedding is not available for the routing step")]
    JepFailure,
    #[error("no cofinal subchain with amalgamable links at this bound")]
    NoAmalgamableSubchain,
    #[error("special property unrealized on chain `{chain}`: no return map within the truncation, blocking stage {blocking_stage}")]
    SpecialPropertyUnrealized {
        chain: String,
        blocking_stage: usize,
    },
    #[error("the pinned first map admits no amalgamable extension within the truncation")]
    PinUnextendable,
    #[error("depth must be at least 1")]
    DepthZero,
    #[error("chain was built over class `{chain}`, checker invoked with `{class}`")]
    ClassMismatch { chain: String, class: String },
    #[error("the base arrow is not verified amalgamable at this budget")]
    BaseNotAmalgamable,
    #[error("embedding targets no stage of the chain")]
    StageNotFound,
}

/// Back-and-forth data between two chains: the subchain indices, the
/// forward family `h_i` and the return family `q_i`, with
/// `q_i . h_i = k-link` and `h_{i+1} . q_i = l-link` at every round.
#[derive(Clone, Debug)]
pub struct ZigZag {
    chain_k: Chain,
    chain_l: Chain,
    pub k_indices: Vec<usize>,
    pub l_indices: Vec<usize>,
    pub h: Vec<Embedding>,
    pub q: Vec<Embedding>,
    pub depth: usize,
}

impl ZigZag {
    pub fn chain_k(&self) -> &Chain {
        &self.chain_k
    }

    pub fn chain_l(&self) -> &Chain {
        &self.chain_l
    }

    /// Pointwise check of both commutation equations at every round.
    pub fn verify_equations(&self) -> Result<(), String> {
        for i in 0..self.q.len() {
            let lhs = self.h[i]
                .compose(&self.q[i])
                .map_err(|e| format!("q_{i} . h_{i}: {e}"))?;
            let rhs = self
                .chain_k
                .composite(self.k_indices[i], self.k_indices[i + 1]);
            if lhs.map() != rhs.map() {
                return Err(format!("q_{i} . h_{i} differs from the k-link"));
            }
            let lhs = self.q[i]
                .compose(&self.h[i + 1])
                .map_err(|e| format!("h_{} . q_{i}: {e}", i + 1))?;
            let rhs = self
                .chain_l
                .composite(self.l_indices[i], self.l_indices[i + 1]);
            if lhs.map() != rhs.map() {
                return Err(format!("h_{} . q_{i} differs from the l-link", i + 1));
            }
        }
        Ok(())
    }
}

/// Mutually inverse partial maps between two truncations.
#[derive(Clone, Debug)]
pub struct PartialIsomorphism {
    pub source: Arc<FiniteStructure>,
    pub target: Arc<FiniteStructure>,
    pub forward: Vec<Option<usize>>,
    pub backward: Vec<Option<usize>>,
    /// source elements on which backward(forward(x)) = x is guaranteed
    pub agreement: Vec<usize>,
}

impl PartialIsomorphism {
    /// Pointwise mutual-inverse check on the agreement domain, plus the
    /// symmetric check on its forward image.
    pub fn check_mutually_inverse(&self) -> Result<(), String> {
        for &x in &self.agreement {
            let y = self.forward[x].ok_or(format!("forward undefined on {x}"))?;
            let back = self.backward[y].ok_or(format!("backward undefined on {y}"))?;
            if back != x {
                return Err(format!("backward(forward({x})) = {back}"));
            }
            let fwd = self.forward[back].ok_or("forward undefined on roundtrip")?;
            if fwd != y {
                return Err(format!("forward(backward({y})) = {fwd}"));
            }
        }
        Ok(())
    }

    pub fn apply_forward(&self, x: usize) -> Option<usize> {
        self.forward.get(x).copied().flatten()
    }
}

/// Implements the connectedness route: take the saturation witness of the
/// empty shape, joint-embed `a` with it, and look for the joint structure
/// inside the chain. Returns the hosting stage and the composed arrow.
pub fn route_into_saturated(
    class: &StructureClass,
    a: &Arc<FiniteStructure>,
    chain: &Chain,
    budget: &SearchBudget,
) -> Result<(usize, Embedding), ZigZagError> {
    let empty = Arc::new(FiniteStructure::empty(class.signature().clone()));
    let witness = find_amalgamable_extension(class, &empty, budget)
        .map(|(e, _)| e.target().clone())
        .unwrap_or(empty);
    let (into_d, _) = match class.jep_witness(a, &witness) {
        Some(pair) => pair,
        None => {
            if witness.domain_size() == 0 {
                (Embedding::identity(a), Embedding::identity(a))
            } else {
                return Err(ZigZagError::JepFailure);
            }
        }
    };
    let d = into_d.target().clone();
    for j in 0..chain.len() {
        if let Some(m) = EmbeddingSearch::new(&d, chain.stage(j)).first() {
            let m = Embedding::new_unchecked(d.clone(), chain.stage(j).clone(), m);
            let arrow = into_d.compose(&m).expect("route composes");
            return Ok((j, arrow));
        }
    }
    Err(ZigZagError::SaturationWitnessMissing {
        chain: chain.class_name().to_string(),
    })
}

/// Greedy cofinal subchain whose composite links are all verified
/// amalgamable (per-link verdicts first, then the class oracle on
/// composites). Fails when the subchain cannot reach the truncation.
pub fn extract_special_subchain(
    class: &StructureClass,
    chain: &Chain,
    budget: &SearchBudget,
) -> Result<Vec<usize>, ZigZagError> {
    let n = chain.len();
    let mut indices = vec![0usize];
    let mut current = 0usize;
    while current + 1 < n {
        let mut advanced = false;
        for j in (current + 1)..n {
            let ok = if j == current + 1 && chain.link_verdict(current) == VerdictStatus::Holds {
                true
            } else {
                let comp = chain.composite(current, j);
                match class.certify_amalgamable(&comp) {
                    Some(_) => true,
                    None => is_amalgamable(class, &comp, budget).is_holds(),
                }
            };
            if ok {
                indices.push(j);
                current = j;
                advanced = true;
                break;
            }
        }
        if !advanced {
            return Err(ZigZagError::NoAmalgamableSubchain);
        }
    }
    Ok(indices)
}

/// The return search: the least host stage `t` (drawn from `usable` past
/// `from_pos`) admitting an embedding of `d` that agrees with the base
/// occurrence pointwise, i.e. closes the triangle over the previous
/// subchain stage exactly. Pin targets are anchored at `anchor_stage` and
/// transported along the chain to each candidate stage.
fn special_return(
    host: &Chain,
    usable: &[usize],
    from_pos: usize,
    d: &Arc<FiniteStructure>,
    anchor_stage: usize,
    pins: &[(usize, usize)],
) -> Option<(usize, Embedding)> {
    let inclusions = host.all_inclusions();
    for (pos, &t) in usable.iter().enumerate().skip(from_pos) {
        if t < anchor_stage {
            continue;
        }
        let stage = host.stage(t);
        if stage.domain_size() < d.domain_size() {
            continue;
        }
        let stage_pins: Vec<(usize, usize)> = if inclusions {
            pins.to_vec()
        } else {
            let comp = host.composite(anchor_stage, t);
            pins.iter().map(|&(de, ae)| (de, comp.apply(ae))).collect()
        };
        if stage_pins.iter().any(|&(_, v)| v >= stage.domain_size()) {
            continue;
        }
        if let Some(map) = EmbeddingSearch::new(d, stage).with_pins(stage_pins).first() {
            return Some((pos, Embedding::new_unchecked(d.clone(), stage.clone(), map)));
        }
    }
    None
}

struct HalfRoundState {
    /// position into the usable indices of the K chain for the current K̄
    kpos: usize,
    lpos: usize,
    /// factor of h_i through the K-successor stage: K_{succ(K̄_i)} -> L̄_i
    factor: Embedding,
}

/// Builds the zig-zag to `depth` rounds between two chains over the same
/// class, starting from a routed first map (or a pinned one, for the
/// homogeneity variant).
pub fn zigzag_build(
    class: &StructureClass,
    chain_k: &Chain,
    chain_l: &Chain,
    depth: usize,
    budget: &SearchBudget,
) -> Result<ZigZag, ZigZagError> {
    zigzag_build_inner(class, chain_k, chain_l, depth, budget, None)
}

fn check_class(class: &StructureClass, chain: &Chain) -> Result<(), ZigZagError> {
    if chain.class_name() != class.name() {
        return Err(ZigZagError::ClassMismatch {
            chain: chain.class_name().to_string(),
            class: class.name().to_string(),
        });
    }
    Ok(())
}

/// A pinned first step: `K̄_0` is forced at or after the given stage and
/// the first factor map must extend the given element correspondences
/// (sources anchored at `source_stage`, targets at `anchor_stage`).
struct FirstStepPin {
    k0_stage: usize,
    source_stage: usize,
    anchor_stage: usize,
    pins: Vec<(usize, usize)>,
}

fn zigzag_build_inner(
    class: &StructureClass,
    chain_k: &Chain,
    chain_l: &Chain,
    depth: usize,
    budget: &SearchBudget,
    pin: Option<FirstStepPin>,
) -> Result<ZigZag, ZigZagError> {
    if depth == 0 {
        return Err(ZigZagError::DepthZero);
    }
    check_class(class, chain_k)?;
    check_class(class, chain_l)?;
    if !check_jep(class, budget).is_holds() {
        return Err(ZigZagError::JepFailure);
    }
    let usable_k = extract_special_subchain(class, chain_k, budget)?;
    let usable_l = extract_special_subchain(class, chain_l, budget)?;

    // -- first step: h_0 = factor . k-link ------------------------------
    let kpos0 = match &pin {
        None => 0,
        Some(p) => usable_k
            .iter()
            .position(|&i| i >= p.k0_stage)
            .ok_or(ZigZagError::PinUnextendable)?,
    };
    if kpos0 + 1 >= usable_k.len() {
        return Err(ZigZagError::SpecialPropertyUnrealized {
            chain: chain_k.class_name().to_string(),
            blocking_stage: chain_k.len() - 1,
        });
    }
    let succ_stage = chain_k.stage(usable_k[kpos0 + 1]).clone();
    let (lpos0, factor) = match &pin {
        None => {
            let (j0, arrow) = route_into_saturated(class, &succ_stage, chain_l, budget)?;
            // lift the routed stage to a usable index
            let lpos = usable_l
                .iter()
                .position(|&i| i >= j0)
                .ok_or(ZigZagError::NoAmalgamableSubchain)?;
            let lifted = arrow
                .compose(&chain_l.composite(j0, usable_l[lpos]))
                .expect("route lifts along the chain");
            (lpos, lifted)
        }
        Some(p) => {
            let comp_src = chain_k.composite(p.source_stage, usable_k[kpos0 + 1]);
            let d_pins: Vec<(usize, usize)> = p
                .pins
                .iter()
                .map(|&(a, b)| (comp_src.apply(a), b))
                .collect();
            match special_return(chain_l, &usable_l, 0, &succ_stage, p.anchor_stage, &d_pins) {
                Some((pos, emb)) => (pos, emb),
                None => return Err(ZigZagError::PinUnextendable),
            }
        }
    };
    let h0 = chain_k
        .composite(usable_k[kpos0], usable_k[kpos0 + 1])
        .compose(&factor)
        .expect("factorized first map");

    let mut zz = ZigZag {
        chain_k: chain_k.clone(),
        chain_l: chain_l.clone(),
        k_indices: vec![usable_k[kpos0]],
        l_indices: vec![usable_l[lpos0]],
        h: vec![h0],
        q: Vec::new(),
        depth: 1,
    };
    let mut state = HalfRoundState {
        kpos: kpos0,
        lpos: lpos0,
        factor,
    };

    for _ in 1..depth {
        round(chain_k, chain_l, &usable_k, &usable_l, &mut zz, &mut state)?;
        zz.depth += 1;
    }
    debug_assert!(zz.verify_equations().is_ok());
    Ok(zz)
}

/// One full round: the K-side return map defines `q_i`, then the L-side
/// return map defines `h_{i+1}`; both searches take the least hosting stage.
fn round(
    chain_k: &Chain,
    chain_l: &Chain,
    usable_k: &[usize],
    usable_l: &[usize],
    zz: &mut ZigZag,
    state: &mut HalfRoundState,
) -> Result<(), ZigZagError> {
    // ---- q_i: L̄_i -> K̄_{i+1} ----------------------------------------
    if state.lpos + 1 >= usable_l.len() {
        return Err(ZigZagError::SpecialPropertyUnrealized {
            chain: chain_l.class_name().to_string(),
            blocking_stage: chain_l.len() - 1,
        });
    }
    let l_lo = usable_l[state.lpos];
    let l_hi = usable_l[state.lpos + 1];
    let u = state
        .factor
        .compose(&chain_l.composite(l_lo, l_hi))
        .expect("factor extends along the l-link");
    // pin: g(u(klink(x))) must equal the image of x along the chain
    let k_lo = usable_k[state.kpos];
    let k_hi = usable_k[state.kpos + 1];
    let klink = chain_k.composite(k_lo, k_hi);
    let kbar = chain_k.stage(k_lo);
    let pins: Vec<(usize, usize)> = kbar
        .elements()
        .map(|x| (u.apply(klink.apply(x)), x))
        .collect();
    let d = chain_l.stage(l_hi).clone();
    let (new_kpos, g) = special_return(chain_k, usable_k, state.kpos + 1, &d, k_lo, &pins).ok_or(
        ZigZagError::SpecialPropertyUnrealized {
            chain: chain_k.class_name().to_string(),
            blocking_stage: chain_k.len() - 1,
        },
    )?;
    let q_i = chain_l
        .composite(l_lo, l_hi)
        .compose(&g)
        .expect("return composes with the l-link");
    zz.q.push(q_i);
    zz.k_indices.push(usable_k[new_kpos]);

    // ---- h_{i+1}: K̄_{i+1} -> L̄_{i+1} --------------------------------
    if new_kpos + 1 >= usable_k.len() {
        return Err(ZigZagError::SpecialPropertyUnrealized {
            chain: chain_k.class_name().to_string(),
            blocking_stage: chain_k.len() - 1,
        });
    }
    let k_new = usable_k[new_kpos];
    let k_next = usable_k[new_kpos + 1];
    let u2 = g
        .compose(&chain_k.composite(k_new, k_next))
        .expect("return extends along the k-link");
    let llink = chain_l.composite(l_lo, l_hi);
    let lbar = chain_l.stage(l_lo);
    let pins: Vec<(usize, usize)> = lbar
        .elements()
        .map(|y| (u2.apply(llink.apply(y)), y))
        .collect();
    let d2 = chain_k.stage(k_next).clone();
    let (new_lpos, f) = special_return(chain_l, usable_l, state.lpos + 1, &d2, l_lo, &pins).ok_or(
        ZigZagError::SpecialPropertyUnrealized {
            chain: chain_l.class_name().to_string(),
            blocking_stage: chain_l.len() - 1,
        },
    )?;
    let h_next = chain_k
        .composite(k_new, k_next)
        .compose(&f)
        .expect("factor composes with the k-link");
    zz.h.push(h_next);
    zz.l_indices.push(usable_l[new_lpos]);

    state.kpos = new_kpos;
    state.lpos = new_lpos;
    state.factor = f;
    Ok(())
}

/// The colimit-level maps restricted to the truncations: forward from
/// `h_{depth-1}`, backward from `q_{depth-2}` (inverse-on-image at depth 1),
/// mutually inverse on the stated agreement domain.
pub fn truncation_isomorphism(z: &ZigZag) -> PartialIsomorphism {
    let chain_k = &z.chain_k;
    let chain_l = &z.chain_l;
    let k_last = chain_k.len() - 1;
    let l_last = chain_l.len() - 1;
    let source = chain_k.stage(k_last).clone();
    let target = chain_l.stage(l_last).clone();
    let d = z.depth;

    let mut forward: Vec<Option<usize>> = vec![None; source.domain_size()];
    let h_last = &z.h[d - 1];
    let k_inj = chain_k.composite(z.k_indices[d - 1], k_last);
    let l_inj = chain_l.composite(z.l_indices[d - 1], l_last);
    for v in 0..h_last.source().domain_size() {
        forward[k_inj.apply(v)] = Some(l_inj.apply(h_last.apply(v)));
    }

    let mut backward: Vec<Option<usize>> = vec![None; target.domain_size()];
    let agreement: Vec<usize>;
    if d >= 2 {
        let q_last = &z.q[d - 2];
        let l_inj_prev = chain_l.composite(z.l_indices[d - 2], l_last);
        let k_inj_new = chain_k.composite(z.k_indices[d - 1], k_last);
        for w in 0..q_last.source().domain_size() {
            backward[l_inj_prev.apply(w)] = Some(k_inj_new.apply(q_last.apply(w)));
        }
        let k_inj_prev = chain_k.composite(z.k_indices[d - 2], k_last);
        agreement = (0..chain_k.stage(z.k_indices[d - 2]).domain_size())
            .map(|v| k_inj_prev.apply(v))
            .collect();
    } else {
        for v in 0..h_last.source().domain_size() {
            backward[l_inj.apply(h_last.apply(v))] = Some(k_inj.apply(v));
        }
        agreement = (0..h_last.source().domain_size())
            .map(|v| k_inj.apply(v))
            .collect();
    }
    PartialIsomorphism {
        source,
        target,
        forward,
        backward,
        agreement,
    }
}

/// Weak-homogeneity witness: a zig-zag of the chain with itself whose first
/// map is pinned to the correspondence `(f.e)(a) -> (g.e)(a)`, so the
/// truncation map satisfies the triangle over `A` exactly.
pub fn homogeneity_automorphism(
    class: &StructureClass,
    chain: &Chain,
    e: &Embedding,
    f: &Embedding,
    g: &Embedding,
    depth: usize,
    budget: &SearchBudget,
) -> Result<ZigZag, ZigZagError> {
    if !is_amalgamable(class, e, budget).is_holds() {
        return Err(ZigZagError::BaseNotAmalgamable);
    }
    find_stage(chain, f.target()).ok_or(ZigZagError::StageNotFound)?;
    find_stage(chain, g.target()).ok_or(ZigZagError::StageNotFound)?;
    // factor each placement through the earliest stage containing its image,
    // leaving the rest of the chain available for the back-and-forth
    let f_stage = anchor_stage_of(chain, f)?;
    let g_stage = anchor_stage_of(chain, g)?;
    let a = e.source();
    let mut pins: Vec<(usize, usize)> = a
        .elements()
        .map(|x| (f.apply(e.apply(x)), g.apply(e.apply(x))))
        .collect();
    pins.sort();
    pins.dedup();
    zigzag_build_inner(
        class,
        chain,
        chain,
        depth,
        budget,
        Some(FirstStepPin {
            k0_stage: f_stage,
            source_stage: f_stage,
            anchor_stage: g_stage,
            pins,
        }),
    )
}

fn find_stage(chain: &Chain, s: &Arc<FiniteStructure>) -> Option<usize> {
    (0..chain.len()).find(|&i| chain.stage(i) == s)
}

/// Earliest stage whose domain covers the embedding's image (chains built
/// here have prefix-inclusion links, so the map stays valid there).
fn anchor_stage_of(chain: &Chain, m: &Embedding) -> Result<usize, ZigZagError> {
    if !chain.all_inclusions() {
        return find_stage(chain, m.target()).ok_or(ZigZagError::StageNotFound);
    }
    let needed = m.map().iter().copied().max().map(|x| x + 1).unwrap_or(0);
    (0..chain.len())
        .find(|&i| chain.stage(i).domain_size() >= needed)
        .ok_or(ZigZagError::StageNotFound)
}
