//! Essential-graph machinery: v-structure orientation, orientation-rule
//! closure, DAG <-> essential-graph conversion, randomized consistent
//! extension and canonical encoding for distinct-graph counting.
//!
//! An equivalence class of DAGs is specified by a skeleton plus a set of
//! v-structures; the essential graph is the closure of that pattern under
//! the orientation rules. The closure here applies exactly the two rules of
//! the PC algorithm's final step (avoid new v-structures, avoid cycles), not
//! the wider four-rule closure from the literature.

use crate::graph::{Dag, MixedGraph, NodeId};
use crate::pc::{NodeOrdering, SepsetTable};
use rand::Rng;
use thiserror::Error;

/// Orientation rules forced a directed cycle; the candidate graph is
/// discarded ("pinwheel" rejection).
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("orientation rules force a directed cycle")]
pub struct CyclicRejection;

/// The partially directed graph admits no consistent DAG extension.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no consistent extension exists")]
pub struct NoExtension;

/// A mixed graph closed under the orientation rules: acyclic, and a fixed
/// point of [`meek_closure`].
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct EssentialGraph(MixedGraph);

impl EssentialGraph {
    /// Wraps a graph that is already a closure fixed point.
    pub fn from_closed(g: MixedGraph) -> Self {
        debug_assert!(!g.has_directed_cycle());
        debug_assert_eq!(meek_closure(&g).as_ref(), Ok(&g));
        EssentialGraph(g)
    }

    #[inline]
    pub fn as_graph(&self) -> &MixedGraph {
        &self.0
    }

    pub fn into_graph(self) -> MixedGraph {
        self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.n_nodes()
    }
}

/// A collider triple (x, y, z) meaning x -> y <- z with x, z non-adjacent,
/// normalized to x < z.
pub type VStructure = (NodeId, NodeId, NodeId);

/// All v-structures of a graph, sorted. Works on any mixed graph; only
/// directed edges form colliders.
pub fn v_structures(g: &MixedGraph) -> Vec<VStructure> {
    let n = g.n_nodes();
    let mut out = Vec::new();
    for y in (0..n).map(NodeId) {
        let parents = g.parents(y);
        for (i, &x) in parents.iter().enumerate() {
            for &z in &parents[i + 1..] {
                if !g.adjacent(x, z) {
                    out.push((x, y, z));
                }
            }
        }
    }
    out.sort();
    out
}

/// Directs `tail -> head` if the pair is currently undirected; an existing
/// head at `tail` (edge already directed head -> tail) suppresses the new
/// head rather than creating a double-headed pair.
fn orient_into(g: &mut MixedGraph, tail: NodeId, head: NodeId) {
    if g.has_undirected(tail, head) {
        g.orient(tail, head);
    }
}

/// Collider orientation over a pruned skeleton: each triple x - y - z with
/// x, z non-adjacent becomes x -> y <- z iff y is absent from the recorded
/// separating set of {x, z}.
///
/// Triples are examined center-first in the sequence induced by `order`
/// (centers by ascending rank, then flank pairs by ascending rank pairs), and
/// a head that would land on an already-headed edge is suppressed, so the
/// result depends on `order` whenever collider claims conflict.
pub fn orient_v_structures(
    skel: &MixedGraph,
    seps: &SepsetTable,
    order: &NodeOrdering,
) -> MixedGraph {
    debug_assert_eq!(skel.n_directed_edges(), 0, "input must be a skeleton");
    let mut g = skel.clone();
    let seq = order.nodes();
    for &y in seq {
        for (i, &x) in seq.iter().enumerate() {
            if x == y || !skel.adjacent(x, y) {
                continue;
            }
            for &z in &seq[i + 1..] {
                if z == y || !skel.adjacent(z, y) || skel.adjacent(x, z) {
                    continue;
                }
                if let Some(s) = seps.get(x, z) {
                    if !s.contains(&y) {
                        orient_into(&mut g, x, y);
                        orient_into(&mut g, z, y);
                    }
                }
            }
        }
    }
    g
}

/// Exhaustively applies the two orientation rules until fixed point:
///
/// * rule (a): `a -> b -- c` with a, c non-adjacent orients `b -> c`
///   (avoids a new v-structure);
/// * rule (b): `a -- b` with a directed path a ~> b orients `a -> b`
///   (avoids a directed cycle).
///
/// Returns [`CyclicRejection`] if the input or any forced orientation
/// yields a directed cycle (a forced two-edge cycle counts).
pub fn meek_closure(g: &MixedGraph) -> Result<MixedGraph, CyclicRejection> {
    if g.has_directed_cycle() {
        return Err(CyclicRejection);
    }
    let mut g = g.clone();
    let n = g.n_nodes();
    loop {
        let mut changed = false;

        // Rule (a). Snapshot the directed edges; orientations added this
        // sweep are picked up on the next pass.
        let directed: Vec<_> = g.directed_edges().collect();
        for (a, b) in directed {
            for c in (0..n).map(NodeId) {
                if c != a && g.has_undirected(b, c) && !g.adjacent(a, c) {
                    if g.directed_path_exists(c, b) {
                        // b -> c is forced but closes a cycle.
                        return Err(CyclicRejection);
                    }
                    g.orient(b, c);
                    changed = true;
                }
            }
        }

        // Rule (b).
        let undirected: Vec<_> = g.undirected_edges().collect();
        for (u, v) in undirected {
            if !g.has_undirected(u, v) {
                continue; // oriented earlier in this sweep
            }
            if g.directed_path_exists(u, v) {
                g.orient(u, v);
                changed = true;
            } else if g.directed_path_exists(v, u) {
                g.orient(v, u);
                changed = true;
            }
        }

        if !changed {
            debug_assert!(!g.has_directed_cycle());
            return Ok(g);
        }
    }
}

/// Randomly converts a partially directed graph into a DAG with the same
/// skeleton, all directed edges preserved and no v-structure created that
/// the input lacks.
///
/// Implementation is randomized sink elimination: repeatedly pick, uniformly
/// at random, a node whose constraints allow it to be a sink of the
/// remaining graph, orient its undirected edges inward and remove it. Sound
/// and complete for extendability; the draw over the full extension set is
/// NOT uniform.
pub fn consistent_extension<R: Rng + ?Sized>(
    g: &MixedGraph,
    rng: &mut R,
) -> Result<Dag, NoExtension> {
    let n = g.n_nodes();
    let mut work = g.clone();
    let mut result = MixedGraph::new(n);
    for (t, h) in g.directed_edges() {
        result.add_directed(t, h);
    }
    let mut remaining = vec![true; n];

    for _ in 0..n {
        let mut candidates = Vec::new();
        'node: for x in (0..n).map(NodeId) {
            if !remaining[x.index()] {
                continue;
            }
            // A sink has no outgoing directed edge, and each undirected
            // neighbor must be adjacent to every other neighbor so that
            // orienting inward cannot create a v-structure.
            if !work.children(x).is_empty() {
                continue;
            }
            let neighbors = work.adjacencies(x);
            for &y in &work.undirected_neighbors(x) {
                for &z in &neighbors {
                    if z != y && !work.adjacent(y, z) {
                        continue 'node;
                    }
                }
            }
            candidates.push(x);
        }
        if candidates.is_empty() {
            return Err(NoExtension);
        }
        let pick = candidates[rng.random_range(0..candidates.len())];
        for y in work.undirected_neighbors(pick) {
            result.add_directed(y, pick);
        }
        for y in work.adjacencies(pick) {
            work.remove_between(pick, y);
        }
        remaining[pick.index()] = false;
    }

    Ok(Dag::new(result).expect("sink elimination never creates a cycle"))
}

/// The essential graph of `d`'s Markov equivalence class: skeleton plus
/// exactly `d`'s v-structures, closed under the orientation rules. Every
/// DAG in the class maps to the same output.
pub fn dag_to_essential(d: &Dag) -> EssentialGraph {
    let mut pattern = d.as_graph().skeleton();
    for (x, y, z) in v_structures(d.as_graph()) {
        orient_into(&mut pattern, x, y);
        orient_into(&mut pattern, z, y);
    }
    let closed = meek_closure(&pattern).expect("a dag's own pattern cannot force a cycle");
    EssentialGraph(closed)
}

/// Deterministic text token: equal graphs yield equal tokens, unequal graphs
/// unequal tokens. Directed edges serialize as sorted `tail>head` pairs,
/// undirected as sorted `min-max` pairs.
pub fn canonical_encoding(g: &MixedGraph) -> String {
    use std::fmt::Write;
    let mut s = format!("n{}", g.n_nodes());
    s.push_str(";d");
    for (t, h) in g.directed_edges() {
        write!(s, "{}>{},", t, h).unwrap();
    }
    s.push_str(";u");
    for (a, b) in g.undirected_edges() {
        write!(s, "{}-{},", a, b).unwrap();
    }
    s
}
