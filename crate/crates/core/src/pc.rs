//! The PC algorithm parameterized by a significance level and a node
//! ordering, with double-headed-edge suppression during collider orientation
//! and rejection of candidates whose orientation rules force a cycle.
//!
//! The ordering is not temporal: it only fixes the sequence in which
//! independencies are checked. On finite data that sequence (and the
//! significance level) perturbs the output, which is exactly the handle the
//! search engines exploit; in the infinite-sample limit the output is
//! ordering-independent.

use crate::equivalence::{meek_closure, orient_v_structures, CyclicRejection};
use crate::graph::{MixedGraph, NodeId};
use crate::independence::CiTest;
use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("ordering is not a permutation of 0..{expected}")]
pub struct InvalidOrdering {
    pub expected: usize,
}

/// A permutation of all node ids, with O(1) rank lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOrdering {
    perm: Vec<NodeId>,
    rank: Vec<usize>,
}

impl NodeOrdering {
    pub fn identity(n: usize) -> Self {
        NodeOrdering {
            perm: (0..n).map(NodeId).collect(),
            rank: (0..n).collect(),
        }
    }

    pub fn from_permutation(perm: Vec<NodeId>) -> Result<Self, InvalidOrdering> {
        let n = perm.len();
        let mut rank = vec![usize::MAX; n];
        for (r, v) in perm.iter().enumerate() {
            if v.index() >= n || rank[v.index()] != usize::MAX {
                return Err(InvalidOrdering { expected: n });
            }
            rank[v.index()] = r;
        }
        Ok(NodeOrdering { perm, rank })
    }

    /// Uniform random permutation via a seeded shuffle.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<NodeId> = (0..n).map(NodeId).collect();
        perm.shuffle(rng);
        Self::from_permutation(perm).expect("shuffle preserves the permutation property")
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Nodes in ordering sequence.
    pub fn nodes(&self) -> &[NodeId] {
        &self.perm
    }

    pub fn rank(&self, v: NodeId) -> usize {
        self.rank[v.index()]
    }
}

/// For each removed pair {x, y}, the conditioning set that separated them.
#[derive(Debug, Clone, Default)]
pub struct SepsetTable {
    map: FxHashMap<(usize, usize), Vec<NodeId>>,
}

impl SepsetTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(x: NodeId, y: NodeId) -> (usize, usize) {
        (x.index().min(y.index()), x.index().max(y.index()))
    }

    /// Records the separator of {x, y}; stored sorted by node index.
    pub fn insert(&mut self, x: NodeId, y: NodeId, mut s: Vec<NodeId>) {
        assert_ne!(x, y);
        assert!(!s.contains(&x) && !s.contains(&y));
        s.sort_unstable();
        self.map.insert(Self::key(x, y), s);
    }

    pub fn get(&self, x: NodeId, y: NodeId) -> Option<&[NodeId]> {
        self.map.get(&Self::key(x, y)).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Result of one PC run: an essential-graph candidate, the separators found
/// in the pruning phase, and the test budget spent.
#[derive(Debug, Clone)]
pub struct PcOutput {
    pub graph: MixedGraph,
    pub sepsets: SepsetTable,
    pub alpha_used: f64,
    pub tests_performed: usize,
}

/// Enumerates k-subsets of `pool` in lexicographic order, stopping early
/// when `f` returns true.
fn combinations_until<F: FnMut(&[NodeId]) -> bool>(pool: &[NodeId], k: usize, mut f: F) -> bool {
    if k > pool.len() {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf: Vec<NodeId> = Vec::with_capacity(k);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&i| pool[i]));
        if f(&buf) {
            return true;
        }
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + pool.len() - k {
            i -= 1;
        }
        if i < 0 {
            return false;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Runs the PC algorithm: complete graph, edge pruning by conditional
/// independencies of increasing order, collider orientation, orientation
/// closure.
pub fn run_pc(
    test: &dyn CiTest,
    alpha: f64,
    order: &NodeOrdering,
) -> Result<PcOutput, CyclicRejection> {
    run_pc_with_cap(test, alpha, order, None)
}

/// [`run_pc`] with an optional cap on the conditioning-set size. The cap is
/// a guard for pathological density; it is off for all replication runs.
pub fn run_pc_with_cap(
    test: &dyn CiTest,
    alpha: f64,
    order: &NodeOrdering,
    max_cond: Option<usize>,
) -> Result<PcOutput, CyclicRejection> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    let n = test.n_vars();
    assert_eq!(order.len(), n, "ordering must cover all variables");

    let mut g = MixedGraph::complete_undirected(n);
    let mut seps = SepsetTable::new();
    let mut tests_performed = 0usize;

    // Candidate separators for the pair {x, y} come from the current
    // adjacencies of either endpoint, sequenced by ordering rank.
    let pool_of = |g: &MixedGraph, x: NodeId, y: NodeId| -> Vec<NodeId> {
        let mut pool: Vec<NodeId> = g
            .adjacencies(x)
            .into_iter()
            .chain(g.adjacencies(y))
            .filter(|&v| v != x && v != y)
            .collect();
        pool.sort_unstable_by_key(|&v| order.rank(v));
        pool.dedup();
        pool
    };

    let mut ell = 0usize;
    loop {
        if max_cond.is_some_and(|cap| ell > cap) {
            break;
        }
        // Pairs in lexicographic (rank, rank) sequence; adjacency and pools
        // are re-read at visit time so removals take effect immediately.
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (order.nodes()[i], order.nodes()[j]);
                if !g.adjacent(x, y) {
                    continue;
                }
                let pool = pool_of(&g, x, y);
                if pool.len() < ell {
                    continue;
                }
                let mut found: Option<Vec<NodeId>> = None;
                combinations_until(&pool, ell, |s| {
                    debug_assert!(s.iter().all(|&v| g.adjacent(v, x) || g.adjacent(v, y)));
                    tests_performed += 1;
                    let decision = test.decide(x, y, s, alpha);
                    if decision.independent {
                        found = Some(s.to_vec());
                        true
                    } else {
                        false
                    }
                });
                if let Some(s) = found {
                    g.remove_between(x, y);
                    seps.insert(x, y, s);
                }
            }
        }
        ell += 1;
        // Stop once no adjacency admits a large enough candidate pool.
        let any_left = (0..n).any(|i| {
            ((i + 1)..n).any(|j| {
                let (x, y) = (NodeId(i), NodeId(j));
                g.adjacent(x, y) && pool_of(&g, x, y).len() >= ell
            })
        });
        if !any_left {
            break;
        }
    }

    let oriented = orient_v_structures(&g, &seps, order);
    let graph = meek_closure(&oriented)?;
    debug_assert!(!graph.has_directed_cycle());
    Ok(PcOutput {
        graph,
        sepsets: seps,
        alpha_used: alpha,
        tests_performed,
    })
}
