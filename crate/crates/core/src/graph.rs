//! Mixed-graph representation and primitive queries shared by every other module.
//!
//! A [`MixedGraph`] holds directed and undirected edges over positionally
//! identified nodes; it is the single representation behind DAGs, skeletons,
//! PDAGs and essential graphs. Node identity is an index into an externally
//! held variable-name list, so graphs stay cheap to copy inside search loops.

use std::fmt;
use thiserror::Error;

/// Index of a variable in the owning graph's node list.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph contains a directed cycle")]
    DirectedCycle,
    #[error("graph contains undirected edges")]
    UndirectedEdges,
}

const EMPTY: u8 = 0;
/// `marks[i*n + j] == OUT` means a directed edge i -> j.
const OUT: u8 = 1;
/// Stored symmetrically at both (i,j) and (j,i).
const UNDIR: u8 = 2;

/// Node set plus directed and undirected edge sets.
///
/// Invariants enforced by the mutation API: no self-loops, and a pair of
/// nodes carries at most one edge in at most one orientation (double-headed
/// pairs cannot be represented). Edge iteration is in row-major index order,
/// so identical graphs always iterate identically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    n: usize,
    marks: Vec<u8>,
    n_directed: usize,
    n_undirected: usize,
}

impl MixedGraph {
    /// Edgeless graph on `n` nodes.
    pub fn new(n: usize) -> Self {
        MixedGraph {
            n,
            marks: vec![EMPTY; n * n],
            n_directed: 0,
            n_undirected: 0,
        }
    }

    /// Complete undirected graph on `n` nodes.
    pub fn complete_undirected(n: usize) -> Self {
        let mut g = MixedGraph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.add_undirected(NodeId(i), NodeId(j));
            }
        }
        g
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> u8 {
        self.marks[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, m: u8) {
        self.marks[i * self.n + j] = m;
    }

    #[inline]
    pub fn has_directed(&self, tail: NodeId, head: NodeId) -> bool {
        self.at(tail.0, head.0) == OUT
    }

    #[inline]
    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.at(a.0, b.0) == UNDIR
    }

    /// True if any edge (either kind, either orientation) joins `a` and `b`.
    #[inline]
    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.at(a.0, b.0) != EMPTY || self.at(b.0, a.0) != EMPTY
    }

    pub fn n_directed_edges(&self) -> usize {
        self.n_directed
    }

    pub fn n_undirected_edges(&self) -> usize {
        self.n_undirected
    }

    pub fn n_edges(&self) -> usize {
        self.n_directed + self.n_undirected
    }

    /// Adds `tail -> head`. Panics on self-loops or if the pair already
    /// carries an edge: double-headed pairs must be suppressed by the caller.
    pub fn add_directed(&mut self, tail: NodeId, head: NodeId) {
        assert_ne!(tail, head, "self-loop");
        assert!(
            !self.adjacent(tail, head),
            "pair ({tail},{head}) already carries an edge"
        );
        self.set(tail.0, head.0, OUT);
        self.n_directed += 1;
    }

    /// Adds the undirected edge `a -- b`. Panics on self-loops or occupied pairs.
    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) {
        assert_ne!(a, b, "self-loop");
        assert!(
            !self.adjacent(a, b),
            "pair ({a},{b}) already carries an edge"
        );
        self.set(a.0, b.0, UNDIR);
        self.set(b.0, a.0, UNDIR);
        self.n_undirected += 1;
    }

    /// Removes whatever edge joins `a` and `b`; returns false if none did.
    pub fn remove_between(&mut self, a: NodeId, b: NodeId) -> bool {
        match (self.at(a.0, b.0), self.at(b.0, a.0)) {
            (UNDIR, UNDIR) => {
                self.set(a.0, b.0, EMPTY);
                self.set(b.0, a.0, EMPTY);
                self.n_undirected -= 1;
                true
            }
            (OUT, _) => {
                self.set(a.0, b.0, EMPTY);
                self.n_directed -= 1;
                true
            }
            (_, OUT) => {
                self.set(b.0, a.0, EMPTY);
                self.n_directed -= 1;
                true
            }
            _ => false,
        }
    }

    /// Replaces the undirected edge `{tail, head}` with `tail -> head`.
    /// Panics if the pair is not currently undirected.
    pub fn orient(&mut self, tail: NodeId, head: NodeId) {
        assert!(
            self.has_undirected(tail, head),
            "pair ({tail},{head}) is not undirected"
        );
        self.set(tail.0, head.0, OUT);
        self.set(head.0, tail.0, EMPTY);
        self.n_undirected -= 1;
        self.n_directed += 1;
    }

    /// Directed edges as `(tail, head)`, in row-major order.
    pub fn directed_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| (self.at(i, j) == OUT).then_some((NodeId(i), NodeId(j))))
        })
    }

    /// Undirected edges as `(min, max)`, in row-major order over the upper triangle.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (i + 1..n)
                .filter_map(move |j| (self.at(i, j) == UNDIR).then_some((NodeId(i), NodeId(j))))
        })
    }

    /// Neighbors of `x` via directed edges (either direction) and undirected
    /// edges, in ascending index order.
    pub fn adjacencies(&self, x: NodeId) -> Vec<NodeId> {
        (0..self.n)
            .map(NodeId)
            .filter(|&y| y != x && self.adjacent(x, y))
            .collect()
    }

    /// Nodes `p` with `p -> x`, ascending.
    pub fn parents(&self, x: NodeId) -> Vec<NodeId> {
        (0..self.n)
            .map(NodeId)
            .filter(|&p| self.has_directed(p, x))
            .collect()
    }

    /// Nodes `c` with `x -> c`, ascending.
    pub fn children(&self, x: NodeId) -> Vec<NodeId> {
        (0..self.n)
            .map(NodeId)
            .filter(|&c| self.has_directed(x, c))
            .collect()
    }

    /// Nodes joined to `x` by an undirected edge, ascending.
    pub fn undirected_neighbors(&self, x: NodeId) -> Vec<NodeId> {
        (0..self.n)
            .map(NodeId)
            .filter(|&y| self.has_undirected(x, y))
            .collect()
    }

    /// True iff a cycle exists using directed edges only; undirected edges
    /// are ignored.
    pub fn has_directed_cycle(&self) -> bool {
        let n = self.n;
        let mut indeg = vec![0usize; n];
        for (_, h) in self.directed_edges() {
            indeg[h.0] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut peeled = 0;
        while let Some(u) = stack.pop() {
            peeled += 1;
            for j in 0..n {
                if self.at(u, j) == OUT {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        stack.push(j);
                    }
                }
            }
        }
        peeled < n
    }

    /// All edges of `self` returned as undirected; adjacency preserved.
    pub fn skeleton(&self) -> MixedGraph {
        let mut s = MixedGraph::new(self.n);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adjacent(NodeId(i), NodeId(j)) {
                    s.add_undirected(NodeId(i), NodeId(j));
                }
            }
        }
        s
    }

    /// True iff a directed path of length >= 1 leads from `from` to `to`.
    pub fn directed_path_exists(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from.0];
        while let Some(u) = stack.pop() {
            for j in 0..self.n {
                if self.at(u, j) == OUT {
                    if j == to.0 {
                        return true;
                    }
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        false
    }
}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MixedGraph(n={},", self.n)?;
        for (t, h) in self.directed_edges() {
            write!(f, " {t}->{h}")?;
        }
        for (a, b) in self.undirected_edges() {
            write!(f, " {a}--{b}")?;
        }
        write!(f, ")")
    }
}

/// A [`MixedGraph`] with an empty undirected edge set and no directed cycle,
/// checked on construction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag(MixedGraph);

impl Dag {
    pub fn new(g: MixedGraph) -> Result<Self, GraphError> {
        if g.n_undirected > 0 {
            return Err(GraphError::UndirectedEdges);
        }
        if g.has_directed_cycle() {
            return Err(GraphError::DirectedCycle);
        }
        Ok(Dag(g))
    }

    pub fn empty(n: usize) -> Self {
        Dag(MixedGraph::new(n))
    }

    /// Builds from `tail -> head` pairs; fails on cycles. Panics on
    /// self-loops or duplicate pairs, like the underlying mutators.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = MixedGraph::new(n);
        for (t, h) in edges {
            g.add_directed(t, h);
        }
        Dag::new(g)
    }

    #[inline]
    pub fn as_graph(&self) -> &MixedGraph {
        &self.0
    }

    pub fn into_graph(self) -> MixedGraph {
        self.0
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.0.n
    }

    pub fn parents(&self, x: NodeId) -> Vec<NodeId> {
        self.0.parents(x)
    }

    pub fn children(&self, x: NodeId) -> Vec<NodeId> {
        self.0.children(x)
    }

    /// A sequence placing every edge's tail before its head. Ties are broken
    /// by ascending node index, so the output is deterministic.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let n = self.0.n;
        let mut indeg = vec![0usize; n];
        for (_, h) in self.0.directed_edges() {
            indeg[h.0] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        while order.len() < n {
            let u = (0..n)
                .find(|&i| !placed[i] && indeg[i] == 0)
                .expect("acyclic by construction");
            placed[u] = true;
            order.push(NodeId(u));
            for j in 0..n {
                if self.0.at(u, j) == OUT {
                    indeg[j] -= 1;
                }
            }
        }
        order
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag{:?}", self.0)
    }
}

/// A single-arc edit of a DAG: the three greedy search operators.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum EditOp {
    /// Add the arc x -> y.
    Add(NodeId, NodeId),
    /// Delete the arc x -> y.
    Del(NodeId, NodeId),
    /// Reverse the arc x -> y into y -> x.
    Rev(NodeId, NodeId),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("edit {0:?} is not applicable to this dag")]
pub struct InvalidEdit(pub EditOp);

impl EditOp {
    /// Applicability: Add needs a non-adjacent pair and an acyclic result,
    /// Del needs the arc to exist, Rev needs the arc and an acyclic result.
    pub fn is_applicable(self, d: &Dag) -> bool {
        let g = d.as_graph();
        match self {
            EditOp::Add(x, y) => {
                x != y && !g.adjacent(x, y) && !g.directed_path_exists(y, x)
            }
            EditOp::Del(x, y) => g.has_directed(x, y),
            EditOp::Rev(x, y) => {
                if !g.has_directed(x, y) {
                    return false;
                }
                // Reversal closes a cycle iff a path x ~> y survives with the
                // arc removed.
                let mut h = g.clone();
                h.remove_between(x, y);
                !h.directed_path_exists(x, y)
            }
        }
    }

    pub fn apply(self, d: &Dag) -> Result<Dag, InvalidEdit> {
        if !self.is_applicable(d) {
            return Err(InvalidEdit(self));
        }
        let mut g = d.as_graph().clone();
        match self {
            EditOp::Add(x, y) => g.add_directed(x, y),
            EditOp::Del(x, y) => {
                g.remove_between(x, y);
            }
            EditOp::Rev(x, y) => {
                g.remove_between(x, y);
                g.add_directed(y, x);
            }
        }
        debug_assert!(!g.has_directed_cycle());
        Ok(Dag(g))
    }
}
