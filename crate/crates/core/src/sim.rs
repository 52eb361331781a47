//! Random ground-truth DAG generation and linear-Gaussian data sampling.
//!
//! Generating graphs draw a uniform random permutation as topological order
//! and include each forward pair independently, so the mean arc count is hit
//! exactly in expectation. Data follows additive linear structural equations
//! with standard-normal noise; downstream variables are not re-standardized.

use crate::data::Dataset;
use crate::graph::{Dag, MixedGraph, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustc_hash::FxHashMap;

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n_nodes: usize,
    /// Expected number of arcs; at most n(n-1)/2.
    pub mean_arcs: f64,
    pub seed: u64,
}

/// Per-edge linear coefficients; node noise is implicitly standard normal.
#[derive(Debug, Clone, Default)]
pub struct SemParams {
    coefficients: FxHashMap<(NodeId, NodeId), f64>,
}

impl SemParams {
    /// Explicit per-edge coefficients, for callers that fix them rather than
    /// drawing at random.
    pub fn from_coefficients(coefficients: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Self {
        SemParams {
            coefficients: coefficients
                .into_iter()
                .map(|(t, h, b)| ((t, h), b))
                .collect(),
        }
    }

    pub fn coefficient(&self, tail: NodeId, head: NodeId) -> Option<f64> {
        self.coefficients.get(&(tail, head)).copied()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.coefficients.iter().map(|(&(t, h), &b)| (t, h, b))
    }
}

/// Splitmix64-style stream derivation: decorrelated, reproducible seed
/// substreams from one master seed.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random DAG via a shuffled topological order plus independent forward
/// pairs at probability `edge_prob`.
pub fn random_dag_from_rng<R: Rng + ?Sized>(n_nodes: usize, edge_prob: f64, rng: &mut R) -> Dag {
    let mut perm: Vec<usize> = (0..n_nodes).collect();
    perm.shuffle(rng);
    let mut g = MixedGraph::new(n_nodes);
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.random_range(0.0..1.0) < edge_prob {
                g.add_directed(NodeId(perm[i]), NodeId(perm[j]));
            }
        }
    }
    Dag::new(g).expect("forward pairs along a permutation cannot cycle")
}

/// Seeded generating graph with `cfg.mean_arcs` arcs in expectation.
pub fn random_dag(cfg: &GeneratorConfig) -> Dag {
    let max_pairs = cfg.n_nodes * cfg.n_nodes.saturating_sub(1) / 2;
    assert!(
        cfg.mean_arcs >= 0.0 && cfg.mean_arcs <= max_pairs as f64,
        "mean_arcs must lie in [0, n(n-1)/2]"
    );
    let p = if max_pairs == 0 {
        0.0
    } else {
        cfg.mean_arcs / max_pairs as f64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    random_dag_from_rng(cfg.n_nodes, p, &mut rng)
}

/// One coefficient per arc, i.i.d. uniform on (0.1, 0.9).
pub fn draw_sem_params<R: Rng + ?Sized>(d: &Dag, rng: &mut R) -> SemParams {
    let mut coefficients = FxHashMap::default();
    for (t, h) in d.as_graph().directed_edges() {
        coefficients.insert((t, h), rng.random_range(0.1..0.9));
    }
    SemParams { coefficients }
}

/// Samples `n_records` i.i.d. records: nodes in topological order, each the
/// coefficient-weighted sum of its parents plus standard-normal noise.
/// Column names are X1..Xn.
pub fn sample_linear_sem<R: Rng + ?Sized>(
    d: &Dag,
    params: &SemParams,
    n_records: usize,
    rng: &mut R,
) -> Dataset {
    let n = d.n_nodes();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    for v in d.topological_order() {
        let mut col: Vec<f64> = (0..n_records).map(|_| rng.sample(StandardNormal)).collect();
        for p in d.parents(v) {
            let beta = params
                .coefficient(p, v)
                .expect("params must cover every edge");
            let parent_col = &columns[p.index()];
            for (c, x) in col.iter_mut().zip(parent_col) {
                *c += beta * x;
            }
        }
        columns[v.index()] = col;
    }
    let names = (1..=n).map(|i| format!("X{i}")).collect();
    Dataset::continuous(names, columns).expect("generated columns are rectangular")
}
