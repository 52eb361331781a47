//! Conditional-independence decision procedures I(x, y | S).
//!
//! Three interchangeable deciders sit behind the [`CiTest`] trait: Fisher's z
//! on partial correlations for continuous data, the G-squared likelihood
//! ratio for discrete data, and a d-separation oracle realizing the
//! infinite-sample limit for ground-truth graphs.

use crate::data::{DataKind, Dataset};
use crate::graph::{Dag, NodeId};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum IndependenceError {
    /// Zero variance, a singular correlation submatrix, too few records, or
    /// a degrees-of-freedom collapse: the test statistic is undefined.
    #[error("degenerate data: the test statistic is undefined")]
    DegenerateData,
    /// Test kind does not match the dataset kind.
    #[error("test requires {expected:?} data")]
    KindMismatch { expected: DataKind },
}

/// Outcome of one conditional-independence test. `independent` is exactly
/// `p_value > alpha` for the alpha the test was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiDecision {
    pub independent: bool,
    pub p_value: f64,
    pub statistic: f64,
}

fn check_alpha(alpha: f64) {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "significance level must lie in (0,1), got {alpha}"
    );
}

const PIVOT_TOL: f64 = 1e-12;

/// In-place Gauss-Jordan inversion with partial pivoting; `None` when a
/// pivot falls below tolerance (singular matrix).
fn invert(m: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| m[a * k + col].abs().total_cmp(&m[b * k + col].abs()))
            .unwrap();
        if m[pivot_row * k + col].abs() < PIVOT_TOL {
            return None;
        }
        if pivot_row != col {
            for j in 0..k {
                m.swap(col * k + j, pivot_row * k + j);
                inv.swap(col * k + j, pivot_row * k + j);
            }
        }
        let p = m[col * k + col];
        for j in 0..k {
            m[col * k + j] /= p;
            inv[col * k + j] /= p;
        }
        for r in 0..k {
            if r != col {
                let f = m[r * k + col];
                if f != 0.0 {
                    for j in 0..k {
                        m[r * k + j] -= f * m[col * k + j];
                        inv[r * k + j] -= f * inv[col * k + j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Sample partial correlation of x and y given s, from the cached
/// correlation matrix via submatrix inversion.
fn partial_correlation(
    data: &Dataset,
    x: NodeId,
    y: NodeId,
    s: &[NodeId],
) -> Result<f64, IndependenceError> {
    let m = data.moments().ok_or(IndependenceError::KindMismatch {
        expected: DataKind::Continuous,
    })?;
    let p = data.n_vars();
    let vars: Vec<usize> = [x.index(), y.index()]
        .into_iter()
        .chain(s.iter().map(|v| v.index()))
        .collect();
    for &v in &vars {
        if m.std[v] <= PIVOT_TOL {
            return Err(IndependenceError::DegenerateData);
        }
    }
    let k = vars.len();
    let mut sub = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            sub[i * k + j] = m.corr[vars[i] * p + vars[j]];
        }
    }
    let inv = invert(&mut sub, k).ok_or(IndependenceError::DegenerateData)?;
    let denom = inv[0] * inv[k + 1];
    if denom <= 0.0 {
        return Err(IndependenceError::DegenerateData);
    }
    Ok((-inv[1] / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Fisher's z test of I(x, y | S) on continuous data: the z-transformed
/// partial correlation is referred to a standard normal with the usual
/// sqrt(N - |S| - 3) scaling; independent iff the two-sided p exceeds alpha.
pub fn fisher_z_test(
    data: &Dataset,
    x: NodeId,
    y: NodeId,
    s: &[NodeId],
    alpha: f64,
) -> Result<CiDecision, IndependenceError> {
    check_alpha(alpha);
    debug_assert!(!s.contains(&x) && !s.contains(&y));
    let n = data.n_records();
    if n <= s.len() + 3 {
        return Err(IndependenceError::DegenerateData);
    }
    let r = partial_correlation(data, x, y, s)?;
    // Keep atanh finite when |r| rounds to 1; the statistic still dwarfs any
    // critical value.
    let r = r.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
    let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln() * ((n - s.len() - 3) as f64).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p_value = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok(CiDecision {
        independent: p_value > alpha,
        p_value,
        statistic: z,
    })
}

/// G-squared likelihood-ratio test of I(x, y | S) on discrete data, with
/// df = (|x|-1)(|y|-1) * prod(levels of S).
pub fn gsquare_test(
    data: &Dataset,
    x: NodeId,
    y: NodeId,
    s: &[NodeId],
    alpha: f64,
) -> Result<CiDecision, IndependenceError> {
    check_alpha(alpha);
    debug_assert!(!s.contains(&x) && !s.contains(&y));
    let (columns, levels) = data
        .discrete_columns()
        .ok_or(IndependenceError::KindMismatch {
            expected: DataKind::Discrete,
        })?;
    let cx = levels[x.index()] as usize;
    let cy = levels[y.index()] as usize;
    let mut n_strata = 1usize;
    for v in s {
        n_strata = n_strata.saturating_mul(levels[v.index()] as usize);
    }
    let df = (cx.saturating_sub(1)) * (cy.saturating_sub(1)) * n_strata;
    if df == 0 {
        return Err(IndependenceError::DegenerateData);
    }

    // One contingency table per configuration of S, indexed mixed-radix.
    let mut tables = vec![0u64; n_strata * cx * cy];
    for r in 0..data.n_records() {
        let mut stratum = 0usize;
        for v in s {
            stratum = stratum * levels[v.index()] as usize + columns[v.index()][r] as usize;
        }
        let xi = columns[x.index()][r] as usize;
        let yi = columns[y.index()][r] as usize;
        tables[(stratum * cx + xi) * cy + yi] += 1;
    }

    let mut g2 = 0.0;
    for t in 0..n_strata {
        let cell = |i: usize, j: usize| tables[(t * cx + i) * cy + j] as f64;
        let total: f64 = (0..cx).map(|i| (0..cy).map(|j| cell(i, j)).sum::<f64>()).sum();
        if total == 0.0 {
            continue;
        }
        for i in 0..cx {
            let row: f64 = (0..cy).map(|j| cell(i, j)).sum();
            if row == 0.0 {
                continue;
            }
            for j in 0..cy {
                let col: f64 = (0..cx).map(|i2| cell(i2, j)).sum();
                let obs = cell(i, j);
                if obs > 0.0 {
                    g2 += 2.0 * obs * (obs * total / (row * col)).ln();
                }
            }
        }
    }
    let g2 = g2.max(0.0);
    let chi = ChiSquared::new(df as f64).unwrap();
    let p_value = 1.0 - chi.cdf(g2);
    Ok(CiDecision {
        independent: p_value > alpha,
        p_value,
        statistic: g2,
    })
}

/// True iff x and y are d-separated by S in `truth`.
///
/// Reachability over (node, entry-direction) states: a trail may pass a
/// non-collider iff it is outside S and a collider iff it is in S or has a
/// descendant in S.
pub fn d_separated(truth: &Dag, x: NodeId, y: NodeId, s: &[NodeId]) -> bool {
    debug_assert!(!s.contains(&x) && !s.contains(&y) && x != y);
    let g = truth.as_graph();
    let n = g.n_nodes();
    let mut in_s = vec![false; n];
    for v in s {
        in_s[v.index()] = true;
    }
    // s plus all ancestors of s: the collider-activation set.
    let mut active = in_s.clone();
    let mut stack: Vec<usize> = s.iter().map(|v| v.index()).collect();
    while let Some(v) = stack.pop() {
        for p in g.parents(NodeId(v)) {
            if !active[p.index()] {
                active[p.index()] = true;
                stack.push(p.index());
            }
        }
    }

    const UP: usize = 0; // entered from a child (or the start node)
    const DOWN: usize = 1; // entered from a parent
    let mut seen = vec![[false; 2]; n];
    let mut frontier = vec![(x.index(), UP)];
    seen[x.index()][UP] = true;
    while let Some((v, dir)) = frontier.pop() {
        if v == y.index() {
            return false;
        }
        let vid = NodeId(v);
        let mut push = |w: usize, d: usize, seen: &mut Vec<[bool; 2]>| {
            if !seen[w][d] {
                seen[w][d] = true;
                frontier.push((w, d));
            }
        };
        if dir == UP {
            if !in_s[v] {
                for p in g.parents(vid) {
                    push(p.index(), UP, &mut seen);
                }
                for c in g.children(vid) {
                    push(c.index(), DOWN, &mut seen);
                }
            }
        } else {
            if !in_s[v] {
                for c in g.children(vid) {
                    push(c.index(), DOWN, &mut seen);
                }
            }
            if active[v] {
                for p in g.parents(vid) {
                    push(p.index(), UP, &mut seen);
                }
            }
        }
    }
    true
}

/// A conditional-independence decision procedure over a fixed variable set.
pub trait CiTest: Sync {
    fn n_vars(&self) -> usize;
    /// Decide I(x, y | s) at significance `alpha`.
    fn decide(&self, x: NodeId, y: NodeId, s: &[NodeId], alpha: f64) -> CiDecision;
}

/// Fisher's z on a continuous dataset. Degenerate cases decide "dependent"
/// (the edge is kept): the constraint search only removes edges on a
/// positive independence finding.
pub struct FisherZ<'a> {
    data: &'a Dataset,
}

impl<'a> FisherZ<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        assert_eq!(data.kind(), DataKind::Continuous);
        FisherZ { data }
    }
}

impl CiTest for FisherZ<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn decide(&self, x: NodeId, y: NodeId, s: &[NodeId], alpha: f64) -> CiDecision {
        fisher_z_test(self.data, x, y, s, alpha).unwrap_or(CiDecision {
            independent: false,
            p_value: 0.0,
            statistic: f64::INFINITY,
        })
    }
}

/// G-squared on a discrete dataset. Degenerate cases (df collapse) decide
/// "independent", the conventional small-sample fallback.
pub struct GSquare<'a> {
    data: &'a Dataset,
}

impl<'a> GSquare<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        assert_eq!(data.kind(), DataKind::Discrete);
        GSquare { data }
    }
}

impl CiTest for GSquare<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn decide(&self, x: NodeId, y: NodeId, s: &[NodeId], alpha: f64) -> CiDecision {
        gsquare_test(self.data, x, y, s, alpha).unwrap_or(CiDecision {
            independent: true,
            p_value: 1.0,
            statistic: 0.0,
        })
    }
}

/// Infinite-sample test double: decides from d-separation in a ground-truth
/// DAG, with p fixed at 1 or 0.
pub struct DsepOracle {
    truth: Dag,
}

impl DsepOracle {
    pub fn new(truth: Dag) -> Self {
        DsepOracle { truth }
    }
}

impl CiTest for DsepOracle {
    fn n_vars(&self) -> usize {
        self.truth.n_nodes()
    }

    fn decide(&self, x: NodeId, y: NodeId, s: &[NodeId], alpha: f64) -> CiDecision {
        check_alpha(alpha);
        let independent = d_separated(&self.truth, x, y, s);
        CiDecision {
            independent,
            p_value: if independent { 1.0 } else { 0.0 },
            statistic: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MixedGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn n(i: usize) -> NodeId {
        NodeId(i)
    }

    fn gaussian_pair(rho_source: impl Fn(&mut ChaCha8Rng, f64) -> (f64, f64), seed: u64, records: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(records);
        let mut b = Vec::with_capacity(records);
        for _ in 0..records {
            let x: f64 = rng.sample(StandardNormal);
            let (u, v) = rho_source(&mut rng, x);
            a.push(u);
            b.push(v);
        }
        Dataset::continuous(vec!["a".into(), "b".into()], vec![a, b]).unwrap()
    }

    #[test]
    fn fisher_null_calibration() {
        let mut independent_count = 0;
        for seed in 0..100 {
            let d = gaussian_pair(
                |rng, x| (x, rng.sample(StandardNormal)),
                seed,
                2000,
            );
            let dec = fisher_z_test(&d, n(0), n(1), &[], 0.05).unwrap();
            if dec.independent {
                independent_count += 1;
            }
        }
        // Calibrated test: roughly 95 of 100 replications accept the null.
        assert!(
            (88..=100).contains(&independent_count),
            "got {independent_count}"
        );
    }

    #[test]
    fn fisher_exact_copy_is_dependent() {
        // A bit-exact copy makes the correlation submatrix singular; that is
        // the degenerate path, and the policy decision is "dependent".
        let d = gaussian_pair(|_, x| (x, x), 3, 500);
        assert_eq!(
            fisher_z_test(&d, n(0), n(1), &[], 0.05),
            Err(IndependenceError::DegenerateData)
        );
        assert!(!FisherZ::new(&d).decide(n(0), n(1), &[], 0.05).independent);

        // A near-copy keeps the matrix invertible: the statistic explodes
        // and the pair is dependent at any alpha.
        let d = gaussian_pair(|rng, x| (x, x + 1e-3 * rng.sample::<f64, _>(StandardNormal)), 3, 500);
        let dec = fisher_z_test(&d, n(0), n(1), &[], 0.05).unwrap();
        assert!(!dec.independent);
        assert!(dec.p_value < 1e-12);
        assert!(dec.statistic.abs() > 100.0);
    }

    #[test]
    fn fisher_chain_conditional_independence() {
        // x -> z -> y; conditioning on z separates.
        let mut independent_count = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let records = 2000;
            let mut xs = Vec::new();
            let mut zs = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..records {
                let x: f64 = rng.sample(StandardNormal);
                let z = 0.7 * x + rng.sample::<f64, _>(StandardNormal);
                let y = 0.7 * z + rng.sample::<f64, _>(StandardNormal);
                xs.push(x);
                zs.push(z);
                ys.push(y);
            }
            let d = Dataset::continuous(
                vec!["x".into(), "z".into(), "y".into()],
                vec![xs, zs, ys],
            )
            .unwrap();
            let marginal = fisher_z_test(&d, n(0), n(2), &[], 0.05).unwrap();
            assert!(!marginal.independent, "chain endpoints are correlated");
            let conditional = fisher_z_test(&d, n(0), n(2), &[n(1)], 0.05).unwrap();
            if conditional.independent {
                independent_count += 1;
            }
        }
        assert!(independent_count >= 90, "got {independent_count}");
    }

    #[test]
    fn fisher_is_symmetric() {
        let d = gaussian_pair(|rng, x| (x, 0.4 * x + rng.sample::<f64, _>(StandardNormal)), 11, 800);
        let a = fisher_z_test(&d, n(0), n(1), &[], 0.05).unwrap();
        let b = fisher_z_test(&d, n(1), n(0), &[], 0.05).unwrap();
        assert_eq!(a.independent, b.independent);
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.statistic.abs(), b.statistic.abs());
    }

    #[test]
    fn fisher_degenerate_zero_variance() {
        let d = Dataset::continuous(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 1.0, 1.0, 1.0, 1.0], vec![0.1, 0.4, 0.2, 0.9, 0.3]],
        )
        .unwrap();
        assert_eq!(
            fisher_z_test(&d, n(0), n(1), &[], 0.05),
            Err(IndependenceError::DegenerateData)
        );
        // The trait wrapper maps that to "dependent".
        assert!(!FisherZ::new(&d).decide(n(0), n(1), &[], 0.05).independent);
    }

    #[test]
    fn gsquare_fair_coins() {
        let mut independent_count = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
            let a: Vec<u32> = (0..2000).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<u32> = (0..2000).map(|_| rng.random_range(0..2)).collect();
            let d = Dataset::discrete(
                vec!["a".into(), "b".into()],
                vec![a, b],
                vec![2, 2],
            )
            .unwrap();
            if gsquare_test(&d, n(0), n(1), &[], 0.05).unwrap().independent {
                independent_count += 1;
            }
        }
        assert!(
            (88..=100).contains(&independent_count),
            "got {independent_count}"
        );
    }

    #[test]
    fn gsquare_copy_is_dependent() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a: Vec<u32> = (0..500).map(|_| rng.random_range(0..2)).collect();
        let d = Dataset::discrete(
            vec!["a".into(), "b".into()],
            vec![a.clone(), a],
            vec![2, 2],
        )
        .unwrap();
        let dec = gsquare_test(&d, n(0), n(1), &[], 0.05).unwrap();
        assert!(!dec.independent);
        assert!(dec.p_value < 1e-12);
    }

    #[test]
    fn gsquare_collider_pattern() {
        let mut marginal_ok = 0;
        let mut conditional_ok = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(31_000 + seed);
            let records = 2000;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut zs = Vec::new();
            for _ in 0..records {
                let x = rng.random_range(0..2u32);
                let y = rng.random_range(0..2u32);
                let noisy = if rng.random_range(0.0..1.0) < 0.2 {
                    1 - (x ^ y)
                } else {
                    x ^ y
                };
                xs.push(x);
                ys.push(y);
                zs.push(noisy);
            }
            let d = Dataset::discrete(
                vec!["x".into(), "y".into(), "z".into()],
                vec![xs, ys, zs],
                vec![2, 2, 2],
            )
            .unwrap();
            if gsquare_test(&d, n(0), n(1), &[], 0.05).unwrap().independent {
                marginal_ok += 1;
            }
            if !gsquare_test(&d, n(0), n(1), &[n(2)], 0.05)
                .unwrap()
                .independent
            {
                conditional_ok += 1;
            }
        }
        assert!(marginal_ok >= 90, "marginal: {marginal_ok}");
        assert!(conditional_ok >= 90, "conditional: {conditional_ok}");
    }

    #[test]
    fn dsep_oracle_examples() {
        let collider = Dag::from_edges(3, [(n(0), n(1)), (n(2), n(1))]).unwrap();
        assert!(d_separated(&collider, n(0), n(2), &[]));
        assert!(!d_separated(&collider, n(0), n(2), &[n(1)]));

        let chain = Dag::from_edges(3, [(n(0), n(1)), (n(1), n(2))]).unwrap();
        assert!(!d_separated(&chain, n(0), n(2), &[]));
        assert!(d_separated(&chain, n(0), n(2), &[n(1)]));
    }

    #[test]
    fn dsep_descendant_of_collider_activates() {
        // 0 -> 1 <- 2, 1 -> 3: conditioning on the collider's descendant
        // opens the trail.
        let g = Dag::from_edges(4, [(n(0), n(1)), (n(2), n(1)), (n(1), n(3))]).unwrap();
        assert!(d_separated(&g, n(0), n(2), &[]));
        assert!(!d_separated(&g, n(0), n(2), &[n(3)]));
    }

    /// Path-enumeration oracle: a pair is dependent iff some simple trail is
    /// active (non-colliders outside S, colliders in S or with a descendant
    /// in S).
    fn brute_force_dsep(truth: &Dag, x: NodeId, y: NodeId, s: &[NodeId]) -> bool {
        let g = truth.as_graph();
        let nn = g.n_nodes();
        let mut active_set = vec![false; nn];
        for v in s {
            active_set[v.index()] = true;
        }
        let mut stack: Vec<usize> = s.iter().map(|v| v.index()).collect();
        while let Some(v) = stack.pop() {
            for p in g.parents(NodeId(v)) {
                if !active_set[p.index()] {
                    active_set[p.index()] = true;
                    stack.push(p.index());
                }
            }
        }
        fn search(
            g: &MixedGraph,
            path: &mut Vec<usize>,
            target: usize,
            s: &[bool],
            anc: &[bool],
        ) -> bool {
            let last = *path.last().unwrap();
            for next in 0..g.n_nodes() {
                if path.contains(&next) || !g.adjacent(NodeId(last), NodeId(next)) {
                    continue;
                }
                // `last` becomes an interior node of the trail when we extend
                // past it; that is the moment its blocking status is decided.
                if path.len() >= 2 {
                    let prev = path[path.len() - 2];
                    let collider = g.has_directed(NodeId(prev), NodeId(last))
                        && g.has_directed(NodeId(next), NodeId(last));
                    let open = if collider { anc[last] } else { !s[last] };
                    if !open {
                        continue;
                    }
                }
                if next == target {
                    return true;
                }
                path.push(next);
                if search(g, path, target, s, anc) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut s_mask = vec![false; nn];
        for v in s {
            s_mask[v.index()] = true;
        }
        let mut path = vec![x.index()];
        let dependent = search(g, &mut path, y.index(), &s_mask, &active_set);
        !dependent
    }

    #[test]
    fn dsep_matches_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let d = crate::sim::random_dag(&crate::sim::GeneratorConfig {
                n_nodes: 5,
                mean_arcs: 5.0,
                seed: rng.random(),
            });
            for xi in 0..5 {
                for yi in (xi + 1)..5 {
                    let rest: Vec<NodeId> = (0..5)
                        .filter(|&v| v != xi && v != yi)
                        .map(NodeId)
                        .collect();
                    for mask in 0..(1u32 << rest.len()) {
                        let s: Vec<NodeId> = rest
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| mask & (1 << k) != 0)
                            .map(|(_, &v)| v)
                            .collect();
                        assert_eq!(
                            d_separated(&d, NodeId(xi), NodeId(yi), &s),
                            brute_force_dsep(&d, NodeId(xi), NodeId(yi), &s),
                            "disagreement on {:?} x={xi} y={yi} s={s:?}",
                            d
                        );
                    }
                }
            }
        }
    }
}
