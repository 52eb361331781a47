//! The four structure-search procedures compared in the experiments: EGS
//! (essential graph search), EGS/GS, GS and GS/1, plus the shared greedy
//! hill-climber.
//!
//! EGS repeatedly perturbs the constraint-based search — a fresh significance
//! level from P(alpha) and a fresh node ordering per candidate — converts
//! each candidate essential graph to a DAG, scores it, and keeps the best
//! until `convergence_n` consecutive candidates fail to improve it. EGS/GS
//! additionally refines every candidate DAG with a full greedy descent. GS
//! restarts greedy search from random DAGs; GS/1 seeds its first restart with
//! a PC output.
//!
//! All engines are sequential and bit-reproducible given a seed.

use crate::data::Dataset;
use crate::equivalence::{consistent_extension, dag_to_essential, EssentialGraph};
use crate::graph::{Dag, EditOp, NodeId};
use crate::independence::CiTest;
use crate::pc::{run_pc_with_cap, NodeOrdering};
use crate::scoring::{ScoreKind, Scorer};
use crate::sim::random_dag_from_rng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shared knobs of the search engines.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// P(alpha) is uniform on (alpha_lo, alpha_hi).
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Stop after this many consecutive candidates without a new maximum.
    pub convergence_n: usize,
    /// Number of greedy restarts (GS family).
    pub restarts: usize,
    pub seed: u64,
    pub score_kind: ScoreKind,
    /// Optional cap on PC conditioning-set size; off by default.
    pub max_cond: Option<usize>,
    /// Fixed significance level for the GS/1 initial PC call.
    pub gs1_alpha: f64,
}

impl SearchConfig {
    pub fn new(seed: u64) -> Self {
        SearchConfig {
            alpha_lo: 0.005,
            alpha_hi: 0.2,
            convergence_n: 500,
            restarts: 50,
            seed,
            score_kind: ScoreKind::GaussianBic,
            max_cond: None,
            gs1_alpha: 0.05,
        }
    }

    fn validate(&self) {
        assert!(
            self.alpha_lo > 0.0 && self.alpha_lo < self.alpha_hi && self.alpha_hi < 1.0,
            "alpha range must satisfy 0 < lo < hi < 1"
        );
        assert!(self.convergence_n >= 1, "convergence_n must be positive");
        assert!(self.restarts >= 1, "restarts must be positive");
    }
}

/// A search result: the recorded DAG, the essential graph it represents, its
/// score and the search metadata.
#[derive(Debug, Clone)]
pub struct ScoredStructure {
    pub dag: Dag,
    pub essential: EssentialGraph,
    pub log_score: f64,
    /// Significance level that produced the incumbent; `None` for engines
    /// that never ran a constraint-based step.
    pub alpha_used: Option<f64>,
    /// Candidate (or restart) index at which the incumbent was found.
    pub iteration_found: usize,
    /// Total candidates (or restarts) generated over the run.
    pub candidates_generated: usize,
    /// Degraded-path marker, e.g. an engine that fell back to a baseline.
    pub flag: Option<String>,
}

/// Outcome of one EGS candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateOutcome {
    Improved,
    NotImproved,
    /// Cyclic orientation or no consistent extension; skipped, but the
    /// attempt still counts toward the convergence counter.
    Rejected,
}

/// One row of an EGS iteration trace.
#[derive(Debug, Clone)]
pub struct EgsIteration {
    pub iteration: usize,
    pub alpha: f64,
    pub outcome: CandidateOutcome,
    /// Best score after this candidate; -inf while no candidate succeeded.
    pub incumbent_score: f64,
}

/// Full greedy descent: repeatedly applies the single best strictly
/// improving Add/Del/Rev until none exists. Ties break toward the lowest
/// (x, y) pair with Add before Del before Rev, so the walk is deterministic.
fn greedy_descend(scorer: &Scorer, start: Dag) -> (Dag, f64, usize) {
    let n = start.n_nodes();
    let mut dag = start;
    let mut steps = 0usize;
    loop {
        let mut best: Option<(f64, EditOp)> = None;
        for x in (0..n).map(NodeId) {
            for y in (0..n).map(NodeId) {
                if x == y {
                    continue;
                }
                let g = dag.as_graph();
                let consider = |op: EditOp, best: &mut Option<(f64, EditOp)>| {
                    if !op.is_applicable(&dag) {
                        return;
                    }
                    let delta = scorer.delta(&dag, op).expect("applicability checked");
                    if delta > 0.0 && best.is_none_or(|(b, _)| delta > b) {
                        *best = Some((delta, op));
                    }
                };
                if !g.adjacent(x, y) {
                    consider(EditOp::Add(x, y), &mut best);
                } else if g.has_directed(x, y) {
                    consider(EditOp::Del(x, y), &mut best);
                    consider(EditOp::Rev(x, y), &mut best);
                }
            }
        }
        match best {
            Some((_, op)) => {
                dag = op.apply(&dag).expect("selected edit is applicable");
                steps += 1;
            }
            None => break,
        }
    }
    let score = scorer.network(&dag);
    (dag, score, steps)
}

/// Greedy hill-climbing from `start`, wrapped as a scored structure.
pub fn greedy_search(data: &Dataset, kind: ScoreKind, start: &Dag) -> ScoredStructure {
    let scorer = Scorer::new(kind, data).expect("score kind must match dataset kind");
    let (dag, log_score, steps) = greedy_descend(&scorer, start.clone());
    ScoredStructure {
        essential: dag_to_essential(&dag),
        dag,
        log_score,
        alpha_used: None,
        iteration_found: steps,
        candidates_generated: steps,
        flag: None,
    }
}

fn empty_baseline(scorer: &Scorer, n: usize, candidates: usize) -> ScoredStructure {
    let dag = Dag::empty(n);
    ScoredStructure {
        essential: dag_to_essential(&dag),
        log_score: scorer.network(&dag),
        dag,
        alpha_used: None,
        iteration_found: 0,
        candidates_generated: candidates,
        flag: Some("no-viable-candidate".into()),
    }
}

fn egs_loop(
    data: &Dataset,
    test: &dyn CiTest,
    config: &SearchConfig,
    refine: bool,
) -> (ScoredStructure, Vec<EgsIteration>) {
    config.validate();
    let n = data.n_vars();
    assert_eq!(test.n_vars(), n, "test and dataset disagree on variables");
    let scorer = Scorer::new(config.score_kind, data).expect("score kind must match dataset kind");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = NodeOrdering::identity(n);
    let mut incumbent: Option<ScoredStructure> = None;
    let mut non_improving = 0usize;
    let mut iteration = 0usize;
    let mut trace = Vec::new();

    while non_improving < config.convergence_n {
        iteration += 1;
        let alpha = rng.random_range(config.alpha_lo..config.alpha_hi);
        let outcome = match run_pc_with_cap(test, alpha, &order, config.max_cond) {
            Err(_) => CandidateOutcome::Rejected,
            Ok(pc) => match consistent_extension(&pc.graph, &mut rng) {
                Err(_) => CandidateOutcome::Rejected,
                Ok(extension) => {
                    let dag = if refine {
                        greedy_descend(&scorer, extension).0
                    } else {
                        extension
                    };
                    let log_score = scorer.network(&dag);
                    if incumbent
                        .as_ref()
                        .is_none_or(|inc| log_score > inc.log_score)
                    {
                        let essential = if refine {
                            dag_to_essential(&dag)
                        } else {
                            EssentialGraph::from_closed(pc.graph.clone())
                        };
                        incumbent = Some(ScoredStructure {
                            dag,
                            essential,
                            log_score,
                            alpha_used: Some(alpha),
                            iteration_found: iteration,
                            candidates_generated: 0,
                            flag: None,
                        });
                        CandidateOutcome::Improved
                    } else {
                        CandidateOutcome::NotImproved
                    }
                }
            },
        };
        if outcome == CandidateOutcome::Improved {
            non_improving = 0;
        } else {
            non_improving += 1;
        }
        trace.push(EgsIteration {
            iteration,
            alpha,
            outcome,
            incumbent_score: incumbent
                .as_ref()
                .map_or(f64::NEG_INFINITY, |inc| inc.log_score),
        });
        order = NodeOrdering::random(n, &mut rng);
    }

    let mut result = incumbent.unwrap_or_else(|| empty_baseline(&scorer, n, iteration));
    result.candidates_generated = iteration;
    (result, trace)
}

/// Essential graph search: anytime loop of perturbed PC candidates, scored
/// via a random consistent extension. Rejected candidates count toward the
/// convergence counter, guaranteeing termination.
pub fn run_egs(data: &Dataset, test: &dyn CiTest, config: &SearchConfig) -> ScoredStructure {
    egs_loop(data, test, config, false).0
}

/// [`run_egs`] that also returns the per-candidate trace.
pub fn run_egs_traced(
    data: &Dataset,
    test: &dyn CiTest,
    config: &SearchConfig,
) -> (ScoredStructure, Vec<EgsIteration>) {
    egs_loop(data, test, config, false)
}

/// EGS with a full greedy descent refining every extended candidate before
/// scoring: greedy search with restarts, restart points supplied by EGS.
pub fn run_egs_gs(data: &Dataset, test: &dyn CiTest, config: &SearchConfig) -> ScoredStructure {
    egs_loop(data, test, config, true).0
}

fn best_of_restarts(
    scorer: &Scorer,
    config: &SearchConfig,
    mut start_for: impl FnMut(usize, &mut ChaCha8Rng) -> Dag,
) -> ScoredStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<ScoredStructure> = None;
    for restart in 1..=config.restarts {
        let start = start_for(restart, &mut rng);
        let (dag, log_score, _) = greedy_descend(scorer, start);
        if best.as_ref().is_none_or(|b| log_score > b.log_score) {
            best = Some(ScoredStructure {
                essential: dag_to_essential(&dag),
                dag,
                log_score,
                alpha_used: None,
                iteration_found: restart,
                candidates_generated: config.restarts,
                flag: None,
            });
        }
    }
    best.expect("restarts >= 1")
}

/// Greedy search with random restarts: every start is a fresh random DAG.
pub fn run_gs(data: &Dataset, config: &SearchConfig) -> ScoredStructure {
    config.validate();
    let scorer = Scorer::new(config.score_kind, data).expect("score kind must match dataset kind");
    let n = data.n_vars();
    best_of_restarts(&scorer, config, |_, rng| random_dag_from_rng(n, 0.5, rng))
}

/// Greedy search with restarts seeded by PC: the first start extends a PC
/// run at a fixed significance level and the identity ordering; later starts
/// are random. A rejected PC start falls back to a random first start and is
/// flagged.
pub fn run_gs1(data: &Dataset, test: &dyn CiTest, config: &SearchConfig) -> ScoredStructure {
    config.validate();
    let n = data.n_vars();
    assert_eq!(test.n_vars(), n, "test and dataset disagree on variables");
    let scorer = Scorer::new(config.score_kind, data).expect("score kind must match dataset kind");
    let mut fallback = false;
    let mut result = best_of_restarts(&scorer, config, |restart, rng| {
        if restart == 1 {
            let pc_start = run_pc_with_cap(test, config.gs1_alpha, &NodeOrdering::identity(n), config.max_cond)
                .ok()
                .and_then(|pc| consistent_extension(&pc.graph, rng).ok());
            match pc_start {
                Some(dag) => dag,
                None => {
                    fallback = true;
                    random_dag_from_rng(n, 0.5, rng)
                }
            }
        } else {
            random_dag_from_rng(n, 0.5, rng)
        }
    });
    if fallback {
        result.flag = Some("pc-start-rejected".into());
    }
    result
}

/// Random restart point: a shuffled topological order with each forward pair
/// included at probability 1/2.
pub fn random_dag_uniform_start<R: Rng + ?Sized>(n_nodes: usize, rng: &mut R) -> Dag {
    random_dag_from_rng(n_nodes, 0.5, rng)
}
