//! Experiment CLI: synthetic benchmark generation, structure learning with
//! the four search engines, structural comparison, replication grids and the
//! distinct-graph counting protocol.
//!
//! Every subcommand is deterministic given its seed; output files are
//! byte-reproducible. Timing is kept off the CSV artifact unless explicitly
//! requested.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use egsearch::{
    count_distinct_essential_graphs, draw_sem_params, mix_seed, random_dag, run_egs, run_egs_gs,
    run_gs, run_gs1, sample_linear_sem, structural_diff, ComparisonMode, DataKind, Dataset,
    Engine, ExperimentSpec, FisherZ, GSquare, GeneratorConfig, ScoreKind, SearchConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "egsearch",
    about = "Hybrid constraint-based/Bayesian causal structure learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random ground-truth DAG and a linear-Gaussian dataset.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        mean_arcs: f64,
        #[arg(long)]
        records: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_data: PathBuf,
        #[arg(long)]
        out_graph: PathBuf,
    },
    /// Learn a structure from a dataset and write its essential graph.
    Learn {
        /// One of: egs, egsgs, gs, gs1.
        #[arg(long)]
        engine: String,
        #[arg(long)]
        data: PathBuf,
        /// Interpret the CSV as integer category codes.
        #[arg(long)]
        discrete: bool,
        #[arg(long, default_value_t = 0.005)]
        alpha_lo: f64,
        #[arg(long, default_value_t = 0.2)]
        alpha_hi: f64,
        /// Convergence parameter: consecutive non-improving candidates.
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// One of: bic, bdeu.
        #[arg(long, default_value = "bic")]
        score: String,
        /// Equivalent sample size for bdeu.
        #[arg(long, default_value_t = 1.0)]
        ess: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_graph: PathBuf,
        /// Optional cap on PC conditioning-set size.
        #[arg(long)]
        max_cond: Option<usize>,
        /// Significance level for the GS/1 initial PC call.
        #[arg(long, default_value_t = 0.05)]
        gs1_alpha: f64,
    },
    /// Compare a learned graph file against a ground-truth DAG file.
    Diff {
        #[arg(long)]
        learned: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// One of: essential, raw.
        #[arg(long, default_value = "essential")]
        mode: String,
    },
    /// Run a replication grid described by a key=value spec file.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fill the wall_ms CSV column with measured times. Off by default
        /// because wall time is machine noise and breaks byte-identical
        /// reruns.
        #[arg(long)]
        wall_times: bool,
    },
    /// Count distinct essential graphs over repeated randomized PC runs.
    Distinct {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        discrete: bool,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.005)]
        alpha_lo: f64,
        #[arg(long, default_value_t = 0.2)]
        alpha_hi: f64,
        #[arg(long, default_value = "bic")]
        score: String,
        #[arg(long, default_value_t = 1.0)]
        ess: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            nodes,
            mean_arcs,
            records,
            seed,
            out_data,
            out_graph,
        } => generate(nodes, mean_arcs, records, seed, &out_data, &out_graph),
        Command::Learn {
            engine,
            data,
            discrete,
            alpha_lo,
            alpha_hi,
            n,
            restarts,
            score,
            ess,
            seed,
            out_graph,
            max_cond,
            gs1_alpha,
        } => learn(
            &engine, &data, discrete, alpha_lo, alpha_hi, n, restarts, &score, ess, seed,
            &out_graph, max_cond, gs1_alpha,
        ),
        Command::Diff {
            learned,
            truth,
            mode,
        } => diff(&learned, &truth, &mode),
        Command::Experiment {
            spec,
            out,
            wall_times,
        } => experiment(&spec, &out, wall_times),
        Command::Distinct {
            data,
            discrete,
            runs,
            seed,
            out,
            alpha_lo,
            alpha_hi,
            score,
            ess,
        } => distinct(
            &data, discrete, runs, seed, &out, alpha_lo, alpha_hi, &score, ess,
        ),
    }
}

fn read_dataset(path: &Path, discrete: bool) -> Result<Dataset> {
    let file = fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
    let reader = BufReader::new(file);
    let data = if discrete {
        Dataset::read_csv_discrete(reader)
    } else {
        Dataset::read_csv_continuous(reader)
    }
    .with_context(|| format!("parse {}", path.display()))?;
    Ok(data)
}

fn parse_score(score: &str, ess: f64, data_kind: DataKind) -> Result<ScoreKind> {
    let kind = match score {
        "bic" => ScoreKind::GaussianBic,
        "bdeu" => {
            if ess <= 0.0 {
                bail!("--ess must be positive");
            }
            ScoreKind::bdeu(ess)
        }
        other => bail!("unknown score '{other}' (expected bic or bdeu)"),
    };
    match (kind, data_kind) {
        (ScoreKind::GaussianBic, DataKind::Continuous)
        | (ScoreKind::Bdeu { .. }, DataKind::Discrete) => Ok(kind),
        (ScoreKind::GaussianBic, DataKind::Discrete) => {
            bail!("bic scores continuous data; drop --discrete or use --score bdeu")
        }
        (ScoreKind::Bdeu { .. }, DataKind::Continuous) => {
            bail!("bdeu scores discrete data; pass --discrete")
        }
    }
}

fn generate(
    nodes: usize,
    mean_arcs: f64,
    records: usize,
    seed: u64,
    out_data: &Path,
    out_graph: &Path,
) -> Result<()> {
    if nodes == 0 {
        bail!("--nodes must be positive");
    }
    let max_pairs = nodes * nodes.saturating_sub(1) / 2;
    if mean_arcs < 0.0 || mean_arcs > max_pairs as f64 {
        bail!("--mean-arcs must lie in [0, {max_pairs}] for {nodes} nodes");
    }
    if records == 0 {
        bail!("--records must be positive");
    }
    let truth = random_dag(&GeneratorConfig {
        n_nodes: nodes,
        mean_arcs,
        seed: mix_seed(seed, 0),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let params = draw_sem_params(&truth, &mut rng);
    let data = sample_linear_sem(&truth, &params, records, &mut rng);

    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    fs::write(out_data, buf).with_context(|| format!("write {}", out_data.display()))?;
    let graph_text = egsearch::fileio::write_graph_text(data.names(), truth.as_graph());
    fs::write(out_graph, graph_text).with_context(|| format!("write {}", out_graph.display()))?;
    println!(
        "generated {} nodes, {} arcs, {} records -> {}, {}",
        nodes,
        truth.as_graph().n_directed_edges(),
        records,
        out_data.display(),
        out_graph.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn learn(
    engine: &str,
    data_path: &Path,
    discrete: bool,
    alpha_lo: f64,
    alpha_hi: f64,
    n: usize,
    restarts: usize,
    score: &str,
    ess: f64,
    seed: u64,
    out_graph: &Path,
    max_cond: Option<usize>,
    gs1_alpha: f64,
) -> Result<()> {
    let engine = Engine::parse(engine)
        .with_context(|| format!("unknown engine '{engine}' (expected egs|egsgs|gs|gs1)"))?;
    let data = read_dataset(data_path, discrete)?;
    let score_kind = parse_score(score, ess, data.kind())?;
    if !(0.0 < alpha_lo && alpha_lo < alpha_hi && alpha_hi < 1.0) {
        bail!("--alpha-lo/--alpha-hi must satisfy 0 < lo < hi < 1");
    }
    if n == 0 || restarts == 0 {
        bail!("--n and --restarts must be positive");
    }
    let config = SearchConfig {
        alpha_lo,
        alpha_hi,
        convergence_n: n,
        restarts,
        seed,
        score_kind,
        max_cond,
        gs1_alpha,
    };

    let fisher;
    let gsquare;
    let test: &dyn egsearch::CiTest = match data.kind() {
        DataKind::Continuous => {
            fisher = FisherZ::new(&data);
            &fisher
        }
        DataKind::Discrete => {
            gsquare = GSquare::new(&data);
            &gsquare
        }
    };
    let result = match engine {
        Engine::Egs => run_egs(&data, test, &config),
        Engine::EgsGs => run_egs_gs(&data, test, &config),
        Engine::Gs => run_gs(&data, &config),
        Engine::Gs1 => run_gs1(&data, test, &config),
    };
    if let Some(flag) = &result.flag {
        eprintln!("warning: {flag}");
    }
    let text = egsearch::fileio::write_graph_text(data.names(), result.essential.as_graph());
    fs::write(out_graph, text).with_context(|| format!("write {}", out_graph.display()))?;
    let alpha = result
        .alpha_used
        .map(|a| a.to_string())
        .unwrap_or_else(|| "-".into());
    println!(
        "{} learned: log_score={} alpha={} found_at={} candidates={} -> {}",
        engine,
        result.log_score,
        alpha,
        result.iteration_found,
        result.candidates_generated,
        out_graph.display()
    );
    Ok(())
}

fn diff(learned_path: &Path, truth_path: &Path, mode: &str) -> Result<()> {
    let mode = match mode {
        "essential" => ComparisonMode::Essential,
        "raw" => ComparisonMode::RawDag,
        other => bail!("unknown mode '{other}' (expected essential or raw)"),
    };
    let learned_text =
        fs::read_to_string(learned_path).with_context(|| format!("read {}", learned_path.display()))?;
    let truth_text =
        fs::read_to_string(truth_path).with_context(|| format!("read {}", truth_path.display()))?;
    let (learned_names, learned) =
        egsearch::fileio::parse_graph_text(&learned_text).context("parse learned graph")?;
    let (truth_names, truth_graph) =
        egsearch::fileio::parse_graph_text(&truth_text).context("parse truth graph")?;
    let truth = egsearch::Dag::new(truth_graph)
        .context("truth graph must be a DAG (directed, acyclic)")?;
    let aligned = egsearch::fileio::align_graph(&learned, &learned_names, &truth_names)
        .context("learned and truth graphs must share the same node names")?;
    let d = structural_diff(&aligned, &truth, mode)?;
    println!(
        "adj_plus={} adj_minus={} arcs_plus={} arcs_minus={} total_error={}",
        d.adj_plus,
        d.adj_minus,
        d.arcs_plus,
        d.arcs_minus,
        d.total_error()
    );
    Ok(())
}

fn experiment(spec_path: &Path, out: &Path, wall_times: bool) -> Result<()> {
    let text =
        fs::read_to_string(spec_path).with_context(|| format!("read {}", spec_path.display()))?;
    let spec = ExperimentSpec::parse(&text).context("parse experiment spec")?;
    if spec.config.score_kind != ScoreKind::GaussianBic {
        bail!("experiments generate continuous data; use score = bic in the spec file");
    }
    let rows = egsearch::run_experiment(&spec);
    let mut buf = Vec::new();
    egsearch::eval::write_result_csv(&rows, wall_times, &mut buf)?;
    fs::write(out, buf).with_context(|| format!("write {}", out.display()))?;

    for flagged in rows.iter().filter(|r| r.flag.is_some()) {
        eprintln!(
            "warning: rep {} {}: {}",
            flagged.replication,
            flagged.engine,
            flagged.flag.as_deref().unwrap_or("")
        );
    }
    for &engine in &spec.engines {
        let errs: Vec<usize> = rows
            .iter()
            .filter(|r| r.engine == engine)
            .map(|r| r.diff.total_error())
            .collect();
        let mean = errs.iter().sum::<usize>() as f64 / errs.len() as f64;
        println!(
            "{}: mean total_error {:.2} over {} replications",
            engine,
            mean,
            errs.len()
        );
    }
    println!("{} rows -> {}", rows.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn distinct(
    data_path: &Path,
    discrete: bool,
    runs: usize,
    seed: u64,
    out: &Path,
    alpha_lo: f64,
    alpha_hi: f64,
    score: &str,
    ess: f64,
) -> Result<()> {
    if runs == 0 {
        bail!("--runs must be positive");
    }
    let data = read_dataset(data_path, discrete)?;
    let score_kind = parse_score(score, ess, data.kind())?;
    let mut config = SearchConfig::new(seed);
    config.alpha_lo = alpha_lo;
    config.alpha_hi = alpha_hi;
    config.score_kind = score_kind;
    let report = count_distinct_essential_graphs(&data, runs, &config);
    let mut buf = Vec::new();
    egsearch::eval::write_distinct_csv(&report, &mut buf)?;
    fs::write(out, buf).with_context(|| format!("write {}", out.display()))?;
    println!(
        "attempts={} distinct={} rejected={} -> {}",
        report.attempts,
        report.distinct,
        report.rejected,
        out.display()
    );
    Ok(())
}
