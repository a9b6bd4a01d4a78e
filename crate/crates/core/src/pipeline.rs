//! End-to-end flow: queries → candidates → training → evaluation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bipartite::{build_bipartite, BipartiteGraph};
use crate::connet::{train, ConNet, Example, ModelConfig, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::eval::{
    avg_degree, cpj, f1_suite, gen_queries, pair_scores, split_communities, LabeledQuery, PrecisionRecall,
};
use crate::extraction::{extract, ExtractionConfig};
use crate::graph::AttributedGraph;
use crate::query::{AttrMode, Query};
use crate::search::constrained_bfs;
use crate::synth::{planted_partition, PlantedConfig};

/// Widest structure input a model is built with.
pub const MAX_STRUCT_WIDTH: usize = 4096;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: AttributedGraph,
    pub bipartite: BipartiteGraph,
    pub communities: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(graph: AttributedGraph, communities: Vec<Vec<usize>>) -> Self {
        let bipartite = build_bipartite(&graph);
        Self { graph, bipartite, communities }
    }

    pub fn default_struct_width(&self) -> usize {
        self.graph.node_count().clamp(1, MAX_STRUCT_WIDTH)
    }

    /// At least one attribute column so attribute-free graphs still build.
    pub fn attr_width(&self) -> usize {
        self.graph.attr_count().max(1)
    }
}

/// Architecture settings that do not depend on the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSettings {
    pub latent_dim: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Defaults to the graph size, capped at [`MAX_STRUCT_WIDTH`].
    pub struct_width: Option<usize>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { latent_dim: 128, layers: 2, dropout: 0.45, struct_width: None }
    }
}

impl ModelSettings {
    pub fn model_config(&self, ds: &Dataset, seed: u64) -> ModelConfig {
        ModelConfig {
            latent_dim: self.latent_dim,
            layers: self.layers,
            struct_width: self.struct_width.unwrap_or_else(|| ds.default_struct_width()),
            attr_width: ds.attr_width(),
            dropout: self.dropout,
            seed,
        }
    }
}

pub fn build_example(ds: &Dataset, q: &LabeledQuery, ext: &ExtractionConfig, model: &ModelConfig) -> Result<Example> {
    let res = extract(&ds.graph, &ds.bipartite, &q.query, ext)?;
    Example::new(res.candidate, q.query.clone(), &q.truth, model.struct_width, model.attr_width)
}

pub fn build_examples(
    ds: &Dataset,
    queries: &[LabeledQuery],
    ext: &ExtractionConfig,
    model: &ModelConfig,
) -> Result<Vec<Example>> {
    queries.iter().map(|q| build_example(ds, q, ext, model)).collect()
}

/// Community predicted for one example with the model's stored threshold.
pub fn predict_community(model: &ConNet, ex: &Example) -> Result<(Vec<usize>, Vec<f64>)> {
    let scores = model.predict(&ex.features)?;
    let mut nodes = constrained_bfs(&ex.sub, &scores, &ex.query.nodes, model.threshold())?;
    nodes.sort_unstable();
    Ok((nodes, scores))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub query: Query,
    pub predicted: Vec<usize>,
    pub truth: Vec<usize>,
    pub scores: PrecisionRecall,
    pub candidate_size: usize,
    /// Share of the truth inside the candidate.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub avg_degree: f64,
    pub cpj: f64,
    pub per_query: Vec<QueryOutcome>,
}

impl EvaluationReport {
    /// Metric name to value, in stable order.
    pub fn metrics(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("avg_degree", self.avg_degree),
            ("cpj", self.cpj),
            ("f1", self.f1),
            ("precision", self.precision),
            ("recall", self.recall),
        ])
    }

    pub fn mean_query_f1(&self) -> f64 {
        if self.per_query.is_empty() {
            return 0.0;
        }
        self.per_query.iter().map(|q| q.scores.f1).sum::<f64>() / self.per_query.len() as f64
    }
}

/// Scores given predictions against each example's truth.
pub fn evaluate_predictions(
    g: &AttributedGraph,
    examples: &[Example],
    predictions: Vec<Vec<usize>>,
) -> Result<EvaluationReport> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    if examples.len() != predictions.len() {
        return Err(Error::InvalidArgument("one prediction per example required".into()));
    }
    let truths: Vec<Vec<usize>> = examples.iter().map(|e| e.truth.clone()).collect();
    let micro = f1_suite(&truths, &predictions)?;
    let avg_d = avg_degree(g, &predictions)?;
    let cpj_value = cpj(g, &predictions)?;
    let per_query = examples
        .iter()
        .zip(predictions)
        .map(|(ex, predicted)| QueryOutcome {
            scores: pair_scores(&ex.truth, &predicted),
            query: ex.query.clone(),
            truth: ex.truth.clone(),
            candidate_size: ex.sub.node_count(),
            coverage: coverage(ex),
            predicted,
        })
        .collect();
    Ok(EvaluationReport {
        precision: micro.precision,
        recall: micro.recall,
        f1: micro.f1,
        avg_degree: avg_d,
        cpj: cpj_value,
        per_query,
    })
}

pub fn evaluate(model: &ConNet, g: &AttributedGraph, examples: &[Example]) -> Result<EvaluationReport> {
    let predictions =
        examples.iter().map(|ex| predict_community(model, ex).map(|(nodes, _)| nodes)).collect::<Result<Vec<_>>>()?;
    evaluate_predictions(g, examples, predictions)
}

/// Share of the example's truth that made it into its candidate.
pub fn coverage(ex: &Example) -> f64 {
    if ex.truth.is_empty() {
        return 1.0;
    }
    let inside = ex.truth.iter().filter(|&&v| ex.sub.to_local(v).is_some()).count();
    inside as f64 / ex.truth.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityCoverage {
    /// Ground-truth community, ascending global ids.
    pub members: Vec<usize>,
    pub queries: usize,
    pub mean_coverage: f64,
    pub min_coverage: f64,
    pub largest_candidate: usize,
}

/// Candidate coverage grouped by target community.
pub fn coverage_by_community(examples: &[Example]) -> Vec<CommunityCoverage> {
    let mut groups: BTreeMap<&[usize], Vec<&Example>> = BTreeMap::new();
    for ex in examples {
        groups.entry(&ex.truth).or_default().push(ex);
    }
    groups
        .into_iter()
        .map(|(members, exs)| {
            let covs: Vec<f64> = exs.iter().map(|e| coverage(e)).collect();
            CommunityCoverage {
                members: members.to_vec(),
                queries: exs.len(),
                mean_coverage: covs.iter().sum::<f64>() / covs.len() as f64,
                min_coverage: covs.iter().copied().fold(f64::INFINITY, f64::min),
                largest_candidate: exs.iter().map(|e| e.sub.node_count()).max().unwrap_or(0),
            }
        })
        .collect()
}

/// Labeled queries for each role.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySets {
    pub train: Vec<LabeledQuery>,
    pub val: Vec<LabeledQuery>,
    pub test: Vec<LabeledQuery>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for QueryCounts {
    fn default() -> Self {
        Self { train: 150, val: 100, test: 100 }
    }
}

pub fn make_query_sets(ds: &Dataset, counts: QueryCounts, mode: AttrMode, seed: u64) -> Result<QuerySets> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = split_communities(ds.communities.len(), &mut rng)?;
    let g = &ds.graph;
    Ok(QuerySets {
        train: gen_queries(g, &ds.communities, &split.train, counts.train, mode, &mut rng)?,
        val: gen_queries(g, &ds.communities, &split.val, counts.val, mode, &mut rng)?,
        test: gen_queries(g, &ds.communities, &split.test, counts.test, mode, &mut rng)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub data: PlantedConfig,
    pub extraction: ExtractionConfig,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub counts: QueryCounts,
    pub mode: AttrMode,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            data: PlantedConfig::default(),
            extraction: ExtractionConfig::default(),
            model: ModelSettings::default(),
            train: TrainConfig::default(),
            counts: QueryCounts::default(),
            mode: AttrMode::FromNodes,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub dataset: Dataset,
    pub model: ConNet,
    pub training: TrainReport,
    pub report: EvaluationReport,
    pub test_examples: Vec<Example>,
}

/// Trains on generated queries and evaluates on held-out ones.
pub fn train_and_evaluate(ds: Dataset, sets: &QuerySets, cfg: &BenchmarkConfig) -> Result<BenchmarkOutcome> {
    let model_cfg = cfg.model.model_config(&ds, cfg.seed);
    let train_ex = build_examples(&ds, &sets.train, &cfg.extraction, &model_cfg)?;
    let val_ex = build_examples(&ds, &sets.val, &cfg.extraction, &model_cfg)?;
    let test_ex = build_examples(&ds, &sets.test, &cfg.extraction, &model_cfg)?;
    let mut model = ConNet::new(model_cfg)?;
    let training = train(&mut model, &train_ex, &val_ex, &cfg.train)?;
    let report = evaluate(&model, &ds.graph, &test_ex)?;
    Ok(BenchmarkOutcome { dataset: ds, model, training, report, test_examples: test_ex })
}

/// Generates the planted benchmark, then trains and evaluates on it.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkOutcome> {
    let (g, communities) = planted_partition(&cfg.data)?.load()?;
    let ds = Dataset::new(g, communities);
    let sets = make_query_sets(&ds, cfg.counts, cfg.mode, cfg.seed)?;
    train_and_evaluate(ds, &sets, cfg)
}
