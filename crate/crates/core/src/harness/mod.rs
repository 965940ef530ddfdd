//! Experiment orchestration: configuration, the per-seed pipeline, seeded
//! sweeps and their CSV/JSON artifacts.

mod config;
mod experiment;
mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clustering::{
    build_anchor_set_greedy, build_anchor_set_random, build_tracked_sets, verify_full_coverage, verify_partial_coverage,
    AnchorConstruction, CoverageReport, Scheme, Tracking,
};
use crate::metrics::EntanglingMetric;
use crate::routing::{LongRange, Overlay, RoutingError};
use crate::topology::{all_neighborhoods, generate_graph, CostMatrix, NetworkGraph, TopologyError};

pub use config::{Assertions, ExperimentConfig, MetricSpec, Seeds, OUT_DIR_ENV};
pub use experiment::{
    compare_schemes, run_experiment, run_seeds, AssertionOutcome, Comparison, ExperimentReport, PairedSeed,
    PairsCsvRow, SearchCheckStats, SeedFailure, SeedReport, SCHEMA_VERSION,
};
pub use report::render_summary;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("seed lists differ: {a:?} vs {b:?}")]
    MismatchedSeeds { a: Vec<u64>, b: Vec<u64> },
    #[error("compared configs differ in {0}")]
    MismatchedSetting(&'static str),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        HarnessError::Config { field: field.to_string(), message: message.into() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

/// Everything one seed of a configuration builds before evaluation.
#[derive(Debug, Clone)]
pub struct Trial {
    pub seed: u64,
    pub k: usize,
    pub overlay: Overlay,
    pub coverage: CoverageReport,
}

/// Generates the graph for `seed` and builds the overlay on it.
pub fn build_trial(config: &ExperimentConfig, seed: u64) -> Result<Trial, HarnessError> {
    let metric = config.metric.resolve()?;
    let graph = generate_graph(config.graph_model(), config.n_e, &metric, seed)?;
    build_trial_on(config, graph, &metric, seed)
}

/// Builds the overlay of `config` on an existing graph.
pub fn build_trial_on(
    config: &ExperimentConfig,
    graph: NetworkGraph,
    metric: &EntanglingMetric,
    seed: u64,
) -> Result<Trial, HarnessError> {
    let n = graph.n_e();
    let k = config.neighborhood_size();
    let costs = CostMatrix::compute(&graph, metric)?;
    let neighborhoods = all_neighborhoods(&costs, k)?;
    let (long_range, coverage) = match config.scheme {
        Scheme::PartialAnchor => {
            let anchors = match config.anchors {
                AnchorConstruction::RandomizedCover => build_anchor_set_random(&neighborhoods, n, seed),
                AnchorConstruction::GreedyCover => build_anchor_set_greedy(&neighborhoods),
            };
            let coverage = verify_partial_coverage(&neighborhoods, &anchors);
            (LongRange::Anchors(anchors), coverage)
        }
        Scheme::FullAnchor => {
            let tracking = Tracking::assign(build_tracked_sets(graph.plan(), n), n, seed);
            let coverage = verify_full_coverage(&neighborhoods, &tracking);
            (LongRange::Tracking(tracking), coverage)
        }
    };
    let overlay = Overlay::build(graph, metric.clone(), costs, neighborhoods, long_range, config.table_params())?;
    Ok(Trial { seed, k, overlay, coverage })
}
