//! Experiment configuration, loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::clustering::{neighborhood_size, AnchorConstruction, Scheme};
use crate::metrics::EntanglingMetric;
use crate::qsearch::DEFAULT_QUBIT_CAP;
use crate::routing::{TableParams, DEFAULT_EBIT_BUDGET};
use crate::topology::GraphModel;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QROUTE_OUT_DIR";

/// A metric given by registered name, or spelled out in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(String),
    Custom(EntanglingMetric),
}

impl MetricSpec {
    pub fn resolve(&self) -> Result<EntanglingMetric, HarnessError> {
        match self {
            MetricSpec::Named(name) => {
                EntanglingMetric::by_name(name).map_err(|e| HarnessError::config("metric", e.to_string()))
            }
            MetricSpec::Custom(m) => {
                EntanglingMetric::new(m.name.clone(), m.composition, m.link_model.clone())
                    .map_err(|e| HarnessError::config("metric", e.to_string()))
            }
        }
    }
}

/// Seeds as an explicit list or a `start..start + count` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start.saturating_add(*count)).collect(),
        }
    }
}

/// Which checks a run enforces; all are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Assertions {
    pub stretch_bound: bool,
    pub neighbor_relay_bound: bool,
    pub concave_optimality: bool,
    pub inequality_chain: bool,
    pub cost_oracle: bool,
    pub search_agreement: bool,
}

impl Default for Assertions {
    fn default() -> Self {
        Self {
            stretch_bound: true,
            neighbor_relay_bound: true,
            concave_optimality: true,
            inequality_chain: true,
            cost_oracle: true,
            search_agreement: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_e: usize,
    /// Graph family; sparse Erdős–Rényi for `n_e` when absent.
    pub graph: Option<GraphModel>,
    pub metric: MetricSpec,
    pub scheme: Scheme,
    pub anchors: AnchorConstruction,
    /// Neighborhood exponent; `k` derives from it unless `k` is set.
    pub m: f64,
    pub k: Option<usize>,
    /// Partitions per superposed neighborhood.
    pub f: usize,
    pub ebit_budget: u32,
    pub capacity_cap: Option<usize>,
    pub fallback: bool,
    pub seeds: Seeds,
    /// Case II/III paths per seed whose inequality chain is checked; 0 checks all.
    pub chain_samples: usize,
    /// Table lookups per seed cross-checked against the quantum search.
    pub search_checks: usize,
    pub qubit_cap: u32,
    pub search_repeats: usize,
    pub output_dir: Option<PathBuf>,
    pub assertions: Assertions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_e: 32,
            graph: None,
            metric: MetricSpec::Named("hop-count".into()),
            scheme: Scheme::PartialAnchor,
            anchors: AnchorConstruction::GreedyCover,
            m: 1.0,
            k: None,
            f: 1,
            ebit_budget: DEFAULT_EBIT_BUDGET,
            capacity_cap: None,
            fallback: true,
            seeds: Seeds::Range { start: 0, count: 5 },
            chain_samples: 200,
            search_checks: 0,
            qubit_cap: DEFAULT_QUBIT_CAP,
            search_repeats: 8,
            output_dir: None,
            assertions: Assertions::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config; `.json` files are JSON, anything else TOML.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let config: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| HarnessError::config("file", e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| HarnessError::config("file", e.to_string()))?
        };
        Ok(config)
    }

    /// Reads a config whose keys replace the matching fields of `base`;
    /// keys absent from the file keep `base`'s values.
    pub fn load_over(path: &Path, base: &ExperimentConfig) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let file: serde_json::Value = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| HarnessError::config("file", e.to_string()))?
        } else {
            let table: toml::Table = toml::from_str(&text).map_err(|e| HarnessError::config("file", e.to_string()))?;
            serde_json::to_value(table)?
        };
        let serde_json::Value::Object(file) = file else {
            return Err(HarnessError::config("file", "top level must be a table"));
        };
        let mut merged = serde_json::to_value(base)?;
        let fields = merged.as_object_mut().expect("config serializes to an object");
        for (key, value) in file {
            fields.insert(key, value);
        }
        serde_json::from_value(merged).map_err(|e| HarnessError::config("file", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn graph_model(&self) -> GraphModel {
        self.graph.unwrap_or_else(|| GraphModel::sparse_erdos_renyi(self.n_e))
    }

    pub fn neighborhood_size(&self) -> usize {
        self.k.unwrap_or_else(|| neighborhood_size(self.n_e, self.m))
    }

    pub fn table_params(&self) -> TableParams {
        TableParams {
            partitions: self.f,
            ebit_budget: self.ebit_budget,
            capacity_cap: self.capacity_cap,
            fallback: self.fallback,
        }
    }

    /// Output directory from the config, else the environment.
    pub fn resolved_output_dir(&self) -> Option<PathBuf> {
        self.output_dir.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
    }

    /// Checks every field, reporting the first invalid one.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, msg: String| Err(HarnessError::config(field, msg));
        if self.n_e < 2 {
            return bad("n_e", format!("need at least 2 ESPs, got {}", self.n_e));
        }
        self.metric.resolve()?;
        if let GraphModel::GridTorus { rows, cols } = self.graph_model() {
            if rows * cols != self.n_e {
                return bad("graph", format!("torus {rows}x{cols} does not have n_e = {} nodes", self.n_e));
            }
        }
        if !(self.m.is_finite() && self.m >= 0.0) {
            return bad("m", format!("must be a finite non-negative number, got {}", self.m));
        }
        let k = self.neighborhood_size();
        if k == 0 || k >= self.n_e {
            return bad("k", format!("neighborhood size {k} must be in 1..{}", self.n_e));
        }
        if self.f == 0 || self.f > k {
            return bad("f", format!("partition count {} must be in 1..={k}", self.f));
        }
        if self.ebit_budget == 0 {
            return bad("ebit_budget", "must be at least 1".into());
        }
        if self.capacity_cap == Some(0) {
            return bad("capacity_cap", "must be at least 1".into());
        }
        if self.seeds.to_vec().is_empty() {
            return bad("seeds", "no seeds given".into());
        }
        if self.search_repeats == 0 {
            return bad("search_repeats", "must be at least 1".into());
        }
        Ok(())
    }
}
