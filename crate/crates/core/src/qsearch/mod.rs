//! Quantum address splitting: Grover search over table-entry labels with an
//! oracle coherently controlled by superposed address registers.

mod search;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::{ceil_log2, QuantumAddress};

pub use search::{
    analytic_success_probability, evolve, iteration_count, mixture_success_probability, routing_lookup_via_search,
    run_search, two_branch_estimate, LookupOutcome, LookupResult, SearchConfig, SearchOutcome,
};
pub use state::{LayoutPolicy, RegisterLayout, SearchState, StateLayout};

/// Default bound on simulated qubits (a `2^22`-amplitude statevector).
pub const DEFAULT_QUBIT_CAP: u32 = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsearchError {
    #[error("cannot split {members} members into {f} partitions")]
    TooManyPartitions { f: usize, members: usize },
    #[error("partition count must be at least 1")]
    NoPartitions,
    #[error("search needs {required} qubits but the cap is {cap}")]
    DimensionCapExceeded { required: u32, cap: u32 },
    #[error("a search needs at least 2 entries, got {0}")]
    TooFewEntries(usize),
    #[error("target width {found} does not match register width {expected}")]
    WidthMismatch { expected: u8, found: u8 },
    #[error("entry {entry} has an empty partition")]
    EmptyPartition { entry: usize },
}

/// Round-robin split of `members` (sorted by address) into `f` parts.
///
/// Part sizes differ by at most one and their union is `members`.
pub fn partition_neighborhood<T: Ord + Copy>(members: &[T], f: usize) -> Result<Vec<Vec<T>>, QsearchError> {
    if f == 0 {
        return Err(QsearchError::NoPartitions);
    }
    if f > members.len() {
        return Err(QsearchError::TooManyPartitions { f, members: members.len() });
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let mut parts = vec![Vec::with_capacity(sorted.len() / f + 1); f];
    for (idx, m) in sorted.into_iter().enumerate() {
        parts[idx % f].push(m);
    }
    Ok(parts)
}

/// Uniform superposition over one partition of an e-neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperposedAddress {
    pub partition: Vec<u64>,
    pub register_width: u8,
}

impl SuperposedAddress {
    pub fn new(partition: Vec<u64>, register_width: u8) -> Self {
        Self { partition, register_width }
    }

    /// Amplitude of every member, `1 / sqrt(|S|)`.
    pub fn amplitude(&self) -> f64 {
        1.0 / (self.partition.len() as f64).sqrt()
    }

    /// `|<target|A>|^2`: `1/|S|` for members, 0 otherwise.
    pub fn alpha(&self, target: u64) -> f64 {
        if self.partition.contains(&target) {
            1.0 / self.partition.len() as f64
        } else {
            0.0
        }
    }

    /// Dense amplitudes over all `2^width` basis states.
    pub fn amplitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << self.register_width];
        for &m in &self.partition {
            out[m as usize] = self.amplitude();
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes().iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// One table entry as seen by the search: its label and superposed partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub label: usize,
    pub e_hop: Option<QuantumAddress>,
    pub partitions: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchInstance {
    pub entries: Vec<SearchEntry>,
    pub address_width: u8,
}

impl SearchInstance {
    /// Instance with entry labels `0..` in the given order.
    pub fn new(partitions: Vec<Vec<Vec<u64>>>, address_width: u8) -> Self {
        let entries = partitions
            .into_iter()
            .enumerate()
            .map(|(label, partitions)| SearchEntry { label, e_hop: None, partitions })
            .collect();
        Self { entries, address_width }
    }

    /// `n_t` single-partition entries searched for address 0: the first
    /// `hits` hold `{0, .., size - 1}` (so `alpha = 1 / size`), the rest `{1}`.
    pub fn synthetic(n_t: usize, hits: usize, size: usize) -> Self {
        let size = size.max(1);
        let width = ceil_log2(size.max(2) as u64);
        let entries = (0..n_t)
            .map(|label| if label < hits { (0..size as u64).collect() } else { vec![1] })
            .map(|p| vec![p])
            .collect();
        Self::new(entries, width)
    }

    pub fn n_t(&self) -> usize {
        self.entries.len()
    }

    /// Label-register width `ceil(log2 n_T)`, at least one qubit.
    pub fn label_bits(&self) -> u32 {
        u32::from(ceil_log2(self.n_t() as u64)).max(1)
    }

    /// Labels whose neighborhood holds `target`, from the classical mirror.
    pub fn hit_labels(&self, target: u64) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.partitions.iter().any(|p| p.contains(&target)))
            .map(|e| e.label)
            .collect()
    }

    /// `alpha` of each hitting entry, in label order.
    pub fn hit_alphas(&self, target: u64) -> Vec<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.partitions.iter().find(|p| p.contains(&target)).map(|p| 1.0 / p.len() as f64))
            .collect()
    }

    fn validate(&self) -> Result<(), QsearchError> {
        if self.n_t() < 2 {
            return Err(QsearchError::TooFewEntries(self.n_t()));
        }
        if let Some(e) = self.entries.iter().find(|e| e.partitions.iter().any(Vec::is_empty)) {
            return Err(QsearchError::EmptyPartition { entry: e.label });
        }
        Ok(())
    }
}
