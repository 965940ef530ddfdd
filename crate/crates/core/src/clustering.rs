//! Anchor sets, tracked sets and coverage checks.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::AddressPlan;
use crate::rng::{indexed_rng, stream_rng, Stream};
use crate::topology::{all_reverse_neighborhoods, ENeighborhood, EspId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("tracking assignment has {found} entries for {expected} ESPs")]
    AssignmentLength { expected: usize, found: usize },
    #[error("ESP {esp} assigned to tracked set {index}, but only {count} exist")]
    BadTrackedIndex { esp: EspId, index: usize, count: usize },
}

/// Which long-range structure the routing scheme relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PartialAnchor,
    FullAnchor,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::PartialAnchor => "partial-anchor",
            Scheme::FullAnchor => "full-anchor",
        })
    }
}

/// `k = min(n_e - 1, ceil((1 + m) sqrt(n_e) ln(n_e)))`, at least 1.
pub fn neighborhood_size(n_e: usize, m: f64) -> usize {
    let n = n_e as f64;
    let raw = ((1.0 + m) * n.sqrt() * n.ln()).ceil();
    let cap = n_e.saturating_sub(1).max(1);
    if raw.is_finite() && raw >= 1.0 {
        (raw as usize).min(cap)
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorConstruction {
    RandomizedCover,
    GreedyCover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub members: BTreeSet<EspId>,
    pub construction: AnchorConstruction,
    /// Oversampling constant used to size the neighborhoods, when known.
    pub m: Option<f64>,
}

impl AnchorSet {
    pub fn contains(&self, v: EspId) -> bool {
        self.members.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// ESPs that are neither anchors nor have an anchor in their neighborhood.
    pub fn uncovered(&self, neighborhoods: &[ENeighborhood]) -> Vec<EspId> {
        neighborhoods
            .iter()
            .filter(|nb| !self.contains(nb.owner) && !nb.ids().any(|v| self.contains(v)))
            .map(|nb| nb.owner)
            .collect()
    }
}

/// Size of a randomized anchor set: `ceil(sqrt(n_e))`.
pub fn random_anchor_count(n_e: usize) -> usize {
    (n_e as f64).sqrt().ceil() as usize
}

/// Greedy set-cover size bound `n_e (1 + ln n_e) / k`.
pub fn greedy_anchor_bound(n_e: usize, k: usize) -> f64 {
    let n = n_e as f64;
    n * (1.0 + n.ln()) / k as f64
}

/// Samples `ceil(sqrt(n_e))` distinct anchors uniformly; coverage is not enforced.
pub fn build_anchor_set_random(neighborhoods: &[ENeighborhood], n_e: usize, seed: u64) -> AnchorSet {
    debug_assert!(neighborhoods.iter().all(|nb| nb.owner < n_e));
    let mut rng = stream_rng(seed, Stream::Cover);
    let count = random_anchor_count(n_e).min(n_e);
    let members = sample(&mut rng, n_e, count).into_iter().collect();
    AnchorSet { members, construction: AnchorConstruction::RandomizedCover, m: None }
}

/// Greedy cover of the neighborhood family: repeatedly takes the node that
/// covers the most still-uncovered ESPs, lowest id on ties.
///
/// A node covers every owner whose neighborhood lists it, and itself.
pub fn build_anchor_set_greedy(neighborhoods: &[ENeighborhood]) -> AnchorSet {
    let n = neighborhoods.len();
    let mut hits = all_reverse_neighborhoods(neighborhoods);
    for (v, owners) in hits.iter_mut().enumerate() {
        owners.insert(v);
    }
    let mut uncovered = vec![true; n];
    let mut count: Vec<usize> = hits.iter().map(|owners| owners.iter().filter(|&&o| uncovered[o]).count()).collect();
    let mut members = BTreeSet::new();
    loop {
        let Some((best, &gain)) = count.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))) else {
            break;
        };
        if gain == 0 {
            break;
        }
        members.insert(best);
        for &owner in &hits[best] {
            if std::mem::replace(&mut uncovered[owner], false) {
                for v in neighborhoods[owner].ids().chain([owner]) {
                    count[v] -= 1;
                }
            }
        }
    }
    debug_assert!(members.len() <= n);
    AnchorSet { members, construction: AnchorConstruction::GreedyCover, m: None }
}

/// Address-ordered partition of the ESPs into blocks of at most
/// `ceil(sqrt(n_e))` consecutive addresses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedSets {
    pub blocks: Vec<Vec<EspId>>,
    pub capacity: usize,
}

impl TrackedSets {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block holding `v`.
    pub fn block_of(&self, v: EspId) -> usize {
        v / self.capacity
    }
}

pub fn build_tracked_sets(plan: &AddressPlan, n_e: usize) -> TrackedSets {
    debug_assert_eq!(plan.n_e(), n_e);
    // ESP ids follow address order, so consecutive ids are consecutive addresses.
    let capacity = random_anchor_count(n_e).max(1);
    let ids: Vec<EspId> = (0..n_e).collect();
    TrackedSets { blocks: ids.chunks(capacity).map(<[EspId]>::to_vec).collect(), capacity }
}

/// Uniform block choice for `v`, fixed by `(seed, v)`.
pub fn assign_tracking(tracked: &TrackedSets, v: EspId, seed: u64) -> usize {
    if tracked.len() <= 1 {
        return 0;
    }
    indexed_rng(seed, Stream::Tracking, v as u64).gen_range(0..tracked.len())
}

/// Tracked sets together with the block each ESP tracks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracking {
    pub sets: TrackedSets,
    pub assignment: Vec<usize>,
}

impl Tracking {
    pub fn assign(sets: TrackedSets, n_e: usize, seed: u64) -> Self {
        let assignment = (0..n_e).map(|v| assign_tracking(&sets, v, seed)).collect();
        Self { sets, assignment }
    }

    /// Uses an explicit assignment, for constructed scenarios.
    pub fn with_assignment(sets: TrackedSets, assignment: Vec<usize>) -> Result<Self, ClusteringError> {
        let n_e: usize = sets.blocks.iter().map(Vec::len).sum();
        if assignment.len() != n_e {
            return Err(ClusteringError::AssignmentLength { expected: n_e, found: assignment.len() });
        }
        if let Some((esp, &index)) = assignment.iter().enumerate().find(|(_, &b)| b >= sets.len()) {
            return Err(ClusteringError::BadTrackedIndex { esp, index, count: sets.len() });
        }
        Ok(Self { sets, assignment })
    }

    /// The tracked set of `v`.
    pub fn tracked_by(&self, v: EspId) -> &[EspId] {
        &self.sets.blocks[self.assignment[v]]
    }

    pub fn tracks(&self, v: EspId, d: EspId) -> bool {
        self.assignment[v] == self.sets.block_of(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scheme: Scheme,
    /// `[v]` for nodes without an anchor, `[i, d]` for untracked pairs.
    pub uncovered: Vec<Vec<EspId>>,
    pub checks: usize,
    pub failure_fraction: f64,
}

impl CoverageReport {
    fn new(scheme: Scheme, uncovered: Vec<Vec<EspId>>, checks: usize) -> Self {
        let failure_fraction = if checks == 0 { 0.0 } else { uncovered.len() as f64 / checks as f64 };
        Self { scheme, uncovered, checks, failure_fraction }
    }

    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Every ESP must be an anchor or see one inside its neighborhood.
pub fn verify_partial_coverage(neighborhoods: &[ENeighborhood], anchors: &AnchorSet) -> CoverageReport {
    let uncovered = anchors.uncovered(neighborhoods).into_iter().map(|v| vec![v]).collect();
    CoverageReport::new(Scheme::PartialAnchor, uncovered, neighborhoods.len())
}

/// Every ordered pair `(i, d)` needs some `j` in `N(i)` that tracks `d`.
pub fn verify_full_coverage(neighborhoods: &[ENeighborhood], tracking: &Tracking) -> CoverageReport {
    let n = neighborhoods.len();
    let mut uncovered = Vec::new();
    for nb in neighborhoods {
        let seen: BTreeSet<usize> = nb.ids().map(|j| tracking.assignment[j]).collect();
        for d in (0..n).filter(|&d| d != nb.owner) {
            if !seen.contains(&tracking.sets.block_of(d)) {
                uncovered.push(vec![nb.owner, d]);
            }
        }
    }
    CoverageReport::new(Scheme::FullAnchor, uncovered, n * n.saturating_sub(1))
}
