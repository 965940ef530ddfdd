//! Entangling tables, request resolution and ebit bookkeeping.

mod ebits;
mod resolve;
mod stretch;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::QuantumAddress;
use crate::clustering::{AnchorSet, Scheme, Tracking};
use crate::metrics::{Composition, EntanglingMetric};
use crate::qsearch::{partition_neighborhood, QsearchError};
use crate::topology::{all_reverse_neighborhoods, CostMatrix, ENeighborhood, EspId, NetworkGraph, TopologyError};

pub use ebits::{DeliveryRecord, EbitHandle, PacketHeader, QuantumPacket, SuperposedRef};
pub use stretch::{verify_inequality_chain, CaseCounts, ChainKind, ChainStep, ChainTrace, PairRow, StretchReport};

/// Ebits per entry unless configured otherwise.
pub const DEFAULT_EBIT_BUDGET: u32 = 4;

/// Tolerance for comparing composed costs of real-valued metrics.
pub const STRETCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("table of ESP {owner} needs {required} entries but the cap is {cap}")]
    CapacityTooSmall { owner: EspId, required: usize, cap: usize },
    #[error("partition count must be at least 1")]
    NoPartitions,
    #[error("{scheme} routing needs {expected}")]
    SchemeMismatch { scheme: Scheme, expected: &'static str },
    #[error("neighborhood list has {found} entries for {expected} ESPs")]
    NeighborhoodCount { expected: usize, found: usize },
    #[error("link {0}-{1} has no ebits left")]
    DepletedLink(EspId, EspId),
    #[error("no entangled link between {0} and {1}")]
    MissingLink(EspId, EspId),
    #[error("packet payload is empty")]
    EmptyPayload,
    #[error("address {0} is not an ESP of this network")]
    UnknownAddress(QuantumAddress),
    #[error("{claim} does not hold at step {step:?}: {lhs} > {rhs}")]
    ChainViolation { claim: String, step: String, lhs: f64, rhs: f64 },
    #[error("path {source_esp}->{destination} of kind {kind:?} has no stretch-bound argument")]
    NoChain { source_esp: EspId, destination: EspId, kind: PathCase },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Partition(#[from] QsearchError),
}

/// Why a peer appears in a table; earlier variants win when several apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryOrigin {
    ENeighbor,
    AnchorLink,
    TrackedLink,
    ReverseNeighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub ebits: u32,
    pub e_hop: EspId,
    pub e_hop_address: QuantumAddress,
    /// Optimal end-to-end cost of the link to `e_hop`.
    pub cost: f64,
    /// `N(e_hop)` split into `f` disjoint parts (classical mirror of the
    /// superposed addresses).
    pub neighborhood_partitions: Arc<Vec<Vec<EspId>>>,
    pub anchor_flag: bool,
    /// Highest-priority reason for the entry.
    pub origin: EntryOrigin,
    /// Every reason the peer is in the table, ascending.
    pub roles: Vec<EntryOrigin>,
    /// Block tracked by `e_hop`, carried on full-anchor neighbor entries.
    pub tracked_block: Option<usize>,
    /// `R(e_hop)`, carried on anchor-to-anchor entries.
    pub reverse_members: Option<Arc<Vec<EspId>>>,
}

impl TableEntry {
    pub fn usable(&self) -> bool {
        self.ebits > 0
    }

    pub fn has_role(&self, role: EntryOrigin) -> bool {
        self.roles.contains(&role)
    }

    pub fn partitions_contain(&self, d: EspId) -> bool {
        self.neighborhood_partitions.iter().any(|p| p.contains(&d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub owner: EspId,
    pub scheme: Scheme,
    pub capacity_cap: usize,
    pub entries: Vec<TableEntry>,
}

impl RoutingTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, peer: EspId) -> Option<&TableEntry> {
        self.entries.iter().find(|e| e.e_hop == peer)
    }

    fn entry_mut(&mut self, peer: EspId) -> Option<&mut TableEntry> {
        self.entries.iter_mut().find(|e| e.e_hop == peer)
    }

    /// Entries holding `role`, whether or not it is their primary origin.
    pub fn count(&self, role: EntryOrigin) -> usize {
        self.entries.iter().filter(|e| e.has_role(role)).count()
    }
}

/// Entry evicted by the capacity cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedEntry {
    pub owner: EspId,
    pub peer: EspId,
    pub cost: f64,
}

/// The long-range structure of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LongRange {
    Anchors(AnchorSet),
    Tracking(Tracking),
}

impl LongRange {
    pub fn scheme(&self) -> Scheme {
        match self {
            LongRange::Anchors(_) => Scheme::PartialAnchor,
            LongRange::Tracking(_) => Scheme::FullAnchor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableParams {
    /// Partition count `f` of every superposed neighborhood.
    pub partitions: usize,
    pub ebit_budget: u32,
    /// Entry cap per table; `None` means `4 k`.
    pub capacity_cap: Option<usize>,
    /// Return the optimal path, tagged, when the scheme cannot resolve a pair.
    pub fallback: bool,
}

impl Default for TableParams {
    fn default() -> Self {
        Self { partitions: 1, ebit_budget: DEFAULT_EBIT_BUDGET, capacity_cap: None, fallback: true }
    }
}

/// How a request was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathCase {
    CaseI,
    CaseII,
    CaseIII,
    Fallback,
    Failure,
}

impl PathCase {
    pub fn label(self) -> &'static str {
        match self {
            PathCase::CaseI => "case-i",
            PathCase::CaseII => "case-ii",
            PathCase::CaseIII => "case-iii",
            PathCase::Fallback => "fallback",
            PathCase::Failure => "failure",
        }
    }

    /// Resolved by the scheme itself, not by the fallback.
    pub fn is_scheme_path(self) -> bool {
        matches!(self, PathCase::CaseI | PathCase::CaseII | PathCase::CaseIII)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledPath {
    pub source: EspId,
    pub destination: EspId,
    /// Every node on the path, endpoints included.
    pub repeaters: Vec<EspId>,
    pub segment_costs: Vec<f64>,
    pub total_cost: f64,
    pub optimal_cost: f64,
    pub case: PathCase,
    pub stretch: f64,
    /// First and second anchor of a long-range resolution.
    pub anchors: Option<(EspId, EspId)>,
    pub diagnostic: Option<String>,
}

impl EntangledPath {
    pub fn segments(&self) -> impl Iterator<Item = (EspId, EspId)> + '_ {
        self.repeaters.windows(2).map(|w| (w[0], w[1]))
    }

    /// `total <= factor * optimal`, composed `factor` times, exact for integers.
    pub fn within(&self, factor: usize, composition: Composition) -> bool {
        self.total_cost <= composition.repeat(self.optimal_cost, factor) + STRETCH_TOLERANCE
    }
}

/// A built overlay: neighborhoods, long-range links and every ESP's table.
#[derive(Debug, Clone)]
pub struct Overlay {
    graph: NetworkGraph,
    metric: EntanglingMetric,
    costs: CostMatrix,
    neighborhoods: Vec<ENeighborhood>,
    reverse: Vec<BTreeSet<EspId>>,
    long_range: LongRange,
    tables: Vec<RoutingTable>,
    params: TableParams,
    dropped: Vec<DroppedEntry>,
    /// `in_neighborhood[j * n + d]` iff `d` is in `N(j)`.
    in_neighborhood: Vec<bool>,
}

/// Builds tables for every ESP from precomputed clustering artifacts.
pub fn build_tables(
    graph: &NetworkGraph,
    metric: &EntanglingMetric,
    neighborhoods: Vec<ENeighborhood>,
    long_range: LongRange,
    params: TableParams,
) -> Result<Overlay, RoutingError> {
    let costs = CostMatrix::compute(graph, metric)?;
    Overlay::build(graph.clone(), metric.clone(), costs, neighborhoods, long_range, params)
}

impl Overlay {
    pub fn build(
        graph: NetworkGraph,
        metric: EntanglingMetric,
        costs: CostMatrix,
        neighborhoods: Vec<ENeighborhood>,
        long_range: LongRange,
        params: TableParams,
    ) -> Result<Self, RoutingError> {
        let n = graph.n_e();
        if neighborhoods.len() != n {
            return Err(RoutingError::NeighborhoodCount { expected: n, found: neighborhoods.len() });
        }
        if params.partitions == 0 {
            return Err(RoutingError::NoPartitions);
        }
        let k = neighborhoods.iter().map(|nb| nb.k).max().unwrap_or(0);
        let cap = params.capacity_cap.unwrap_or(4 * k.max(1));
        let reverse = all_reverse_neighborhoods(&neighborhoods);
        let mut in_neighborhood = vec![false; n * n];
        for nb in &neighborhoods {
            for m in nb.ids() {
                in_neighborhood[nb.owner * n + m] = true;
            }
        }
        let partitions = neighborhoods
            .iter()
            .map(|nb| {
                let mut ids: Vec<EspId> = nb.ids().collect();
                ids.sort_unstable();
                partition_neighborhood(&ids, params.partitions).map(Arc::new)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reverse_lists: Vec<Arc<Vec<EspId>>> = reverse.iter().map(|r| Arc::new(r.iter().copied().collect())).collect();

        let mut tables = Vec::with_capacity(n);
        let mut dropped = Vec::new();
        for owner in 0..n {
            let mut peers: BTreeMap<EspId, BTreeSet<EntryOrigin>> = BTreeMap::new();
            let mut offer = |peer: EspId, origin: EntryOrigin| {
                if peer != owner {
                    peers.entry(peer).or_default().insert(origin);
                }
            };
            for m in neighborhoods[owner].ids() {
                offer(m, EntryOrigin::ENeighbor);
            }
            for &r in &reverse[owner] {
                offer(r, EntryOrigin::ReverseNeighbor);
            }
            match &long_range {
                LongRange::Anchors(anchors) if anchors.contains(owner) => {
                    for &a in &anchors.members {
                        offer(a, EntryOrigin::AnchorLink);
                    }
                }
                LongRange::Anchors(_) => {}
                LongRange::Tracking(tracking) => {
                    for &t in tracking.tracked_by(owner) {
                        offer(t, EntryOrigin::TrackedLink);
                    }
                }
            }

            if peers.len() > cap {
                let mut reverse_only: Vec<(EspId, f64)> = peers
                    .iter()
                    .filter(|(_, roles)| roles.iter().all(|&o| o == EntryOrigin::ReverseNeighbor))
                    .map(|(&p, _)| (p, costs.get(owner, p)))
                    .collect();
                reverse_only.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
                for (peer, cost) in reverse_only.into_iter().take(peers.len() - cap) {
                    peers.remove(&peer);
                    dropped.push(DroppedEntry { owner, peer, cost });
                }
                if peers.len() > cap {
                    return Err(RoutingError::CapacityTooSmall { owner, required: peers.len(), cap });
                }
                log::debug!("table {owner}: capacity cap {cap} evicted reverse-neighbor entries");
            }

            let mut entries: Vec<TableEntry> = peers
                .into_iter()
                .map(|(peer, roles)| TableEntry {
                    ebits: params.ebit_budget,
                    e_hop: peer,
                    e_hop_address: graph.plan().esp_address(peer),
                    cost: costs.get(owner, peer),
                    neighborhood_partitions: Arc::clone(&partitions[peer]),
                    anchor_flag: match &long_range {
                        LongRange::Anchors(anchors) => anchors.contains(peer),
                        LongRange::Tracking(_) => true,
                    },
                    origin: *roles.first().expect("offered at least once"),
                    tracked_block: match &long_range {
                        LongRange::Tracking(t) if roles.contains(&EntryOrigin::ENeighbor) => Some(t.assignment[peer]),
                        _ => None,
                    },
                    reverse_members: roles
                        .contains(&EntryOrigin::AnchorLink)
                        .then(|| Arc::clone(&reverse_lists[peer])),
                    roles: roles.into_iter().collect(),
                })
                .collect();
            entries.sort_by(|a, b| a.origin.cmp(&b.origin).then(a.cost.total_cmp(&b.cost)).then(a.e_hop.cmp(&b.e_hop)));
            tables.push(RoutingTable { owner, scheme: long_range.scheme(), capacity_cap: cap, entries });
        }
        if !dropped.is_empty() {
            log::info!("capacity cap evicted {} reverse-neighbor entries", dropped.len());
        }

        Ok(Self {
            graph,
            metric,
            costs,
            neighborhoods,
            reverse,
            long_range,
            tables,
            params,
            dropped,
            in_neighborhood,
        })
    }

    pub fn n_e(&self) -> usize {
        self.graph.n_e()
    }

    pub fn scheme(&self) -> Scheme {
        self.long_range.scheme()
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn metric(&self) -> &EntanglingMetric {
        &self.metric
    }

    pub fn composition(&self) -> Composition {
        self.metric.composition
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn neighborhoods(&self) -> &[ENeighborhood] {
        &self.neighborhoods
    }

    pub fn reverse(&self, v: EspId) -> &BTreeSet<EspId> {
        &self.reverse[v]
    }

    pub fn long_range(&self) -> &LongRange {
        &self.long_range
    }

    pub fn tables(&self) -> &[RoutingTable] {
        &self.tables
    }

    pub fn table(&self, owner: EspId) -> &RoutingTable {
        &self.tables[owner]
    }

    pub fn params(&self) -> TableParams {
        self.params
    }

    pub fn dropped(&self) -> &[DroppedEntry] {
        &self.dropped
    }

    /// Whether `d` belongs to `N(j)`.
    #[inline]
    pub fn in_neighborhood(&self, j: EspId, d: EspId) -> bool {
        self.in_neighborhood[j * self.n_e() + d]
    }

    pub fn is_anchor(&self, v: EspId) -> bool {
        matches!(&self.long_range, LongRange::Anchors(a) if a.contains(v))
    }

    pub fn max_table_size(&self) -> usize {
        self.tables.iter().map(RoutingTable::len).max().unwrap_or(0)
    }

    /// Serializable snapshot: addresses, neighborhoods, long-range links and tables.
    pub fn document(&self) -> SchemeDocument {
        SchemeDocument {
            scheme: self.scheme(),
            metric: self.metric.clone(),
            addresses: self.graph.plan().esp_addresses().to_vec(),
            neighborhoods: self.neighborhoods.clone(),
            long_range: self.long_range.clone(),
            params: self.params,
            tables: self.tables.clone(),
            dropped: self.dropped.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDocument {
    pub scheme: Scheme,
    pub metric: EntanglingMetric,
    pub addresses: Vec<QuantumAddress>,
    pub neighborhoods: Vec<ENeighborhood>,
    pub long_range: LongRange,
    pub params: TableParams,
    pub tables: Vec<RoutingTable>,
    pub dropped: Vec<DroppedEntry>,
}

