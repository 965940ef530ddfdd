//! ESP overlay graphs, generators, optimal end-to-end costs and
//! e-neighborhoods.
//!
//! ESPs are numbered `0..n_e`. With no tier-1 nodes in the graph's address
//! plan, ESP `i` has address value `i`, so ordering by id is ordering by
//! address.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::{assign_addresses, AddressError, AddressPlan};
use crate::metrics::{Composition, EntanglingMetric, LinkCosts};
use crate::rng::{indexed_rng, Stream};

pub type EspId = usize;

/// Connectivity retries before a generator falls back to augmentation.
pub const MAX_GENERATION_ATTEMPTS: usize = 100;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("a network needs at least 2 ESPs, got {0}")]
    TooFewNodes(usize),
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
    #[error("no connected graph after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("ESP {j} is unreachable from ESP {i}")]
    Unreachable { i: EspId, j: EspId },
    #[error("neighborhood size {k} must be below n_e = {n_e}")]
    KTooLarge { k: usize, n_e: usize },
    #[error("unknown ESP {0}")]
    UnknownNode(EspId),
    #[error("invalid link {i}-{j} with cost {cost}")]
    BadLink { i: EspId, j: EspId, cost: f64 },
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Random graph families used as stand-ins for ESP overlays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GraphModel {
    ErdosRenyi { edge_prob: f64 },
    /// Nodes uniform in the unit square; link probability
    /// `alpha * exp(-d / (beta * sqrt 2))`.
    Waxman { alpha: f64, beta: f64 },
    /// Preferential attachment, each new node linking to `attach` others.
    BarabasiAlbert { attach: usize },
    GridTorus { rows: usize, cols: usize },
}

impl GraphModel {
    /// Erdős–Rényi with edge probability `2 ln(n) / n`, capped at 1.
    pub fn sparse_erdos_renyi(n_e: usize) -> Self {
        let n = n_e.max(2) as f64;
        GraphModel::ErdosRenyi { edge_prob: (2.0 * n.ln() / n).min(1.0) }
    }

    fn validate(&self, n_e: usize) -> Result<(), TopologyError> {
        let bad = |msg: String| Err(TopologyError::BadParams(msg));
        match *self {
            GraphModel::ErdosRenyi { edge_prob } if !(0.0..=1.0).contains(&edge_prob) => {
                bad(format!("edge probability {edge_prob} outside [0, 1]"))
            }
            GraphModel::Waxman { alpha, beta } if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0) => {
                bad(format!("waxman alpha {alpha} / beta {beta} out of range"))
            }
            GraphModel::BarabasiAlbert { attach } if attach == 0 || attach >= n_e => {
                bad(format!("attachment count {attach} must be in 1..{n_e}"))
            }
            GraphModel::GridTorus { rows, cols } if rows * cols != n_e || rows == 0 || cols == 0 => {
                bad(format!("torus {rows}x{cols} does not have {n_e} nodes"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub attempts: usize,
    /// Links added to join components after the retries ran out.
    pub augmented_edges: usize,
}

/// Undirected ESP graph with per-link costs.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    adjacency: Vec<BTreeMap<EspId, f64>>,
    plan: AddressPlan,
    stats: GenerationStats,
}

impl NetworkGraph {
    /// Builds a graph from an explicit undirected link list.
    ///
    /// Connectivity is not enforced here so that fixtures can exercise the
    /// unreachable paths; generated graphs are always connected.
    pub fn from_edges(n_e: usize, edges: &[(EspId, EspId, f64)]) -> Result<Self, TopologyError> {
        if n_e < 2 {
            return Err(TopologyError::TooFewNodes(n_e));
        }
        let mut adjacency = vec![BTreeMap::new(); n_e];
        for &(i, j, cost) in edges {
            if i >= n_e || j >= n_e {
                return Err(TopologyError::UnknownNode(i.max(j)));
            }
            if i == j || !cost.is_finite() || cost <= 0.0 {
                return Err(TopologyError::BadLink { i, j, cost });
            }
            adjacency[i].insert(j, cost);
            adjacency[j].insert(i, cost);
        }
        Ok(Self { adjacency, plan: assign_addresses(n_e, 0, 0)?, stats: GenerationStats::default() })
    }

    pub fn n_e(&self) -> usize {
        self.adjacency.len()
    }

    pub fn plan(&self) -> &AddressPlan {
        &self.plan
    }

    pub fn stats(&self) -> GenerationStats {
        self.stats
    }

    pub fn cost(&self, i: EspId, j: EspId) -> Option<f64> {
        self.adjacency.get(i)?.get(&j).copied()
    }

    pub fn neighbors(&self, i: EspId) -> impl Iterator<Item = (EspId, f64)> + '_ {
        self.adjacency[i].iter().map(|(&j, &c)| (j, c))
    }

    pub fn degree(&self, i: EspId) -> usize {
        self.adjacency[i].len()
    }

    /// Links as `(i, j, cost)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (EspId, EspId, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.range(i + 1..).map(move |(&j, &c)| (i, j, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    /// Component label of every node, labels numbered by first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_e();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in self.adjacency[u].keys() {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Fewest-hop path from `from` to `to` (inclusive), lowest ids first on ties.
    pub fn hop_path(&self, from: EspId, to: EspId) -> Option<Vec<EspId>> {
        let mut prev = vec![usize::MAX; self.n_e()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &v in self.adjacency[u].keys() {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[to] == usize::MAX {
            return None;
        }
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path)
    }

    /// Serializes to the line format `n_e <count>` followed by `i j cost`.
    pub fn to_graph_file(&self) -> String {
        let mut out = format!("n_e {}\n", self.n_e());
        for (i, j, c) in self.edges() {
            let _ = writeln!(out, "{i} {j} {c}");
        }
        out
    }

    pub fn from_graph_file(text: &str) -> Result<Self, TopologyError> {
        let parse_err = |line: usize, msg: &str| TopologyError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("n_e") {
            return Err(parse_err(hl + 1, "header must start with n_e"));
        }
        let n_e: usize = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(hl + 1, "bad node count"))?;
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(ln + 1, "expected `i j cost`"));
            }
            let i = fields[0].parse().map_err(|_| parse_err(ln + 1, "bad node id"))?;
            let j = fields[1].parse().map_err(|_| parse_err(ln + 1, "bad node id"))?;
            let c = fields[2].parse().map_err(|_| parse_err(ln + 1, "bad cost"))?;
            edges.push((i, j, c));
        }
        Self::from_edges(n_e, &edges)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), TopologyError> {
        std::fs::write(path, self.to_graph_file())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, TopologyError> {
        Self::from_graph_file(&std::fs::read_to_string(path)?)
    }
}

impl LinkCosts for NetworkGraph {
    fn node_count(&self) -> usize {
        self.n_e()
    }

    fn link_cost(&self, i: usize, j: usize) -> Option<f64> {
        self.cost(i, j)
    }
}

/// Generates a connected overlay; identical inputs give identical graphs.
///
/// Each attempt draws from its own stream. After
/// [`MAX_GENERATION_ATTEMPTS`] disconnected draws the last one is joined
/// with random links between components.
pub fn generate_graph(
    model: GraphModel,
    n_e: usize,
    metric: &EntanglingMetric,
    seed: u64,
) -> Result<NetworkGraph, TopologyError> {
    generate_graph_with(model, n_e, metric, seed, true)
}

/// As [`generate_graph`], failing instead of augmenting when `augment` is off.
pub fn generate_graph_with(
    model: GraphModel,
    n_e: usize,
    metric: &EntanglingMetric,
    seed: u64,
    augment: bool,
) -> Result<NetworkGraph, TopologyError> {
    if n_e < 2 {
        return Err(TopologyError::TooFewNodes(n_e));
    }
    model.validate(n_e)?;
    let mut last = None;
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = indexed_rng(seed, Stream::Graph, attempt as u64);
        let pairs = draw_links(model, n_e, &mut rng);
        let edges: Vec<_> = pairs.into_iter().map(|(i, j)| (i, j, metric.draw_link_cost(&mut rng))).collect();
        let mut graph = NetworkGraph::from_edges(n_e, &edges)?;
        graph.stats.attempts = attempt + 1;
        if graph.is_connected() {
            if attempt > 0 {
                log::debug!("connected graph after {} attempts", attempt + 1);
            }
            return Ok(graph);
        }
        last = Some((graph, rng));
    }
    if !augment {
        return Err(TopologyError::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS });
    }
    let (mut graph, mut rng) = last.expect("at least one attempt");
    let labels = graph.components();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<EspId>> = vec![Vec::new(); count];
    for (v, &c) in labels.iter().enumerate() {
        groups[c].push(v);
    }
    groups.shuffle(&mut rng);
    for pair in groups.windows(2) {
        let a = *pair[0].choose(&mut rng).expect("nonempty component");
        let b = *pair[1].choose(&mut rng).expect("nonempty component");
        let c = metric.draw_link_cost(&mut rng);
        graph.adjacency[a].insert(b, c);
        graph.adjacency[b].insert(a, c);
        graph.stats.augmented_edges += 1;
    }
    log::warn!(
        "graph still disconnected after {MAX_GENERATION_ATTEMPTS} attempts; added {} joining links",
        graph.stats.augmented_edges
    );
    Ok(graph)
}

fn draw_links<R: Rng>(model: GraphModel, n: usize, rng: &mut R) -> Vec<(EspId, EspId)> {
    let mut links = BTreeSet::new();
    match model {
        GraphModel::ErdosRenyi { edge_prob } => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen_bool(edge_prob) {
                        links.insert((i, j));
                    }
                }
            }
        }
        GraphModel::Waxman { alpha, beta } => {
            let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
            let scale = beta * std::f64::consts::SQRT_2;
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
                    if rng.gen_bool((alpha * (-d / scale).exp()).min(1.0)) {
                        links.insert((i, j));
                    }
                }
            }
        }
        GraphModel::BarabasiAlbert { attach } => {
            let seed_size = attach + 1;
            let mut endpoints = Vec::new();
            for i in 0..seed_size.min(n) {
                for j in (i + 1)..seed_size.min(n) {
                    links.insert((i, j));
                    endpoints.extend([i, j]);
                }
            }
            for v in seed_size..n {
                let mut targets = BTreeSet::new();
                while targets.len() < attach {
                    targets.insert(*endpoints.choose(rng).expect("seed clique has links"));
                }
                for t in targets {
                    links.insert((t, v));
                    endpoints.extend([t, v]);
                }
            }
        }
        GraphModel::GridTorus { rows, cols } => {
            for r in 0..rows {
                for c in 0..cols {
                    let v = r * cols + c;
                    for u in [r * cols + (c + 1) % cols, ((r + 1) % rows) * cols + c] {
                        if u != v {
                            links.insert((v.min(u), v.max(u)));
                        }
                    }
                }
            }
        }
    }
    links.into_iter().collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: EspId,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Additive single-source costs and predecessors (Dijkstra).
fn dijkstra(graph: &NetworkGraph, src: EspId) -> (Vec<Option<f64>>, Vec<Option<EspId>>) {
    let n = graph.n_e();
    let mut dist = vec![None; n];
    let mut prev = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::from([Frontier { cost: 0.0, node: src }]);
    dist[src] = Some(0.0);
    while let Some(Frontier { cost, node }) = heap.pop() {
        if std::mem::replace(&mut done[node], true) {
            continue;
        }
        for (v, c) in graph.neighbors(node) {
            let next = cost + c;
            if dist[v].map_or(true, |d| next < d) {
                dist[v] = Some(next);
                prev[v] = Some(node);
                heap.push(Frontier { cost: next, node: v });
            }
        }
    }
    (dist, prev)
}

/// Cheapest link of every component, lowest `(i, j)` on ties.
fn cheapest_links(graph: &NetworkGraph) -> (Vec<usize>, Vec<Option<(EspId, EspId, f64)>>) {
    let labels = graph.components();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut best: Vec<Option<(EspId, EspId, f64)>> = vec![None; count];
    for (i, j, c) in graph.edges() {
        let slot = &mut best[labels[i]];
        if slot.map_or(true, |(_, _, b)| c < b) {
            *slot = Some((i, j, c));
        }
    }
    (labels, best)
}

/// Optimal composed cost from `i` to `j` and a witness node sequence.
///
/// The sequence includes both endpoints and is empty when `i == j`. Under
/// additive composition this is a shortest path. Under `min` composition
/// the optimum over walks is the cheapest link reachable from `i`, so the
/// witness walks to that link, crosses it and continues to `j`; it may
/// revisit nodes.
pub fn optimal_cost(
    graph: &NetworkGraph,
    metric: &EntanglingMetric,
    i: EspId,
    j: EspId,
) -> Result<(f64, Vec<EspId>), TopologyError> {
    let n = graph.n_e();
    if i >= n || j >= n {
        return Err(TopologyError::UnknownNode(i.max(j)));
    }
    if i == j {
        return Ok((0.0, Vec::new()));
    }
    match metric.composition {
        Composition::Additive => {
            let (dist, prev) = dijkstra(graph, i);
            let cost = dist[j].ok_or(TopologyError::Unreachable { i, j })?;
            let mut path = vec![j];
            while let Some(p) = prev[*path.last().unwrap()] {
                path.push(p);
            }
            path.reverse();
            Ok((cost, path))
        }
        Composition::Min => {
            let (labels, best) = cheapest_links(graph);
            if labels[i] != labels[j] {
                return Err(TopologyError::Unreachable { i, j });
            }
            let (a, b, cost) = best[labels[i]].expect("connected pair has a link");
            let walk = |x: EspId, y: EspId| -> Vec<EspId> {
                let mut w = graph.hop_path(i, x).expect("same component");
                w.extend(graph.hop_path(y, j).expect("same component"));
                w
            };
            let (first, second) = (walk(a, b), walk(b, a));
            Ok((cost, if second.len() < first.len() { second } else { first }))
        }
    }
}

/// All-pairs optimal costs for a connected graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    composition: Composition,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn compute(graph: &NetworkGraph, metric: &EntanglingMetric) -> Result<Self, TopologyError> {
        let n = graph.n_e();
        let composition = metric.composition;
        let rows: Vec<Vec<Option<f64>>> = match composition {
            Composition::Additive => (0..n).into_par_iter().map(|s| dijkstra(graph, s).0).collect(),
            Composition::Min => {
                let (labels, best) = cheapest_links(graph);
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| match (i == j, labels[i] == labels[j]) {
                                (true, _) => Some(0.0),
                                (false, true) => best[labels[i]].map(|(_, _, c)| c),
                                (false, false) => None,
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        Self::from_rows(composition, rows)
    }

    /// Wraps precomputed costs; every pair must be reachable.
    pub fn from_rows(composition: Composition, rows: Vec<Vec<Option<f64>>>) -> Result<Self, TopologyError> {
        let n = rows.len();
        let mut costs = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, c) in row.into_iter().enumerate() {
                costs.push(c.ok_or(TopologyError::Unreachable { i, j })?);
            }
        }
        Ok(Self { n, composition, costs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    #[inline]
    pub fn get(&self, i: EspId, j: EspId) -> f64 {
        self.costs[i * self.n + j]
    }

    pub fn compose(&self, a: f64, b: f64) -> f64 {
        self.composition.compose(a, b)
    }
}

/// The `k` ESPs closest to `owner` by optimal end-to-end cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ENeighborhood {
    pub owner: EspId,
    pub k: usize,
    /// Sorted by ascending cost, then ascending address.
    pub members: Vec<(EspId, f64)>,
}

impl ENeighborhood {
    pub fn contains(&self, v: EspId) -> bool {
        self.members.iter().any(|&(m, _)| m == v)
    }

    pub fn ids(&self) -> impl Iterator<Item = EspId> + '_ {
        self.members.iter().map(|&(m, _)| m)
    }

    /// Cost of the farthest member.
    pub fn radius(&self) -> f64 {
        self.members.last().map_or(0.0, |&(_, c)| c)
    }
}

pub fn e_neighborhood(
    graph: &NetworkGraph,
    metric: &EntanglingMetric,
    v: EspId,
    k: usize,
) -> Result<ENeighborhood, TopologyError> {
    let n = graph.n_e();
    if v >= n {
        return Err(TopologyError::UnknownNode(v));
    }
    if k >= n {
        return Err(TopologyError::KTooLarge { k, n_e: n });
    }
    let row = match metric.composition {
        Composition::Additive => dijkstra(graph, v).0,
        Composition::Min => (0..n).map(|j| optimal_cost(graph, metric, v, j).ok().map(|(c, _)| c)).collect(),
    };
    let candidates = row.into_iter().enumerate().filter_map(|(j, c)| c.map(|c| (j, c)));
    pick_nearest(v, k, candidates)
}

/// Neighborhood of `v` read off a precomputed cost matrix.
pub fn neighborhood_from_costs(costs: &CostMatrix, v: EspId, k: usize) -> Result<ENeighborhood, TopologyError> {
    let n = costs.n();
    if v >= n {
        return Err(TopologyError::UnknownNode(v));
    }
    if k >= n {
        return Err(TopologyError::KTooLarge { k, n_e: n });
    }
    pick_nearest(v, k, (0..n).map(|j| (j, costs.get(v, j))))
}

fn pick_nearest(
    owner: EspId,
    k: usize,
    candidates: impl Iterator<Item = (EspId, f64)>,
) -> Result<ENeighborhood, TopologyError> {
    let mut members: Vec<(EspId, f64)> = candidates.filter(|&(j, _)| j != owner).collect();
    if members.len() < k {
        return Err(TopologyError::Unreachable { i: owner, j: owner });
    }
    members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    members.truncate(k);
    Ok(ENeighborhood { owner, k, members })
}

pub fn all_neighborhoods(costs: &CostMatrix, k: usize) -> Result<Vec<ENeighborhood>, TopologyError> {
    (0..costs.n()).into_par_iter().map(|v| neighborhood_from_costs(costs, v, k)).collect()
}

/// Owners whose neighborhood contains `v`.
pub fn reverse_neighborhood(all: &[ENeighborhood], v: EspId) -> BTreeSet<EspId> {
    all.iter().filter(|nb| nb.contains(v)).map(|nb| nb.owner).collect()
}

/// Reverse neighborhoods of every node at once.
pub fn all_reverse_neighborhoods(all: &[ENeighborhood]) -> Vec<BTreeSet<EspId>> {
    let mut rev = vec![BTreeSet::new(); all.len()];
    for nb in all {
        for m in nb.ids() {
            rev[m].insert(nb.owner);
        }
    }
    rev
}
