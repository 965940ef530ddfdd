//! Entangling-cost metrics: link costs, the composition operator, and an
//! axiom checker for the derived end-to-end metric.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, Stream};

/// Absolute tolerance used when comparing composed costs.
pub const COST_TOLERANCE: f64 = 1e-9;

/// Largest number of tuple evaluations done exhaustively per relation.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("unknown metric {0:?} (expected hop-count, uniform-random or capacity)")]
    UnknownMetric(String),
    #[error("invalid cost range [{low}, {high}]")]
    BadRange { low: u32, high: u32 },
}

/// How costs of consecutive segments combine along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Composition {
    /// Costs add up (delay, hop count, log-converted multiplicative metrics).
    Additive,
    /// The path cost is the smallest segment cost (concave metrics).
    Min,
}

impl Composition {
    pub fn compose(self, a: f64, b: f64) -> f64 {
        match self {
            Composition::Additive => a + b,
            Composition::Min => a.min(b),
        }
    }

    /// Neutral element of [`Composition::compose`].
    pub fn identity(self) -> f64 {
        match self {
            Composition::Additive => 0.0,
            Composition::Min => f64::INFINITY,
        }
    }

    /// Composes a sequence of segment costs; an empty sequence costs zero.
    pub fn fold<I: IntoIterator<Item = f64>>(self, costs: I) -> f64 {
        let mut iter = costs.into_iter().peekable();
        if iter.peek().is_none() {
            return 0.0;
        }
        iter.fold(self.identity(), |acc, c| self.compose(acc, c))
    }

    /// `cost` composed with itself `times` times.
    pub fn repeat(self, cost: f64, times: usize) -> f64 {
        self.fold(std::iter::repeat(cost).take(times))
    }
}

/// How link costs are drawn when a graph is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LinkCostModel {
    /// Every link costs 1.
    Unit,
    /// Integer costs drawn uniformly from `low..=high`.
    UniformInt { low: u32, high: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglingMetric {
    pub name: String,
    pub composition: Composition,
    pub link_model: LinkCostModel,
}

impl EntanglingMetric {
    pub fn new(name: impl Into<String>, composition: Composition, link_model: LinkCostModel) -> Result<Self, MetricError> {
        if let LinkCostModel::UniformInt { low, high } = link_model {
            if low == 0 || low > high {
                return Err(MetricError::BadRange { low, high });
            }
        }
        Ok(Self { name: name.into(), composition, link_model })
    }

    pub fn hop_count() -> Self {
        Self { name: "hop-count".into(), composition: Composition::Additive, link_model: LinkCostModel::Unit }
    }

    pub fn uniform_random() -> Self {
        Self {
            name: "uniform-random".into(),
            composition: Composition::Additive,
            link_model: LinkCostModel::UniformInt { low: 1, high: 10 },
        }
    }

    /// Concave metric: integer link costs in [1,10] composed with `min`.
    pub fn capacity() -> Self {
        Self {
            name: "capacity".into(),
            composition: Composition::Min,
            link_model: LinkCostModel::UniformInt { low: 1, high: 10 },
        }
    }

    pub fn by_name(name: &str) -> Result<Self, MetricError> {
        match name {
            "hop-count" | "hop" => Ok(Self::hop_count()),
            "uniform-random" | "random" => Ok(Self::uniform_random()),
            "capacity" | "min" => Ok(Self::capacity()),
            other => Err(MetricError::UnknownMetric(other.to_string())),
        }
    }

    pub fn compose(&self, a: f64, b: f64) -> f64 {
        self.composition.compose(a, b)
    }

    pub fn draw_link_cost<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.link_model {
            LinkCostModel::Unit => 1.0,
            LinkCostModel::UniformInt { low, high } => rng.gen_range(low..=high) as f64,
        }
    }
}

pub fn compose(metric: &EntanglingMetric, a: f64, b: f64) -> f64 {
    metric.compose(a, b)
}

/// Read access to direct link costs, possibly asymmetric.
pub trait LinkCosts {
    fn node_count(&self) -> usize;
    /// Cost of the direct link `i -> j`, `None` when there is no link.
    fn link_cost(&self, i: usize, j: usize) -> Option<f64>;
}

/// End-to-end optimal costs over all walks, by Kleene's closure.
///
/// Works over the semiring (best-of, compose) for both compositions; the
/// diagonal of the result is fixed to zero. Unreachable pairs are `None`.
pub fn closure<C: LinkCosts + ?Sized>(composition: Composition, costs: &C) -> Vec<Vec<Option<f64>>> {
    let n = costs.node_count();
    let mut d: Vec<Vec<Option<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Some(composition.identity()) } else { costs.link_cost(i, j) })
                .collect()
        })
        .collect();
    let extend = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(composition.compose(a, b)),
        _ => None,
    };
    for k in 0..n {
        let loop_k = d[k][k];
        for i in 0..n {
            let via = extend(d[i][k], loop_k);
            if via.is_none() {
                continue;
            }
            for j in 0..n {
                if let Some(candidate) = extend(via, d[k][j]) {
                    if d[i][j].map_or(true, |cur| candidate < cur) {
                        d[i][j] = Some(candidate);
                    }
                }
            }
        }
    }
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0.0);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Definiteness,
    NonNegativity,
    Symmetry,
    TriangleInequality,
    LeftIsotonicity,
    RightIsotonicity,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Definiteness => "definiteness",
            Axiom::NonNegativity => "non-negativity",
            Axiom::Symmetry => "symmetry",
            Axiom::TriangleInequality => "triangle inequality",
            Axiom::LeftIsotonicity => "left isotonicity",
            Axiom::RightIsotonicity => "right isotonicity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Number of node tuples evaluated across all relations.
    pub checked_triples: u64,
    pub violations: Vec<AxiomViolation>,
    pub passed: bool,
    pub exhaustive: bool,
}

/// Checks the metric axioms on link costs and on the derived end-to-end costs.
///
/// Link-level checks cover definiteness, non-negativity and symmetry of
/// every direct link. The triangle inequality and both isotonicity
/// properties are evaluated on the closure over distinct nodes; they are
/// enumerated exhaustively while that stays under [`EXHAUSTIVE_LIMIT`]
/// tuples and sampled `sample_count` times otherwise. Isotonicity is checked
/// in its order-preserving form `a < b => c(+)a <= c(+)b`.
pub fn check_axioms<C: LinkCosts + ?Sized>(
    metric: &EntanglingMetric,
    costs: &C,
    sample_count: usize,
    seed: u64,
) -> AxiomReport {
    let n = costs.node_count();
    let comp = metric.composition;
    let tol = COST_TOLERANCE;
    let mut violations = Vec::new();
    let mut checked = 0u64;

    for i in 0..n {
        for j in 0..n {
            if i == j {
                if let Some(c) = costs.link_cost(i, i) {
                    if c.abs() > tol {
                        violations.push(AxiomViolation { axiom: Axiom::Definiteness, witness: vec![i, i] });
                    }
                }
                continue;
            }
            let Some(c) = costs.link_cost(i, j) else {
                if costs.link_cost(j, i).is_some() {
                    violations.push(AxiomViolation { axiom: Axiom::Symmetry, witness: vec![i, j] });
                }
                continue;
            };
            checked += 1;
            if c < -tol {
                violations.push(AxiomViolation { axiom: Axiom::NonNegativity, witness: vec![i, j] });
            } else if c <= tol {
                violations.push(AxiomViolation { axiom: Axiom::Definiteness, witness: vec![i, j] });
            }
            if i < j && costs.link_cost(j, i).map_or(true, |r| (r - c).abs() > tol) {
                violations.push(AxiomViolation { axiom: Axiom::Symmetry, witness: vec![i, j] });
            }
        }
    }

    let d = closure(comp, costs);
    let w = |i: usize, j: usize| d[i][j];
    for i in 0..n {
        for j in (i + 1)..n {
            match (w(i, j), w(j, i)) {
                (Some(a), Some(b)) => {
                    if a <= tol {
                        violations.push(AxiomViolation { axiom: Axiom::Definiteness, witness: vec![i, j] });
                    }
                    if (a - b).abs() > tol {
                        violations.push(AxiomViolation { axiom: Axiom::Symmetry, witness: vec![i, j] });
                    }
                }
                (None, None) => {}
                _ => violations.push(AxiomViolation { axiom: Axiom::Symmetry, witness: vec![i, j] }),
            }
        }
    }

    let n64 = n as u64;
    let exhaustive = n64.pow(3) <= EXHAUSTIVE_LIMIT && n64.pow(4) <= EXHAUSTIVE_LIMIT;
    let mut rng = stream_rng(seed, Stream::Sampling);

    let triangle = |i: usize, k: usize, j: usize, violations: &mut Vec<AxiomViolation>| {
        if let (Some(ij), Some(ik), Some(kj)) = (w(i, j), w(i, k), w(k, j)) {
            if ij > comp.compose(ik, kj) + tol {
                violations.push(AxiomViolation { axiom: Axiom::TriangleInequality, witness: vec![i, k, j] });
            }
        }
    };
    let isotone = |i: usize, j: usize, k: usize, l: usize, violations: &mut Vec<AxiomViolation>| {
        // left: w(j,l) < w(j,k) => w(i,j)(+)w(j,l) <= w(i,j)(+)w(j,k)
        if let (Some(ij), Some(jl), Some(jk)) = (w(i, j), w(j, l), w(j, k)) {
            if jl < jk - tol && comp.compose(ij, jl) > comp.compose(ij, jk) + tol {
                violations.push(AxiomViolation { axiom: Axiom::LeftIsotonicity, witness: vec![i, j, k, l] });
            }
        }
        // right: w(l,j) < w(k,j) => w(l,j)(+)w(j,i) <= w(k,j)(+)w(j,i)
        if let (Some(lj), Some(kj), Some(ji)) = (w(l, j), w(k, j), w(j, i)) {
            if lj < kj - tol && comp.compose(lj, ji) > comp.compose(kj, ji) + tol {
                violations.push(AxiomViolation { axiom: Axiom::RightIsotonicity, witness: vec![i, j, k, l] });
            }
        }
    };

    if exhaustive {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    checked += 1;
                    triangle(i, k, j, &mut violations);
                    for l in 0..n {
                        if l == j || l == k {
                            continue;
                        }
                        checked += 1;
                        isotone(i, j, k, l, &mut violations);
                    }
                }
            }
        }
    } else if n >= 4 {
        for _ in 0..sample_count {
            let picked = sample(&mut rng, n, 4).into_vec();
            let (i, j, k, l) = (picked[0], picked[1], picked[2], picked[3]);
            checked += 2;
            triangle(i, k, j, &mut violations);
            isotone(i, j, k, l, &mut violations);
        }
    }

    AxiomReport { checked_triples: checked, passed: violations.is_empty(), violations, exhaustive }
}
