//! All-pairs stretch evaluation and the step-by-step stretch-bound check.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EntangledPath, Overlay, PathCase, RoutingError, STRETCH_TOLERANCE};
use crate::clustering::Scheme;
use crate::topology::EspId;

/// Width of a stretch histogram bin.
pub const HISTOGRAM_BIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub case_i: usize,
    pub case_ii: usize,
    pub case_iii: usize,
    pub fallback: usize,
    pub failure: usize,
}

impl CaseCounts {
    fn add(&mut self, case: PathCase) {
        match case {
            PathCase::CaseI => self.case_i += 1,
            PathCase::CaseII => self.case_ii += 1,
            PathCase::CaseIII => self.case_iii += 1,
            PathCase::Fallback => self.fallback += 1,
            PathCase::Failure => self.failure += 1,
        }
    }

    pub fn merge(&mut self, other: &CaseCounts) {
        self.case_i += other.case_i;
        self.case_ii += other.case_ii;
        self.case_iii += other.case_iii;
        self.fallback += other.fallback;
        self.failure += other.failure;
    }

    pub fn total(&self) -> usize {
        self.case_i + self.case_ii + self.case_iii + self.fallback + self.failure
    }

    pub fn resolved(&self) -> usize {
        self.case_i + self.case_ii + self.case_iii
    }
}

/// One row per ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub source: EspId,
    pub dest: EspId,
    pub case: String,
    pub cost: f64,
    pub optimal: f64,
    pub stretch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub scheme: Scheme,
    pub pairs: usize,
    /// Worst stretch over pairs resolved by the scheme.
    pub max_stretch: f64,
    /// Worst stretch once fallback paths are counted too.
    pub max_stretch_with_fallback: f64,
    pub mean_stretch: f64,
    pub max_case_ii_stretch: f64,
    pub max_case_iii_stretch: f64,
    /// `(bin lower edge, count)` over scheme-resolved pairs.
    pub histogram: Vec<(f64, usize)>,
    pub cases: CaseCounts,
    pub fallback_fraction: f64,
    pub failure_fraction: f64,
    /// Segments whose recorded cost differs from the optimal-cost oracle.
    pub segment_mismatches: usize,
    /// Paths costing less than the optimum, which the oracle forbids.
    pub below_optimal: usize,
    pub max_table_size: usize,
    pub mean_table_size: f64,
    #[serde(skip)]
    pub paths: Vec<EntangledPath>,
}

impl StretchReport {
    pub fn rows(&self) -> Vec<PairRow> {
        self.paths
            .iter()
            .map(|p| PairRow {
                source: p.source,
                dest: p.destination,
                case: p.case.label().to_string(),
                cost: p.total_cost,
                optimal: p.optimal_cost,
                stretch: p.stretch,
            })
            .collect()
    }

    pub fn paths_of(&self, case: PathCase) -> impl Iterator<Item = &EntangledPath> {
        self.paths.iter().filter(move |p| p.case == case)
    }
}

impl Overlay {
    /// Resolves every ordered pair of distinct ESPs.
    pub fn evaluate_all_pairs(&self) -> StretchReport {
        let n = self.n_e();
        let paths: Vec<EntangledPath> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).filter(move |&d| d != i).map(move |d| self.resolve(i, d)))
            .collect();

        let mut cases = CaseCounts::default();
        let mut max_stretch: f64 = 1.0;
        let mut max_with_fallback: f64 = 1.0;
        let (mut max_ii, mut max_iii): (f64, f64) = (1.0, 1.0);
        let mut sum = 0.0;
        let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
        let mut segment_mismatches = 0;
        let mut below_optimal = 0;
        for p in &paths {
            cases.add(p.case);
            if p.case == PathCase::Failure {
                continue;
            }
            max_with_fallback = max_with_fallback.max(p.stretch);
            if p.total_cost < p.optimal_cost - STRETCH_TOLERANCE {
                below_optimal += 1;
            }
            for ((a, b), &c) in p.segments().zip(&p.segment_costs) {
                let oracle = self.costs.get(a, b);
                let ok = match p.case {
                    PathCase::Fallback => self.graph.cost(a, b) == Some(c),
                    _ => (c - oracle).abs() <= STRETCH_TOLERANCE,
                };
                segment_mismatches += usize::from(!ok);
            }
            if !p.case.is_scheme_path() {
                continue;
            }
            max_stretch = max_stretch.max(p.stretch);
            sum += p.stretch;
            match p.case {
                PathCase::CaseII => max_ii = max_ii.max(p.stretch),
                PathCase::CaseIII => max_iii = max_iii.max(p.stretch),
                _ => {}
            }
            *bins.entry(((p.stretch - 1.0).max(0.0) / HISTOGRAM_BIN) as usize).or_default() += 1;
        }
        let resolved = cases.resolved();
        let total = paths.len().max(1) as f64;
        let sizes: Vec<usize> = self.tables.iter().map(|t| t.len()).collect();
        StretchReport {
            scheme: self.scheme(),
            pairs: paths.len(),
            max_stretch,
            max_stretch_with_fallback: max_with_fallback,
            mean_stretch: if resolved == 0 { 1.0 } else { sum / resolved as f64 },
            max_case_ii_stretch: max_ii,
            max_case_iii_stretch: max_iii,
            histogram: bins.into_iter().map(|(b, c)| (1.0 + b as f64 * HISTOGRAM_BIN, c)).collect(),
            cases,
            fallback_fraction: cases.fallback as f64 / total,
            failure_fraction: cases.failure as f64 / total,
            segment_mismatches,
            below_optimal,
            max_table_size: sizes.iter().copied().max().unwrap_or(0),
            mean_table_size: sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64,
            paths,
        }
    }
}

/// Which bound argument applies to a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    /// `[i, x, d]` with `x` in `N(i)`: threefold bound.
    ViaSourceNeighbor,
    /// `[i, k, d]` with `k` in `N(d)`, from an anchor source: threefold bound.
    ViaDestinationNeighbor,
    /// `[i, l, k, d]` through two anchors: fivefold bound.
    ViaTwoAnchors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub claim: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub kind: ChainKind,
    pub factor: usize,
    pub steps: Vec<ChainStep>,
}

/// Evaluates every inequality of the stretch-bound argument on a concrete path.
///
/// Returns the trace when all steps hold and a `ChainViolation` naming the
/// first failing step otherwise.
pub fn verify_inequality_chain(path: &EntangledPath, overlay: &Overlay) -> Result<ChainTrace, RoutingError> {
    let no_chain = || RoutingError::NoChain { source_esp: path.source, destination: path.destination, kind: path.case };
    if !matches!(path.case, PathCase::CaseII | PathCase::CaseIII) {
        return Err(no_chain());
    }
    let w = |a: EspId, b: EspId| overlay.costs().get(a, b);
    let c = |a: f64, b: f64| overlay.composition().compose(a, b);
    let fold = |xs: &[f64]| overlay.composition().fold(xs.iter().copied());
    let (i, d) = (path.source, path.destination);
    let w_r = path.total_cost;
    let mut steps = Vec::new();
    let mut step = |claim: &str, lhs: f64, rhs: f64| {
        steps.push(ChainStep { claim: claim.to_string(), lhs, rhs, holds: lhs <= rhs + STRETCH_TOLERANCE });
    };

    let (kind, factor) = match path.repeaters.as_slice() {
        &[_, x, _] if overlay.in_neighborhood(i, x) => {
            step("decomposition of the path cost", w_r, c(w(i, x), w(x, d)));
            step("triangle inequality through the source", c(w(i, x), w(x, d)), fold(&[w(i, x), w(x, i), w(i, d)]));
            step("neighborhood ordering bounds the round trip to the relay", c(w(i, x), w(x, i)), c(w(i, d), w(d, i)));
            step("threefold stretch bound", w_r, fold(&[w(i, d), w(d, i), w(i, d)]));
            (ChainKind::ViaSourceNeighbor, 3)
        }
        &[_, k, _] if path.anchors.is_some_and(|(l, _)| l == i) => {
            step("decomposition of the path cost", w_r, c(w(i, k), w(k, d)));
            step("triangle inequality through the destination", c(w(i, k), w(k, d)), fold(&[w(i, d), w(d, k), w(k, d)]));
            step("neighborhood ordering bounds the round trip to the relay", c(w(d, k), w(k, d)), c(w(d, i), w(i, d)));
            step("threefold stretch bound", w_r, fold(&[w(i, d), w(d, i), w(i, d)]));
            (ChainKind::ViaDestinationNeighbor, 3)
        }
        &[_, l, k, _] => {
            let head = c(w(i, l), w(l, i));
            let tail = c(w(d, k), w(k, d));
            step("decomposition of the path cost", w_r, fold(&[w(i, l), w(l, k), w(k, d)]));
            step(
                "triangle inequality between the anchors through the source",
                w_r,
                fold(&[w(i, l), w(l, i), w(i, k), w(k, d)]),
            );
            step("neighborhood ordering bounds the round trip to the first anchor", head, c(w(i, d), w(d, i)));
            step(
                "isotone extension of the round-trip bound",
                fold(&[head, w(i, k), w(k, d)]),
                fold(&[w(i, d), w(d, i), w(i, k), w(k, d)]),
            );
            step("triangle inequality from the source to the second anchor", w(i, k), c(w(i, d), w(d, k)));
            step("neighborhood ordering bounds the round trip to the second anchor", tail, c(w(d, i), w(i, d)));
            step("fivefold stretch bound", w_r, fold(&[w(i, d), w(d, i), w(i, d), w(d, i), w(i, d)]));
            (ChainKind::ViaTwoAnchors, 5)
        }
        _ => return Err(no_chain()),
    };
    if let Some(bad) = steps.iter().find(|s| !s.holds) {
        return Err(RoutingError::ChainViolation {
            claim: format!("{factor}-fold stretch bound for {}->{}", i, d),
            step: bad.claim.clone(),
            lhs: bad.lhs,
            rhs: bad.rhs,
        });
    }
    Ok(ChainTrace { kind, factor, steps })
}
