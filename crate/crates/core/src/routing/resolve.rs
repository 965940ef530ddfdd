//! Case-by-case request resolution for both schemes.

use std::collections::BTreeSet;

use super::{EntangledPath, EntryOrigin, LongRange, Overlay, PathCase};
use crate::clustering::Scheme;
use crate::topology::{optimal_cost, EspId};

/// Links excluded from a resolution, as `(min, max)` endpoint pairs.
pub type LinkSet = BTreeSet<(EspId, EspId)>;

pub(crate) fn link(a: EspId, b: EspId) -> (EspId, EspId) {
    (a.min(b), a.max(b))
}

impl Overlay {
    /// Resolves `i -> d` with the overlay's scheme.
    pub fn resolve(&self, i: EspId, d: EspId) -> EntangledPath {
        self.resolve_excluding(i, d, &LinkSet::new())
    }

    /// Resolves `i -> d` treating every link in `excluded` as absent.
    pub fn resolve_excluding(&self, i: EspId, d: EspId, excluded: &LinkSet) -> EntangledPath {
        if i == d {
            return self.path(i, d, vec![i], PathCase::CaseI, None);
        }
        let found = match self.scheme() {
            Scheme::PartialAnchor => self.partial_anchor(i, d, excluded),
            Scheme::FullAnchor => self.full_anchor(i, d, excluded),
        };
        match found {
            Some((nodes, case, anchors)) => self.path(i, d, nodes, case, anchors),
            None => self.unresolved(i, d),
        }
    }

    /// `a` holds an entry for `b` whose link is not excluded.
    fn has_link(&self, a: EspId, b: EspId, excluded: &LinkSet) -> bool {
        !excluded.contains(&link(a, b)) && self.tables[a].entry(b).is_some()
    }

    fn partial_anchor(&self, i: EspId, d: EspId, excluded: &LinkSet) -> Option<Resolution> {
        if self.has_link(i, d, excluded) {
            return Some((vec![i, d], PathCase::CaseI, None));
        }
        if let Some(j) = self.one_hop_via_neighbors(i, d, excluded, |j| self.in_neighborhood(j, d)) {
            return Some((vec![i, j, d], PathCase::CaseII, None));
        }
        let LongRange::Anchors(anchors) = &self.long_range else {
            return None;
        };
        // Candidate first anchors: the source itself, then anchors in N(i) by cost.
        let near = self.tables[i]
            .entries
            .iter()
            .filter(|e| e.origin == EntryOrigin::ENeighbor && e.anchor_flag && !excluded.contains(&link(i, e.e_hop)));
        let mut ordered: Vec<(f64, EspId)> = near.map(|e| (e.cost, e.e_hop)).collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let candidates = anchors.contains(i).then_some(i).into_iter().chain(ordered.into_iter().map(|(_, l)| l));

        for l in candidates {
            if l != i && self.has_link(l, d, excluded) {
                return Some((vec![i, l, d], PathCase::CaseIII, Some((l, d))));
            }
            let best = self.tables[l]
                .entries
                .iter()
                .filter(|e| e.has_role(EntryOrigin::AnchorLink) && e.e_hop != i && e.e_hop != d)
                .filter(|e| e.reverse_members.as_ref().is_some_and(|r| r.binary_search(&d).is_ok()))
                .filter(|e| !excluded.contains(&link(l, e.e_hop)) && !excluded.contains(&link(e.e_hop, d)))
                .map(|e| (self.costs.compose(e.cost, self.costs.get(e.e_hop, d)), e.e_hop))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, k)) = best {
                let nodes = if l == i { vec![i, k, d] } else { vec![i, l, k, d] };
                return Some((nodes, PathCase::CaseIII, Some((l, k))));
            }
        }
        None
    }

    fn full_anchor(&self, i: EspId, d: EspId, excluded: &LinkSet) -> Option<Resolution> {
        if self.has_link(i, d, excluded) {
            return Some((vec![i, d], PathCase::CaseI, None));
        }
        let LongRange::Tracking(tracking) = &self.long_range else {
            return None;
        };
        let block = tracking.sets.block_of(d);
        let covers = |j: EspId| {
            self.in_neighborhood(j, d)
                || self.tables[i].entry(j).is_some_and(|e| e.tracked_block == Some(block))
        };
        self.one_hop_via_neighbors(i, d, excluded, covers).map(|j| (vec![i, j, d], PathCase::CaseII, None))
    }

    /// Cheapest `j` in `N(i)` with `covers(j)` and a live link `j -> d`.
    fn one_hop_via_neighbors(
        &self,
        i: EspId,
        d: EspId,
        excluded: &LinkSet,
        covers: impl Fn(EspId) -> bool,
    ) -> Option<EspId> {
        self.tables[i]
            .entries
            .iter()
            .filter(|e| e.origin == EntryOrigin::ENeighbor && !excluded.contains(&link(i, e.e_hop)))
            .filter(|e| covers(e.e_hop) && !excluded.contains(&link(e.e_hop, d)))
            .map(|e| (self.costs.compose(e.cost, self.costs.get(e.e_hop, d)), e.e_hop))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, j)| j)
    }

    fn path(
        &self,
        i: EspId,
        d: EspId,
        nodes: Vec<EspId>,
        case: PathCase,
        anchors: Option<(EspId, EspId)>,
    ) -> EntangledPath {
        let segment_costs: Vec<f64> = nodes.windows(2).map(|w| self.costs.get(w[0], w[1])).collect();
        self.finish(i, d, nodes, segment_costs, case, anchors, None)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        i: EspId,
        d: EspId,
        repeaters: Vec<EspId>,
        segment_costs: Vec<f64>,
        case: PathCase,
        anchors: Option<(EspId, EspId)>,
        diagnostic: Option<String>,
    ) -> EntangledPath {
        let composition = self.composition();
        let total_cost = composition.fold(segment_costs.iter().copied());
        let optimal = self.costs.get(i, d);
        let stretch = if case == PathCase::Failure {
            f64::INFINITY
        } else if optimal == 0.0 {
            1.0
        } else {
            total_cost / optimal
        };
        EntangledPath {
            source: i,
            destination: d,
            repeaters,
            segment_costs,
            total_cost,
            optimal_cost: optimal,
            case,
            stretch,
            anchors,
            diagnostic,
        }
    }

    fn unresolved(&self, i: EspId, d: EspId) -> EntangledPath {
        let reason = match self.scheme() {
            Scheme::PartialAnchor => format!(
                "anchor coverage violated: no anchor in N({i}) (or {i} itself) reaches an anchor whose neighborhood holds {d}"
            ),
            Scheme::FullAnchor => format!("tracking coverage violated: no node in N({i}) tracks {d}"),
        };
        if self.params.fallback {
            if let Ok((_, walk)) = optimal_cost(&self.graph, &self.metric, i, d) {
                let links: Vec<f64> =
                    walk.windows(2).map(|w| self.graph.cost(w[0], w[1]).expect("witness uses graph links")).collect();
                return self.finish(i, d, walk, links, PathCase::Fallback, None, Some(reason));
            }
        }
        EntangledPath {
            source: i,
            destination: d,
            repeaters: Vec::new(),
            segment_costs: Vec::new(),
            total_cost: f64::INFINITY,
            optimal_cost: self.costs.get(i, d),
            case: PathCase::Failure,
            stretch: f64::INFINITY,
            anchors: None,
            diagnostic: Some(reason),
        }
    }
}

type Resolution = (Vec<EspId>, PathCase, Option<(EspId, EspId)>);
