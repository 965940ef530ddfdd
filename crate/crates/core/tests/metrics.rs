use qroute::metrics::*;

/// Dense cost matrix; `f64::NAN` marks a missing link.
struct Matrix(Vec<Vec<f64>>);

impl LinkCosts for Matrix {
    fn node_count(&self) -> usize {
        self.0.len()
    }
    fn link_cost(&self, i: usize, j: usize) -> Option<f64> {
        let c = self.0[i][j];
        (i != j && !c.is_nan()).then_some(c)
    }
}

fn symmetric(n: usize, edges: &[(usize, usize, f64)]) -> Matrix {
    let mut m = vec![vec![f64::NAN; n]; n];
    for &(a, b, c) in edges {
        m[a][b] = c;
        m[b][a] = c;
    }
    Matrix(m)
}

#[test]
fn compose_examples() {
    assert_eq!(compose(&EntanglingMetric::hop_count(), 2.0, 3.0), 5.0);
    assert_eq!(compose(&EntanglingMetric::capacity(), 2.0, 3.0), 2.0);
    for x in [0.0, 0.5, 7.0, 1e6] {
        assert_eq!(Composition::Additive.compose(0.0, x), x);
    }
    assert_eq!(Composition::Additive.repeat(2.0, 5), 10.0);
    assert_eq!(Composition::Min.repeat(2.0, 5), 2.0);
}

#[test]
fn hop_count_passes_on_a_ring_with_chord() {
    let g = symmetric(6, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0), (5, 0, 1.0), (0, 3, 1.0)]);
    let report = check_axioms(&EntanglingMetric::hop_count(), &g, 0, 1);
    assert!(report.passed, "{:?}", report.violations);
    assert!(report.exhaustive);
    assert!(report.checked_triples > 6 * 5 * 4);
}

#[test]
fn min_composition_passes_exhaustively_on_six_nodes() {
    let g = symmetric(
        6,
        &[(0, 1, 4.0), (1, 2, 7.0), (2, 3, 2.0), (3, 4, 9.0), (4, 5, 3.0), (5, 0, 6.0), (1, 4, 5.0)],
    );
    let report = check_axioms(&EntanglingMetric::capacity(), &g, 0, 1);
    assert!(report.passed, "{:?}", report.violations);
    // Every pair reaches the cheapest link, so the derived metric is flat.
    let d = closure(Composition::Min, &g);
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(d[i][j], Some(if i == j { 0.0 } else { 2.0 }));
        }
    }
}

#[test]
fn asymmetric_costs_are_reported() {
    let mut g = symmetric(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
    g.0[1][0] = 2.0;
    let report = check_axioms(&EntanglingMetric::hop_count(), &g, 0, 1);
    assert!(!report.passed);
    assert!(report
        .violations
        .iter()
        .any(|v| v.axiom == Axiom::Symmetry && v.witness == vec![0, 1]));
}

#[test]
fn zero_and_negative_links_are_reported() {
    let g = symmetric(3, &[(0, 1, 0.0), (1, 2, -1.0)]);
    let report = check_axioms(&EntanglingMetric::hop_count(), &g, 0, 1);
    let kinds: Vec<_> = report.violations.iter().map(|v| v.axiom).collect();
    assert!(kinds.contains(&Axiom::Definiteness));
    assert!(kinds.contains(&Axiom::NonNegativity));
}

#[test]
fn closure_matches_hand_computed_triangle() {
    let g = symmetric(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)]);
    assert_eq!(closure(Composition::Additive, &g)[0][2], Some(2.0));
    assert_eq!(closure(Composition::Min, &g)[0][2], Some(1.0));
}

#[test]
fn min_closure_picks_up_pendant_links() {
    // 2 - 0 - 1 with the cheap link hanging off the far side.
    let g = symmetric(3, &[(0, 1, 1.0), (0, 2, 5.0)]);
    let d = closure(Composition::Min, &g);
    assert_eq!(d[0][2], Some(1.0));
    assert_eq!(d[2][1], Some(1.0));
}

#[test]
fn sampled_mode_on_larger_inputs() {
    let n = 40;
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0 + (i % 3) as f64)).collect();
    let g = symmetric(n, &edges);
    let report = check_axioms(&EntanglingMetric::uniform_random(), &g, 500, 3);
    assert!(!report.exhaustive);
    assert!(report.passed);
}

#[test]
fn metric_lookup_by_name() {
    assert_eq!(EntanglingMetric::by_name("capacity").unwrap().composition, Composition::Min);
    assert!(EntanglingMetric::by_name("fidelity").is_err());
    assert!(EntanglingMetric::new("bad", Composition::Additive, LinkCostModel::UniformInt { low: 3, high: 1 }).is_err());
}
