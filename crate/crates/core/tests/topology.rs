use std::collections::BTreeSet;

use qroute::topology::*;
use qroute::metrics::{closure, Composition, EntanglingMetric};

fn triangle() -> NetworkGraph {
    NetworkGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)]).unwrap()
}

#[test]
fn self_cost_is_zero_with_empty_path() {
    let (c, p) = optimal_cost(&triangle(), &EntanglingMetric::hop_count(), 1, 1).unwrap();
    assert_eq!(c, 0.0);
    assert!(p.is_empty());
}

#[test]
fn triangle_costs_for_both_compositions() {
    let g = triangle();
    let mut additive = EntanglingMetric::uniform_random();
    additive.composition = Composition::Additive;
    assert_eq!(optimal_cost(&g, &additive, 0, 2).unwrap(), (2.0, vec![0, 1, 2]));
    let (c, p) = optimal_cost(&g, &EntanglingMetric::capacity(), 0, 2).unwrap();
    assert_eq!(c, 1.0);
    assert_eq!(Composition::Min.fold(p.windows(2).map(|w| g.cost(w[0], w[1]).unwrap())), 1.0);
    assert_eq!((p[0], *p.last().unwrap()), (0, 2));
}

#[test]
fn min_witness_walk_reaches_cheapest_link() {
    // 0 -(5)- 1 -(7)- 2 -(2)- 3: the path 0..2 must detour through 3.
    let g = NetworkGraph::from_edges(4, &[(0, 1, 5.0), (1, 2, 7.0), (2, 3, 2.0)]).unwrap();
    let (c, p) = optimal_cost(&g, &EntanglingMetric::capacity(), 0, 2).unwrap();
    assert_eq!(c, 2.0);
    assert_eq!(p, vec![0, 1, 2, 3, 2]);
}

#[test]
fn unreachable_pairs_are_errors() {
    let g = NetworkGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
    assert!(!g.is_connected());
    for m in [EntanglingMetric::hop_count(), EntanglingMetric::capacity()] {
        assert!(matches!(optimal_cost(&g, &m, 0, 3), Err(TopologyError::Unreachable { .. })));
    }
    assert!(CostMatrix::compute(&g, &EntanglingMetric::hop_count()).is_err());
}

#[test]
fn erdos_renyi_is_deterministic() {
    let m = EntanglingMetric::uniform_random();
    let model = GraphModel::ErdosRenyi { edge_prob: 0.3 };
    let a = generate_graph(model, 16, &m, 42).unwrap();
    let b = generate_graph(model, 16, &m, 42).unwrap();
    assert_eq!(a.to_graph_file(), b.to_graph_file());
    assert!(a.is_connected());
    let c = generate_graph(model, 16, &m, 43).unwrap();
    assert_ne!(a.to_graph_file(), c.to_graph_file());
}

#[test]
fn torus_degrees_are_four() {
    let g = generate_graph(GraphModel::GridTorus { rows: 4, cols: 4 }, 16, &EntanglingMetric::hop_count(), 0).unwrap();
    assert!((0..16).all(|v| g.degree(v) == 4));
    assert_eq!(g.edge_count(), 32);
}

#[test]
fn sparse_erdos_renyi_connects_with_few_retries() {
    let m = EntanglingMetric::hop_count();
    let model = GraphModel::sparse_erdos_renyi(64);
    let mut first_try = 0;
    for seed in 0..50 {
        let g = generate_graph(model, 64, &m, seed).unwrap();
        assert!(g.is_connected());
        first_try += usize::from(g.stats().attempts == 1);
    }
    assert!(first_try >= 25, "only {first_try}/50 connected on the first draw");
}

#[test]
fn augmentation_joins_hopeless_draws() {
    let m = EntanglingMetric::hop_count();
    let model = GraphModel::ErdosRenyi { edge_prob: 0.0 };
    let g = generate_graph(model, 10, &m, 1).unwrap();
    assert!(g.is_connected());
    assert_eq!(g.stats().augmented_edges, 9);
    assert!(matches!(
        generate_graph_with(model, 10, &m, 1, false),
        Err(TopologyError::GenerationFailed { attempts: 100 })
    ));
}

#[test]
fn other_generators_connect() {
    let m = EntanglingMetric::uniform_random();
    for model in [GraphModel::Waxman { alpha: 0.6, beta: 0.3 }, GraphModel::BarabasiAlbert { attach: 2 }] {
        let g = generate_graph(model, 30, &m, 5).unwrap();
        assert!(g.is_connected(), "{model:?}");
    }
    assert!(generate_graph(GraphModel::GridTorus { rows: 3, cols: 4 }, 16, &m, 0).is_err());
    assert!(generate_graph(GraphModel::ErdosRenyi { edge_prob: 0.5 }, 1, &m, 0).is_err());
}

#[test]
fn graph_file_round_trip() {
    let m = EntanglingMetric::uniform_random();
    let g = generate_graph(GraphModel::ErdosRenyi { edge_prob: 0.4 }, 12, &m, 9).unwrap();
    let text = g.to_graph_file();
    assert!(text.starts_with("n_e 12\n"));
    let back = NetworkGraph::from_graph_file(&text).unwrap();
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    assert!(NetworkGraph::from_graph_file("n_e 3\n0 1\n").is_err());
}

#[test]
fn fractional_costs_round_trip() {
    let g = NetworkGraph::from_edges(2, &[(0, 1, 0.1 + 0.2)]).unwrap();
    let back = NetworkGraph::from_graph_file(&g.to_graph_file()).unwrap();
    assert_eq!(back.cost(0, 1), Some(0.1 + 0.2));
}

#[test]
fn cost_matrix_agrees_with_closure() {
    for metric in [EntanglingMetric::uniform_random(), EntanglingMetric::capacity()] {
        let g = generate_graph(GraphModel::ErdosRenyi { edge_prob: 0.25 }, 20, &metric, 3).unwrap();
        let cm = CostMatrix::compute(&g, &metric).unwrap();
        let fw = closure(metric.composition, &g);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(Some(cm.get(i, j)), fw[i][j], "{} {i} {j}", metric.name);
            }
        }
    }
}

#[test]
fn path_graph_neighborhood() {
    let g = NetworkGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let nb = e_neighborhood(&g, &EntanglingMetric::hop_count(), 0, 2).unwrap();
    assert_eq!(nb.members, vec![(1, 1.0), (2, 2.0)]);
    assert!(!nb.contains(0));
    let full = e_neighborhood(&g, &EntanglingMetric::hop_count(), 0, 3).unwrap();
    assert_eq!(full.ids().collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(matches!(
        e_neighborhood(&g, &EntanglingMetric::hop_count(), 0, 4),
        Err(TopologyError::KTooLarge { k: 4, n_e: 4 })
    ));
}

#[test]
fn ties_go_to_the_lower_address() {
    let g = NetworkGraph::from_edges(3, &[(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
    let nb = e_neighborhood(&g, &EntanglingMetric::hop_count(), 0, 1).unwrap();
    assert_eq!(nb.members, vec![(1, 1.0)]);
    let nb = e_neighborhood(&g, &EntanglingMetric::hop_count(), 2, 1).unwrap();
    assert_eq!(nb.members, vec![(0, 1.0)]);
}

#[test]
fn torus_reverse_neighborhoods_mirror_neighborhoods() {
    let m = EntanglingMetric::hop_count();
    let g = generate_graph(GraphModel::GridTorus { rows: 4, cols: 4 }, 16, &m, 0).unwrap();
    let cm = CostMatrix::compute(&g, &m).unwrap();
    // k = 4 picks exactly the four direct neighbors, a symmetric relation.
    let all = all_neighborhoods(&cm, 4).unwrap();
    for v in 0..16 {
        let own: BTreeSet<_> = all[v].ids().collect();
        assert_eq!(reverse_neighborhood(&all, v), own);
    }
    assert_eq!(all_reverse_neighborhoods(&all)[5], reverse_neighborhood(&all, 5));
}

#[test]
fn star_hub_and_empty_reverse_neighborhood() {
    let g = NetworkGraph::from_edges(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)]).unwrap();
    let m = EntanglingMetric::hop_count();
    let cm = CostMatrix::compute(&g, &m).unwrap();
    let all = all_neighborhoods(&cm, 1).unwrap();
    assert_eq!(reverse_neighborhood(&all, 0), BTreeSet::from([1, 2, 3, 4]));
    // Leaf 4 is nobody's nearest node: the hub picks leaf 1 on the tie.
    assert!(reverse_neighborhood(&all, 4).is_empty());
}
