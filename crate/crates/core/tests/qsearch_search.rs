use qroute::qsearch::*;
use qroute::addressing::QuantumAddress;

fn addr(v: u64, w: u8) -> QuantumAddress {
    QuantumAddress::new(v, w).unwrap()
}

#[test]
fn iteration_counts() {
    assert_eq!(iteration_count(4, 1), 1);
    assert_eq!(iteration_count(16, 1), 3);
    assert_eq!(iteration_count(5, 5), 1);
}

#[test]
fn analytic_examples() {
    for t in 0..4 {
        assert!((analytic_success_probability(8, 0.0, 2, t) - 0.25).abs() < 1e-12);
    }
    assert!((analytic_success_probability(4, 1.0, 1, 1) - 1.0).abs() < 1e-12);
    assert!((analytic_success_probability(4, 0.5, 1, 1) - 0.625).abs() < 1e-12);
    assert!((two_branch_estimate(4, 0.5, 1, 1) - 0.625).abs() < 1e-12);
}

#[test]
fn exact_search_on_four_labels() {
    // Entry 2 holds the target alone; alpha = 1.
    let inst = SearchInstance::new(vec![vec![vec![0]], vec![vec![1]], vec![vec![3]], vec![vec![1]]], 2);
    let out = run_search(&inst, &addr(3, 2), 1, 0, &SearchConfig::default()).unwrap();
    assert!((out.success_probability - 1.0).abs() < 1e-9);
    assert_eq!(out.measured, 2);
    assert_eq!(out.hit_labels, vec![2]);

    // alpha = 1/2: the target shares its partition with one other address.
    let inst = SearchInstance::new(vec![vec![vec![0]], vec![vec![1]], vec![vec![2, 3]], vec![vec![1]]], 2);
    let out = run_search(&inst, &addr(3, 2), 1, 0, &SearchConfig::default()).unwrap();
    assert!((out.success_probability - 0.625).abs() < 1e-9);
}

#[test]
fn absent_target_leaves_labels_uniform() {
    let inst = SearchInstance::new(vec![vec![vec![0, 1]], vec![vec![1]], vec![vec![2]]], 2);
    let out = run_search(&inst, &addr(3, 2), 2, 0, &SearchConfig::default()).unwrap();
    assert!(out.distribution.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-9));
    assert_eq!(out.success_probability, 0.0);
}

#[test]
fn reduced_layout_gives_the_same_distribution() {
    let inst = SearchInstance::new(
        vec![vec![vec![0, 2], vec![1]], vec![vec![3], vec![2]], vec![vec![1, 2, 3]], vec![vec![0]]],
        2,
    );
    for t in 1..3 {
        let full = SearchConfig { layout: LayoutPolicy::Full, ..Default::default() };
        let reduced = SearchConfig { layout: LayoutPolicy::Reduced, ..Default::default() };
        let a = run_search(&inst, &addr(2, 2), t, 0, &full).unwrap();
        let b = run_search(&inst, &addr(2, 2), t, 0, &reduced).unwrap();
        assert!(!a.reduced_layout && b.reduced_layout);
        assert!(b.qubits < a.qubits);
        for (x, y) in a.distribution.iter().zip(&b.distribution) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn multi_hit_mixture_matches_statevector() {
    let inst = SearchInstance::new(
        vec![vec![vec![1, 2]], vec![vec![2]], vec![vec![0, 2, 3]], vec![vec![0]], vec![vec![3]]],
        2,
    );
    let target = addr(2, 2);
    let alphas = inst.hit_alphas(2);
    assert_eq!(alphas.len(), 3);
    for t in 1..4 {
        let out = run_search(&inst, &target, t, 0, &SearchConfig::default()).unwrap();
        let model = mixture_success_probability(5, &alphas, t);
        assert!((out.success_probability - model).abs() < 1e-9, "t = {t}");
    }
}

#[test]
fn width_must_match() {
    let inst = SearchInstance::new(vec![vec![vec![0]], vec![vec![1]]], 2);
    assert!(matches!(
        run_search(&inst, &addr(1, 3), 1, 0, &SearchConfig::default()),
        Err(QsearchError::WidthMismatch { .. })
    ));
}
