use qroute::clustering::Scheme;
use qroute::harness::*;
use qroute::topology::GraphModel;

fn small(scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig {
        n_e: 16,
        scheme,
        k: Some(3),
        capacity_cap: Some(64),
        seeds: Seeds::Range { start: 0, count: 5 },
        ..ExperimentConfig::default()
    }
}

fn strip_runtime(mut r: ExperimentReport) -> ExperimentReport {
    for s in &mut r.seeds {
        s.runtime_ms = 0;
    }
    r
}

#[test]
fn partial_hop_count_stays_within_five() {
    let report = run_seeds(&small(Scheme::PartialAnchor)).unwrap();
    assert_eq!(report.seeds.len(), 5);
    assert!(report.all_passed(), "{}", render_summary(&report));
    for s in &report.seeds {
        assert!(s.stretch.max_stretch <= 5.0);
        assert!(s.stretch.max_stretch >= s.stretch.mean_stretch && s.stretch.mean_stretch >= 1.0);
        assert!(s.assertions.iter().any(|a| a.claim.contains("at most 5")));
    }
}

#[test]
fn full_scheme_with_min_metric_has_unit_stretch() {
    let config = ExperimentConfig { metric: MetricSpec::Named("capacity".into()), ..small(Scheme::FullAnchor) };
    let report = run_seeds(&config).unwrap();
    assert!(report.all_passed(), "{}", render_summary(&report));
    for s in &report.seeds {
        assert!(s.stretch.paths.iter().filter(|p| p.case.is_scheme_path()).all(|p| p.stretch == 1.0));
    }
}

#[test]
fn reruns_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| {
        let config = ExperimentConfig { output_dir: Some(dir.path().join(sub)), ..small(Scheme::PartialAnchor) };
        run_experiment(&config).unwrap();
        std::fs::read(dir.path().join(sub).join("pairs.csv")).unwrap()
    };
    let (a, b) = (read("a"), read("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "schema_version,seed,source,dest,case,cost,optimal,stretch");
    assert_eq!(text.lines().count(), 1 + 5 * 16 * 15);
    let seeds: Vec<u64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(seeds.windows(2).all(|w| w[0] <= w[1]));
    assert!(dir.path().join("a/seeds/pairs_seed_4.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let config = small(Scheme::FullAnchor);
    let parallel = strip_runtime(run_seeds(&config).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let sequential = strip_runtime(pool.install(|| run_seeds(&config)).unwrap());
    assert_eq!(parallel, sequential);
}

#[test]
fn seed_failures_are_isolated() {
    let config = ExperimentConfig { capacity_cap: Some(2), ..small(Scheme::PartialAnchor) };
    let report = run_seeds(&config).unwrap();
    assert_eq!(report.failures.len(), 5);
    assert!(report.failures[0].error.contains("cap"));
    assert!(!report.all_passed());
}

#[test]
fn invalid_configs_name_the_field() {
    let config = ExperimentConfig { seeds: Seeds::List(Vec::new()), ..small(Scheme::PartialAnchor) };
    match run_seeds(&config) {
        Err(HarnessError::Config { field, .. }) => assert_eq!(field, "seeds"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn output_dir_falls_back_to_environment() {
    let config = small(Scheme::PartialAnchor);
    std::env::set_var(OUT_DIR_ENV, "/tmp/qroute-env-out");
    assert_eq!(config.resolved_output_dir().unwrap(), std::path::PathBuf::from("/tmp/qroute-env-out"));
    std::env::remove_var(OUT_DIR_ENV);
    let explicit = ExperimentConfig { output_dir: Some("/x".into()), ..config };
    assert_eq!(explicit.resolved_output_dir().unwrap(), std::path::PathBuf::from("/x"));
}

#[test]
fn search_checks_agree_with_the_classical_mirror() {
    let config = ExperimentConfig {
        n_e: 8,
        k: Some(2),
        f: 2,
        search_checks: 40,
        qubit_cap: 20,
        seeds: Seeds::List(vec![1, 2]),
        ..small(Scheme::PartialAnchor)
    };
    let report = run_seeds(&config).unwrap();
    assert!(report.all_passed(), "{}", render_summary(&report));
    let stats = report.seeds[0].search.as_ref().unwrap();
    assert_eq!(stats.lookups, 40);
    assert_eq!(stats.disagreements, 0);
}

#[test]
fn full_never_stretches_more_than_partial() {
    let partial = ExperimentConfig {
        n_e: 36,
        k: Some(8),
        seeds: Seeds::Range { start: 0, count: 8 },
        ..small(Scheme::PartialAnchor)
    };
    let full = ExperimentConfig { scheme: Scheme::FullAnchor, ..partial.clone() };
    let cmp = compare_schemes(&full, &partial).unwrap();
    assert_eq!(cmp.seeds.len(), 8);
    for s in &cmp.seeds {
        assert!(s.max_stretch_a <= 3.0 && s.max_stretch_b <= 5.0);
        if s.fully_resolved_a && s.fully_resolved_b {
            assert!(s.max_stretch_a <= s.max_stretch_b, "seed {}", s.seed);
        }
        assert!(s.non_anchor_table_a > s.non_anchor_table_b, "seed {}", s.seed);
    }
}

#[test]
fn self_comparison_is_zero_difference() {
    let config = small(Scheme::PartialAnchor);
    let cmp = compare_schemes(&config, &config).unwrap();
    assert!(cmp.is_zero_difference());
}

#[test]
fn comparisons_need_matching_seeds_and_graphs() {
    let a = small(Scheme::PartialAnchor);
    let b = ExperimentConfig { seeds: Seeds::List(vec![0, 1]), ..small(Scheme::FullAnchor) };
    assert!(matches!(compare_schemes(&a, &b), Err(HarnessError::MismatchedSeeds { .. })));
    let c = ExperimentConfig { graph: Some(GraphModel::GridTorus { rows: 4, cols: 4 }), ..small(Scheme::FullAnchor) };
    assert!(matches!(compare_schemes(&a, &c), Err(HarnessError::MismatchedSetting("graph"))));
}

#[test]
fn summary_lists_failed_claims() {
    let config = ExperimentConfig { capacity_cap: Some(2), seeds: Seeds::List(vec![9]), ..small(Scheme::PartialAnchor) };
    let text = render_summary(&run_seeds(&config).unwrap());
    assert!(text.contains("seed 9 did not run"));
    assert!(text.ends_with("assertions failed\n"));
}
