//! Seeded sweeps, per-seed assertions, artifacts and paired comparisons.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_trial, ExperimentConfig, HarnessError};
use crate::clustering::Scheme;
use crate::metrics::Composition;
use crate::qsearch::{routing_lookup_via_search, LayoutPolicy, LookupResult, SearchConfig};
use crate::rng::{indexed_rng, splitmix64, Stream};
use crate::routing::{verify_inequality_chain, EntangledPath, LongRange, Overlay, PathCase, StretchReport};
use crate::topology::EspId;

/// Version stamped on every CSV row and JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    /// The claim being checked, in words.
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchCheckStats {
    pub lookups: usize,
    /// Lookups answered classically because the search did not fit.
    pub classical_fallbacks: usize,
    pub found: usize,
    /// Searched lookups with at least one hitting entry.
    pub with_hits: usize,
    /// Searched lookups with hits that still returned nothing.
    pub misses: usize,
    pub expected_misses: f64,
    pub miss_std: f64,
    /// Returned labels the classical mirror does not confirm.
    pub disagreements: usize,
}

impl SearchCheckStats {
    /// Observed misses within three standard deviations of the model.
    pub fn misses_consistent(&self) -> bool {
        (self.misses as f64 - self.expected_misses).abs() <= 3.0 * self.miss_std + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub n_e: usize,
    pub k: usize,
    pub address_width: u8,
    /// Anchors of the partial scheme; empty for the full scheme.
    pub anchors: Vec<EspId>,
    pub coverage_failure_fraction: f64,
    pub stretch: StretchReport,
    pub table_sizes: Vec<usize>,
    pub chains_checked: usize,
    pub chain_violations: Vec<String>,
    pub search: Option<SearchCheckStats>,
    pub assertions: Vec<AssertionOutcome>,
    pub runtime_ms: u64,
}

impl SeedReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedReport>,
    pub failures: Vec<SeedFailure>,
}

impl ExperimentReport {
    /// No seed failed to run and every enabled assertion held.
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.seeds.iter().all(SeedReport::passed)
    }

    pub fn failed_assertions(&self) -> impl Iterator<Item = (u64, &AssertionOutcome)> {
        self.seeds.iter().flat_map(|s| s.assertions.iter().filter(|a| !a.passed).map(move |a| (s.seed, a)))
    }

    pub fn max_stretch(&self) -> f64 {
        self.seeds.iter().map(|s| s.stretch.max_stretch).fold(1.0, f64::max)
    }
}

/// One CSV row per ordered pair and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsCsvRow {
    pub schema_version: u32,
    pub seed: u64,
    pub source: EspId,
    pub dest: EspId,
    pub case: String,
    pub cost: f64,
    pub optimal: f64,
    pub stretch: f64,
}

/// Runs every seed and, when an output directory resolves, writes
/// `pairs.csv`, per-seed CSVs and `summary.json` into it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let report = run_seeds(config)?;
    if let Some(dir) = config.resolved_output_dir() {
        write_artifacts(&report, &dir)?;
    }
    Ok(report)
}

/// Runs every seed in parallel without touching the disk.
pub fn run_seeds(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let results: Vec<(u64, Result<SeedReport, HarnessError>)> =
        config.seeds.to_vec().into_par_iter().map(|seed| (seed, run_seed(config, seed))).collect();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(r) => seeds.push(r),
            Err(e) => {
                log::warn!("seed {seed} failed: {e}");
                failures.push(SeedFailure { seed, error: e.to_string() });
            }
        }
    }
    Ok(ExperimentReport { schema_version: SCHEMA_VERSION, config: config.clone(), seeds, failures })
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedReport, HarnessError> {
    let start = Instant::now();
    let trial = build_trial(config, seed)?;
    let overlay = &trial.overlay;
    let stretch = overlay.evaluate_all_pairs();

    let candidates: Vec<&EntangledPath> =
        stretch.paths.iter().filter(|p| matches!(p.case, PathCase::CaseII | PathCase::CaseIII)).collect();
    let chosen: Vec<&EntangledPath> = if config.chain_samples == 0 || config.chain_samples >= candidates.len() {
        candidates
    } else {
        let mut rng = indexed_rng(seed, Stream::Sampling, 0);
        let mut picks = sample(&mut rng, candidates.len(), config.chain_samples).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| candidates[i]).collect()
    };
    let chain_violations: Vec<String> =
        chosen.iter().filter_map(|p| verify_inequality_chain(p, overlay).err()).map(|e| e.to_string()).collect();

    let search = (config.search_checks > 0).then(|| search_checks(config, overlay, seed));
    let anchors = match overlay.long_range() {
        LongRange::Anchors(a) => a.members.iter().copied().collect(),
        LongRange::Tracking(_) => Vec::new(),
    };
    let mut report = SeedReport {
        seed,
        n_e: overlay.n_e(),
        k: trial.k,
        address_width: overlay.graph().plan().width(),
        anchors,
        coverage_failure_fraction: trial.coverage.failure_fraction,
        table_sizes: overlay.tables().iter().map(|t| t.len()).collect(),
        chains_checked: chosen.len(),
        chain_violations,
        search,
        assertions: Vec::new(),
        runtime_ms: 0,
        stretch,
    };
    report.assertions = assertions(config, overlay.composition(), &report);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    log::info!("seed {seed}: max stretch {:.3}, {} assertions", report.stretch.max_stretch, report.assertions.len());
    Ok(report)
}

fn search_checks(config: &ExperimentConfig, overlay: &Overlay, seed: u64) -> SearchCheckStats {
    let n = overlay.n_e();
    let plan = overlay.graph().plan();
    let search = SearchConfig {
        qubit_cap: config.qubit_cap,
        layout: LayoutPolicy::Auto,
        repeats: config.search_repeats,
        iterations: None,
    };
    let mut pick = indexed_rng(seed, Stream::Sampling, 1);
    let mut stats = SearchCheckStats::default();
    let mut variance = 0.0;
    for idx in 0..config.search_checks {
        let owner = pick.gen_range(0..n);
        let target = pick.gen_range(0..n);
        let outcome = routing_lookup_via_search(
            overlay,
            owner,
            &plan.esp_address(target),
            &search,
            splitmix64(seed ^ (idx as u64).rotate_left(32)),
        )
        .expect("table addresses share the plan width");
        stats.lookups += 1;
        stats.classical_fallbacks += usize::from(outcome.classical_fallback);
        match outcome.result {
            LookupResult::Found(label) => {
                stats.found += 1;
                stats.disagreements += usize::from(!outcome.classical_hits.contains(&label));
            }
            LookupResult::NotFound if !outcome.classical_hits.is_empty() => {
                stats.misses += 1;
                log::debug!("lookup {owner}->{target} missed after {} attempts", outcome.attempts);
            }
            LookupResult::NotFound => {}
        }
        if let (Some(p), false) = (outcome.success_probability, outcome.classical_hits.is_empty()) {
            stats.with_hits += 1;
            let q = (1.0 - p).max(0.0).powi(config.search_repeats as i32);
            stats.expected_misses += q;
            variance += q * (1.0 - q);
        }
    }
    stats.miss_std = variance.sqrt();
    stats
}

fn assertions(config: &ExperimentConfig, composition: Composition, r: &SeedReport) -> Vec<AssertionOutcome> {
    let enabled = config.assertions;
    let mut out = Vec::new();
    let mut check = |claim: String, passed: bool, detail: String| out.push(AssertionOutcome { claim, passed, detail });
    let scheme_paths = || r.stretch.paths.iter().filter(|p| p.case.is_scheme_path());
    // Costs are integers for every registered metric, so these comparisons are exact.
    let exceeding = |factor: usize, case: Option<PathCase>| {
        scheme_paths()
            .filter(|p| case.is_none_or(|c| p.case == c))
            .filter(|p| p.total_cost > composition.repeat(p.optimal_cost, factor))
            .count()
    };

    match composition {
        Composition::Additive => {
            if enabled.stretch_bound {
                let factor = match config.scheme {
                    Scheme::PartialAnchor => 5,
                    Scheme::FullAnchor => 3,
                };
                let bad = exceeding(factor, None);
                check(
                    format!("{} stretch is at most {factor} on every resolved pair", config.scheme),
                    bad == 0,
                    format!("max stretch {:.4}, {bad} pairs over the bound", r.stretch.max_stretch),
                );
            }
            if enabled.neighbor_relay_bound {
                let bad = exceeding(3, Some(PathCase::CaseII));
                check(
                    "one-relay paths through a neighbor stretch at most 3".into(),
                    bad == 0,
                    format!("max one-relay stretch {:.4}, {bad} over", r.stretch.max_case_ii_stretch),
                );
            }
        }
        Composition::Min => {
            if enabled.concave_optimality {
                let bad = scheme_paths().filter(|p| p.total_cost != p.optimal_cost).count();
                check(
                    "min-composed metrics resolve every pair at the optimum".into(),
                    bad == 0,
                    format!("{bad} resolved pairs with stretch other than 1"),
                );
            }
        }
    }
    if enabled.inequality_chain {
        check(
            "every stretch-bound inequality chain holds on sampled relay paths".into(),
            r.chain_violations.is_empty(),
            match r.chain_violations.first() {
                Some(first) => format!("{} of {} fail; first: {first}", r.chain_violations.len(), r.chains_checked),
                None => format!("{} chains checked", r.chains_checked),
            },
        );
    }
    if enabled.cost_oracle {
        check(
            "no path beats the optimal-cost oracle and segment costs match it".into(),
            r.stretch.below_optimal == 0 && r.stretch.segment_mismatches == 0,
            format!("{} below optimum, {} segment mismatches", r.stretch.below_optimal, r.stretch.segment_mismatches),
        );
    }
    if let (true, Some(s)) = (enabled.search_agreement, &r.search) {
        check(
            "quantum lookups return only verified hits at the modeled miss rate".into(),
            s.disagreements == 0 && s.misses_consistent(),
            format!(
                "{} lookups, {} disagreements, {} misses vs {:.2} expected (sd {:.2})",
                s.lookups, s.disagreements, s.misses, s.expected_misses, s.miss_std
            ),
        );
    }
    out
}

fn pair_rows(seed: u64, stretch: &StretchReport) -> impl Iterator<Item = PairsCsvRow> + '_ {
    stretch.rows().into_iter().map(move |row| PairsCsvRow {
        schema_version: SCHEMA_VERSION,
        seed,
        source: row.source,
        dest: row.dest,
        case: row.case,
        cost: row.cost,
        optimal: row.optimal,
        stretch: row.stretch,
    })
}

fn write_artifacts(report: &ExperimentReport, dir: &Path) -> Result<(), HarnessError> {
    let seeds_dir = dir.join("seeds");
    fs::create_dir_all(&seeds_dir).map_err(|e| HarnessError::io(&seeds_dir, e))?;
    report
        .seeds
        .par_iter()
        .map(|s| {
            let mut w = csv::Writer::from_path(seeds_dir.join(format!("pairs_seed_{}.csv", s.seed)))?;
            for row in pair_rows(s.seed, &s.stretch) {
                w.serialize(row)?;
            }
            w.flush().map_err(csv::Error::from)
        })
        .collect::<Result<(), csv::Error>>()?;

    let merged = dir.join("pairs.csv");
    let mut w = csv::Writer::from_path(&merged)?;
    for s in &report.seeds {
        let mut r = csv::Reader::from_path(seeds_dir.join(format!("pairs_seed_{}.csv", s.seed)))?;
        for row in r.deserialize::<PairsCsvRow>() {
            w.serialize(row?)?;
        }
    }
    w.flush().map_err(|e| HarnessError::io(&merged, e))?;

    let summary = dir.join("summary.json");
    fs::write(&summary, serde_json::to_string_pretty(report)?).map_err(|e| HarnessError::io(&summary, e))?;
    log::info!("wrote {} and {}", merged.display(), summary.display());
    Ok(())
}

/// Same seed, both schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeed {
    pub seed: u64,
    pub max_stretch_a: f64,
    pub max_stretch_b: f64,
    pub mean_stretch_a: f64,
    pub mean_stretch_b: f64,
    pub max_table_a: usize,
    pub max_table_b: usize,
    /// Mean table size over ESPs that are anchors in neither run.
    pub non_anchor_table_a: f64,
    pub non_anchor_table_b: f64,
    pub fully_resolved_a: bool,
    pub fully_resolved_b: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub scheme_a: Scheme,
    pub scheme_b: Scheme,
    pub seeds: Vec<PairedSeed>,
    /// Largest per-seed difference in max stretch, `|a - b|`.
    pub max_stretch_difference: f64,
    pub failures: Vec<SeedFailure>,
}

impl Comparison {
    pub fn is_zero_difference(&self) -> bool {
        self.max_stretch_difference == 0.0
            && self.seeds.iter().all(|s| s.max_table_a == s.max_table_b && s.mean_stretch_a == s.mean_stretch_b)
    }
}

/// Runs two configurations on identical graphs and pairs the results by seed.
pub fn compare_schemes(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<Comparison, HarnessError> {
    let (seeds_a, seeds_b) = (a.seeds.to_vec(), b.seeds.to_vec());
    if seeds_a != seeds_b {
        return Err(HarnessError::MismatchedSeeds { a: seeds_a, b: seeds_b });
    }
    if a.n_e != b.n_e {
        return Err(HarnessError::MismatchedSetting("n_e"));
    }
    if a.graph_model() != b.graph_model() {
        return Err(HarnessError::MismatchedSetting("graph"));
    }
    if a.metric.resolve()? != b.metric.resolve()? {
        return Err(HarnessError::MismatchedSetting("metric"));
    }
    let (ra, rb) = rayon::join(|| run_seeds(a), || run_seeds(b));
    let (ra, rb) = (ra?, rb?);
    let mut failures: Vec<SeedFailure> = ra.failures.iter().chain(&rb.failures).cloned().collect();
    failures.sort_by_key(|f| f.seed);

    let seeds: Vec<PairedSeed> = ra
        .seeds
        .iter()
        .filter_map(|sa| rb.seeds.iter().find(|sb| sb.seed == sa.seed).map(|sb| (sa, sb)))
        .map(|(sa, sb)| {
            let non_anchor = |s: &SeedReport| {
                let sizes: Vec<usize> = (0..s.n_e)
                    .filter(|v| !sa.anchors.contains(v) && !sb.anchors.contains(v))
                    .map(|v| s.table_sizes[v])
                    .collect();
                sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64
            };
            let resolved = |s: &SeedReport| s.stretch.cases.resolved() == s.stretch.pairs;
            PairedSeed {
                seed: sa.seed,
                max_stretch_a: sa.stretch.max_stretch,
                max_stretch_b: sb.stretch.max_stretch,
                mean_stretch_a: sa.stretch.mean_stretch,
                mean_stretch_b: sb.stretch.mean_stretch,
                max_table_a: sa.stretch.max_table_size,
                max_table_b: sb.stretch.max_table_size,
                non_anchor_table_a: non_anchor(sa),
                non_anchor_table_b: non_anchor(sb),
                fully_resolved_a: resolved(sa),
                fully_resolved_b: resolved(sb),
            }
        })
        .collect();
    let max_stretch_difference =
        seeds.iter().map(|s| (s.max_stretch_a - s.max_stretch_b).abs()).fold(0.0, f64::max);
    Ok(Comparison { schema_version: SCHEMA_VERSION, scheme_a: a.scheme, scheme_b: b.scheme, seeds, max_stretch_difference, failures })
}
