//! Search runs, the closed-form success model and table lookups.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{LayoutPolicy, SearchState, StateLayout};
use super::{QsearchError, SearchEntry, SearchInstance, DEFAULT_QUBIT_CAP};
use crate::addressing::QuantumAddress;
use crate::rng::{indexed_rng, stream_rng, Stream};
use crate::routing::Overlay;
use crate::topology::EspId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub qubit_cap: u32,
    pub layout: LayoutPolicy,
    /// Measurement attempts per lookup before reporting not-found.
    pub repeats: usize,
    /// Grover iterations; `None` uses [`iteration_count`].
    pub iterations: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { qubit_cap: DEFAULT_QUBIT_CAP, layout: LayoutPolicy::Auto, repeats: 1, iterations: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub distribution: Vec<f64>,
    pub measured: usize,
    pub hit_labels: Vec<usize>,
    pub success_probability: f64,
    pub iterations: usize,
    pub qubits: u32,
    pub reduced_layout: bool,
}

/// `max(1, floor(pi/4 * sqrt(n_T / n_hits)))`.
pub fn iteration_count(n_t: usize, n_hits: usize) -> usize {
    let ratio = n_t as f64 / n_hits.max(1) as f64;
    ((std::f64::consts::FRAC_PI_4 * ratio.sqrt()).floor() as usize).max(1)
}

/// Probability of measuring one of `h` hit labels when `m` of them are
/// phase-marked, after `iterations` rounds over `n_t` labels.
fn marked_success(n_t: usize, h: usize, m: usize, iterations: usize) -> f64 {
    if m == 0 {
        return h as f64 / n_t as f64;
    }
    let theta = (m as f64 / n_t as f64).sqrt().asin();
    let amplified = ((2 * iterations + 1) as f64 * theta).sin().powi(2);
    let rest = if n_t > m { (1.0 - amplified) * (h - m) as f64 / (n_t - m) as f64 } else { 0.0 };
    amplified + rest
}

/// Exact success probability for hits with individual weights `alphas`.
///
/// Each hitting register collapses onto the target with probability
/// `alpha`, independently, so the marked count follows a Poisson-binomial
/// law and every branch evolves as plain Grover search.
pub fn mixture_success_probability(n_t: usize, alphas: &[f64], iterations: usize) -> f64 {
    let h = alphas.len();
    let mut weights = vec![0.0; h + 1];
    weights[0] = 1.0;
    for (seen, &a) in alphas.iter().enumerate() {
        for m in (0..=seen + 1).rev() {
            let stay = weights[m] * (1.0 - a);
            let gain = if m > 0 { weights[m - 1] * a } else { 0.0 };
            weights[m] = stay + gain;
        }
    }
    weights.iter().enumerate().map(|(m, w)| w * marked_success(n_t, h, m, iterations)).sum()
}

/// Success probability with `n_hits` hits of equal weight `alpha`.
///
/// For one hit this is `(1 - alpha) / n_T + alpha sin^2((2t+1) asin(1/sqrt n_T))`;
/// for several hits it sums over how many registers land on the target.
pub fn analytic_success_probability(n_t: usize, alpha: f64, n_hits: usize, iterations: usize) -> f64 {
    mixture_success_probability(n_t, &vec![alpha; n_hits], iterations)
}

/// Two-branch estimate that treats all hits as marked together or not at all.
/// Matches the exact value for a single hit only.
pub fn two_branch_estimate(n_t: usize, alpha: f64, n_hits: usize, iterations: usize) -> f64 {
    let base = n_hits as f64 / n_t as f64;
    let theta = base.sqrt().asin();
    (1.0 - alpha) * base + alpha * ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

fn check_width(instance: &SearchInstance, target: &QuantumAddress) -> Result<(), QsearchError> {
    if target.width() != instance.address_width {
        return Err(QsearchError::WidthMismatch { expected: instance.address_width, found: target.width() });
    }
    Ok(())
}

/// Prepares the search state and applies `iterations` oracle/diffusion rounds.
pub fn evolve(
    instance: &SearchInstance,
    target: &QuantumAddress,
    iterations: usize,
    config: &SearchConfig,
) -> Result<SearchState, QsearchError> {
    check_width(instance, target)?;
    let layout = StateLayout::plan(instance, target.value(), config.layout, config.qubit_cap)?;
    let mut state = SearchState::init(layout);
    for _ in 0..iterations {
        state.apply_oracle(target.value());
        state.apply_diffusion();
    }
    Ok(state)
}

fn sample(distribution: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (label, p) in distribution.iter().enumerate() {
        acc += p;
        if u < acc {
            return label;
        }
    }
    distribution.len() - 1
}

pub fn run_search(
    instance: &SearchInstance,
    target: &QuantumAddress,
    iterations: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<SearchOutcome, QsearchError> {
    let state = evolve(instance, target, iterations, config)?;
    let distribution = state.label_distribution();
    let measured = sample(&distribution, &mut stream_rng(seed, Stream::Measurement));
    let hit_labels = instance.hit_labels(target.value());
    let success_probability = hit_labels.iter().map(|&l| distribution[l]).sum();
    Ok(SearchOutcome {
        distribution,
        measured,
        hit_labels,
        success_probability,
        iterations,
        qubits: state.layout.qubits(),
        reduced_layout: state.layout.reduced,
    })
}

impl SearchInstance {
    /// The table of `owner`, one label per entry in table order.
    pub fn from_table(overlay: &Overlay, owner: EspId) -> Self {
        let plan = overlay.graph().plan();
        let entries = overlay
            .table(owner)
            .entries
            .iter()
            .enumerate()
            .map(|(label, e)| SearchEntry {
                label,
                e_hop: Some(e.e_hop_address),
                partitions: e
                    .neighborhood_partitions
                    .iter()
                    .map(|p| p.iter().map(|&v| plan.esp_address(v).value()).collect())
                    .collect(),
            })
            .collect();
        Self { entries, address_width: plan.width() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LookupResult {
    Found(usize),
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupOutcome {
    pub result: LookupResult,
    /// Peer of the returned entry.
    pub e_hop: Option<EspId>,
    pub attempts: usize,
    pub misses: usize,
    /// Search skipped because the table does not fit the qubit cap.
    pub classical_fallback: bool,
    /// Per-attempt probability of measuring a hit, when searched.
    pub success_probability: Option<f64>,
    /// Entries whose neighborhood holds the target, from the classical mirror.
    pub classical_hits: Vec<usize>,
}

/// Finds an entry of `owner`'s table whose neighborhood holds `target`.
///
/// Each attempt measures a freshly prepared search; a measured label is
/// accepted only if the classical mirror confirms it.
pub fn routing_lookup_via_search(
    overlay: &Overlay,
    owner: EspId,
    target: &QuantumAddress,
    config: &SearchConfig,
    seed: u64,
) -> Result<LookupOutcome, QsearchError> {
    let instance = SearchInstance::from_table(overlay, owner);
    check_width(&instance, target)?;
    let hits = instance.hit_labels(target.value());
    let peer = |label: usize| overlay.table(owner).entries[label].e_hop;
    let iterations = config.iterations.unwrap_or_else(|| iteration_count(instance.n_t(), hits.len()));
    let state = match evolve(&instance, target, iterations, config) {
        Ok(state) => state,
        Err(QsearchError::DimensionCapExceeded { .. } | QsearchError::TooFewEntries(_)) => {
            let result = hits.first().map_or(LookupResult::NotFound, |&l| LookupResult::Found(l));
            return Ok(LookupOutcome {
                result,
                e_hop: hits.first().map(|&l| peer(l)),
                attempts: 0,
                misses: 0,
                classical_fallback: true,
                success_probability: None,
                classical_hits: hits,
            });
        }
        Err(e) => return Err(e),
    };
    let distribution = state.label_distribution();
    let success: f64 = hits.iter().map(|&l| distribution[l]).sum();
    let mut misses = 0;
    for attempt in 0..config.repeats.max(1) {
        let label = sample(&distribution, &mut indexed_rng(seed, Stream::Measurement, attempt as u64));
        if hits.contains(&label) {
            return Ok(LookupOutcome {
                result: LookupResult::Found(label),
                e_hop: Some(peer(label)),
                attempts: attempt + 1,
                misses,
                classical_fallback: false,
                success_probability: Some(success),
                classical_hits: hits,
            });
        }
        misses += 1;
        log::trace!("lookup at {owner}: measured non-hit label {label}");
    }
    Ok(LookupOutcome {
        result: LookupResult::NotFound,
        e_hop: None,
        attempts: config.repeats.max(1),
        misses,
        classical_fallback: false,
        success_probability: Some(success),
        classical_hits: hits,
    })
}
