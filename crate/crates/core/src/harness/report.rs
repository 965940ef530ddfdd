//! Plain-text rendering of experiment summaries.

use std::fmt::Write;

use super::ExperimentReport;

/// One line per seed followed by every failed assertion.
pub fn render_summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    let _ = writeln!(out, "scheme {} | n_e {} | k {} | f {}", c.scheme, c.n_e, c.neighborhood_size(), c.f);
    let _ = writeln!(
        out,
        "{:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>9} {:>9} {:>6}",
        "seed", "max", "mean", "case1", "case2", "case3", "fallback", "max_table", "ok"
    );
    for s in &report.seeds {
        let cases = &s.stretch.cases;
        let _ = writeln!(
            out,
            "{:>8} {:>8.3} {:>8.3} {:>7} {:>7} {:>7} {:>9} {:>9} {:>6}",
            s.seed,
            s.stretch.max_stretch,
            s.stretch.mean_stretch,
            cases.case_i,
            cases.case_ii,
            cases.case_iii,
            cases.fallback + cases.failure,
            s.stretch.max_table_size,
            if s.passed() { "yes" } else { "NO" }
        );
    }
    for f in &report.failures {
        let _ = writeln!(out, "seed {} did not run: {}", f.seed, f.error);
    }
    for (seed, a) in report.failed_assertions() {
        let _ = writeln!(out, "FAILED seed {seed}: {} ({})", a.claim, a.detail);
    }
    let _ = writeln!(out, "{}", if report.all_passed() { "all assertions passed" } else { "assertions failed" });
    out
}
