//! Acceptance criteria 1–10, one line of output per criterion.
//!
//! Tolerances and limits are fixed inside the suites; the runtime ceilings
//! are fixed here. Runs without the libtest harness so the lines always
//! reach the console.

use std::process::ExitCode;
use std::time::Duration;

use embedlens::verify::{run_suite, DEFAULT_SEED};

const CRITERIA: [(u8, &str, &str, Option<u64>); 10] = [
    (1, "embedding detector agrees with the brute-force oracle", "embedding-oracle", Some(120)),
    (2, "Smith normal form certificates", "snf", Some(60)),
    (3, "character functions correlate exactly", "necessity", None),
    (4, "stability equals the degree-weighted sum", "stability", None),
    (5, "three-wise identity under xi", "xi-identity", None),
    (6, "connected distribution decays as (1/7)^n", "connected-decay", None),
    (7, "dictators pass the dictatorship test", "dicttest", None),
    (8, "reduction constructions", "reduction", None),
    (9, "product-correlation ascent", "ascent", None),
    (10, "Cauchy-Schwarz chains", "cauchy-schwarz", None),
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (id, title, suite, ceiling) in CRITERIA {
        let report = run_suite(suite, DEFAULT_SEED).expect("suite runs");
        let in_time = ceiling.is_none_or(|s| report.elapsed < Duration::from_secs(s));
        let ok = report.passed() && in_time;
        println!(
            "criterion {id:>2} [{}] {title}: {} checks, {} failures, {:.2}s{}",
            if ok { "PASS" } else { "FAIL" },
            report.checks,
            report.failures.len(),
            report.elapsed.as_secs_f64(),
            ceiling.map(|s| format!(" (limit {s}s)")).unwrap_or_default(),
        );
        for note in &report.notes {
            println!("    note: {note}");
        }
        for f in report.failures.iter().take(5) {
            println!("    failure: {f}");
        }
        if !ok {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {} criteria pass", CRITERIA.len() - failed.len(), CRITERIA.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("criteria failed: {failed:?}");
        ExitCode::FAILURE
    }
}
