//! Acceptance gate: run every criterion of the verification plan at its
//! stated tolerance and print one pass/fail line per criterion.

use qfl::config::RunConfig;
use qfl::report::{run_all, Lab};

#[test]
fn acceptance() {
    let lab = Lab::new(RunConfig::default()).expect("laboratory setup");
    let results = run_all(&lab);
    let mut failed = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.passed {
            failed.push(format!("{}: {}", r.line(), r.details));
        }
    }
    assert_eq!(results.len(), 11);
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
