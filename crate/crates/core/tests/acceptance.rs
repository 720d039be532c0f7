//! One line per acceptance criterion, then a single verdict.

mod common;

use std::time::Duration;

use common::*;

fn main() {
    let secs = Duration::from_secs;
    let checks = [
        ("1 analytic exactness", timed(secs(1), analytic_exactness)),
        (
            "2 second-approach branch",
            timed(secs(1), second_approach_branches),
        ),
        ("3 reward exactness", timed(secs(1), reward_exactness)),
        (
            "4 simulator invariants",
            timed(secs(30), || simulator_invariants(100)),
        ),
        ("5 gradient check", timed(secs(30), gradient_check)),
        (
            "6 desk-scale learning",
            timed(secs(30 * 60), desk_scale_learning),
        ),
        ("7 behaviour classes", timed(secs(10), behaviour_classes)),
        // No runtime stated; a generous ceiling keeps it honest.
        ("8 oracle relation", timed(secs(120), oracle_relation)),
    ];
    let mut failed = Vec::new();
    for (name, c) in &checks {
        let verdict = if c.ok() { "PASS" } else { "FAIL" };
        let slow = if c.within_budget() {
            ""
        } else {
            " over budget"
        };
        println!(
            "criterion {name}: {verdict} ({:.2} s of {} s{slow}) {}",
            c.elapsed.as_secs_f64(),
            c.budget.as_secs(),
            c.detail
        );
        if !c.ok() {
            failed.push(*name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
