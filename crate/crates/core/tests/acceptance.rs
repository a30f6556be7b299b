//! Runs acceptance criteria 1–11 at seed 42 and prints one line per
//! criterion. Built without the libtest harness so the lines are never
//! captured.

use std::process::ExitCode;

use pqlearn_core::harness::{verify, ALL_CRITERIA};
use pqlearn_core::par::Parallelism;

fn main() -> ExitCode {
    let report = verify(42, &ALL_CRITERIA, Parallelism::Parallel);
    for c in &report.criteria {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {:>2}: {} ({} checks, {} failed, {:.0} ms) {}",
            c.id, c.name, c.checks, c.failures, c.elapsed_ms, c.detail
        );
        for e in &c.examples {
            println!("       {e}");
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
