//! Acceptance suite, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the log; exits nonzero on any
//! FAIL. Lives in its own package so every other test binary in the
//! workspace runs before it.

mod library;
mod pipeline;

use std::process::ExitCode;
use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut checks = library::checks();
    checks.extend(pipeline::checks());
    checks.sort_by_key(|c| c.0);
    let mut failures = 0;
    for (id, name, outcome) in &checks {
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id:>2} {name}: {}", outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} criteria, {failures} failed, {:.1}s",
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
