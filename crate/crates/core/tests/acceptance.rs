//! The acceptance suite: every criterion at its stated tolerance, one
//! PASS/FAIL line each. Criterion A11 compares a second run of A0..A10
//! against the metrics captured here.

use std::process::ExitCode;

use rl_kernel::harness::{determinism_against, reproduce, CRITERIA};

const SEED: u64 = 0;

fn main() -> ExitCode {
    let mut first = Vec::new();
    let mut failed = Vec::new();
    for id in CRITERIA {
        let report = if id == "A11" {
            determinism_against(SEED, &first)
        } else {
            reproduce(id, SEED)
        };
        match report {
            Ok(r) => {
                println!("{r}");
                first.push((r.id.clone(), r.metrics.render()));
                if !r.passed {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("{id} FAIL | error: {e}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: {}/{} criteria passed", CRITERIA.len(), CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
