//! Runs every registered scenario and prints one line per check.
//!
//! Run with `cargo run --release --example repro_registry`.

use asymlab::repro::{registry, run_scenario, ReproConfig};

fn main() -> asymlab::Result<()> {
    let cfg = ReproConfig::default();
    let mut failed = 0;
    for scenario in registry() {
        let report = run_scenario(scenario.id, &cfg)?;
        println!("{} {}: {}", if report.pass { "PASS" } else { "FAIL" }, scenario.id, scenario.description);
        for c in &report.checks {
            println!("    [{:?}] {}: expected {}, observed {}", c.provenance, c.name, c.expected, c.observed);
        }
        failed += usize::from(!report.pass);
    }
    println!("{} scenarios, {failed} failed", registry().len());
    Ok(())
}
