//! Monte Carlo validation suites at reduced trial counts.

use rec_bounds::harness::{cmd_validate, Suite, ValidateOptions};

fn main() -> rec_bounds::Result<()> {
    for (suite, trials) in [
        (Suite::OracleOt, 50),
        (Suite::Distortion, 10),
        (Suite::Concentration, 200),
        (Suite::PaperReplication, 4),
    ] {
        let r = cmd_validate(suite, &ValidateOptions { trials: Some(trials), seed: 1, ..Default::default() })?;
        println!(
            "{:?}: {} checks, {} violations, worst slack {:.3e}, passed {}",
            r.suite, r.trials, r.violations, r.worst_slack, r.passed
        );
        if !r.passed {
            println!("  worst case: {}", r.worst_case.unwrap_or_default());
        }
    }
    Ok(())
}
