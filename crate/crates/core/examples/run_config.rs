//! Runs an experiment config and prints its summary.
//!
//! ```text
//! cargo run --example run_config -- crates/core/examples/configs/replace_from_csv.json
//! ```

use std::path::PathBuf;

use rec_bounds::harness::cmd_run;

fn main() -> rec_bounds::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/self_training.json"));
    let s = cmd_run(&path)?;
    println!("{} iterations, status {:?}, converged at {:?}", s.iterations, s.status, s.convergence_t);
    println!("L_s {:?} from {:?} (estimate {:?})", s.l_s, s.l_s_source, s.l_s_estimate);
    for b in &s.bounds {
        println!("  {:?}: total {:.4}", b.theorem_id, b.total);
    }
    if let Some(stop) = &s.stop {
        println!("stopping rule: {stop:?}");
    }
    if let Some(truth) = &s.truth {
        println!("W_p(P_0, truth) = {:.4} vs beta_0 = {:.4}", truth.w_p, truth.beta_0);
    }
    Ok(())
}
