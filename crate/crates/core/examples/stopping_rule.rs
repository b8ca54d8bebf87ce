//! Largest horizon whose anytime gap terms stay within a budget.

use rec_bounds::bounds::{stopping_rule, BoundInputs, StopDecision};
use rec_bounds::Error;

fn main() -> rec_bounds::Result<()> {
    let base = BoundInputs::new(3, 1.0, 3f64.sqrt(), 10_000, 0.05)
        .with_l_ell(2f64.sqrt())
        .with_ls(0.9999);
    for (c_b, eps) in [(1.0 / 3.0, 0.2), (1.0 / 3.0, 0.25), (1.0 / 12.0, 0.2), (1.0 / 12.0, 0.3)] {
        let inputs = base.clone().with_constants(8.0, c_b);
        match stopping_rule(eps, &inputs) {
            Ok(StopDecision::Finite { t_star, t_max }) => {
                println!("C_b {c_b:.4}, eps {eps}: stop by T = {t_max} (T* = {t_star:.4})")
            }
            Ok(StopDecision::Unbounded) => println!("C_b {c_b:.4}, eps {eps}: any horizon fits"),
            Err(Error::BudgetExhausted { initial_gap, .. }) => {
                println!("C_b {c_b:.4}, eps {eps}: budget below the initial gap {initial_gap:.4}")
            }
            Err(e) => return Err(e),
        }
    }

    let fast = base.with_constants(8.0, 1.0 / 3.0).with_ls(0.5);
    println!("L_s = 0.5, eps 0.2: {:?}", stopping_rule(0.2, &fast)?);
    Ok(())
}
