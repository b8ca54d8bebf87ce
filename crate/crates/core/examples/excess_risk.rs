//! Excess-risk bounds for ridge-regularized logistic regression: loss
//! constants, the covering entropy of the linear class, and the convergent,
//! anytime and data-dependent forms.

use rec_bounds::bounds::{
    anytime_excess_risk_bound, data_dependent_excess_bound, excess_risk_bound, BoundInputs, BoundReport,
};
use rec_bounds::learner::LossSpec;
use rec_bounds::space::SpaceSpec;

fn show(r: &BoundReport) {
    println!(
        "{:?}: initial {:.4}  reciprocal {:.4}  complexity {:.4}  data {:?}  total {:.4}  (confidence {})",
        r.theorem_id, r.initial_gap, r.reciprocal_gap, r.complexity_term, r.data_term, r.total, r.confidence
    );
}

fn main() -> rec_bounds::Result<()> {
    let space = SpaceSpec::unit_cube(2, 2.0, 1.0)?;
    let constants = LossSpec::ridge_logistic(space.clone(), 1.0)?.constants();
    println!("{constants:?}");

    let mut inputs = BoundInputs::from_space(&space, &constants, 50_000, 0.05).with_ls(0.5).with_horizon(50);
    // Lipschitz constant of the sample-to-minimizer map, supplied by the user.
    inputs.l_a = Some(0.5);
    println!("covering entropy {:.6}", inputs.covering_entropy.unwrap_or(f64::NAN));

    show(&excess_risk_bound(&inputs)?);
    show(&anytime_excess_risk_bound(&inputs)?);
    show(&data_dependent_excess_bound(&inputs, 0.52, 0.50)?);

    inputs.gamma = None;
    println!("without gamma: {}", excess_risk_bound(&inputs).unwrap_err());
    Ok(())
}
