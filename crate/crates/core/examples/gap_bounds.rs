//! Generalization gap bounds for logistic self-training on the unit square
//! with n = 10 000, T = 100 and one pseudo-label per step. Prints the terms
//! for the default concentration constant C_b = 1/(4 D_Z²) = 1/12 and for
//! C_b = 1/3.

use rec_bounds::bounds::{anytime_gap_bound, distortion_bound, gen_gap_bound, BoundInputs};
use rec_bounds::learner::LossSpec;
use rec_bounds::reciprocal::theoretical_ls;
use rec_bounds::space::SpaceSpec;

fn main() -> rec_bounds::Result<()> {
    let space = SpaceSpec::unit_cube(2, 100.0, 1.0)?;
    let constants = LossSpec::logistic(space.clone()).constants();
    let n = 10_000;
    let l_s = theoretical_ls(1, n).expect("one unit per step");
    let base = BoundInputs::from_space(&space, &constants, n, 0.05).with_horizon(100).with_ls(l_s);
    println!("L_ell = {:.6}, D_Z = {:.6}, L_s = {l_s}", base.l_ell, base.d_z);
    println!(
        "beta_100 = {:.6}",
        distortion_bound(l_s, 100, 1, n, 1.0, space.diameter_z())
    );

    for (label, c_b) in [("C_b = 1/12", base.c_b), ("C_b = 1/3", 1.0 / 3.0)] {
        let inputs = base.clone().with_constants(base.c_a, c_b);
        let r = anytime_gap_bound(&inputs, 0.0)?;
        println!(
            "{label}: beta_0 {:.6}  initial gap {:.4}  reciprocal gap {:.4}  total {:.4}",
            inputs.beta_0()?,
            r.initial_gap,
            r.reciprocal_gap,
            r.gap_terms()
        );
        let limit = gen_gap_bound(&inputs, 0.0)?;
        println!("    T -> infinity: reciprocal gap {:.4}, total {:.4}", limit.reciprocal_gap, limit.gap_terms());
    }
    Ok(())
}
