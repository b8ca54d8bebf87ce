//! Anytime gap curves over T and over n, written as CSV to stdout.

use rec_bounds::bounds::BoundInputs;
use rec_bounds::harness::{cmd_curve, write_curve_csv, CurveSpec, Sweep};

fn main() -> rec_bounds::Result<()> {
    let base = BoundInputs::new(3, 1.0, 3f64.sqrt(), 10_000, 0.05)
        .with_l_ell(2f64.sqrt())
        .with_ls(0.9999)
        .with_horizon(100);

    let over_t = CurveSpec::range(Sweep::T, 0, 1000, 100, vec![0.05, 0.1], base.clone())?;
    write_curve_csv(&cmd_curve(&over_t)?, std::io::stdout())?;

    println!();
    let over_n = CurveSpec::range(Sweep::N, 2000, 20_000, 2000, vec![0.05], base)?;
    write_curve_csv(&cmd_curve(&over_n)?, std::io::stdout())?;
    Ok(())
}
