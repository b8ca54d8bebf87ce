//! Exact Wasserstein distance between two small point clouds, the optimal
//! coupling, and the permutation oracle for the uniform equal-size case.

use rec_bounds::space::{EmpiricalDistribution, Instance, SpaceSpec};
use rec_bounds::transport::{wasserstein, wasserstein_bruteforce, wasserstein_order};

fn main() -> rec_bounds::Result<()> {
    let space = SpaceSpec::unit_cube(2, 10.0, 1.0)?;
    let p = EmpiricalDistribution::uniform(vec![
        Instance::new(1.0, vec![0.9, 0.8]),
        Instance::new(0.0, vec![0.1, 0.2]),
        Instance::new(1.0, vec![0.7, 0.4]),
    ])?;
    let q = EmpiricalDistribution::uniform(vec![
        Instance::new(1.0, vec![0.8, 0.9]),
        Instance::new(0.0, vec![0.3, 0.1]),
        Instance::new(0.0, vec![0.6, 0.5]),
    ])?;

    let (w1, coupling) = wasserstein(&p, &q, &space)?;
    println!("W_1 = {w1:.6} (permutation oracle {:.6})", wasserstein_bruteforce(&p, &q, &space)?);
    println!("W_2 = {:.6}", wasserstein_order(&p, &q, &space, 2.0)?.0);

    let weighted = EmpiricalDistribution::weighted(
        vec![Instance::new(1.0, vec![0.5, 0.5]), Instance::new(0.0, vec![0.0, 0.0])],
        vec![0.75, 0.25],
    )?;
    println!("W_1 to a weighted cloud = {:.6}", wasserstein(&p, &weighted, &space)?.0);

    println!("optimal coupling:");
    coupling.write_csv(std::io::stdout())?;
    Ok(())
}
