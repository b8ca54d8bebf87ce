//! Self-training with soft pseudo-labels, greedy and non-greedy, with the
//! recorded step distances, the empirical contraction estimate and the
//! per-step movement cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rec_bounds::learner::LossSpec;
use rec_bounds::reciprocal::{
    detect_convergence, estimate_ls, run_reciprocal, step_cap, theoretical_ls, AdaptationConfig, ReplacePolicy,
    RunSettings,
};
use rec_bounds::space::{Instance, SpaceSpec};

fn main() -> rec_bounds::Result<()> {
    let space = SpaceSpec::unit_cube(2, 10.0, 1.0)?;
    let loss = LossSpec::ridge_logistic(space.clone(), 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut draw = || vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    let labeled: Vec<Instance> = (0..20)
        .map(|_| {
            let x = draw();
            Instance::new(f64::from(x[0] > x[1]), x)
        })
        .collect();
    let pool: Vec<Instance> = (0..30).map(|_| Instance::new(0.0, draw())).collect();

    let runs = [
        ("greedy, m = 1", AdaptationConfig::greedy(1, 0.1, 7)),
        ("non-greedy, m = 1", AdaptationConfig::nongreedy(1, 0.1, ReplacePolicy::OldestPseudo, 7)),
        ("non-greedy, m = 2, random replacement", AdaptationConfig::nongreedy(2, 0.1, ReplacePolicy::RandomSeeded, 7)),
    ];
    for (name, adapt) in runs {
        let path = run_reciprocal(labeled.clone(), pool.clone(), 15, &loss, &adapt, &RunSettings::default())?;
        println!("{name}: horizon {}, status {:?}", path.horizon(), path.status);
        println!("   t   n_t   step W_1     cap         train risk");
        for w in path.iterations.windows(2) {
            let rec = &w[1];
            let cap = step_cap(adapt.m, w[0].sample.len(), 1.0, space.diameter_z());
            println!(
                "  {:>2}  {:>4}  {:.6}  {:.6}  {:.6}",
                rec.t,
                rec.sample.len(),
                rec.step_wasserstein.unwrap_or(f64::NAN),
                cap,
                rec.train_risk
            );
        }
        match estimate_ls(&path) {
            Ok(l) => println!("  estimated L_s {l:.4}, theory {:?}", theoretical_ls(adapt.m, labeled.len())),
            Err(e) => println!("  no L_s estimate: {e}"),
        }
        println!("  converged at {:?}\n", detect_convergence(&path, 1e-9));
    }
    Ok(())
}
