// Fitting the constant B in ‖Γz‖/√N <= B‖z‖ + θ/√N over pairs of directions.

use marginals::ensembles::{gaussian_width, make_index_set, sample_ensemble, GeneratorKind, IndexSetSpec};
use marginals::experiments::check_assumption;

fn main() -> marginals::Result<()> {
    let a = make_index_set(&IndexSetSpec::SphereNet { d: 20, m: 100, seed: 1 })?;
    let width = gaussian_width(&a, 5000, 2)?.estimate;
    for theta in [0.0, width, 2.0 * width] {
        let bs: Vec<f64> = (0..10)
            .map(|seed| {
                let gamma = sample_ensemble(500, 20, GeneratorKind::StdGaussian, seed)?;
                Ok(check_assumption(&gamma, &a, theta, None, seed)?.fitted_b)
            })
            .collect::<marginals::Result<_>>()?;
        let max = bs.iter().copied().fold(0.0, f64::max);
        println!("theta {theta:.3}: fitted B over 10 seeds, max {max:.4}");
    }
    Ok(())
}
