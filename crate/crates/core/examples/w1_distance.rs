// Exact W1 between a sample and reference laws, checked against quadrature.

use marginals::distribution::ReferenceDistribution;
use marginals::empirical::Sample;
use marginals::wasserstein::{w1_cdf_quadrature, w1_empirical_analytic, w1_empirical_empirical};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> marginals::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let sample = Sample::new((0..512).map(|_| StandardNormal.sample(&mut rng)).collect())?;

    for dist in [
        ReferenceDistribution::std_normal(),
        ReferenceDistribution::scaled_normal(2.0)?,
        ReferenceDistribution::uniform01(),
    ] {
        let exact = w1_empirical_analytic(&sample, &dist)?;
        let quad = w1_cdf_quadrature(&sample, &dist)?;
        println!("{dist:<12} exact {:.12}  quadrature {:.12}  (err est {:.1e})", exact.value, quad.value, quad.estimated_error);
    }

    let other = Sample::new(vec![-1.0, 0.0, 0.5, 2.0])?;
    println!("two samples: {:.12}", w1_empirical_empirical(&sample, &other).value);
    Ok(())
}
