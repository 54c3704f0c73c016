// Random 1-Lipschitz test functions never beat the W1 supremum.

use marginals::distribution::ReferenceDistribution;
use marginals::ensembles::{make_index_set, sample_ensemble, GeneratorKind, IndexSetSpec};
use marginals::experiments::lipschitz_sup_check;

fn main() -> marginals::Result<()> {
    let a = make_index_set(&IndexSetSpec::BasisPm { d: 20 })?;
    let std = ReferenceDistribution::std_normal();
    for seed in 0..5 {
        let gamma = sample_ensemble(1000, 20, GeneratorKind::StdGaussian, seed)?;
        let r = lipschitz_sup_check(&gamma, &a, &std, 64, seed)?;
        println!(
            "seed {seed}: max gap {:.5} <= w1 sup {:.5}  tightness {:.3}  contraction ratio {:.3}",
            r.max_gap,
            r.w1_sup,
            r.tightness.unwrap_or(f64::NAN),
            r.contraction_ratio.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
