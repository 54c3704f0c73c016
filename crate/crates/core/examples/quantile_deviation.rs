// The L1 distance between a sorted sample and the quantile grid `Q(i/(N+1))`,
// and how far it sits from the exact W1.

use marginals::distribution::ReferenceDistribution;
use marginals::empirical::{l1_quantile_deviation, quantile_vector, rearrange};
use marginals::experiments::quantile_shift_residual;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> marginals::Result<()> {
    let std = ReferenceDistribution::std_normal();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    println!("{:>6} {:>12} {:>12} {:>10}", "N", "deviation", "residual", "bound");
    for n in [8, 64, 512, 4096] {
        let s = rearrange((0..n).map(|_| StandardNormal.sample(&mut rng)).collect())?;
        let q = quantile_vector(n, &std, 1.0)?;
        let dev = l1_quantile_deviation(&s, &q)?;
        let r = quantile_shift_residual(&s, &std, 2.0)?;
        println!("{n:>6} {dev:>12.6} {:>12.6} {:>10.4}", r.residual, r.bound);
    }
    Ok(())
}
