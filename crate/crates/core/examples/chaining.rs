// Greedy admissible sequences and the bounds they give around the Gaussian width.

use marginals::chaining::{build_admissible, sudakov_lower};
use marginals::ensembles::{gaussian_width, make_index_set, IndexSetSpec};

fn main() -> marginals::Result<()> {
    for spec in [
        IndexSetSpec::BasisPm { d: 64 },
        IndexSetSpec::SphereNet { d: 16, m: 128, seed: 3 },
        IndexSetSpec::SparsePm { d: 12, k: 3, seed: None },
    ] {
        let a = make_index_set(&spec)?;
        let seq = build_admissible(a.vectors())?;
        let width = gaussian_width(&a, 5000, 1)?;
        println!(
            "{spec:<24} |A| {:>4}  levels {}  sudakov {:.3} <= width {:.3} <= gamma2 {:.3}",
            a.len(),
            seq.depth(),
            sudakov_lower(a.vectors())?,
            width.estimate,
            seq.chaining_sum()
        );
    }
    Ok(())
}
