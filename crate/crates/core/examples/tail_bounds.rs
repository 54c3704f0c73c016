// Tail frequencies of the sup deviation and of one direction's W1, and the
// per-trial mean-direction lower bound.

use marginals::ensembles::IndexSetSpec;
use marginals::experiments::{run_tail, run_width_lowerbound, ExperimentConfig};

fn main() -> marginals::Result<()> {
    let mut config = ExperimentConfig::new(8, IndexSetSpec::BasisPm { d: 8 }, vec![256, 1024], 200, 5);
    config.delta_grid = Some(vec![1e-4, 1e-3, 1e-2]);
    let tail = run_tail(&config)?;
    for row in &tail.rows {
        println!(
            "N {:>5}  delta {:.0e}  P(sup dev >= sqrt delta) {:.3}  P(W1_x >= sqrt delta) {:.3}",
            row.n, row.delta, row.upper_frequency, row.lower_frequency
        );
    }

    let lower = run_width_lowerbound(&config)?;
    for s in &lower.summary {
        println!("N {:>5}  P(w1_sup >= {:.4}) = {:.3}  violations {}", s.n, s.threshold, s.frequency_above, s.violations);
    }
    Ok(())
}
