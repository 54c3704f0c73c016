// Sup-deviation over `±e_i` as N grows, with the log-log slope.

use marginals::ensembles::IndexSetSpec;
use marginals::experiments::{run_scaling, ExperimentConfig};

fn main() -> marginals::Result<()> {
    let config = ExperimentConfig::new(10, IndexSetSpec::BasisPm { d: 10 }, vec![100, 400, 1600, 6400], 50, 2024);
    let report = run_scaling(&config)?;
    println!("width {:.4} ± {:.4}", report.width.estimate, report.width.stderr);
    for row in &report.rows {
        println!("N {:>5}  mean {:.5}  sd {:.5}  sqrt(N)*mean {:.4}", row.n, row.mean, row.sd, row.mean * (row.n as f64).sqrt());
    }
    if let Some(fit) = report.fit {
        println!("slope {:.4} ± {:.4}", fit.slope, fit.slope_half_width);
    }
    Ok(())
}
