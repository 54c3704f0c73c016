// Sample covariance of Gaussian ensembles against the identity.

use marginals::ensembles::{covariance_diagnostics, sample_ensemble, CovarianceInput, GeneratorKind};

fn main() -> marginals::Result<()> {
    let d = 50;
    for n in [200, 2000, 20000] {
        let gamma = sample_ensemble(n, d, GeneratorKind::StdGaussian, 11)?;
        let diag = covariance_diagnostics(CovarianceInput::Ensemble(&gamma))?;
        let ratio = (d as f64 / n as f64).sqrt();
        println!("N {n:>6}  zeta {:.4}  2*sqrt(d/N)+d/N {:.4}", diag.zeta, 2.0 * ratio + ratio * ratio);
    }

    let matrix: Vec<f64> = (0..9).map(|i| if i % 4 == 0 { [4.0, 1.0, 1.0][i / 4] } else { 0.0 }).collect();
    let diag = covariance_diagnostics(CovarianceInput::Explicit { matrix: &matrix, d: 3 })?;
    println!("diag(4,1,1): effective rank {:.3}", diag.effective_rank);
    Ok(())
}
