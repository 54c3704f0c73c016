//! # marginals
//!
//! Exact one-dimensional Wasserstein-1 distances, sorted-marginal deviation
//! statistics, and reproducible Monte Carlo experiments on random ensembles.
//!
//! For a random matrix `Γ` with i.i.d. rows and a finite set of directions
//! `A`, the central statistic is
//!
//! ```text
//! sup_{x ∈ A} (1/N) Σ_i | (Γx)♯_i − ‖x‖ Q(i/(N+1)) |
//! ```
//!
//! where `v♯` is the nondecreasing rearrangement of `v` and `Q` a reference
//! quantile function. The crate computes it, together with the companion
//! Wasserstein-1 supremum, Gaussian widths, generic-chaining bounds, and
//! covariance diagnostics, and runs them as seeded experiments whose output
//! is bit-for-bit independent of the worker count.
//!
//! ## Modules
//!
//! | Module | Contents |
//! |---|---|
//! | [`distribution`] | reference laws: CDF, quantile, partial quantile means |
//! | [`empirical`] | samples, rearrangements, quantile vectors, L¹ deviation |
//! | [`wasserstein`] | exact W₁, quadrature cross-check, Lipschitz test functions |
//! | [`ensembles`] | ensembles, index sets, Gaussian width, covariance diagnostics |
//! | [`chaining`] | admissible sequences, γ₂ upper bound, Sudakov lower bound |
//! | [`experiments`] | seeded Monte Carlo drivers and their reports |
//! | [`cli`] | config parsing and CSV/JSON report writing for the `marginals` binary |
//!
//! ## Quick start
//!
//! ```
//! use marginals::distribution::ReferenceDistribution;
//! use marginals::empirical::Sample;
//! use marginals::wasserstein::w1_empirical_analytic;
//!
//! let s = Sample::new(vec![0.0]).unwrap();
//! let w = w1_empirical_analytic(&s, &ReferenceDistribution::std_normal()).unwrap();
//! assert!((w.value - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
//! ```

pub mod chaining;
pub mod cli;
pub mod distribution;
pub mod empirical;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod wasserstein;

pub use distribution::ReferenceDistribution;
pub use empirical::{QuantileVector, Sample};
pub use error::{Error, Result};
