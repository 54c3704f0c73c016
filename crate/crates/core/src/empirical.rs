//! Samples, monotone rearrangements and population quantile vectors.

use crate::distribution::ReferenceDistribution;
use crate::error::{Error, Result};

/// A finite real sample with its nondecreasing rearrangement cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    /// Builds a sample; rejects empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample value"));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The monotone nondecreasing rearrangement.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// Monotone rearrangement of `values`.
pub fn rearrange(values: Vec<f64>) -> Result<Sample> {
    Sample::new(values)
}

/// `q[i] = scale * Q(i / (N + 1))` for `i = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileVector {
    q: Vec<f64>,
    dist: ReferenceDistribution,
    scale: f64,
}

impl QuantileVector {
    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn distribution(&self) -> &ReferenceDistribution {
        &self.dist
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

pub fn quantile_vector(n: usize, dist: &ReferenceDistribution, scale: f64) -> Result<QuantileVector> {
    if n == 0 {
        return Err(Error::InvalidParameter("quantile vector length must be positive".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("quantile scale must be positive, got {scale}")));
    }
    let q = unit_quantiles(n, dist).into_iter().map(|v| scale * v).collect();
    Ok(QuantileVector { q, dist: dist.clone(), scale })
}

/// `Q(i / (N + 1))` for `i = 1..=N`. Normal laws use the mirrored level above
/// the median so the vector is exactly antisymmetric.
pub(crate) fn unit_quantiles(n: usize, dist: &ReferenceDistribution) -> Vec<f64> {
    let denom = (n + 1) as f64;
    let mirror = dist.is_gaussian();
    (1..=n)
        .map(|i| {
            let j = n + 1 - i;
            if mirror && j < i {
                -dist.quantile_unchecked(j as f64 / denom)
            } else {
                dist.quantile_unchecked(i as f64 / denom)
            }
        })
        .collect()
}

/// `(1/N) Σ |sorted[i] - q[i]|`.
pub fn l1_quantile_deviation(sample: &Sample, q: &QuantileVector) -> Result<f64> {
    if sample.len() != q.len() {
        return Err(Error::LengthMismatch { expected: q.len(), actual: sample.len() });
    }
    Ok(sorted_deviation(sample.sorted(), &q.q, 1.0))
}

/// `(1/N) Σ |sorted[i] - scale * unit[i]|` on already sorted input.
pub(crate) fn sorted_deviation(sorted: &[f64], unit: &[f64], scale: f64) -> f64 {
    debug_assert_eq!(sorted.len(), unit.len());
    let total: f64 = sorted.iter().zip(unit).map(|(v, q)| (v - scale * q).abs()).sum();
    total / sorted.len() as f64
}
