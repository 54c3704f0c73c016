//! Analytic reference laws.
//!
//! Each law exposes its distribution function, its left-continuous quantile
//! function `Q(u) = inf { t : F(t) >= u }`, and the partial quantile integral
//! `G(u) = ∫_0^u Q(v) dv`. The last one is what makes Wasserstein-1
//! integrals against these laws exact: on any cell where the integrand has a
//! fixed sign, `∫ |c - Q|` reduces to differences of `G`.

use crate::error::{ensure_finite, Error, Result};
use crate::normal;

/// Default relative tolerance attached to a reference law.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// The supported families.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    StdNormal,
    /// Centred normal with standard deviation `sigma`.
    ScaledNormal(f64),
    Uniform01,
    /// Uniform law on a finite multiset of atoms.
    EmpiricalRef(EmpiricalLaw),
}

/// Sorted atoms with prefix sums, the backing store of [`DistributionKind::EmpiricalRef`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    sorted: Vec<f64>,
    /// `prefix[k] = sorted[0] + ... + sorted[k-1]`.
    prefix: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empirical reference law"));
        }
        for &v in values {
            ensure_finite(v, "empirical reference atom")?;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Ok(Self { sorted, prefix })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.sorted
    }

    fn len_f(&self) -> f64 {
        self.sorted.len() as f64
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    fn partial_mean(&self, u: f64) -> f64 {
        let m = self.sorted.len();
        let k = ((u * self.len_f()).floor() as usize).min(m);
        let base = self.prefix[k] / self.len_f();
        if k == m {
            base
        } else {
            base + self.sorted[k] * (u - k as f64 / self.len_f())
        }
    }
}

/// An analytic law together with the numeric tolerance used for its checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDistribution {
    kind: DistributionKind,
    tolerance: f64,
}

impl ReferenceDistribution {
    pub fn std_normal() -> Self {
        Self::from_kind(DistributionKind::StdNormal)
    }

    pub fn scaled_normal(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("normal scale must be positive, got {sigma}")));
        }
        Ok(Self::from_kind(DistributionKind::ScaledNormal(sigma)))
    }

    pub fn uniform01() -> Self {
        Self::from_kind(DistributionKind::Uniform01)
    }

    pub fn empirical(values: &[f64]) -> Result<Self> {
        Ok(Self::from_kind(DistributionKind::EmpiricalRef(EmpiricalLaw::new(values)?)))
    }

    fn from_kind(kind: DistributionKind) -> Self {
        Self { kind, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// True for the centred normal family.
    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, DistributionKind::StdNormal | DistributionKind::ScaledNormal(_))
    }

    /// The law of `c * X` for `c > 0`, when it stays inside the supported families.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {c}")));
        }
        match &self.kind {
            DistributionKind::StdNormal if c == 1.0 => Ok(self.clone()),
            DistributionKind::StdNormal => Self::scaled_normal(c),
            DistributionKind::ScaledNormal(s) => Self::scaled_normal(s * c),
            DistributionKind::Uniform01 if c == 1.0 => Ok(self.clone()),
            DistributionKind::Uniform01 => {
                Err(Error::InvalidParameter("scaled uniform laws are not representable".into()))
            }
            DistributionKind::EmpiricalRef(law) => {
                let atoms: Vec<f64> = law.atoms().iter().map(|v| v * c).collect();
                Self::empirical(&atoms)
            }
        }
        .map(|d| d.with_tolerance(self.tolerance))
    }

    /// Distribution function. Infinite arguments map to 0 or 1; NaN is an error.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NonFinite("cdf argument"));
        }
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            DistributionKind::StdNormal => normal::cdf(x),
            DistributionKind::ScaledNormal(s) => normal::cdf(x / s),
            DistributionKind::Uniform01 => x.clamp(0.0, 1.0),
            DistributionKind::EmpiricalRef(law) => law.count_le(x) as f64 / law.len_f(),
        }
    }

    /// Left-continuous quantile function on the open interval `(0, 1)`.
    ///
    /// Normal quantiles clamp `u` to `[1e-300, 1 - 1e-16]` before inversion.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match &self.kind {
            DistributionKind::StdNormal => normal::quantile(u),
            DistributionKind::ScaledNormal(s) => s * normal::quantile(u),
            DistributionKind::Uniform01 => u,
            DistributionKind::EmpiricalRef(law) => {
                let m = law.sorted.len();
                let j = ((u * law.len_f()).ceil() as usize).clamp(1, m);
                law.sorted[j - 1]
            }
        }
    }

    /// `∫_0^u Q(v) dv` for `u ∈ [0, 1]`.
    pub(crate) fn partial_mean(&self, u: f64) -> f64 {
        match &self.kind {
            DistributionKind::StdNormal => -gaussian_tail_density(u),
            DistributionKind::ScaledNormal(s) => -s * gaussian_tail_density(u),
            DistributionKind::Uniform01 => 0.5 * u * u,
            DistributionKind::EmpiricalRef(law) => law.partial_mean(u),
        }
    }

    /// `(F(x), E[X ; X <= x])`, evaluated directly from `x` so that no quantile
    /// round trip is involved. `E[X ; X <= x]` equals `G(F(x))`.
    pub(crate) fn lower_partial_expectation(&self, x: f64) -> (f64, f64) {
        match &self.kind {
            DistributionKind::StdNormal => (normal::cdf(x), -normal::density(x)),
            DistributionKind::ScaledNormal(s) => (normal::cdf(x / s), -s * normal::density(x / s)),
            DistributionKind::Uniform01 => {
                let c = x.clamp(0.0, 1.0);
                (c, 0.5 * c * c)
            }
            DistributionKind::EmpiricalRef(law) => {
                let k = law.count_le(x);
                (k as f64 / law.len_f(), law.prefix[k] / law.len_f())
            }
        }
    }

    /// `∫_a^b Q(u) du` for `0 <= a <= b <= 1`.
    pub fn interval_quantile_mean(&self, a: f64, b: f64) -> Result<f64> {
        ensure_finite(a, "interval start")?;
        ensure_finite(b, "interval end")?;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(Error::Domain(format!("interval [{a}, {b}] must lie in [0, 1]")));
        }
        if a > b {
            return Err(Error::Domain(format!("interval start {a} exceeds end {b}")));
        }
        Ok(self.partial_mean(b) - self.partial_mean(a))
    }

    pub fn mean(&self) -> f64 {
        self.partial_mean(1.0)
    }

    /// `(E|X|^p)^{1/p}`. Normal laws support `p ∈ {1, 2, 4}` in closed form.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("moment order must be >= 1, got {p}")));
        }
        let gaussian = |p: f64| -> Result<f64> {
            if p == 1.0 {
                Ok(normal::mean_abs())
            } else if p == 2.0 {
                Ok(1.0)
            } else if p == 4.0 {
                Ok(3f64.powf(0.25))
            } else {
                Err(Error::InvalidParameter(format!("no closed-form L_{p} norm for the normal law")))
            }
        };
        match &self.kind {
            DistributionKind::StdNormal => gaussian(p),
            DistributionKind::ScaledNormal(s) => Ok(s * gaussian(p)?),
            DistributionKind::Uniform01 => Ok((1.0 / (p + 1.0)).powf(1.0 / p)),
            DistributionKind::EmpiricalRef(law) => {
                let m = law.atoms().iter().map(|v| v.abs().powf(p)).sum::<f64>() / law.len_f();
                Ok(m.powf(1.0 / p))
            }
        }
    }

    /// Points where `F` is not smooth (atoms and support endpoints).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DistributionKind::StdNormal | DistributionKind::ScaledNormal(_) => Vec::new(),
            DistributionKind::Uniform01 => vec![0.0, 1.0],
            DistributionKind::EmpiricalRef(law) => {
                let mut atoms = law.atoms().to_vec();
                atoms.dedup();
                atoms
            }
        }
    }
}

/// `φ(Q(u))`, zero at both endpoints.
fn gaussian_tail_density(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        normal::density(normal::quantile(u))
    }
}

impl std::fmt::Display for ReferenceDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            DistributionKind::StdNormal => write!(f, "std_normal"),
            DistributionKind::ScaledNormal(s) => write!(f, "normal({s:?})"),
            DistributionKind::Uniform01 => write!(f, "uniform01"),
            DistributionKind::EmpiricalRef(law) => {
                let atoms: Vec<String> = law.atoms().iter().map(|a| format!("{a:?}")).collect();
                write!(f, "empirical({})", atoms.join(" "))
            }
        }
    }
}

impl std::str::FromStr for ReferenceDistribution {
    type Err = Error;

    /// Parses `std_normal`, `normal(sigma)`, `uniform01` or `empirical(a b c)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("empirical(").and_then(|b| b.strip_suffix(')')) {
            let atoms = body
                .split_whitespace()
                .map(|a| a.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad atom `{a}`"))))
                .collect::<Result<Vec<_>>>()?;
            return Self::empirical(&atoms);
        }
        if let Some(body) = s.strip_prefix("normal(").and_then(|b| b.strip_suffix(')')) {
            let sigma = body.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad scale `{body}`")))?;
            return Self::scaled_normal(sigma);
        }
        match s {
            "std_normal" => Ok(Self::std_normal()),
            "uniform01" => Ok(Self::uniform01()),
            _ => Err(Error::InvalidParameter(format!("unknown reference law `{s}`"))),
        }
    }
}
