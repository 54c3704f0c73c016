//! Random ensembles, index sets, Gaussian width and covariance diagnostics.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::distribution::ReferenceDistribution;
use crate::empirical::{unit_quantiles, Sample};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Largest matrix (in entries) `sample_ensemble` will allocate.
pub const MAX_ENSEMBLE_ENTRIES: usize = 1 << 32;

/// Law of the i.i.d. coordinates of each row.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum GeneratorKind {
    StdGaussian,
    /// Symmetrized `|Z|^{2/alpha}` coordinates normalized to unit variance,
    /// satisfying `‖w‖_p <= l * p^{1/alpha}` for `2 <= p <= 20`.
    LocalMoment { alpha: f64, l: f64 },
    /// Deterministic: every column equals the standard normal quantile grid
    /// `Q(i/(N+1))`. Isolates discretization effects from sampling noise.
    QuantilePlugin,
    /// Matrix supplied by the caller through [`GaussianEnsemble::from_rows`].
    Explicit,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::StdGaussian => write!(f, "std_gaussian"),
            GeneratorKind::LocalMoment { alpha, l } => write!(f, "local_moment({alpha},{l})"),
            GeneratorKind::QuantilePlugin => write!(f, "quantile_plugin"),
            GeneratorKind::Explicit => write!(f, "explicit"),
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        match (name.as_str(), args.as_slice()) {
            ("std_gaussian", []) => Ok(GeneratorKind::StdGaussian),
            ("quantile_plugin", []) => Ok(GeneratorKind::QuantilePlugin),
            ("local_moment", [a, l]) => Ok(GeneratorKind::LocalMoment { alpha: parse_num(a)?, l: parse_num(l)? }),
            _ => Err(Error::InvalidParameter(format!("unknown generator `{s}`"))),
        }
    }
}

/// Splits `name(a, b, c)` into its name and trimmed arguments.
pub(crate) fn split_call(s: &str) -> Result<(String, Vec<String>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::InvalidParameter(format!("unbalanced parentheses in `{s}`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            Ok((s[..open].trim().to_string(), args))
        }
    }
}

pub(crate) fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse `{s}` as a number")))
}

fn ln_abs_normal_moment(r: f64) -> f64 {
    // E|Z|^r = 2^{r/2} Γ((r+1)/2) / sqrt(pi)
    0.5 * r * std::f64::consts::LN_2 + libm::lgamma(0.5 * (r + 1.0)) - 0.5 * std::f64::consts::PI.ln()
}

/// `‖w‖_{L_p}` for the unit-variance local-moment coordinate with index `alpha`.
pub fn local_moment_norm(alpha: f64, p: f64) -> f64 {
    let e = 2.0 / alpha;
    let ln_norm = ln_abs_normal_moment(p * e) / p - 0.5 * ln_abs_normal_moment(2.0 * e);
    ln_norm.exp()
}

/// `max_{p = 2..=p_max} ‖w‖_p / p^{1/alpha}`: the smallest admissible `L`.
pub fn local_moment_constant(alpha: f64, p_max: u32) -> f64 {
    (2..=p_max)
        .map(|p| local_moment_norm(alpha, p as f64) / (p as f64).powf(1.0 / alpha))
        .fold(0.0, f64::max)
}

/// Highest moment order at which the local-moment family is checked.
pub const LOCAL_MOMENT_MAX_ORDER: u32 = 20;

/// `N × d` matrix of i.i.d. rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    rows: Vec<f64>,
    n: usize,
    d: usize,
    seed: u64,
    kind: GeneratorKind,
}

impl GaussianEnsemble {
    /// Wraps a caller-supplied row-major matrix.
    pub fn from_rows(n: usize, d: usize, rows: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("ensemble dimensions must be positive".into()));
        }
        if rows.len() != n * d {
            return Err(Error::LengthMismatch { expected: n * d, actual: rows.len() });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ensemble entry"));
        }
        Ok(Self { rows, n, d, seed: 0, kind: GeneratorKind::Explicit })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    /// Average of the rows.
    pub fn row_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for row in self.rows.chunks_exact(self.d) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let nf = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= nf);
        mean
    }

    pub(crate) fn project_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.rows.chunks_exact(self.d).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()));
    }
}

/// Draws an `N × d` ensemble. Row `r` reads its `d` coordinates, in column
/// order, from the stream `(seed, r)`; normal variates use the ziggurat method.
pub fn sample_ensemble(n: usize, d: usize, kind: GeneratorKind, seed: u64) -> Result<GaussianEnsemble> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("ensemble dimensions must be positive".into()));
    }
    let entries = n
        .checked_mul(d)
        .filter(|&e| e <= MAX_ENSEMBLE_ENTRIES)
        .ok_or_else(|| Error::InvalidParameter(format!("ensemble of {n} x {d} entries is too large")))?;
    let mut rows = vec![0.0; entries];
    match kind {
        GeneratorKind::StdGaussian => {
            rows.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
                let mut rng = rng::stream(seed, Domain::Ensemble, r as u64);
                row.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            });
        }
        GeneratorKind::LocalMoment { alpha, l } => {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidParameter(format!("local moment index must be positive, got {alpha}")));
            }
            let needed = local_moment_constant(alpha, LOCAL_MOMENT_MAX_ORDER);
            if !(l >= needed) {
                return Err(Error::InvalidParameter(format!(
                    "local moment constant {l} is below {needed:.6}, the value the alpha = {alpha} family requires"
                )));
            }
            let exponent = 2.0 / alpha;
            let norm = (0.5 * ln_abs_normal_moment(2.0 * exponent)).exp();
            rows.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
                let mut rng = rng::stream(seed, Domain::Ensemble, r as u64);
                row.iter_mut().for_each(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = z.signum() * z.abs().powf(exponent) / norm;
                });
            });
        }
        GeneratorKind::QuantilePlugin => {
            let q = unit_quantiles(n, &ReferenceDistribution::std_normal());
            for (row, qi) in rows.chunks_exact_mut(d).zip(q) {
                row.fill(qi);
            }
        }
        GeneratorKind::Explicit => {
            return Err(Error::InvalidParameter("explicit ensembles are built with GaussianEnsemble::from_rows".into()))
        }
    }
    Ok(GaussianEnsemble { rows, n, d, seed, kind })
}

/// `values[i] = <row_i, x>`.
pub fn project(gamma: &GaussianEnsemble, x: &[f64]) -> Result<Sample> {
    if x.len() != gamma.d {
        return Err(Error::DimensionMismatch { expected: gamma.d, actual: x.len() });
    }
    let mut out = Vec::with_capacity(gamma.n);
    gamma.project_into(x, &mut out);
    Sample::new(out)
}

/// Largest `sparse_pm` set that is enumerated exhaustively.
pub const SPARSE_ENUMERATION_CAP: usize = 100_000;

/// Recipe for an [`IndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSetSpec {
    /// `{±e_1, …, ±e_d}`.
    BasisPm { d: usize },
    /// `m` uniform unit vectors and their negations.
    SphereNet { d: usize, m: usize, seed: u64 },
    /// `±(e_{i_1} + … + e_{i_k}) / sqrt(k)` over k-subsets; subsampled with
    /// `seed` beyond [`SPARSE_ENUMERATION_CAP`] vectors.
    SparsePm { d: usize, k: usize, seed: Option<u64> },
    /// `m` uniform unit vectors of the first `k` coordinates, symmetrized.
    SubsphereNet { d: usize, k: usize, m: usize, seed: u64 },
    Explicit(Vec<Vec<f64>>),
}

impl fmt::Display for IndexSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetSpec::BasisPm { d } => write!(f, "basis_pm({d})"),
            IndexSetSpec::SphereNet { d, m, seed } => write!(f, "sphere_net({d},{m},{seed})"),
            IndexSetSpec::SparsePm { d, k, seed: None } => write!(f, "sparse_pm({d},{k})"),
            IndexSetSpec::SparsePm { d, k, seed: Some(s) } => write!(f, "sparse_pm({d},{k},{s})"),
            IndexSetSpec::SubsphereNet { d, k, m, seed } => write!(f, "subsphere_net({d},{k},{m},{seed})"),
            IndexSetSpec::Explicit(v) => {
                write!(f, "explicit(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    let parts: Vec<String> = x.iter().map(|c| format!("{c:?}")).collect();
                    write!(f, "{}", parts.join(" "))?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for IndexSetSpec {
    type Err = Error;

    /// Parses the forms printed by `Display`, e.g. `sphere_net(50,200,7)` or
    /// `explicit(1 0;0 1)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("explicit(").and_then(|b| b.strip_suffix(')')) {
            let vectors = body
                .split(';')
                .map(|v| v.split_whitespace().map(parse_num::<f64>).collect::<Result<Vec<f64>>>())
                .collect::<Result<Vec<_>>>()?;
            return Ok(IndexSetSpec::Explicit(vectors));
        }
        let (name, args) = split_call(s)?;
        let n = |i: usize| parse_num::<usize>(&args[i]);
        let u = |i: usize| parse_num::<u64>(&args[i]);
        match (name.as_str(), args.len()) {
            ("basis_pm", 1) => Ok(IndexSetSpec::BasisPm { d: n(0)? }),
            ("sphere_net", 3) => Ok(IndexSetSpec::SphereNet { d: n(0)?, m: n(1)?, seed: u(2)? }),
            ("sparse_pm", 2) => Ok(IndexSetSpec::SparsePm { d: n(0)?, k: n(1)?, seed: None }),
            ("sparse_pm", 3) => Ok(IndexSetSpec::SparsePm { d: n(0)?, k: n(1)?, seed: Some(u(2)?) }),
            ("subsphere_net", 4) => Ok(IndexSetSpec::SubsphereNet { d: n(0)?, k: n(1)?, m: n(2)?, seed: u(3)? }),
            _ => Err(Error::InvalidParameter(format!("unknown index set `{s}`"))),
        }
    }
}

/// A finite set of directions in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    is_symmetric: bool,
    norms: Vec<f64>,
    label: String,
}

impl IndexSet {
    /// Builds a set from explicit vectors; symmetry is detected exactly.
    pub fn new(vectors: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::Empty("index set"))?.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("index set vectors must have positive dimension".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
        }
        if vectors.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("index set coordinate"));
        }
        let is_symmetric = closed_under_negation(&vectors);
        Ok(Self::assemble(vectors, dim, is_symmetric, label.into()))
    }

    fn assemble(vectors: Vec<Vec<f64>>, dim: usize, is_symmetric: bool, label: String) -> Self {
        let norms = vectors.iter().map(|v| norm2(v)).collect();
        Self { vectors, dim, is_symmetric, norms, label }
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The image of the set under an orthogonal map given by its rows.
    pub fn transformed(&self, rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let vectors = self
            .vectors
            .iter()
            .map(|x| rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
            .collect();
        Self::new(vectors, label)
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn bits(v: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must hash alike.
    v.iter().map(|c| if *c == 0.0 { 0 } else { c.to_bits() }).collect()
}

fn closed_under_negation(vectors: &[Vec<f64>]) -> bool {
    let set: HashSet<Vec<u64>> = vectors.iter().map(|v| bits(v)).collect();
    vectors.iter().all(|v| {
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        set.contains(&bits(&neg))
    })
}

fn symmetrize(half: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * half.len());
    for v in half {
        let neg = v.iter().map(|c| -c).collect();
        out.push(v);
        out.push(neg);
    }
    out
}

fn random_unit(rng: &mut impl Rng, k: usize, d: usize) -> Vec<f64> {
    loop {
        let mut v = vec![0.0; d];
        for c in v.iter_mut().take(k) {
            *c = StandardNormal.sample(rng);
        }
        let r = norm2(&v);
        if r > 0.0 {
            v.iter_mut().for_each(|c| *c /= r);
            return v;
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn sparse_vector(d: usize, support: &[usize], k: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    let c = 1.0 / (k as f64).sqrt();
    for &i in support {
        v[i] = c;
    }
    v
}

pub fn make_index_set(spec: &IndexSetSpec) -> Result<IndexSet> {
    let positive = |name: &str, v: usize| {
        if v == 0 {
            Err(Error::InvalidParameter(format!("{name} must be positive")))
        } else {
            Ok(())
        }
    };
    let label = spec.to_string();
    match spec {
        IndexSetSpec::BasisPm { d } => {
            positive("d", *d)?;
            let half = (0..*d)
                .map(|i| {
                    let mut e = vec![0.0; *d];
                    e[i] = 1.0;
                    e
                })
                .collect();
            Ok(IndexSet::assemble(symmetrize(half), *d, true, label))
        }
        IndexSetSpec::SphereNet { d, m, seed } => {
            positive("d", *d)?;
            positive("m", *m)?;
            let mut rng = rng::stream(*seed, Domain::IndexSet, 0);
            let half = (0..*m).map(|_| random_unit(&mut rng, *d, *d)).collect();
            Ok(IndexSet::assemble(symmetrize(half), *d, true, label))
        }
        IndexSetSpec::SubsphereNet { d, k, m, seed } => {
            positive("d", *d)?;
            positive("k", *k)?;
            positive("m", *m)?;
            if k > d {
                return Err(Error::InvalidParameter(format!("k = {k} exceeds d = {d}")));
            }
            let mut rng = rng::stream(*seed, Domain::IndexSet, 1);
            let half = (0..*m).map(|_| random_unit(&mut rng, *k, *d)).collect();
            Ok(IndexSet::assemble(symmetrize(half), *d, true, label))
        }
        IndexSetSpec::SparsePm { d, k, seed } => {
            positive("d", *d)?;
            positive("k", *k)?;
            if k > d {
                return Err(Error::InvalidParameter(format!("k = {k} exceeds d = {d}")));
            }
            let count = binomial(*d, *k).and_then(|c| c.checked_mul(2));
            let half = match count {
                Some(c) if c <= SPARSE_ENUMERATION_CAP => {
                    let mut supports = Vec::new();
                    let mut current: Vec<usize> = (0..*k).collect();
                    loop {
                        supports.push(sparse_vector(*d, &current, *k));
                        // Next k-subset in lexicographic order.
                        let Some(pos) = (0..*k).rev().find(|&i| current[i] < d - k + i) else { break };
                        current[pos] += 1;
                        for j in pos + 1..*k {
                            current[j] = current[j - 1] + 1;
                        }
                    }
                    supports
                }
                _ => {
                    let seed = seed.ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "sparse_pm({d},{k}) exceeds {SPARSE_ENUMERATION_CAP} vectors; a seed is required for subsampling"
                        ))
                    })?;
                    let mut rng = rng::stream(seed, Domain::IndexSet, 2);
                    let mut seen = HashSet::new();
                    let mut supports = Vec::new();
                    while supports.len() < SPARSE_ENUMERATION_CAP / 2 {
                        let mut s = index::sample(&mut rng, *d, *k).into_vec();
                        s.sort_unstable();
                        if seen.insert(s.clone()) {
                            supports.push(sparse_vector(*d, &s, *k));
                        }
                    }
                    supports
                }
            };
            Ok(IndexSet::assemble(symmetrize(half), *d, true, label))
        }
        IndexSetSpec::Explicit(vectors) => IndexSet::new(vectors.clone(), label),
    }
}

/// Monte Carlo estimate of `E sup_{x ∈ A} <G, x>`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WidthEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Per-trial suprema `sup_{x ∈ A} <G_t, x>`; trial `t` draws `G_t` from the
/// stream `(seed, t)`, so equal seeds give equal draws for any `A` of the same
/// dimension.
pub fn width_suprema(a: &IndexSet, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, Domain::Width, t as u64);
            let g: Vec<f64> = (0..a.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            a.vectors
                .iter()
                .map(|x| x.iter().zip(&g).map(|(p, q)| p * q).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn gaussian_width(a: &IndexSet, trials: usize, seed: u64) -> Result<WidthEstimate> {
    if a.is_empty() {
        return Err(Error::Empty("index set"));
    }
    if trials < 2 {
        return Err(Error::InvalidParameter("gaussian width needs at least two trials".into()));
    }
    let sups = width_suprema(a, trials, seed);
    let (mean, sd) = mean_sd(&sups);
    Ok(WidthEstimate { estimate: mean, stderr: sd / (trials as f64).sqrt(), trials })
}

/// Mean and sample standard deviation, summed in index order.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Input to [`covariance_diagnostics`].
#[derive(Debug, Clone, Copy)]
pub enum CovarianceInput<'a> {
    /// Sample covariance `(1/N) ΓᵀΓ` compared against the identity.
    Ensemble(&'a GaussianEnsemble),
    /// A symmetric `d × d` matrix, row-major.
    Explicit { matrix: &'a [f64], d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CovarianceDiagnostics {
    pub trace: f64,
    pub operator_norm: f64,
    pub effective_rank: f64,
    /// `‖(1/N) ΓᵀΓ − Σ‖_op`; zero for explicit input.
    pub zeta: f64,
    /// `max_i ‖X_i‖_2` for ensemble input.
    pub max_row_norm: Option<f64>,
}

const POWER_REL_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 200_000;

/// Largest absolute eigenvalue of a symmetric matrix by power iteration,
/// restarted from a second random vector; the larger estimate wins.
pub fn spectral_radius(matrix: &[f64], d: usize, seed: u64) -> Result<f64> {
    if matrix.len() != d * d {
        return Err(Error::LengthMismatch { expected: d * d, actual: matrix.len() });
    }
    let run = |start: u64| -> Result<f64> {
        let mut rng = rng::stream(seed, Domain::PowerIteration, start);
        let mut v = random_unit(&mut rng, d, d);
        let mut w = vec![0.0; d];
        let mut prev = f64::INFINITY;
        for _ in 0..POWER_MAX_ITERS {
            for (wi, row) in w.iter_mut().zip(matrix.chunks_exact(d)) {
                *wi = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            let lambda = norm2(&w);
            if lambda == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / lambda);
            // ‖Mv‖ is the square root of the Rayleigh quotient of M², which
            // converges quadratically in the eigenvector error.
            if (lambda - prev).abs() <= 0.01 * POWER_REL_TOL * lambda {
                return Ok(lambda);
            }
            prev = lambda;
        }
        Err(Error::Numerical(format!("power iteration did not reach relative {POWER_REL_TOL}")))
    };
    Ok(run(0)?.max(run(1)?))
}

pub fn covariance_diagnostics(input: CovarianceInput<'_>) -> Result<CovarianceDiagnostics> {
    match input {
        CovarianceInput::Ensemble(gamma) => {
            let d = gamma.d;
            let mut s = vec![0.0; d * d];
            for row in gamma.rows.chunks_exact(d) {
                for i in 0..d {
                    let ri = row[i];
                    for j in i..d {
                        s[i * d + j] += ri * row[j];
                    }
                }
            }
            let nf = gamma.n as f64;
            for i in 0..d {
                for j in i..d {
                    let v = s[i * d + j] / nf - if i == j { 1.0 } else { 0.0 };
                    s[i * d + j] = v;
                    s[j * d + i] = v;
                }
            }
            let zeta = spectral_radius(&s, d, gamma.seed)?;
            let max_row_norm = gamma.rows.chunks_exact(d).map(norm2).fold(0.0, f64::max);
            Ok(CovarianceDiagnostics {
                trace: d as f64,
                operator_norm: 1.0,
                effective_rank: d as f64,
                zeta,
                max_row_norm: Some(max_row_norm),
            })
        }
        CovarianceInput::Explicit { matrix, d } => {
            if d == 0 || matrix.len() != d * d {
                return Err(Error::LengthMismatch { expected: d * d, actual: matrix.len() });
            }
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("covariance entry"));
            }
            let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..d {
                for j in i + 1..d {
                    if (matrix[i * d + j] - matrix[j * d + i]).abs() > 1e-12 * scale {
                        return Err(Error::InvalidParameter(format!("covariance is not symmetric at ({i}, {j})")));
                    }
                }
            }
            let trace: f64 = (0..d).map(|i| matrix[i * d + i]).sum();
            let operator_norm = spectral_radius(matrix, d, 0)?;
            if operator_norm == 0.0 {
                return Err(Error::InvalidParameter("covariance is the zero matrix".into()));
            }
            Ok(CovarianceDiagnostics {
                trace,
                operator_norm,
                effective_rank: trace / operator_norm,
                zeta: 0.0,
                max_row_norm: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_ensemble(50, 7, GeneratorKind::StdGaussian, 99).unwrap();
        let b = sample_ensemble(50, 7, GeneratorKind::StdGaussian, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_ensemble(50, 7, GeneratorKind::StdGaussian, 100).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
        // A row depends only on (seed, row): a taller matrix extends a shorter one.
        let tall = sample_ensemble(80, 7, GeneratorKind::StdGaussian, 99).unwrap();
        assert_eq!(&tall.as_slice()[..350], a.as_slice());
    }

    #[test]
    fn entry_moments_match_standard_normal() {
        let e = sample_ensemble(1000, 1000, GeneratorKind::StdGaussian, 2024).unwrap();
        let (mean, sd) = mean_sd(e.as_slice());
        assert!(mean.abs() < 4.0 / 1000.0, "mean {mean}");
        assert!((sd * sd - 1.0).abs() < 0.01, "variance {}", sd * sd);
    }

    #[test]
    fn local_moment_entries_have_unit_variance() {
        let kind = GeneratorKind::LocalMoment { alpha: 1.0, l: 2.0 };
        let e = sample_ensemble(500, 400, kind, 5).unwrap();
        let (mean, sd) = mean_sd(e.as_slice());
        assert!(mean.abs() < 0.01);
        assert!((sd * sd - 1.0).abs() < 0.05, "variance {}", sd * sd);
    }

    #[test]
    fn local_moment_constant_bounds_moments() {
        for alpha in [0.5, 1.0, 2.0] {
            let l = local_moment_constant(alpha, LOCAL_MOMENT_MAX_ORDER);
            assert!(l.is_finite() && l > 0.0);
            for p in 2..=20 {
                assert!(local_moment_norm(alpha, p as f64) <= l * (p as f64).powf(1.0 / alpha) * (1.0 + 1e-12));
            }
            assert!((local_moment_norm(alpha, 2.0) - 1.0).abs() < 1e-12);
        }
        // alpha = 2 is the Gaussian: ‖g‖_4 = 3^{1/4}.
        assert!((local_moment_norm(2.0, 4.0) - 3f64.powf(0.25)).abs() < 1e-12);
        assert!(sample_ensemble(2, 2, GeneratorKind::LocalMoment { alpha: 1.0, l: 0.01 }, 0).is_err());
    }

    #[test]
    fn rejects_oversized_requests() {
        assert!(sample_ensemble(usize::MAX / 2, 4, GeneratorKind::StdGaussian, 0).is_err());
        assert!(sample_ensemble(0, 4, GeneratorKind::StdGaussian, 0).is_err());
    }

    #[test]
    fn quantile_plugin_columns_are_the_quantile_grid() {
        let e = sample_ensemble(9, 3, GeneratorKind::QuantilePlugin, 0).unwrap();
        let col = project(&e, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(col.values()[4], 0.0);
        assert!(col.values().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn index_set_examples() {
        let b = make_index_set(&IndexSetSpec::BasisPm { d: 2 }).unwrap();
        assert_eq!(b.vectors(), &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert!(b.is_symmetric());
        assert!(b.norms().iter().all(|&r| r == 1.0));

        let s = make_index_set(&IndexSetSpec::SparsePm { d: 3, k: 3, seed: None }).unwrap();
        assert_eq!(s.len(), 2);
        let c = 1.0 / 3f64.sqrt();
        assert_eq!(s.vectors()[0], vec![c, c, c]);
        assert_eq!(s.vectors()[1], vec![-c, -c, -c]);

        let net = make_index_set(&IndexSetSpec::SphereNet { d: 50, m: 200, seed: 4 }).unwrap();
        assert_eq!(net.len(), 400);
        assert!(net.is_symmetric());
        assert!(net.norms().iter().all(|r| (r - 1.0).abs() < 1e-12));

        let sub = make_index_set(&IndexSetSpec::SubsphereNet { d: 10, k: 3, m: 5, seed: 4 }).unwrap();
        assert!(sub.vectors().iter().all(|v| v[3..].iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn sparse_enumeration_counts_and_cap() {
        let s = make_index_set(&IndexSetSpec::SparsePm { d: 6, k: 2, seed: None }).unwrap();
        assert_eq!(s.len(), 30);
        assert!(make_index_set(&IndexSetSpec::SparsePm { d: 40, k: 10, seed: None }).is_err());
        let sub = make_index_set(&IndexSetSpec::SparsePm { d: 40, k: 10, seed: Some(1) }).unwrap();
        assert_eq!(sub.len(), SPARSE_ENUMERATION_CAP);
        assert!(sub.is_symmetric());
    }

    #[test]
    fn explicit_sets_detect_symmetry() {
        let sym = IndexSet::new(vec![vec![1.0, 0.0], vec![-1.0, -0.0]], "x").unwrap();
        assert!(sym.is_symmetric());
        let asym = IndexSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], "x").unwrap();
        assert!(!asym.is_symmetric());
        assert!(IndexSet::new(vec![vec![1.0], vec![1.0, 2.0]], "x").is_err());
        assert!(IndexSet::new(vec![], "x").is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["basis_pm(20)", "sphere_net(50,200,7)", "sparse_pm(10,3)", "sparse_pm(10,3,4)", "subsphere_net(50,5,100,7)", "explicit(1.0 0.0;0.0 -1.0)"] {
            let spec: IndexSetSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for g in ["std_gaussian", "quantile_plugin", "local_moment(1,3)"] {
            assert_eq!(g.parse::<GeneratorKind>().unwrap().to_string(), g);
        }
        assert!("nope(1)".parse::<IndexSetSpec>().is_err());
    }

    #[test]
    fn projection_examples() {
        let e = sample_ensemble(300, 4, GeneratorKind::StdGaussian, 8).unwrap();
        let col = project(&e, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        for i in 0..300 {
            assert_eq!(col.values()[i], e.row(i)[2]);
        }
        assert!(project(&e, &[0.0; 4]).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(project(&e, &[1.0; 3]).is_err());

        let n = 20_000;
        let big = sample_ensemble(n, 2, GeneratorKind::StdGaussian, 8).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (_, sd) = mean_sd(project(&big, &[h, h]).unwrap().values());
        assert!((sd * sd - 1.0).abs() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn width_examples() {
        let single = IndexSet::new(vec![vec![0.6, 0.8]], "x").unwrap();
        let w = gaussian_width(&single, 4000, 1).unwrap();
        assert!(w.estimate.abs() <= 3.0 * w.stderr);

        let pair = IndexSet::new(vec![vec![0.6, 0.8], vec![-0.6, -0.8]], "x").unwrap();
        let w = gaussian_width(&pair, 20_000, 2).unwrap();
        assert!((w.estimate - 0.797_884_560_802_865_4).abs() <= 3.0 * w.stderr);

        // E max_{i<=100} |g_i| = ∫_0^∞ 1 - (2Φ(t) - 1)^100 dt = 2.7469576878 (quadrature oracle).
        let b = make_index_set(&IndexSetSpec::BasisPm { d: 100 }).unwrap();
        let w = gaussian_width(&b, 20_000, 3).unwrap();
        assert!((w.estimate - 2.746_957_687_806_137).abs() <= 0.02, "{w:?}");

        assert!(gaussian_width(&b, 1, 3).is_err());
    }

    #[test]
    fn width_is_monotone_under_inclusion_on_shared_draws() {
        let big = make_index_set(&IndexSetSpec::SphereNet { d: 10, m: 40, seed: 1 }).unwrap();
        let small = IndexSet::new(big.vectors()[..30].to_vec(), "subset").unwrap();
        let (ws, wb) = (width_suprema(&small, 500, 6), width_suprema(&big, 500, 6));
        assert!(ws.iter().zip(&wb).all(|(s, b)| s <= b));
    }

    #[test]
    fn width_is_rotation_invariant_in_distribution() {
        let d = 12;
        let basis = make_index_set(&IndexSetSpec::BasisPm { d }).unwrap();
        // Orthogonal matrix from Gram-Schmidt on a fixed random matrix.
        let mut rng = rng::stream(17, Domain::IndexSet, 9);
        let mut q: Vec<Vec<f64>> = Vec::new();
        while q.len() < d {
            let mut v = random_unit(&mut rng, d, d);
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
            let r = norm2(&v);
            v.iter_mut().for_each(|a| *a /= r);
            q.push(v);
        }
        let rotated = basis.transformed(&q, "rotated").unwrap();
        let a = gaussian_width(&basis, 20_000, 1).unwrap();
        let b = gaussian_width(&rotated, 20_000, 2).unwrap();
        let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() <= 4.0 * joint);
    }

    #[test]
    fn covariance_examples() {
        let eye: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let diag = covariance_diagnostics(CovarianceInput::Explicit { matrix: &eye, d: 4 }).unwrap();
        assert!((diag.effective_rank - 4.0).abs() < 1e-12);

        let mut m = vec![0.0; 25];
        for (i, v) in [4.0, 1.0, 1.0, 1.0, 1.0].iter().enumerate() {
            m[i * 5 + i] = *v;
        }
        let diag = covariance_diagnostics(CovarianceInput::Explicit { matrix: &m, d: 5 }).unwrap();
        assert!((diag.effective_rank - 2.0).abs() < 1e-9);
        assert!((diag.trace - 8.0).abs() < 1e-15);

        let asym = [1.0, 0.5, 0.0, 1.0];
        assert!(covariance_diagnostics(CovarianceInput::Explicit { matrix: &asym, d: 2 }).is_err());

        let e = sample_ensemble(400, 1, GeneratorKind::StdGaussian, 3).unwrap();
        let second: f64 = e.as_slice().iter().map(|x| x * x).sum::<f64>() / 400.0;
        let diag = covariance_diagnostics(CovarianceInput::Ensemble(&e)).unwrap();
        assert!((diag.zeta - (second - 1.0).abs()).abs() < 1e-14);
    }

    #[test]
    fn zeta_vanishes_on_scaled_orthonormal_columns() {
        // Columns 0..4 of the 8 x 8 Sylvester-Hadamard matrix: Γᵀ Γ = 8 I exactly.
        let h = |i: usize, j: usize| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let rows: Vec<f64> = (0..8).flat_map(|i| (0..4).map(move |j| h(i, j))).collect();
        let e = GaussianEnsemble::from_rows(8, 4, rows).unwrap();
        assert_eq!(covariance_diagnostics(CovarianceInput::Ensemble(&e)).unwrap().zeta, 0.0);
    }

    #[test]
    fn power_iteration_matches_dense_eigensolver() {
        for seed in 0..5 {
            let e = sample_ensemble(200, 15, GeneratorKind::StdGaussian, seed).unwrap();
            let zeta = covariance_diagnostics(CovarianceInput::Ensemble(&e)).unwrap().zeta;
            let g = nalgebra::DMatrix::from_row_slice(200, 15, e.as_slice());
            let s = g.transpose() * &g / 200.0 - nalgebra::DMatrix::identity(15, 15);
            let eig = s.symmetric_eigen();
            let want = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((zeta - want).abs() <= 1e-8 * want, "{zeta} vs {want}");
        }
    }
}
