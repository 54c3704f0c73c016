//! Seeded Monte Carlo drivers and their reports.
//!
//! Trial `t` at the `k`-th sample size draws its ensemble with seed
//! `derive_seed(seed, [k, t])`. Trials run on a worker pool and are collected
//! in `(k, t)` order before any reduction, so every report is bit-for-bit
//! independent of the worker count.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaining;
use crate::distribution::ReferenceDistribution;
use crate::empirical::{l1_quantile_deviation, quantile_vector, Sample};
use crate::ensembles::{
    gaussian_width, make_index_set, mean_sd, sample_ensemble, GaussianEnsemble, GeneratorKind, IndexSet, IndexSetSpec,
    WidthEstimate,
};
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, Domain};
use crate::wasserstein::{lipschitz_family, w1_empirical_analytic, PreparedReference};

/// Slack allowed in the pathwise duality checks.
pub const DUALITY_SLACK: f64 = 1e-9;
/// Largest number of pairs [`check_assumption`] evaluates before subsampling.
pub const MAX_ASSUMPTION_PAIRS: usize = 1_000_000;
/// Constant in the quantile-shift bound `10 ‖X‖_p / N^{1 - 1/p}`.
pub const SHIFT_BOUND_CONSTANT: f64 = 10.0;

const WIDTH_PATH: u64 = u64::MAX;

/// Which per-trial supremum [`run_scaling`] records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `sup_x (1/N) Σ |(Γx)♯_i − ‖x‖ q_i|`.
    QuantileDeviation,
    /// `sup_x W1(empirical law of Γx, law of ‖x‖ X)`.
    Wasserstein,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::QuantileDeviation => "deviation",
            Statistic::Wasserstein => "w1",
        })
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deviation" => Ok(Statistic::QuantileDeviation),
            "w1" => Ok(Statistic::Wasserstein),
            _ => Err(Error::InvalidParameter(format!("unknown statistic `{s}`"))),
        }
    }
}

/// Per-`N` summary the log-log fit is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    Median,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Mean => "mean",
            Aggregate::Median => "median",
        })
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "median" => Ok(Aggregate::Median),
            _ => Err(Error::InvalidParameter(format!("unknown aggregate `{s}`"))),
        }
    }
}

/// Parameters shared by every driver. Fields a driver does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub index_set: IndexSetSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Tail thresholds; `None` selects `{0.1, 1, 10} · max{width², ln⁴N} / N`.
    pub delta_grid: Option<Vec<f64>>,
    pub generator: GeneratorKind,
    pub reference: ReferenceDistribution,
    /// Worker threads; 0 uses one per available core.
    pub workers: usize,
    pub statistic: Statistic,
    pub aggregate: Aggregate,
    /// Monte Carlo draws behind the Gaussian width estimate.
    pub width_trials: usize,
    /// Index into the index set of the fixed tail direction.
    pub direction: usize,
    /// Tail lower-event constant: `W1 >= c2 · sqrt(Δ)`.
    pub c2: f64,
    /// Lower-bound constant: `w1_sup >= c_lower · width / sqrt(N)`.
    pub c_lower: f64,
    pub theta: f64,
    /// When set, `theta` is replaced by this multiple of the width estimate.
    pub theta_width_factor: Option<f64>,
    /// Optional `B` against which [`check_assumption`] reports a witness.
    pub b_target: Option<f64>,
    pub family_size: usize,
    pub p: f64,
}

impl ExperimentConfig {
    pub fn new(d: usize, index_set: IndexSetSpec, n_grid: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            d,
            index_set,
            n_grid,
            trials,
            seed,
            delta_grid: None,
            generator: GeneratorKind::StdGaussian,
            reference: ReferenceDistribution::std_normal(),
            workers: 0,
            statistic: Statistic::QuantileDeviation,
            aggregate: Aggregate::Mean,
            width_trials: 2000,
            direction: 0,
            c2: 1.0,
            c_lower: 0.1,
            theta: 0.0,
            theta_width_factor: None,
            b_target: None,
            family_size: 64,
            p: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Empty("sample size grid"));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::InvalidParameter("sample sizes must be positive".into()));
        }
        let mut sorted = self.n_grid.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("sample size grid has duplicates".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if let Some(grid) = &self.delta_grid {
            if grid.is_empty() {
                return Err(Error::Empty("delta grid"));
            }
            if grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::InvalidParameter("delta grid entries must be positive".into()));
            }
        }
        if self.width_trials < 2 {
            return Err(Error::InvalidParameter("width_trials must be at least 2".into()));
        }
        for (name, v) in [("c2", self.c2), ("c_lower", self.c_lower)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative")));
            }
        }
        if self.theta.is_nan() || self.theta < 0.0 {
            return Err(Error::InvalidParameter("theta must be nonnegative".into()));
        }
        if self.theta_width_factor.is_some_and(|f| !(f.is_finite() && f >= 0.0)) {
            return Err(Error::InvalidParameter("theta_width_factor must be finite and nonnegative".into()));
        }
        if self.b_target.is_some_and(|b| !(b.is_finite() && b >= 0.0)) {
            return Err(Error::InvalidParameter("b_target must be finite and nonnegative".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        Ok(())
    }

    /// The sample sizes in increasing order.
    pub fn sorted_grid(&self) -> Vec<usize> {
        let mut g = self.n_grid.clone();
        g.sort_unstable();
        g
    }

    pub fn build_index_set(&self) -> Result<IndexSet> {
        let a = make_index_set(&self.index_set)?;
        if a.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: a.dim() });
        }
        Ok(a)
    }

    /// Seed of the ensemble drawn for trial `trial` at grid position `n_index`.
    pub fn trial_seed(&self, n_index: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[n_index as u64, trial as u64])
    }

    pub fn width_seed(&self) -> u64 {
        derive_seed(self.seed, &[WIDTH_PATH])
    }

    pub fn width(&self, a: &IndexSet) -> Result<WidthEstimate> {
        gaussian_width(a, self.width_trials, self.width_seed())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
    }

    /// Runs `f(n_index, n, trial, ensemble)` for every grid point and trial and
    /// returns the outputs grouped by sample size, trials in order.
    fn run_trials<T, F>(&self, grid: &[usize], f: F) -> Result<Vec<Vec<T>>>
    where
        T: Send,
        F: Fn(usize, usize, usize, &GaussianEnsemble) -> Result<T> + Sync,
    {
        let jobs: Vec<(usize, usize)> =
            (0..grid.len()).flat_map(|k| (0..self.trials).map(move |t| (k, t))).collect();
        let outputs: Vec<Result<T>> = self.pool()?.install(|| {
            jobs.par_iter()
                .map(|&(k, t)| {
                    let gamma = sample_ensemble(grid[k], self.d, self.generator, self.trial_seed(k, t))?;
                    f(k, grid[k], t, &gamma)
                })
                .collect()
        });
        let mut grouped: Vec<Vec<T>> = (0..grid.len()).map(|_| Vec::with_capacity(self.trials)).collect();
        for ((k, _), out) in jobs.into_iter().zip(outputs) {
            grouped[k].push(out?);
        }
        Ok(grouped)
    }
}

/// Both suprema of one ensemble over one index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SupStats {
    pub deviation: f64,
    pub w1: f64,
    /// `max_x |W1_x − deviation_x|`.
    pub identity_gap: f64,
}

fn check_dims(gamma: &GaussianEnsemble, a: &IndexSet) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Empty("index set"));
    }
    if a.dim() != gamma.d() {
        return Err(Error::DimensionMismatch { expected: gamma.d(), actual: a.dim() });
    }
    Ok(())
}

/// Sorted projection `(Γx)♯` into `buf`.
fn sorted_projection(gamma: &GaussianEnsemble, x: &[f64], buf: &mut Vec<f64>) {
    gamma.project_into(x, buf);
    buf.sort_unstable_by(f64::total_cmp);
}

fn direction_w1(prep: &PreparedReference, sorted: &[f64], norm: f64) -> Result<f64> {
    if norm == 0.0 {
        return Ok(sorted.iter().map(|v| v.abs()).sum::<f64>() / sorted.len() as f64);
    }
    Ok(prep.w1_sorted(sorted, norm)?.value)
}

pub(crate) fn sup_stats(gamma: &GaussianEnsemble, a: &IndexSet, prep: &PreparedReference) -> Result<SupStats> {
    check_dims(gamma, a)?;
    let mut buf = Vec::with_capacity(gamma.n());
    let mut out = SupStats { deviation: 0.0, w1: 0.0, identity_gap: 0.0 };
    for (x, &norm) in a.vectors().iter().zip(a.norms()) {
        sorted_projection(gamma, x, &mut buf);
        let dev = prep.deviation_sorted(&buf, norm)?;
        let w1 = direction_w1(prep, &buf, norm)?;
        out.deviation = out.deviation.max(dev);
        out.w1 = out.w1.max(w1);
        out.identity_gap = out.identity_gap.max((w1 - dev).abs());
    }
    Ok(out)
}

/// `sup_{x ∈ A} (1/N) Σ |(Γx)♯_i − ‖x‖ Q(i/(N+1))|`.
pub fn marginal_deviation_sup(gamma: &GaussianEnsemble, a: &IndexSet, dist: &ReferenceDistribution) -> Result<f64> {
    let prep = PreparedReference::new(dist, gamma.n())?;
    check_dims(gamma, a)?;
    let mut buf = Vec::with_capacity(gamma.n());
    let mut best = 0.0f64;
    for (x, &norm) in a.vectors().iter().zip(a.norms()) {
        sorted_projection(gamma, x, &mut buf);
        best = best.max(prep.deviation_sorted(&buf, norm)?);
    }
    Ok(best)
}

/// `sup_{x ∈ A} W1(empirical law of Γx, law of ‖x‖ X)` with `X ~ dist`.
pub fn w1_sup(gamma: &GaussianEnsemble, a: &IndexSet, dist: &ReferenceDistribution) -> Result<f64> {
    let prep = PreparedReference::new(dist, gamma.n())?;
    check_dims(gamma, a)?;
    let mut buf = Vec::with_capacity(gamma.n());
    let mut best = 0.0f64;
    for (x, &norm) in a.vectors().iter().zip(a.norms()) {
        sorted_projection(gamma, x, &mut buf);
        best = best.max(direction_w1(&prep, &buf, norm)?);
    }
    Ok(best)
}

/// Median of a slice; the average of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Empirical `q`-quantile by the nearest-rank rule.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub max: f64,
    pub trials: usize,
}

/// Least-squares line through `(ln N, ln statistic)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    /// Normal-approximation 95% half-width, `1.96` standard errors.
    pub slope_half_width: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fit: Option<LogLogFit>,
    /// Why `fit` is absent.
    pub fit_flag: Option<String>,
    pub width: WidthEstimate,
    pub statistic: Statistic,
    pub aggregate: Aggregate,
    /// Trials where `|W1 − deviation| > 10 max‖x‖ / sqrt(N)` in some direction.
    pub identity_violations: usize,
}

/// Ordinary least squares of `ys` on `xs`; `None` for fewer than three points.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    let k = xs.len();
    if k < 3 || ys.len() != k {
        return None;
    }
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (rss / (kf - 2.0) / sxx).sqrt();
    Some(LogLogFit { slope, slope_half_width: 1.96 * se, intercept, points: k })
}

/// Sup-deviation (or W1 sup) statistics per sample size and their log-log slope.
pub fn run_scaling(config: &ExperimentConfig) -> Result<ScalingReport> {
    config.validate()?;
    let a = config.build_index_set()?;
    let width = config.width(&a)?;
    let grid = config.sorted_grid();
    let preps = grid.iter().map(|&n| PreparedReference::new(&config.reference, n)).collect::<Result<Vec<_>>>()?;
    let results = config.run_trials(&grid, |k, _, _, gamma| sup_stats(gamma, &a, &preps[k]))?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut identity_violations = 0;
    for (&n, stats) in grid.iter().zip(&results) {
        let bound = SHIFT_BOUND_CONSTANT * a.max_norm() * config.reference.lp_norm(2.0).unwrap_or(f64::INFINITY)
            / (n as f64).sqrt();
        identity_violations += stats.iter().filter(|s| s.identity_gap > bound).count();
        let values: Vec<f64> = stats
            .iter()
            .map(|s| match config.statistic {
                Statistic::QuantileDeviation => s.deviation,
                Statistic::Wasserstein => s.w1,
            })
            .collect();
        let (mean, sd) = mean_sd(&values);
        rows.push(ScalingRow {
            n,
            mean,
            sd,
            median: median(&values),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            trials: values.len(),
        });
    }

    let ys: Vec<f64> = rows
        .iter()
        .map(|r| match config.aggregate {
            Aggregate::Mean => r.mean,
            Aggregate::Median => r.median,
        })
        .collect();
    let (fit, fit_flag) = if grid.len() < 3 {
        (None, Some("fewer than three sample sizes".to_string()))
    } else if (*grid.last().unwrap() as f64) < 10.0 * grid[0] as f64 {
        (None, Some("sample sizes span less than one decade".to_string()))
    } else if ys.iter().any(|&y| !(y > 0.0)) {
        (None, Some("nonpositive statistic, log undefined".to_string()))
    } else {
        let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
        let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        (fit_line(&xs, &ls), None)
    };
    Ok(ScalingReport {
        rows,
        fit,
        fit_flag,
        width,
        statistic: config.statistic,
        aggregate: config.aggregate,
        identity_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub n: usize,
    pub delta: f64,
    /// Frequency of `sup deviation >= sqrt(Δ)`.
    pub upper_frequency: f64,
    /// Frequency of `W1_x >= c2 · sqrt(Δ)` for the fixed direction `x`.
    pub lower_frequency: f64,
    /// `ln(upper_frequency) / (ΔN)`, absent when the frequency is 0.
    pub upper_log_rate: Option<f64>,
    pub lower_log_rate: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    pub width: WidthEstimate,
    pub direction: usize,
    pub c2: f64,
}

/// Default tail thresholds `{0.1, 1, 10} · max{width², ln⁴N} / N`.
pub fn default_delta_grid(width: f64, n: usize) -> Vec<f64> {
    let base = (width * width).max((n as f64).ln().powi(4)) / n as f64;
    [0.1, 1.0, 10.0].iter().map(|f| f * base).collect()
}

/// Upper- and lower-tail frequencies of the sup deviation and of one direction's W1.
pub fn run_tail(config: &ExperimentConfig) -> Result<TailReport> {
    config.validate()?;
    let a = config.build_index_set()?;
    let x = a
        .vectors()
        .get(config.direction)
        .ok_or_else(|| Error::InvalidParameter(format!("direction {} is outside the index set", config.direction)))?
        .clone();
    let x_norm = a.norms()[config.direction];
    let width = config.width(&a)?;
    let grid = config.sorted_grid();
    let preps = grid.iter().map(|&n| PreparedReference::new(&config.reference, n)).collect::<Result<Vec<_>>>()?;
    let results = config.run_trials(&grid, |k, _, _, gamma| {
        let stats = sup_stats(gamma, &a, &preps[k])?;
        let mut buf = Vec::new();
        sorted_projection(gamma, &x, &mut buf);
        Ok((stats.deviation, direction_w1(&preps[k], &buf, x_norm)?))
    })?;

    let mut rows = Vec::new();
    for (&n, trials) in grid.iter().zip(&results) {
        let mut deltas = config.delta_grid.clone().unwrap_or_else(|| default_delta_grid(width.estimate, n));
        deltas.sort_unstable_by(f64::total_cmp);
        let tf = trials.len() as f64;
        for delta in deltas {
            let root = delta.sqrt();
            let upper = trials.iter().filter(|t| t.0 >= root).count() as f64 / tf;
            let lower = trials.iter().filter(|t| t.1 >= config.c2 * root).count() as f64 / tf;
            let rate = |f: f64| (f > 0.0).then(|| f.ln() / (delta * n as f64));
            rows.push(TailRow {
                n,
                delta,
                upper_frequency: upper,
                lower_frequency: lower,
                upper_log_rate: rate(upper),
                lower_log_rate: rate(lower),
                trials: trials.len(),
            });
        }
    }
    Ok(TailReport { rows, width, direction: config.direction, c2: config.c2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundTrial {
    pub n: usize,
    pub trial: usize,
    pub w1_sup: f64,
    /// `sup_x |<Ḡ, x> − E <X, x>|` with `Ḡ` the row average.
    pub mean_sup: f64,
    /// `w1_sup >= mean_sup − 1e-9`.
    pub holds: bool,
    /// `w1_sup >= c_lower · width / sqrt(N)`.
    pub above_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundSummary {
    pub n: usize,
    pub trials: usize,
    pub threshold: f64,
    pub frequency_above: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthLowerBoundReport {
    pub trials: Vec<LowerBoundTrial>,
    pub summary: Vec<LowerBoundSummary>,
    pub width: WidthEstimate,
    pub c_lower: f64,
}

/// Checks `w1_sup >= sup_x |<Ḡ, x>|` per trial and the frequency of
/// `w1_sup >= c_lower · width / sqrt(N)`. Requires a symmetric index set.
pub fn run_width_lowerbound(config: &ExperimentConfig) -> Result<WidthLowerBoundReport> {
    config.validate()?;
    let a = config.build_index_set()?;
    if !a.is_symmetric() {
        return Err(Error::InvalidParameter("the width lower bound needs a symmetric index set".into()));
    }
    let width = config.width(&a)?;
    let grid = config.sorted_grid();
    let mean = config.reference.mean();
    let preps = grid.iter().map(|&n| PreparedReference::new(&config.reference, n)).collect::<Result<Vec<_>>>()?;
    let results = config.run_trials(&grid, |k, _, _, gamma| {
        let stats = sup_stats(gamma, &a, &preps[k])?;
        let g_bar = gamma.row_mean();
        let mean_sup = a
            .vectors()
            .iter()
            .zip(a.norms())
            .map(|(x, norm)| (x.iter().zip(&g_bar).map(|(p, q)| p * q).sum::<f64>() - norm * mean).abs())
            .fold(0.0, f64::max);
        Ok((stats.w1, mean_sup))
    })?;

    let mut trials = Vec::new();
    let mut summary = Vec::new();
    for (&n, per_n) in grid.iter().zip(&results) {
        let threshold = config.c_lower * width.estimate / (n as f64).sqrt();
        let start = trials.len();
        for (t, &(w1, mean_sup)) in per_n.iter().enumerate() {
            trials.push(LowerBoundTrial {
                n,
                trial: t,
                w1_sup: w1,
                mean_sup,
                holds: w1 >= mean_sup - DUALITY_SLACK,
                above_threshold: w1 >= threshold,
            });
        }
        let block = &trials[start..];
        summary.push(LowerBoundSummary {
            n,
            trials: block.len(),
            threshold,
            frequency_above: block.iter().filter(|t| t.above_threshold).count() as f64 / block.len() as f64,
            violations: block.iter().filter(|t| !t.holds).count(),
        });
    }
    Ok(WidthLowerBoundReport { trials, summary, width, c_lower: config.c_lower })
}

/// Outcome of fitting the norm-compatibility constant on one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub theta: f64,
    /// Least `B >= 0` with `‖Γz‖/√N <= B ‖z‖ + θ/√N` on every tested pair.
    pub fitted_b: f64,
    pub pairs_tested: usize,
    pub pairs_total: usize,
    pub b_target: Option<f64>,
    /// First tested pair violating the inequality at `b_target`. Index
    /// `|A|` denotes the origin.
    pub violating_pair: Option<(usize, usize)>,
}

/// Fits `B` over pairs of `A ∪ {0}`, subsampling (seeded) beyond
/// [`MAX_ASSUMPTION_PAIRS`]. The population norm of `<X, z>` is `‖z‖`.
pub fn check_assumption(
    gamma: &GaussianEnsemble,
    a: &IndexSet,
    theta: f64,
    b_target: Option<f64>,
    seed: u64,
) -> Result<AssumptionReport> {
    check_dims(gamma, a)?;
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::InvalidParameter("theta must be nonnegative".into()));
    }
    let d = gamma.d();
    let nf = gamma.n() as f64;
    let mut s = vec![0.0; d * d];
    for i in 0..gamma.n() {
        let row = gamma.row(i);
        for p in 0..d {
            for q in p..d {
                s[p * d + q] += row[p] * row[q];
            }
        }
    }
    for p in 0..d {
        for q in p..d {
            let v = s[p * d + q] / nf;
            s[p * d + q] = v;
            s[q * d + p] = v;
        }
    }

    let origin = vec![0.0; d];
    let m = a.len() + 1;
    let point = |i: usize| if i < a.len() { &a.vectors()[i] } else { &origin };
    let total = m * (m - 1) / 2;
    let linear: Vec<usize> = if total <= MAX_ASSUMPTION_PAIRS {
        (0..total).collect()
    } else {
        let mut rng = rng::stream(seed, Domain::Subsample, 0);
        let mut picked = index::sample(&mut rng, total, MAX_ASSUMPTION_PAIRS).into_vec();
        picked.sort_unstable();
        picked
    };
    let pairs = decode_pairs(&linear, m);
    let slack = theta / nf.sqrt();
    let values: Vec<Option<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let z: Vec<f64> = point(i).iter().zip(point(j)).map(|(x, y)| x - y).collect();
            let pop = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if pop == 0.0 {
                return None;
            }
            let quad: f64 = s.chunks_exact(d).zip(&z).map(|(row, zi)| zi * row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).sum();
            Some((quad.max(0.0).sqrt(), pop))
        })
        .collect();

    let mut fitted_b = 0.0f64;
    let mut violating_pair = None;
    for (&(i, j), v) in pairs.iter().zip(&values) {
        let Some((emp, pop)) = *v else { continue };
        fitted_b = fitted_b.max((emp - slack) / pop);
        if violating_pair.is_none() && b_target.is_some_and(|b| emp > b * pop + slack) {
            violating_pair = Some((i, j));
        }
    }
    Ok(AssumptionReport { theta, fitted_b, pairs_tested: pairs.len(), pairs_total: total, b_target, violating_pair })
}

/// Maps sorted linear indices over `{(i, j) : i < j < m}` (row-major) to pairs.
fn decode_pairs(linear: &[usize], m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(linear.len());
    let mut row = 0;
    let mut row_start = 0;
    for &k in linear {
        while k >= row_start + (m - 1 - row) {
            row_start += m - 1 - row;
            row += 1;
        }
        out.push((row, row + 1 + (k - row_start)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionRow {
    pub n: usize,
    pub trial: usize,
    pub theta: f64,
    pub fitted_b: f64,
    pub pairs_tested: usize,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionRunReport {
    pub rows: Vec<AssumptionRow>,
    pub width: WidthEstimate,
}

/// [`check_assumption`] on every trial ensemble.
pub fn run_assumption(config: &ExperimentConfig) -> Result<AssumptionRunReport> {
    config.validate()?;
    let a = config.build_index_set()?;
    let width = config.width(&a)?;
    let theta = config.theta_width_factor.map_or(config.theta, |f| f * width.estimate);
    let grid = config.sorted_grid();
    let results = config.run_trials(&grid, |k, n, t, gamma| {
        let r = check_assumption(gamma, &a, theta, config.b_target, config.trial_seed(k, t))?;
        Ok(AssumptionRow {
            n,
            trial: t,
            theta,
            fitted_b: r.fitted_b,
            pairs_tested: r.pairs_tested,
            violated: r.violating_pair.is_some(),
        })
    })?;
    Ok(AssumptionRunReport { rows: results.into_iter().flatten().collect(), width })
}

/// Gap between the exact W1 and the L¹ quantile deviation of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResidual {
    pub residual: f64,
    /// `10 ‖X‖_p / N^{1 − 1/p}`.
    pub bound: f64,
    pub holds: bool,
}

pub fn quantile_shift_residual(s: &Sample, dist: &ReferenceDistribution, p: f64) -> Result<ShiftResidual> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    let norm = dist.lp_norm(p)?;
    let n = s.len();
    let w1 = w1_empirical_analytic(s, dist)?.value;
    let dev = l1_quantile_deviation(s, &quantile_vector(n, dist, 1.0)?)?;
    let residual = (w1 - dev).abs();
    let bound = SHIFT_BOUND_CONSTANT * norm / (n as f64).powf(1.0 - 1.0 / p);
    Ok(ShiftResidual { residual, bound, holds: residual <= bound })
}

/// One ensemble's Lipschitz-class deviation against its W1 supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzCheck {
    /// `max_{φ, x} (1/N) Σ φ(<X_i, x>) − E φ(<X, x>)`.
    pub max_gap: f64,
    pub w1_sup: f64,
    /// `max_gap <= w1_sup + 1e-9`.
    pub duality_holds: bool,
    /// `max_gap / w1_sup`.
    pub tightness: Option<f64>,
    /// `max_x |(1/N) Σ <X_i, x> − E <X, x>|`.
    pub mean_sup: f64,
    /// `max_gap / mean_sup`.
    pub contraction_ratio: Option<f64>,
}

/// Evaluates `±id`, `±clamp` and `family_size` random 1-Lipschitz functions,
/// drawn once over the range of all projections, on every direction of `A`.
pub fn lipschitz_sup_check(
    gamma: &GaussianEnsemble,
    a: &IndexSet,
    dist: &ReferenceDistribution,
    family_size: usize,
    seed: u64,
) -> Result<LipschitzCheck> {
    check_dims(gamma, a)?;
    let prep = PreparedReference::new(dist, gamma.n())?;
    let mut projections = Vec::with_capacity(a.len());
    for x in a.vectors() {
        let mut buf = Vec::with_capacity(gamma.n());
        sorted_projection(gamma, x, &mut buf);
        projections.push(buf);
    }
    let lo = projections.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = projections.iter().map(|p| p[p.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let family = lipschitz_family(lo, hi, family_size, seed)?;
    let nf = gamma.n() as f64;

    let mut max_gap = f64::NEG_INFINITY;
    let mut w1 = 0.0f64;
    let mut mean_sup = 0.0f64;
    for (sorted, &norm) in projections.iter().zip(a.norms()) {
        w1 = w1.max(direction_w1(&prep, sorted, norm)?);
        if norm == 0.0 {
            max_gap = max_gap.max(0.0);
            continue;
        }
        let law = dist.scaled(norm)?;
        mean_sup = mean_sup.max((sorted.iter().sum::<f64>() / nf - law.mean()).abs());
        for phi in &family {
            max_gap = max_gap.max(phi.mean_on_sorted(sorted) - phi.expectation(&law));
        }
    }
    Ok(LipschitzCheck {
        max_gap,
        w1_sup: w1,
        duality_holds: max_gap <= w1 + DUALITY_SLACK,
        tightness: (w1 > 0.0).then(|| max_gap / w1),
        mean_sup,
        contraction_ratio: (mean_sup > 0.0).then(|| max_gap / mean_sup),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzRow {
    pub n: usize,
    pub trial: usize,
    #[serde(flatten)]
    pub check: LipschitzCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzRunReport {
    pub rows: Vec<LipschitzRow>,
    pub violations: usize,
    pub median_contraction_ratio: Option<f64>,
}

/// [`lipschitz_sup_check`] on every trial ensemble.
pub fn run_lipschitz(config: &ExperimentConfig) -> Result<LipschitzRunReport> {
    config.validate()?;
    let a = config.build_index_set()?;
    let grid = config.sorted_grid();
    let results = config.run_trials(&grid, |k, n, t, gamma| {
        let check = lipschitz_sup_check(gamma, &a, &config.reference, config.family_size, config.trial_seed(k, t))?;
        Ok(LipschitzRow { n, trial: t, check })
    })?;
    let rows: Vec<LipschitzRow> = results.into_iter().flatten().collect();
    let violations = rows.iter().filter(|r| !r.check.duality_holds).count();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.check.contraction_ratio).collect();
    let median_contraction_ratio = (!ratios.is_empty()).then(|| median(&ratios));
    Ok(LipschitzRunReport { rows, violations, median_contraction_ratio })
}

/// Chaining bounds and the Monte Carlo width of one index set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma2Report {
    pub points: usize,
    pub dim: usize,
    pub gamma2_upper: f64,
    pub sudakov_lower: f64,
    pub width: WidthEstimate,
    pub depth: usize,
}

pub fn run_gamma2(config: &ExperimentConfig) -> Result<Gamma2Report> {
    if config.width_trials < 2 {
        return Err(Error::InvalidParameter("width_trials must be at least 2".into()));
    }
    let a = config.build_index_set()?;
    let seq = chaining::build_admissible(a.vectors())?;
    Ok(Gamma2Report {
        points: a.len(),
        dim: a.dim(),
        gamma2_upper: seq.chaining_sum(),
        sudakov_lower: chaining::sudakov_lower(a.vectors())?,
        width: config.width(&a)?,
        depth: seq.depth(),
    })
}
