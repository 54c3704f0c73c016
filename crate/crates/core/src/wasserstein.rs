//! One-dimensional Wasserstein-1 distances.
//!
//! The primary route integrates `|F_N^{-1}(u) - Q(u)|` cell by cell. On the
//! cell `[(i-1)/N, i/N]` the empirical quantile is the constant `v_i` (the
//! `i`-th order statistic) and `Q` is monotone, so the integrand changes sign
//! at most once, at `u* = F(v_i)` clamped to the cell. Each signed piece is a
//! difference of the partial quantile integral `G(u) = ∫_0^u Q`, which is known
//! in closed form for every supported law.
//!
//! [`w1_cdf_quadrature`] evaluates the same distance as `∫ |F_N(t) - F(t)| dt`
//! by adaptive quadrature and serves as an independent cross-check.

use rand::Rng;

use crate::distribution::ReferenceDistribution;
use crate::empirical::{unit_quantiles, Sample};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::rng::{self, Domain};

/// How a [`W1Result`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum W1Method {
    QuantileExact,
    CdfQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct W1Result {
    pub value: f64,
    pub method: W1Method,
    pub estimated_error: f64,
}

/// Per-`N` cache of `G(i/N)` and of the unit quantile vector `Q(i/(N+1))`,
/// reused across the many samples of one experiment.
#[derive(Debug, Clone)]
pub struct PreparedReference {
    dist: ReferenceDistribution,
    n: usize,
    cell_partials: Vec<f64>,
    unit_quantiles: Vec<f64>,
}

impl PreparedReference {
    pub fn new(dist: &ReferenceDistribution, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        let nf = n as f64;
        let cell_partials = (0..=n).map(|i| dist.partial_mean(i as f64 / nf)).collect();
        Ok(Self { dist: dist.clone(), n, cell_partials, unit_quantiles: unit_quantiles(n, dist) })
    }

    pub fn distribution(&self) -> &ReferenceDistribution {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `Q(i/(N+1))` for `i = 1..=N`.
    pub fn unit_quantiles(&self) -> &[f64] {
        &self.unit_quantiles
    }

    /// W1 between the empirical law of `sorted` and the law of `scale * X`.
    pub fn w1_sorted(&self, sorted: &[f64], scale: f64) -> Result<W1Result> {
        if sorted.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: sorted.len() });
        }
        let (value, err) = if scale == 1.0 {
            self.cells(sorted.iter().copied())
        } else {
            let (v, e) = self.cells(sorted.iter().map(|x| x / scale));
            (scale * v, scale * e)
        };
        if !value.is_finite() {
            return Err(Error::Numerical("W1 overflowed".into()));
        }
        Ok(W1Result { value, method: W1Method::QuantileExact, estimated_error: err })
    }

    fn cells(&self, sorted: impl Iterator<Item = f64>) -> (f64, f64) {
        let nf = self.n as f64;
        let width = 1.0 / nf;
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for (i, v) in sorted.enumerate() {
            let a = i as f64 / nf;
            let b = (i + 1) as f64 / nf;
            let ga = self.cell_partials[i];
            let gb = self.cell_partials[i + 1];
            let (fv, gv) = self.dist.lower_partial_expectation(v);
            let cell = if fv <= a {
                (gb - ga) - v * width
            } else if fv >= b {
                v * width - (gb - ga)
            } else {
                v * (fv - a) - (gv - ga) + (gb - gv) - v * (b - fv)
            };
            total += cell;
            magnitude += v.abs() * width + ga.abs() + gb.abs() + 2.0 * gv.abs();
        }
        (total.max(0.0), 4.0 * f64::EPSILON * magnitude)
    }

    /// `(1/N) Σ |sorted[i] - scale * Q(i/(N+1))|`.
    pub fn deviation_sorted(&self, sorted: &[f64], scale: f64) -> Result<f64> {
        if sorted.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: sorted.len() });
        }
        Ok(crate::empirical::sorted_deviation(sorted, &self.unit_quantiles, scale))
    }
}

/// Exact W1 between the empirical law of `s` and `dist`.
pub fn w1_empirical_analytic(s: &Sample, dist: &ReferenceDistribution) -> Result<W1Result> {
    PreparedReference::new(dist, s.len())?.w1_sorted(s.sorted(), 1.0)
}

/// Probability mass left out of the quadrature window in each tail.
const TAIL_MASS: f64 = 1e-10;
const QUADRATURE_REL_TOL: f64 = 1e-11;
const MAX_SEGMENTS_PER_PIECE: usize = 400;

/// W1 as `∫ |F_N(t) - F(t)| dt` by adaptive quadrature.
///
/// The window `[min(v_1, Q(1e-10)), max(v_N, Q(1 - 1e-10))]` is split at every
/// sample point and at every non-smooth point of `F`; outside the window the
/// integrand is `F` (left) or `1 - F` (right) and the two tails are added in
/// closed form through partial quantile means.
pub fn w1_cdf_quadrature(s: &Sample, dist: &ReferenceDistribution) -> Result<W1Result> {
    let sorted = s.sorted();
    let n = sorted.len();
    let nf = n as f64;
    let lo = sorted[0].min(dist.quantile_unchecked(TAIL_MASS));
    let hi = sorted[n - 1].max(dist.quantile_unchecked(1.0 - TAIL_MASS));

    let f_lo = dist.cdf_unchecked(lo);
    let left_tail = (lo * f_lo - dist.interval_quantile_mean(0.0, f_lo)?).max(0.0);
    let f_hi = dist.cdf_unchecked(hi);
    let right_tail = (dist.interval_quantile_mean(f_hi, 1.0)? - hi * (1.0 - f_hi)).max(0.0);

    let mut knots: Vec<f64> = sorted.to_vec();
    knots.extend(dist.breakpoints().into_iter().filter(|t| *t > lo && *t < hi));
    knots.push(lo);
    knots.push(hi);
    knots.sort_unstable_by(f64::total_cmp);
    knots.dedup();

    let tol = QUADRATURE_REL_TOL * (1.0 + (hi - lo)) / (knots.len() as f64);
    let mut value = left_tail + right_tail;
    let mut error = 0.0;
    let mut failed = false;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        // F_N is constant on (a, b): the fraction of sample points <= a.
        let level = sorted.partition_point(|&v| v <= a) as f64 / nf;
        let piece = quadrature::integrate(|t| (level - dist.cdf_unchecked(t)).abs(), a, b, tol, MAX_SEGMENTS_PER_PIECE);
        match piece {
            Ok(e) => {
                value += e.value;
                error += e.error;
            }
            Err(quadrature::NonConvergence(e)) => {
                value += e.value;
                error += e.error;
                failed = true;
            }
        }
    }
    if failed {
        return Err(Error::QuadratureNonConvergence { partial: value, error_estimate: error });
    }
    if !(value.is_finite() && error.is_finite()) {
        return Err(Error::Numerical(format!("quadrature over [{lo:e}, {hi:e}] overflowed")));
    }
    Ok(W1Result { value, method: W1Method::CdfQuadrature, estimated_error: error })
}

/// W1 between two empirical laws, integrating both step quantile functions
/// over the common refinement of `{i/N_a}` and `{j/N_b}`.
pub fn w1_empirical_empirical(a: &Sample, b: &Sample) -> W1Result {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len(), xb.len());
    let value = if na == nb {
        xa.iter().zip(xb).map(|(x, y)| (x - y).abs()).sum::<f64>() / na as f64
    } else {
        // Breakpoints i/na and j/nb live on the integer grid k / (na * nb).
        let denom = (na as f64) * (nb as f64);
        let (mut i, mut j) = (0usize, 0usize);
        let mut pos = 0u128;
        let mut total = 0.0;
        while i < na && j < nb {
            let end_a = (i as u128 + 1) * nb as u128;
            let end_b = (j as u128 + 1) * na as u128;
            let end = end_a.min(end_b);
            total += (xa[i] - xb[j]).abs() * ((end - pos) as f64);
            pos = end;
            if end == end_a {
                i += 1;
            }
            if end == end_b {
                j += 1;
            }
        }
        total / denom
    };
    W1Result { value, method: W1Method::QuantileExact, estimated_error: 4.0 * f64::EPSILON * value }
}

/// A 1-Lipschitz piecewise-linear function `R -> R`.
///
/// `slopes[0]` applies left of the first breakpoint, `slopes[k]` on
/// `[breakpoints[k-1], breakpoints[k])`, and the last slope to the right of the
/// last breakpoint. `offset` is the value at the first breakpoint (or at 0 when
/// there are none).
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTestFunction {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    knot_values: Vec<f64>,
    offset: f64,
}

impl LipschitzTestFunction {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, offset: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::LengthMismatch { expected: breakpoints.len() + 1, actual: slopes.len() });
        }
        if !offset.is_finite() || breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("lipschitz function parameter"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("breakpoints must be strictly increasing".into()));
        }
        if let Some(s) = slopes.iter().find(|s| !(s.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("slope {s} exceeds 1 in absolute value")));
        }
        let mut knot_values = Vec::with_capacity(breakpoints.len());
        let mut acc = offset;
        for (k, t) in breakpoints.iter().enumerate() {
            if k > 0 {
                acc += slopes[k] * (t - breakpoints[k - 1]);
            }
            knot_values.push(acc);
        }
        Ok(Self { breakpoints, slopes, knot_values, offset })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![0.0], c)
    }

    pub fn identity() -> Self {
        Self::new(Vec::new(), vec![1.0], 0.0).expect("valid")
    }

    pub fn negated_identity() -> Self {
        Self::new(Vec::new(), vec![-1.0], 0.0).expect("valid")
    }

    /// `x ↦ clamp(x, -m, m)`.
    pub fn clamp(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("clamp level must be positive, got {m}")));
        }
        Self::new(vec![-m, m], vec![0.0, 1.0, 0.0], -m)
    }

    /// `x ↦ -clamp(x, -m, m)`.
    pub fn negated_clamp(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("clamp level must be positive, got {m}")));
        }
        Self::new(vec![-m, m], vec![0.0, -1.0, 0.0], m)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Re-checks the 1-Lipschitz property of the representation.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.slopes.iter().find(|s| !(s.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("slope {s} exceeds 1 in absolute value")));
        }
        Ok(())
    }

    /// Anchor point and value of the linear piece `j`.
    fn anchor(&self, j: usize) -> (f64, f64) {
        if self.breakpoints.is_empty() {
            (0.0, self.offset)
        } else {
            let k = j.saturating_sub(1);
            (self.breakpoints[k], self.knot_values[k])
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let j = self.breakpoints.partition_point(|&t| t <= x);
        let (t, v) = self.anchor(j);
        v + self.slopes[j] * (x - t)
    }

    /// Mean of `φ` over a nondecreasing slice, in one merge pass.
    pub fn mean_on_sorted(&self, sorted: &[f64]) -> f64 {
        let mut j = 0;
        let mut total = 0.0;
        for &x in sorted {
            while j < self.breakpoints.len() && self.breakpoints[j] <= x {
                j += 1;
            }
            let (t, v) = self.anchor(j);
            total += v + self.slopes[j] * (x - t);
        }
        total / sorted.len() as f64
    }

    /// `E φ(X)` for `X ~ dist`, exact: on the piece where `φ` is affine the
    /// expectation reduces to masses and partial expectations of `dist`.
    pub fn expectation(&self, dist: &ReferenceDistribution) -> f64 {
        let k = self.breakpoints.len();
        let mut prev = (0.0, 0.0); // (F, E[X; X <= t]) at t = -inf
        let mut total = 0.0;
        for j in 0..=k {
            let next = if j < k { dist.lower_partial_expectation(self.breakpoints[j]) } else { (1.0, dist.mean()) };
            let (t, v) = self.anchor(j);
            let s = self.slopes[j];
            total += (v - s * t) * (next.0 - prev.0) + s * (next.1 - prev.1);
            prev = next;
        }
        total
    }
}

/// `(1/N) Σ φ(v_i) - E φ(X)`.
pub fn lipschitz_gap(s: &Sample, dist: &ReferenceDistribution, phi: &LipschitzTestFunction) -> Result<f64> {
    phi.validate()?;
    Ok(phi.mean_on_sorted(s.sorted()) - phi.expectation(dist))
}

/// Maximum number of breakpoints of a random family member.
pub const MAX_FAMILY_BREAKPOINTS: usize = 16;

/// A finite family of 1-Lipschitz test functions: `±id`, `±clamp(·; m)` with
/// `m` half the larger endpoint magnitude of `[lo, hi]`, and `size` random
/// piecewise-linear members with up to 16 breakpoints drawn uniformly in
/// `[lo, hi]` and slopes uniform on `[-1, 1]`.
pub fn lipschitz_family(lo: f64, hi: f64, size: usize, seed: u64) -> Result<Vec<LipschitzTestFunction>> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!("invalid family range [{lo}, {hi}]")));
    }
    let m = 0.5 * lo.abs().max(hi.abs());
    let m = if m > 0.0 { m } else { 1.0 };
    let mut family = vec![
        LipschitzTestFunction::identity(),
        LipschitzTestFunction::negated_identity(),
        LipschitzTestFunction::clamp(m)?,
        LipschitzTestFunction::negated_clamp(m)?,
    ];
    let mut rng = rng::stream(seed, Domain::Lipschitz, 0);
    for _ in 0..size {
        let count = rng.random_range(1..=MAX_FAMILY_BREAKPOINTS);
        let mut bps: Vec<f64> = (0..count).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        bps.sort_unstable_by(f64::total_cmp);
        bps.dedup();
        let slopes = (0..=bps.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        family.push(LipschitzTestFunction::new(bps, slopes, 0.0)?);
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::quantile_vector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_sample(n: usize, seed: u64) -> Sample {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Sample::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn single_atom_against_std_normal_is_mean_abs() {
        let s = Sample::new(vec![0.0]).unwrap();
        let d = ReferenceDistribution::std_normal();
        let exact = w1_empirical_analytic(&s, &d).unwrap();
        assert_eq!(exact.method, W1Method::QuantileExact);
        assert!((exact.value - 0.797_884_560_802_865_4).abs() < 1e-12);
        let quad = w1_cdf_quadrature(&s, &d).unwrap();
        assert!((quad.value - 0.797_884_560_802_865_4).abs() < 1e-9);
    }

    #[test]
    fn overflow_is_a_numerical_error() {
        let s = Sample::new(vec![1e308, -1e308]).unwrap();
        let d = ReferenceDistribution::std_normal();
        assert!(matches!(w1_cdf_quadrature(&s, &d), Err(Error::Numerical(_))));
    }

    #[test]
    fn uniform_examples() {
        let u = ReferenceDistribution::uniform01();
        let half = Sample::new(vec![0.5]).unwrap();
        assert!((w1_empirical_analytic(&half, &u).unwrap().value - 0.25).abs() < 1e-15);
        assert!((w1_cdf_quadrature(&half, &u).unwrap().value - 0.25).abs() < 1e-8);
        let zero = Sample::new(vec![0.0]).unwrap();
        let quad = w1_cdf_quadrature(&zero, &u).unwrap();
        assert_eq!(quad.method, W1Method::CdfQuadrature);
        assert!((quad.value - 0.5).abs() < 1e-8);
        assert!((w1_empirical_analytic(&zero, &u).unwrap().value - 0.5).abs() < 1e-15);

        let grid = Sample::new(quantile_vector(4, &u, 1.0).unwrap().values().to_vec()).unwrap();
        let a = w1_empirical_analytic(&grid, &u).unwrap().value;
        let b = w1_cdf_quadrature(&grid, &u).unwrap().value;
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn gaussian_sample_methods_agree() {
        let s = gaussian_sample(512, 7);
        let d = ReferenceDistribution::std_normal();
        let a = w1_empirical_analytic(&s, &d).unwrap();
        let b = w1_cdf_quadrature(&s, &d).unwrap();
        assert!((a.value - b.value).abs() <= 1e-8 * a.value, "{a:?} vs {b:?}");
        assert!(a.estimated_error <= 1e-10 * (1.0 + a.value));
    }

    #[test]
    fn empirical_empirical_examples() {
        let a = Sample::new(vec![0.0, 1.0]).unwrap();
        let b = Sample::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(w1_empirical_empirical(&a, &a).value, 0.0);
        assert_eq!(w1_empirical_empirical(&a, &b).value, 0.0);
        let single = Sample::new(vec![0.0]).unwrap();
        assert_eq!(w1_empirical_empirical(&single, &a).value, 0.5);
        // Cross-check against the quadrature route with an empirical reference.
        let reference = ReferenceDistribution::empirical(&[0.0, 1.0]).unwrap();
        assert!((w1_cdf_quadrature(&single, &reference).unwrap().value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn unequal_lengths_match_analytic_route() {
        let a = gaussian_sample(7, 1);
        let b = gaussian_sample(12, 2);
        let via_refinement = w1_empirical_empirical(&a, &b).value;
        let via_reference = w1_empirical_analytic(&a, &ReferenceDistribution::empirical(b.values()).unwrap()).unwrap().value;
        assert!((via_refinement - via_reference).abs() < 1e-13);
    }

    #[test]
    fn lipschitz_examples() {
        let d = ReferenceDistribution::std_normal();
        let s = Sample::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(lipschitz_gap(&s, &d, &LipschitzTestFunction::constant(0.0).unwrap()).unwrap(), 0.0);
        assert_eq!(lipschitz_gap(&s, &d, &LipschitzTestFunction::identity()).unwrap(), 0.0);
        let two = Sample::new(vec![2.0]).unwrap();
        assert_eq!(lipschitz_gap(&two, &d, &LipschitzTestFunction::identity()).unwrap(), 2.0);
        assert!(LipschitzTestFunction::new(vec![0.0], vec![0.5, 1.5], 0.0).is_err());
        assert!(LipschitzTestFunction::new(vec![1.0, 0.0], vec![0.5, 0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn clamp_evaluates_and_integrates() {
        let c = LipschitzTestFunction::clamp(1.0).unwrap();
        assert_eq!(c.eval(-3.0), -1.0);
        assert_eq!(c.eval(0.25), 0.25);
        assert_eq!(c.eval(7.0), 1.0);
        // E clamp(U, -1, 1) = 1/2 for U uniform on [0, 1].
        assert!((c.expectation(&ReferenceDistribution::uniform01()) - 0.5).abs() < 1e-15);
        // Symmetric law: E clamp(g) = 0.
        assert!(c.expectation(&ReferenceDistribution::std_normal()).abs() < 1e-15);
        let u = ReferenceDistribution::uniform01();
        let tent = LipschitzTestFunction::new(vec![0.5], vec![1.0, -1.0], 0.5).unwrap();
        assert!((tent.expectation(&u) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn expectation_matches_quadrature_of_phi_of_quantile() {
        let d = ReferenceDistribution::std_normal();
        for phi in lipschitz_family(-2.0, 2.0, 10, 3).unwrap() {
            let exact = phi.expectation(&d);
            let quad = quadrature::integrate(|u: f64| phi.eval(d.quantile_unchecked(u)), 1e-12, 1.0 - 1e-12, 1e-11, 20_000).unwrap();
            assert!((exact - quad.value).abs() < 1e-7, "{exact} vs {}", quad.value);
        }
    }

    #[test]
    fn mean_on_sorted_matches_pointwise_eval() {
        let s = gaussian_sample(100, 9);
        for phi in lipschitz_family(-2.0, 2.0, 8, 1).unwrap() {
            let direct = s.values().iter().map(|&x| phi.eval(x)).sum::<f64>() / 100.0;
            assert!((phi.mean_on_sorted(s.sorted()) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn duality_on_generated_family() {
        let d = ReferenceDistribution::std_normal();
        for seed in 0..20 {
            let s = gaussian_sample(40, seed);
            let w = w1_empirical_analytic(&s, &d).unwrap().value;
            let (lo, hi) = (s.sorted()[0], s.sorted()[39]);
            for phi in lipschitz_family(lo, hi, 32, seed).unwrap() {
                assert!(lipschitz_gap(&s, &d, &phi).unwrap() <= w + 1e-9);
            }
        }
    }

    #[test]
    fn triangle_bound_for_paired_linear_functionals() {
        // f = <G, x>, h = <G, y> with x = e1, y = 0.3 e2: marginals N(0, 1),
        // N(0, 0.09), N(0, 1.09); E|h| = 0.3 * sqrt(2/pi).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = 200;
            let g: Vec<(f64, f64)> = (0..n).map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
            let f: Vec<f64> = g.iter().map(|p| p.0).collect();
            let h: Vec<f64> = g.iter().map(|p| 0.3 * p.1).collect();
            let fh: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + b).collect();
            let lhs = w1_empirical_analytic(&Sample::new(fh).unwrap(), &ReferenceDistribution::scaled_normal(1.09f64.sqrt()).unwrap()).unwrap().value;
            let wf = w1_empirical_analytic(&Sample::new(f).unwrap(), &ReferenceDistribution::std_normal()).unwrap().value;
            let mean_abs_h = h.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            assert!(lhs <= wf + mean_abs_h + 0.3 * crate::normal::mean_abs() + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn methods_agree_on_random_cases(seed in 0u64..10_000, n in 1usize..128, kind in 0u8..4) {
            let d = match kind {
                0 => ReferenceDistribution::std_normal(),
                1 => ReferenceDistribution::scaled_normal(0.2 + (seed % 7) as f64).unwrap(),
                2 => ReferenceDistribution::uniform01(),
                _ => ReferenceDistribution::empirical(gaussian_sample(1 + (seed % 17) as usize, seed + 1).values()).unwrap(),
            };
            let s = gaussian_sample(n, seed);
            let a = w1_empirical_analytic(&s, &d).unwrap().value;
            let b = w1_cdf_quadrature(&s, &d).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a));
        }

        #[test]
        fn empirical_metric_axioms(s1 in 0u64..1000, n1 in 1usize..30, n2 in 1usize..30, n3 in 1usize..30) {
            let a = gaussian_sample(n1, s1);
            let b = gaussian_sample(n2, s1 + 1);
            let c = gaussian_sample(n3, s1 + 2);
            let ab = w1_empirical_empirical(&a, &b).value;
            prop_assert!((ab - w1_empirical_empirical(&b, &a).value).abs() <= 1e-12);
            let ac = w1_empirical_empirical(&a, &c).value;
            let cb = w1_empirical_empirical(&c, &b).value;
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn scale_equivariance(seed in 0u64..1000, n in 1usize..200, c in 0.05f64..20.0) {
            let s = gaussian_sample(n, seed);
            let scaled = Sample::new(s.values().iter().map(|v| c * v).collect()).unwrap();
            let lhs = w1_empirical_analytic(&scaled, &ReferenceDistribution::scaled_normal(c).unwrap()).unwrap().value;
            let rhs = c * w1_empirical_analytic(&s, &ReferenceDistribution::std_normal()).unwrap().value;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }
}
