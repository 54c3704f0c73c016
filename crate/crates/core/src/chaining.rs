//! Admissible sequences on finite point sets in Euclidean space, the greedy
//! γ₂ upper bound they induce, and a constant-free Sudakov lower bound.
//!
//! Level `s` of the sequence holds at most `2^{2^s}` centers (one at `s = 0`).
//! Centers come from a single farthest-point traversal, so the levels are
//! nested prefixes of the traversal order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSequence {
    /// `levels[s]` lists the point indices of the level-`s` centers.
    levels: Vec<Vec<usize>>,
    /// `assignment[s][i]` is the nearest level-`s` center of point `i`.
    assignment: Vec<Vec<usize>>,
    /// `distances[s][i]` is the distance from point `i` to that center.
    distances: Vec<Vec<f64>>,
}

impl AdmissibleSequence {
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assignment
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `sup_i Σ_s 2^{s/2} dist(p_i, π_s p_i)`.
    pub fn chaining_sum(&self) -> f64 {
        let n = self.assignment.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                self.distances
                    .iter()
                    .enumerate()
                    .map(|(s, d)| 2f64.powf(s as f64 / 2.0) * d[i])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Cardinality bound of level `s`: 1 for `s = 0`, else `2^{2^s}` (saturating).
pub fn level_capacity(s: usize) -> usize {
    match s {
        0 => 1,
        s if s >= 6 => usize::MAX,
        s => 1usize << (1usize << s),
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn validate(points: &[Vec<f64>]) -> Result<()> {
    let dim = points.first().ok_or(Error::Empty("point set"))?.len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("point coordinate"));
    }
    Ok(())
}

/// Greedy farthest-point sequence started at point 0.
pub fn build_admissible(points: &[Vec<f64>]) -> Result<AdmissibleSequence> {
    validate(points)?;
    Ok(traverse(points, 0))
}

/// Same construction started at a seeded random point.
pub fn build_admissible_seeded(points: &[Vec<f64>], seed: u64) -> Result<AdmissibleSequence> {
    validate(points)?;
    let start = rng::stream(seed, Domain::Chaining, 0).random_range(0..points.len());
    Ok(traverse(points, start))
}

fn traverse(points: &[Vec<f64>], start: usize) -> AdmissibleSequence {
    let n = points.len();
    let mut nearest: Vec<usize> = vec![start; n];
    let mut nearest_dist: Vec<f64> = points.iter().map(|p| dist(p, &points[start])).collect();
    let mut order = vec![start];
    let mut seq = AdmissibleSequence { levels: Vec::new(), assignment: Vec::new(), distances: Vec::new() };
    let mut s = 0;
    loop {
        let capacity = level_capacity(s);
        while order.len() < capacity {
            // Farthest point from the current centers; ties go to the smallest index.
            let (far, far_dist) = nearest_dist
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
            if far_dist <= 0.0 {
                break;
            }
            order.push(far);
            for (i, p) in points.iter().enumerate() {
                let d = dist(p, &points[far]);
                if d < nearest_dist[i] || (d == nearest_dist[i] && far < nearest[i]) {
                    nearest_dist[i] = d;
                    nearest[i] = far;
                }
            }
        }
        seq.levels.push(order.clone());
        seq.assignment.push(nearest.clone());
        seq.distances.push(nearest_dist.clone());
        if nearest_dist.iter().all(|&d| d == 0.0) {
            return seq;
        }
        s += 1;
    }
}

/// Upper bound on γ₂ from the greedy admissible sequence.
pub fn gamma2_upper(points: &[Vec<f64>]) -> Result<f64> {
    Ok(build_admissible(points)?.chaining_sum())
}

/// Number of geometric scales scanned by [`sudakov_lower`].
pub const SUDAKOV_SCALES: usize = 64;
const DENSE_DISTANCE_LIMIT: usize = 2048;

/// `max_ε ε · sqrt(ln P(ε))` over 64 geometric scales between the smallest
/// positive pairwise distance and the diameter, where `P(ε)` is the size of a
/// greedy (index-order) packing with pairwise separation at least `ε`.
pub fn sudakov_lower(points: &[Vec<f64>]) -> Result<f64> {
    validate(points)?;
    let n = points.len();
    let dense: Option<Vec<f64>> = (n <= DENSE_DISTANCE_LIMIT).then(|| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(&points[i], &points[j]);
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    });
    let pair = |i: usize, j: usize| match &dense {
        Some(m) => m[i * n + j],
        None => dist(&points[i], &points[j]),
    };

    let (mut min_pos, mut diam) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let d = pair(i, j);
            if d > 0.0 {
                min_pos = min_pos.min(d);
                diam = diam.max(d);
            }
        }
    }
    if diam == 0.0 {
        return Ok(0.0);
    }

    let ratio = diam / min_pos;
    let mut best = 0.0f64;
    let mut packed: Vec<usize> = Vec::with_capacity(n);
    for k in 0..SUDAKOV_SCALES {
        let eps = if k + 1 == SUDAKOV_SCALES || ratio == 1.0 {
            diam
        } else {
            min_pos * ratio.powf(k as f64 / (SUDAKOV_SCALES - 1) as f64)
        };
        packed.clear();
        for i in 0..n {
            if packed.iter().all(|&p| pair(i, p) >= eps) {
                packed.push(i);
            }
        }
        best = best.max(eps * (packed.len() as f64).ln().sqrt());
        if ratio == 1.0 {
            break;
        }
    }
    Ok(best)
}
