//! UMAP to two dimensions: fuzzy k-NN graph plus a seeded SGD layout.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::knn::{knn_graph, KnnGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SMOOTH_KNN_ITERATIONS: usize = 64;
const SIGMA_MIN: f64 = 1e-3;
const SIGMA_MAX: f64 = 1e3;
const GRADIENT_CLIP: f64 = 4.0;
const INIT_RANGE: f64 = 10.0;
/// Spread of the target membership curve.
const SPREAD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct UmapParams<T> {
    pub n_neighbors: usize,
    pub min_dist: T,
    pub n_epochs: usize,
    pub learning_rate: T,
    /// Repulsive samples drawn per attractive update.
    pub negative_samples: usize,
    pub seed: u64,
    /// Derived from `min_dist`; see [`UmapParams::with_min_dist`].
    pub curve_a: T,
    pub curve_b: T,
}

impl<T: Scalar> UmapParams<T> {
    /// Defaults: 15 neighbors, `min_dist` 0.1, 200 epochs, learning rate 1,
    /// 5 negative samples.
    pub fn new(seed: u64) -> Self {
        let min_dist = 0.1;
        let (a, b) = fit_curve(min_dist, SPREAD);
        Self {
            n_neighbors: 15,
            min_dist: T::lit(min_dist),
            n_epochs: 200,
            learning_rate: T::one(),
            negative_samples: 5,
            seed,
            curve_a: T::lit(a),
            curve_b: T::lit(b),
        }
    }

    /// Sets `min_dist` and refits the curve parameters.
    pub fn with_min_dist(mut self, min_dist: T) -> Self {
        let (a, b) = fit_curve(min_dist.as_f64(), SPREAD);
        self.min_dist = min_dist;
        self.curve_a = T::lit(a);
        self.curve_b = T::lit(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(Error::Param("n_neighbors must be at least 2".into()));
        }
        if self.n_epochs == 0 || self.negative_samples == 0 {
            return Err(Error::Param(
                "epochs and negative samples must be positive".into(),
            ));
        }
        if !(self.min_dist >= T::zero() && self.learning_rate > T::zero()) {
            return Err(Error::Param(
                "min_dist must be >= 0 and learning rate > 0".into(),
            ));
        }
        if !(self.curve_a > T::zero() && self.curve_b > T::zero()) {
            return Err(Error::Param("curve parameters must be positive".into()));
        }
        Ok(())
    }

    /// Stable text form used for fingerprints.
    pub fn canonical(&self) -> String {
        format!(
            "umap;n_neighbors={};min_dist={:e};n_epochs={};learning_rate={:e};negative_samples={};seed={};a={:e};b={:e}",
            self.n_neighbors,
            self.min_dist,
            self.n_epochs,
            self.learning_rate,
            self.negative_samples,
            self.seed,
            self.curve_a,
            self.curve_b
        )
    }
}

/// Least-squares fit of `1 / (1 + a·x^(2b))` to the membership target
/// (1 below `min_dist`, `exp(−(x − min_dist)/spread)` above) on 300 evenly
/// spaced points of `[0, 3·spread]`, by Levenberg-Marquardt from `(1, 1)`.
pub fn fit_curve(min_dist: f64, spread: f64) -> (f64, f64) {
    const POINTS: usize = 300;
    let xs: Vec<f64> = (0..POINTS)
        .map(|i| 3.0 * spread * i as f64 / (POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    let (mut a, mut b) = (1.0, 1.0);
    let mut current = cost(a, b);
    let mut damping = 1e-3;
    for _ in 0..1000 {
        // Normal equations J^T J and gradient J^T r.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let r = 1.0 / denom - y;
            let da = -p / (denom * denom);
            let db = -2.0 * a * p * x.ln() / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut accepted = false;
        while damping < 1e12 {
            let (maa, mbb) = (jaa * (1.0 + damping), jbb * (1.0 + damping));
            let det = maa * mbb - jab * jab;
            let step_a = -(mbb * ga - jab * gb) / det;
            let step_b = -(maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let c = cost(na, nb);
                if c <= current {
                    let small = step_a.abs() <= 1e-15 * a.abs() && step_b.abs() <= 1e-15 * b.abs();
                    a = na;
                    b = nb;
                    current = c;
                    damping = (damping / 10.0).max(1e-15);
                    accepted = !small;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (a, b)
}

/// Local connectivity `rho` (nearest distance) and bandwidth `sigma` such that
/// `Σ exp(−max(0, d − rho)/sigma) = log2(k)`, found by 64 bisection steps and
/// clamped to `[1e-3, 1e3]`.
pub fn smooth_knn<T: Scalar>(distances: &[T]) -> (T, T) {
    let Some(&rho) = distances.first() else {
        return (T::zero(), T::one());
    };
    // Terms at or below `rho` are exactly 1 for every sigma; keeping them out
    // of the floating-point sum avoids absorbing the tiny remaining terms.
    let ones = distances.iter().filter(|&&d| d <= rho).count();
    let excess = T::from_count(distances.len()).log2() - T::from_count(ones);
    if excess <= T::zero() {
        // The sum exceeds the target for every sigma > 0.
        return (rho, T::lit(SIGMA_MIN));
    }
    let (mut lo, mut hi, mut mid) = (T::zero(), T::infinity(), T::one());
    let two = T::lit(2.0);
    for _ in 0..SMOOTH_KNN_ITERATIONS {
        let total: T = distances
            .iter()
            .filter(|&&d| d > rho)
            .map(|&d| (-(d - rho) / mid).exp())
            .sum();
        if total > excess {
            hi = mid;
            mid = (lo + hi) / two;
        } else {
            lo = mid;
            mid = if hi.is_infinite() {
                mid * two
            } else {
                (lo + hi) / two
            };
        }
    }
    (rho, mid.max(T::lit(SIGMA_MIN)).min(T::lit(SIGMA_MAX)))
}

/// Directed membership strengths `w_ij` for each point's neighbor list.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedWeights<T> {
    pub neighbors: Vec<Vec<(usize, T)>>,
}

pub fn membership_weights<T: Scalar>(graph: &KnnGraph<T>) -> DirectedWeights<T> {
    let neighbors = graph
        .indices
        .iter()
        .zip(&graph.distances)
        .map(|(idx, dist)| {
            let (rho, sigma) = smooth_knn(dist);
            idx.iter()
                .zip(dist)
                .map(|(&j, &d)| (j, (-(d - rho).max(T::zero()) / sigma).exp()))
                .collect()
        })
        .collect();
    DirectedWeights { neighbors }
}

/// Symmetric sparse weights stored once per unordered pair `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGraph<T> {
    pub n: usize,
    pub edges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> SymmetricGraph<T> {
    pub fn weight(&self, i: usize, j: usize) -> T {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|pos| self.edges[pos].2)
            .unwrap_or_else(|_| T::zero())
    }
}

/// Probabilistic union `w_ij + w_ji − w_ij·w_ji`.
#[inline]
pub fn fuzzy_union_pair<T: Scalar>(w_ij: T, w_ji: T) -> T {
    w_ij + w_ji - w_ij * w_ji
}

pub fn fuzzy_union<T: Scalar>(directed: &DirectedWeights<T>) -> SymmetricGraph<T> {
    let mut pairs: BTreeMap<(usize, usize), (T, T)> = BTreeMap::new();
    for (i, list) in directed.neighbors.iter().enumerate() {
        for &(j, w) in list {
            if i == j {
                continue;
            }
            let entry = pairs
                .entry((i.min(j), i.max(j)))
                .or_insert((T::zero(), T::zero()));
            if i < j {
                entry.0 = w;
            } else {
                entry.1 = w;
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|((i, j), (a, b))| (i, j, fuzzy_union_pair(a, b)))
        .filter(|e| e.2 > T::zero())
        .collect();
    SymmetricGraph {
        n: directed.neighbors.len(),
        edges,
    }
}

#[inline]
fn clip<T: Scalar>(v: T) -> T {
    let c = T::lit(GRADIENT_CLIP);
    v.max(-c).min(c)
}

/// Per-point random stream keyed by `(seed, point)`.
fn point_rng(seed: u64, point: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point as u64);
    rng
}

/// Seeded SGD layout of a symmetric graph in the plane.
///
/// Edges are visited in a fixed order each epoch and sampled at a rate
/// proportional to their weight; every attractive update is followed by
/// `negative_samples` repulsive updates against uniformly drawn vertices.
/// The learning rate decays linearly to zero. Output is a pure function of
/// `(graph, params)`.
pub fn optimize_layout<T: Scalar>(
    graph: &SymmetricGraph<T>,
    params: &UmapParams<T>,
) -> Result<Vec<[T; 2]>> {
    params.validate()?;
    let n = graph.n;
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| point_rng(params.seed, i)).collect();
    let mut points: Vec<[T; 2]> = rngs
        .iter_mut()
        .map(|rng| {
            [
                T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)),
                T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)),
            ]
        })
        .collect();

    let max_w = graph.edges.iter().map(|e| e.2).fold(T::zero(), T::max);
    if n < 2 || max_w <= T::zero() {
        return Ok(points);
    }
    let epochs = T::from_count(params.n_epochs);
    let floor = max_w / epochs;
    // Both directions of every sufficiently strong edge.
    let mut directed: Vec<(usize, usize, T)> = Vec::with_capacity(2 * graph.edges.len());
    for &(i, j, w) in &graph.edges {
        if w >= floor {
            let period = max_w / w;
            directed.push((i, j, period));
            directed.push((j, i, period));
        }
    }
    directed.sort_by_key(|e| (e.0, e.1));
    let mut next_sample: Vec<T> = directed.iter().map(|e| e.2).collect();

    let (a, b) = (params.curve_a, params.curve_b);
    let two = T::lit(2.0);
    let repulse_eps = T::lit(0.001);

    for epoch in 0..params.n_epochs {
        let e = T::from_count(epoch);
        let alpha = params.learning_rate * (T::one() - e / epochs);
        for (idx, &(i, j, period)) in directed.iter().enumerate() {
            if next_sample[idx] > e {
                continue;
            }
            let (pi, pj) = (points[i], points[j]);
            let diff = [pi[0] - pj[0], pi[1] - pj[1]];
            let d2 = diff[0] * diff[0] + diff[1] * diff[1];
            if d2 > T::zero() {
                let coeff = -two * a * b * d2.powf(b - T::one()) / (a * d2.powf(b) + T::one());
                for c in 0..2 {
                    let g = clip(coeff * diff[c]) * alpha;
                    points[i][c] += g;
                    points[j][c] -= g;
                }
            }

            for _ in 0..params.negative_samples {
                let k = rngs[i].random_range(0..n);
                if k == i {
                    continue;
                }
                let (pi, pk) = (points[i], points[k]);
                let diff = [pi[0] - pk[0], pi[1] - pk[1]];
                let d2 = diff[0] * diff[0] + diff[1] * diff[1];
                for c in 0..2 {
                    let g = if d2 > T::zero() {
                        let coeff = two * b / ((repulse_eps + d2) * (a * d2.powf(b) + T::one()));
                        clip(coeff * diff[c])
                    } else {
                        T::lit(GRADIENT_CLIP)
                    };
                    points[i][c] += g * alpha;
                }
            }
            next_sample[idx] += period;
        }
    }
    Ok(points)
}

/// Full UMAP pipeline on rows already in canonical order.
pub(crate) fn umap_layout<T: Scalar>(
    data: &[Vec<T>],
    params: &UmapParams<T>,
) -> Result<Vec<[T; 2]>> {
    params.validate()?;
    if data.len() <= params.n_neighbors {
        return Err(Error::Param(format!(
            "UMAP needs more than {} points, got {}",
            params.n_neighbors,
            data.len()
        )));
    }
    let knn = knn_graph(data, params.n_neighbors)?;
    let graph = fuzzy_union(&membership_weights(&knn));
    optimize_layout(&graph, params)
}
