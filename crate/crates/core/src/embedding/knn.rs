use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact k-nearest-neighbor lists, one per point, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph<T> {
    pub k: usize,
    /// `indices[i]` lists neighbors of `i` by ascending distance, ties by
    /// lower index.
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<T>>,
}

impl<T> KnnGraph<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub(crate) fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Brute-force exact k-NN under Euclidean distance.
pub fn knn_graph<T: Scalar>(data: &[Vec<T>], k: usize) -> Result<KnnGraph<T>> {
    let n = data.len();
    if k == 0 || k >= n {
        return Err(Error::Param(format!("k must satisfy 0 < k < {n}, got {k}")));
    }
    let dim = data[0].len();
    if data.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape("rows differ in length".into()));
    }
    let rows: Vec<(Vec<usize>, Vec<T>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (euclidean(&data[i], &data[j]), j))
                .collect();
            let by_dist = |a: &(T, usize), b: &(T, usize)| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            };
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_dist);
                cand.truncate(k);
            }
            cand.sort_by(by_dist);
            cand.into_iter().map(|(d, j)| (j, d)).unzip()
        })
        .collect();
    let (indices, distances) = rows.into_iter().unzip();
    Ok(KnnGraph {
        k,
        indices,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collinear_points() {
        let data = vec![vec![0.0], vec![1.0], vec![10.0]];
        let g = knn_graph(&data, 1).unwrap();
        assert_eq!(g.indices, vec![vec![1], vec![0], vec![1]]);
        assert_eq!(g.distances, vec![vec![1.0], vec![1.0], vec![9.0]]);
    }

    #[test]
    fn duplicates_are_mutual_neighbors() {
        let data = vec![vec![3.0, 3.0], vec![0.0, 0.0], vec![3.0, 3.0]];
        let g = knn_graph(&data, 1).unwrap();
        assert_eq!(g.indices[0], vec![2]);
        assert_eq!(g.indices[2], vec![0]);
        assert_eq!(g.distances[0][0], 0.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let data = vec![vec![0.0], vec![1.0], vec![-1.0], vec![5.0]];
        let g = knn_graph(&data, 2).unwrap();
        assert_eq!(g.indices[0], vec![1, 2]);
    }

    #[test]
    fn rejects_k_too_large() {
        let data = vec![vec![0.0], vec![1.0]];
        assert!(matches!(knn_graph(&data, 2), Err(Error::Param(_))));
    }

    #[test]
    fn matches_full_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let data: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let g = knn_graph(&data, 5).unwrap();
        for i in 0..50 {
            let mut all: Vec<(f64, usize)> = (0..50)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = (0..4).map(|c| (data[i][c] - data[j][c]).powi(2)).sum();
                    (d2.sqrt(), j)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expected: Vec<usize> = all[..5].iter().map(|p| p.1).collect();
            assert_eq!(g.indices[i], expected);
        }
    }
}
