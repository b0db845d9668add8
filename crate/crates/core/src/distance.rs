//! Elastic and flat distances between sign trajectories.
//!
//! All DTW variants share one recursion: the cumulative cost of cell
//! `(i, j)` is the local frame distance plus the cheapest of its three
//! predecessors `(i−1, j)`, `(i, j−1)` and `(i−1, j−1)`, each with unit
//! weight. Rows index the query, columns the reference. Opening the
//! beginning lets the alignment start at any reference frame, opening the
//! end lets it stop at any reference frame; the query is always consumed
//! entirely.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::preprocess::NormalizedSign;
use crate::scalar::Scalar;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepPattern {
    /// Symmetric three-predecessor recursion with unit weights.
    #[default]
    SymmetricP0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtwParams {
    pub open_begin: bool,
    pub open_end: bool,
    pub step_pattern: StepPattern,
    /// Divide the accumulated cost by the query length.
    pub normalize_by_query_length: bool,
}

impl Default for DtwParams {
    fn default() -> Self {
        Self {
            open_begin: true,
            open_end: true,
            step_pattern: StepPattern::SymmetricP0,
            normalize_by_query_length: true,
        }
    }
}

impl DtwParams {
    /// Both ends anchored.
    pub fn closed() -> Self {
        Self {
            open_begin: false,
            open_end: false,
            ..Self::default()
        }
    }

    pub fn unnormalized(self) -> Self {
        Self {
            normalize_by_query_length: false,
            ..self
        }
    }
}

/// Euclidean distance between two flattened frames.
pub fn frame_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "frames have {} and {} values",
            a.len(),
            b.len()
        )));
    }
    Ok(sq_dist(a, b).sqrt())
}

#[inline]
fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn check_pair<T: Scalar>(q: &Series<T>, r: &Series<T>) -> Result<()> {
    if q.is_empty() || r.is_empty() {
        return Err(Error::EmptySequence("DTW needs nonempty sequences".into()));
    }
    if q.dim() != r.dim() {
        return Err(Error::Shape(format!(
            "frame dimensions differ: {} vs {}",
            q.dim(),
            r.dim()
        )));
    }
    Ok(())
}

fn accumulate<T: Scalar>(q: &Series<T>, r: &Series<T>, p: &DtwParams) -> T {
    let m = r.len();
    let mut prev = vec![T::zero(); m];
    let mut cur = vec![T::zero(); m];

    let q0 = q.frame(0);
    for j in 0..m {
        let c = sq_dist(q0, r.frame(j)).sqrt();
        prev[j] = if p.open_begin || j == 0 {
            c
        } else {
            c + prev[j - 1]
        };
    }
    for i in 1..q.len() {
        let qi = q.frame(i);
        cur[0] = sq_dist(qi, r.frame(0)).sqrt() + prev[0];
        for j in 1..m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = sq_dist(qi, r.frame(j)).sqrt() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let total = if p.open_end {
        prev.iter().copied().fold(T::infinity(), T::min)
    } else {
        prev[m - 1]
    };
    if p.normalize_by_query_length {
        total / T::from_count(q.len())
    } else {
        total
    }
}

/// DTW with both ends anchored.
pub fn dtw_full<T: Scalar>(
    q: &Series<T>,
    reference: &Series<T>,
    normalize_by_query_length: bool,
) -> Result<T> {
    let p = DtwParams {
        normalize_by_query_length,
        ..DtwParams::closed()
    };
    dtw_obe(q, reference, &p)
}

/// DTW whose alignment may start and/or end anywhere along the reference, as
/// selected by `p`.
pub fn dtw_obe<T: Scalar>(q: &Series<T>, reference: &Series<T>, p: &DtwParams) -> Result<T> {
    check_pair(q, reference)?;
    Ok(accumulate(q, reference, p))
}

/// Euclidean distance over all coordinates of two equally shaped series.
pub fn euclidean_flat<T: Scalar>(q: &Series<T>, reference: &Series<T>) -> Result<T> {
    if q.dim() != reference.dim() || q.len() != reference.len() {
        return Err(Error::Shape(format!(
            "series shapes differ: {}x{} vs {}x{}",
            q.len(),
            q.dim(),
            reference.len(),
            reference.dim()
        )));
    }
    Ok(sq_dist(q.as_slice(), reference.as_slice()).sqrt())
}

/// Distances computed directly on the trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceMetric {
    Elastic(DtwParams),
    Flat,
}

impl SequenceMetric {
    pub fn distance<T: Scalar>(&self, q: &Series<T>, reference: &Series<T>) -> Result<T> {
        match self {
            SequenceMetric::Elastic(p) => dtw_obe(q, reference, p),
            SequenceMetric::Flat => euclidean_flat(q, reference),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn from_rows(
        rows: Vec<Vec<T>>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self> {
        let cols = col_labels.len();
        if rows.len() != row_labels.len() || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("distance rows do not match labels".into()));
        }
        if rows
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= T::zero()))
        {
            return Err(Error::Shape(
                "distances must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.into_iter().flatten().collect(),
            row_labels,
            col_labels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

pub(crate) fn sign_label<T>(s: &NormalizedSign<T>) -> String {
    format!("{}/{}", s.gloss, s.signer)
}

/// Pairwise distances between query and reference signs. Cells are computed
/// independently (in parallel), so the result does not depend on scheduling.
pub fn distance_matrix<T: Scalar>(
    queries: &[NormalizedSign<T>],
    refs: &[NormalizedSign<T>],
    metric: SequenceMetric,
) -> Result<DistanceMatrix<T>> {
    if let Some(first) = queries.first().or(refs.first()) {
        let js = first.joint_set;
        if let Some(bad) = queries.iter().chain(refs).find(|s| s.joint_set != js) {
            return Err(Error::JointSetMismatch {
                expected: js.to_string(),
                found: bad.joint_set.to_string(),
            });
        }
    }
    let rows = queries
        .par_iter()
        .map(|q| {
            refs.iter()
                .map(|r| metric.distance(&q.series, &r.series))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::from_rows(
        rows,
        queries.iter().map(sign_label).collect(),
        refs.iter().map(sign_label).collect(),
    )
}
