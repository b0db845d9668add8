//! Dimensionality-reduction backends. Each sign is flattened into one vector
//! and mapped to a single point in the plane; sign distances are then plain
//! Euclidean distances between points.

mod knn;
mod pca;
mod umap;

use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

pub use knn::{knn_graph, KnnGraph};
pub use pca::{pca_fit, pca_project, PcaModel, PCA_MAX_ITERATIONS, PCA_TOLERANCE};
pub use umap::{
    fit_curve, fuzzy_union, fuzzy_union_pair, membership_weights, optimize_layout, smooth_knn,
    DirectedWeights, SymmetricGraph, UmapParams,
};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingMethod {
    Pca,
    Umap,
}

impl fmt::Display for EmbeddingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingMethod::Pca => "pca",
            EmbeddingMethod::Umap => "umap",
        })
    }
}

/// Planar embedding of labelled points. Immutable once built.
#[derive(Debug, Clone)]
pub struct EmbeddedSet<T> {
    points: Vec<[T; 2]>,
    labels: Vec<String>,
    positions: HashMap<String, usize>,
    pub method: EmbeddingMethod,
    /// Hex fingerprint of the method parameters.
    pub params_hash: String,
}

impl<T: Scalar> EmbeddedSet<T> {
    pub fn new(
        points: Vec<[T; 2]>,
        labels: Vec<String>,
        method: EmbeddingMethod,
        params: &str,
    ) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(
                "embedding has non-finite coordinates".into(),
            ));
        }
        let positions = unique_positions(&labels)?;
        Ok(Self {
            points,
            labels,
            positions,
            method,
            params_hash: fingerprint(params),
        })
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, label: &str) -> Result<[T; 2]> {
        self.positions
            .get(label)
            .map(|&i| self.points[i])
            .ok_or_else(|| Error::Label(label.to_string()))
    }
}

fn unique_positions(labels: &[String]) -> Result<HashMap<String, usize>> {
    let mut positions = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if positions.insert(l.clone(), i).is_some() {
            return Err(Error::Label(format!("duplicate label {l:?}")));
        }
    }
    Ok(positions)
}

fn fingerprint(params: &str) -> String {
    Sha256::digest(params.as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn check_rows<T: Scalar>(data: &[Vec<T>], labels: &[String]) -> Result<()> {
    if data.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            data.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Fits PCA on all rows and projects each onto the first two components.
pub fn pca_embed<T: Scalar>(data: &[Vec<T>], labels: &[String]) -> Result<EmbeddedSet<T>> {
    check_rows(data, labels)?;
    let model = pca_fit(data)?;
    let points = data
        .iter()
        .map(|row| pca_project(&model, row))
        .collect::<Result<Vec<_>>>()?;
    EmbeddedSet::new(
        points,
        labels.to_vec(),
        EmbeddingMethod::Pca,
        "pca;components=2",
    )
}

/// Joint UMAP embedding of all rows.
///
/// Rows are processed in ascending label order, so the embedding of a point
/// depends on its label and the data, not on the order rows were supplied.
pub fn umap_embed<T: Scalar>(
    data: &[Vec<T>],
    labels: &[String],
    params: &UmapParams<T>,
) -> Result<EmbeddedSet<T>> {
    check_rows(data, labels)?;
    unique_positions(labels)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let canonical: Vec<Vec<T>> = order.iter().map(|&i| data[i].clone()).collect();
    let layout = umap::umap_layout(&canonical, params)?;
    let mut points = vec![[T::zero(); 2]; data.len()];
    for (pos, &i) in order.iter().enumerate() {
        points[i] = layout[pos];
    }
    EmbeddedSet::new(
        points,
        labels.to_vec(),
        EmbeddingMethod::Umap,
        &params.canonical(),
    )
}

/// Planar distances between named points.
pub fn embedded_distance_matrix<T: Scalar>(
    set: &EmbeddedSet<T>,
    query_labels: &[String],
    ref_labels: &[String],
) -> Result<DistanceMatrix<T>> {
    let refs = ref_labels
        .iter()
        .map(|l| set.point(l))
        .collect::<Result<Vec<_>>>()?;
    let rows = query_labels
        .iter()
        .map(|l| {
            let q = set.point(l)?;
            Ok(refs
                .iter()
                .map(|r| (q[0] - r[0]).hypot(q[1] - r[1]))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::from_rows(rows, query_labels.to_vec(), ref_labels.to_vec())
}
