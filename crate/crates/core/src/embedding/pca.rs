//! Two-component PCA by power iteration with deflation.
//!
//! The eigenproblem is solved on whichever of the covariance (`D×D`) and
//! Gram (`N×N`) matrices is smaller; Gram eigenvectors are mapped back to
//! feature space through the centered data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PCA_TOLERANCE: f64 = 1e-10;
pub const PCA_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// Two orthonormal rows of length `D`.
    pub components: [Vec<T>; 2],
    /// Sample variance (denominator `N − 1`) along each component, descending.
    pub explained_variance: [T; 2],
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let norm = dot(v, v).sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize<T: Scalar>(v: &mut [T], against: &[Vec<T>]) {
    for u in against {
        let c = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, &ui)| *x -= c * ui);
    }
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric `m×m` matrix-vector product, row-major.
fn matvec<T: Scalar>(a: &[T], m: usize, v: &[T]) -> Vec<T> {
    a.chunks_exact(m).map(|row| dot(row, v)).collect()
}

/// Leading eigenvectors of a symmetric positive semi-definite matrix.
/// `None` marks a component with no remaining variance.
fn top_eigenvectors<T: Scalar>(
    matrix: &[T],
    m: usize,
    count: usize,
) -> Result<Vec<Option<Vec<T>>>> {
    let mut a = matrix.to_vec();
    let trace: T = (0..m).map(|i| a[i * m + i]).sum();
    let tol = T::lit(PCA_TOLERANCE).max(T::epsilon() * T::lit(16.0));
    let negligible = trace * T::epsilon() * T::from_count(m.max(16));
    let mut found: Vec<Vec<T>> = Vec::new();
    let mut out = Vec::with_capacity(count);

    for component in 0..count {
        // Start from the column with the largest norm.
        let (col, norm) = (0..m)
            .map(|j| {
                let n: T = (0..m).map(|i| a[i * m + j] * a[i * m + j]).sum();
                (j, n.sqrt())
            })
            .fold(
                (0, T::zero()),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if norm <= negligible {
            out.push(None);
            continue;
        }
        let mut v: Vec<T> = (0..m).map(|i| a[i * m + col]).collect();
        orthogonalize(&mut v, &found);
        normalize(&mut v);

        let mut converged = false;
        for _ in 0..PCA_MAX_ITERATIONS {
            let mut w = matvec(&a, m, &v);
            orthogonalize(&mut w, &found);
            let lambda = dot(&v, &w);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(&wi, &vi)| (wi - lambda * vi) * (wi - lambda * vi))
                .sum::<T>()
                .sqrt();
            let norm = normalize(&mut w);
            if norm <= negligible {
                break;
            }
            v = w;
            if residual <= tol * trace {
                converged = true;
                break;
            }
        }
        if !converged {
            let remaining = dot(&v, &matvec(&a, m, &v));
            if remaining <= negligible {
                out.push(None);
                continue;
            }
            return Err(Error::EigenConvergence {
                component,
                iterations: PCA_MAX_ITERATIONS,
            });
        }
        let lambda = dot(&v, &matvec(&a, m, &v));
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] -= lambda * v[i] * v[j];
            }
        }
        found.push(v.clone());
        out.push(Some(v));
    }
    Ok(out)
}

/// Rows `(x_n − mean)`.
fn centered<T: Scalar>(data: &[Vec<T>], mean: &[T]) -> Vec<Vec<T>> {
    data.iter()
        .map(|row| row.iter().zip(mean).map(|(&x, &m)| x - m).collect())
        .collect()
}

pub fn pca_fit<T: Scalar>(data: &[Vec<T>]) -> Result<PcaModel<T>> {
    let n = data.len();
    if n < 3 {
        return Err(Error::Param(format!("PCA needs at least 3 rows, got {n}")));
    }
    let d = data[0].len();
    if d < 2 {
        return Err(Error::Param(format!(
            "PCA needs at least 2 columns, got {d}"
        )));
    }
    if let Some(bad) = data.iter().position(|r| r.len() != d) {
        return Err(Error::Shape(format!(
            "row {bad} has {} columns, expected {d}",
            data[bad].len()
        )));
    }

    let inv_n = T::one() / T::from_count(n);
    let mean: Vec<T> = (0..d)
        .map(|j| data.iter().map(|r| r[j]).sum::<T>() * inv_n)
        .collect();
    let x = centered(data, &mean);
    let denom = T::from_count(n - 1);

    let directions: Vec<Option<Vec<T>>> = if d <= n {
        let cov: Vec<T> = (0..d * d)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / d, idx % d);
                x.iter().map(|r| r[i] * r[j]).sum::<T>() / denom
            })
            .collect();
        top_eigenvectors(&cov, d, 2)?
    } else {
        let gram: Vec<T> = (0..n * n)
            .into_par_iter()
            .map(|idx| dot(&x[idx / n], &x[idx % n]) / denom)
            .collect();
        top_eigenvectors(&gram, n, 2)?
            .into_iter()
            .map(|u| {
                u.map(|u| {
                    let mut v = vec![T::zero(); d];
                    for (row, &c) in x.iter().zip(&u) {
                        v.iter_mut().zip(row).for_each(|(vi, &xi)| *vi += c * xi);
                    }
                    v
                })
            })
            .collect()
    };

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(2);
    for dir in directions {
        let mut v = match dir {
            Some(v) => v,
            None if basis.is_empty() => {
                return Err(Error::DegenerateData("all rows are identical".into()))
            }
            None => orthogonal_complement(&basis[0]),
        };
        orthogonalize(&mut v, &basis);
        if normalize(&mut v) <= T::zero() {
            v = orthogonal_complement(&basis[0]);
        }
        fix_sign(&mut v);
        basis.push(v);
    }

    let variance = |v: &[T]| x.iter().map(|r| dot(r, v).powi(2)).sum::<T>() / denom;
    let mut ev = [variance(&basis[0]), variance(&basis[1])];
    if ev[1] > ev[0] {
        basis.swap(0, 1);
        ev.swap(0, 1);
    }
    let second = basis.pop().expect("two components");
    let first = basis.pop().expect("two components");
    Ok(PcaModel {
        mean,
        components: [first, second],
        explained_variance: ev,
    })
}

/// A unit vector orthogonal to unit vector `u`, built from the coordinate axis
/// least aligned with `u`.
fn orthogonal_complement<T: Scalar>(u: &[T]) -> Vec<T> {
    let mut axis = 0;
    for (i, x) in u.iter().enumerate() {
        if x.abs() < u[axis].abs() {
            axis = i;
        }
    }
    let mut v = vec![T::zero(); u.len()];
    v[axis] = T::one();
    orthogonalize(&mut v, &[u.to_vec()]);
    normalize(&mut v);
    v
}

pub fn pca_project<T: Scalar>(model: &PcaModel<T>, v: &[T]) -> Result<[T; 2]> {
    if v.len() != model.mean.len() {
        return Err(Error::Shape(format!(
            "vector has {} values, model expects {}",
            v.len(),
            model.mean.len()
        )));
    }
    let project = |c: &[T]| -> T {
        v.iter()
            .zip(&model.mean)
            .zip(c)
            .map(|((&x, &m), &ci)| (x - m) * ci)
            .sum()
    };
    Ok([project(&model.components[0]), project(&model.components[1])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn assert_orthonormal(m: &PcaModel<f64>) {
        let [a, b] = &m.components;
        assert!((dot(a, a) - 1.0).abs() < 1e-8);
        assert!((dot(b, b) - 1.0).abs() < 1e-8);
        assert!(dot(a, b).abs() < 1e-8);
        assert!(m.explained_variance[0] >= m.explained_variance[1]);
    }

    #[test]
    fn line_y_equals_x() {
        let data: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![i as f64 - 2.0, i as f64 - 2.0])
            .collect();
        let m = pca_fit(&data).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.components[0][0] - h).abs() < 1e-12);
        assert!((m.components[0][1] - h).abs() < 1e-12);
        assert!(m.explained_variance[1].abs() < 1e-12);
        assert_orthonormal(&m);

        let zeroed = PcaModel {
            mean: vec![0.0, 0.0],
            ..m.clone()
        };
        let p = pca_project(&zeroed, &[2.0, 2.0]).unwrap();
        assert!((p[0] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
        assert_eq!(pca_project(&m, &m.mean.clone()).unwrap(), [0.0, 0.0]);
        assert!(matches!(pca_project(&m, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn isotropic_variances_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let m = pca_fit(&data).unwrap();
        assert!((m.explained_variance[0] - 1.0).abs() < 0.1);
        assert!((m.explained_variance[1] - 1.0).abs() < 0.1);
        assert_orthonormal(&m);
    }

    #[test]
    fn wide_data_uses_gram_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let wide: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..40).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let m = pca_fit(&wide).unwrap();
        assert_orthonormal(&m);
        // Projected training variance equals the explained variance.
        let proj: Vec<[f64; 2]> = wide.iter().map(|r| pca_project(&m, r).unwrap()).collect();
        for c in 0..2 {
            let var = proj.iter().map(|p| p[c] * p[c]).sum::<f64>() / 11.0;
            assert!((var - m.explained_variance[c]).abs() < 1e-6);
        }
        // Same leading subspace as the covariance route on a transposed problem.
        let tall: Vec<Vec<f64>> = wide.iter().map(|r| r[..5].to_vec()).collect();
        assert_orthonormal(&pca_fit(&tall).unwrap());
    }

    #[test]
    fn rejects_degenerate_input() {
        let same = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(pca_fit(&same), Err(Error::DegenerateData(_))));
        assert!(matches!(
            pca_fit(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::Param(_))
        ));
        assert!(matches!(pca_fit(&vec![vec![1.0]; 5]), Err(Error::Param(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let data: Vec<Vec<f32>> = (0..20)
            .map(|i| {
                let t = i as f32 / 3.0;
                vec![t, 2.0 * t + t.sin(), 0.5 * t.cos()]
            })
            .collect();
        let m = pca_fit(&data).unwrap();
        let [a, b] = &m.components;
        assert!((dot(a, a) - 1.0).abs() < 1e-5);
        assert!(dot(a, b).abs() < 1e-5);
    }
}
