use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A multivariate time series stored frame-major: `len()` frames of `dim()`
/// values each.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Series<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("series dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not divide into frames of {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// Builds a series from per-frame vectors, all of the same length.
    pub fn from_frames<F: AsRef<[T]>>(frames: &[F]) -> Result<Self> {
        let dim = frames
            .first()
            .map(|f| f.as_ref().len())
            .ok_or_else(|| Error::EmptySequence("no frames".into()))?;
        let mut data = Vec::with_capacity(dim * frames.len());
        for (t, f) in frames.iter().enumerate() {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::Shape(format!(
                    "frame {t} has {} values, expected {dim}",
                    f.len()
                )));
            }
            data.extend_from_slice(f);
        }
        Self::new(dim, data)
    }

    /// Univariate series, one value per frame.
    pub fn scalar(values: &[T]) -> Self {
        Self {
            dim: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn frame(&self, t: usize) -> &[T] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    #[inline]
    pub fn frame_mut(&mut self, t: usize) -> &mut [T] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// All values, frame-major.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Values of one coordinate across all frames.
    pub fn channel(&self, d: usize) -> Vec<T> {
        self.frames().map(|f| f[d]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
