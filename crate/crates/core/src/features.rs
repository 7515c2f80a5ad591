use alloc::vec::Vec;

use crate::{Error, Result};

/// Where a feature matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Pretrained,
    Random,
    #[default]
    Raw,
    Synthetic,
}

/// Dense row-major `n x d` matrix of finite feature activations, one row
/// per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    provenance: Provenance,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data, provenance })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], provenance: Provenance) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimMismatch { expected: d, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, d, data, provenance)
    }

    pub fn zeros(rows: usize, cols: usize, provenance: Provenance) -> Result<Self> {
        Self::new(rows, cols, alloc::vec![0.0; rows * cols], provenance)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    /// Rows picked by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::ShapeMismatch { expected: self.rows, got: i });
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, data, self.provenance)
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let data = self.data.iter().map(|v| v * factor).collect();
        Self::new(self.rows, self.cols, data, self.provenance)
    }

    /// `self * m` for a row-major `cols x out` matrix `m`.
    pub fn matmul(&self, m: &[f64], out: usize) -> Result<Self> {
        if m.len() != self.cols * out || out == 0 {
            return Err(Error::ShapeMismatch { expected: self.cols * out, got: m.len() });
        }
        let mut data = alloc::vec![0.0; self.rows * out];
        for (src, dst) in self.iter_rows().zip(data.chunks_exact_mut(out)) {
            for (k, &x) in src.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let w = &m[k * out..(k + 1) * out];
                for (d, &wk) in dst.iter_mut().zip(w) {
                    *d += x * wk;
                }
            }
        }
        Self::new(self.rows, out, data, self.provenance)
    }
}

/// Integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<u32>,
    num_classes: u32,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::TooFewItems { needed: 1, got: 0 });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabel { label, num_classes });
        }
        Ok(Self { labels, num_classes })
    }

    /// Infers `num_classes` as `max(label) + 1`.
    pub fn from_labels(labels: Vec<u32>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, k)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    /// Sample count per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.num_classes as usize];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Checks the probe-set invariant: every class has at least `min` samples.
    pub fn require_min_per_class(&self, min: usize) -> Result<()> {
        match self.class_counts().iter().enumerate().find(|(_, &c)| c < min) {
            Some((class, &count)) => Err(Error::ClassTooSmall { class: class as u32, count, needed: min }),
            None => Ok(()),
        }
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices
            .iter()
            .map(|&i| self.labels.get(i).copied().ok_or(Error::ShapeMismatch { expected: self.len(), got: i }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, self.num_classes)
    }
}
