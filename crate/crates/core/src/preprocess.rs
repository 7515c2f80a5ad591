//! PCA reduction and stratified probe-set sampling.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::{seed, Error, FeatureMatrix, LabelVector, Result, Warning};

/// Default probe size.
pub const DEFAULT_PROBE_SIZE: usize = 500;
/// Default PCA output dimension.
pub const DEFAULT_PCA_DIM: usize = 32;
/// Every class keeps at least this many probe samples.
pub const MIN_PER_CLASS: usize = 2;

/// Fitted principal component analysis.
///
/// `components` holds `k` orthonormal rows of length `d`, ordered by
/// decreasing explained variance. In each component the entry of largest
/// magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
    dim: usize,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    /// Variance along each component, `1/(n-1)` normalisation.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Explained variance as a fraction of the total variance.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    /// `z * components + mean`
    pub fn inverse_transform(&self, z: &FeatureMatrix) -> Result<FeatureMatrix> {
        let k = self.n_components();
        if z.cols() != k {
            return Err(Error::DimMismatch { expected: k, got: z.cols() });
        }
        let mut data = Vec::with_capacity(z.rows() * self.dim);
        for row in z.iter_rows() {
            let start = data.len();
            data.extend_from_slice(&self.mean);
            for (c, &zc) in row.iter().enumerate() {
                for (o, &w) in data[start..].iter_mut().zip(self.component(c)) {
                    *o += zc * w;
                }
            }
        }
        FeatureMatrix::new(z.rows(), self.dim, data, z.provenance())
    }
}

/// Fits a `k`-component PCA by SVD of the mean-centred data.
///
/// `k` must lie in `1..=min(n - 1, d)`. When `k` exceeds the numerical rank
/// the model is truncated to the rank and a [`Warning::RankDeficient`] is
/// returned alongside it.
pub fn pca_fit(features: &FeatureMatrix, k: usize) -> Result<(PcaModel, Option<Warning>)> {
    let (n, d) = (features.rows(), features.cols());
    let max_k = (n.saturating_sub(1)).min(d);
    if k == 0 || k > max_k {
        return Err(Error::InvalidComponents { k, max: max_k });
    }
    let mut mean = alloc::vec![0.0; d];
    for row in features.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred = DMatrix::from_fn(n, d, |i, j| features.get(i, j) - mean[j]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let s = &svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let s_max = order.first().map_or(0.0, |&i| s[i]);
    let tol = s_max * n.max(d) as f64 * f64::EPSILON;
    let rank = order.iter().filter(|&&i| s[i] > tol).count();
    if rank == 0 {
        return Err(Error::RankDeficient { requested: k, rank: 0 });
    }
    let (kept, warning) = if k > rank {
        (rank, Some(Warning::RankDeficient { requested: k, rank }))
    } else {
        (k, None)
    };

    let denom = (n - 1) as f64;
    let total_variance = s.iter().map(|v| v * v).sum::<f64>() / denom;
    let mut components = Vec::with_capacity(kept * d);
    let mut explained_variance = Vec::with_capacity(kept);
    for &idx in &order[..kept] {
        let mut comp: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let mut pivot = 0;
        for (j, v) in comp.iter().enumerate() {
            if v.abs() > comp[pivot].abs() {
                pivot = j;
            }
        }
        if comp[pivot] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        components.extend(comp);
        explained_variance.push(s[idx] * s[idx] / denom);
    }
    Ok((PcaModel { mean, components, explained_variance, total_variance, dim: d }, warning))
}

/// Projects `features` onto the fitted components: `(X - mean) * componentsᵀ`.
pub fn pca_transform(model: &PcaModel, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if features.cols() != model.dim {
        return Err(Error::DimMismatch { expected: model.dim, got: features.cols() });
    }
    let k = model.n_components();
    let mut centred = alloc::vec![0.0; model.dim];
    let mut data = Vec::with_capacity(features.rows() * k);
    for row in features.iter_rows() {
        centred.iter_mut().zip(row.iter().zip(&model.mean)).for_each(|(c, (x, m))| *c = x - m);
        data.extend((0..k).map(|c| crate::kernel::dot(&centred, model.component(c))));
    }
    FeatureMatrix::new(features.rows(), k, data, features.provenance())
}

/// Reduces `features` to `dim` columns when it has more, clamping `dim` to
/// `n - 1`. Matrices that are already small enough pass through unchanged.
pub fn reduce(features: &FeatureMatrix, dim: usize) -> Result<(FeatureMatrix, Option<Warning>)> {
    let k = dim.min(features.rows().saturating_sub(1));
    if dim == 0 || features.cols() <= k || k == 0 {
        return Ok((features.clone(), None));
    }
    let (model, warning) = pca_fit(features, k)?;
    Ok((pca_transform(&model, features)?, warning))
}

/// A labelled probe drawn from a target pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    /// Pool indices of the probe samples, ascending.
    pub indices: Vec<usize>,
    pub source_seed: u64,
}

/// Number of probe samples per class: at least [`MIN_PER_CLASS`] each, the
/// rest proportional to class frequency (largest remainder, ties to the
/// smaller class id).
fn allocate(counts: &[usize], total: usize) -> Vec<usize> {
    let pool: usize = counts.iter().sum();
    let mut quota: Vec<usize> = counts.iter().map(|&c| c.min(MIN_PER_CLASS)).collect();
    let mut remaining = total.saturating_sub(quota.iter().sum());
    // ideal shares of the total, then hand out the remainder in share order
    let share: Vec<f64> = counts.iter().map(|&c| total as f64 * c as f64 / pool as f64).collect();
    for (c, q) in quota.iter_mut().enumerate() {
        let want = (libm::floor(share[c]) as usize).clamp(*q, counts[c]);
        let add = (want - *q).min(remaining);
        *q += add;
        remaining -= add;
    }
    while remaining > 0 {
        let mut best: Option<usize> = None;
        for c in 0..counts.len() {
            if quota[c] >= counts[c] {
                continue;
            }
            let gap = share[c] - quota[c] as f64;
            if best.is_none_or(|b| gap > share[b] - quota[b] as f64) {
                best = Some(c);
            }
        }
        match best {
            Some(c) => {
                quota[c] += 1;
                remaining -= 1;
            }
            None => break,
        }
    }
    quota
}

/// Stratified probe sample of `min(target_size, pool)` items with at least
/// two per class. Returns [`Warning::ProbeCapped`] when the pool is smaller
/// than `target_size`.
pub fn sample_probe(
    features: &FeatureMatrix,
    labels: &LabelVector,
    target_size: usize,
    seed: u64,
) -> Result<(ProbeSet, Option<Warning>)> {
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: labels.len() });
    }
    labels.require_min_per_class(MIN_PER_CLASS)?;
    let counts = labels.class_counts();
    let warning = (target_size > n).then_some(Warning::ProbeCapped { requested: target_size, available: n });
    let total = target_size.min(n).max(MIN_PER_CLASS * counts.len());
    let quota = allocate(&counts, total);

    let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); counts.len()];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut indices = Vec::with_capacity(total);
    for (members, &q) in by_class.iter_mut().zip(&quota) {
        members.shuffle(&mut rng);
        indices.extend_from_slice(&members[..q]);
    }
    indices.sort_unstable();
    let probe = ProbeSet {
        features: features.select_rows(&indices)?,
        labels: labels.select(&indices)?,
        indices,
        source_seed: seed,
    };
    Ok((probe, warning))
}
