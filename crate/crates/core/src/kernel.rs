//! Kernel matrices and the alignment measures built on them.
//!
//! All functions are pure. Kernel matrices are stored densely and are
//! exactly symmetric: only the upper triangle is computed and it is mirrored.
//!
//! With `H = I - 11ᵀ/n`:
//!
//! * [`center_kernel`]: `H K H`
//! * [`alignment`]: `<K1, K2>_F / sqrt(<K1, K1>_F <K2, K2>_F)`
//! * [`cka`]: alignment of the centered matrices
//! * [`hsic`]: `Tr(K H L H) / (n - 1)^2`

use alloc::vec::Vec;

use crate::stats::order_free_sum;
use crate::{Error, FeatureMatrix, LabelVector, Result};

/// Bandwidth selection for the distance-based kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bandwidth {
    /// Median pairwise distance of the samples being embedded.
    #[default]
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KernelKind {
    /// `<x, y>`
    #[default]
    Linear,
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    Gaussian(Bandwidth),
    /// `exp(-|x - y| / (2 sigma^2))`, the radial kernel with the norm left
    /// unsquared.
    GaussianUnsquared(Bandwidth),
    /// `exp(-|x - y|_1 / sigma)`
    Laplacian(Bandwidth),
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Gaussian(_) => "gaussian",
            KernelKind::GaussianUnsquared(_) => "gaussian-unsquared",
            KernelKind::Laplacian(_) => "laplacian",
        }
    }

    pub fn bandwidth(&self) -> Option<Bandwidth> {
        match *self {
            KernelKind::Linear => None,
            KernelKind::Gaussian(b) | KernelKind::GaussianUnsquared(b) | KernelKind::Laplacian(b) => Some(b),
        }
    }
}

/// `linear`, `gaussian`, `gaussian-unsquared` or `laplacian`, the last
/// three optionally followed by `:SIGMA` for a fixed bandwidth.
impl core::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || Error::InvalidSpec(alloc::format!("unknown kernel `{s}`"));
        let bw = match arg {
            None | Some("median") => Bandwidth::Median,
            Some(a) => {
                let sigma: f64 = a.parse().map_err(|_| bad())?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::InvalidBandwidth(sigma));
                }
                Bandwidth::Fixed(sigma)
            }
        };
        match (name.replace('_', "-").as_str(), arg) {
            ("linear", None) => Ok(Self::Linear),
            ("gaussian" | "rbf", _) => Ok(Self::Gaussian(bw)),
            ("gaussian-unsquared", _) => Ok(Self::GaussianUnsquared(bw)),
            ("laplacian", _) => Ok(Self::Laplacian(bw)),
            _ => Err(bad()),
        }
    }
}

impl core::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())?;
        match self.bandwidth() {
            Some(Bandwidth::Fixed(sigma)) => write!(f, ":{sigma}"),
            _ => Ok(()),
        }
    }
}

/// What produced a kernel matrix, with the bandwidth actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSource {
    Linear,
    Gaussian { sigma: f64 },
    GaussianUnsquared { sigma: f64 },
    Laplacian { sigma: f64 },
    /// Same-class indicator built from labels.
    Target,
    /// Supplied directly through [`KernelMatrix::from_raw`].
    Custom,
}

/// Dense symmetric `n x n` kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    centered: bool,
    source: KernelSource,
}

impl KernelMatrix {
    /// Wraps a caller-supplied square matrix, replacing it with `(K + Kᵀ)/2`.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
        }
        if data.len() != n * n {
            return Err(Error::ShapeMismatch { expected: n * n, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: pos / n, col: pos % n });
        }
        let mut k = Self { n, data, centered: false, source: KernelSource::Custom };
        k.symmetrize();
        Ok(k)
    }

    fn from_upper(n: usize, source: KernelSource, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data, centered: false, source }
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn is_centered(&self) -> bool {
        self.centered
    }

    #[inline]
    pub fn source(&self) -> KernelSource {
        self.source
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        self.data.iter().enumerate().filter(move |(idx, _)| idx / n != idx % n).map(|(_, &v)| v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(frobenius_inner(&self.data, &self.data))
    }
}

fn frobenius_inner(a: &[f64], b: &[f64]) -> f64 {
    order_free_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn check_same_n(a: &KernelMatrix, b: &KernelMatrix) -> Result<()> {
    if a.n != b.n {
        return Err(Error::ShapeMismatch { expected: a.n, got: b.n });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).sum()
}

/// Median over all `i < j` pairs of `dist(f_i, f_j)`. Falls back to the mean
/// pairwise distance when the median is zero, and to 1 when every sample
/// coincides.
fn median_pairwise(features: &FeatureMatrix, dist: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = features.rows();
    if n < 2 {
        return 1.0;
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(dist(features.row(i), features.row(j)));
        }
    }
    d.sort_unstable_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if median > 0.0 {
        return median;
    }
    let mean = d.iter().sum::<f64>() / m as f64;
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

fn resolve(bandwidth: Bandwidth, median: impl FnOnce() -> f64) -> Result<f64> {
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::Median => median(),
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidBandwidth(sigma));
    }
    Ok(sigma)
}

/// The bandwidth `kind` resolves to on `features`, or `None` for the linear kernel.
pub fn resolve_bandwidth(features: &FeatureMatrix, kind: KernelKind) -> Result<Option<f64>> {
    Ok(match kind {
        KernelKind::Linear => None,
        KernelKind::Gaussian(b) => Some(resolve(b, || median_pairwise(features, |a, b| libm::sqrt(squared_euclidean(a, b))))?),
        // exponent is -1/2 at the median distance, as for the squared form
        KernelKind::GaussianUnsquared(b) => {
            Some(resolve(b, || libm::sqrt(median_pairwise(features, |a, b| libm::sqrt(squared_euclidean(a, b)))))?)
        }
        KernelKind::Laplacian(b) => Some(resolve(b, || median_pairwise(features, manhattan))?),
    })
}

/// Uncentered kernel matrix `K[i, j] = k(f_i, f_j)`.
pub fn compute_kernel(features: &FeatureMatrix, kind: KernelKind) -> Result<KernelMatrix> {
    let n = features.rows();
    let row = |i| features.row(i);
    let sigma = resolve_bandwidth(features, kind)?;
    Ok(match (kind, sigma) {
        (KernelKind::Linear, _) => KernelMatrix::from_upper(n, KernelSource::Linear, |i, j| dot(row(i), row(j))),
        (KernelKind::Gaussian(_), Some(s)) => {
            let denom = 2.0 * s * s;
            KernelMatrix::from_upper(n, KernelSource::Gaussian { sigma: s }, |i, j| {
                libm::exp(-squared_euclidean(row(i), row(j)) / denom)
            })
        }
        (KernelKind::GaussianUnsquared(_), Some(s)) => {
            let denom = 2.0 * s * s;
            KernelMatrix::from_upper(n, KernelSource::GaussianUnsquared { sigma: s }, |i, j| {
                libm::exp(-libm::sqrt(squared_euclidean(row(i), row(j))) / denom)
            })
        }
        (KernelKind::Laplacian(_), Some(s)) => {
            KernelMatrix::from_upper(n, KernelSource::Laplacian { sigma: s }, |i, j| {
                libm::exp(-manhattan(row(i), row(j)) / s)
            })
        }
        _ => unreachable!("distance kernels always resolve a bandwidth"),
    })
}

/// Ideal kernel of the labels: 1 where two samples share a class, else 0.
pub fn target_kernel(labels: &LabelVector) -> KernelMatrix {
    let l = labels.as_slice();
    KernelMatrix::from_upper(l.len(), KernelSource::Target, |i, j| if l[i] == l[j] { 1.0 } else { 0.0 })
}

/// `H K H` with `H = I - 11ᵀ/n`.
pub fn center_kernel(k: &KernelMatrix) -> KernelMatrix {
    let n = k.n;
    let nf = n as f64;
    let means: Vec<f64> = k.data.chunks_exact(n).map(|r| order_free_sum(r.iter().copied()) / nf).collect();
    let grand = order_free_sum(means.iter().copied()) / nf;
    let mut c = KernelMatrix::from_upper(n, k.source, |i, j| k.data[i * n + j] - (means[i] + means[j]) + grand);
    c.centered = true;
    c
}

/// Frobenius cosine between two kernel matrices.
pub fn alignment(a: &KernelMatrix, b: &KernelMatrix) -> Result<f64> {
    check_same_n(a, b)?;
    let aa = frobenius_inner(&a.data, &a.data);
    let bb = frobenius_inner(&b.data, &b.data);
    if aa <= 0.0 || bb <= 0.0 {
        return Err(Error::DegenerateKernel);
    }
    Ok(frobenius_inner(&a.data, &b.data) / libm::sqrt(aa * bb))
}

// Centered norms this small relative to the raw norm are cancellation noise.
const DEGENERATE_RATIO: f64 = 1e-12;

/// Centers `k` (if needed) and rejects it when nothing but a constant
/// offset is left.
pub fn center_checked(k: &KernelMatrix) -> Result<KernelMatrix> {
    if k.centered {
        if k.frobenius_norm() <= 0.0 {
            return Err(Error::DegenerateKernel);
        }
        return Ok(k.clone());
    }
    let raw = k.frobenius_norm();
    let c = center_kernel(k);
    let cn = c.frobenius_norm();
    if cn <= 0.0 || cn <= DEGENERATE_RATIO * raw {
        return Err(Error::DegenerateKernel);
    }
    Ok(c)
}

/// Centered kernel alignment.
pub fn cka(a: &KernelMatrix, b: &KernelMatrix) -> Result<f64> {
    check_same_n(a, b)?;
    if a.n < 2 {
        return Err(Error::TooFewSamples { needed: 1, got: a.n });
    }
    let ac = center_checked(a)?;
    let bc = center_checked(b)?;
    alignment(&ac, &bc)
}

/// Empirical HSIC, `Tr(K H L H) / (n - 1)^2`.
pub fn hsic(k: &KernelMatrix, l: &KernelMatrix) -> Result<f64> {
    check_same_n(k, l)?;
    let n = k.n;
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 1, got: n });
    }
    let kc = if k.centered { k.clone() } else { center_kernel(k) };
    let lc = if l.centered { l.clone() } else { center_kernel(l) };
    // Tr(KHLH) = <HKH, HLH>_F for symmetric K, L since H is idempotent
    let denom = ((n - 1) * (n - 1)) as f64;
    Ok(frobenius_inner(&kc.data, &lc.data) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Provenance;
    use alloc::vec;

    #[test]
    fn kernel_names_round_trip() {
        for s in ["linear", "gaussian", "gaussian:0.5", "gaussian-unsquared", "laplacian:2"] {
            let k: KernelKind = s.parse().unwrap();
            assert_eq!(alloc::format!("{k}"), s);
        }
        assert!("gaussian:-1".parse::<KernelKind>().is_err());
        assert!("linear:1".parse::<KernelKind>().is_err());
        assert!("poly".parse::<KernelKind>().is_err());
    }

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, Provenance::Raw).unwrap()
    }

    #[test]
    fn linear_identity() {
        let k = compute_kernel(&fm(&[&[1.0, 0.0], &[0.0, 1.0]]), KernelKind::Linear).unwrap();
        assert_eq!(k.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn gaussian_identical_rows_is_all_ones() {
        let f = fm(&[&[0.3, -2.0], &[0.3, -2.0], &[0.3, -2.0]]);
        for sigma in [0.1, 1.0, 7.5] {
            let k = compute_kernel(&f, KernelKind::Gaussian(Bandwidth::Fixed(sigma))).unwrap();
            assert!(k.as_slice().iter().all(|&v| v == 1.0));
        }
        let k = compute_kernel(&f, KernelKind::Gaussian(Bandwidth::Median)).unwrap();
        assert!(k.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn distance_kernels_have_unit_diagonal() {
        let f = fm(&[&[1.0, 2.0], &[-1.0, 0.5], &[3.0, 3.0]]);
        for kind in [
            KernelKind::Gaussian(Bandwidth::Median),
            KernelKind::GaussianUnsquared(Bandwidth::Median),
            KernelKind::Laplacian(Bandwidth::Fixed(2.0)),
        ] {
            let k = compute_kernel(&f, kind).unwrap();
            assert!((0..3).all(|i| k.get(i, i) == 1.0));
        }
    }

    #[test]
    fn bad_bandwidth() {
        let f = fm(&[&[1.0], &[2.0]]);
        for s in [0.0, -1.0, f64::NAN] {
            let err = compute_kernel(&f, KernelKind::Laplacian(Bandwidth::Fixed(s))).unwrap_err();
            assert!(matches!(err, Error::InvalidBandwidth(_)));
        }
    }

    #[test]
    fn median_bandwidth_is_median_distance() {
        // distances 1, 2, 3
        let f = fm(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(resolve_bandwidth(&f, KernelKind::Gaussian(Bandwidth::Median)).unwrap(), Some(2.0));
        assert_eq!(resolve_bandwidth(&f, KernelKind::Laplacian(Bandwidth::Median)).unwrap(), Some(2.0));
    }

    #[test]
    fn all_ones_centers_to_zero() {
        let k = KernelMatrix::from_raw(3, vec![1.0; 9]).unwrap();
        let c = center_kernel(&k);
        assert!(c.as_slice().iter().all(|&v| v == 0.0));
        assert!(c.is_centered());
    }

    #[test]
    fn from_raw_symmetrizes() {
        let k = KernelMatrix::from_raw(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(k.get(0, 1), 3.0);
        assert_eq!(k.get(1, 0), 3.0);
    }

    #[test]
    fn alignment_scale_invariant() {
        let k = KernelMatrix::from_raw(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let k3 = KernelMatrix::from_raw(2, vec![6.0, 3.0, 3.0, 9.0]).unwrap();
        assert!((alignment(&k, &k).unwrap() - 1.0).abs() < 1e-15);
        assert!((alignment(&k, &k3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alignment_zero_norm() {
        let z = KernelMatrix::from_raw(2, vec![0.0; 4]).unwrap();
        assert_eq!(alignment(&z, &z), Err(Error::DegenerateKernel));
    }

    #[test]
    fn cka_cluster_features_match_labels() {
        let f = fm(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let ks = compute_kernel(&f, KernelKind::Linear).unwrap();
        let ky = target_kernel(&LabelVector::from_labels(vec![0, 0, 1, 1]).unwrap());
        assert_eq!(ks, KernelMatrix { source: KernelSource::Linear, ..ky.clone() });
        assert!((cka(&ks, &ky).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cka_constant_features_is_degenerate() {
        let f = fm(&[&[0.1, 0.7], &[0.1, 0.7], &[0.1, 0.7]]);
        let ks = compute_kernel(&f, KernelKind::Linear).unwrap();
        let ky = target_kernel(&LabelVector::from_labels(vec![0, 1, 1]).unwrap());
        assert_eq!(cka(&ks, &ky), Err(Error::DegenerateKernel));
        let constant_labels = target_kernel(&LabelVector::from_labels(vec![2, 2, 2]).unwrap());
        let g = compute_kernel(&fm(&[&[0.0], &[1.0], &[5.0]]), KernelKind::Linear).unwrap();
        assert_eq!(cka(&g, &constant_labels), Err(Error::DegenerateKernel));
    }

    #[test]
    fn cka_shape_mismatch() {
        let a = KernelMatrix::from_raw(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = KernelMatrix::from_raw(1, vec![1.0]).unwrap();
        assert_eq!(cka(&a, &b), Err(Error::ShapeMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn hsic_identity_two_samples() {
        let i2 = KernelMatrix::from_raw(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((hsic(&i2, &i2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hsic_with_constant_is_zero() {
        let k = KernelMatrix::from_raw(3, vec![2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]).unwrap();
        let ones = KernelMatrix::from_raw(3, vec![1.0; 9]).unwrap();
        assert_eq!(hsic(&k, &ones).unwrap(), 0.0);
    }

    #[test]
    fn target_kernel_patterns() {
        let k = target_kernel(&LabelVector::from_labels(vec![0, 0, 1, 1]).unwrap());
        assert_eq!(
            k.as_slice(),
            &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]
        );
        let same = target_kernel(&LabelVector::from_labels(vec![4, 4, 4]).unwrap());
        assert!(same.as_slice().iter().all(|&v| v == 1.0));
        let distinct = target_kernel(&LabelVector::from_labels(vec![2, 0, 1]).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(distinct.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}
