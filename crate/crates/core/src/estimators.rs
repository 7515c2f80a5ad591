//! Transferability estimators.
//!
//! Every estimator maps a [`ScoreRequest`] to one real number, larger meaning
//! "expected to transfer better" (RA and HSIC are the exception: they
//! measure resemblance to random features and are reported as-is).
//! Built-in estimators are enumerated by [`EstimatorKind`]; additional
//! scores can be plugged in by implementing [`Estimator`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::kernel::{self, alignment, center_checked, compute_kernel, target_kernel, KernelKind, KernelMatrix};
use crate::{Error, FeatureMatrix, LabelVector, Result};

/// RA values below this make the KITE ratio meaningless.
pub const RA_FLOOR: f64 = 1e-12;

/// Architecture and dataset-size metadata used by the heuristic baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelMeta {
    /// Number of layers of the pre-trained model.
    pub layers: u64,
    /// Size of the source (pre-training) dataset.
    pub source_size: u64,
    /// Size of the target dataset.
    pub target_size: u64,
}

impl ModelMeta {
    pub fn new(layers: u64, source_size: u64, target_size: u64) -> Result<Self> {
        if layers == 0 || source_size == 0 || target_size == 0 {
            return Err(Error::InvalidSpec("model metadata fields must be positive".to_string()));
        }
        Ok(Self { layers, source_size, target_size })
    }
}

/// Everything an estimator may look at. Inputs an estimator does not use may
/// be left out.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    /// Probe features of the pre-trained model.
    pub pretrained: &'a FeatureMatrix,
    /// Probe features of the untrained network, already seed-averaged.
    pub random: Option<&'a FeatureMatrix>,
    pub labels: Option<&'a LabelVector>,
    pub kernel: KernelKind,
    pub meta: Option<ModelMeta>,
}

impl<'a> ScoreRequest<'a> {
    pub fn new(pretrained: &'a FeatureMatrix, kernel: KernelKind) -> Self {
        Self { pretrained, random: None, labels: None, kernel, meta: None }
    }

    pub fn with_random(mut self, random: &'a FeatureMatrix) -> Self {
        self.random = Some(random);
        self
    }

    pub fn with_labels(mut self, labels: &'a LabelVector) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_meta(mut self, meta: ModelMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    fn labels(&self) -> Result<&'a LabelVector> {
        let labels = self.labels.ok_or(Error::MissingInput("labels"))?;
        if labels.len() != self.pretrained.rows() {
            return Err(Error::ShapeMismatch { expected: self.pretrained.rows(), got: labels.len() });
        }
        Ok(labels)
    }

    fn random(&self) -> Result<&'a FeatureMatrix> {
        let random = self.random.ok_or(Error::MissingInput("random features"))?;
        if random.rows() != self.pretrained.rows() {
            return Err(Error::ShapeMismatch { expected: self.pretrained.rows(), got: random.rows() });
        }
        Ok(random)
    }
}

/// A transferability score.
pub trait Estimator {
    fn name(&self) -> String;
    fn score(&self, request: &ScoreRequest<'_>) -> Result<f64>;
}

/// The built-in estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimatorKind {
    /// `TA / RA`
    Kite,
    /// CKA with the label kernel.
    Ta,
    /// CKA with the random-network kernel.
    Ra,
    /// `TA - lambda * RA`
    LinearCombo { lambda: f64 },
    /// HSIC between the pre-trained and random-network kernels.
    Hsic,
    /// `layers + ln(|source| + |target|)`
    Heuristic,
    /// Leave-one-out k-NN accuracy on the probe.
    KnnCv { k: usize },
}

impl EstimatorKind {
    pub fn needs_random(&self) -> bool {
        matches!(self, Self::Kite | Self::Ra | Self::LinearCombo { .. } | Self::Hsic)
    }

    pub fn needs_labels(&self) -> bool {
        matches!(self, Self::Kite | Self::Ta | Self::LinearCombo { .. } | Self::KnnCv { .. })
    }

    pub fn needs_meta(&self) -> bool {
        matches!(self, Self::Heuristic)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Kite => f.write_str("kite"),
            Self::Ta => f.write_str("ta"),
            Self::Ra => f.write_str("ra"),
            Self::LinearCombo { lambda } => write!(f, "lincomb:{lambda}"),
            Self::Hsic => f.write_str("hsic"),
            Self::Heuristic => f.write_str("heuristic"),
            Self::KnnCv { k } => write!(f, "knn:{k}"),
        }
    }
}

/// Accepts `kite`, `ta`, `ra`, `hsic`, `heuristic`, `lincomb[:LAMBDA]`
/// (default 1) and `knn[:K]` (default 1). `1nn-cv` and `5nn-cv` are aliases.
impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || Error::UnknownEstimator(s.to_string());
        let kind = match (name, arg) {
            ("kite", None) => Self::Kite,
            ("ta", None) => Self::Ta,
            ("ra", None) => Self::Ra,
            ("hsic", None) => Self::Hsic,
            ("heuristic", None) => Self::Heuristic,
            ("lincomb" | "linear_combo", a) => {
                let lambda = a.map_or(Ok(1.0), |a| a.parse::<f64>().map_err(|_| bad()))?;
                if !lambda.is_finite() {
                    return Err(bad());
                }
                Self::LinearCombo { lambda }
            }
            ("knn" | "knn_cv", a) => {
                let k = a.map_or(Ok(1), |a| a.parse::<usize>().map_err(|_| bad()))?;
                if k == 0 {
                    return Err(bad());
                }
                Self::KnnCv { k }
            }
            ("1nn-cv", None) => Self::KnnCv { k: 1 },
            ("5nn-cv", None) => Self::KnnCv { k: 5 },
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

impl Estimator for EstimatorKind {
    fn name(&self) -> String {
        format!("{self}")
    }

    fn score(&self, request: &ScoreRequest<'_>) -> Result<f64> {
        match *self {
            Self::Kite => score_kite(request),
            Self::Ta => score_ta(request.pretrained, request.labels()?, request.kernel),
            Self::Ra => score_ra(request.pretrained, request.random()?, request.kernel),
            Self::LinearCombo { lambda } => score_linear_combo(request, lambda),
            Self::Hsic => score_hsic_alt(request.pretrained, request.random()?, request.kernel),
            Self::Heuristic => Ok(score_heuristic(&request.meta.ok_or(Error::MissingInput("model metadata"))?)),
            Self::KnnCv { k } => score_knn_cv(request.pretrained, request.labels()?, k),
        }
    }
}

fn centered_features(features: &FeatureMatrix, kind: KernelKind) -> Result<KernelMatrix> {
    center_checked(&compute_kernel(features, kind)?)
}

/// Target alignment: CKA between the feature kernel and the label kernel.
pub fn score_ta(pretrained: &FeatureMatrix, labels: &LabelVector, kind: KernelKind) -> Result<f64> {
    if labels.len() != pretrained.rows() {
        return Err(Error::ShapeMismatch { expected: pretrained.rows(), got: labels.len() });
    }
    let ks = centered_features(pretrained, kind)?;
    let ky = center_checked(&target_kernel(labels))?;
    alignment(&ks, &ky)
}

/// Random alignment: CKA between the pre-trained and random-network kernels.
pub fn score_ra(pretrained: &FeatureMatrix, random: &FeatureMatrix, kind: KernelKind) -> Result<f64> {
    if random.rows() != pretrained.rows() {
        return Err(Error::ShapeMismatch { expected: pretrained.rows(), got: random.rows() });
    }
    let ks = centered_features(pretrained, kind)?;
    let kr = centered_features(random, kind)?;
    alignment(&ks, &kr)
}

/// TA and RA computed from one shared feature kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignments {
    pub ta: f64,
    pub ra: f64,
}

impl Alignments {
    pub fn kite(&self) -> Result<f64> {
        if self.ra < RA_FLOOR {
            return Err(Error::DegenerateRa(self.ra));
        }
        Ok(self.ta / self.ra)
    }
}

pub fn alignments(request: &ScoreRequest<'_>) -> Result<Alignments> {
    let labels = request.labels()?;
    let random = request.random()?;
    let ks = centered_features(request.pretrained, request.kernel)?;
    let ky = center_checked(&target_kernel(labels))?;
    let kr = centered_features(random, request.kernel)?;
    Ok(Alignments { ta: alignment(&ks, &ky)?, ra: alignment(&ks, &kr)? })
}

/// KITE: `TA / RA`. Fails with [`Error::DegenerateRa`] when RA is below
/// [`RA_FLOOR`].
pub fn score_kite(request: &ScoreRequest<'_>) -> Result<f64> {
    alignments(request)?.kite()
}

/// `TA - lambda * RA`.
pub fn score_linear_combo(request: &ScoreRequest<'_>, lambda: f64) -> Result<f64> {
    let a = alignments(request)?;
    Ok(a.ta - lambda * a.ra)
}

/// HSIC between the pre-trained and random-network kernels.
pub fn score_hsic_alt(pretrained: &FeatureMatrix, random: &FeatureMatrix, kind: KernelKind) -> Result<f64> {
    if random.rows() != pretrained.rows() {
        return Err(Error::ShapeMismatch { expected: pretrained.rows(), got: random.rows() });
    }
    kernel::hsic(&compute_kernel(pretrained, kind)?, &compute_kernel(random, kind)?)
}

/// `layers + ln(|source| + |target|)`.
pub fn score_heuristic(meta: &ModelMeta) -> f64 {
    meta.layers as f64 + libm::log((meta.source_size + meta.target_size) as f64)
}

/// Leave-one-out k-NN accuracy under Euclidean distance.
///
/// Neighbours at equal distance are taken in sample order; a tied vote goes
/// to the smallest class id.
pub fn score_knn_cv(features: &FeatureMatrix, labels: &LabelVector, k: usize) -> Result<f64> {
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: labels.len() });
    }
    if k == 0 || n <= k {
        return Err(Error::TooFewSamples { needed: k, got: n });
    }
    let y = labels.as_slice();
    let mut votes = alloc::vec![0usize; labels.num_classes() as usize];
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut correct = 0usize;
    for i in 0..n {
        cand.clear();
        let xi = features.row(i);
        cand.extend((0..n).filter(|&j| j != i).map(|j| (kernel::squared_euclidean(xi, features.row(j)), j)));
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, order);
        }
        votes.iter_mut().for_each(|v| *v = 0);
        for &(_, j) in &cand[..k] {
            votes[y[j] as usize] += 1;
        }
        // first maximum = smallest class id
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        if best as u32 == y[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / n as f64)
}
