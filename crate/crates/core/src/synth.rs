//! Synthetic data and model zoos.
//!
//! A task is a Gaussian mixture in `raw_dim` dimensions whose class means sit
//! on scaled coordinate axes, so every pair of means is `separation` apart.
//! Each class may also carry zero-mean latent sub-modes that never appear in
//! the raw input. A zoo model of quality `q` sees
//!
//! ```text
//! (mean_c + q * mode + (1 - shrink * q) * noise) P + jitter * eta / sqrt(D)
//! ```
//!
//! with its own random orthonormal projection `P` and output noise `eta`.
//! Better models recover the sub-modes and suppress input noise. Their
//! ground-truth accuracy is 1-NN leave-one-out accuracy on a held-out split.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::estimators::score_knn_cv;
use crate::seed::{self, Rng};
use crate::{Error, FeatureMatrix, LabelVector, Provenance, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianMixtureSpec {
    /// One mean vector per class.
    pub means: Vec<Vec<f64>>,
    /// Per-coordinate variance.
    pub variance: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl GaussianMixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, n_per_class: usize, seed: u64) -> Self {
        Self { means, variance: 1.0, n_per_class, seed }
    }

    /// Two unit-variance classes in `dim` dimensions whose means differ by
    /// `separation` along the first axis.
    pub fn two_gaussians(separation: f64, dim: usize, n_per_class: usize, seed: u64) -> Self {
        let a = alloc::vec![0.0; dim];
        let mut b = a.clone();
        if let Some(first) = b.first_mut() {
            *first = separation;
        }
        Self::new(alloc::vec![a, b], n_per_class, seed)
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.means.is_empty() || d == 0 || self.n_per_class == 0 {
            return Err(Error::EmptyMatrix { rows: self.means.len() * self.n_per_class, cols: d });
        }
        if let Some(m) = self.means.iter().find(|m| m.len() != d) {
            return Err(Error::DimMismatch { expected: d, got: m.len() });
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("class means must be finite".into()));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidSpec(format!("variance must be positive, got {}", self.variance)));
        }
        Ok(())
    }
}

fn normal_vec(len: usize, rng: &mut Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Row-major `d_in x d_out` matrix with orthonormal rows (`d_in <= d_out`)
/// or orthonormal columns, uniformly distributed.
pub fn random_projection(d_in: usize, d_out: usize, rng: &mut Rng) -> Vec<f64> {
    let (tall, narrow) = (d_in.max(d_out), d_in.min(d_out));
    let g = nalgebra::DMatrix::from_vec(tall, narrow, normal_vec(tall * narrow, rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..narrow {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = alloc::vec![0.0; d_in * d_out];
    for i in 0..d_in {
        for j in 0..d_out {
            out[i * d_out + j] = if d_in >= d_out { q[(i, j)] } else { q[(j, i)] };
        }
    }
    out
}

/// `n_per_class` draws per class, interleaved so that sample `i` has class
/// `i % num_classes`.
pub fn gen_gaussian_mixture(spec: &GaussianMixtureSpec) -> Result<(FeatureMatrix, LabelVector)> {
    spec.validate()?;
    let (k, d) = (spec.num_classes(), spec.dim());
    let n = k * spec.n_per_class;
    let std = libm::sqrt(spec.variance);
    let mut rng = seed::rng(seed::derive(spec.seed, "mixture"));
    let mut data = normal_vec(n * d, &mut rng);
    let mut labels = Vec::with_capacity(n);
    for (i, row) in data.chunks_exact_mut(d).enumerate() {
        let c = i % k;
        for (x, m) in row.iter_mut().zip(&spec.means[c]) {
            *x = m + std * *x;
        }
        labels.push(c as u32);
    }
    let features = FeatureMatrix::new(n, d, data, Provenance::Synthetic)?;
    Ok((features, LabelVector::new(labels, k as u32)?))
}

/// A classification task with the latent parts the zoo models see.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskSpec {
    pub num_classes: usize,
    /// Distance between any two class means.
    pub separation: f64,
    /// Input dimension; at least `num_classes`.
    pub raw_dim: usize,
    pub num_samples: usize,
    /// Latent sub-modes per class; 1 means none.
    pub modes: usize,
    /// Typical distance between sub-modes of one class.
    pub mode_spread: f64,
    pub seed: u64,
}

pub const DEFAULT_TASK_SAMPLES: usize = 1500;
pub const HARD_TASK_MODES: usize = 4;
pub const HARD_TASK_SPREAD: f64 = 2.0;

impl TaskSpec {
    /// Few, well separated classes with no sub-structure.
    pub fn easy(num_classes: usize, separation: f64, seed: u64) -> Self {
        Self {
            num_classes,
            separation,
            raw_dim: num_classes.max(8),
            num_samples: DEFAULT_TASK_SAMPLES,
            modes: 1,
            mode_spread: 0.0,
            seed,
        }
    }

    /// Classes that are hard to tell apart from their means alone but carry
    /// sub-modes a good model can resolve.
    pub fn hard(num_classes: usize, separation: f64, seed: u64) -> Self {
        Self { modes: HARD_TASK_MODES, mode_spread: HARD_TASK_SPREAD, ..Self::easy(num_classes, separation, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidSpec("a task needs at least 2 classes".into()));
        }
        if self.raw_dim < self.num_classes {
            return Err(Error::InvalidSpec(format!(
                "raw_dim {} is smaller than num_classes {}",
                self.raw_dim, self.num_classes
            )));
        }
        if self.modes == 0 {
            return Err(Error::InvalidSpec("modes must be at least 1".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0)
            || !(self.mode_spread.is_finite() && self.mode_spread >= 0.0)
        {
            return Err(Error::InvalidSpec("separation and mode_spread must be finite and non-negative".into()));
        }
        if self.num_samples < 2 * self.num_classes {
            return Err(Error::TooFewSamples { needed: 2 * self.num_classes, got: self.num_samples });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub spec: TaskSpec,
    /// Observable input: class mean plus noise.
    pub raw: FeatureMatrix,
    pub labels: LabelVector,
    means: Vec<f64>,
    modes: Vec<f64>,
    noise: Vec<f64>,
}

impl SyntheticTask {
    pub fn into_parts(self) -> (FeatureMatrix, LabelVector) {
        (self.raw, self.labels)
    }
}

/// Draws a task. Labels cycle through the classes.
pub fn gen_task(spec: &TaskSpec) -> Result<SyntheticTask> {
    spec.validate()?;
    let (k, d, n, m) = (spec.num_classes, spec.raw_dim, spec.num_samples, spec.modes);
    let mut rng = seed::rng(seed::derive(spec.seed, "task"));
    let offset = spec.separation / core::f64::consts::SQRT_2;

    let mut centres = normal_vec(k * m * d, &mut rng);
    if m == 1 {
        centres.fill(0.0);
    } else {
        let scale = spec.mode_spread / libm::sqrt(2.0 * d as f64);
        for class in centres.chunks_exact_mut(m * d) {
            for j in 0..d {
                let mu = (0..m).map(|t| class[t * d + j]).sum::<f64>() / m as f64;
                for t in 0..m {
                    class[t * d + j] = (class[t * d + j] - mu) * scale;
                }
            }
        }
    }

    let mut labels = Vec::with_capacity(n);
    let mut means = alloc::vec![0.0; n * d];
    let mut modes = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = i % k;
        labels.push(c as u32);
        means[i * d + c] = offset;
        let t = rng.random_range(0..m);
        modes.extend_from_slice(&centres[(c * m + t) * d..(c * m + t + 1) * d]);
    }
    let noise = normal_vec(n * d, &mut rng);
    let raw_data = means.iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok(SyntheticTask {
        spec: spec.clone(),
        raw: FeatureMatrix::new(n, d, raw_data, Provenance::Synthetic)?,
        labels: LabelVector::new(labels, k as u32)?,
        means,
        modes,
        noise,
    })
}

/// Many classes, small separation: labels barely align with any zoo model.
pub fn gen_hard_task(num_classes: usize, separation: f64, seed: u64) -> Result<SyntheticTask> {
    gen_task(&TaskSpec::hard(num_classes, separation, seed))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticZooSpec {
    /// One model per quality level, each in `[0, 1]`.
    pub qualities: Vec<f64>,
    pub feature_dim: usize,
    pub jitter: f64,
    /// Fraction of input noise the best model removes.
    pub shrink: f64,
    /// Samples handed to the estimators; the rest define ground truth.
    pub probe_size: usize,
    pub seed: u64,
}

pub const DEFAULT_ZOO_MODELS: usize = 8;
pub const DEFAULT_ZOO_DIM: usize = 32;
pub const DEFAULT_ZOO_JITTER: f64 = 0.5;
pub const DEFAULT_ZOO_SHRINK: f64 = 0.7;
pub const DEFAULT_ZOO_PROBE: usize = 500;

impl SyntheticZooSpec {
    /// `num_models` qualities evenly spaced over `[0, 1]`.
    pub fn evenly_spaced(num_models: usize, seed: u64) -> Self {
        let qualities = match num_models {
            0 => Vec::new(),
            1 => alloc::vec![1.0],
            m => (0..m).map(|j| j as f64 / (m - 1) as f64).collect(),
        };
        Self {
            qualities,
            feature_dim: DEFAULT_ZOO_DIM,
            jitter: DEFAULT_ZOO_JITTER,
            shrink: DEFAULT_ZOO_SHRINK,
            probe_size: DEFAULT_ZOO_PROBE,
            seed,
        }
    }

    pub fn num_models(&self) -> usize {
        self.qualities.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.qualities.is_empty() {
            return Err(Error::InvalidSpec("a zoo needs at least one model".into()));
        }
        for (i, q) in self.qualities.iter().enumerate() {
            if !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidSpec(format!("quality {q} outside [0, 1]")));
            }
            if self.qualities[..i].contains(q) {
                return Err(Error::InvalidSpec(format!("quality {q} repeated")));
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidSpec("feature_dim must be at least 1".into()));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) || !(0.0..=1.0).contains(&self.shrink) {
            return Err(Error::InvalidSpec("jitter must be non-negative and shrink in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZooModel {
    pub model_id: String,
    pub quality: f64,
    /// Features of the probe samples.
    pub features: FeatureMatrix,
    /// 1-NN leave-one-out accuracy on the held-out samples.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticZoo {
    pub probe_raw: FeatureMatrix,
    pub probe_labels: LabelVector,
    /// Task rows of the probe samples.
    pub probe_indices: Vec<usize>,
    pub models: Vec<ZooModel>,
}

/// `zoo-00`, `zoo-01`, ...
pub fn zoo_model_id(j: usize) -> String {
    format!("zoo-{j:02}")
}

/// Builds one model per quality level on `task`.
///
/// The task rows are shuffled and split into a probe of `spec.probe_size`
/// samples and a held-out remainder.
pub fn gen_synthetic_zoo(spec: &SyntheticZooSpec, task: &SyntheticTask) -> Result<SyntheticZoo> {
    spec.validate()?;
    let n = task.raw.rows();
    let k = task.labels.num_classes() as usize;
    if spec.probe_size < 2 * k || spec.probe_size + 2 > n {
        return Err(Error::InvalidSpec(format!(
            "probe_size {} must be in {}..={} for this task",
            spec.probe_size,
            2 * k,
            n.saturating_sub(2)
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(spec.seed, "zoo-split")));
    let (probe, held) = order.split_at(spec.probe_size);
    let mut probe = probe.to_vec();
    let mut held = held.to_vec();
    probe.sort_unstable();
    held.sort_unstable();
    let held_labels = task.labels.select(&held)?;

    let d_in = task.spec.raw_dim;
    let d = spec.feature_dim;
    let inv_sqrt_d = 1.0 / libm::sqrt(d as f64);
    let model_seed = seed::derive(spec.seed, "zoo-model");
    let mut models = Vec::with_capacity(spec.num_models());
    for (j, &q) in spec.qualities.iter().enumerate() {
        let mut rng = seed::rng_stream(model_seed, j as u64);
        let proj = random_projection(d_in, d, &mut rng);
        let keep = 1.0 - spec.shrink * q;
        let latent: Vec<f64> = (0..n * d_in)
            .map(|i| task.means[i] + q * task.modes[i] + keep * task.noise[i])
            .collect();
        let mut out = FeatureMatrix::new(n, d_in, latent, Provenance::Synthetic)?.matmul(&proj, d)?.into_vec();
        for v in out.iter_mut() {
            let eta: f64 = StandardNormal.sample(&mut rng);
            *v += spec.jitter * inv_sqrt_d * eta;
        }
        let all = FeatureMatrix::new(n, d, out, Provenance::Synthetic)?;
        let accuracy = score_knn_cv(&all.select_rows(&held)?, &held_labels, 1)?;
        models.push(ZooModel { model_id: zoo_model_id(j), quality: q, features: all.select_rows(&probe)?, accuracy });
    }
    Ok(SyntheticZoo {
        probe_raw: task.raw.select_rows(&probe)?,
        probe_labels: task.labels.select(&probe)?,
        probe_indices: probe,
        models,
    })
}
