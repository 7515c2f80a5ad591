//! Scoring pipeline shared by the commands.
//!
//! For one run seed and one target: draw a stratified probe from the target
//! pool and build random features on the probe's raw inputs, one set per
//! distinct model feature width. Then for each model take the probe rows of
//! its features, reduce them with PCA when they are wider than `pca_dim`,
//! and score them against the random features of the same width, reduced
//! the same way.

use std::collections::BTreeMap;

use kite_core::estimators::{Estimator, EstimatorKind, ModelMeta, ScoreRequest};
use kite_core::preprocess::{reduce, sample_probe};
use kite_core::random_features::{gaussian_random_features, random_mlp_features};
use kite_core::{seed, FeatureMatrix, LabelVector, Warning};

use crate::config::{RandomKind, Resolved};
use crate::Result;

/// A target dataset: raw inputs and labels of the probe pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: String,
    pub raw: FeatureMatrix,
    pub labels: LabelVector,
}

/// Per-seed state of a target shared by all models.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTarget {
    pub id: String,
    pub pool_size: usize,
    pub probe_indices: Vec<usize>,
    pub labels: LabelVector,
    /// Seed-averaged random features of the probe by output width, already
    /// reduced.
    pub random: BTreeMap<usize, FeatureMatrix>,
    pub warnings: Vec<Warning>,
}

pub fn probe_seed(run_seed: u64, target: &str) -> u64 {
    seed::derive(run_seed, &format!("probe/{target}"))
}

pub fn random_seed(run_seed: u64, target: &str) -> u64 {
    seed::derive(run_seed, &format!("random/{target}"))
}

/// Random features for probe inputs `raw` to compare with model features of
/// width `model_dim`, reduced like model features.
pub fn random_features(
    raw: &FeatureMatrix,
    model_dim: usize,
    cfg: &Resolved,
    base_seed: u64,
) -> Result<(FeatureMatrix, Option<Warning>)> {
    let out = cfg.random_output_dim(model_dim);
    let features = match cfg.random_net.kind {
        RandomKind::Mlp => random_mlp_features(raw, &cfg.net_spec(raw.cols(), out, base_seed))?,
        RandomKind::Gaussian => gaussian_random_features(raw.rows(), out, base_seed)?,
    };
    Ok(reduce(&features, cfg.pca_dim)?)
}

/// Probe and random features of `target` for models of the given widths.
pub fn prepare_target(
    target: &Target,
    model_dims: &[usize],
    cfg: &Resolved,
    run_seed: u64,
) -> Result<PreparedTarget> {
    let mut warnings = Vec::new();
    let (probe, w) = sample_probe(&target.raw, &target.labels, cfg.probe_size, probe_seed(run_seed, &target.id))?;
    warnings.extend(w);
    let mut random = BTreeMap::new();
    if cfg.needs_random() {
        for &d in model_dims {
            if random.contains_key(&d) {
                continue;
            }
            let (r, w) = random_features(&probe.features, d, cfg, random_seed(run_seed, &target.id))?;
            warnings.extend(w);
            random.insert(d, r);
        }
    }
    Ok(PreparedTarget {
        id: target.id.clone(),
        pool_size: target.raw.rows(),
        probe_indices: probe.indices,
        labels: probe.labels,
        random,
        warnings,
    })
}

/// Scores of every estimator in `estimators` on already-probed features.
pub fn score_probe(
    features: &FeatureMatrix,
    labels: Option<&LabelVector>,
    random: Option<&FeatureMatrix>,
    meta: Option<ModelMeta>,
    cfg: &Resolved,
) -> Result<(Vec<f64>, Option<Warning>)> {
    let (reduced, warning) = reduce(features, cfg.pca_dim)?;
    let mut req = ScoreRequest::new(&reduced, cfg.kernel);
    if let Some(l) = labels {
        req = req.with_labels(l);
    }
    if let Some(r) = random {
        req = req.with_random(r);
    }
    if let Some(m) = meta {
        req = req.with_meta(m);
    }
    let scores = cfg.estimators.iter().map(|e| e.score(&req)).collect::<kite_core::Result<Vec<_>>>()?;
    Ok((scores, warning))
}

/// Scores one model's pool features on a prepared target.
pub fn score_model(
    prepared: &PreparedTarget,
    features: &FeatureMatrix,
    meta: Option<ModelMeta>,
    cfg: &Resolved,
) -> Result<(Vec<f64>, Option<Warning>)> {
    if features.rows() != prepared.pool_size {
        return Err(kite_core::Error::ShapeMismatch { expected: prepared.pool_size, got: features.rows() }.into());
    }
    let probe = features.select_rows(&prepared.probe_indices)?;
    score_probe(&probe, Some(&prepared.labels), prepared.random.get(&features.cols()), meta, cfg)
}

pub fn estimator_names(estimators: &[EstimatorKind]) -> Vec<String> {
    estimators.iter().map(|e| e.name()).collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
