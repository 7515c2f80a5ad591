//! Writes synthetic data sets and model zoos as ordinary benchmark files.
//!
//! A zoo directory holds
//!
//! ```text
//! manifest.json               models, feature paths templated on {target}
//! targets.json                target list
//! truth.csv                   ground-truth accuracy per (model, target)
//! targets/<target>.kfea       probe-pool raw inputs with labels
//! features/<model>/<target>.kfea
//! ```

use std::path::{Path, PathBuf};

use kite_core::evaluation::{AccuracyUnit, ScoreRow, ScoreTable};
use kite_core::seed;
use kite_core::synth::{gen_gaussian_mixture, gen_synthetic_zoo, gen_task, GaussianMixtureSpec, SyntheticZooSpec, TaskSpec};
use serde::Serialize;

use crate::format::{write_features, FeatureFile};
use crate::manifest::{score_table_csv, ManifestEntry, ModelManifest, TargetEntry, TargetList, TARGET_PLACEHOLDER};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TARGETS_FILE: &str = "targets.json";
pub const TRUTH_FILE: &str = "truth.csv";

/// Two unit-variance Gaussians `separation` apart, `n` samples in total.
pub fn write_gaussian(path: &Path, separation: f64, n: usize, dim: usize, seed: u64) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("n must be even and at least 2, got {n}")));
    }
    let spec = GaussianMixtureSpec::two_gaussians(separation, dim, n / 2, seed);
    let (features, labels) = gen_gaussian_mixture(&spec)?;
    write_features(path, &FeatureFile::new(features, Some(labels)).expect("one label per sample"))
}

/// A named task in a zoo suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteTask {
    pub target_id: String,
    pub spec: TaskSpec,
}

pub const EASY_CLASSES: usize = 5;
pub const EASY_SEPARATION: f64 = 2.0;
pub const HARD_CLASSES: usize = 20;
pub const HARD_SEPARATION: f64 = 0.3;

/// Task seeds derive from the suite seed and the target id.
pub fn easy_task(seed: u64) -> SuiteTask {
    SuiteTask {
        target_id: "easy".into(),
        spec: TaskSpec::easy(EASY_CLASSES, EASY_SEPARATION, seed::derive(seed, "task/easy")),
    }
}

pub fn hard_task(classes: usize, separation: f64, seed: u64) -> SuiteTask {
    SuiteTask { target_id: "hard".into(), spec: TaskSpec::hard(classes, separation, seed::derive(seed, "task/hard")) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZooSummary {
    pub dir: PathBuf,
    pub models: Vec<ModelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub quality: f64,
    /// Ground-truth accuracy per target, in suite order.
    pub accuracy: Vec<(String, f64)>,
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    std::fs::write(p, text).map_err(|e| Error::io(p, e))
}

/// Generates a zoo of `num_models` evenly spaced qualities on every task.
pub fn write_zoo(dir: &Path, tasks: &[SuiteTask], num_models: usize, seed: u64) -> Result<ZooSummary> {
    if tasks.is_empty() {
        return Err(Error::Config("no tasks given".into()));
    }
    if num_models < 1 {
        return Err(Error::Config("need at least one model".into()));
    }
    let zoo_spec = SyntheticZooSpec::evenly_spaced(num_models, 0);
    create_dir(&dir.join("targets"))?;
    let mut models: Vec<ModelSummary> = (0..num_models)
        .map(|j| ModelSummary {
            model_id: kite_core::synth::zoo_model_id(j),
            quality: zoo_spec.qualities[j],
            accuracy: Vec::new(),
        })
        .collect();
    let mut truth = ScoreTable::new(AccuracyUnit::Fraction);
    let mut targets = Vec::new();
    for task in tasks {
        let id = &task.target_id;
        let spec = SyntheticZooSpec { seed: seed::derive(seed, &format!("zoo/{id}")), ..zoo_spec.clone() };
        let zoo = gen_synthetic_zoo(&spec, &gen_task(&task.spec)?)?;
        let target_file = format!("targets/{id}.kfea");
        write_features(&dir.join(&target_file), &FeatureFile::new(zoo.probe_raw, Some(zoo.probe_labels)).expect("labelled"))?;
        targets.push(TargetEntry { target_id: id.clone(), feature_file: target_file });
        for (m, summary) in zoo.models.into_iter().zip(models.iter_mut()) {
            let mdir = dir.join("features").join(&m.model_id);
            create_dir(&mdir)?;
            write_features(&mdir.join(format!("{id}.kfea")), &FeatureFile::new(m.features, None).expect("unlabelled"))?;
            truth.insert(ScoreRow {
                model_id: m.model_id,
                target_id: id.clone(),
                scores: Default::default(),
                accuracy: m.accuracy,
            })?;
            summary.accuracy.push((id.clone(), m.accuracy));
        }
    }
    let entries = models
        .iter()
        .map(|m| ManifestEntry {
            architecture: Some("synthetic".into()),
            ..ManifestEntry::new(m.model_id.clone(), format!("features/{}/{TARGET_PLACEHOLDER}.kfea", m.model_id))
        })
        .collect();
    write_text(&dir.join(MANIFEST_FILE), &ModelManifest::new(entries, dir)?.to_json())?;
    write_text(&dir.join(TARGETS_FILE), &TargetList { targets, base_dir: dir.into() }.to_json())?;
    write_text(&dir.join(TRUTH_FILE), &score_table_csv(&truth))?;
    Ok(ZooSummary { dir: dir.into(), models })
}
