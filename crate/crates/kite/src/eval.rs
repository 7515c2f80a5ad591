//! Benchmark evaluation and model ranking.

use std::collections::BTreeMap;
use std::path::Path;

use kite_core::evaluation::{te_aggregate, EvalReport, ScoreRow, ScoreTable};
use kite_core::{FeatureMatrix, Warning};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, RunConfig};
use crate::format::read_features;
use crate::manifest::{load_manifest, load_score_table, load_targets, ModelManifest, TargetList};
use crate::runner::{estimator_names, mean_std, prepare_target, score_model, PreparedTarget, Target};
use crate::{Error, Result, VERSION};

/// Reads a target file; it must carry labels.
pub fn load_target(id: &str, path: &Path) -> Result<Target> {
    let file = read_features(path)?;
    let labels = file
        .labels
        .ok_or_else(|| Error::Schema(format!("target file {} has no labels", path.display())))?;
    Ok(Target { id: id.to_string(), raw: file.features, labels })
}

fn load_model_features(manifest: &ModelManifest, target: &str) -> Result<Vec<FeatureMatrix>> {
    manifest
        .models
        .par_iter()
        .map(|m| {
            let p = manifest.feature_path(m, target);
            if !p.is_file() {
                return Err(Error::MissingFile(p));
            }
            Ok(read_features(&p)?.features)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub model_id: String,
    pub target_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub model_id: String,
    pub target_id: String,
    /// One score per estimator, in config order.
    pub scores: Vec<f64>,
}

struct TargetScores {
    records: Vec<ScoreRecord>,
    failures: Vec<Failure>,
    warnings: Vec<Warning>,
}

fn score_target(
    manifest: &ModelManifest,
    features: &[FeatureMatrix],
    prepared: &PreparedTarget,
    cfg: &Resolved,
    seed: u64,
) -> TargetScores {
    let target_size = prepared.probe_indices.len() as u64;
    let results: Vec<_> = manifest
        .models
        .par_iter()
        .zip(features.par_iter())
        .map(|(m, f)| score_model(prepared, f, m.meta(target_size), cfg))
        .collect();
    let mut out = TargetScores { records: Vec::new(), failures: Vec::new(), warnings: prepared.warnings.clone() };
    for (m, r) in manifest.models.iter().zip(results) {
        match r {
            Ok((scores, w)) => {
                out.warnings.extend(w);
                out.records.push(ScoreRecord { model_id: m.model_id.clone(), target_id: prepared.id.clone(), scores });
            }
            Err(e) => out.failures.push(Failure {
                seed,
                model_id: m.model_id.clone(),
                target_id: prepared.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    out
}

fn dedup(warnings: Vec<Warning>) -> Vec<Warning> {
    let mut out: Vec<Warning> = Vec::new();
    for w in warnings {
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    pub reports: Vec<EvalReport>,
    pub scores: Vec<ScoreRecord>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub mean_pc: f64,
    pub std_pc: f64,
    pub mean_tau: f64,
    pub std_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub version: String,
    pub config: RunConfig,
    pub estimators: Vec<String>,
    pub per_seed: Vec<SeedEval>,
    /// Mean and sample standard deviation across seeds.
    pub summary: Vec<EstimatorSummary>,
    pub failures: Vec<Failure>,
}

impl EvalOutput {
    pub fn summary_for(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.summary.iter().find(|s| s.estimator == estimator)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// One row per (seed, estimator, target) plus a MEAN row per
    /// (seed, estimator).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,estimator,target_id,n_models,pc,tau\n");
        for s in &self.per_seed {
            for r in &s.reports {
                for t in &r.per_target {
                    out.push_str(&format!("{},{},{},{},{},{}\n", s.seed, r.estimator, t.target_id, t.n_models, t.pc, t.tau));
                }
                out.push_str(&format!("{},{},MEAN,,{},{}\n", s.seed, r.estimator, r.mean_pc, r.mean_tau));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("estimator,mean_pc,std_pc,mean_tau,std_tau,seeds\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.estimator,
                s.mean_pc,
                s.std_pc,
                s.mean_tau,
                s.std_tau,
                self.per_seed.len()
            ));
        }
        out
    }

    pub fn scores_csv(&self) -> String {
        let mut out = format!("seed,model_id,target_id,{}\n", self.estimators.join(","));
        for s in &self.per_seed {
            for r in &s.scores {
                let vals: Vec<String> = r.scores.iter().map(f64::to_string).collect();
                out.push_str(&format!("{},{},{},{}\n", s.seed, r.model_id, r.target_id, vals.join(",")));
            }
        }
        out
    }
}

/// Loaded inputs of an evaluation.
pub struct Benchmark {
    pub manifest: ModelManifest,
    pub targets: TargetList,
    pub truth: ScoreTable,
}

impl Benchmark {
    pub fn load(manifest: &Path, targets: &Path, ground_truth: &Path) -> Result<Self> {
        let manifest = load_manifest(manifest)?;
        let targets = load_targets(targets)?;
        manifest.check_files(targets.ids())?;
        let truth = load_score_table(ground_truth)?;
        Ok(Self { manifest, targets, truth })
    }

    fn truth_lookup(&self) -> Result<BTreeMap<(&str, &str), f64>> {
        let map: BTreeMap<(&str, &str), f64> =
            self.truth.rows().iter().map(|r| ((r.model_id.as_str(), r.target_id.as_str()), r.accuracy)).collect();
        for t in self.targets.ids() {
            for m in &self.manifest.models {
                if !map.contains_key(&(m.model_id.as_str(), t)) {
                    return Err(Error::Schema(format!("ground truth has no row for ({}, {t})", m.model_id)));
                }
            }
        }
        Ok(map)
    }

    /// Scores every model on every target for each seed, then correlates.
    pub fn evaluate(&self, config: &RunConfig) -> Result<EvalOutput> {
        let cfg = config.resolve()?;
        let truth = self.truth_lookup()?;
        let names = estimator_names(&cfg.estimators);
        let mut data = Vec::new();
        for t in &self.targets.targets {
            let target = load_target(&t.target_id, &self.targets.path(t))?;
            let features = load_model_features(&self.manifest, &t.target_id)?;
            data.push((target, features));
        }

        let mut per_seed = Vec::new();
        let mut failures = Vec::new();
        for &seed in &cfg.seeds {
            let mut records = Vec::new();
            let mut warnings = Vec::new();
            for (target, features) in &data {
                let dims: Vec<usize> = features.iter().map(FeatureMatrix::cols).collect();
        let prepared = prepare_target(target, &dims, &cfg, seed)?;
                let ts = score_target(&self.manifest, features, &prepared, &cfg, seed);
                records.extend(ts.records);
                failures.extend(ts.failures);
                warnings.extend(ts.warnings);
            }
            let mut reports = Vec::new();
            for (e, name) in names.iter().enumerate() {
                let mut table = ScoreTable::new(self.truth.unit());
                for r in &records {
                    table.insert(ScoreRow {
                        model_id: r.model_id.clone(),
                        target_id: r.target_id.clone(),
                        scores: BTreeMap::from([(name.clone(), r.scores[e])]),
                        accuracy: truth[&(r.model_id.as_str(), r.target_id.as_str())],
                    })?;
                }
                reports.push(te_aggregate(&table, name)?);
            }
            per_seed.push(SeedEval { seed, reports, scores: records, warnings: dedup(warnings) });
        }

        let summary = names
            .iter()
            .enumerate()
            .map(|(e, name)| {
                let pcs: Vec<f64> = per_seed.iter().map(|s| s.reports[e].mean_pc).collect();
                let taus: Vec<f64> = per_seed.iter().map(|s| s.reports[e].mean_tau).collect();
                let (mean_pc, std_pc) = mean_std(&pcs);
                let (mean_tau, std_tau) = mean_std(&taus);
                EstimatorSummary { estimator: name.clone(), mean_pc, std_pc, mean_tau, std_tau }
            })
            .collect();
        Ok(EvalOutput {
            version: VERSION.to_string(),
            config: config.clone(),
            estimators: names,
            per_seed,
            summary,
            failures,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub model_id: String,
    /// Mean over seeds.
    pub score: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOutput {
    pub version: String,
    pub config: RunConfig,
    pub target_id: String,
    pub estimator: String,
    pub rows: Vec<RankRow>,
    pub failures: Vec<Failure>,
    pub warnings: Vec<Warning>,
}

impl RankOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,model_id,score,std\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.rank, r.model_id, r.score, r.std));
        }
        out
    }
}

/// Ranks the manifest's models on `target` by one estimator, best first.
/// Equal scores are ordered by model id.
pub fn rank_models(manifest: &ModelManifest, target: &Target, config: &RunConfig) -> Result<RankOutput> {
    let cfg = config.resolve()?;
    if cfg.estimators.len() != 1 {
        return Err(Error::Config("rank takes exactly one estimator".into()));
    }
    manifest.check_files([target.id.as_str()])?;
    let features = load_model_features(manifest, &target.id)?;
    let mut per_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for &seed in &cfg.seeds {
        let dims: Vec<usize> = features.iter().map(FeatureMatrix::cols).collect();
        let prepared = prepare_target(target, &dims, &cfg, seed)?;
        let ts = score_target(manifest, &features, &prepared, &cfg, seed);
        for r in ts.records {
            let id = manifest.models.iter().find(|m| m.model_id == r.model_id).expect("scored model is listed");
            per_model.entry(id.model_id.as_str()).or_default().push(r.scores[0]);
        }
        failures.extend(ts.failures);
        warnings.extend(ts.warnings);
    }
    let failed: Vec<&str> = failures.iter().map(|f| f.model_id.as_str()).collect();
    let mut rows: Vec<RankRow> = per_model
        .into_iter()
        .filter(|(id, _)| !failed.contains(id))
        .map(|(id, s)| {
            let (score, std) = mean_std(&s);
            RankRow { rank: 0, model_id: id.to_string(), score, std }
        })
        .collect();
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.model_id.cmp(&b.model_id)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(RankOutput {
        version: VERSION.to_string(),
        config: config.clone(),
        target_id: target.id.clone(),
        estimator: estimator_names(&cfg.estimators).remove(0),
        rows,
        failures,
        warnings: dedup(warnings),
    })
}
