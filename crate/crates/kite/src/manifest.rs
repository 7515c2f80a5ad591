//! Model manifests, target lists and ground-truth tables.
//!
//! A manifest is a JSON document
//!
//! ```json
//! {"models": [{"model_id": "resnet50", "feature_file": "feats/resnet50/{target}.kfea",
//!              "architecture": "resnet", "layers": 50,
//!              "source_name": "imagenet", "source_size": 1281167}]}
//! ```
//!
//! Relative paths resolve against the manifest's directory. `{target}` in a
//! feature path is replaced with the target id, so one entry can serve many
//! targets. A target list has the same shape with a `targets` array of
//! `{"target_id", "feature_file"}`; target files carry raw inputs and labels.
//!
//! Ground truth is CSV with columns `model_id,target_id,accuracy`, where
//! accuracy is a fraction in `[0, 1]`. Naming the last column
//! `accuracy_percent` declares percentages instead.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use kite_core::estimators::ModelMeta;
use kite_core::evaluation::{AccuracyUnit, ScoreRow, ScoreTable};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TARGET_PLACEHOLDER: &str = "{target}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub model_id: String,
    pub feature_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_size: Option<u64>,
}

impl ManifestEntry {
    pub fn new(model_id: impl Into<String>, feature_file: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            feature_file: feature_file.into(),
            architecture: None,
            layers: None,
            source_name: None,
            source_size: None,
        }
    }

    pub fn is_templated(&self) -> bool {
        self.feature_file.contains(TARGET_PLACEHOLDER)
    }

    /// Metadata for the heuristic score, when depth and source size are known.
    pub fn meta(&self, target_size: u64) -> Option<ModelMeta> {
        ModelMeta::new(self.layers?, self.source_size?, target_size).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub models: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ModelManifest {
    pub fn new(models: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self { models, base_dir: base_dir.into() };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Schema("manifest lists no models".into()));
        }
        let mut seen = BTreeSet::new();
        for m in &self.models {
            if m.model_id.is_empty() || m.feature_file.is_empty() {
                return Err(Error::Schema("model_id and feature_file must be non-empty".into()));
            }
            if !seen.insert(m.model_id.as_str()) {
                return Err(Error::DuplicateModelId(m.model_id.clone()));
            }
        }
        Ok(())
    }

    /// Feature file of `entry` for `target`.
    pub fn feature_path(&self, entry: &ManifestEntry, target: &str) -> PathBuf {
        self.base_dir.join(entry.feature_file.replace(TARGET_PLACEHOLDER, target))
    }

    /// Checks that every model has a feature file for each target.
    pub fn check_files<'a>(&self, targets: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for t in targets {
            for m in &self.models {
                let p = self.feature_path(m, t);
                if !p.is_file() {
                    return Err(Error::MissingFile(p));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.into()),
        _ => Error::io(path, e),
    })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Parses and validates a manifest. Files of entries without a `{target}`
/// placeholder must exist.
pub fn load_manifest(path: &Path) -> Result<ModelManifest> {
    let text = read_text(path)?;
    let mut m: ModelManifest =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    m.base_dir = base_dir(path);
    m.validate()?;
    for entry in m.models.iter().filter(|e| !e.is_templated()) {
        let p = m.base_dir.join(&entry.feature_file);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub target_id: String,
    pub feature_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetList {
    pub targets: Vec<TargetEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl TargetList {
    pub fn path(&self, entry: &TargetEntry) -> PathBuf {
        self.base_dir.join(&entry.feature_file)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.targets.iter().map(|t| t.target_id.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("target list serialises") + "\n"
    }
}

pub fn load_targets(path: &Path) -> Result<TargetList> {
    let text = read_text(path)?;
    let mut t: TargetList =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    t.base_dir = base_dir(path);
    if t.targets.is_empty() {
        return Err(Error::Schema("target list is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for e in &t.targets {
        if e.target_id.is_empty() || e.target_id.contains(['/', '\\']) {
            return Err(Error::Schema(format!("invalid target id `{}`", e.target_id)));
        }
        if !seen.insert(e.target_id.as_str()) {
            return Err(Error::Schema(format!("duplicate target id `{}`", e.target_id)));
        }
        let p = t.path(e);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    Ok(t)
}

pub fn parse_score_table(text: &str) -> Result<ScoreTable> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let schema = |e: csv::Error| Error::Schema(e.to_string());
    let header = r.headers().map_err(schema)?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let unit = match cols.as_slice() {
        ["model_id", "target_id", "accuracy"] => AccuracyUnit::Fraction,
        ["model_id", "target_id", "accuracy_percent"] => AccuracyUnit::Percent,
        _ => {
            return Err(Error::Schema(format!(
                "ground-truth header must be `model_id,target_id,accuracy` or `model_id,target_id,accuracy_percent`, got `{}`",
                cols.join(",")
            )))
        }
    };
    let max = match unit {
        AccuracyUnit::Fraction => 1.0,
        AccuracyUnit::Percent => 100.0,
    };
    let mut table = ScoreTable::new(unit);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(schema)?;
        let acc: f64 = rec[2]
            .parse()
            .map_err(|_| Error::Schema(format!("row {}: bad accuracy `{}`", line + 2, &rec[2])))?;
        if !(0.0..=max).contains(&acc) {
            return Err(Error::Schema(format!("row {}: accuracy {acc} outside [0, {max}]", line + 2)));
        }
        table
            .insert(ScoreRow {
                model_id: rec[0].to_string(),
                target_id: rec[1].to_string(),
                scores: Default::default(),
                accuracy: acc,
            })
            .map_err(|e| Error::Schema(e.to_string()))?;
    }
    Ok(table)
}

pub fn load_score_table(path: &Path) -> Result<ScoreTable> {
    parse_score_table(&read_text(path)?)
}

/// Ground truth as CSV, in row order.
pub fn score_table_csv(table: &ScoreTable) -> String {
    let col = match table.unit() {
        AccuracyUnit::Fraction => "accuracy",
        AccuracyUnit::Percent => "accuracy_percent",
    };
    let mut out = format!("model_id,target_id,{col}\n");
    for r in table.rows() {
        out.push_str(&format!("{},{},{}\n", r.model_id, r.target_id, r.accuracy));
    }
    out
}
