use std::path::{Path, PathBuf};

use kite_core::estimators::EstimatorKind;
use kite_core::kernel::KernelKind;
use kite_core::preprocess::{DEFAULT_PCA_DIM, DEFAULT_PROBE_SIZE};
use kite_core::random_features::{InitScheme, RandomNetSpec, DEFAULT_HIDDEN_WIDTHS, DEFAULT_NUM_SEEDS};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Source of the random features RA compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomKind {
    /// Untrained ReLU network applied to the raw target inputs.
    #[default]
    Mlp,
    /// I.i.d. standard normal features, independent of the inputs.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomNetConfig {
    pub kind: RandomKind,
    pub hidden_widths: Vec<usize>,
    /// Output width; defaults to the width of the features being scored.
    pub output_dim: Option<usize>,
    pub init: InitScheme,
    /// Networks averaged per run seed.
    pub num_seeds: usize,
}

impl Default for RandomNetConfig {
    fn default() -> Self {
        Self {
            kind: RandomKind::Mlp,
            hidden_widths: DEFAULT_HIDDEN_WIDTHS.to_vec(),
            output_dim: None,
            init: InitScheme::default(),
            num_seeds: DEFAULT_NUM_SEEDS,
        }
    }
}

/// Everything that determines the numbers of a run. Echoed into every
/// report; the same config reproduces the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `linear`, `gaussian[:SIGMA]`, `gaussian-unsquared[:SIGMA]` or `laplacian[:SIGMA]`.
    pub kernel: String,
    /// Estimator names such as `kite`, `ta`, `ra`, `lincomb:0.5`, `knn:5`.
    pub estimators: Vec<String>,
    /// Default weight for a bare `lincomb`.
    pub lambda: f64,
    /// Default neighbour count for a bare `knn`.
    pub knn_k: usize,
    /// Features wider than this are reduced with PCA; 0 disables.
    pub pca_dim: usize,
    pub probe_size: usize,
    pub random_net: RandomNetConfig,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: "linear".into(),
            estimators: vec!["kite".into()],
            lambda: 1.0,
            knn_k: 1,
            pca_dim: DEFAULT_PCA_DIM,
            probe_size: DEFAULT_PROBE_SIZE,
            random_net: RandomNetConfig::default(),
            seeds: vec![0],
            output: None,
        }
    }
}

/// A validated [`RunConfig`] with names parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kernel: KernelKind,
    pub estimators: Vec<EstimatorKind>,
    pub pca_dim: usize,
    pub probe_size: usize,
    pub random_net: RandomNetConfig,
    pub seeds: Vec<u64>,
}

impl Resolved {
    pub fn needs_random(&self) -> bool {
        self.estimators.iter().any(EstimatorKind::needs_random)
    }

    /// Random feature width used against model features of width `model_dim`.
    pub fn random_output_dim(&self, model_dim: usize) -> usize {
        self.random_net.output_dim.unwrap_or(model_dim)
    }

    /// Network spec for raw inputs of width `input_dim`.
    pub fn net_spec(&self, input_dim: usize, output_dim: usize, base_seed: u64) -> RandomNetSpec {
        RandomNetSpec {
            input_dim,
            hidden_widths: self.random_net.hidden_widths.clone(),
            output_dim,
            init: self.random_net.init,
            num_seeds: self.random_net.num_seeds,
            base_seed,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse_estimator(&self, name: &str) -> Result<EstimatorKind> {
        let kind: EstimatorKind = name.parse().map_err(|e: kite_core::Error| Error::Config(e.to_string()))?;
        Ok(match kind {
            EstimatorKind::LinearCombo { .. } if !name.contains(':') => EstimatorKind::LinearCombo { lambda: self.lambda },
            EstimatorKind::KnnCv { .. } if name.trim().eq_ignore_ascii_case("knn") => EstimatorKind::KnnCv { k: self.knn_k },
            other => other,
        })
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let bad = |m: String| Err(Error::Config(m));
        let kernel: KernelKind = self.kernel.parse().map_err(|e: kite_core::Error| Error::Config(e.to_string()))?;
        if self.estimators.is_empty() {
            return bad("no estimators given".into());
        }
        if !self.lambda.is_finite() {
            return bad("lambda must be finite".into());
        }
        if self.knn_k == 0 {
            return bad("knn_k must be at least 1".into());
        }
        let estimators = self.estimators.iter().map(|e| self.parse_estimator(e)).collect::<Result<Vec<_>>>()?;
        if self.probe_size < 2 {
            return bad("probe_size must be at least 2".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds given".into());
        }
        let resolved = Resolved {
            kernel,
            estimators,
            pca_dim: self.pca_dim,
            probe_size: self.probe_size,
            random_net: self.random_net.clone(),
            seeds: self.seeds.clone(),
        };
        resolved.net_spec(1, 1, 0).validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(resolved)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let r = RunConfig::default().resolve().unwrap();
        assert_eq!(r.kernel, KernelKind::Linear);
        assert_eq!(r.estimators, vec![EstimatorKind::Kite]);
        assert_eq!(r.random_output_dim(64), 64);
        assert!(r.needs_random());
    }

    #[test]
    fn bare_names_take_config_parameters() {
        let cfg = RunConfig {
            estimators: vec!["lincomb".into(), "lincomb:0.5".into(), "knn".into(), "5nn-cv".into()],
            lambda: 2.0,
            knn_k: 3,
            ..Default::default()
        };
        assert_eq!(
            cfg.resolve().unwrap().estimators,
            vec![
                EstimatorKind::LinearCombo { lambda: 2.0 },
                EstimatorKind::LinearCombo { lambda: 0.5 },
                EstimatorKind::KnnCv { k: 3 },
                EstimatorKind::KnnCv { k: 5 },
            ]
        );
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            RunConfig { kernel: "poly".into(), ..Default::default() },
            RunConfig { estimators: vec!["leep".into()], ..Default::default() },
            RunConfig { seeds: vec![], ..Default::default() },
            RunConfig { random_net: RandomNetConfig { num_seeds: 0, ..Default::default() }, ..Default::default() },
        ] {
            assert!(matches!(cfg.resolve(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = RunConfig { seeds: vec![1, 2], ..Default::default() };
        assert_eq!(serde_json::from_str::<RunConfig>(&cfg.to_json()).unwrap(), cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"pca_dim": 16}"#).unwrap();
        assert_eq!(partial.pca_dim, 16);
        assert_eq!(partial.probe_size, 500);
        assert!(serde_json::from_str::<RunConfig>(r#"{"pcadim": 16}"#).is_err());
    }
}
