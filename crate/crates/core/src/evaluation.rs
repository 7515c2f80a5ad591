//! Scoring the scores: how well an estimator's values track ground-truth
//! transfer accuracy across a set of models, per target and on average.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::kernel::KernelMatrix;
use crate::stats::{mean, quantile_sorted, sorted};
use crate::{Error, Result, Warning};

/// Name of the weighted-tau weighting, echoed into reports.
pub const TAU_WEIGHTING: &str = "additive-hyperbolic, ranks by descending truth, ties averaged";

/// Minimum number of models per target for a correlation.
pub const MIN_MODELS: usize = 3;

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < MIN_MODELS {
        return Err(Error::TooFewItems { needed: MIN_MODELS, got: x.len() });
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Err(Error::ConstantSeries);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Average ranks of `truth` in descending order (0 = largest).
fn descending_ranks(truth: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| truth[b].total_cmp(&truth[a]));
    let mut ranks = alloc::vec![0.0; truth.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && truth[order[end + 1]] == truth[order[start]] {
            end += 1;
        }
        let r = (start + end) as f64 / 2.0;
        for &i in &order[start..=end] {
            ranks[i] = r;
        }
        start = end + 1;
    }
    ranks
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weighted Kendall's tau with additive hyperbolic weights.
///
/// Items are ranked by descending `truth` (ties share their average rank
/// `r`); the pair `(i, j)` weighs `1/(1 + r_i) + 1/(1 + r_j)` and contributes
/// `sign(s_i - s_j) * sign(t_i - t_j)`. Pairs tied in both series are left
/// out of the normaliser.
pub fn weighted_kendall_tau(scores: &[f64], truth: &[f64]) -> Result<f64> {
    let n = scores.len();
    if truth.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: truth.len() });
    }
    if n < 2 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    let hyper: Vec<f64> = descending_ranks(truth).iter().map(|r| 1.0 / (1.0 + r)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let ds = sign(scores[i] - scores[j]);
            let dt = sign(truth[i] - truth[j]);
            if ds == 0.0 && dt == 0.0 {
                continue;
            }
            let w = hyper[i] + hyper[j];
            num += w * ds * dt;
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok(num / den)
}

/// Whether accuracies are fractions in `[0, 1]` or percentages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AccuracyUnit {
    #[default]
    Fraction,
    Percent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub model_id: String,
    pub target_id: String,
    /// Estimator name to score.
    pub scores: BTreeMap<String, f64>,
    /// Ground-truth transfer accuracy.
    pub accuracy: f64,
}

/// Scores and ground truth keyed by `(model_id, target_id)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    unit: AccuracyUnit,
    rows: Vec<ScoreRow>,
    keys: BTreeSet<(String, String)>,
}

impl ScoreTable {
    pub fn new(unit: AccuracyUnit) -> Self {
        Self { unit, ..Default::default() }
    }

    pub fn unit(&self) -> AccuracyUnit {
        self.unit
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn insert(&mut self, row: ScoreRow) -> Result<()> {
        if !row.accuracy.is_finite() {
            return Err(Error::InvalidSpec(format!("non-finite accuracy for ({}, {})", row.model_id, row.target_id)));
        }
        if !self.keys.insert((row.model_id.clone(), row.target_id.clone())) {
            return Err(Error::InvalidSpec(format!("duplicate row ({}, {})", row.model_id, row.target_id)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Target ids in ascending order.
    pub fn targets(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.target_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// `(scores, truth)` columns of `estimator` on `target`, ordered by model id.
    pub fn columns(&self, target: &str, estimator: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rows: Vec<&ScoreRow> = self.rows.iter().filter(|r| r.target_id == target).collect();
        rows.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        let mut scores = Vec::with_capacity(rows.len());
        let mut truth = Vec::with_capacity(rows.len());
        for r in rows {
            let s = r.scores.get(estimator).copied().ok_or_else(|| {
                Error::InvalidSpec(format!("no `{estimator}` score for ({}, {})", r.model_id, r.target_id))
            })?;
            scores.push(s);
            truth.push(r.accuracy);
        }
        Ok((scores, truth))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetEval {
    pub target_id: String,
    pub n_models: usize,
    /// Pearson correlation between scores and truth.
    pub pc: f64,
    /// Weighted Kendall's tau.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub estimator: String,
    pub unit: AccuracyUnit,
    pub tau_weighting: String,
    pub per_target: Vec<TargetEval>,
    pub mean_pc: f64,
    pub mean_tau: f64,
    pub warnings: Vec<Warning>,
}

/// Per-target Pearson and weighted tau of `estimator`, and their
/// unweighted means over targets.
///
/// Targets with constant scores or constant truth are excluded from the
/// means with a warning; targets with fewer than three models are an error.
pub fn te_aggregate(table: &ScoreTable, estimator: &str) -> Result<EvalReport> {
    let mut per_target = Vec::new();
    let mut warnings = Vec::new();
    for target in table.targets() {
        let (scores, truth) = table.columns(target, estimator)?;
        if scores.len() < MIN_MODELS {
            return Err(Error::TooFewItems { needed: MIN_MODELS, got: scores.len() });
        }
        match pearson(&scores, &truth).and_then(|pc| Ok((pc, weighted_kendall_tau(&scores, &truth)?))) {
            Ok((pc, tau)) => per_target.push(TargetEval { target_id: target.to_string(), n_models: scores.len(), pc, tau }),
            Err(Error::ConstantSeries) => warnings.push(Warning::TargetExcluded {
                target: target.to_string(),
                reason: "constant scores or ground truth".to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if per_target.is_empty() {
        return Err(Error::ConstantSeries);
    }
    let m = per_target.len() as f64;
    let mean_pc = per_target.iter().map(|t| t.pc).sum::<f64>() / m;
    let mean_tau = per_target.iter().map(|t| t.tau).sum::<f64>() / m;
    Ok(EvalReport {
        estimator: estimator.to_string(),
        unit: table.unit(),
        tau_weighting: TAU_WEIGHTING.to_string(),
        per_target,
        mean_pc,
        mean_tau,
        warnings,
    })
}

/// Pearson correlation between the TA and RA columns of a zoo.
pub fn ta_ra_correlation(pairs: &[(f64, f64)]) -> Result<f64> {
    let (ta, ra): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    pearson(&ta, &ra)
}

/// Histogram of the off-diagonal entries of a kernel matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Interquartile range of the values.
    pub iqr: f64,
}

pub fn kernel_value_histogram(k: &KernelMatrix, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 bins, got {bins}")));
    }
    if k.n() < 2 {
        return Err(Error::TooFewSamples { needed: 1, got: k.n() });
    }
    let values = sorted(k.off_diagonal());
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|b| if b == bins && hi > lo { hi } else { lo + b as f64 * width }).collect();
    let mut counts = alloc::vec![0usize; bins];
    for &v in &values {
        let b = libm::floor((v - lo) / width) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let iqr = quantile_sorted(&values, 0.75) - quantile_sorted(&values, 0.25);
    Ok(Histogram { edges, counts, iqr })
}
