//! Classification metrics, stratified k-fold cross-validation and grid search.

mod cv;

pub use cv::{
    grid_search, select_best, stratified_kfold, FoldPlan, FoldResult, GridPoint, GridSearchResult,
    HyperGrid, PointSummary, PosWeight,
};

use crate::boost::Ensemble;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default probability cut for hard labels.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        assert_eq!(predicted.len(), actual.len(), "prediction/label length mismatch");
        let mut c = Self::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    /// Hard labels `score >= threshold`.
    pub fn at_threshold(scores: &[f64], actual: &[bool], threshold: f64) -> Self {
        let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
        Self::from_predictions(&predicted, actual)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// F-beta; 0 whenever `tp == 0`.
    pub fn fbeta(&self, beta: f64) -> f64 {
        assert!(beta > 0.0, "beta must be positive");
        if self.tp == 0 {
            return 0.0;
        }
        let (p, r) = (self.precision(), self.recall());
        let b2 = beta * beta;
        (1.0 + b2) * p * r / (b2 * p + r)
    }

    pub fn f2(&self) -> f64 {
        self.fbeta(2.0)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Average precision: `sum_i (R_i - R_{i-1}) P_i` over descending score
/// thresholds, with equal scores processed as one block.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "score/label length mismatch");
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::invalid("average precision needs at least one positive label"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap, mut prev_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += labels[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Ok(ap)
}

/// Test-set metrics at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f2: f64,
    pub pr_auc: f64,
    pub threshold: f64,
    pub counts: ConfusionCounts,
}

impl MetricsReport {
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {threshold} outside (0, 1)")));
        }
        let counts = ConfusionCounts::at_threshold(scores, labels, threshold);
        Ok(Self {
            accuracy: counts.accuracy(),
            recall: counts.recall(),
            precision: counts.precision(),
            f2: counts.f2(),
            pr_auc: pr_auc(scores, labels)?,
            threshold,
            counts,
        })
    }
}

pub fn evaluate(ensemble: &Ensemble, rows: &Matrix, labels: &[bool], threshold: f64) -> Result<MetricsReport> {
    MetricsReport::from_scores(&ensemble.predict(rows), labels, threshold)
}
