use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::MetricsReport;
use crate::boost::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::matrix::Matrix;
use crate::resample::{balance, ResamplePlan};
use crate::seed;

/// Disjoint folds covering every row; positive counts per fold differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Row indices outside fold `i`, ascending.
    pub fn training_rows(&self, i: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        rows.sort_unstable();
        rows
    }
}

/// Deals shuffled positives round-robin over the folds, then shuffled
/// negatives continuing where the positives stopped.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    let positives = labels.iter().filter(|&&y| y).count();
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if positives < k {
        return Err(Error::invalid(format!(
            "{positives} positive rows cannot be stratified into {k} folds"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed })
}

/// Positive-class weight in a grid: a constant, or `negatives / positives`
/// of the (resampled) training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PosWeightRepr", into = "PosWeightRepr")]
pub enum PosWeight {
    Fixed(f64),
    Balanced,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PosWeightRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<PosWeightRepr> for PosWeight {
    type Error = String;

    fn try_from(r: PosWeightRepr) -> Result<Self, String> {
        match r {
            PosWeightRepr::Number(x) if x > 0.0 => Ok(PosWeight::Fixed(x)),
            PosWeightRepr::Number(x) => Err(format!("scale_pos_weight {x} must be positive")),
            PosWeightRepr::Text(s) if s == "balanced" => Ok(PosWeight::Balanced),
            PosWeightRepr::Text(s) => Err(format!("scale_pos_weight {s:?}: expected a number or \"balanced\"")),
        }
    }
}

impl From<PosWeight> for PosWeightRepr {
    fn from(w: PosWeight) -> Self {
        match w {
            PosWeight::Fixed(x) => PosWeightRepr::Number(x),
            PosWeight::Balanced => PosWeightRepr::Text("balanced".into()),
        }
    }
}

impl PosWeight {
    pub fn resolve(self, labels: &[bool]) -> f64 {
        match self {
            PosWeight::Fixed(x) => x,
            PosWeight::Balanced => {
                let pos = labels.iter().filter(|&&y| y).count();
                if pos == 0 {
                    1.0
                } else {
                    (labels.len() - pos) as f64 / pos as f64
                }
            }
        }
    }
}

impl fmt::Display for PosWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosWeight::Fixed(x) => write!(f, "{x}"),
            PosWeight::Balanced => f.write_str("balanced"),
        }
    }
}

/// Cartesian grid over the tuned hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperGrid {
    pub max_depth: Vec<usize>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub scale_pos_weight: Vec<PosWeight>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            max_depth: vec![3, 5, 7],
            gamma: vec![0.0, 1.0, 5.0],
            lambda: vec![1.0, 10.0],
            scale_pos_weight: vec![PosWeight::Fixed(1.0), PosWeight::Balanced],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub max_depth: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub scale_pos_weight: PosWeight,
}

impl GridPoint {
    /// Full training config for data with the given labels.
    pub fn resolve(&self, base: &TrainConfig, labels: &[bool]) -> TrainConfig {
        TrainConfig {
            max_depth: self.max_depth,
            gamma: self.gamma,
            lambda: self.lambda,
            scale_pos_weight: self.scale_pos_weight.resolve(labels),
            ..*base
        }
    }
}

impl HyperGrid {
    /// Points in declaration order: `max_depth` varies slowest,
    /// `scale_pos_weight` fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &gamma in &self.gamma {
                for &lambda in &self.lambda {
                    for &scale_pos_weight in &self.scale_pos_weight {
                        out.push(GridPoint {
                            max_depth,
                            gamma,
                            lambda,
                            scale_pos_weight,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    pub point: usize,
    pub fold: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSummary {
    pub mean_f2: f64,
    pub mean_pr_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub points: Vec<GridPoint>,
    pub summaries: Vec<PointSummary>,
    /// `k * points.len()` rows, ordered by point then fold.
    pub folds: Vec<FoldResult>,
    pub best: usize,
}

impl GridSearchResult {
    pub fn best_point(&self) -> GridPoint {
        self.points[self.best]
    }
}

/// Highest mean F2, then highest mean PR-AUC, then earliest point.
pub fn select_best(summaries: &[PointSummary]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in summaries.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &summaries[b];
                s.mean_f2 > cur.mean_f2 || (s.mean_f2 == cur.mean_f2 && s.mean_pr_auc > cur.mean_pr_auc)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Cross-validated grid search. Each fold's training part is balanced with
/// `resample` (seeded per fold) before fitting; fold-validation rows are
/// never resampled.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    data: &Matrix,
    labels: &[bool],
    layout: &FeatureLayout,
    base: &TrainConfig,
    grid: &HyperGrid,
    plan: &FoldPlan,
    resample: &ResamplePlan,
    threshold: f64,
) -> Result<GridSearchResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    let mut per_point: Vec<Vec<Option<MetricsReport>>> = vec![vec![None; plan.k]; points.len()];
    for (fold, held_out) in plan.folds.iter().enumerate() {
        let train_rows = plan.training_rows(fold);
        let fold_labels: Vec<bool> = train_rows.iter().map(|&i| labels[i]).collect();
        let fold_resample = resample.with_seed(seed::derive(resample.seed, "fold", &[fold as u64]));
        let (x, y) = balance(&data.select_rows(&train_rows), &fold_labels, layout, &fold_resample)?;
        let x_val = data.select_rows(held_out);
        let y_val: Vec<bool> = held_out.iter().map(|&i| labels[i]).collect();
        for (p, point) in points.iter().enumerate() {
            let model = train(&x, &y, &point.resolve(base, &y))?;
            per_point[p][fold] = Some(MetricsReport::from_scores(&model.predict(&x_val), &y_val, threshold)?);
        }
        log::debug!("fold {fold}/{} done", plan.k);
    }
    let mut folds = Vec::with_capacity(points.len() * plan.k);
    let mut summaries = Vec::with_capacity(points.len());
    for (p, results) in per_point.into_iter().enumerate() {
        let results: Vec<MetricsReport> = results.into_iter().map(|r| r.expect("every fold evaluated")).collect();
        let n = results.len() as f64;
        summaries.push(PointSummary {
            mean_f2: results.iter().map(|r| r.f2).sum::<f64>() / n,
            mean_pr_auc: results.iter().map(|r| r.pr_auc).sum::<f64>() / n,
        });
        folds.extend(results.into_iter().enumerate().map(|(fold, metrics)| FoldResult {
            point: p,
            fold,
            metrics,
        }));
    }
    let best = select_best(&summaries).expect("nonempty grid");
    Ok(GridSearchResult {
        points,
        summaries,
        folds,
        best,
    })
}
