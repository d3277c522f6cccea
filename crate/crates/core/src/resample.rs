//! Class balancing for skewed training partitions: SMOTE oversampling of the
//! positive class followed by random undersampling of the negatives.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::matrix::Matrix;
use crate::seed;

/// Positive proportion below which balancing is applied.
pub const TRIGGER_THRESHOLD: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResamplePlan {
    pub enabled: bool,
    pub trigger_threshold: f64,
    pub smote_k: usize,
    /// Minority/majority ratio reached by SMOTE.
    pub oversample_ratio: f64,
    /// Minority/majority ratio reached by undersampling the majority.
    pub undersample_ratio: f64,
    pub seed: u64,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        Self {
            enabled: true,
            trigger_threshold: TRIGGER_THRESHOLD,
            smote_k: 5,
            oversample_ratio: 0.5,
            undersample_ratio: 1.0,
            seed: 0,
        }
    }
}

impl ResamplePlan {
    pub fn validate(&self) -> Result<()> {
        let ok = self.smote_k >= 1
            && self.oversample_ratio > 0.0
            && self.oversample_ratio <= self.undersample_ratio
            && self.undersample_ratio <= 1.0
            && self.trigger_threshold > 0.0
            && self.trigger_threshold < 1.0;
        if !ok {
            return Err(Error::invalid(format!(
                "invalid resample plan {self:?}: need smote_k >= 1 and \
                 0 < oversample_ratio <= undersample_ratio <= 1"
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn triggers(&self, labels: &[bool]) -> bool {
        self.enabled && positive_rate(labels) < self.trigger_threshold
    }
}

fn positive_rate(labels: &[bool]) -> f64 {
    labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64
}

/// True iff the positive proportion is strictly below 20%.
pub fn needs_resampling(labels: &[bool]) -> bool {
    assert!(!labels.is_empty(), "labels must be nonempty");
    positive_rate(labels) < TRIGGER_THRESHOLD
}

/// Where a synthetic row came from: `base + u * (neighbor - base)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

fn squared_distance(a: &[f64], b: &[f64], n_numeric: usize) -> f64 {
    a[..n_numeric]
        .iter()
        .zip(&b[..n_numeric])
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// The `k` nearest other rows of each row on the numeric columns; ties by index.
pub fn nearest_neighbors(rows: &Matrix, n_numeric: usize, k: usize) -> Vec<Vec<usize>> {
    (0..rows.n_rows())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..rows.n_rows())
                .filter(|&j| j != i)
                .map(|j| (squared_distance(rows.row(i), rows.row(j), n_numeric), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// SMOTE returning the synthetic rows and their origins.
///
/// Numeric columns are interpolated. Each one-hot group is interpolated too
/// and then snapped to its largest entry (lowest index on ties).
pub fn smote_with_origins(
    minority: &Matrix,
    layout: &FeatureLayout,
    k: usize,
    n_synthetic: usize,
    seed: u64,
) -> Result<(Matrix, Vec<SyntheticOrigin>)> {
    if minority.n_rows() <= k {
        return Err(Error::invalid(format!(
            "SMOTE needs more than k = {k} minority rows, got {}",
            minority.n_rows()
        )));
    }
    let mut out = Matrix::empty(minority.n_cols());
    let mut origins = Vec::with_capacity(n_synthetic);
    if n_synthetic == 0 {
        return Ok((out, origins));
    }
    let neighbors = nearest_neighbors(minority, layout.n_numeric, k);
    let mut rng = seed::rng(seed);
    let mut row = vec![0.0; minority.n_cols()];
    for _ in 0..n_synthetic {
        let base = rng.random_range(0..minority.n_rows());
        let neighbor = neighbors[base][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let (x, y) = (minority.row(base), minority.row(neighbor));
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = x[c] + u * (y[c] - x[c]);
        }
        for (_, range) in &layout.groups {
            let group = &mut row[range.clone()];
            let hot = group
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > group[best] { i } else { best });
            group.iter_mut().enumerate().for_each(|(i, v)| *v = (i == hot) as u8 as f64);
        }
        out.push_row(&row);
        origins.push(SyntheticOrigin { base, neighbor, u });
    }
    Ok((out, origins))
}

pub fn smote(
    minority: &Matrix,
    layout: &FeatureLayout,
    k: usize,
    n_synthetic: usize,
    seed: u64,
) -> Result<Matrix> {
    smote_with_origins(minority, layout, k, n_synthetic, seed).map(|(m, _)| m)
}

/// Indices (ascending) of `target` rows drawn uniformly without replacement
/// from `0..available`.
pub fn random_undersample(available: usize, target: usize, seed: u64) -> Result<Vec<usize>> {
    if target > available {
        return Err(Error::invalid(format!(
            "cannot retain {target} of {available} majority rows"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut kept = index::sample(&mut rng, available, target).into_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// Balances a training partition when the plan's trigger fires; otherwise
/// returns the input unchanged. Output rows are shuffled deterministically.
pub fn balance(
    train: &Matrix,
    labels: &[bool],
    layout: &FeatureLayout,
    plan: &ResamplePlan,
) -> Result<(Matrix, Vec<bool>)> {
    plan.validate()?;
    if labels.len() != train.n_rows() {
        return Err(Error::invalid("labels and training rows differ in length"));
    }
    if labels.is_empty() || !plan.triggers(labels) {
        return Ok((train.clone(), labels.to_vec()));
    }
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let minority = train.select_rows(&pos);

    let target_pos = ((plan.oversample_ratio * neg.len() as f64).round() as usize).max(pos.len());
    let synthetic = smote(
        &minority,
        layout,
        plan.smote_k,
        target_pos - pos.len(),
        seed::derive(plan.seed, "smote", &[]),
    )?;
    let target_neg = ((target_pos as f64 / plan.undersample_ratio).round() as usize).min(neg.len());
    let kept = random_undersample(
        neg.len(),
        target_neg,
        seed::derive(plan.seed, "undersample", &[]),
    )?;

    let mut rows: Vec<(&[f64], bool)> = Vec::with_capacity(target_pos + target_neg);
    rows.extend(minority.rows().map(|r| (r, true)));
    rows.extend(synthetic.rows().map(|r| (r, true)));
    rows.extend(kept.iter().map(|&i| (train.row(neg[i]), false)));
    rows.shuffle(&mut seed::rng(seed::derive(plan.seed, "shuffle", &[])));

    let mut out = Matrix::empty(train.n_cols());
    let mut out_labels = Vec::with_capacity(rows.len());
    for (r, y) in rows {
        out.push_row(r);
        out_labels.push(y);
    }
    log::debug!(
        "balanced {} pos / {} neg into {target_pos} pos / {target_neg} neg",
        pos.len(),
        neg.len()
    );
    Ok((out, out_labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout2() -> FeatureLayout {
        FeatureLayout::numeric_only(vec!["a".into(), "b".into()])
    }

    #[test]
    fn trigger_is_strict() {
        let labels = |pos: usize| (0..1000).map(|i| i < pos).collect::<Vec<_>>();
        assert!(needs_resampling(&labels(110)));
        assert!(needs_resampling(&labels(199)));
        assert!(!needs_resampling(&labels(200)));
        assert!(!needs_resampling(&labels(500)));
    }

    #[test]
    fn smote_two_points_lands_on_segment() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]], 2);
        let out = smote(&m, &layout2(), 1, 1, 3).unwrap();
        let r = out.row(0);
        assert_eq!(r[0], r[1]);
        assert!((0.0..=1.0).contains(&r[0]));
        assert_eq!(smote(&m, &layout2(), 1, 0, 3).unwrap().n_rows(), 0);
    }

    #[test]
    fn smote_needs_more_rows_than_k() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]], 2);
        assert!(smote(&m, &layout2(), 2, 5, 0).is_err());
    }

    #[test]
    fn smote_snaps_one_hot_groups() {
        let layout = FeatureLayout {
            columns: vec!["x".into(), "g_a".into(), "g_b".into(), "g_c".into()],
            n_numeric: 1,
            groups: vec![("g".into(), 1..4)],
        };
        let m = Matrix::from_rows(
            &[[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 1.0, 0.0], [2.0, 0.0, 0.0, 1.0]],
            4,
        );
        let out = smote(&m, &layout, 2, 200, 9).unwrap();
        for r in out.rows() {
            assert_eq!(r[1..].iter().sum::<f64>(), 1.0);
            assert!(r[1..].iter().all(|v| *v == 0.0 || *v == 1.0));
        }
    }

    #[test]
    fn undersample_counts() {
        let kept = random_undersample(800, 400, 1).unwrap();
        assert_eq!(kept.len(), 400);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(kept, random_undersample(800, 400, 1).unwrap());
        assert_eq!(random_undersample(10, 10, 1).unwrap(), (0..10).collect::<Vec<_>>());
        assert!(random_undersample(10, 11, 1).is_err());
    }

    fn skewed(pos: usize, neg: usize) -> (Matrix, Vec<bool>) {
        let rows: Vec<[f64; 2]> = (0..pos + neg)
            .map(|i| [i as f64, ((i * 37) % 101) as f64])
            .collect();
        let labels = (0..pos + neg).map(|i| i < pos).collect();
        (Matrix::from_rows(&rows, 2), labels)
    }

    #[test]
    fn balance_reaches_plan_ratios() {
        let (m, y) = skewed(100, 900);
        let plan = ResamplePlan::default().with_seed(5);
        let (out, labels) = balance(&m, &y, &layout2(), &plan).unwrap();
        let pos = labels.iter().filter(|&&v| v).count();
        assert_eq!((pos, labels.len() - pos), (450, 450));
        assert_eq!(out.n_rows(), 900);
        for r in m.rows().take(100) {
            assert!(out.rows().any(|o| o == r), "original positive missing");
        }
    }

    #[test]
    fn balance_skips_when_not_triggered() {
        let (m, y) = skewed(400, 600);
        let (out, labels) = balance(&m, &y, &layout2(), &ResamplePlan::default()).unwrap();
        assert_eq!(out, m);
        assert_eq!(labels, y);
        let (m, y) = skewed(100, 900);
        let off = ResamplePlan { enabled: false, ..Default::default() };
        assert_eq!(balance(&m, &y, &layout2(), &off).unwrap().0, m);
    }

    #[test]
    fn plan_validation() {
        let bad = ResamplePlan { oversample_ratio: 0.8, undersample_ratio: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ResamplePlan { smote_k: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
