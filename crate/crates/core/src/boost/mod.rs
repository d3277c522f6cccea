//! Gradient-boosted regression trees for binary classification.
//!
//! Each round fits a tree to the second-order expansion of the logistic loss.
//! With `p = sigmoid(margin)` and `w = scale_pos_weight` for positive rows
//! (1 otherwise):
//!
//! ```text
//! g = w (p - y)          h = w p (1 - p)
//! leaf weight = -G / (H + lambda)
//! gain = 1/2 [GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda)] - gamma
//! ```

mod io;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use io::{load_ensemble, parse_ensemble, save_ensemble, write_ensemble};
pub use tree::{build_tree, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
    pub n_rounds: usize,
    pub max_depth: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub scale_pos_weight: f64,
    pub min_child_weight: f64,
    pub base_score: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.3,
            n_rounds: 100,
            max_depth: 6,
            gamma: 0.0,
            lambda: 1.0,
            scale_pos_weight: 1.0,
            min_child_weight: 1.0,
            base_score: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.eta > 0.0 && self.eta <= 1.0, "eta must lie in (0, 1]"),
            (self.max_depth >= 1, "max_depth must be at least 1"),
            (self.gamma >= 0.0, "gamma must be nonnegative"),
            (self.lambda >= 0.0, "lambda must be nonnegative"),
            (self.scale_pos_weight > 0.0, "scale_pos_weight must be positive"),
            (self.min_child_weight >= 0.0, "min_child_weight must be nonnegative"),
            (
                self.base_score > 0.0 && self.base_score < 1.0,
                "base_score must lie in (0, 1)",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::invalid(format!("invalid training config: {msg}"))),
            None => Ok(()),
        }
    }
}

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Gradient and hessian of the weighted logistic loss for every row.
pub fn grad_hess(labels: &[bool], margins: &[f64], scale_pos_weight: f64) -> (Vec<f64>, Vec<f64>) {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| {
            let p = sigmoid(m);
            let (w, y) = if y { (scale_pos_weight, 1.0) } else { (1.0, 0.0) };
            (w * (p - y), w * p * (1.0 - p))
        })
        .unzip()
}

pub fn leaf_weight(grad_sum: f64, hess_sum: f64, lambda: f64) -> f64 {
    -grad_sum / (hess_sum + lambda)
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

/// Additive tree ensemble: `margin = logit(base_score) + eta * sum(leaf weights)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub base_score: f64,
    pub eta: f64,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    pub fn new(base_score: f64, eta: f64, trees: Vec<Tree>) -> Self {
        Self {
            base_score,
            eta,
            trees,
        }
    }

    pub fn base_margin(&self) -> f64 {
        logit(self.base_score)
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin() + self.eta * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }

    pub fn margins(&self, rows: &Matrix) -> Vec<f64> {
        rows.rows().map(|r| self.margin(r)).collect()
    }

    pub fn predict(&self, rows: &Matrix) -> Vec<f64> {
        rows.rows().map(|r| self.probability(r)).collect()
    }

    /// The ensemble made of the first `n` trees.
    pub fn truncated(&self, n: usize) -> Ensemble {
        Ensemble::new(self.base_score, self.eta, self.trees[..n.min(self.trees.len())].to_vec())
    }
}

/// Trains `config.n_rounds` trees on sequentially updated margins.
pub fn train(data: &Matrix, labels: &[bool], config: &TrainConfig) -> Result<Ensemble> {
    config.validate()?;
    if labels.len() != data.n_rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} rows",
            labels.len(),
            data.n_rows()
        )));
    }
    let mut ensemble = Ensemble::new(config.base_score, config.eta, Vec::new());
    if data.n_rows() == 0 {
        return Ok(ensemble);
    }
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let presorted = tree::Presorted::new(data, &rows);
    let mut margins = vec![ensemble.base_margin(); data.n_rows()];
    for round in 0..config.n_rounds {
        let (g, h) = grad_hess(labels, &margins, config.scale_pos_weight);
        let tree = tree::build_presorted(data, &rows, &presorted, &g, &h, config);
        for (m, r) in margins.iter_mut().zip(data.rows()) {
            *m += config.eta * tree.predict(r);
        }
        if margins.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numerical(format!("non-finite margin after round {round}")));
        }
        ensemble.trees.push(tree);
    }
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_hess_examples() {
        let (g, h) = grad_hess(&[true, false, true], &[0.0, 0.0, 0.0], 1.0);
        assert_eq!((g[0], h[0]), (-0.5, 0.25));
        assert_eq!((g[1], h[1]), (0.5, 0.25));
        let (g, h) = grad_hess(&[true], &[0.0], 3.0);
        assert_eq!((g[0], h[0]), (-1.5, 0.75));
    }

    #[test]
    fn leaf_weight_examples() {
        assert_eq!(leaf_weight(0.0, 1.0, 1.0), 0.0);
        assert!((leaf_weight(-1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 1.0, 10.0, 100.0, 1e6] {
            let w = leaf_weight(-3.0, 2.0, lambda).abs();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn split_gain_examples() {
        assert!((split_gain(-2.0, 1.0, 2.0, 1.0, 1.0, 0.0) - 2.0).abs() < 1e-12);
        // Symmetric children: exactly -gamma without regularization,
        // strictly below it once lambda > 0.
        assert!((split_gain(1.5, 2.0, 1.5, 2.0, 0.0, 0.7) - -0.7).abs() < 1e-12);
        assert!(split_gain(1.5, 2.0, 1.5, 2.0, 1.0, 0.7) < -0.7);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = |c: TrainConfig| c.validate().is_err();
        assert!(bad(TrainConfig { max_depth: 0, ..Default::default() }));
        assert!(bad(TrainConfig { eta: 0.0, ..Default::default() }));
        assert!(bad(TrainConfig { eta: 1.5, ..Default::default() }));
        assert!(bad(TrainConfig { scale_pos_weight: 0.0, ..Default::default() }));
        assert!(bad(TrainConfig { base_score: 1.0, ..Default::default() }));
        assert!(bad(TrainConfig { gamma: -1.0, ..Default::default() }));
    }

    #[test]
    fn zero_rounds_predicts_base_score() {
        let data = Matrix::from_rows(&[[1.0], [2.0]], 1);
        let cfg = TrainConfig { n_rounds: 0, base_score: 0.3, ..Default::default() };
        let e = train(&data, &[true, false], &cfg).unwrap();
        assert!(e.trees.is_empty());
        for p in e.predict(&data) {
            assert!((p - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn same_label_gives_single_leaf() {
        let data = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]], 1);
        let labels = [true; 4];
        let (g, h) = grad_hess(&labels, &[0.0; 4], 1.0);
        let cfg = TrainConfig { min_child_weight: 0.0, ..Default::default() };
        let t = build_tree(&data, &[0, 1, 2, 3], &g, &h, &cfg);
        // Every candidate split has children with identical G/H ratios: no gain.
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[0.0]), leaf_weight(-2.0, 1.0, 1.0));
    }

    #[test]
    fn missing_values_follow_learned_default() {
        // Missing rows are all positive, like the high-x rows.
        let nan = f64::NAN;
        let data = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [nan], [nan]], 1);
        let labels = [false, false, true, true, true, true];
        let (g, h) = grad_hess(&labels, &[0.0; 6], 1.0);
        let cfg = TrainConfig { min_child_weight: 0.0, max_depth: 1, ..Default::default() };
        let t = build_tree(&data, &[0, 1, 2, 3, 4, 5], &g, &h, &cfg);
        match t.node(0) {
            Node::Split { threshold, default_left, .. } => {
                assert_eq!(*threshold, 2.5);
                assert!(!default_left);
            }
            n => panic!("expected split, got {n:?}"),
        }
        assert_eq!(t.predict(&[nan]), t.predict(&[4.0]));
    }
}
