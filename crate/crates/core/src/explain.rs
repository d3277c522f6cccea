//! Exact path-dependent TreeSHAP on the margin (log-odds) scale.
//!
//! The value of a feature subset `S` is the cover-weighted expectation of the
//! tree output: at a split on a feature outside `S` both children are visited,
//! weighted by their share of the parent's cover. Attributions satisfy
//! `base_value + sum(phi) == margin(x)`.
//!
//! Pairwise interaction values come from running the same recursion with one
//! feature forced present or absent: `phi_ij = (phi_j|i on - phi_j|i off) / 2`.
//! The main effect is the diagonal `phi_ii = phi_i - sum_{j != i} phi_ij`.

use crate::boost::{Ensemble, Node, Tree};
use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::matrix::Matrix;

const NO_FEATURE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

impl Default for PathElement {
    fn default() -> Self {
        Self {
            feature: NO_FEATURE,
            zero_fraction: 0.0,
            one_fraction: 0.0,
            pweight: 0.0,
        }
    }
}

fn extend_path(path: &mut [PathElement], depth: usize, zero: f64, one: f64, feature: usize) {
    path[depth] = PathElement {
        feature,
        zero_fraction: zero,
        one_fraction: one,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].pweight += one * path[i].pweight * (i + 1) as f64 / d1;
        path[i].pweight = zero * path[i].pweight * (depth - i) as f64 / d1;
    }
}

fn unwind_path(path: &mut [PathElement], depth: usize, index: usize) {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one_portion = path[depth].pweight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one_portion * d1 / ((i + 1) as f64 * one);
            next_one_portion = tmp - path[i].pweight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].pweight = path[i].pweight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

/// Total path weight after undoing element `index`, without modifying the path.
fn unwound_path_sum(path: &[PathElement], depth: usize, index: usize) -> f64 {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one_portion = path[depth].pweight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next_one_portion * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next_one_portion = path[i].pweight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].pweight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

/// Forces one feature present (`on`) or absent throughout the recursion.
#[derive(Debug, Clone, Copy)]
struct Condition {
    feature: usize,
    on: bool,
}

struct TreeShap<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    scale: f64,
    condition: Option<Condition>,
}

impl TreeShap<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        phi: &mut [f64],
        node: usize,
        depth: usize,
        parent_path: &[PathElement],
        parent_zero: f64,
        parent_one: f64,
        parent_feature: usize,
        condition_fraction: f64,
    ) {
        if condition_fraction == 0.0 {
            return;
        }
        let mut path: Vec<PathElement> = parent_path[..parent_path.len().min(depth + 1)].to_vec();
        path.resize(depth + 1, PathElement::default());
        if self.condition.is_none_or(|c| c.feature != parent_feature) {
            extend_path(&mut path, depth, parent_zero, parent_one, parent_feature);
        }
        match *self.tree.node(node) {
            Node::Leaf { weight, .. } => {
                let value = weight * self.scale * condition_fraction;
                for i in 1..=depth {
                    let w = unwound_path_sum(&path, depth, i);
                    let el = path[i];
                    phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * value;
                }
            }
            Node::Split {
                feature,
                left,
                right,
                cover,
                ..
            } => {
                let hot = self.tree.next(node, self.row);
                let cold = if hot == left { right } else { left };
                let hot_zero = self.tree.node(hot).cover() / cover;
                let cold_zero = self.tree.node(cold).cover() / cover;
                let (mut incoming_zero, mut incoming_one) = (1.0, 1.0);
                let mut d = depth as isize;
                if let Some(k) = (0..=depth).find(|&k| path[k].feature == feature) {
                    incoming_zero = path[k].zero_fraction;
                    incoming_one = path[k].one_fraction;
                    unwind_path(&mut path, depth, k);
                    d -= 1;
                }
                let (mut hot_fraction, mut cold_fraction) = (condition_fraction, condition_fraction);
                match self.condition {
                    Some(c) if c.feature == feature && c.on => {
                        cold_fraction = 0.0;
                        d -= 1;
                    }
                    Some(c) if c.feature == feature => {
                        hot_fraction *= hot_zero;
                        cold_fraction *= cold_zero;
                        d -= 1;
                    }
                    _ => {}
                }
                let child_depth = (d + 1) as usize;
                self.recurse(
                    phi,
                    hot,
                    child_depth,
                    &path,
                    hot_zero * incoming_zero,
                    incoming_one,
                    feature,
                    hot_fraction,
                );
                self.recurse(
                    phi,
                    cold,
                    child_depth,
                    &path,
                    cold_zero * incoming_zero,
                    0.0,
                    feature,
                    cold_fraction,
                );
            }
        }
    }
}

fn tree_shap(tree: &Tree, row: &[f64], scale: f64, condition: Option<Condition>, phi: &mut [f64]) {
    let ts = TreeShap {
        tree,
        row,
        scale,
        condition,
    };
    ts.recurse(phi, 0, 0, &[], 1.0, 1.0, NO_FEATURE, 1.0);
}

/// Cover-weighted mean leaf weight of a tree.
pub fn expected_value(tree: &Tree) -> f64 {
    fn go(t: &Tree, id: usize) -> f64 {
        match *t.node(id) {
            Node::Leaf { weight, .. } => weight,
            Node::Split { left, right, cover, .. } => {
                (t.node(left).cover() * go(t, left) + t.node(right).cover() * go(t, right)) / cover
            }
        }
    }
    go(tree, 0)
}

/// Rejects models whose covers cannot weight the expectation.
pub fn check_covers(ensemble: &Ensemble) -> Result<()> {
    for (t, tree) in ensemble.trees.iter().enumerate() {
        for (id, node) in tree.nodes().iter().enumerate() {
            let c = node.cover();
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Numerical(format!(
                    "tree {t} node {id} has cover {c}; the model is corrupt"
                )));
            }
        }
    }
    Ok(())
}

/// Expected margin under the cover-weighted training distribution.
pub fn base_value(ensemble: &Ensemble) -> f64 {
    ensemble.base_margin() + ensemble.eta * ensemble.trees.iter().map(expected_value).sum::<f64>()
}

/// Per-row attributions plus the shared base value.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub base_value: f64,
    /// `n_rows x n_features`.
    pub values: Matrix,
}

impl ShapMatrix {
    /// `base_value + sum(phi)` for a row.
    pub fn reconstructed_margin(&self, row: usize) -> f64 {
        self.base_value + self.values.row(row).iter().sum::<f64>()
    }
}

fn row_shap(ensemble: &Ensemble, row: &[f64], condition: Option<Condition>) -> Vec<f64> {
    let mut phi = vec![0.0; row.len()];
    for tree in &ensemble.trees {
        tree_shap(tree, row, ensemble.eta, condition, &mut phi);
    }
    phi
}

pub fn shap_values(ensemble: &Ensemble, rows: &Matrix) -> Result<ShapMatrix> {
    check_covers(ensemble)?;
    let mut values = Matrix::empty(rows.n_cols());
    for r in rows.rows() {
        values.push_row(&row_shap(ensemble, r, None));
    }
    Ok(ShapMatrix {
        base_value: base_value(ensemble),
        values,
    })
}

/// `phi_ij` for every `j`, with `phi_ii` on the diagonal slot `i`.
fn interaction_row(ensemble: &Ensemble, row: &[f64], i: usize, phi: &[f64]) -> Vec<f64> {
    let on = row_shap(ensemble, row, Some(Condition { feature: i, on: true }));
    let off = row_shap(ensemble, row, Some(Condition { feature: i, on: false }));
    let mut out: Vec<f64> = on.iter().zip(&off).map(|(a, b)| 0.5 * (a - b)).collect();
    let off_diagonal: f64 = out.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
    out[i] = phi[i] - off_diagonal;
    out
}

/// Full `n_features x n_features` Shapley interaction matrix for one row.
pub fn interaction_values(ensemble: &Ensemble, row: &[f64]) -> Result<Matrix> {
    check_covers(ensemble)?;
    let phi = row_shap(ensemble, row, None);
    let mut m = Matrix::empty(row.len());
    for i in 0..row.len() {
        m.push_row(&interaction_row(ensemble, row, i, &phi));
    }
    Ok(m)
}

/// Feature values paired with their main effects `phi_ii`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct MainEffectSeries {
    pub feature: usize,
    pub points: Vec<(f64, f64)>,
}

pub fn main_effects(ensemble: &Ensemble, rows: &Matrix, feature: usize) -> Result<MainEffectSeries> {
    check_covers(ensemble)?;
    if feature >= rows.n_cols() {
        return Err(Error::invalid(format!("feature {feature} out of range")));
    }
    let points = rows
        .rows()
        .map(|r| {
            let phi = row_shap(ensemble, r, None);
            (r[feature], interaction_row(ensemble, r, feature, &phi)[feature])
        })
        .collect();
    Ok(MainEffectSeries { feature, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub feature: usize,
    pub name: String,
    pub mean_abs: f64,
}

/// Scatter data for one plotted feature: (feature value, attribution).
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSeries {
    pub feature: usize,
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapSummary {
    /// All features by descending mean |phi|, ties by feature index.
    pub ranking: Vec<RankedFeature>,
    /// Numeric (SPI) features only, in ranking order.
    pub scatter: Vec<ScatterSeries>,
}

impl ShapSummary {
    /// Numeric features in ranking order.
    pub fn ranked_numeric<'a>(&'a self, layout: &'a FeatureLayout) -> impl Iterator<Item = &'a RankedFeature> + 'a {
        self.ranking.iter().filter(|r| layout.is_numeric(r.feature))
    }
}

pub fn summarize(shap: &ShapMatrix, matrix: &Matrix, layout: &FeatureLayout) -> ShapSummary {
    let n = shap.values.n_rows().max(1) as f64;
    let mut ranking: Vec<RankedFeature> = (0..shap.values.n_cols())
        .map(|j| RankedFeature {
            feature: j,
            name: layout.columns[j].clone(),
            mean_abs: shap.values.column(j).map(f64::abs).sum::<f64>() / n,
        })
        .collect();
    ranking.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then(a.feature.cmp(&b.feature)));
    let scatter = ranking
        .iter()
        .filter(|r| layout.is_numeric(r.feature))
        .map(|r| ScatterSeries {
            feature: r.feature,
            name: r.name.clone(),
            points: matrix.column(r.feature).zip(shap.values.column(r.feature)).collect(),
        })
        .collect();
    ShapSummary { ranking, scatter }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(feature: usize, threshold: f64, left: usize, right: usize, cover: f64) -> Node {
        Node::Split {
            feature,
            threshold,
            default_left: true,
            left,
            right,
            gain: 1.0,
            cover,
        }
    }

    fn leaf(weight: f64, cover: f64) -> Node {
        Node::Leaf { weight, cover }
    }

    /// Cover-weighted expectation with features in `mask` fixed to `row`.
    fn conditional(tree: &Tree, id: usize, row: &[f64], mask: u32) -> f64 {
        match *tree.node(id) {
            Node::Leaf { weight, .. } => weight,
            Node::Split { feature, left, right, cover, .. } => {
                if mask & (1 << feature) != 0 {
                    conditional(tree, tree.next(id, row), row, mask)
                } else {
                    (tree.node(left).cover() * conditional(tree, left, row, mask)
                        + tree.node(right).cover() * conditional(tree, right, row, mask))
                        / cover
                }
            }
        }
    }

    fn value(e: &Ensemble, row: &[f64], mask: u32) -> f64 {
        e.base_margin() + e.eta * e.trees.iter().map(|t| conditional(t, 0, row, mask)).sum::<f64>()
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    fn brute_shap(e: &Ensemble, row: &[f64]) -> Vec<f64> {
        let m = row.len();
        (0..m)
            .map(|i| {
                (0u32..1 << m)
                    .filter(|s| s & (1 << i) == 0)
                    .map(|s| {
                        let k = s.count_ones() as usize;
                        let w = factorial(k) * factorial(m - k - 1) / factorial(m);
                        w * (value(e, row, s | (1 << i)) - value(e, row, s))
                    })
                    .sum()
            })
            .collect()
    }

    fn depth2_tree() -> Tree {
        Tree::new(vec![
            split(0, 0.5, 1, 4, 10.0),
            split(1, 0.5, 2, 3, 6.0),
            leaf(1.0, 2.0),
            leaf(-2.0, 4.0),
            split(2, 0.5, 5, 6, 4.0),
            leaf(3.0, 1.0),
            leaf(0.5, 3.0),
        ])
    }

    #[test]
    fn depth2_tree_matches_brute_force() {
        let e = Ensemble::new(0.5, 0.7, vec![depth2_tree()]);
        for bits in 0..8u32 {
            let row: Vec<f64> = (0..3).map(|j| ((bits >> j) & 1) as f64).collect();
            let m = Matrix::from_rows(&[row.clone()], 3);
            let s = shap_values(&e, &m).unwrap();
            let want = brute_shap(&e, &row);
            for j in 0..3 {
                assert!((s.values.get(0, j) - want[j]).abs() < 1e-12, "{row:?} {j}");
            }
            assert!((s.reconstructed_margin(0) - e.margin(&row)).abs() < 1e-12);
        }
    }

    #[test]
    fn stump_gives_other_features_zero() {
        let stump = Tree::new(vec![split(1, 0.0, 1, 2, 4.0), leaf(-1.0, 1.0), leaf(2.0, 3.0)]);
        let e = Ensemble::new(0.5, 1.0, vec![stump]);
        let m = Matrix::from_rows(&[[5.0, -1.0, 7.0]], 3);
        let s = shap_values(&e, &m).unwrap();
        assert_eq!(s.values.get(0, 0), 0.0);
        assert_eq!(s.values.get(0, 2), 0.0);
        assert!(s.values.get(0, 1) != 0.0);
        let me = main_effects(&e, &m, 0).unwrap();
        assert_eq!(me.points, vec![(5.0, 0.0)]);
    }

    #[test]
    fn empty_ensemble_has_base_value_only() {
        let e = Ensemble::new(0.2, 0.3, vec![]);
        let m = Matrix::from_rows(&[[1.0, 2.0]], 2);
        let s = shap_values(&e, &m).unwrap();
        assert_eq!(s.base_value, (0.2f64 / 0.8).ln());
        assert!(s.values.row(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_cover_is_rejected() {
        let bad = Tree::new(vec![split(0, 0.0, 1, 2, 1.0), leaf(1.0, 1.0), leaf(1.0, 0.0)]);
        let e = Ensemble::new(0.5, 1.0, vec![bad]);
        let m = Matrix::from_rows(&[[1.0]], 1);
        assert!(matches!(shap_values(&e, &m), Err(Error::Numerical(_))));
    }

    #[test]
    fn additive_model_has_no_interactions() {
        let t0 = Tree::new(vec![split(0, 0.5, 1, 2, 4.0), leaf(1.0, 1.0), leaf(-1.0, 3.0)]);
        let t1 = Tree::new(vec![split(1, 0.5, 1, 2, 4.0), leaf(0.5, 2.0), leaf(2.0, 2.0)]);
        let e = Ensemble::new(0.5, 1.0, vec![t0, t1]);
        let row = [1.0, 0.0];
        let phi = shap_values(&e, &Matrix::from_rows(&[row], 2)).unwrap();
        let iv = interaction_values(&e, &row).unwrap();
        assert!(iv.get(0, 1).abs() < 1e-12 && iv.get(1, 0).abs() < 1e-12);
        assert!((iv.get(0, 0) - phi.values.get(0, 0)).abs() < 1e-12);
        assert!((iv.get(1, 1) - phi.values.get(0, 1)).abs() < 1e-12);
    }

    #[test]
    fn interaction_decomposition_sums_to_margin() {
        let t = Tree::new(vec![
            split(0, 0.5, 1, 4, 8.0),
            split(1, 0.5, 2, 3, 5.0),
            leaf(1.0, 2.0),
            leaf(-2.0, 3.0),
            split(1, 0.5, 5, 6, 3.0),
            leaf(3.0, 1.0),
            leaf(0.5, 2.0),
        ]);
        let e = Ensemble::new(0.5, 1.0, vec![t]);
        for row in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
            let iv = interaction_values(&e, &row).unwrap();
            assert!((iv.get(0, 1) - iv.get(1, 0)).abs() < 1e-12);
            let total = iv.get(0, 0) + iv.get(1, 1) + 2.0 * iv.get(0, 1) + base_value(&e);
            assert!((total - e.margin(&row)).abs() < 1e-12);
            // Shapley interaction index for two players.
            let v = |mask| value(&e, &row, mask);
            let want = 0.5 * (v(3) - v(1) - v(2) + v(0));
            assert!((iv.get(0, 1) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn summary_ranks_and_filters() {
        let layout = FeatureLayout {
            columns: vec!["spi6".into(), "spi12".into(), "g_a".into(), "g_b".into()],
            n_numeric: 2,
            groups: vec![("g".into(), 2..4)],
        };
        let shap = ShapMatrix {
            base_value: 0.0,
            values: Matrix::from_rows(&[[0.1, -0.5, 0.9, 0.0], [0.1, 0.3, -0.9, 0.0]], 4),
        };
        let x = Matrix::from_rows(&[[1.0, 2.0, 1.0, 0.0], [3.0, 4.0, 0.0, 1.0]], 4);
        let s = summarize(&shap, &x, &layout);
        let order: Vec<usize> = s.ranking.iter().map(|r| r.feature).collect();
        assert_eq!(order, vec![2, 1, 0, 3]);
        assert_eq!(s.ranking[3].mean_abs, 0.0);
        assert_eq!(s.scatter.len(), 2);
        assert_eq!(s.scatter[0].name, "spi12");
        assert_eq!(s.scatter[0].points, vec![(2.0, -0.5), (4.0, 0.3)]);
    }
}
