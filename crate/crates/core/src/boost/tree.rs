use crate::matrix::Matrix;

use super::{leaf_weight, split_gain, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `value < threshold` go left; missing values follow the default.
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
        /// Loss reduction of the split, net of `gamma`.
        gain: f64,
        cover: f64,
    },
    Leaf {
        weight: f64,
        cover: f64,
    },
}

impl Node {
    /// Sum of training hessians routed through the node.
    pub fn cover(&self) -> f64 {
        match *self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => cover,
        }
    }
}

/// Regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn new(nodes: Vec<Node>) -> Self {
        assert!(!nodes.is_empty(), "tree needs a root");
        Self { nodes }
    }

    pub fn leaf(weight: f64, cover: f64) -> Self {
        Self::new(vec![Node::Leaf { weight, cover }])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Child taken by `row` at a split node.
    pub fn next(&self, id: usize, row: &[f64]) -> usize {
        match self.nodes[id] {
            Node::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
                ..
            } => {
                let v = row[feature];
                let go_left = if v.is_nan() { default_left } else { v < threshold };
                if go_left {
                    left
                } else {
                    right
                }
            }
            Node::Leaf { .. } => panic!("node {id} is a leaf"),
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut id = 0;
        while let Node::Split { .. } = self.nodes[id] {
            id = self.next(id, row);
        }
        id
    }

    /// Raw leaf weight reached by `row` (before the learning rate).
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight, .. } => weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, id: usize) -> usize {
            match t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Features used by any split.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

/// Per-feature row orderings by ascending value, missing values excluded.
pub(crate) struct Presorted {
    pub(crate) columns: Vec<Vec<usize>>,
}

impl Presorted {
    pub(crate) fn new(data: &Matrix, rows: &[usize]) -> Self {
        let columns = (0..data.n_cols())
            .map(|f| {
                let mut idx: Vec<usize> = rows
                    .iter()
                    .copied()
                    .filter(|&r| !data.get(r, f).is_nan())
                    .collect();
                idx.sort_by(|&a, &b| data.get(a, f).total_cmp(&data.get(b, f)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { columns }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    default_left: bool,
    gain: f64,
}

struct Builder<'a> {
    data: &'a Matrix,
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a TrainConfig,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Builder<'_> {
    fn best_split(&self, rows: &[usize], sorted: &[Vec<usize>], g: f64, h: f64) -> Option<Candidate> {
        let (lambda, gamma, mcw) = (self.config.lambda, self.config.gamma, self.config.min_child_weight);
        let mut best: Option<Candidate> = None;
        for (feature, order) in sorted.iter().enumerate() {
            if order.len() < 2 {
                continue;
            }
            let (g_present, h_present) = order
                .iter()
                .fold((0.0, 0.0), |(gs, hs), &r| (gs + self.grad[r], hs + self.hess[r]));
            let has_missing = order.len() < rows.len();
            let (g_miss, h_miss) = (g - g_present, h - h_present);
            let defaults: &[bool] = if has_missing { &[true, false] } else { &[true] };
            let (mut gl, mut hl) = (0.0, 0.0);
            for pair in order.windows(2) {
                let (r, next) = (pair[0], pair[1]);
                gl += self.grad[r];
                hl += self.hess[r];
                let (v, v_next) = (self.data.get(r, feature), self.data.get(next, feature));
                if v == v_next {
                    continue;
                }
                let mut threshold = 0.5 * (v + v_next);
                if threshold <= v {
                    threshold = v_next;
                }
                for &default_left in defaults {
                    let (gl_, hl_) = if default_left && has_missing {
                        (gl + g_miss, hl + h_miss)
                    } else {
                        (gl, hl)
                    };
                    let (gr_, hr_) = (g - gl_, h - hl_);
                    if hl_ < mcw || hr_ < mcw {
                        continue;
                    }
                    let gain = split_gain(gl_, hl_, gr_, hr_, lambda, gamma);
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(Candidate {
                            feature,
                            threshold,
                            default_left,
                            gain,
                        });
                    }
                }
            }
        }
        best.filter(|b| b.gain > 0.0)
    }

    fn grow(&mut self, rows: Vec<usize>, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let (g, h) = rows
            .iter()
            .fold((0.0, 0.0), |(gs, hs), &r| (gs + self.grad[r], hs + self.hess[r]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            weight: leaf_weight(g, h, self.config.lambda),
            cover: h,
        });
        if depth >= self.config.max_depth {
            return id;
        }
        let Some(split) = self.best_split(&rows, &sorted, g, h) else {
            return id;
        };
        for &r in &rows {
            let v = self.data.get(r, split.feature);
            self.goes_left[r] = if v.is_nan() { split.default_left } else { v < split.threshold };
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.goes_left[r]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for order in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&r| self.goes_left[r]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let left = self.grow(left_rows, left_sorted, depth + 1);
        let right = self.grow(right_rows, right_sorted, depth + 1);
        let cover = self.nodes[left].cover() + self.nodes[right].cover();
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: split.default_left,
            left,
            right,
            gain: split.gain,
            cover,
        };
        id
    }
}

pub(crate) fn build_presorted(
    data: &Matrix,
    rows: &[usize],
    presorted: &Presorted,
    grad: &[f64],
    hess: &[f64],
    config: &TrainConfig,
) -> Tree {
    let mut b = Builder {
        data,
        grad,
        hess,
        config,
        nodes: Vec::new(),
        goes_left: vec![false; data.n_rows()],
    };
    b.grow(rows.to_vec(), presorted.columns.clone(), 0);
    Tree::new(b.nodes)
}

/// Grows one tree on `rows` by exact greedy split search over all features
/// and midpoints between consecutive distinct values.
///
/// Equal gains are resolved toward the lower feature index, then the lower
/// threshold. A split is kept only when its gain (net of `gamma`) is positive
/// and both children have cover of at least `min_child_weight`.
pub fn build_tree(data: &Matrix, rows: &[usize], grad: &[f64], hess: &[f64], config: &TrainConfig) -> Tree {
    assert!(!rows.is_empty(), "build_tree needs at least one row");
    let presorted = Presorted::new(data, rows);
    build_presorted(data, rows, &presorted, grad, hess, config)
}
