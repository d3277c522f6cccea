use drought_impact::boost::{grad_hess, parse_ensemble, train, write_ensemble, Node, TrainConfig};
use drought_impact::eval::{pr_auc, stratified_kfold, ConfusionCounts};
use drought_impact::explain::{interaction_values, shap_values, summarize};
use drought_impact::features::{stratified_split, FeatureLayout, SplitFractions};
use drought_impact::resample::{balance, nearest_neighbors, smote_with_origins, ResamplePlan};
use drought_impact::spi::{fit_month, Window, SPI_BOUND};
use drought_impact::Matrix;
use proptest::prelude::*;

fn labels_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.3), min..max)
}

fn dataset(n_cols: usize) -> impl Strategy<Value = (Matrix, Vec<bool>)> {
    (20usize..80).prop_flat_map(move |n| {
        (
            prop::collection::vec(-3.0f64..3.0, n * n_cols),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(data, y)| {
                // Quantize so duplicate values and ties occur.
                let data = data.into_iter().map(|v| (v * 4.0).round() / 4.0).collect();
                (Matrix::new(data, n_cols), y)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spi_is_monotone_and_clamped(
        samples in prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.1f64..400.0], 20..60),
        a in 0.0f64..1000.0,
        b in 0.0f64..1000.0,
    ) {
        let Ok(fit) = fit_month(&samples, 7, Window::SIX) else { return Ok(()) };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (s_lo, s_hi) = (fit.spi(lo), fit.spi(hi));
        prop_assert!(s_lo <= s_hi, "{lo}->{s_lo} {hi}->{s_hi}");
        prop_assert!(s_lo.abs() <= SPI_BOUND && s_hi.abs() <= SPI_BOUND);
        prop_assert_eq!(fit.cdf(0.0), fit.q_zero);
    }

    #[test]
    fn splits_are_stratified_partitions(labels in labels_strategy(60, 400), seed in any::<u64>()) {
        let pos = labels.iter().filter(|&&y| y).count();
        prop_assume!(pos >= 5);
        let s = stratified_split(&labels, SplitFractions::default(), seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let rate = pos as f64 / labels.len() as f64;
        for part in [&s.train, &s.validation, &s.test] {
            let p = part.iter().filter(|&&i| labels[i]).count() as f64 / part.len() as f64;
            prop_assert!((p - rate).abs() <= 1.0 / part.len() as f64 + 1e-12);
        }
    }

    #[test]
    fn kfold_partitions_rows(labels in labels_strategy(40, 200), seed in any::<u64>()) {
        let pos = labels.iter().filter(|&&y| y).count();
        prop_assume!(pos >= 5 && labels.len() - pos >= 5);
        let plan = stratified_kfold(&labels, 5, seed).unwrap();
        let mut all: Vec<usize> = plan.folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let per_fold: Vec<usize> = plan.folds.iter().map(|f| f.iter().filter(|&&i| labels[i]).count()).collect();
        prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
    }

    #[test]
    fn smote_rows_are_convex_combinations(
        n in 8usize..30,
        values in prop::collection::vec(-3.0f64..3.0, 60),
        classes in prop::collection::vec(0usize..3, 30),
        n_synth in 1usize..40,
        seed in any::<u64>(),
    ) {
        let layout = FeatureLayout::from_columns(vec!["spi6".into(), "spi12".into(), "lc_a".into(), "lc_b".into(), "lc_c".into()]).unwrap();
        let mut m = Matrix::empty(5);
        for i in 0..n {
            let mut row = [values[2 * i], values[2 * i + 1], 0.0, 0.0, 0.0];
            row[2 + classes[i]] = 1.0;
            m.push_row(&row);
        }
        let k = 5;
        let (synth, origins) = smote_with_origins(&m, &layout, k, n_synth, seed).unwrap();
        let nn = nearest_neighbors(&m, 2, k);
        prop_assert_eq!(synth.n_rows(), n_synth);
        for (row, o) in synth.rows().zip(&origins) {
            prop_assert!((0.0..=1.0).contains(&o.u));
            prop_assert!(nn[o.base].contains(&o.neighbor));
            let (x, y) = (m.row(o.base), m.row(o.neighbor));
            for c in 0..2 {
                prop_assert!((row[c] - (x[c] + o.u * (y[c] - x[c]))).abs() < 1e-12);
                prop_assert!(row[c] >= x[c].min(y[c]) - 1e-12 && row[c] <= x[c].max(y[c]) + 1e-12);
            }
            let hot: Vec<usize> = (2..5).filter(|&c| row[c] == 1.0).collect();
            prop_assert_eq!(hot.len(), 1);
            prop_assert!(row[2..].iter().all(|v| *v == 0.0 || *v == 1.0));
            prop_assert!(x[hot[0]] == 1.0 || y[hot[0]] == 1.0);
        }
    }

    #[test]
    fn balance_hits_plan_counts(n_pos in 6usize..30, n_neg in 200usize..400, seed in any::<u64>()) {
        let layout = FeatureLayout::numeric_only(vec!["spi3".into(), "spi6".into()]);
        let mut m = Matrix::empty(2);
        let mut y = Vec::new();
        for i in 0..n_pos + n_neg {
            m.push_row(&[i as f64 * 0.01, (i % 7) as f64]);
            y.push(i < n_pos);
        }
        let plan = ResamplePlan::default().with_seed(seed);
        let (bx, by) = balance(&m, &y, &layout, &plan).unwrap();
        let pos = by.iter().filter(|&&v| v).count();
        let target_pos = ((plan.oversample_ratio * n_neg as f64).round() as usize).max(n_pos);
        let target_neg = ((target_pos as f64 / plan.undersample_ratio).round() as usize).min(n_neg);
        prop_assert_eq!(pos, target_pos);
        prop_assert_eq!(by.len() - pos, target_neg);
        prop_assert_eq!(bx.n_rows(), by.len());
        // Every retained negative is an original negative row.
        for (row, _) in bx.rows().zip(&by).filter(|(_, y)| !**y) {
            prop_assert!(m.rows().skip(n_pos).any(|r| r == row));
        }
    }

    #[test]
    fn trees_keep_cover_and_gain_invariants((x, y) in dataset(3), depth in 1usize..5, lambda in 0.0f64..5.0) {
        let cfg = TrainConfig { n_rounds: 5, max_depth: depth, lambda, ..TrainConfig::default() };
        let model = train(&x, &y, &cfg).unwrap();
        for t in &model.trees {
            prop_assert!(t.depth() <= depth);
            for node in t.nodes() {
                if let Node::Split { left, right, cover, gain, .. } = *node {
                    prop_assert_eq!(cover, t.node(left).cover() + t.node(right).cover());
                    prop_assert!(gain > 0.0);
                    prop_assert!(t.node(left).cover() >= cfg.min_child_weight);
                    prop_assert!(t.node(right).cover() >= cfg.min_child_weight);
                }
            }
        }
        let again = train(&x, &y, &cfg).unwrap();
        prop_assert_eq!(&again, &model);
        let reloaded = parse_ensemble(&write_ensemble(&model)).unwrap();
        prop_assert_eq!(reloaded.predict(&x), model.predict(&x));
        for p in model.predict(&x) {
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn scale_pos_weight_is_linear(
        labels in prop::collection::vec(any::<bool>(), 1..50),
        margins in prop::collection::vec(-5.0f64..5.0, 50),
        w in 0.1f64..20.0,
    ) {
        let margins = &margins[..labels.len()];
        let (g1, h1) = grad_hess(&labels, margins, 1.0);
        let (gw, hw) = grad_hess(&labels, margins, w);
        for i in 0..labels.len() {
            let s = if labels[i] { w } else { 1.0 };
            prop_assert!((gw[i] - s * g1[i]).abs() <= 1e-12 * (1.0 + gw[i].abs()));
            prop_assert!((hw[i] - s * h1[i]).abs() <= 1e-12 * (1.0 + hw[i].abs()));
        }
    }

    #[test]
    fn metrics_identities(
        labels in prop::collection::vec(any::<bool>(), 2..100),
        scores in prop::collection::vec(0.0f64..1.0, 100),
    ) {
        prop_assume!(labels.iter().any(|&y| y));
        let scores = &scores[..labels.len()];
        let c = ConfusionCounts::at_threshold(scores, &labels, 0.5);
        prop_assert_eq!(c.total(), labels.len() as u64);
        prop_assert_eq!(c.accuracy(), (c.tp + c.tn) as f64 / c.total() as f64);
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp()).collect();
        let (a, b) = (pr_auc(scores, &labels).unwrap(), pr_auc(&squashed, &labels).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn shap_is_locally_accurate_and_ignores_unused_features((x, y) in dataset(4), depth in 1usize..4) {
        let cfg = TrainConfig { n_rounds: 4, max_depth: depth, ..TrainConfig::default() };
        let model = train(&x, &y, &cfg).unwrap();
        let shap = shap_values(&model, &x).unwrap();
        let used: std::collections::BTreeSet<usize> = model.trees.iter().flat_map(|t| t.split_features()).collect();
        for i in 0..x.n_rows() {
            prop_assert!((shap.reconstructed_margin(i) - model.margin(x.row(i))).abs() < 1e-6);
            for j in (0..4).filter(|j| !used.contains(j)) {
                prop_assert_eq!(shap.values.get(i, j), 0.0);
            }
        }
        let iv = interaction_values(&model, x.row(0)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                prop_assert!((iv.get(a, b) - iv.get(b, a)).abs() < 1e-6);
            }
        }
        // Declaring columns as one-hot changes only which series are plotted.
        let numeric = FeatureLayout::numeric_only(vec!["spi1".into(), "spi3".into(), "spi6".into(), "spi12".into()]);
        let grouped = FeatureLayout::from_columns(vec!["spi1".into(), "spi3".into(), "lc_a".into(), "lc_b".into()]).unwrap();
        let (s1, s2) = (summarize(&shap, &x, &numeric), summarize(&shap, &x, &grouped));
        let vals = |s: &drought_impact::explain::ShapSummary| s.ranking.iter().map(|r| (r.feature, r.mean_abs)).collect::<Vec<_>>();
        prop_assert_eq!(vals(&s1), vals(&s2));
        prop_assert_eq!(s1.scatter.len(), 4);
        prop_assert!(s2.scatter.iter().all(|s| s.feature < 2));
    }

    #[test]
    fn larger_lambda_shrinks_a_fixed_structure((x, y) in dataset(2), l1 in 0.0f64..3.0, extra in 0.1f64..10.0) {
        // One round of depth 1: refit leaves of the same split under a larger lambda.
        let small = TrainConfig { n_rounds: 1, max_depth: 1, lambda: l1, min_child_weight: 0.0, ..TrainConfig::default() };
        let model = train(&x, &y, &small).unwrap();
        let tree = &model.trees[0];
        let (g, h) = grad_hess(&y, &vec![0.0; y.len()], 1.0);
        let leaves: Vec<usize> = (0..x.n_rows()).map(|i| tree.leaf_index(x.row(i))).collect();
        for (id, node) in tree.nodes().iter().enumerate() {
            if let Node::Leaf { weight, .. } = *node {
                let (gs, hs) = (0..leaves.len()).filter(|&i| leaves[i] == id).fold((0.0, 0.0), |(a, b), i| (a + g[i], b + h[i]));
                let w_small = -gs / (hs + l1);
                let w_big = -gs / (hs + l1 + extra);
                prop_assert!((w_small - weight).abs() < 1e-9);
                prop_assert!(w_big.abs() <= w_small.abs());
            }
        }
    }
}
