//! Stratified 10-fold grid search ranked by F2, then PR-AUC.
//!
//! cargo run --release --example grid_search

use drought_impact::boost::TrainConfig;
use drought_impact::eval::{grid_search, stratified_kfold, HyperGrid, PosWeight};
use drought_impact::features::FeatureLayout;
use drought_impact::resample::ResamplePlan;
use drought_impact::seed;
use drought_impact::Matrix;
use rand::Rng;

fn main() -> drought_impact::Result<()> {
    let mut rng = seed::rng(5);
    let mut x = Matrix::empty(3);
    let mut y = Vec::new();
    for _ in 0..1500 {
        let r: [f64; 3] = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
        let p = 1.0 / (1.0 + (-(3.0 * (-r[0] - 1.2))).exp());
        y.push(rng.random::<f64>() < p);
        x.push_row(&r);
    }
    let layout = FeatureLayout::numeric_only(vec!["spi3".into(), "spi6".into(), "spi12".into()]);
    let grid = HyperGrid {
        max_depth: vec![2, 4],
        gamma: vec![0.0, 1.0],
        lambda: vec![1.0],
        scale_pos_weight: vec![PosWeight::Fixed(1.0), PosWeight::Balanced],
    };
    let base = TrainConfig {
        n_rounds: 30,
        ..TrainConfig::default()
    };
    let folds = stratified_kfold(&y, 10, 1)?;
    let result = grid_search(&x, &y, &layout, &base, &grid, &folds, &ResamplePlan::default().with_seed(2), 0.5)?;
    println!("max_depth gamma lambda spw        mean F2  mean PR-AUC");
    for (i, (p, s)) in result.points.iter().zip(&result.summaries).enumerate() {
        let mark = if i == result.best { "  <- selected" } else { "" };
        println!(
            "{:>9} {:>5} {:>6} {:<9} {:>8.4} {:>12.4}{mark}",
            p.max_depth,
            p.gamma,
            p.lambda,
            p.scale_pos_weight.to_string(),
            s.mean_f2,
            s.mean_pr_auc
        );
    }
    Ok(())
}
