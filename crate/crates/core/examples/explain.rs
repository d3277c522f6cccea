//! TreeSHAP attributions, interaction-based main effects and a feature
//! ranking for a model where only `spi12` carries signal.
//!
//! cargo run --release --example explain

use drought_impact::boost::{train, TrainConfig};
use drought_impact::explain::{interaction_values, main_effects, shap_values, summarize};
use drought_impact::features::FeatureLayout;
use drought_impact::plot::summary_svg;
use drought_impact::seed;
use drought_impact::Matrix;
use rand::Rng;

fn main() -> drought_impact::Result<()> {
    let mut rng = seed::rng(8);
    let mut x = Matrix::empty(3);
    let mut y = Vec::new();
    for _ in 0..1000 {
        let r: [f64; 3] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        y.push(r[2] < -0.5);
        x.push_row(&r);
    }
    let layout = FeatureLayout::numeric_only(vec!["spi3".into(), "spi6".into(), "spi12".into()]);
    let model = train(&x, &y, &TrainConfig { n_rounds: 20, max_depth: 3, ..TrainConfig::default() })?;

    let shap = shap_values(&model, &x)?;
    let worst = (0..x.n_rows())
        .map(|i| (shap.reconstructed_margin(i) - model.margin(x.row(i))).abs())
        .fold(0.0, f64::max);
    println!("base value {:.4}; largest |base + sum(phi) - margin| = {worst:.2e}", shap.base_value);

    let summary = summarize(&shap, &x, &layout);
    for (rank, f) in summary.ranking.iter().enumerate() {
        println!("{}. {:<6} mean |phi| = {:.4}", rank + 1, f.name, f.mean_abs);
    }

    let iv = interaction_values(&model, x.row(0))?;
    println!("interaction matrix for row 0:");
    for i in 0..3 {
        println!("  {:?}", iv.row(i).iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
    }

    let me = main_effects(&model, &x, 2)?;
    let (lo, hi) = me.points.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    println!("spi12 main effect ranges over [{lo:.3}, {hi:.3}]");

    let svg = summary_svg("SHAP values", &summary.scatter);
    let path = std::env::temp_dir().join("shap_summary_example.svg");
    std::fs::write(&path, svg).expect("write svg");
    println!("summary plot written to {}", path.display());
    Ok(())
}
