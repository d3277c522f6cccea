//! Balance a skewed training set with SMOTE + random undersampling.
//!
//! cargo run --example resampling

use drought_impact::features::FeatureLayout;
use drought_impact::resample::{balance, needs_resampling, smote_with_origins, ResamplePlan};
use drought_impact::seed;
use drought_impact::Matrix;
use rand::Rng;

fn main() -> drought_impact::Result<()> {
    // Two SPI columns and a two-class one-hot group.
    let layout = FeatureLayout::from_columns(vec!["spi6".into(), "spi12".into(), "lc_crop".into(), "lc_forest".into()])?;
    let mut rng = seed::rng(3);
    let mut x = Matrix::empty(4);
    let mut y = Vec::new();
    for i in 0..500 {
        let positive = i % 10 == 0;
        let shift = if positive { -1.5 } else { 0.3 };
        let crop = rng.random::<bool>() as u8 as f64;
        x.push_row(&[shift + rng.random_range(-0.5..0.5), shift + rng.random_range(-0.5..0.5), crop, 1.0 - crop]);
        y.push(positive);
    }
    let pos = y.iter().filter(|&&v| v).count();
    println!("before: {pos} positive / {} negative; resampling needed: {}", y.len() - pos, needs_resampling(&y));

    let minority = x.select_rows(&(0..y.len()).filter(|&i| y[i]).collect::<Vec<_>>());
    let (synthetic, origins) = smote_with_origins(&minority, &layout, 5, 3, 7)?;
    for (row, o) in synthetic.rows().zip(&origins) {
        println!(
            "synthetic {:?} = row {} + {:.3} * (row {} - row {})",
            row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            o.base,
            o.u,
            o.neighbor,
            o.base
        );
    }

    let plan = ResamplePlan::default().with_seed(99);
    let (bx, by) = balance(&x, &y, &layout, &plan)?;
    let pos = by.iter().filter(|&&v| v).count();
    println!("after: {pos} positive / {} negative ({} rows)", by.len() - pos, bx.n_rows());
    Ok(())
}
