//! Train a gradient-boosted ensemble on a noisy two-feature problem, watch
//! the training log-loss fall, and round-trip the model through its text
//! format.
//!
//! cargo run --example boosting

use drought_impact::boost::{parse_ensemble, train, write_ensemble, TrainConfig};
use drought_impact::eval::evaluate;
use drought_impact::seed;
use drought_impact::Matrix;
use rand::Rng;

fn logloss(p: &[f64], y: &[bool]) -> f64 {
    let eps = 1e-15;
    p.iter()
        .zip(y)
        .map(|(&p, &y)| -(if y { p.max(eps).ln() } else { (1.0 - p).max(eps).ln() }))
        .sum::<f64>()
        / p.len() as f64
}

fn main() -> drought_impact::Result<()> {
    let mut rng = seed::rng(11);
    let mut x = Matrix::empty(2);
    let mut y = Vec::new();
    for _ in 0..2000 {
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        x.push_row(&[a, b]);
        // Circle plus label noise.
        y.push((a * a + b * b < 1.5) != (rng.random::<f64>() < 0.05));
    }

    let config = TrainConfig {
        n_rounds: 60,
        max_depth: 4,
        ..TrainConfig::default()
    };
    let model = train(&x, &y, &config)?;
    for n in [0, 1, 5, 20, 60] {
        println!("rounds {n:>2}: training log-loss {:.4}", logloss(&model.truncated(n).predict(&x), &y));
    }
    let m = evaluate(&model, &x, &y, 0.5)?;
    println!("accuracy {:.3} recall {:.3} F2 {:.3} PR-AUC {:.3}", m.accuracy, m.recall, m.f2, m.pr_auc);

    let text = write_ensemble(&model);
    let reloaded = parse_ensemble(&text)?;
    assert_eq!(reloaded.predict(&x), model.predict(&x));
    println!("model text: {} lines; first tree:", text.lines().count());
    for line in text.lines().skip(3).take(8) {
        println!("  {line}");
    }
    Ok(())
}
