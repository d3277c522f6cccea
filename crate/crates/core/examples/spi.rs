//! Compute SPI for one synthetic region and show how a dry spell looks at
//! different accumulation windows.
//!
//! cargo run --example spi

use drought_impact::fixtures::{generate, FixtureSpec};
use drought_impact::spi::{compute_spi, fit_all, aggregate, Window};

fn main() -> drought_impact::Result<()> {
    let fixture = generate(&FixtureSpec {
        n_regions: 1,
        ..FixtureSpec::default()
    })?;
    let series = &fixture.precip[0];
    println!("region {} with {} months from {}", series.region_id(), series.len(), series.start());

    let fits = fit_all(&aggregate(series, Window::SIX)?)?;
    let july = &fits[&7];
    println!(
        "SPI6 July fit: P(zero)={:.3} shape={:.3} scale={:.3} location={:.3} from {} samples",
        july.q_zero, july.shape, july.scale, july.location, july.n_fit
    );

    let spi = compute_spi(series, &Window::ALL)?;
    println!("\nmonth     precip  {}", Window::ALL.map(|w| format!("{:>7}", w.column_name())).join(""));
    for i in (series.len() - 24)..series.len() {
        let cols: String = spi
            .values()
            .map(|s| s.values[i].map_or("      -".into(), |v| format!("{v:>7.2}")))
            .collect();
        println!("{}  {:>6.1}  {cols}", series.month_at(i), series.values()[i]);
    }
    Ok(())
}
