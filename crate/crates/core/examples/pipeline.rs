//! The whole batch pipeline on the planted-signal fixture: write inputs,
//! run every stage, print the report.
//!
//! cargo run --release --example pipeline [-- <workdir>]

use std::path::PathBuf;

use drought_impact::fixtures::{write_fixture, FixtureSpec};
use drought_impact::pipeline::{cmd_run_all, PipelineConfig};

fn main() -> drought_impact::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("drought-impact-pipeline"));
    let config = write_fixture(&dir, &FixtureSpec::default())?;
    let cfg = PipelineConfig::load(&config)?;
    let report = cmd_run_all(&cfg, None)?;
    println!("\n{report}");
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}
