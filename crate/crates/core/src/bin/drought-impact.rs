use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drought_impact::fixtures::{write_fixture, FixtureSpec};
use drought_impact::ingest::Category;
use drought_impact::pipeline::{self, PipelineConfig};
use drought_impact::Result;

/// Drought impact prediction from SPI features.
///
/// Exit status: 0 success, 1 invalid input or config, 2 I/O failure,
/// 3 numerical failure (distribution fit, training, explanation).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one impact category (e.g. `fire`).
    #[arg(long)]
    category: Option<Category>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute SPI1..SPI12 per region and month.
    Spi(Common),
    /// Build the design matrix, labels and splits.
    Prepare(Common),
    /// Cross-validated grid search and final fit per category.
    Train(Common),
    /// Validation and test metrics; writes the metrics table.
    Evaluate(Common),
    /// SHAP summaries, scatter data, main effects and plots.
    Explain(Common),
    /// Print the metrics table and feature rankings.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        category: Option<Category>,
    },
    /// Every stage in order.
    RunAll(Common),
    /// Write the planted-signal synthetic dataset and a matching config.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 15)]
        regions: usize,
        #[arg(long, default_value_t = 360)]
        months: usize,
    },
}

fn load(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spi(c) => {
            let path = pipeline::cmd_spi(&load(&c)?)?;
            println!("{}", path.display());
        }
        Command::Prepare(c) => {
            for s in pipeline::cmd_prepare(&load(&c)?)? {
                let state = if s.retained { "kept" } else { "dropped" };
                println!("{:<30} {:.4} {state}", s.category.key(), s.ratio());
            }
        }
        Command::Train(c) => {
            for t in pipeline::cmd_train(&load(&c)?, c.category)? {
                let s = t.search.summaries[t.search.best];
                println!("{:<30} cv F2 {:.4} PR-AUC {:.4}", t.category.key(), s.mean_f2, s.mean_pr_auc);
            }
        }
        Command::Evaluate(c) => {
            for m in pipeline::cmd_evaluate(&load(&c)?, c.category)? {
                println!(
                    "{:<30} accuracy {:.4} recall {:.4} F2 {:.4}",
                    m.category.key(),
                    m.test.accuracy,
                    m.test.recall,
                    m.test.f2
                );
            }
        }
        Command::Explain(c) => {
            for e in pipeline::cmd_explain(&load(&c)?, c.category)? {
                let top = e.summary.scatter.first().map(|s| s.name.as_str()).unwrap_or("-");
                println!("{:<30} top SPI feature {top}", e.category.key());
            }
        }
        Command::Report { config, out, category } => {
            let dir = match (out, config) {
                (Some(out), _) => out,
                (None, Some(config)) => PipelineConfig::load(&config)?.out,
                (None, None) => {
                    return Err(drought_impact::Error::Invalid(
                        "report needs --out <dir> or --config <path>".into(),
                    ))
                }
            };
            print!("{}", pipeline::cmd_report(&dir, category)?);
        }
        Command::RunAll(c) => print!("{}", pipeline::cmd_run_all(&load(&c)?, c.category)?),
        Command::Fixtures {
            out,
            seed,
            regions,
            months,
        } => {
            let mut spec = FixtureSpec {
                n_regions: regions,
                n_months: months,
                ..FixtureSpec::default()
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            println!("{}", write_fixture(&out, &spec)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
