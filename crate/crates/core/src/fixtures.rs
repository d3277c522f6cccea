//! Planted-signal synthetic dataset.
//!
//! Precipitation is drawn from seasonal gamma distributions with occasional
//! dry months. Impact labels are Bernoulli draws from a steep logistic
//! function of a per-category mix of SPI6 and SPI12, so the generating
//! features and the expected class balance are known exactly. The
//! `society_public_health` label depends on SPI12 alone.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::boost::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{HyperGrid, PosWeight};
use crate::ingest::{write_impacts, write_precip, write_regions, Category, ImpactRecord, RegionAttributes};
use crate::month::YearMonth;
use crate::pipeline::{InputPaths, PipelineConfig};
use crate::seed;
use crate::spi::{compute_spi, MonthlySeries, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub n_regions: usize,
    pub n_months: usize,
    pub start: YearMonth,
    pub seed: u64,
    /// Logistic slope on the standardized drought index.
    pub steepness: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            n_regions: 15,
            n_months: 360,
            start: YearMonth::new(1986, 1).expect("valid month"),
            seed: 20_240_601,
            steepness: 8.0,
        }
    }
}

/// How one category's labels are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSignal {
    pub category: Category,
    pub spi6_weight: f64,
    pub spi12_weight: f64,
    /// Target share of positive region-months.
    pub ratio: f64,
}

const fn planted(category: Category, spi6_weight: f64, spi12_weight: f64, ratio: f64) -> PlantedSignal {
    PlantedSignal {
        category,
        spi6_weight,
        spi12_weight,
        ratio,
    }
}

/// Six categories above the default 5% prune threshold, three below it.
pub const PLANTED: [PlantedSignal; 9] = [
    planted(Category::Agriculture, 0.6, 0.4, 0.69),
    planted(Category::Energy, 0.5, 0.5, 0.03),
    planted(Category::PlantsWildlife, 0.5, 0.5, 0.29),
    planted(Category::SocietyPublicHealth, 0.0, 1.0, 0.50),
    planted(Category::WaterSupplyQuality, 0.3, 0.7, 0.36),
    planted(Category::BusinessIndustry, 0.7, 0.3, 0.02),
    planted(Category::Fire, 0.8, 0.2, 0.11),
    planted(Category::ReliefResponseRestrictions, 0.4, 0.6, 0.36),
    planted(Category::TourismRecreation, 0.6, 0.4, 0.025),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub precip: Vec<MonthlySeries>,
    pub impacts: Vec<ImpactRecord>,
    pub regions: Vec<RegionAttributes>,
}

fn region_id(r: usize) -> String {
    format!("R{:02}", r + 1)
}

fn pick<'a>(rng: &mut impl Rng, options: &[&'a str]) -> &'a str {
    options[rng.random_range(0..options.len())]
}

pub fn generate(spec: &FixtureSpec) -> Result<Fixture> {
    if spec.n_regions == 0 || spec.n_months < 12 * MIN_YEARS {
        return Err(Error::invalid(format!(
            "fixture needs at least one region and {} months",
            12 * MIN_YEARS
        )));
    }
    let mut precip = Vec::with_capacity(spec.n_regions);
    let mut regions = Vec::with_capacity(spec.n_regions);
    for r in 0..spec.n_regions {
        let mut rng = seed::rng(seed::derive(spec.seed, "precip", &[r as u64]));
        let phase = rng.random_range(0.0..2.0 * PI);
        let level = rng.random_range(40.0..90.0);
        let values = (0..spec.n_months)
            .map(|i| {
                let month = spec.start.plus(i as i64).month();
                let seasonal = 1.0 + 0.5 * (2.0 * PI * (month as f64 - 1.0) / 12.0 + phase).cos();
                let p_dry = if seasonal < 0.8 { 0.06 } else { 0.01 };
                if rng.random::<f64>() < p_dry {
                    0.0
                } else {
                    let mean = level * seasonal;
                    let g = Gamma::new(2.0, mean / 2.0).expect("positive parameters");
                    (g.sample(&mut rng) * 10.0).round() / 10.0
                }
            })
            .collect();
        precip.push(MonthlySeries::new(region_id(r), spec.start, values)?);
        let mut rng = seed::rng(seed::derive(spec.seed, "regions", &[r as u64]));
        regions.push(RegionAttributes {
            region_id: region_id(r),
            land_cover: pick(&mut rng, &["cropland", "forest", "grassland", "shrubland"]).into(),
            public_health_region: pick(&mut rng, &["phr1", "phr2", "phr3"]).into(),
            water_project_region: pick(&mut rng, &["north", "central", "south"]).into(),
            extension_district: pick(&mut rng, &["d1", "d2", "d3", "d4"]).into(),
        });
    }

    // (region, month index, spi6, spi12) for every month past the warm-up.
    let mut points = Vec::new();
    for (r, s) in precip.iter().enumerate() {
        let spi = compute_spi(s, &[Window::SIX, Window::TWELVE])?;
        let (s6, s12) = (&spi[&Window::SIX].values, &spi[&Window::TWELVE].values);
        for i in 0..s.len() {
            if let (Some(a), Some(b)) = (s6[i], s12[i]) {
                points.push((r, i, a, b));
            }
        }
    }

    let mut impacts = Vec::new();
    for (ci, sig) in PLANTED.iter().enumerate() {
        let norm = sig.spi6_weight.hypot(sig.spi12_weight);
        let index: Vec<f64> = points
            .iter()
            .map(|&(_, _, a, b)| -(sig.spi6_weight * a + sig.spi12_weight * b) / norm)
            .collect();
        let mut sorted = index.clone();
        sorted.sort_by(f64::total_cmp);
        let cut = sorted[(((1.0 - sig.ratio) * sorted.len() as f64) as usize).min(sorted.len() - 1)];
        let mut rng = seed::rng(seed::derive(spec.seed, "labels", &[ci as u64]));
        for (&(r, i, _, _), d) in points.iter().zip(&index) {
            let p = 1.0 / (1.0 + (-spec.steepness * (d - cut)).exp());
            let positive = rng.random::<f64>() < p;
            // A few explicit zero-count rows exercise the "count > 0" rule.
            let count = if positive {
                rng.random_range(1..=4)
            } else if rng.random::<f64>() < 0.02 {
                0
            } else {
                continue;
            };
            impacts.push(ImpactRecord {
                region_id: region_id(r),
                month: precip[r].month_at(i),
                category: sig.category,
                count,
            });
        }
    }
    impacts.sort_by(|a, b| {
        (a.region_id.as_str(), a.month, a.category).cmp(&(b.region_id.as_str(), b.month, b.category))
    });
    Ok(Fixture {
        precip,
        impacts,
        regions,
    })
}

const MIN_YEARS: usize = 25;

/// A small search grid that keeps a full fixture run well under a minute.
pub fn fixture_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(
        InputPaths {
            precip: "precip.csv".into(),
            impacts: "impacts.csv".into(),
            regions: "regions.csv".into(),
        },
        "out",
    );
    cfg.seed = seed;
    cfg.train = TrainConfig {
        n_rounds: 40,
        ..TrainConfig::default()
    };
    cfg.grid = HyperGrid {
        max_depth: vec![3, 5],
        gamma: vec![0.0, 1.0],
        lambda: vec![1.0],
        scale_pos_weight: vec![PosWeight::Fixed(1.0)],
    };
    cfg
}

/// Writes `precip.csv`, `impacts.csv`, `regions.csv` and `config.toml`
/// into `dir`; returns the config path.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let f = generate(spec)?;
    write_precip(&dir.join("precip.csv"), &f.precip)?;
    write_impacts(&dir.join("impacts.csv"), &f.impacts)?;
    write_regions(&dir.join("regions.csv"), &f.regions)?;
    let path = dir.join("config.toml");
    fs::write(&path, fixture_config(spec.seed).to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
