use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boost::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::HyperGrid;
use crate::eval::DEFAULT_THRESHOLD;
use crate::features::{SplitFractions, StudyWindow};
use crate::resample::ResamplePlan;
use crate::spi::Window;

/// Locations of the three input tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub precip: PathBuf,
    pub impacts: PathBuf,
    pub regions: PathBuf,
}

/// Inclusive study period as `YYYY-MM` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPeriod {
    pub start: String,
    pub end: String,
}

/// Everything a pipeline run needs, read from one TOML file.
///
/// ```toml
/// out = "out"
/// seed = 7
/// windows = [1, 3, 6, 9, 12]
/// threshold = 0.5
/// prune_threshold = 0.05
/// folds = 10
///
/// [inputs]
/// precip = "precip.csv"
/// impacts = "impacts.csv"
/// regions = "regions.csv"
///
/// [study]            # optional; all months after SPI warm-up otherwise
/// start = "2010-10"
/// end = "2015-06"
///
/// [split]
/// train = 0.6
/// validation = 0.2
/// test = 0.2
///
/// [resample]         # enabled, trigger_threshold, smote_k, oversample_ratio, undersample_ratio
/// [train]            # eta, n_rounds, min_child_weight, base_score, ...
/// [grid]             # max_depth, gamma, lambda, scale_pos_weight (numbers or "balanced")
/// ```
///
/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_windows")]
    pub windows: Vec<u8>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_prune")]
    pub prune_threshold: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub inputs: InputPaths,
    #[serde(default)]
    pub study: Option<StudyPeriod>,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub resample: ResamplePlan,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: HyperGrid,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_windows() -> Vec<u8> {
    Window::ALL.iter().map(|w| w.months() as u8).collect()
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_prune() -> f64 {
    0.05
}

fn default_folds() -> usize {
    10
}

impl PipelineConfig {
    /// Defaults for everything except the input paths.
    pub fn new(inputs: InputPaths, out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            seed: 0,
            windows: default_windows(),
            threshold: default_threshold(),
            prune_threshold: default_prune(),
            folds: default_folds(),
            inputs,
            study: None,
            split: SplitFractions::default(),
            resample: ResamplePlan::default(),
            train: TrainConfig::default(),
            grid: HyperGrid::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.out,
            &mut self.inputs.precip,
            &mut self.inputs.impacts,
            &mut self.inputs.regions,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.windows()?;
        self.study_window()?;
        self.split.validate()?;
        self.resample.validate()?;
        self.train.validate()?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1)"));
        }
        if !(self.prune_threshold > 0.0 && self.prune_threshold < 1.0) {
            return Err(Error::invalid("prune_threshold must lie in (0, 1)"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds must be at least 2"));
        }
        if self.grid.points().is_empty() {
            return Err(Error::invalid("hyperparameter grid is empty"));
        }
        Ok(())
    }

    pub fn windows(&self) -> Result<Vec<Window>> {
        if self.windows.is_empty() {
            return Err(Error::invalid("at least one SPI window is required"));
        }
        let mut w = self.windows.iter().map(|&m| Window::new(m)).collect::<Result<Vec<_>>>()?;
        w.sort();
        w.dedup();
        Ok(w)
    }

    pub fn study_window(&self) -> Result<Option<StudyWindow>> {
        let Some(s) = &self.study else { return Ok(None) };
        let window = StudyWindow {
            start: s.start.parse()?,
            end: s.end.parse()?,
        };
        if window.start > window.end {
            return Err(Error::invalid(format!(
                "study window {}..{} is empty",
                s.start, s.end
            )));
        }
        Ok(Some(window))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[inputs]
precip = "p.csv"
impacts = "i.csv"
regions = "r.csv"
"#;

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.windows, vec![1, 3, 6, 9, 12]);
        assert_eq!(cfg.folds, 10);
        assert_eq!(cfg.grid.points().len(), 36);
        assert_eq!(cfg.threshold, 0.5);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.study = Some(StudyPeriod {
            start: "2010-10".into(),
            end: "2015-06".into(),
        });
        assert_eq!(PipelineConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let reversed = format!("{MINIMAL}[study]\nstart = \"2015-06\"\nend = \"2010-10\"\n");
        assert!(PipelineConfig::parse(&reversed).is_err());
        let unknown = format!("bogus = 1\n{MINIMAL}");
        assert!(PipelineConfig::parse(&unknown).is_err());
        let window = format!("windows = [2]\n{MINIMAL}");
        assert!(PipelineConfig::parse(&window).is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.inputs.precip, PathBuf::from("/data/run/p.csv"));
        assert_eq!(cfg.out, PathBuf::from("/data/run/out"));
    }
}
