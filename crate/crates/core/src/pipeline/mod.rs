//! Batch pipeline: `spi -> prepare -> train -> evaluate -> explain -> report`.
//!
//! Every stage reads its inputs from the configured input files or from
//! artifacts of earlier stages under the output directory, and writes only
//! under the output directory. One root seed determines every stochastic
//! step through [`seed::derive`].
//!
//! Output layout:
//!
//! ```text
//! out/spi.csv                 region_id,month,spi1..spi12,warmup
//! out/design_matrix.csv       region_id,month,<feature columns>
//! out/labels.csv              region_id,month,<one 0/1 column per category>
//! out/category_summary.csv    category,positives,total,ratio,retained
//! out/splits.csv              row,<retained category>... (train/validation/test)
//! out/metrics_table.csv       category,ratio_of_impacts,accuracy,recall,f2_score
//! out/report.txt
//! out/<category>/model.txt, cv_report.csv, cv_summary.csv, best_config.toml,
//!     test_metrics.csv, shap_summary.csv, shap_summary.svg,
//!     shap_scatter_<spi>.csv, main_effect_<spi>.csv, main_effect_<spi>.svg
//! ```

mod config;
mod report;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{InputPaths, PipelineConfig, StudyPeriod};
pub use report::render_report;

use crate::boost::{load_ensemble, save_ensemble, train, Ensemble, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{grid_search, stratified_kfold, GridSearchResult};
use crate::eval::{evaluate, MetricsReport};
use crate::explain::{main_effects, shap_values, summarize, ShapSummary};
use crate::features::{
    build_design_matrix, prune_categories, read_design_matrix, stratified_split, summarize_impacts,
    write_design_matrix, DesignMatrix, SplitSet,
};
use crate::ingest::{load_impacts, load_precip, load_regions, Category};
use crate::month::YearMonth;
use crate::plot;
use crate::resample::balance;
use crate::seed;
use crate::spi::{compute_spi, SpiSeries, Window};
use table::{parse_f64, parse_u64, Table, TableWriter};

pub const SPI_FILE: &str = "spi.csv";
pub const DESIGN_FILE: &str = "design_matrix.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SUMMARY_FILE: &str = "category_summary.csv";
pub const SPLITS_FILE: &str = "splits.csv";
pub const METRICS_TABLE_FILE: &str = "metrics_table.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const MODEL_FILE: &str = "model.txt";
pub const CV_REPORT_FILE: &str = "cv_report.csv";
pub const CV_SUMMARY_FILE: &str = "cv_summary.csv";
pub const BEST_CONFIG_FILE: &str = "best_config.toml";
pub const TEST_METRICS_FILE: &str = "test_metrics.csv";
pub const SHAP_SUMMARY_FILE: &str = "shap_summary.csv";
pub const SHAP_SUMMARY_SVG: &str = "shap_summary.svg";

/// Largest tolerated `|base + sum(phi) - margin|` on explained rows.
pub const LOCAL_ACCURACY_TOLERANCE: f64 = 1e-6;

fn category_index(c: Category) -> u64 {
    Category::ALL.iter().position(|&x| x == c).expect("listed category") as u64
}

/// Directory holding one category's artifacts.
pub fn category_dir(out: &Path, c: Category) -> PathBuf {
    out.join(c.key())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn staged<T>(stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_stage(stage))
}

// ---------------------------------------------------------------- spi

/// Computes SPI for every region and writes `spi.csv`. Months inside any
/// window's warm-up have `warmup = 1` and blank values for the affected
/// windows.
pub fn cmd_spi(cfg: &PipelineConfig) -> Result<PathBuf> {
    staged("spi", || {
        let windows = cfg.windows()?;
        let series = load_precip(&cfg.inputs.precip)?;
        create_dir(&cfg.out)?;
        let path = cfg.out.join(SPI_FILE);
        let mut header = vec!["region_id".to_string(), "month".to_string()];
        header.extend(windows.iter().map(|w| w.column_name()));
        header.push("warmup".into());
        let mut w = TableWriter::create(&path, &header)?;
        for s in &series {
            let spi = compute_spi(s, &windows).map_err(|e| match e {
                Error::Fit(m) => Error::Fit(format!("region {}: {m}", s.region_id())),
                other => other,
            })?;
            for i in 0..s.len() {
                let vals: Vec<Option<f64>> = spi.values().map(|x| x.values[i]).collect();
                let warm = vals.iter().any(Option::is_none);
                let mut rec = vec![s.region_id().to_string(), s.month_at(i).to_string()];
                rec.extend(vals.into_iter().map(fmt_opt));
                rec.push(if warm { "1" } else { "0" }.into());
                w.row(rec)?;
            }
        }
        w.finish()?;
        log::info!("wrote {} ({} regions)", path.display(), series.len());
        Ok(path)
    })
}

/// Reads `spi.csv` back into per-region series, in file order.
pub fn read_spi_table(path: &Path) -> Result<Vec<BTreeMap<Window, SpiSeries>>> {
    let t = Table::read_expecting(path, &["region_id", "month"])?;
    if t.header.last().map(String::as_str) != Some("warmup") || t.header.len() < 4 {
        return Err(Error::invalid(format!(
            "{}: expected region_id,month,spi<k>...,warmup header",
            path.display()
        )));
    }
    let windows = t.header[2..t.header.len() - 1]
        .iter()
        .map(|h| {
            h.strip_prefix("spi")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| Error::invalid(format!("{}: bad SPI column {h:?}", path.display())))
                .and_then(Window::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<BTreeMap<Window, SpiSeries>> = Vec::new();
    let mut current: Option<(String, YearMonth)> = None;
    for (i, rec) in t.rows.iter().enumerate() {
        let month: YearMonth = rec[1].parse()?;
        let continues = match &current {
            Some((r, last)) if *r == rec[0] => {
                if month != last.plus(1) {
                    return Err(Error::invalid(format!(
                        "{}: row {}: region {} skips from {last} to {month}",
                        path.display(),
                        i + 1,
                        rec[0]
                    )));
                }
                true
            }
            _ => false,
        };
        if !continues {
            out.push(
                windows
                    .iter()
                    .map(|&w| {
                        (
                            w,
                            SpiSeries {
                                region_id: rec[0].clone(),
                                window: w,
                                start: month,
                                values: Vec::new(),
                            },
                        )
                    })
                    .collect(),
            );
        }
        current = Some((rec[0].clone(), month));
        let region = out.last_mut().expect("pushed above");
        for (s, field) in region.values_mut().zip(&rec[2..]) {
            s.values.push(if field.is_empty() {
                None
            } else {
                Some(parse_f64(path, i, field)?)
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- prepare

/// Share of region-months with at least one report, per category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryStat {
    pub category: Category,
    pub positives: u64,
    pub total: u64,
    pub retained: bool,
}

impl CategoryStat {
    /// Ratio of impacts: positives / total samples.
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.positives as f64 / self.total as f64
        }
    }
}

/// Builds the design matrix, impact labels and per-category splits.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<Vec<CategoryStat>> {
    staged("prepare", || {
        let spi = read_spi_table(&cfg.out.join(SPI_FILE))?;
        let impacts = load_impacts(&cfg.inputs.impacts)?;
        let regions = load_regions(&cfg.inputs.regions)?;
        let known: std::collections::BTreeSet<&str> = regions.iter().map(|r| r.region_id.as_str()).collect();
        if let Some(r) = impacts.iter().find(|r| !known.contains(r.region_id.as_str())) {
            return Err(Error::invalid(format!(
                "region {} appears in the impacts table but not in the regions table",
                r.region_id
            )));
        }
        let dm = build_design_matrix(&spi, &regions, cfg.study_window()?)?;
        if dm.n_rows() == 0 {
            return Err(Error::invalid("design matrix is empty: no months survive warm-up and the study window"));
        }
        let labels = summarize_impacts(&impacts, &dm.keys);
        let (kept, dropped) = prune_categories(labels.clone(), cfg.prune_threshold);
        for (c, rate) in &dropped {
            log::info!(
                "category {c} dropped: {:.2}% of samples positive, below {:.2}%",
                rate * 100.0,
                cfg.prune_threshold * 100.0
            );
        }

        write_design_matrix(&cfg.out.join(DESIGN_FILE), &dm)?;

        let path = cfg.out.join(LABELS_FILE);
        let mut header = vec!["region_id".to_string(), "month".to_string()];
        header.extend(Category::ALL.iter().map(|c| c.key().to_string()));
        let mut w = TableWriter::create(&path, &header)?;
        for (i, key) in dm.keys.iter().enumerate() {
            let mut rec = vec![key.region_id.clone(), key.month.to_string()];
            rec.extend(labels.values().map(|l| if l.values[i] { "1" } else { "0" }.to_string()));
            w.row(rec)?;
        }
        w.finish()?;

        let stats: Vec<CategoryStat> = labels
            .values()
            .map(|l| CategoryStat {
                category: l.category,
                positives: l.positives() as u64,
                total: l.values.len() as u64,
                retained: kept.contains_key(&l.category),
            })
            .collect();
        let path = cfg.out.join(SUMMARY_FILE);
        let mut w = TableWriter::create(&path, &["category", "positives", "total", "ratio", "retained"])?;
        for s in &stats {
            w.row([
                s.category.key().to_string(),
                s.positives.to_string(),
                s.total.to_string(),
                s.ratio().to_string(),
                (s.retained as u8).to_string(),
            ])?;
        }
        w.finish()?;

        let splits = kept
            .iter()
            .map(|(c, l)| {
                stratified_split(&l.values, cfg.split, seed::derive(cfg.seed, "split", &[category_index(*c)]))
                    .map_err(|e| Error::invalid(format!("category {c}: {e}")))
            })
            .collect::<Result<Vec<SplitSet>>>()?;
        let path = cfg.out.join(SPLITS_FILE);
        let mut header = vec!["row".to_string()];
        header.extend(kept.keys().map(|c| c.key().to_string()));
        let mut w = TableWriter::create(&path, &header)?;
        let names: Vec<Vec<&str>> = splits
            .iter()
            .map(|s| {
                let mut v = vec![""; dm.n_rows()];
                for (rows, name) in [(&s.train, "train"), (&s.validation, "validation"), (&s.test, "test")] {
                    for &r in rows {
                        v[r] = name;
                    }
                }
                v
            })
            .collect();
        for r in 0..dm.n_rows() {
            let mut rec = vec![r.to_string()];
            rec.extend(names.iter().map(|n| n[r].to_string()));
            w.row(rec)?;
        }
        w.finish()?;
        log::info!(
            "prepared {} rows x {} features; {} categories retained",
            dm.n_rows(),
            dm.layout.n_cols(),
            kept.len()
        );
        Ok(stats)
    })
}

/// Outputs of `prepare`, reloaded from disk.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub matrix: DesignMatrix,
    pub stats: Vec<CategoryStat>,
    pub labels: BTreeMap<Category, Vec<bool>>,
    pub splits: BTreeMap<Category, SplitSet>,
}

pub fn read_category_summary(path: &Path) -> Result<Vec<CategoryStat>> {
    let t = Table::read_expecting(path, &["category", "positives", "total", "ratio", "retained"])?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(CategoryStat {
                category: r[0].parse()?,
                positives: parse_u64(path, i, &r[1])?,
                total: parse_u64(path, i, &r[2])?,
                retained: parse_u64(path, i, &r[4])? == 1,
            })
        })
        .collect()
}

impl Prepared {
    pub fn load(out: &Path) -> Result<Prepared> {
        let matrix = read_design_matrix(&out.join(DESIGN_FILE))?;
        let stats = read_category_summary(&out.join(SUMMARY_FILE))?;

        let path = out.join(LABELS_FILE);
        let t = Table::read_expecting(&path, &["region_id", "month"])?;
        if t.rows.len() != matrix.n_rows() {
            return Err(Error::invalid(format!(
                "{} has {} rows but the design matrix has {}",
                path.display(),
                t.rows.len(),
                matrix.n_rows()
            )));
        }
        let mut labels = BTreeMap::new();
        for (col, name) in t.header.iter().enumerate().skip(2) {
            let c: Category = name.parse()?;
            labels.insert(c, t.rows.iter().map(|r| r[col] == "1").collect());
        }

        let path = out.join(SPLITS_FILE);
        let t = Table::read_expecting(&path, &["row"])?;
        let mut splits = BTreeMap::new();
        for (col, name) in t.header.iter().enumerate().skip(1) {
            let c: Category = name.parse()?;
            let mut s = SplitSet {
                train: Vec::new(),
                validation: Vec::new(),
                test: Vec::new(),
                seed: 0,
            };
            for (i, r) in t.rows.iter().enumerate() {
                match r[col].as_str() {
                    "train" => s.train.push(i),
                    "validation" => s.validation.push(i),
                    "test" => s.test.push(i),
                    other => {
                        return Err(Error::invalid(format!(
                            "{}: row {}: unknown split {other:?}",
                            path.display(),
                            i + 1
                        )))
                    }
                }
            }
            splits.insert(c, s);
        }
        Ok(Prepared {
            matrix,
            stats,
            labels,
            splits,
        })
    }

    pub fn retained(&self) -> Vec<Category> {
        self.stats.iter().filter(|s| s.retained).map(|s| s.category).collect()
    }

    /// Retained categories, or just `only` if given (which must be retained).
    pub fn targets(&self, only: Option<Category>) -> Result<Vec<Category>> {
        let retained = self.retained();
        match only {
            None => Ok(retained),
            Some(c) if retained.contains(&c) => Ok(vec![c]),
            Some(c) => {
                let ratio = self.stats.iter().find(|s| s.category == c).map(|s| s.ratio()).unwrap_or(0.0);
                Err(Error::invalid(format!(
                    "category {c} was dropped at prepare (ratio of impacts {ratio:.4} below the prune threshold)"
                )))
            }
        }
    }

    fn rows(&self, idx: &[usize], c: Category) -> (crate::matrix::Matrix, Vec<bool>) {
        let y = &self.labels[&c];
        (self.matrix.data.select_rows(idx), idx.iter().map(|&i| y[i]).collect())
    }
}

// ---------------------------------------------------------------- train

/// What `train` produced for one category.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub category: Category,
    pub search: GridSearchResult,
    pub config: TrainConfig,
    pub model: Ensemble,
}

/// Grid search on each category's training split, then a final fit of the
/// selected configuration on the (balanced) training split.
pub fn cmd_train(cfg: &PipelineConfig, only: Option<Category>) -> Result<Vec<TrainOutcome>> {
    staged("train", || {
        let p = Prepared::load(&cfg.out)?;
        let layout = &p.matrix.layout;
        let mut outcomes = Vec::new();
        for c in p.targets(only)? {
            let ci = category_index(c);
            let (x, y) = p.rows(&p.splits[&c].train, c);
            let resample = cfg.resample.with_seed(seed::derive(cfg.seed, "resample", &[ci]));
            let folds = stratified_kfold(&y, cfg.folds, seed::derive(cfg.seed, "folds", &[ci]))?;
            let base = TrainConfig {
                seed: seed::derive(cfg.seed, "train", &[ci]),
                ..cfg.train
            };
            let search = grid_search(&x, &y, layout, &base, &cfg.grid, &folds, &resample, cfg.threshold)?;
            let best = search.best_point();
            let final_plan = resample.with_seed(seed::derive(resample.seed, "final", &[]));
            let (xb, yb) = balance(&x, &y, layout, &final_plan)?;
            let config = best.resolve(&base, &yb);
            let model = train(&xb, &yb, &config)?;

            let dir = category_dir(&cfg.out, c);
            create_dir(&dir)?;
            save_ensemble(&dir.join(MODEL_FILE), &model)?;
            write_text(
                &dir.join(BEST_CONFIG_FILE),
                &toml::to_string(&config).expect("config serializes"),
            )?;
            write_cv_files(&dir, &search)?;
            let s = search.summaries[search.best];
            log::info!(
                "{c}: selected {best:?} (cv F2 {:.4}, PR-AUC {:.4})",
                s.mean_f2,
                s.mean_pr_auc
            );
            outcomes.push(TrainOutcome {
                category: c,
                search,
                config,
                model,
            });
        }
        Ok(outcomes)
    })
}

const METRIC_COLUMNS: [&str; 9] = ["accuracy", "recall", "precision", "f2", "pr_auc", "tp", "fp", "tn", "fn"];

fn metric_fields(m: &MetricsReport) -> Vec<String> {
    vec![
        m.accuracy.to_string(),
        m.recall.to_string(),
        m.precision.to_string(),
        m.f2.to_string(),
        m.pr_auc.to_string(),
        m.counts.tp.to_string(),
        m.counts.fp.to_string(),
        m.counts.tn.to_string(),
        m.counts.fn_.to_string(),
    ]
}

fn write_cv_files(dir: &Path, search: &GridSearchResult) -> Result<()> {
    let point_fields = |p: usize| {
        let g = &search.points[p];
        vec![
            p.to_string(),
            g.max_depth.to_string(),
            g.gamma.to_string(),
            g.lambda.to_string(),
            g.scale_pos_weight.to_string(),
        ]
    };
    let path = dir.join(CV_REPORT_FILE);
    let mut header = vec!["point", "max_depth", "gamma", "lambda", "scale_pos_weight", "fold"];
    header.extend(METRIC_COLUMNS);
    let mut w = TableWriter::create(&path, &header)?;
    for f in &search.folds {
        let mut rec = point_fields(f.point);
        rec.push(f.fold.to_string());
        rec.extend(metric_fields(&f.metrics));
        w.row(rec)?;
    }
    w.finish()?;

    let path = dir.join(CV_SUMMARY_FILE);
    let mut w = TableWriter::create(
        &path,
        &["point", "max_depth", "gamma", "lambda", "scale_pos_weight", "mean_f2", "mean_pr_auc", "selected"],
    )?;
    for (p, s) in search.summaries.iter().enumerate() {
        let mut rec = point_fields(p);
        rec.extend([
            s.mean_f2.to_string(),
            s.mean_pr_auc.to_string(),
            ((p == search.best) as u8).to_string(),
        ]);
        w.row(rec)?;
    }
    w.finish()
}

// ---------------------------------------------------------------- evaluate

/// Validation and test metrics for one category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMetrics {
    pub category: Category,
    pub ratio: f64,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// One row of the combined metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub category: Category,
    pub ratio_of_impacts: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub f2_score: f64,
}

pub const METRICS_TABLE_HEADER: [&str; 5] = ["category", "ratio_of_impacts", "accuracy", "recall", "f2_score"];

fn load_model(out: &Path, c: Category) -> Result<Ensemble> {
    let path = category_dir(out, c).join(MODEL_FILE);
    if !path.exists() {
        return Err(Error::io(
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("no model for {c}; run `train` first")),
        ));
    }
    load_ensemble(&path)
}

/// Scores each trained model on its validation and test splits and
/// rebuilds `metrics_table.csv` from every category evaluated so far.
pub fn cmd_evaluate(cfg: &PipelineConfig, only: Option<Category>) -> Result<Vec<CategoryMetrics>> {
    staged("evaluate", || {
        let p = Prepared::load(&cfg.out)?;
        let mut results = Vec::new();
        for c in p.targets(only)? {
            let model = load_model(&cfg.out, c)?;
            let split = &p.splits[&c];
            let (xv, yv) = p.rows(&split.validation, c);
            let (xt, yt) = p.rows(&split.test, c);
            let validation = evaluate(&model, &xv, &yv, cfg.threshold)?;
            let test = evaluate(&model, &xt, &yt, cfg.threshold)?;
            let path = category_dir(&cfg.out, c).join(TEST_METRICS_FILE);
            let mut header = vec!["split"];
            header.extend(METRIC_COLUMNS);
            let mut w = TableWriter::create(&path, &header)?;
            for (name, m) in [("validation", &validation), ("test", &test)] {
                let mut rec = vec![name.to_string()];
                rec.extend(metric_fields(m));
                w.row(rec)?;
            }
            w.finish()?;
            let ratio = p.stats.iter().find(|s| s.category == c).map(CategoryStat::ratio).unwrap_or(0.0);
            log::info!(
                "{c}: test accuracy {:.4} recall {:.4} F2 {:.4}",
                test.accuracy,
                test.recall,
                test.f2
            );
            results.push(CategoryMetrics {
                category: c,
                ratio,
                validation,
                test,
            });
        }

        let path = cfg.out.join(METRICS_TABLE_FILE);
        let mut w = TableWriter::create(&path, &METRICS_TABLE_HEADER)?;
        for s in p.stats.iter().filter(|s| s.retained) {
            let file = category_dir(&cfg.out, s.category).join(TEST_METRICS_FILE);
            if !file.exists() {
                continue;
            }
            let test = read_test_metrics(&file)?;
            w.row([
                s.category.key().to_string(),
                s.ratio().to_string(),
                test.accuracy.to_string(),
                test.recall.to_string(),
                test.f2.to_string(),
            ])?;
        }
        w.finish()?;
        Ok(results)
    })
}

/// Test-split row of a category's `test_metrics.csv`.
pub fn read_test_metrics(path: &Path) -> Result<MetricsReport> {
    let t = Table::read_expecting(path, &["split", "accuracy"])?;
    let (i, r) = t
        .rows
        .iter()
        .enumerate()
        .find(|(_, r)| r[0] == "test")
        .ok_or_else(|| Error::invalid(format!("{}: no test row", path.display())))?;
    let f = |k: usize| parse_f64(path, i, &r[k]);
    let u = |k: usize| parse_u64(path, i, &r[k]);
    Ok(MetricsReport {
        accuracy: f(1)?,
        recall: f(2)?,
        precision: f(3)?,
        f2: f(4)?,
        pr_auc: f(5)?,
        threshold: f64::NAN,
        counts: crate::eval::ConfusionCounts {
            tp: u(6)?,
            fp: u(7)?,
            tn: u(8)?,
            fn_: u(9)?,
        },
    })
}

pub fn read_metrics_table(path: &Path) -> Result<Vec<MetricsRow>> {
    let t = Table::read_expecting(path, &METRICS_TABLE_HEADER)?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(MetricsRow {
                category: r[0].parse()?,
                ratio_of_impacts: parse_f64(path, i, &r[1])?,
                accuracy: parse_f64(path, i, &r[2])?,
                recall: parse_f64(path, i, &r[3])?,
                f2_score: parse_f64(path, i, &r[4])?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- explain

/// SHAP outputs for one category, computed on its test split.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub category: Category,
    pub summary: ShapSummary,
    pub max_additivity_error: f64,
}

/// Number of top-ranked SPI features that get main-effect plots.
pub const MAIN_EFFECT_FEATURES: usize = 2;

pub fn cmd_explain(cfg: &PipelineConfig, only: Option<Category>) -> Result<Vec<Explanation>> {
    staged("explain", || {
        let p = Prepared::load(&cfg.out)?;
        let mut out = Vec::new();
        for c in p.targets(only)? {
            let model = load_model(&cfg.out, c)?;
            let (x, _) = p.rows(&p.splits[&c].test, c);
            let shap = shap_values(&model, &x)?;
            let max_err = x
                .rows()
                .enumerate()
                .map(|(i, r)| (shap.reconstructed_margin(i) - model.margin(r)).abs())
                .fold(0.0, f64::max);
            if !(max_err < LOCAL_ACCURACY_TOLERANCE) {
                return Err(Error::Numerical(format!(
                    "{c}: SHAP values miss the model margin by {max_err:e}"
                )));
            }
            let summary = summarize(&shap, &x, &p.matrix.layout);
            let dir = category_dir(&cfg.out, c);
            create_dir(&dir)?;

            let mut w = TableWriter::create(&dir.join(SHAP_SUMMARY_FILE), &["feature", "mean_abs_shap", "rank"])?;
            for (rank, f) in summary.ranking.iter().enumerate() {
                w.row([f.name.clone(), f.mean_abs.to_string(), (rank + 1).to_string()])?;
            }
            w.finish()?;
            for s in &summary.scatter {
                let path = dir.join(format!("shap_scatter_{}.csv", s.name));
                let mut w = TableWriter::create(&path, &["feature_value", "shap_value"])?;
                for (v, phi) in &s.points {
                    w.row([v.to_string(), phi.to_string()])?;
                }
                w.finish()?;
            }
            write_text(
                &dir.join(SHAP_SUMMARY_SVG),
                &plot::summary_svg(&format!("{}: SHAP values of SPI features", c.title()), &summary.scatter),
            )?;
            for s in summary.scatter.iter().take(MAIN_EFFECT_FEATURES) {
                let me = main_effects(&model, &x, s.feature)?;
                let path = dir.join(format!("main_effect_{}.csv", s.name));
                let mut w = TableWriter::create(&path, &["feature_value", "main_effect"])?;
                for (v, m) in &me.points {
                    w.row([v.to_string(), m.to_string()])?;
                }
                w.finish()?;
                write_text(
                    &dir.join(format!("main_effect_{}.svg", s.name)),
                    &plot::scatter_svg(
                        &format!("{}: main effect of {}", c.title(), s.name),
                        &s.name,
                        "SHAP main effect (log-odds)",
                        &me.points,
                    ),
                )?;
            }
            out.push(Explanation {
                category: c,
                summary,
                max_additivity_error: max_err,
            });
        }
        Ok(out)
    })
}

/// `(feature, mean_abs_shap)` rows of a `shap_summary.csv`, in rank order.
pub fn read_shap_summary(path: &Path) -> Result<Vec<(String, f64)>> {
    let t = Table::read_expecting(path, &["feature", "mean_abs_shap", "rank"])?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| Ok((r[0].clone(), parse_f64(path, i, &r[1])?)))
        .collect()
}

// ---------------------------------------------------------------- report / run-all

/// Renders the report from artifacts, prints nothing, and writes `report.txt`.
pub fn cmd_report(out: &Path, only: Option<Category>) -> Result<String> {
    staged("report", || {
        let text = render_report(out, only)?;
        write_text(&out.join(REPORT_FILE), &text)?;
        Ok(text)
    })
}

/// Every stage in order; returns the rendered report.
pub fn cmd_run_all(cfg: &PipelineConfig, only: Option<Category>) -> Result<String> {
    cmd_spi(cfg)?;
    cmd_prepare(cfg)?;
    cmd_train(cfg, only)?;
    cmd_evaluate(cfg, only)?;
    cmd_explain(cfg, only)?;
    cmd_report(&cfg.out, only)
}
