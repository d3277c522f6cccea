//! Design-matrix assembly: SPI columns, one-hot categorical groups, binary
//! impact labels, category pruning and stratified splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{from_csv, Error, Result};
use crate::ingest::{Category, ImpactRecord, RegionAttributes};
use crate::matrix::Matrix;
use crate::month::{Season, YearMonth};
use crate::seed;
use crate::spi::{SpiSeries, Window};

/// A block of indicator columns in which each row has exactly one 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotGroup {
    pub name: String,
    pub classes: Vec<String>,
}

impl OneHotGroup {
    pub fn new(name: impl Into<String>, classes: Vec<String>) -> Self {
        Self {
            name: name.into(),
            classes,
        }
    }

    pub fn column_names(&self) -> impl Iterator<Item = String> + '_ {
        self.classes.iter().map(|c| format!("{}_{c}", self.name))
    }

    /// Position of `class` within the group.
    pub fn encode(&self, class: &str) -> Result<usize> {
        self.classes.iter().position(|c| c == class).ok_or_else(|| {
            Error::invalid(format!(
                "class {class:?} is not in the {} vocabulary {:?}",
                self.name, self.classes
            ))
        })
    }
}

/// Indicator columns for `rows`, one per class.
pub fn one_hot(group: &OneHotGroup, rows: &[&str]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|class| {
            let hot = group.encode(class)?;
            Ok((0..group.classes.len())
                .map(|i| if i == hot { 1.0 } else { 0.0 })
                .collect())
        })
        .collect()
}

/// Column layout: numeric SPI columns first, then one-hot groups.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    pub columns: Vec<String>,
    /// Columns `0..n_numeric` are numeric.
    pub n_numeric: usize,
    /// Column ranges of the one-hot groups.
    pub groups: Vec<(String, Range<usize>)>,
}

impl FeatureLayout {
    pub fn numeric_only(columns: Vec<String>) -> Self {
        Self {
            n_numeric: columns.len(),
            columns,
            groups: Vec::new(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_numeric(&self, col: usize) -> bool {
        col < self.n_numeric
    }

    /// Recovers the layout from column names: a leading run of `spi*`
    /// columns, then groups sharing the prefix before the first `_`.
    pub fn from_columns(columns: Vec<String>) -> Result<Self> {
        let n_numeric = columns.iter().take_while(|c| c.starts_with("spi")).count();
        let mut groups: Vec<(String, Range<usize>)> = Vec::new();
        for (i, c) in columns.iter().enumerate().skip(n_numeric) {
            let (prefix, _) = c.split_once('_').ok_or_else(|| {
                Error::invalid(format!("indicator column {c:?} lacks a group prefix"))
            })?;
            match groups.last_mut() {
                Some((name, range)) if name == prefix => range.end = i + 1,
                _ => {
                    if groups.iter().any(|(n, _)| n == prefix) {
                        return Err(Error::invalid(format!(
                            "indicator group {prefix:?} is not contiguous"
                        )));
                    }
                    groups.push((prefix.to_string(), i..i + 1));
                }
            }
        }
        Ok(Self {
            columns,
            n_numeric,
            groups,
        })
    }
}

/// One row of the design matrix identifies a region-month.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub region_id: String,
    pub month: YearMonth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub keys: Vec<RowKey>,
    pub layout: FeatureLayout,
    pub data: Matrix,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }
}

/// Vocabularies of the region attributes, sorted and deduplicated.
pub fn region_groups(regions: &[RegionAttributes]) -> [OneHotGroup; 4] {
    let vocab = |f: fn(&RegionAttributes) -> &String| -> Vec<String> {
        let set: BTreeSet<&String> = regions.iter().map(f).collect();
        set.into_iter().cloned().collect()
    };
    [
        OneHotGroup::new("lc", vocab(|r| &r.land_cover)),
        OneHotGroup::new("phr", vocab(|r| &r.public_health_region)),
        OneHotGroup::new("rwpd", vocab(|r| &r.water_project_region)),
        OneHotGroup::new("taesd", vocab(|r| &r.extension_district)),
    ]
}

pub fn season_group() -> OneHotGroup {
    OneHotGroup::new("season", Season::ALL.iter().map(|s| s.label().into()).collect())
}

pub fn month_group() -> OneHotGroup {
    OneHotGroup::new("month", (1..=12).map(|m| format!("{m:02}")).collect())
}

/// Inclusive range of months kept in the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyWindow {
    pub start: YearMonth,
    pub end: YearMonth,
}

impl StudyWindow {
    pub fn contains(&self, m: YearMonth) -> bool {
        self.start <= m && m <= self.end
    }
}

/// Assembles the design matrix from per-region SPI and region attributes.
///
/// Rows are ordered by region (in the order of `spi`) then month. Months in
/// any window's warm-up, or outside `study`, are dropped.
pub fn build_design_matrix(
    spi: &[BTreeMap<Window, SpiSeries>],
    regions: &[RegionAttributes],
    study: Option<StudyWindow>,
) -> Result<DesignMatrix> {
    let windows: Vec<Window> = spi
        .first()
        .map(|m| m.keys().copied().collect())
        .unwrap_or_default();
    let season = season_group();
    let month = month_group();
    let region_groups = region_groups(regions);
    let attrs: BTreeMap<&str, &RegionAttributes> =
        regions.iter().map(|r| (r.region_id.as_str(), r)).collect();

    let mut columns: Vec<String> = windows.iter().map(|w| w.column_name()).collect();
    let n_numeric = columns.len();
    let mut groups = Vec::new();
    for g in [&season, &month].into_iter().chain(region_groups.iter()) {
        let start = columns.len();
        columns.extend(g.column_names());
        groups.push((g.name.clone(), start..columns.len()));
    }
    let layout = FeatureLayout {
        columns,
        n_numeric,
        groups,
    };

    let mut data = Matrix::empty(layout.n_cols());
    let mut keys = Vec::new();
    let mut row = vec![0.0; layout.n_cols()];
    for per_region in spi {
        let first = per_region.values().next().ok_or_else(|| {
            Error::invalid("region has no SPI series".to_string())
        })?;
        if per_region.keys().copied().collect::<Vec<_>>() != windows {
            return Err(Error::invalid(format!(
                "region {} has SPI windows differing from the first region",
                first.region_id
            )));
        }
        let region = &first.region_id;
        let attr = attrs.get(region.as_str()).ok_or_else(|| {
            Error::invalid(format!("region {region} has no row in the regions table"))
        })?;
        let classes = [
            &attr.land_cover,
            &attr.public_health_region,
            &attr.water_project_region,
            &attr.extension_district,
        ];
        'months: for i in 0..first.values.len() {
            let ym = first.start.plus(i as i64);
            if study.is_some_and(|s| !s.contains(ym)) {
                continue;
            }
            row.iter_mut().for_each(|v| *v = 0.0);
            for (c, series) in per_region.values().enumerate() {
                match series.values[i] {
                    Some(v) => row[c] = v,
                    None => continue 'months,
                }
            }
            let hots = [
                season.encode(ym.season().label())?,
                month.encode(&format!("{:02}", ym.month()))?,
                region_groups[0].encode(classes[0])?,
                region_groups[1].encode(classes[1])?,
                region_groups[2].encode(classes[2])?,
                region_groups[3].encode(classes[3])?,
            ];
            for ((_, range), hot) in layout.groups.iter().zip(hots) {
                row[range.start + hot] = 1.0;
            }
            data.push_row(&row);
            keys.push(RowKey {
                region_id: region.clone(),
                month: ym,
            });
        }
    }
    Ok(DesignMatrix { keys, layout, data })
}

/// Binary presence labels for one category, aligned with matrix rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    pub category: Category,
    pub values: Vec<bool>,
}

impl LabelVector {
    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.values.len() as f64
        }
    }
}

/// Label = 1 iff the summed report count for the region-month is positive.
/// Every category gets a vector; categories without records are all zero.
pub fn summarize_impacts(
    records: &[ImpactRecord],
    keys: &[RowKey],
) -> BTreeMap<Category, LabelVector> {
    let mut totals: BTreeMap<(Category, &str, YearMonth), u64> = BTreeMap::new();
    for r in records {
        *totals
            .entry((r.category, r.region_id.as_str(), r.month))
            .or_default() += r.count as u64;
    }
    Category::ALL
        .into_iter()
        .map(|category| {
            let values = keys
                .iter()
                .map(|k| {
                    totals
                        .get(&(category, k.region_id.as_str(), k.month))
                        .is_some_and(|&n| n > 0)
                })
                .collect();
            (category, LabelVector { category, values })
        })
        .collect()
}

/// Drops categories whose positive proportion is strictly below `threshold`.
/// Returns the kept map and the dropped categories with their proportions.
pub fn prune_categories(
    labels: BTreeMap<Category, LabelVector>,
    threshold: f64,
) -> (BTreeMap<Category, LabelVector>, Vec<(Category, f64)>) {
    assert!(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    let mut dropped = Vec::new();
    let kept = labels
        .into_iter()
        .filter(|(c, l)| {
            let rate = l.positive_rate();
            if rate < threshold {
                log::info!("dropping category {c}: positive proportion {rate:.4} < {threshold}");
                dropped.push((*c, rate));
                false
            } else {
                true
            }
        })
        .collect();
    (kept, dropped)
}

/// Train/validation/test proportions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.validation, self.test];
        if f.iter().any(|x| !(*x > 0.0)) || ((f.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions {f:?} must all be positive and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Disjoint row-index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSet {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Splits `total` items by largest remainder so the parts sum exactly.
fn apportion(total: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let raw: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts = [0usize; 3];
    for (c, r) in counts.iter_mut().zip(&raw) {
        *c = r.floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Stratified train/validation/test split preserving the positive rate.
pub fn stratified_split(labels: &[bool], fractions: SplitFractions, seed: u64) -> Result<SplitSet> {
    fractions.validate()?;
    let f = [fractions.train, fractions.validation, fractions.test];
    let mut rng = seed::rng(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let counts = apportion(idx.len(), &f);
        let mut rest = idx.as_slice();
        for (part, n) in parts.iter_mut().zip(counts) {
            let (take, tail) = rest.split_at(n);
            part.extend_from_slice(take);
            rest = tail;
        }
        if class && counts.contains(&0) {
            return Err(Error::invalid(format!(
                "{} positives cannot populate every split with fractions {f:?}; \
                 merge categories or choose different fractions",
                idx.len()
            )));
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(SplitSet {
        train,
        validation,
        test,
        seed,
    })
}

/// Writes the matrix as `region_id,month,<columns>` with round-trip floats.
pub fn write_design_matrix(path: &Path, dm: &DesignMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let err = |e| from_csv(path, e);
    let mut header = vec!["region_id".to_string(), "month".to_string()];
    header.extend(dm.layout.columns.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (key, row) in dm.keys.iter().zip(dm.data.rows()) {
        let mut rec = vec![key.region_id.clone(), key.month.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_design_matrix(path: &Path) -> Result<DesignMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| from_csv(path, e))?
        .iter()
        .map(String::from)
        .collect();
    if header.len() < 3 || header[0] != "region_id" || header[1] != "month" {
        return Err(Error::invalid(format!(
            "{}: expected region_id,month,<features...> header",
            path.display()
        )));
    }
    let layout = FeatureLayout::from_columns(header[2..].to_vec())?;
    let mut data = Matrix::empty(layout.n_cols());
    let mut keys = Vec::new();
    let mut row = vec![0.0; layout.n_cols()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| from_csv(path, e))?;
        for (slot, field) in row.iter_mut().zip(rec.iter().skip(2)) {
            *slot = field.parse().map_err(|_| {
                Error::invalid(format!("{}: row {}: bad number {field:?}", path.display(), i + 1))
            })?;
        }
        keys.push(RowKey {
            region_id: rec[0].to_string(),
            month: rec[1].parse()?,
        });
        data.push_row(&row);
    }
    Ok(DesignMatrix { keys, layout, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_month_and_season() {
        let m = one_hot(&month_group(), &["07"]).unwrap();
        assert_eq!(m[0].iter().sum::<f64>(), 1.0);
        assert_eq!(m[0][6], 1.0);
        let s = season_group();
        let jan = YearMonth::new(2011, 1).unwrap();
        assert_eq!(s.encode(jan.season().label()).unwrap(), 0);
        assert_eq!(s.column_names().next().unwrap(), "season_DJF");
    }

    #[test]
    fn one_hot_rejects_unknown_class() {
        let g = OneHotGroup::new("phr", vec!["1".into(), "2".into()]);
        assert!(one_hot(&g, &["3"]).is_err());
        let rows = one_hot(&g, &["2", "2"]).unwrap();
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn labels_mark_presence() {
        let ym = YearMonth::new(2011, 7).unwrap();
        let key = |r: &str| RowKey {
            region_id: r.into(),
            month: ym,
        };
        let rec = |r: &str, n| ImpactRecord {
            region_id: r.into(),
            month: ym,
            category: Category::Fire,
            count: n,
        };
        let records = vec![rec("a", 3), rec("a", 0), rec("c", 0)];
        let labels = summarize_impacts(&records, &[key("a"), key("b"), key("c")]);
        assert_eq!(labels.len(), 9);
        assert_eq!(labels[&Category::Fire].values, vec![true, false, false]);
        assert!(labels[&Category::Energy].values.iter().all(|v| !v));
    }

    fn label(category: Category, pos: usize, total: usize) -> (Category, LabelVector) {
        let values = (0..total).map(|i| i < pos).collect();
        (category, LabelVector { category, values })
    }

    #[test]
    fn pruning_is_strict() {
        let map: BTreeMap<_, _> = [
            label(Category::Energy, 4, 100),
            label(Category::Fire, 5, 100),
            label(Category::Agriculture, 70, 100),
        ]
        .into_iter()
        .collect();
        let (kept, dropped) = prune_categories(map.clone(), 0.05);
        assert_eq!(kept.keys().copied().collect::<Vec<_>>(), vec![Category::Agriculture, Category::Fire]);
        assert_eq!(dropped, vec![(Category::Energy, 0.04)]);

        let (kept, dropped) = prune_categories(map.clone(), 0.01);
        assert_eq!(kept, map);
        assert!(dropped.is_empty());
    }

    #[test]
    fn split_counts_and_determinism() {
        let labels: Vec<bool> = (0..1000).map(|i| i % 10 < 3).collect();
        let s = stratified_split(&labels, SplitFractions::default(), 11).unwrap();
        let pos = |idx: &[usize]| idx.iter().filter(|&&i| labels[i]).count();
        assert!((pos(&s.train) as i64 - 180).abs() <= 1);
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), 1000);
        assert_eq!(s, stratified_split(&labels, SplitFractions::default(), 11).unwrap());
        assert_ne!(s.train, stratified_split(&labels, SplitFractions::default(), 12).unwrap().train);
    }

    #[test]
    fn split_rejects_empty_parts() {
        let labels = vec![true; 10];
        let f = SplitFractions { train: 1.0, validation: 0.0, test: 0.0 };
        assert!(stratified_split(&labels, f, 0).is_err());
        let mut few = vec![false; 100];
        few[0] = true;
        few[1] = true;
        let err = stratified_split(&few, SplitFractions::default(), 0).unwrap_err();
        assert!(err.to_string().contains("merge"));
    }

    #[test]
    fn layout_from_columns() {
        let cols: Vec<String> = ["spi1", "spi12", "season_DJF", "season_MAM", "lc_crop"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let l = FeatureLayout::from_columns(cols).unwrap();
        assert_eq!(l.n_numeric, 2);
        assert_eq!(l.groups, vec![("season".to_string(), 2..4), ("lc".to_string(), 4..5)]);
    }
}
