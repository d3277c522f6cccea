//! Loading and validation of the three tabular inputs.
//!
//! | file          | header                                   |
//! |---------------|------------------------------------------|
//! | `precip.csv`  | `region_id,month,precip_mm`              |
//! | `impacts.csv` | `region_id,month,category,count`         |
//! | `regions.csv` | `region_id,lc,phr,rwpd,taesd`            |
//!
//! Months are `YYYY-MM`. Headers must match exactly; extra or renamed
//! columns are rejected. Row numbers in diagnostics count data rows from 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use crate::error::{from_csv, Error, Result};
use crate::month::YearMonth;
use crate::spi::MonthlySeries;

pub const PRECIP_HEADER: [&str; 3] = ["region_id", "month", "precip_mm"];
pub const IMPACTS_HEADER: [&str; 4] = ["region_id", "month", "category", "count"];
pub const REGIONS_HEADER: [&str; 5] = ["region_id", "lc", "phr", "rwpd", "taesd"];

/// The nine impact categories of the Drought Impact Reporter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Agriculture,
    Energy,
    PlantsWildlife,
    SocietyPublicHealth,
    WaterSupplyQuality,
    BusinessIndustry,
    Fire,
    ReliefResponseRestrictions,
    TourismRecreation,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Agriculture,
        Category::Energy,
        Category::PlantsWildlife,
        Category::SocietyPublicHealth,
        Category::WaterSupplyQuality,
        Category::BusinessIndustry,
        Category::Fire,
        Category::ReliefResponseRestrictions,
        Category::TourismRecreation,
    ];

    /// Identifier used in files and on the command line.
    pub fn key(self) -> &'static str {
        match self {
            Category::Agriculture => "agriculture",
            Category::Energy => "energy",
            Category::PlantsWildlife => "plants_wildlife",
            Category::SocietyPublicHealth => "society_public_health",
            Category::WaterSupplyQuality => "water_supply_quality",
            Category::BusinessIndustry => "business_industry",
            Category::Fire => "fire",
            Category::ReliefResponseRestrictions => "relief_response_restrictions",
            Category::TourismRecreation => "tourism_recreation",
        }
    }

    /// Human-readable name used in reports.
    pub fn title(self) -> &'static str {
        match self {
            Category::Agriculture => "Agriculture",
            Category::Energy => "Energy",
            Category::PlantsWildlife => "Plants & Wildlife",
            Category::SocietyPublicHealth => "Society & Public Health",
            Category::WaterSupplyQuality => "Water Supply & Quality",
            Category::BusinessIndustry => "Business & Industry",
            Category::Fire => "Fire",
            Category::ReliefResponseRestrictions => "Relief, Response & Restrictions",
            Category::TourismRecreation => "Tourism & Recreation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.key() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Category::ALL.iter().map(|c| c.key()).collect();
                Error::invalid(format!(
                    "unknown impact category {s:?}; valid categories: {}",
                    valid.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecipRecord {
    pub region_id: String,
    pub month: YearMonth,
    pub precip_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactRecord {
    pub region_id: String,
    pub month: YearMonth,
    pub category: Category,
    pub count: u32,
}

/// Categorical attributes of one region, one class per attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RegionAttributes {
    pub region_id: String,
    pub land_cover: String,
    pub public_health_region: String,
    pub water_project_region: String,
    pub extension_district: String,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| from_csv(path, e))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::invalid(format!(
            "{}: header {:?} does not match the schema {:?}",
            path.display(),
            got,
            expected
        )));
    }
    Ok(())
}

fn records(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = open(path)?;
    check_header(path, &mut rdr, expected)?;
    rdr.records()
        .map(|r| r.map_err(|e| from_csv(path, e)))
        .collect()
}

fn row_error(path: &Path, row: usize, msg: impl fmt::Display) -> Error {
    Error::invalid(format!("{}: row {row}: {msg}", path.display()))
}

fn parse_month(path: &Path, row: usize, s: &str) -> Result<YearMonth> {
    s.parse().map_err(|e| row_error(path, row, e))
}

/// Reads `precip.csv` into raw records, validating depths.
pub fn read_precip_records(path: &Path) -> Result<Vec<PrecipRecord>> {
    let mut out = Vec::new();
    for (i, rec) in records(path, &PRECIP_HEADER)?.into_iter().enumerate() {
        let row = i + 1;
        let precip_mm: f64 = rec[2]
            .parse()
            .map_err(|_| row_error(path, row, format!("depth {:?} is not a number", &rec[2])))?;
        if !precip_mm.is_finite() || precip_mm < 0.0 {
            return Err(row_error(
                path,
                row,
                format!("depth {:?} must be finite and nonnegative", &rec[2]),
            ));
        }
        out.push(PrecipRecord {
            region_id: rec[0].to_string(),
            month: parse_month(path, row, &rec[1])?,
            precip_mm,
        });
    }
    Ok(out)
}

/// Groups precipitation records into one gap-free series per region.
pub fn precip_series(records: &[PrecipRecord]) -> Result<Vec<MonthlySeries>> {
    let mut by_region: BTreeMap<&str, BTreeMap<YearMonth, f64>> = BTreeMap::new();
    for r in records {
        if by_region
            .entry(&r.region_id)
            .or_default()
            .insert(r.month, r.precip_mm)
            .is_some()
        {
            return Err(Error::invalid(format!(
                "duplicate precipitation record for region {} month {}",
                r.region_id, r.month
            )));
        }
    }
    by_region
        .into_iter()
        .map(|(region, months)| {
            let start = *months.keys().next().expect("nonempty region");
            for (i, m) in months.keys().enumerate() {
                let want = start.plus(i as i64);
                if *m != want {
                    return Err(Error::invalid(format!(
                        "region {region}: precipitation record has a gap, missing month {want}"
                    )));
                }
            }
            MonthlySeries::new(region, start, months.into_values().collect())
        })
        .collect()
}

/// Loads `precip.csv` as one series per region, ordered by region id.
pub fn load_precip(path: &Path) -> Result<Vec<MonthlySeries>> {
    precip_series(&read_precip_records(path)?)
}

pub fn load_impacts(path: &Path) -> Result<Vec<ImpactRecord>> {
    let mut out = Vec::new();
    for (i, rec) in records(path, &IMPACTS_HEADER)?.into_iter().enumerate() {
        let row = i + 1;
        let category: Category = rec[2].parse().map_err(|e| row_error(path, row, e))?;
        let count: u32 = rec[3].parse().map_err(|_| {
            row_error(
                path,
                row,
                format!("count {:?} is not a nonnegative integer", &rec[3]),
            )
        })?;
        out.push(ImpactRecord {
            region_id: rec[0].to_string(),
            month: parse_month(path, row, &rec[1])?,
            category,
            count,
        });
    }
    Ok(out)
}

pub fn load_regions(path: &Path) -> Result<Vec<RegionAttributes>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, rec) in records(path, &REGIONS_HEADER)?.into_iter().enumerate() {
        let row = i + 1;
        if let Some(empty) = rec.iter().position(str::is_empty) {
            return Err(row_error(path, row, format!("empty {}", REGIONS_HEADER[empty])));
        }
        if !seen.insert(rec[0].to_string()) {
            return Err(row_error(path, row, format!("duplicate region {}", &rec[0])));
        }
        out.push(RegionAttributes {
            region_id: rec[0].to_string(),
            land_cover: rec[1].to_string(),
            public_health_region: rec[2].to_string(),
            water_project_region: rec[3].to_string(),
            extension_district: rec[4].to_string(),
        });
    }
    Ok(out)
}

/// The three inputs after referential checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub precip: Vec<MonthlySeries>,
    pub impacts: Vec<ImpactRecord>,
    pub regions: Vec<RegionAttributes>,
}

impl Inputs {
    pub fn load(precip: &Path, impacts: &Path, regions: &Path) -> Result<Self> {
        let inputs = Inputs {
            precip: load_precip(precip)?,
            impacts: load_impacts(impacts)?,
            regions: load_regions(regions)?,
        };
        inputs.check_references()?;
        Ok(inputs)
    }

    /// Every region in the precipitation or impact tables must have attributes.
    pub fn check_references(&self) -> Result<()> {
        let known: BTreeSet<&str> = self.regions.iter().map(|r| r.region_id.as_str()).collect();
        let referenced = self
            .precip
            .iter()
            .map(|s| (s.region_id(), "precipitation"))
            .chain(self.impacts.iter().map(|r| (r.region_id.as_str(), "impacts")));
        for (region, table) in referenced {
            if !known.contains(region) {
                return Err(Error::invalid(format!(
                    "region {region} appears in the {table} table but not in the regions table"
                )));
            }
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_precip(path: &Path, series: &[MonthlySeries]) -> Result<()> {
    let mut w = create(path)?;
    let err = |e| from_csv(path, e);
    w.write_record(PRECIP_HEADER).map_err(err)?;
    for s in series {
        for (i, v) in s.values().iter().enumerate() {
            w.write_record([
                s.region_id().to_string(),
                s.month_at(i).to_string(),
                v.to_string(),
            ])
            .map_err(err)?;
        }
    }
    finish(path, w)
}

pub fn write_impacts(path: &Path, impacts: &[ImpactRecord]) -> Result<()> {
    let mut w = create(path)?;
    let err = |e| from_csv(path, e);
    w.write_record(IMPACTS_HEADER).map_err(err)?;
    for r in impacts {
        w.write_record([
            r.region_id.clone(),
            r.month.to_string(),
            r.category.key().to_string(),
            r.count.to_string(),
        ])
        .map_err(err)?;
    }
    finish(path, w)
}

pub fn write_regions(path: &Path, regions: &[RegionAttributes]) -> Result<()> {
    let mut w = create(path)?;
    let err = |e| from_csv(path, e);
    w.write_record(REGIONS_HEADER).map_err(err)?;
    for r in regions {
        w.write_record([
            &r.region_id,
            &r.land_cover,
            &r.public_health_region,
            &r.water_project_region,
            &r.extension_district,
        ])
        .map_err(err)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_round_trips_through_key() {
        for c in Category::ALL {
            assert_eq!(c.key().parse::<Category>().unwrap(), c);
        }
    }

    #[test]
    fn unknown_category_lists_all_nine() {
        let msg = "weather".parse::<Category>().unwrap_err().to_string();
        for c in Category::ALL {
            assert!(msg.contains(c.key()), "{msg}");
        }
    }

    #[test]
    fn gap_is_reported_with_month() {
        let recs: Vec<PrecipRecord> = ["1995-04", "1995-05", "1995-07"]
            .iter()
            .map(|m| PrecipRecord {
                region_id: "TX-001".into(),
                month: m.parse().unwrap(),
                precip_mm: 1.0,
            })
            .collect();
        let msg = precip_series(&recs).unwrap_err().to_string();
        assert!(msg.contains("1995-06") && msg.contains("TX-001"), "{msg}");
    }

    #[test]
    fn records_are_sorted_by_month() {
        let recs: Vec<PrecipRecord> = [("1995-02", 2.0), ("1995-01", 1.0), ("1995-03", 3.0)]
            .iter()
            .map(|(m, v)| PrecipRecord {
                region_id: "r".into(),
                month: m.parse().unwrap(),
                precip_mm: *v,
            })
            .collect();
        let series = precip_series(&recs).unwrap();
        assert_eq!(series[0].values(), &[1.0, 2.0, 3.0]);
        assert_eq!(series[0].start().to_string(), "1995-01");
    }
}
