//! Standardized Precipitation Index.
//!
//! Monthly precipitation is summed over a rolling window, each calendar month
//! gets its own zero-inflated Pearson III fit, and aggregates are mapped to
//! standard-normal quantiles:
//!
//! ```text
//! H(x) = q + (1 - q) G(x)   for x > 0,   H(0) = q
//! SPI  = clamp(Phi^-1(H(x)), -3.09, 3.09)
//! ```
//!
//! The whole supplied record is the calibration period.

pub mod normal;
pub mod pearson3;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::month::YearMonth;
use pearson3::{sample_lmoments, PearsonIII};

pub use pearson3::Skew;

/// SPI values are clamped to `[-SPI_BOUND, SPI_BOUND]`.
pub const SPI_BOUND: f64 = 3.09;
/// Fits with fewer samples than this are refused.
pub const MIN_FIT_SAMPLES: usize = 20;
/// Records shorter than this (20 years) produce a warning.
pub const RECOMMENDED_RECORD_MONTHS: usize = 240;

/// Accumulation window length in months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Window(u8);

impl Window {
    pub const ONE: Window = Window(1);
    pub const THREE: Window = Window(3);
    pub const SIX: Window = Window(6);
    pub const NINE: Window = Window(9);
    pub const TWELVE: Window = Window(12);
    pub const ALL: [Window; 5] = [
        Window::ONE,
        Window::THREE,
        Window::SIX,
        Window::NINE,
        Window::TWELVE,
    ];

    pub fn new(months: u8) -> Result<Self> {
        match months {
            1 | 3 | 6 | 9 | 12 => Ok(Window(months)),
            _ => Err(Error::invalid(format!(
                "SPI window {months} not one of 1, 3, 6, 9, 12"
            ))),
        }
    }

    pub fn months(self) -> usize {
        self.0 as usize
    }

    /// Column name, e.g. `spi6`.
    pub fn column_name(self) -> String {
        format!("spi{}", self.0)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Gap-free monthly precipitation depths (mm) for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    region_id: String,
    start: YearMonth,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(region_id: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        let region_id = region_id.into();
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "region {region_id}: depth {v} at {} is not a finite nonnegative number",
                start.plus(i as i64)
            )));
        }
        Ok(Self {
            region_id,
            start,
            values,
        })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, i: usize) -> YearMonth {
        self.start.plus(i as i64)
    }
}

/// Rolling k-month sums; entry `i` covers months `i-k+1..=i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub region_id: String,
    pub window: Window,
    pub start: YearMonth,
    pub values: Vec<Option<f64>>,
}

/// Zero-inflated Pearson III fit for one calendar month and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionFit {
    pub calendar_month: u8,
    pub window: Window,
    /// Probability mass at zero precipitation.
    pub q_zero: f64,
    pub shape: f64,
    pub scale: f64,
    pub location: f64,
    pub skew: Skew,
    pub n_fit: usize,
}

impl DistributionFit {
    fn pearson(&self) -> PearsonIII {
        PearsonIII {
            shape: self.shape,
            scale: self.scale,
            location: self.location,
            skew: self.skew,
        }
    }

    /// Mixed CDF `H`: `q_zero` at zero, `q + (1-q) G(x)` above.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.q_zero;
        }
        self.q_zero + (1.0 - self.q_zero) * self.pearson().cdf(x)
    }

    /// SPI for an aggregate depth.
    pub fn spi(&self, x: f64) -> f64 {
        probability_to_spi(self.cdf(x))
    }
}

/// `Phi^-1(p)` clamped to the SPI bounds.
pub fn probability_to_spi(p: f64) -> f64 {
    normal::quantile(p).clamp(-SPI_BOUND, SPI_BOUND)
}

/// SPI values with `None` in the warm-up months.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiSeries {
    pub region_id: String,
    pub window: Window,
    pub start: YearMonth,
    pub values: Vec<Option<f64>>,
}

pub fn aggregate(series: &MonthlySeries, window: Window) -> Result<AggregateSeries> {
    let k = window.months();
    if series.len() < k {
        return Err(Error::invalid(format!(
            "region {}: {} months of precipitation is shorter than the {k}-month window",
            series.region_id,
            series.len()
        )));
    }
    let mut values = vec![None; series.len()];
    for (i, slot) in values.iter_mut().enumerate().skip(k - 1) {
        *slot = Some(series.values[i + 1 - k..=i].iter().sum());
    }
    Ok(AggregateSeries {
        region_id: series.region_id.clone(),
        window,
        start: series.start,
        values,
    })
}

/// Fits one calendar month's aggregates.
pub fn fit_month(samples: &[f64], calendar_month: u8, window: Window) -> Result<DistributionFit> {
    let fail = |why: String| {
        Error::Fit(format!(
            "calendar month {calendar_month:02}, window {window}: {why}"
        ))
    };
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(fail(format!(
            "{} samples, at least {MIN_FIT_SAMPLES} required",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(fail("samples must be finite and nonnegative".into()));
    }
    let mut nonzero: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    nonzero.sort_by(f64::total_cmp);
    let mut distinct = nonzero.clone();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(fail(format!(
            "{} distinct nonzero values, at least 3 required",
            distinct.len()
        )));
    }
    let q_zero = (samples.len() - nonzero.len()) as f64 / samples.len() as f64;
    let lm = sample_lmoments(&nonzero);
    let mut p3 = PearsonIII::from_lmoments(lm)
        .ok_or_else(|| fail(format!("no Pearson III solution for L-moments {lm:?}")))?;
    let (lo, hi) = (nonzero[0], nonzero[nonzero.len() - 1]);
    if !p3.covers(lo, hi) {
        // Small skewed samples can put the three-parameter bound past observed
        // values, which would pin them to the clamp. Fall back to a gamma
        // with its bound at zero.
        log::debug!(
            "calendar month {calendar_month:02}, window {window}: bound {} excludes samples; using two-parameter gamma",
            p3.location
        );
        p3 = PearsonIII::gamma_from_lmoments(lm.l1, lm.l2)
            .ok_or_else(|| fail(format!("no gamma solution for L-moments {lm:?}")))?;
    }
    Ok(DistributionFit {
        calendar_month,
        window,
        q_zero,
        shape: p3.shape,
        scale: p3.scale,
        location: p3.location,
        skew: p3.skew,
        n_fit: samples.len(),
    })
}

/// Fits every calendar month present in `agg`, keyed by calendar month.
pub fn fit_all(agg: &AggregateSeries) -> Result<BTreeMap<u8, DistributionFit>> {
    let mut by_month: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (i, v) in agg.values.iter().enumerate() {
        if let Some(x) = v {
            by_month
                .entry(agg.start.plus(i as i64).month())
                .or_default()
                .push(*x);
        }
    }
    by_month
        .into_iter()
        .map(|(m, xs)| {
            fit_month(&xs, m, agg.window)
                .map(|f| (m, f))
                .map_err(|e| match e {
                    Error::Fit(msg) => Error::Fit(format!("region {}: {msg}", agg.region_id)),
                    other => other,
                })
        })
        .collect()
}

pub fn transform(agg: &AggregateSeries, fits: &BTreeMap<u8, DistributionFit>) -> Result<SpiSeries> {
    let mut values = Vec::with_capacity(agg.values.len());
    for (i, v) in agg.values.iter().enumerate() {
        let month = agg.start.plus(i as i64).month();
        values.push(match v {
            None => None,
            Some(x) => {
                let fit = fits.get(&month).ok_or_else(|| {
                    Error::invalid(format!(
                        "region {}: no distribution fit for calendar month {month:02}, window {}",
                        agg.region_id, agg.window
                    ))
                })?;
                Some(fit.spi(*x))
            }
        });
    }
    Ok(SpiSeries {
        region_id: agg.region_id.clone(),
        window: agg.window,
        start: agg.start,
        values,
    })
}

/// SPI for each requested window, calibrated on the full series.
pub fn compute_spi(series: &MonthlySeries, windows: &[Window]) -> Result<BTreeMap<Window, SpiSeries>> {
    if series.len() < RECOMMENDED_RECORD_MONTHS {
        log::warn!(
            "region {}: {} months of record; SPI calibration normally uses 30 years",
            series.region_id,
            series.len()
        );
    }
    let mut out = BTreeMap::new();
    for &w in windows {
        let agg = aggregate(series, w)?;
        let fits = fit_all(&agg)?;
        out.insert(w, transform(&agg, &fits)?);
    }
    Ok(out)
}
