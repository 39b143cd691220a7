//! Aligned price panels, analyst estimate records and industry maps.
//!
//! Parsing lives in the companion crate; this module owns validation,
//! calendar alignment and the missing-data policy so that synthetic and file
//! data go through one code path.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::{Error, Result};

/// Default share of missing dates above which a firm is dropped.
pub const DEFAULT_MAX_MISSING: f64 = 0.05;

/// Daily close prices, `T` dates by `N` firms, stored row-major by date.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    firms: Vec<String>,
    prices: Vec<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, firms: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if dates.is_empty() || firms.is_empty() {
            return Err(Error::InvalidPanel("panel has no dates or no firms".into()));
        }
        if prices.len() != dates.len() * firms.len() {
            return Err(Error::InvalidPanel(format!(
                "expected {} prices, got {}",
                dates.len() * firms.len(),
                prices.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPanel(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        let mut seen = BTreeSet::new();
        for f in &firms {
            if !seen.insert(f.as_str()) {
                return Err(Error::InvalidPanel(format!("duplicate firm {f}")));
            }
        }
        let n = firms.len();
        for (k, &p) in prices.iter().enumerate() {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::NonPositivePrice {
                    row: k / n,
                    ticker: firms[k % n].clone(),
                    value: p,
                });
            }
        }
        Ok(Self {
            dates,
            firms,
            prices,
        })
    }

    #[inline]
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    #[inline]
    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    #[inline]
    pub fn price(&self, t: usize, firm: usize) -> f64 {
        self.prices[t * self.firms.len() + firm]
    }

    /// All firm prices on date index `t`.
    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.firms.len();
        &self.prices[t * n..(t + 1) * n]
    }

    pub fn series(&self, firm: usize) -> Vec<f64> {
        (0..self.n_dates()).map(|t| self.price(t, firm)).collect()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.dates[t]
    }

    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn firm(&self, i: usize) -> &str {
        &self.firms[i]
    }

    pub fn firm_index(&self, ticker: &str) -> Option<usize> {
        self.firms.iter().position(|f| f == ticker)
    }

    /// Panel restricted to (and reordered by) the given firm indices.
    pub fn select_firms(&self, order: &[usize]) -> Result<Self> {
        let firms = order.iter().map(|&i| self.firms[i].clone()).collect();
        let mut prices = Vec::with_capacity(order.len() * self.n_dates());
        for t in 0..self.n_dates() {
            prices.extend(order.iter().map(|&i| self.price(t, i)));
        }
        Self::new(self.dates.clone(), firms, prices)
    }

    /// Panel truncated to the first `len` dates.
    pub fn truncate_dates(&self, len: usize) -> Result<Self> {
        let n = self.n_firms();
        Self::new(
            self.dates[..len].to_vec(),
            self.firms.clone(),
            self.prices[..len * n].to_vec(),
        )
    }

    /// Index of the first trading date on or after `date`.
    pub fn day_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let k = self.dates.partition_point(|d| *d < date);
        (k < self.dates.len()).then_some(k)
    }

    /// Long-format observations in (date, firm) order, the inverse of [`align_prices`].
    pub fn observations(&self) -> Vec<PriceObservation> {
        let mut out = Vec::with_capacity(self.prices.len());
        for t in 0..self.n_dates() {
            for i in 0..self.n_firms() {
                out.push(PriceObservation {
                    row: out.len() + 1,
                    date: self.dates[t],
                    ticker: self.firms[i].clone(),
                    close: self.price(t, i),
                });
            }
        }
        out
    }
}

/// One parsed `date,ticker,close` row. `row` is the 1-based data row number.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceObservation {
    pub row: usize,
    pub date: NaiveDate,
    pub ticker: String,
    pub close: f64,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct DataQuality {
    pub n_dates: usize,
    pub n_firms: usize,
    /// Dropped tickers with their count of missing dates.
    pub firms_dropped: Vec<(String, usize)>,
    pub cells_forward_filled: usize,
    pub cells_back_filled: usize,
}

impl DataQuality {
    pub fn cells_filled(&self) -> usize {
        self.cells_forward_filled + self.cells_back_filled
    }
}

/// Aligns long-format observations onto the union of their dates.
///
/// Firms missing more than `max_missing` of the dates are dropped; remaining
/// gaps are forward-filled, and leading gaps back-filled from the first
/// observation.
pub fn align_prices(
    observations: &[PriceObservation],
    max_missing: f64,
) -> Result<(PricePanel, DataQuality)> {
    if observations.is_empty() {
        return Err(Error::InvalidPanel("no price observations".into()));
    }
    for o in observations {
        if !(o.close > 0.0 && o.close.is_finite()) {
            return Err(Error::NonPositivePrice {
                row: o.row,
                ticker: o.ticker.clone(),
                value: o.close,
            });
        }
    }
    let dates: Vec<NaiveDate> = observations
        .iter()
        .map(|o| o.date)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let date_index: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(k, d)| (*d, k)).collect();

    let mut by_firm: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for o in observations {
        let cells = by_firm
            .entry(o.ticker.as_str())
            .or_insert_with(|| vec![None; dates.len()]);
        let slot = &mut cells[date_index[&o.date]];
        if slot.is_some() {
            return Err(Error::DuplicateObservation {
                row: o.row,
                ticker: o.ticker.clone(),
                date: o.date.to_string(),
            });
        }
        *slot = Some(o.close);
    }

    let mut quality = DataQuality::default();
    let mut firms = Vec::new();
    let mut columns = Vec::new();
    for (ticker, cells) in by_firm {
        let missing = cells.iter().filter(|c| c.is_none()).count();
        if missing as f64 > max_missing * dates.len() as f64 {
            quality.firms_dropped.push((ticker.to_string(), missing));
            continue;
        }
        let first = cells.iter().flatten().copied().next();
        let mut filled = Vec::with_capacity(cells.len());
        let mut last: Option<f64> = None;
        for c in cells {
            match (c, last) {
                (Some(p), _) => {
                    filled.push(p);
                    last = Some(p);
                }
                (None, Some(p)) => {
                    filled.push(p);
                    quality.cells_forward_filled += 1;
                }
                (None, None) => {
                    // `first` exists because the firm has at least one observation.
                    filled.push(first.unwrap_or(f64::NAN));
                    quality.cells_back_filled += 1;
                }
            }
        }
        firms.push(ticker.to_string());
        columns.push(filled);
    }
    if firms.is_empty() {
        return Err(Error::InvalidPanel(
            "every firm exceeds the missing-data threshold".into(),
        ));
    }
    let mut prices = Vec::with_capacity(dates.len() * firms.len());
    for t in 0..dates.len() {
        prices.extend(columns.iter().map(|c| c[t]));
    }
    quality.n_dates = dates.len();
    quality.n_firms = firms.len();
    Ok((PricePanel::new(dates, firms, prices)?, quality))
}

/// A coverage event: `analyst_id` produced an estimate for `firm` on `date`.
///
/// `day` is the panel index of the first trading date on or after `date`,
/// i.e. the first session on which the estimate is known.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EstimateRecord {
    pub day: usize,
    pub date: NaiveDate,
    pub analyst_id: String,
    pub firm: usize,
}

/// One parsed `date,analyst_id,ticker` row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEstimate {
    pub row: usize,
    pub date: NaiveDate,
    pub analyst_id: String,
    pub ticker: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateSet {
    pub records: Vec<EstimateRecord>,
    pub dropped_unknown_ticker: usize,
    pub dropped_after_panel: usize,
    pub duplicates_removed: usize,
    /// Set when the input held no rows at all.
    pub empty_input: bool,
}

impl EstimateSet {
    /// Resolves tickers against the panel, deduplicates and sorts by date.
    pub fn from_raw(raw: &[RawEstimate], panel: &PricePanel) -> Self {
        let index: BTreeMap<&str, usize> = panel
            .firms()
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        let mut set = EstimateSet {
            empty_input: raw.is_empty(),
            ..Default::default()
        };
        let mut unique = BTreeSet::new();
        for r in raw {
            let Some(&firm) = index.get(r.ticker.as_str()) else {
                set.dropped_unknown_ticker += 1;
                continue;
            };
            let Some(day) = panel.day_on_or_after(r.date) else {
                set.dropped_after_panel += 1;
                continue;
            };
            let rec = EstimateRecord {
                day,
                date: r.date,
                analyst_id: r.analyst_id.clone(),
                firm,
            };
            if !unique.insert(rec) {
                set.duplicates_removed += 1;
            }
        }
        set.records = unique.into_iter().collect();
        set
    }
}

/// Industry code per firm, indexed like the panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndustryMap {
    codes: Vec<String>,
}

impl IndustryMap {
    pub fn new(codes: Vec<String>) -> Self {
        Self { codes }
    }

    /// Builds a total map over the panel's firms from `(ticker, code)` pairs.
    /// Rows for tickers outside the panel are ignored.
    pub fn from_pairs(pairs: &[(String, String)], panel: &PricePanel) -> Result<Self> {
        let mut by_ticker: BTreeMap<&str, &str> = BTreeMap::new();
        for (ticker, code) in pairs {
            match by_ticker.get(ticker.as_str()) {
                Some(prev) if *prev != code.as_str() => {
                    return Err(Error::ConflictingIndustry {
                        ticker: ticker.clone(),
                        first: prev.to_string(),
                        second: code.clone(),
                    });
                }
                _ => {
                    by_ticker.insert(ticker, code);
                }
            }
        }
        let missing: Vec<String> = panel
            .firms()
            .iter()
            .filter(|f| !by_ticker.contains_key(f.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingIndustry(missing));
        }
        Ok(Self {
            codes: panel
                .firms()
                .iter()
                .map(|f| by_ticker[f.as_str()].to_string())
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn code(&self, firm: usize) -> &str {
        &self.codes[firm]
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }
}
