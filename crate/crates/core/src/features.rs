//! Momentum features: five multi-horizon log-returns and three normalized
//! MACD signals per firm and date.
//!
//! Column order is fixed: `[r1, r21, r63, r126, r252, s(8,24), s(16,48), s(32,96)]`.
//!
//! A MACD signal divides the spread between a short and a long price EWMA by
//! the 63-day standard deviation of prices, then divides that series by its
//! own trailing 252-day standard deviation. The inner series only exists
//! once 63 prices are available, so at early dates the outer window is
//! clipped to the days where the inner series is defined.

use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::Serialize;

use crate::math::{ln, mean, sample_std, sqrt};
use crate::market_data::PricePanel;
use crate::{Error, Result};

pub const RETURN_HORIZONS: [usize; 5] = [1, 21, 63, 126, 252];
pub const PRICE_VOL_WINDOW: usize = 63;
pub const SIGNAL_VOL_WINDOW: usize = 252;
/// First date index at which every feature is defined.
pub const WARMUP: usize = 252;
pub const N_FEATURES: usize = 8;
/// Columns holding the three MACD signals.
pub const MACD_COLUMNS: core::ops::Range<usize> = 5..8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MacdScalePair {
    pub short: usize,
    pub long: usize,
}

pub const MACD_PAIRS: [MacdScalePair; 3] = [
    MacdScalePair { short: 8, long: 24 },
    MacdScalePair { short: 16, long: 48 },
    MacdScalePair { short: 32, long: 96 },
];

/// `ln(p[t] / p[t - delta])` for one firm.
pub fn log_return(panel: &PricePanel, firm: usize, t: usize, delta: usize) -> Result<f64> {
    check_bounds(panel, firm, t)?;
    if t < delta {
        return Err(Error::InsufficientHistory { t, needed: delta });
    }
    Ok(ln(panel.price(t, firm) / panel.price(t - delta, firm)))
}

/// Exponentially weighted moving average of price with `gamma = 1 / scale`,
/// seeded with the first price.
pub fn ewma_price(panel: &PricePanel, firm: usize, t: usize, scale: usize) -> Result<f64> {
    check_bounds(panel, firm, t)?;
    let gamma = 1.0 / scale.max(1) as f64;
    let mut m = panel.price(0, firm);
    for s in 1..=t {
        m = gamma * panel.price(s, firm) + (1.0 - gamma) * m;
    }
    Ok(m)
}

/// Normalized MACD signal of one firm at date index `t`.
pub fn macd_signal(panel: &PricePanel, firm: usize, t: usize, pair: MacdScalePair) -> Result<f64> {
    check_bounds(panel, firm, t)?;
    if t < WARMUP {
        return Err(Error::InsufficientHistory { t, needed: WARMUP });
    }
    let prices: Vec<f64> = (0..=t).map(|s| panel.price(s, firm)).collect();
    let short = ewma_series(&prices, pair.short);
    let long = ewma_series(&prices, pair.long);
    let first = first_inner_day(t);
    let mut q = Vec::with_capacity(t + 1 - first);
    for s in first..=t {
        let vol = sample_std(&prices[s + 1 - PRICE_VOL_WINDOW..=s]);
        if vol == 0.0 {
            return Err(Error::DegenerateSeries {
                firm,
                what: "zero 63-day price volatility",
            });
        }
        q.push((short[s] - long[s]) / vol);
    }
    let outer = sample_std(&q);
    if outer == 0.0 {
        return Err(Error::DegenerateSeries {
            firm,
            what: "zero 252-day signal volatility",
        });
    }
    Ok(q[q.len() - 1] / outer)
}

#[inline]
fn first_inner_day(t: usize) -> usize {
    (PRICE_VOL_WINDOW - 1).max((t + 1).saturating_sub(SIGNAL_VOL_WINDOW))
}

fn ewma_series(prices: &[f64], scale: usize) -> Vec<f64> {
    let gamma = 1.0 / scale.max(1) as f64;
    let mut out = Vec::with_capacity(prices.len());
    let mut m = prices[0];
    out.push(m);
    for &p in &prices[1..] {
        m = gamma * p + (1.0 - gamma) * m;
        out.push(m);
    }
    out
}

fn check_bounds(panel: &PricePanel, firm: usize, t: usize) -> Result<()> {
    if firm >= panel.n_firms() {
        return Err(Error::OutOfBounds {
            index: firm,
            len: panel.n_firms(),
        });
    }
    if t >= panel.n_dates() {
        return Err(Error::OutOfBounds {
            index: t,
            len: panel.n_dates(),
        });
    }
    Ok(())
}

/// `N x 8` feature matrix for one date; row `i` is panel firm `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub day: usize,
    pub date: NaiveDate,
    n: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_raw(day: usize, date: NaiveDate, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * N_FEATURES);
        Self {
            day,
            date,
            n,
            values,
        }
    }

    pub fn n_firms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, firm: usize, column: usize) -> f64 {
        self.values[firm * N_FEATURES + column]
    }

    pub fn row(&self, firm: usize) -> &[f64] {
        &self.values[firm * N_FEATURES..(firm + 1) * N_FEATURES]
    }

    pub fn column(&self, column: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, column)).collect()
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows reordered so that output row `k` is input row `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.row(i));
        }
        Self::from_raw(self.day, self.date, order.len(), values)
    }

    /// Cross-sectional z-score per column (population variance). Constant
    /// columns become zero.
    pub fn standardize(&mut self) {
        let n = self.n;
        for c in 0..N_FEATURES {
            let col = self.column(c);
            let m = mean(&col);
            let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            let sd = sqrt(var);
            for i in 0..n {
                let v = &mut self.values[i * N_FEATURES + c];
                *v = if sd > 0.0 { (*v - m) / sd } else { 0.0 };
            }
        }
    }
}

/// Feature matrix at `t` from the scalar feature definitions.
pub fn feature_matrix(panel: &PricePanel, t: usize, standardize: bool) -> Result<FeatureMatrix> {
    if t < WARMUP {
        return Err(Error::InsufficientHistory { t, needed: WARMUP });
    }
    let n = panel.n_firms();
    let mut values = Vec::with_capacity(n * N_FEATURES);
    for i in 0..n {
        for &h in &RETURN_HORIZONS {
            values.push(log_return(panel, i, t, h)?);
        }
        for pair in MACD_PAIRS {
            values.push(macd_signal(panel, i, t, pair)?);
        }
    }
    finish(panel, t, values, standardize)
}

fn finish(panel: &PricePanel, t: usize, values: Vec<f64>, standardize: bool) -> Result<FeatureMatrix> {
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature {
            firm: k / N_FEATURES,
            column: k % N_FEATURES,
        });
    }
    let mut fm = FeatureMatrix::from_raw(t, panel.date(t), panel.n_firms(), values);
    if standardize {
        fm.standardize();
    }
    Ok(fm)
}

/// Precomputes the inner MACD series of every firm so feature matrices for
/// many dates cost `O(N * 252)` each instead of rescanning the history.
#[derive(Debug, Clone)]
pub struct FeatureEngine<'a> {
    panel: &'a PricePanel,
    /// `inner[pair][firm][s]`, NaN where the 63-day price vol is zero or
    /// undefined.
    inner: Vec<Vec<Vec<f64>>>,
}

impl<'a> FeatureEngine<'a> {
    pub fn new(panel: &'a PricePanel) -> Self {
        let t_len = panel.n_dates();
        let mut inner = vec![Vec::with_capacity(panel.n_firms()); MACD_PAIRS.len()];
        for firm in 0..panel.n_firms() {
            let prices = panel.series(firm);
            let vols: Vec<f64> = (0..t_len)
                .map(|s| {
                    if s + 1 < PRICE_VOL_WINDOW {
                        f64::NAN
                    } else {
                        sample_std(&prices[s + 1 - PRICE_VOL_WINDOW..=s])
                    }
                })
                .collect();
            for (k, pair) in MACD_PAIRS.iter().enumerate() {
                let short = ewma_series(&prices, pair.short);
                let long = ewma_series(&prices, pair.long);
                let q = (0..t_len)
                    .map(|s| {
                        if vols[s] > 0.0 {
                            (short[s] - long[s]) / vols[s]
                        } else {
                            f64::NAN
                        }
                    })
                    .collect();
                inner[k].push(q);
            }
        }
        Self { panel, inner }
    }

    pub fn panel(&self) -> &'a PricePanel {
        self.panel
    }

    fn macd(&self, firm: usize, t: usize, pair: usize) -> Result<f64> {
        let q = &self.inner[pair][firm][first_inner_day(t)..=t];
        if q.iter().any(|v| v.is_nan()) {
            return Err(Error::DegenerateSeries {
                firm,
                what: "zero 63-day price volatility",
            });
        }
        let outer = sample_std(q);
        if outer == 0.0 {
            return Err(Error::DegenerateSeries {
                firm,
                what: "zero 252-day signal volatility",
            });
        }
        Ok(q[q.len() - 1] / outer)
    }

    pub fn matrix(&self, t: usize, standardize: bool) -> Result<FeatureMatrix> {
        if t < WARMUP {
            return Err(Error::InsufficientHistory { t, needed: WARMUP });
        }
        if t >= self.panel.n_dates() {
            return Err(Error::OutOfBounds {
                index: t,
                len: self.panel.n_dates(),
            });
        }
        let n = self.panel.n_firms();
        let mut values = Vec::with_capacity(n * N_FEATURES);
        for i in 0..n {
            let p = self.panel.price(t, i);
            for &h in &RETURN_HORIZONS {
                values.push(ln(p / self.panel.price(t - h, i)));
            }
            for k in 0..MACD_PAIRS.len() {
                values.push(self.macd(i, t, k)?);
            }
        }
        finish(self.panel, t, values, standardize)
    }
}
