//! Synthetic markets with a planted coverage-driven lead-lag effect.
//!
//! Firms belong to latent sectors. Each analyst covers a basket of firms,
//! mostly from one home sector. A firm's daily log-return is its sector
//! factor, idiosyncratic noise, and `spillover_phi` times the co-coverage
//! weighted mean of its neighbours' trailing 21-day mean return as of the
//! previous day, plus a `-(factor_vol^2 + noise_vol^2) / 2` drift so that
//! prices are martingales without spillover.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::market_data::{EstimateRecord, IndustryMap, PricePanel};
use crate::math::{exp, round};
use crate::seed::{derive_seed, rng};
use crate::{Error, Result};

/// Trailing window of the neighbour momentum that drives the spillover.
pub const SPILLOVER_WINDOW: usize = 21;
/// Baskets are churned on this cadence (trading days).
pub const CHURN_EVERY: usize = 21;
/// Each analyst-firm pair emits one estimate per this many trading days.
pub const ESTIMATE_EVERY: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_firms: usize,
    pub n_analysts: usize,
    pub n_days: usize,
    pub n_sectors: usize,
    pub basket_size_mean: f64,
    /// Share of basket slots drawn from the whole market instead of the home sector.
    pub cross_sector_share: f64,
    /// Share of analyst baskets redrawn every month.
    pub coverage_churn: f64,
    pub spillover_phi: f64,
    pub noise_vol: f64,
    pub factor_vol: f64,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_firms: 100,
            n_analysts: 40,
            n_days: 4 * 252,
            n_sectors: 10,
            basket_size_mean: 3.0,
            cross_sector_share: 0.2,
            coverage_churn: 0.02,
            spillover_phi: 0.5,
            noise_vol: 0.02,
            factor_vol: 0.01,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 2).expect("valid date"),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(alloc::format!("synth: {m}")));
        if self.n_days <= 600 {
            return bad("n_days must exceed 600");
        }
        if !(0.0..1.0).contains(&self.spillover_phi) {
            return bad("spillover_phi must lie in [0, 1)");
        }
        if self.n_firms < 8 || self.n_analysts == 0 || self.n_sectors == 0 || self.n_sectors > self.n_firms {
            return bad("need at least 8 firms, one analyst, and 1..=n_firms sectors");
        }
        if !(self.basket_size_mean >= 2.0) || self.basket_size_mean > self.n_firms as f64 {
            return bad("basket_size_mean must lie in [2, n_firms]");
        }
        if !(0.0..=1.0).contains(&self.coverage_churn) || !(0.0..=1.0).contains(&self.cross_sector_share) {
            return bad("coverage_churn and cross_sector_share must lie in [0, 1]");
        }
        if !(self.noise_vol >= 0.0 && self.factor_vol >= 0.0) {
            return bad("volatilities must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub panel: PricePanel,
    /// Sorted by day, then analyst, then firm.
    pub records: Vec<EstimateRecord>,
    pub industries: IndustryMap,
    pub sectors: Vec<usize>,
}

/// Weekdays from `start` (moved forward to a weekday if needed).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

struct Baskets<'c> {
    config: &'c SynthConfig,
    by_sector: Vec<Vec<usize>>,
    home: Vec<usize>,
    sizes: Poisson<f64>,
}

impl Baskets<'_> {
    fn draw(&self, analyst: usize, r: &mut impl Rng) -> Vec<usize> {
        let c = self.config;
        let extra = self.sizes.sample(r) as usize;
        let size = (2 + extra).min(c.n_firms);
        let home = &self.by_sector[self.home[analyst]];
        let mut chosen = BTreeSet::new();
        let mut attempts = 0;
        while chosen.len() < size && attempts < 100 * size {
            attempts += 1;
            let firm = if r.random::<f64>() < c.cross_sector_share {
                r.random_range(0..c.n_firms)
            } else {
                home[r.random_range(0..home.len())]
            };
            chosen.insert(firm);
        }
        chosen.into_iter().collect()
    }
}

/// Row-normalized co-coverage weights: `w[i][j]` proportional to the number
/// of baskets holding both firms.
fn neighbour_weights(n: usize, baskets: &[Vec<usize>]) -> Vec<Vec<(usize, f64)>> {
    let mut counts = vec![vec![0u32; n]; n];
    for b in baskets {
        for &i in b {
            for &j in b {
                if i != j {
                    counts[i][j] += 1;
                }
            }
        }
    }
    counts
        .iter()
        .map(|row| {
            let total: u32 = row.iter().sum();
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| (j, c as f64 / total as f64))
                .collect()
        })
        .collect()
}

pub fn generate(config: &SynthConfig) -> Result<SynthMarket> {
    config.validate()?;
    let c = config;
    let (n, t_len) = (c.n_firms, c.n_days);

    let mut r_setup = rng(derive_seed(c.seed, &[1]));
    let mut slots: Vec<usize> = (0..n).map(|i| i % c.n_sectors).collect();
    slots.shuffle(&mut r_setup);
    let sectors = slots;
    let mut by_sector = vec![Vec::new(); c.n_sectors];
    for (i, &s) in sectors.iter().enumerate() {
        by_sector[s].push(i);
    }
    let home: Vec<usize> = (0..c.n_analysts).map(|_| r_setup.random_range(0..c.n_sectors)).collect();
    let sizes = Poisson::new(c.basket_size_mean - 2.0 + 1e-12).map_err(|_| Error::InvalidConfig("synth: basket size".into()))?;
    let drawer = Baskets {
        config: c,
        by_sector,
        home,
        sizes,
    };

    let mut r_cov = rng(derive_seed(c.seed, &[2]));
    let mut baskets: Vec<Vec<usize>> = (0..c.n_analysts).map(|a| drawer.draw(a, &mut r_cov)).collect();
    let mut weights = neighbour_weights(n, &baskets);
    let churn = round(c.coverage_churn * c.n_analysts as f64) as usize;

    let mut r_ret = rng(derive_seed(c.seed, &[3]));
    let mut r_est = rng(derive_seed(c.seed, &[4]));
    let mut phase: Vec<Vec<usize>> = baskets
        .iter()
        .map(|b| b.iter().map(|_| r_est.random_range(0..ESTIMATE_EVERY)).collect())
        .collect();

    let dates = business_days(c.start_date, t_len);
    let mut returns = vec![0.0; t_len * n];
    // trailing sum of the last SPILLOVER_WINDOW returns per firm
    let mut trailing = vec![0.0; n];
    let mut records = Vec::new();
    let analyst_ids: Vec<String> = (0..c.n_analysts).map(|a| alloc::format!("A{a:03}")).collect();

    for t in 0..t_len {
        if t > 0 && t % CHURN_EVERY == 0 && churn > 0 {
            let mut who: Vec<usize> = (0..c.n_analysts).collect();
            who.shuffle(&mut r_cov);
            for &a in &who[..churn.min(c.n_analysts)] {
                baskets[a] = drawer.draw(a, &mut r_cov);
                phase[a] = baskets[a].iter().map(|_| r_est.random_range(0..ESTIMATE_EVERY)).collect();
            }
            weights = neighbour_weights(n, &baskets);
        }
        for (a, b) in baskets.iter().enumerate() {
            for (k, &firm) in b.iter().enumerate() {
                if (t + phase[a][k]) % ESTIMATE_EVERY == 0 {
                    records.push(EstimateRecord {
                        day: t,
                        date: dates[t],
                        analyst_id: analyst_ids[a].clone(),
                        firm,
                    });
                }
            }
        }
        if t == 0 {
            continue;
        }
        let factors: Vec<f64> = (0..c.n_sectors)
            .map(|_| c.factor_vol * r_ret.sample::<f64, _>(StandardNormal))
            .collect();
        let window = t.saturating_sub(1).min(SPILLOVER_WINDOW).max(1) as f64;
        // keeps prices martingales when there is no spillover
        let drift = -0.5 * (c.factor_vol * c.factor_vol + c.noise_vol * c.noise_vol);
        let momentum: Vec<f64> = trailing.iter().map(|s| s / window).collect();
        for i in 0..n {
            let spill: f64 = weights[i].iter().map(|&(j, w)| w * momentum[j]).sum();
            let eps: f64 = r_ret.sample(StandardNormal);
            returns[t * n + i] = drift + factors[sectors[i]] + c.noise_vol * eps + c.spillover_phi * spill;
        }
        for i in 0..n {
            trailing[i] += returns[t * n + i];
            if t > SPILLOVER_WINDOW {
                trailing[i] -= returns[(t - SPILLOVER_WINDOW) * n + i];
            }
        }
    }

    let mut prices = vec![0.0; t_len * n];
    let mut log_level = vec![0.0; n];
    for t in 0..t_len {
        for i in 0..n {
            log_level[i] += returns[t * n + i];
            prices[t * n + i] = 100.0 * exp(log_level[i]);
        }
    }
    records.sort();
    let firms: Vec<String> = (0..n).map(|i| alloc::format!("F{i:03}")).collect();
    let codes = sectors.iter().map(|s| alloc::format!("S{s:02}")).collect();
    Ok(SynthMarket {
        panel: PricePanel::new(dates, firms, prices)?,
        records,
        industries: IndustryMap::new(codes),
        sectors,
    })
}
