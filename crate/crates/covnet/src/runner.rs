//! Loaded inputs and the worker pool that fans strategies, seeds and
//! (when periods are independent) walk-forward periods out over threads.

use covnet_core::backtest::{Backtest, BacktestReport, PeriodOutcome, StrategyConfig};
use covnet_core::labels::MarketData;
use covnet_core::market_data::{DataQuality, EstimateSet};
use covnet_core::synth::SynthMarket;
use covnet_core::{EstimateRecord, IndustryMap, PricePanel};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone)]
pub struct Inputs {
    pub panel: PricePanel,
    pub quality: DataQuality,
    pub records: Vec<EstimateRecord>,
    pub estimates: EstimateSet,
    pub industries: Option<IndustryMap>,
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        config.check_files()?;
        let (panel, quality) = io::load_price_panel(&config.prices, config.max_missing)?;
        let mut estimates = io::load_estimates(&config.estimates, &panel)?;
        let industries = config
            .industries
            .as_deref()
            .map(|p| io::load_industries(p, &panel))
            .transpose()?;
        Ok(Self {
            records: std::mem::take(&mut estimates.records),
            panel,
            quality,
            estimates,
            industries,
        })
    }

    pub fn from_synth(m: SynthMarket) -> Self {
        Self {
            quality: DataQuality {
                n_dates: m.panel.n_dates(),
                n_firms: m.panel.n_firms(),
                ..DataQuality::default()
            },
            panel: m.panel,
            estimates: EstimateSet::default(),
            records: m.records,
            industries: Some(m.industries),
        }
    }

    pub fn market(&self) -> MarketData<'_> {
        MarketData::new(&self.panel, &self.records, self.industries.as_ref())
    }
}

/// Runs one strategy. Periods are fanned out unless warm starts chain them.
pub fn run_strategy(data: &MarketData<'_>, config: StrategyConfig) -> Result<BacktestReport> {
    let bt = Backtest::new(data, config)?;
    if bt.config.warm_start && bt.config.kind.model_kind().is_some() {
        return Ok(bt.run()?);
    }
    let outcomes: Vec<PeriodOutcome> = (0..bt.plans.len())
        .into_par_iter()
        .map(|k| bt.run_period(k))
        .collect::<covnet_core::Result<_>>()?;
    Ok(bt.finish(outcomes)?)
}

/// Runs every config, returning reports in input order.
pub fn run_all(data: &MarketData<'_>, configs: Vec<StrategyConfig>) -> Result<Vec<BacktestReport>> {
    configs.into_par_iter().map(|c| run_strategy(data, c)).collect()
}

/// Runs `f` on a pool of `jobs` threads (all processors when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        b = b.num_threads(j);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Fails with the first invalid report's reason.
pub fn ensure_valid(reports: &[BacktestReport]) -> Result<()> {
    match reports.iter().find(|r| !r.valid) {
        Some(r) => Err(Error::Numerical(format!(
            "{} (seed {}) is invalid: {}",
            r.strategy,
            r.config.base_seed,
            r.invalid_reason.as_deref().unwrap_or("unknown")
        ))),
        None => Ok(()),
    }
}
