//! Run configuration file: one flat TOML table, every key documented below,
//! unknown keys rejected.
//!
//! ```toml
//! prices = "data/prices.csv"          # date,ticker,close
//! estimates = "data/estimates.csv"    # date,analyst_id,ticker
//! industries = "data/industries.csv"  # ticker,industry (optional)
//! strategy = "gat_analysts"
//! graph = "analysts"                  # analysts | correlation | industry | del_edge
//! del_edge_fraction = 0.6
//! quantile = 0.25
//! costs_bps = [0, 1, 2, 5]
//! horizon = 21
//! lookback = 252
//! seeds = [0]
//! out = "out"
//! grid_lr = [0.01, 0.001]
//! grid_layers = [1, 2]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use covnet_core::backtest::StrategyConfig;
use covnet_core::gnn::{ModelGrid, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};
use covnet_core::graphs::{DEFAULT_CORRELATION_PERCENTILE, DEFAULT_CORRELATION_WINDOW, DEFAULT_DELETE_FRACTION, DEFAULT_LOOKBACK};
use covnet_core::labels::{GraphRefresh, GraphSpec, DEFAULT_HORIZON};
use covnet_core::market_data::DEFAULT_MAX_MISSING;
use covnet_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Analysts,
    Correlation,
    Industry,
    DelEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub prices: PathBuf,
    pub estimates: PathBuf,
    pub industries: Option<PathBuf>,
    pub strategy: String,
    /// Overrides the strategy's own network.
    pub graph: Option<GraphSource>,
    pub del_edge_fraction: f64,
    pub quantile: f64,
    pub costs_bps: Vec<f64>,
    pub horizon: usize,
    pub lookback: usize,
    pub correlation_window: usize,
    pub correlation_percentile: f64,
    pub refresh: GraphRefresh,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub max_missing: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub warm_start: bool,
    pub use_edge_weights: bool,
    pub standardize: bool,
    pub grid_lr: Option<Vec<f64>>,
    pub grid_hidden: Option<Vec<usize>>,
    pub grid_layers: Option<Vec<usize>>,
    pub grid_weight_decay: Option<Vec<f64>>,
    pub grid_heads: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prices: PathBuf::from("prices.csv"),
            estimates: PathBuf::from("estimates.csv"),
            industries: None,
            strategy: "gat_analysts".into(),
            graph: None,
            del_edge_fraction: DEFAULT_DELETE_FRACTION,
            quantile: covnet_core::backtest::DEFAULT_QUANTILE,
            costs_bps: covnet_core::backtest::DEFAULT_COSTS_BPS.to_vec(),
            horizon: DEFAULT_HORIZON,
            lookback: DEFAULT_LOOKBACK,
            correlation_window: DEFAULT_CORRELATION_WINDOW,
            correlation_percentile: DEFAULT_CORRELATION_PERCENTILE,
            refresh: GraphRefresh::Monthly,
            seeds: vec![0],
            out: PathBuf::from("out"),
            max_missing: DEFAULT_MAX_MISSING,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            warm_start: false,
            use_edge_weights: false,
            standardize: true,
            grid_lr: None,
            grid_hidden: None,
            grid_layers: None,
            grid_weight_decay: None,
            grid_heads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Parses `path` and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        c.resolve(base);
        c.validate()?;
        Ok(c)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.prices);
        fix(&mut self.estimates);
        fix(&mut self.out);
        if let Some(p) = self.industries.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(0.0..=1.0).contains(&self.max_missing) {
            return Err(Error::Config(format!("max_missing {} outside [0, 1]", self.max_missing)));
        }
        if !(self.correlation_percentile > 0.0 && self.correlation_percentile < 1.0) {
            return Err(Error::Config("correlation_percentile must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Fails with a data error naming the first referenced file that does not exist.
    pub fn check_files(&self) -> Result<()> {
        let mut files = vec![&self.prices, &self.estimates];
        files.extend(self.industries.as_ref());
        for f in files {
            if !f.is_file() {
                return Err(Error::data(f, "file not found"));
            }
        }
        Ok(())
    }

    pub fn graph_spec(&self, source: GraphSource, seed: u64) -> GraphSpec {
        match source {
            GraphSource::Analysts => GraphSpec::Analysts { lookback: self.lookback },
            GraphSource::Correlation => GraphSpec::Correlation {
                window: self.correlation_window,
                percentile: self.correlation_percentile,
            },
            GraphSource::Industry => GraphSpec::Industry,
            GraphSource::DelEdge => GraphSpec::DeletedAnalysts {
                lookback: self.lookback,
                fraction: self.del_edge_fraction,
                seed: derive_seed(seed, &[0xde1]),
            },
        }
    }

    /// The named preset with this file's overrides applied. `graph` only
    /// replaces the network when `override_graph` is set.
    pub fn strategy(&self, name: &str, seed: u64, override_graph: bool) -> Result<StrategyConfig> {
        let mut c = StrategyConfig::preset(name, seed).ok_or_else(|| Error::Config(format!("unknown strategy `{name}`")))?;
        match (&mut c.graph, self.graph.filter(|_| override_graph)) {
            (GraphSpec::Empty, _) => {}
            (g, Some(source)) => *g = self.graph_spec(source, seed),
            (GraphSpec::Analysts { lookback }, None) => *lookback = self.lookback,
            (GraphSpec::DeletedAnalysts { lookback, fraction, .. }, None) => {
                *lookback = self.lookback;
                *fraction = self.del_edge_fraction;
            }
            (GraphSpec::Correlation { window, percentile }, None) => {
                *window = self.correlation_window;
                *percentile = self.correlation_percentile;
            }
            (GraphSpec::Industry, None) => {}
        }
        let d = ModelGrid::default();
        let fixed_layers = name == "gat_1layer";
        c.grid = ModelGrid {
            lr: self.grid_lr.clone().unwrap_or(d.lr),
            hidden: self.grid_hidden.clone().unwrap_or(d.hidden),
            layers: if fixed_layers { vec![1] } else { self.grid_layers.clone().unwrap_or(d.layers) },
            weight_decay: self.grid_weight_decay.clone().unwrap_or(d.weight_decay),
            heads: self.grid_heads.clone().unwrap_or(d.heads),
        };
        c.refresh = self.refresh;
        c.quantile = self.quantile;
        c.costs_bps = self.costs_bps.clone();
        c.horizon = self.horizon;
        c.max_epochs = self.max_epochs;
        c.patience = self.patience;
        c.warm_start = self.warm_start;
        c.use_edge_weights = self.use_edge_weights;
        c.standardize = self.standardize;
        c.validate()?;
        Ok(c)
    }
}
