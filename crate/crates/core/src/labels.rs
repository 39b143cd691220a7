//! Binary out/under-performance targets and the dated `(graph, features,
//! target)` samples of each trading period.
//!
//! A trading period is a block of 21 trading days. Its first 20 days give the
//! training (10) and validation (10) samples. The test sample is dated
//! `horizon` days after the last validation day, so that every training and
//! validation target is realized by the time the test features are formed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureEngine, FeatureMatrix, WARMUP};
use crate::graphs::{
    correlation_graph, delete_edges, industry_graph, project_coverage, CoverageGraph,
};
use crate::market_data::{EstimateRecord, IndustryMap, PricePanel};
use crate::math::{ln, mean};
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_HORIZON: usize = 21;
pub const PERIOD_LEN: usize = 21;
pub const TRAIN_SAMPLES: usize = 10;
pub const VAL_SAMPLES: usize = 10;
pub const SAMPLES_PER_PERIOD: usize = TRAIN_SAMPLES + VAL_SAMPLES + 1;

/// `values[i] = 1` iff firm `i`'s forward log-return over the horizon is
/// strictly above the cross-sectional mean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetVector {
    pub formed: usize,
    pub realized: usize,
    pub values: Vec<u8>,
}

impl TargetVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

pub fn forward_log_returns(panel: &PricePanel, t: usize, horizon: usize) -> Result<Vec<f64>> {
    let last = panel.n_dates().saturating_sub(1);
    if t + horizon > last {
        return Err(Error::InsufficientFuture { t, horizon, last });
    }
    Ok((0..panel.n_firms())
        .map(|i| ln(panel.price(t + horizon, i) / panel.price(t, i)))
        .collect())
}

/// Labels from already computed forward returns; ties with the mean are 0.
pub fn label_returns(returns: &[f64]) -> Vec<u8> {
    let m = mean(returns);
    returns.iter().map(|&r| u8::from(r > m)).collect()
}

pub fn make_target(panel: &PricePanel, t: usize, horizon: usize) -> Result<TargetVector> {
    let returns = forward_log_returns(panel, t, horizon)?;
    Ok(TargetVector {
        formed: t,
        realized: t + horizon,
        values: label_returns(&returns),
    })
}

/// Which firm network feeds the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Analysts { lookback: usize },
    Correlation { window: usize, percentile: f64 },
    Industry,
    /// Analyst network with a random share of edges removed; the seed for
    /// each snapshot is derived from `seed` and the snapshot day.
    DeletedAnalysts {
        lookback: usize,
        fraction: f64,
        seed: u64,
    },
    /// No edges at all (feature-only strategies).
    Empty,
}

impl GraphSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GraphSpec::Analysts { .. } => "analysts",
            GraphSpec::Correlation { .. } => "correlation",
            GraphSpec::Industry => "industry",
            GraphSpec::DeletedAnalysts { .. } => "del_edge",
            GraphSpec::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GraphRefresh {
    /// Rebuilt on the 21-day period grid; a sample uses the latest snapshot
    /// at or before its own date.
    #[default]
    Monthly,
    Daily,
}

impl GraphRefresh {
    pub fn snapshot_day(self, day: usize) -> usize {
        match self {
            GraphRefresh::Monthly => day - day % PERIOD_LEN,
            GraphRefresh::Daily => day,
        }
    }
}

/// Immutable market inputs shared by every period of a run.
#[derive(Debug, Clone)]
pub struct MarketData<'a> {
    pub panel: &'a PricePanel,
    pub features: FeatureEngine<'a>,
    pub records: &'a [EstimateRecord],
    pub industries: Option<&'a IndustryMap>,
}

impl<'a> MarketData<'a> {
    pub fn new(
        panel: &'a PricePanel,
        records: &'a [EstimateRecord],
        industries: Option<&'a IndustryMap>,
    ) -> Self {
        Self {
            panel,
            features: FeatureEngine::new(panel),
            records,
            industries,
        }
    }
}

/// Builds the network of `spec` as known on `day`.
pub fn build_graph(data: &MarketData<'_>, spec: &GraphSpec, day: usize) -> Result<CoverageGraph> {
    let n = data.panel.n_firms();
    match spec {
        GraphSpec::Analysts { lookback } => Ok(project_coverage(data.records, day, *lookback, n)),
        GraphSpec::Correlation { window, percentile } => {
            Ok(correlation_graph(data.panel, day, *window, *percentile)?.graph)
        }
        GraphSpec::Industry => data
            .industries
            .map(|m| industry_graph(m, day))
            .ok_or_else(|| Error::InvalidConfig("industry graph requires an industry map".into())),
        GraphSpec::DeletedAnalysts {
            lookback,
            fraction,
            seed,
        } => {
            let full = project_coverage(data.records, day, *lookback, n);
            Ok(delete_edges(&full, *fraction, derive_seed(*seed, &[day as u64])))
        }
        GraphSpec::Empty => Ok(CoverageGraph::empty(day, n)),
    }
}

/// Graph snapshots keyed by snapshot day.
#[derive(Debug, Clone, Default)]
pub struct GraphStore {
    graphs: BTreeMap<usize, Arc<CoverageGraph>>,
    pub refresh: GraphRefresh,
}

impl GraphStore {
    pub fn from_graphs(refresh: GraphRefresh, graphs: impl IntoIterator<Item = CoverageGraph>) -> Self {
        Self {
            graphs: graphs.into_iter().map(|g| (g.day, Arc::new(g))).collect(),
            refresh,
        }
    }

    /// Snapshot days needed by the given sample days (sorted, unique).
    pub fn snapshot_days(refresh: GraphRefresh, days: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut out: Vec<usize> = days.into_iter().map(|d| refresh.snapshot_day(d)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn build(
        data: &MarketData<'_>,
        spec: &GraphSpec,
        refresh: GraphRefresh,
        days: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut graphs = BTreeMap::new();
        for d in Self::snapshot_days(refresh, days) {
            graphs.insert(d, Arc::new(build_graph(data, spec, d)?));
        }
        Ok(Self { graphs, refresh })
    }

    pub fn for_day(&self, day: usize) -> Option<Arc<CoverageGraph>> {
        self.graphs.get(&self.refresh.snapshot_day(day)).cloned()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<CoverageGraph>> {
        self.graphs.values()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

/// One `(A_t, X_t, Y_{t+h})` triple.
#[derive(Debug, Clone)]
pub struct Sample {
    pub day: usize,
    pub graph: Arc<CoverageGraph>,
    pub features: Arc<FeatureMatrix>,
    pub target: TargetVector,
}

/// Dates of one walk-forward period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodPlan {
    pub index: usize,
    /// First training sample day.
    pub start: usize,
    pub test_day: usize,
    /// Day the position is entered (close), one session after the test features.
    pub position_day: usize,
    pub exit_day: usize,
}

impl PeriodPlan {
    pub fn new(index: usize, horizon: usize) -> Self {
        let start = index * PERIOD_LEN;
        let test_day = start + TRAIN_SAMPLES + VAL_SAMPLES - 1 + horizon;
        Self {
            index,
            start,
            test_day,
            position_day: test_day + 1,
            exit_day: test_day + 1 + horizon,
        }
    }

    pub fn train_days(&self) -> core::ops::Range<usize> {
        self.start..self.start + TRAIN_SAMPLES
    }

    pub fn val_days(&self) -> core::ops::Range<usize> {
        self.start + TRAIN_SAMPLES..self.start + TRAIN_SAMPLES + VAL_SAMPLES
    }

    /// All 21 sample days: training, validation, then the test day.
    pub fn sample_days(&self) -> Vec<usize> {
        self.train_days()
            .chain(self.val_days())
            .chain(core::iter::once(self.test_day))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    InsufficientHistory,
    InsufficientFuture,
    TrainingFailed,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::InsufficientHistory => "insufficient history",
            SkipReason::InsufficientFuture => "insufficient future",
            SkipReason::TrainingFailed => "training failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPeriod {
    pub index: usize,
    pub start: usize,
    pub reason: SkipReason,
    pub detail: String,
}

/// Splits the calendar into 21-day periods and keeps those with a full
/// feature history and a full holding window.
pub fn plan_periods(n_dates: usize, horizon: usize) -> (Vec<PeriodPlan>, Vec<SkippedPeriod>) {
    let mut plans = Vec::new();
    let mut skipped = Vec::new();
    let mut index = 0;
    while index * PERIOD_LEN < n_dates {
        let plan = PeriodPlan::new(index, horizon);
        let reason = if plan.start < WARMUP {
            Some(SkipReason::InsufficientHistory)
        } else if plan.exit_day >= n_dates {
            Some(SkipReason::InsufficientFuture)
        } else {
            None
        };
        match reason {
            None => plans.push(plan),
            Some(reason) => skipped.push(SkippedPeriod {
                index,
                start: plan.start,
                reason,
                detail: String::from(reason.as_str()),
            }),
        }
        index += 1;
    }
    (plans, skipped)
}

/// The 21 samples of one period, in training, validation, test order.
pub fn assemble_samples(
    data: &MarketData<'_>,
    graphs: &GraphStore,
    plan: &PeriodPlan,
    horizon: usize,
    standardize: bool,
) -> Result<Vec<Sample>> {
    if plan.start < WARMUP {
        return Err(Error::InsufficientHistory {
            t: plan.start,
            needed: WARMUP,
        });
    }
    plan.sample_days()
        .into_iter()
        .map(|day| {
            let graph = graphs.for_day(day).ok_or_else(|| {
                Error::InvalidConfig(alloc::format!(
                    "no graph snapshot for day {day} (snapshot day {})",
                    graphs.refresh.snapshot_day(day)
                ))
            })?;
            Ok(Sample {
                day,
                graph,
                features: Arc::new(data.features.matrix(day, standardize)?),
                target: make_target(data.panel, day, horizon)?,
            })
        })
        .collect()
}

/// Latest dates of information feeding a position, for the no-lookahead audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationDates {
    pub max_feature_day: usize,
    pub max_graph_day: usize,
    /// Latest realization day of any training or validation target.
    pub max_label_day: usize,
}

impl InformationDates {
    pub fn of(samples: &[Sample]) -> Self {
        let fitted = &samples[..samples.len().saturating_sub(1)];
        Self {
            max_feature_day: samples.iter().map(|s| s.features.day).max().unwrap_or(0),
            max_graph_day: samples.iter().map(|s| s.graph.day).max().unwrap_or(0),
            max_label_day: fitted.iter().map(|s| s.target.realized).max().unwrap_or(0),
        }
    }

    pub fn latest(&self) -> usize {
        self.max_feature_day.max(self.max_graph_day).max(self.max_label_day)
    }
}

/// True when no training sample's features or graph are dated at or after
/// the earliest training target realization.
pub fn training_is_leak_free(train: &[Sample]) -> bool {
    let max_info = train
        .iter()
        .map(|s| s.features.day.max(s.graph.day))
        .max();
    let min_realized = train.iter().map(|s| s.target.realized).min();
    match (max_info, min_realized) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    }
}
