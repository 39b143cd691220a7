//! Monthly walk-forward loop: per period, fit on the training and
//! validation samples, score the test sample, hold a quartile long/short
//! book for one horizon, and account turnover costs.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::baselines::{analyst_matrix_signal, long_only_signal, macd_signal_avg, nn_signal, SignalVector};
use crate::autodiff::ParamSet;
use crate::gnn::{grid_search_from, prepare_samples, ModelConfig, ModelGrid, ModelKind};
use crate::graphs::{DEFAULT_CORRELATION_PERCENTILE, DEFAULT_CORRELATION_WINDOW, DEFAULT_DELETE_FRACTION, DEFAULT_LOOKBACK};
use crate::labels::{
    assemble_samples, plan_periods, GraphRefresh, GraphSpec, GraphStore, InformationDates, MarketData, PeriodPlan, SkipReason,
    SkippedPeriod, DEFAULT_HORIZON, TRAIN_SAMPLES, VAL_SAMPLES,
};
use crate::market_data::PricePanel;
use crate::math::ln;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_QUANTILE: f64 = 0.25;
pub const DEFAULT_COSTS_BPS: [f64; 4] = [0.0, 1.0, 2.0, 5.0];
/// A run with more than this share of eligible periods skipped is invalid.
pub const MAX_SKIPPED_SHARE: f64 = 0.10;

/// The six graph/architecture variants of the ablation suite.
pub const ABLATION_VARIANTS: [&str; 6] = ["gat_analysts", "gat_corr", "gat_industries", "gat_del_edge", "gat_1layer", "gcn"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    LongOnly,
    Macd,
    AnalystMatrix,
    Nn,
    Gat,
    Gcn,
}

impl StrategyKind {
    pub fn model_kind(self) -> Option<ModelKind> {
        match self {
            StrategyKind::Nn => Some(ModelKind::Nn),
            StrategyKind::Gat => Some(ModelKind::Gat),
            StrategyKind::Gcn => Some(ModelKind::Gcn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub id: String,
    pub kind: StrategyKind,
    pub graph: GraphSpec,
    pub refresh: GraphRefresh,
    pub grid: ModelGrid,
    pub max_epochs: usize,
    pub patience: usize,
    pub use_edge_weights: bool,
    /// Start each period's grid cells from the same cells' weights of the
    /// previous traded period.
    pub warm_start: bool,
    pub quantile: f64,
    pub horizon: usize,
    pub costs_bps: Vec<f64>,
    pub base_seed: u64,
    pub standardize: bool,
}

impl StrategyConfig {
    pub fn new(id: &str, kind: StrategyKind, graph: GraphSpec) -> Self {
        Self {
            id: id.to_string(),
            kind,
            graph,
            refresh: GraphRefresh::Monthly,
            grid: ModelGrid::default(),
            max_epochs: crate::gnn::DEFAULT_MAX_EPOCHS,
            patience: crate::gnn::DEFAULT_PATIENCE,
            use_edge_weights: false,
            warm_start: false,
            quantile: DEFAULT_QUANTILE,
            horizon: DEFAULT_HORIZON,
            costs_bps: DEFAULT_COSTS_BPS.to_vec(),
            base_seed: 0,
            standardize: true,
        }
    }

    /// Named strategies: the baselines plus the GAT/GCN variants.
    pub fn preset(name: &str, base_seed: u64) -> Option<Self> {
        let analysts = GraphSpec::Analysts {
            lookback: DEFAULT_LOOKBACK,
        };
        let mut c = match name {
            "long_only" => Self::new(name, StrategyKind::LongOnly, GraphSpec::Empty),
            "macd" => Self::new(name, StrategyKind::Macd, GraphSpec::Empty),
            "analyst_matrix" => Self::new(name, StrategyKind::AnalystMatrix, analysts),
            "nn" => Self::new(name, StrategyKind::Nn, GraphSpec::Empty),
            "gat" | "gat_analysts" => Self::new("gat_analysts", StrategyKind::Gat, analysts),
            "gat_corr" => Self::new(
                name,
                StrategyKind::Gat,
                GraphSpec::Correlation {
                    window: DEFAULT_CORRELATION_WINDOW,
                    percentile: DEFAULT_CORRELATION_PERCENTILE,
                },
            ),
            "gat_industries" => Self::new(name, StrategyKind::Gat, GraphSpec::Industry),
            "gat_del_edge" => Self::new(
                name,
                StrategyKind::Gat,
                GraphSpec::DeletedAnalysts {
                    lookback: DEFAULT_LOOKBACK,
                    fraction: DEFAULT_DELETE_FRACTION,
                    seed: derive_seed(base_seed, &[0xde1]),
                },
            ),
            "gat_1layer" => {
                let mut c = Self::new(name, StrategyKind::Gat, analysts);
                c.grid.layers = vec![1];
                c
            }
            "gcn" => Self::new(name, StrategyKind::Gcn, analysts),
            _ => return None,
        };
        c.base_seed = base_seed;
        Some(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.quantile > 0.0 && self.quantile <= 0.5) {
            return bad(alloc::format!("quantile {} outside (0, 0.5]", self.quantile));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.costs_bps.iter().any(|c| !(*c >= 0.0)) {
            return bad("cost levels must be non-negative".into());
        }
        if let GraphSpec::DeletedAnalysts { fraction, .. } = self.graph {
            if !(0.0..=1.0).contains(&fraction) {
                return bad(alloc::format!("delete fraction {fraction} outside [0, 1]"));
            }
        }
        if self.kind.model_kind().is_some() {
            if self.grid.is_empty() {
                return bad("model grid has an empty axis".into());
            }
            if self.max_epochs == 0 {
                return bad("max_epochs must be positive".into());
            }
        }
        Ok(())
    }

    fn template(&self, kind: ModelKind) -> ModelConfig {
        ModelConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            use_edge_weights: self.use_edge_weights,
            ..ModelConfig::new(kind)
        }
    }

    /// Grid cells of one period, each with its own derived seed.
    pub fn cells(&self, period: usize) -> Vec<ModelConfig> {
        let Some(kind) = self.kind.model_kind() else {
            return Vec::new();
        };
        let mut cells = self.grid.cells(&self.template(kind));
        for (k, c) in cells.iter_mut().enumerate() {
            c.seed = derive_seed(self.base_seed, &[period as u64, k as u64]);
        }
        cells
    }
}

/// Target weights of one rebalance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub weights: Vec<f64>,
    pub long: Vec<usize>,
    pub short: Vec<usize>,
}

/// Equal-weighted long leg (+0.5) on the top `floor(q N)` scores and short
/// leg (-0.5) on the bottom `floor(q N)`. Ties rank the lower index higher.
pub fn quartile_portfolio(scores: &[f64], quantile: f64) -> Result<Position> {
    let n = scores.len();
    let k = (quantile * n as f64 + 1e-9) as usize;
    if k < 2 {
        let needed = libm::ceil(2.0 / quantile) as usize;
        return Err(Error::TooFewFirms { needed, have: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let long: Vec<usize> = order[..k].to_vec();
    let short: Vec<usize> = order[n - k..].to_vec();
    let mut weights = vec![0.0; n];
    for &i in &long {
        weights[i] = 0.5 / k as f64;
    }
    for &i in &short {
        weights[i] = -0.5 / k as f64;
    }
    Ok(Position { weights, long, short })
}

pub fn long_only_position(n: usize) -> Position {
    Position {
        weights: vec![1.0 / n as f64; n],
        long: (0..n).collect(),
        short: Vec::new(),
    }
}

/// Simple portfolio return from the close of `t` to the close of `t + horizon`.
pub fn period_return(position: &Position, panel: &PricePanel, t: usize, horizon: usize) -> Result<f64> {
    let last = panel.n_dates().saturating_sub(1);
    if t + horizon > last {
        return Err(Error::InsufficientFuture { t, horizon, last });
    }
    Ok(position
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, w)| w * (panel.price(t + horizon, i) / panel.price(t, i) - 1.0))
        .sum())
}

pub fn turnover(prev: Option<&[f64]>, next: &[f64]) -> f64 {
    match prev {
        Some(p) => p.iter().zip(next).map(|(a, b)| (a - b).abs()).sum(),
        None => next.iter().map(|w| w.abs()).sum(),
    }
}

pub fn net_return(gross: f64, turnover: f64, cost_bps: f64) -> f64 {
    gross - cost_bps / 10_000.0 * turnover
}

/// What the selected grid cell looked like for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub cell: usize,
    pub config: ModelConfig,
    pub val_loss: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Validation loss of every cell in enumeration order; `None` marks a
    /// diverged cell.
    pub cell_losses: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub index: usize,
    pub start: usize,
    pub test_day: usize,
    pub position_day: usize,
    pub exit_day: usize,
    pub test_date: NaiveDate,
    pub position_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub info: InformationDates,
    pub graph_edges: usize,
    pub weights: Vec<f64>,
    pub long: Vec<usize>,
    pub short: Vec<usize>,
    /// Simple return over the holding window, before costs.
    pub gross: f64,
    pub gross_log: f64,
    pub turnover: f64,
    /// Net simple returns at each of the configured cost levels.
    pub net: Vec<f64>,
    /// Cross-sectional mean of the scores; present for probability outputs.
    pub mean_score: Option<f64>,
    pub selection: Option<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: String,
    pub config: StrategyConfig,
    pub firms: Vec<String>,
    pub eligible_periods: usize,
    pub periods: Vec<PeriodRecord>,
    pub skipped: Vec<SkippedPeriod>,
    pub valid: bool,
    pub invalid_reason: Option<String>,
}

impl BacktestReport {
    pub fn gross_returns(&self) -> Vec<f64> {
        self.periods.iter().map(|p| p.gross).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.periods.iter().map(|p| p.position_date).collect()
    }

    /// Net returns at the `k`-th configured cost level.
    pub fn net_returns(&self, k: usize) -> Vec<f64> {
        self.periods.iter().map(|p| p.net[k]).collect()
    }
}

/// Net period returns at an arbitrary cost level, from the recorded turnover.
pub fn apply_costs(report: &BacktestReport, cost_bps: f64) -> Vec<f64> {
    report
        .periods
        .iter()
        .map(|p| net_return(p.gross, p.turnover, cost_bps))
        .collect()
}

/// Scored, positioned, and realized test period, before turnover is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodResult {
    pub plan: PeriodPlan,
    pub signal: SignalVector,
    pub position: Position,
    pub gross: f64,
    pub info: InformationDates,
    pub graph_edges: usize,
    pub probabilities: bool,
    pub selection: Option<Selection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PeriodOutcome {
    Traded(PeriodResult),
    Skipped(SkippedPeriod),
}

/// A prepared run: eligible periods and their graph snapshots.
#[derive(Debug, Clone)]
pub struct Backtest<'a, 'd> {
    pub data: &'d MarketData<'a>,
    pub config: StrategyConfig,
    pub plans: Vec<PeriodPlan>,
    pub skipped: Vec<SkippedPeriod>,
    pub graphs: GraphStore,
}

impl<'a, 'd> Backtest<'a, 'd> {
    pub fn new(data: &'d MarketData<'a>, config: StrategyConfig) -> Result<Self> {
        config.validate()?;
        let (plans, skipped) = plan_periods(data.panel.n_dates(), config.horizon);
        if data.panel.n_firms() < 2 {
            return Err(Error::TooFewFirms {
                needed: 2,
                have: data.panel.n_firms(),
            });
        }
        let days = plans.iter().flat_map(|p| p.sample_days());
        let graphs = GraphStore::build(data, &config.graph, config.refresh, days)?;
        Ok(Self {
            data,
            config,
            plans,
            skipped,
            graphs,
        })
    }

    pub fn run_period(&self, k: usize) -> Result<PeriodOutcome> {
        Ok(self.run_period_from(k, &[])?.0)
    }

    /// Runs period `k` with grid cells initialized from `inits`, returning the
    /// outcome and the trained parameters of every cell.
    pub fn run_period_from(&self, k: usize, inits: &[Option<ParamSet>]) -> Result<(PeriodOutcome, Vec<Option<ParamSet>>)> {
        let plan = self.plans[k];
        let c = &self.config;
        let samples = assemble_samples(self.data, &self.graphs, &plan, c.horizon, c.standardize)?;
        let test = &samples[TRAIN_SAMPLES + VAL_SAMPLES];
        let panel = self.data.panel;
        let n = panel.n_firms();
        let mut selection = None;
        let mut trained = Vec::new();
        let (signal, info) = match c.kind {
            StrategyKind::LongOnly => (
                long_only_signal(n, test.day, panel.date(test.day)),
                InformationDates {
                    max_feature_day: test.day,
                    max_graph_day: 0,
                    max_label_day: 0,
                },
            ),
            StrategyKind::Macd | StrategyKind::AnalystMatrix => {
                let signal = if c.kind == StrategyKind::Macd {
                    macd_signal_avg(&test.features)
                } else {
                    analyst_matrix_signal(&test.features, &test.graph)?
                };
                (
                    signal,
                    InformationDates {
                        max_feature_day: test.features.day,
                        max_graph_day: test.graph.day,
                        max_label_day: 0,
                    },
                )
            }
            StrategyKind::Nn | StrategyKind::Gat | StrategyKind::Gcn => {
                let prepared = prepare_samples(&samples, c.use_edge_weights);
                let (train, rest) = prepared.split_at(TRAIN_SAMPLES);
                let (val, test_p) = rest.split_at(VAL_SAMPLES);
                let cells = c.cells(plan.index);
                let outcome = match grid_search_from(&cells, inits, train, val) {
                    Ok(o) => o,
                    Err(Error::AllCellsFailed) => {
                        let skipped = PeriodOutcome::Skipped(SkippedPeriod {
                            index: plan.index,
                            start: plan.start,
                            reason: SkipReason::TrainingFailed,
                            detail: "every grid cell diverged".into(),
                        });
                        return Ok((skipped, inits.to_vec()));
                    }
                    Err(e) => return Err(e),
                };
                let model = &outcome.best.model;
                let signal = if c.kind == StrategyKind::Nn {
                    nn_signal(model, &test_p[0])?
                } else {
                    SignalVector {
                        day: test.day,
                        date: test.features.date,
                        scores: model.predict_sample(&test_p[0])?,
                    }
                };
                trained = outcome.trained.clone();
                selection = Some(Selection {
                    cell: outcome.best_index,
                    config: model.config.clone(),
                    val_loss: outcome.best.best_val_loss,
                    epochs_run: outcome.best.epochs_run,
                    best_epoch: outcome.best.best_epoch,
                    cell_losses: outcome.log.iter().map(|l| l.val_loss).collect(),
                });
                let mut info = InformationDates::of(&samples);
                if !c.kind.model_kind().is_some_and(ModelKind::uses_graph) {
                    info.max_graph_day = 0;
                }
                (signal, info)
            }
        };
        if let Some(i) = signal.scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteFeature { firm: i, column: 0 });
        }
        let position = if c.kind == StrategyKind::LongOnly {
            long_only_position(n)
        } else {
            quartile_portfolio(&signal.scores, c.quantile)?
        };
        let gross = period_return(&position, panel, plan.position_day, c.horizon)?;
        let traded = PeriodOutcome::Traded(PeriodResult {
            plan,
            signal,
            position,
            gross,
            info,
            graph_edges: test.graph.edge_count(),
            probabilities: c.kind.model_kind().is_some(),
            selection,
        });
        Ok((traded, trained))
    }

    /// Merges per-period outcomes (in period order) into a report: turnover
    /// against the previous traded position, costs, and validity.
    pub fn finish(self, outcomes: Vec<PeriodOutcome>) -> Result<BacktestReport> {
        let panel = self.data.panel;
        let eligible = self.plans.len();
        let mut skipped = self.skipped;
        let mut periods = Vec::with_capacity(outcomes.len());
        let mut prev: Option<Vec<f64>> = None;
        for outcome in outcomes {
            let r = match outcome {
                PeriodOutcome::Traded(r) => r,
                PeriodOutcome::Skipped(s) => {
                    skipped.push(s);
                    continue;
                }
            };
            let to = turnover(prev.as_deref(), &r.position.weights);
            if r.gross <= -1.0 {
                return Err(Error::TotalLoss {
                    period: r.plan.index,
                    value: r.gross,
                });
            }
            let net = self
                .config
                .costs_bps
                .iter()
                .map(|&bps| net_return(r.gross, to, bps))
                .collect();
            let mean_score = r
                .probabilities
                .then(|| r.signal.scores.iter().sum::<f64>() / r.signal.scores.len() as f64);
            periods.push(PeriodRecord {
                index: r.plan.index,
                start: r.plan.start,
                test_day: r.plan.test_day,
                position_day: r.plan.position_day,
                exit_day: r.plan.exit_day,
                test_date: panel.date(r.plan.test_day),
                position_date: panel.date(r.plan.position_day),
                exit_date: panel.date(r.plan.exit_day),
                info: r.info,
                graph_edges: r.graph_edges,
                gross: r.gross,
                gross_log: ln(1.0 + r.gross),
                turnover: to,
                net,
                mean_score,
                selection: r.selection,
                long: r.position.long,
                short: r.position.short,
                weights: r.position.weights.clone(),
            });
            prev = Some(r.position.weights);
        }
        skipped.sort_by_key(|s| s.index);
        let failed = skipped
            .iter()
            .filter(|s| s.reason == SkipReason::TrainingFailed)
            .count();
        let invalid_reason = if eligible == 0 {
            Some(String::from("no eligible periods"))
        } else if failed as f64 > MAX_SKIPPED_SHARE * eligible as f64 {
            Some(alloc::format!("{failed} of {eligible} periods failed to train"))
        } else {
            None
        };
        Ok(BacktestReport {
            strategy: self.config.id.clone(),
            firms: panel.firms().to_vec(),
            eligible_periods: eligible,
            periods,
            skipped,
            valid: invalid_reason.is_none(),
            invalid_reason,
            config: self.config,
        })
    }

    /// Runs every period in order on the current thread.
    pub fn run(self) -> Result<BacktestReport> {
        let mut outcomes = Vec::with_capacity(self.plans.len());
        let mut state: Vec<Option<ParamSet>> = Vec::new();
        for k in 0..self.plans.len() {
            let inits: &[Option<ParamSet>] = if self.config.warm_start { &state } else { &[] };
            let (outcome, trained) = self.run_period_from(k, inits)?;
            outcomes.push(outcome);
            state = trained;
        }
        self.finish(outcomes)
    }
}

pub fn run_walk_forward(data: &MarketData<'_>, config: StrategyConfig) -> Result<BacktestReport> {
    Backtest::new(data, config)?.run()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditViolation {
    pub period: usize,
    pub check: &'static str,
    pub day: usize,
    pub position_day: usize,
}

/// Every information date must precede the position date, and the return
/// window must start no earlier than the position date.
pub fn audit_no_lookahead(report: &BacktestReport) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    for p in &report.periods {
        let checks = [
            ("feature", p.info.max_feature_day),
            ("graph", p.info.max_graph_day),
            ("label", p.info.max_label_day),
            ("test", p.test_day),
        ];
        for (check, day) in checks {
            if day >= p.position_day {
                out.push(AuditViolation {
                    period: p.index,
                    check,
                    day,
                    position_day: p.position_day,
                });
            }
        }
        let return_start = p.exit_day.saturating_sub(report.config.horizon);
        if return_start < p.position_day {
            out.push(AuditViolation {
                period: p.index,
                check: "return_start",
                day: return_start,
                position_day: p.position_day,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(prices: &[&[f64]]) -> PricePanel {
        let t = prices.len();
        let n = prices[0].len();
        let dates = (0..t)
            .map(|k| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(k as u64))
            .collect();
        let firms = (0..n).map(|i| alloc::format!("F{i}")).collect();
        PricePanel::new(dates, firms, prices.concat()).unwrap()
    }

    #[test]
    fn quartile_legs() {
        let p = quartile_portfolio(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], 0.25).unwrap();
        assert_eq!(p.long, vec![7, 6]);
        assert_eq!(p.short, vec![1, 0]);
        assert_eq!(p.weights[7], 0.25);
        assert_eq!(p.weights[0], -0.25);
        let flat = quartile_portfolio(&[0.5; 8], 0.25).unwrap();
        assert_eq!((flat.long, flat.short), (vec![0, 1], vec![6, 7]));
        assert!(matches!(
            quartile_portfolio(&[0.0; 7], 0.25),
            Err(Error::TooFewFirms { needed: 8, have: 7 })
        ));
    }

    #[test]
    fn returns_of_simple_books() {
        let pan = panel(&[&[100.0, 50.0, 50.0], &[110.0, 60.0, 60.0]]);
        let single = Position {
            weights: vec![1.0, 0.0, 0.0],
            long: vec![0],
            short: vec![],
        };
        assert!((period_return(&single, &pan, 0, 1).unwrap() - 0.10).abs() < 1e-15);
        let hedged = Position {
            weights: vec![0.0, 0.5, -0.5],
            long: vec![1],
            short: vec![2],
        };
        assert_eq!(period_return(&hedged, &pan, 0, 1).unwrap(), 0.0);
        assert!(period_return(&hedged, &pan, 0, 2).is_err());
    }

    #[test]
    fn cost_arithmetic() {
        assert_eq!(net_return(0.02, 1.3, 0.0), 0.02);
        assert!((net_return(0.0, 2.0, 5.0) + 0.001).abs() < 1e-18);
        assert_eq!(turnover(None, &[0.25, -0.25]), 0.5);
        assert_eq!(turnover(Some(&[0.25, -0.25]), &[-0.25, 0.25]), 1.0);
    }

    #[test]
    fn presets_cover_ablation() {
        for name in ABLATION_VARIANTS {
            let c = StrategyConfig::preset(name, 7).unwrap();
            assert_eq!(c.id, name);
            c.validate().unwrap();
        }
        let one = StrategyConfig::preset("gat_1layer", 0).unwrap();
        assert_eq!(one.grid.layers, vec![1]);
        let del = StrategyConfig::preset("gat_del_edge", 0).unwrap();
        assert!(matches!(del.graph, GraphSpec::DeletedAnalysts { fraction, .. } if fraction == 0.60));
        assert!(StrategyConfig::preset("nope", 0).is_none());
    }
}
