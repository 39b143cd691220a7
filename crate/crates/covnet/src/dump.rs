//! Audit dumps: features, graph edges and topology, targets, attention.

use std::path::Path;

use chrono::NaiveDate;
use covnet_core::backtest::{Backtest, StrategyConfig};
use covnet_core::features::N_FEATURES;
use covnet_core::gnn::{attention_snapshot, extract_top_attention, grid_search, prepare_samples};
use covnet_core::graphs::topology_stats;
use covnet_core::labels::{assemble_samples, build_graph, make_target, GraphSpec, GraphStore, MarketData, TRAIN_SAMPLES, VAL_SAMPLES};
use covnet_core::PricePanel;

use crate::error::{Error, Result};
use crate::io::write_csv;

/// Day indices of the panel between `from` and `to` inclusive, clipped to
/// `[lo, hi)`.
pub fn day_range(panel: &PricePanel, from: Option<NaiveDate>, to: Option<NaiveDate>, lo: usize, hi: usize) -> Vec<usize> {
    (lo..hi.min(panel.n_dates()))
        .filter(|&t| {
            let d = panel.date(t);
            from.is_none_or(|f| d >= f) && to.is_none_or(|e| d <= e)
        })
        .collect()
}

pub fn write_features(path: &Path, data: &MarketData<'_>, days: &[usize], standardize: bool) -> Result<()> {
    let mut header = vec!["date".to_string(), "ticker".to_string()];
    header.extend((1..=N_FEATURES).map(|k| format!("f{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for &t in days {
        let f = data.features.matrix(t, standardize)?;
        for i in 0..f.n_firms() {
            let mut row = vec![f.date.to_string(), data.panel.firm(i).to_string()];
            row.extend(f.row(i).iter().map(f64::to_string));
            rows.push(row);
        }
    }
    write_csv(path, &header, rows)
}

/// The monthly snapshot days (multiples of the period length) among `days`.
pub fn snapshot_days(days: &[usize]) -> Vec<usize> {
    days.iter()
        .copied()
        .filter(|d| d % covnet_core::labels::PERIOD_LEN == 0)
        .collect()
}

pub fn write_graph_edges(path: &Path, data: &MarketData<'_>, spec: &GraphSpec, days: &[usize]) -> Result<()> {
    let mut rows = Vec::new();
    for &t in days {
        let g = build_graph(data, spec, t)?;
        let date = data.panel.date(t);
        for e in g.edges() {
            rows.push((date, data.panel.firm(e.src), data.panel.firm(e.dst), e.weight));
        }
    }
    write_csv(path, &["date", "src", "dst", "weight"], rows)
}

pub fn write_graph_stats(path: &Path, data: &MarketData<'_>, spec: &GraphSpec, days: &[usize]) -> Result<()> {
    let mut rows = Vec::new();
    let mut prev = None;
    for &t in days {
        let g = build_graph(data, spec, t)?;
        let s = topology_stats(&g, prev.as_ref());
        rows.push((data.panel.date(t), g.edge_count(), s.jaccard_vs_prev, s.diameter, s.transitivity));
        prev = Some(g);
    }
    write_csv(path, &["date", "edges", "jaccard_vs_prev", "diameter", "transitivity"], rows)
}

/// `date,realized_date,ticker,forward_log_return,label` for days whose
/// horizon ends inside the panel.
pub fn write_labels(path: &Path, panel: &PricePanel, days: &[usize], horizon: usize) -> Result<()> {
    let mut rows = Vec::new();
    for &t in days.iter().filter(|&&t| t + horizon < panel.n_dates()) {
        let target = make_target(panel, t, horizon)?;
        let fwd = covnet_core::labels::forward_log_returns(panel, t, horizon)?;
        for i in 0..panel.n_firms() {
            rows.push((panel.date(t), panel.date(target.realized), panel.firm(i), fwd[i], target.values[i]));
        }
    }
    write_csv(path, &["date", "realized_date", "ticker", "forward_log_return", "label"], rows)
}

/// Trains period `period` of a GAT strategy and writes the first-layer
/// attention on its test sample; `top` switches to the ranked edge list.
pub fn write_attention(path: &Path, data: &MarketData<'_>, config: StrategyConfig, period: Option<usize>, top: Option<usize>) -> Result<()> {
    if config.kind != covnet_core::backtest::StrategyKind::Gat {
        return Err(Error::Config(format!("attention needs a GAT strategy, got `{}`", config.id)));
    }
    let bt = Backtest::new(data, config)?;
    if bt.plans.is_empty() {
        return Err(Error::data(Path::new("prices"), "no eligible walk-forward periods"));
    }
    let k = period.unwrap_or(bt.plans.len() - 1);
    if k >= bt.plans.len() {
        return Err(Error::Config(format!("period {k} out of range (0..{})", bt.plans.len())));
    }
    let plan = bt.plans[k];
    let c = &bt.config;
    let graphs: &GraphStore = &bt.graphs;
    let samples = assemble_samples(data, graphs, &plan, c.horizon, c.standardize)?;
    let prepared = prepare_samples(&samples, c.use_edge_weights);
    let (train, rest) = prepared.split_at(TRAIN_SAMPLES);
    let (val, test) = rest.split_at(VAL_SAMPLES);
    let outcome = grid_search(&c.cells(plan.index), train, val)?;
    let model = &outcome.best.model;
    let firms = data.panel.firms();
    match top {
        Some(k) => {
            let ranked = extract_top_attention(model, &test[0], k, firms)?;
            let heads = ranked.first().map_or(0, |r| r.per_head.len());
            let mut header = vec!["date".to_string(), "src".into(), "dst".into(), "mean_alpha".into()];
            header.extend((0..heads).map(|h| format!("head{h}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = ranked.iter().map(|r| {
                let mut row = vec![test[0].date.to_string(), r.src.clone(), r.dst.clone(), r.mean_alpha.to_string()];
                row.extend(r.per_head.iter().map(f64::to_string));
                row
            });
            write_csv(path, &header, rows)
        }
        None => {
            let snap = attention_snapshot(model, &test[0], firms)?;
            let rows = snap.entries.iter().map(|e| (snap.date, e.src.as_str(), e.dst.as_str(), e.head, e.alpha));
            write_csv(path, &["date", "src", "dst", "head", "alpha"], rows)
        }
    }
}
