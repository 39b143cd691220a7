//! CSV views of backtest reports: per-run returns, the strategy summary,
//! correlations, cost decay, cumulative curves and the ablation tables.

use std::path::Path;

use covnet_core::backtest::BacktestReport;
use covnet_core::metrics::{
    cost_decay_table, cumulative_log_curve, mean_turnover, perf_summary, return_correlation_matrix, signal_correlation_matrix, MONTHLY,
};
use serde::Serialize;

use crate::error::Result;
use crate::io::write_csv;

/// Cost levels print without a trailing `.0` when integral.
pub fn bps_label(bps: f64) -> String {
    if bps.fract() == 0.0 {
        format!("{}", bps as i64)
    } else {
        format!("{bps}")
    }
}

/// `date,gross,net@c...,turnover` with one net column per non-zero cost level.
pub fn write_returns(path: &Path, report: &BacktestReport) -> Result<()> {
    let levels: Vec<usize> = (0..report.config.costs_bps.len())
        .filter(|&k| report.config.costs_bps[k] != 0.0)
        .collect();
    let mut header = vec!["date".to_string(), "gross".to_string()];
    header.extend(levels.iter().map(|&k| format!("net@{}", bps_label(report.config.costs_bps[k]))));
    header.push("turnover".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = report.periods.iter().map(|p| {
        let mut row = vec![p.position_date.to_string(), p.gross.to_string()];
        row.extend(levels.iter().map(|&k| p.net[k].to_string()));
        row.push(p.turnover.to_string());
        row
    });
    write_csv(path, &header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub seed: u64,
    pub ann_return_pct: f64,
    pub ann_vol_pct: f64,
    pub sharpe: f64,
    pub max_drawdown_pct: f64,
    pub mdd_duration_pct: f64,
    pub cum_log_return: f64,
    pub mean_turnover: f64,
    pub n_periods: usize,
    pub valid: bool,
}

const SUMMARY_HEADER: [&str; 11] = [
    "strategy",
    "seed",
    "ann_return_pct",
    "ann_vol_pct",
    "sharpe",
    "max_drawdown_pct",
    "mdd_duration_pct",
    "cum_log_return",
    "mean_turnover",
    "n_periods",
    "valid",
];

/// Gross (zero-cost) statistics of one report.
pub fn summary_row(r: &BacktestReport) -> Result<SummaryRow> {
    let s = perf_summary(&r.gross_returns(), MONTHLY)?;
    Ok(SummaryRow {
        strategy: r.strategy.clone(),
        seed: r.config.base_seed,
        ann_return_pct: s.ann_return_pct,
        ann_vol_pct: s.ann_vol_pct,
        sharpe: s.sharpe,
        max_drawdown_pct: s.max_drawdown_pct,
        mdd_duration_pct: s.mdd_duration_pct,
        cum_log_return: s.cum_log_return,
        mean_turnover: mean_turnover(r),
        n_periods: s.n_periods,
        valid: r.valid,
    })
}

pub fn write_summary(path: &Path, reports: &[BacktestReport]) -> Result<()> {
    let rows = reports.iter().map(summary_row).collect::<Result<Vec<_>>>()?;
    write_csv(path, &SUMMARY_HEADER, rows)
}

fn label(r: &BacktestReport, multi_seed: bool) -> String {
    if multi_seed {
        format!("{}#{}", r.strategy, r.config.base_seed)
    } else {
        r.strategy.clone()
    }
}

fn has_many_seeds(reports: &[BacktestReport]) -> bool {
    reports.windows(2).any(|w| w[0].config.base_seed != w[1].config.base_seed)
}

/// Long format `kind,left,right,correlation`; signal pairs without
/// probability outputs are omitted.
pub fn write_correlations(path: &Path, reports: &[BacktestReport]) -> Result<()> {
    let many = has_many_seeds(reports);
    let names: Vec<String> = reports.iter().map(|r| label(r, many)).collect();
    let ret = return_correlation_matrix(reports)?;
    let sig = signal_correlation_matrix(reports)?;
    let mut rows = Vec::new();
    for i in 0..names.len() {
        for j in 0..names.len() {
            rows.push(("return", names[i].clone(), names[j].clone(), ret[i][j]));
        }
    }
    for i in 0..names.len() {
        for j in 0..names.len() {
            if let Some(c) = sig[i][j] {
                rows.push(("signal", names[i].clone(), names[j].clone(), c));
            }
        }
    }
    write_csv(path, &["kind", "left", "right", "correlation"], rows)
}

/// `strategy,seed,sharpe@c...` over the first report's cost levels.
pub fn write_cost_decay(path: &Path, reports: &[BacktestReport]) -> Result<()> {
    let levels = reports.first().map(|r| r.config.costs_bps.clone()).unwrap_or_default();
    let table = cost_decay_table(reports, &levels)?;
    let mut header = vec!["strategy".to_string(), "seed".to_string()];
    header.extend(levels.iter().map(|&c| format!("sharpe@{}", bps_label(c))));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = table.iter().zip(reports).map(|(row, r)| {
        let mut out = vec![row.strategy.clone(), r.config.base_seed.to_string()];
        out.extend(row.sharpe.iter().map(f64::to_string));
        out
    });
    write_csv(path, &header, rows)
}

/// Long format `strategy,seed,date,cum_log_return` (gross).
pub fn write_cum_returns(path: &Path, reports: &[BacktestReport]) -> Result<()> {
    let mut rows = Vec::new();
    for r in reports {
        let curve = cumulative_log_curve(&r.gross_returns())?;
        for (p, c) in r.periods.iter().zip(curve) {
            rows.push((r.strategy.clone(), r.config.base_seed, p.position_date, c));
        }
    }
    write_csv(path, &["strategy", "seed", "date", "cum_log_return"], rows)
}

/// The four report tables into `dir`.
pub fn write_report_tables(dir: &Path, reports: &[BacktestReport]) -> Result<()> {
    write_summary(&dir.join("summary.csv"), reports)?;
    write_correlations(&dir.join("corr.csv"), reports)?;
    write_cost_decay(&dir.join("cost_decay.csv"), reports)?;
    write_cum_returns(&dir.join("cum_returns.csv"), reports)
}

/// Ablation tables: `ablation_summary.csv` with the gross statistics per
/// variant, and `ablation_delta.csv` with each variant's cumulative return next
/// to that of `base` under the same seed.
pub fn write_ablation_tables(dir: &Path, reports: &[BacktestReport], base: &str) -> Result<()> {
    write_summary(&dir.join("ablation_summary.csv"), reports)?;
    let mut rows = Vec::new();
    for r in reports {
        let seed = r.config.base_seed;
        let cum = perf_summary(&r.gross_returns(), MONTHLY)?.cum_log_return;
        let base_cum = reports
            .iter()
            .find(|b| b.strategy == base && b.config.base_seed == seed)
            .map(|b| perf_summary(&b.gross_returns(), MONTHLY).map(|s| s.cum_log_return))
            .transpose()?;
        let edges = r.periods.iter().map(|p| p.graph_edges as f64).sum::<f64>() / r.periods.len().max(1) as f64;
        rows.push((
            r.strategy.clone(),
            seed,
            100.0 * cum,
            base_cum.map(|b| 100.0 * (cum - b)),
            edges,
        ));
    }
    write_csv(
        &dir.join("ablation_delta.csv"),
        &["variant", "seed", "cum_log_return_pct", "delta_vs_base_pct", "mean_graph_edges"],
        rows,
    )
}
