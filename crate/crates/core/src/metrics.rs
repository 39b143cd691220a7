//! Performance statistics, drawdowns, cumulative curves, and cross-strategy
//! correlation and cost tables.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backtest::{apply_costs, BacktestReport};
use crate::math::{ln, mean, pearson, sample_std, sqrt};
use crate::{Error, Result};

pub const MONTHLY: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfSummary {
    pub ann_return_pct: f64,
    pub ann_vol_pct: f64,
    pub sharpe: f64,
    pub max_drawdown_pct: f64,
    pub mdd_duration_pct: f64,
    pub cum_log_return: f64,
    pub n_periods: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawdownStats {
    /// Deepest fall below the running peak, in percent (never positive).
    pub max_drawdown_pct: f64,
    /// Longest run of consecutive below-peak points, as a percent of points.
    pub mdd_duration_pct: f64,
}

fn drawdowns(values: &[f64], initial_peak: f64) -> DrawdownStats {
    let mut peak = initial_peak;
    let mut worst: f64 = 0.0;
    let mut run = 0usize;
    let mut longest = 0usize;
    for &v in values {
        if v >= peak {
            peak = v;
            run = 0;
        } else {
            run += 1;
            longest = longest.max(run);
            worst = worst.min(v / peak - 1.0);
        }
    }
    DrawdownStats {
        max_drawdown_pct: 100.0 * worst,
        mdd_duration_pct: if values.is_empty() {
            0.0
        } else {
            100.0 * longest as f64 / values.len() as f64
        },
    }
}

/// Drawdown statistics of a value curve whose first point is the initial peak.
pub fn drawdown_stats(values: &[f64]) -> DrawdownStats {
    match values.first() {
        Some(&first) => drawdowns(values, first),
        None => drawdowns(values, 1.0),
    }
}

/// Compounded value after each period, starting from 1.
pub fn value_curve(returns: &[f64]) -> Vec<f64> {
    let mut v = 1.0;
    returns
        .iter()
        .map(|r| {
            v *= 1.0 + r;
            v
        })
        .collect()
}

pub fn cumulative_log_curve(returns: &[f64]) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    returns
        .iter()
        .enumerate()
        .map(|(period, &r)| {
            if r <= -1.0 {
                return Err(Error::TotalLoss { period, value: r });
            }
            acc += ln(1.0 + r);
            Ok(acc)
        })
        .collect()
}

pub fn perf_summary(returns: &[f64], periods_per_year: usize) -> Result<PerfSummary> {
    if returns.len() < 2 {
        return Err(Error::TooFewPeriods {
            needed: 2,
            have: returns.len(),
        });
    }
    let cum = cumulative_log_curve(returns)?;
    let k = periods_per_year as f64;
    let ann_return_pct = 100.0 * mean(returns) * k;
    let ann_vol_pct = 100.0 * sample_std(returns) * sqrt(k);
    if !(ann_vol_pct > 0.0) {
        return Err(Error::ZeroVolatility);
    }
    // the compounded curve starts at 1 before the first period
    let dd = drawdowns(&value_curve(returns), 1.0);
    Ok(PerfSummary {
        ann_return_pct,
        ann_vol_pct,
        sharpe: ann_return_pct / ann_vol_pct,
        max_drawdown_pct: dd.max_drawdown_pct,
        mdd_duration_pct: dd.mdd_duration_pct,
        cum_log_return: *cum.last().expect("non-empty"),
        n_periods: returns.len(),
    })
}

pub fn mean_turnover(report: &BacktestReport) -> f64 {
    if report.periods.is_empty() {
        return 0.0;
    }
    report.periods.iter().map(|p| p.turnover).sum::<f64>() / report.periods.len() as f64
}

fn check_aligned(reports: &[BacktestReport]) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    let dates = first.dates();
    if reports.iter().any(|r| r.dates() != dates) {
        return Err(Error::MismatchedPeriods);
    }
    Ok(())
}

/// Pearson correlation matrix of equal-length series. Pairs where either
/// series is constant get 0 off the diagonal.
pub fn correlation_matrix(series: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = series.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let c = pearson(&series[i], &series[j]).unwrap_or(0.0);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

/// Correlations of the gross period returns of reports sharing one calendar.
pub fn return_correlation_matrix(reports: &[BacktestReport]) -> Result<Vec<Vec<f64>>> {
    check_aligned(reports)?;
    let series: Vec<Vec<f64>> = reports.iter().map(|r| r.gross_returns()).collect();
    Ok(correlation_matrix(&series))
}

/// Correlations of the per-period mean predicted probability; `None` where a
/// strategy does not output probabilities or a series is constant.
pub fn signal_correlation_matrix(reports: &[BacktestReport]) -> Result<Vec<Vec<Option<f64>>>> {
    check_aligned(reports)?;
    let series: Vec<Option<Vec<f64>>> = reports
        .iter()
        .map(|r| r.periods.iter().map(|p| p.mean_score).collect())
        .collect();
    let k = reports.len();
    let mut m = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if let (Some(a), Some(b)) = (&series[i], &series[j]) {
                m[i][j] = if i == j { Some(1.0) } else { pearson(a, b) };
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDecayRow {
    pub strategy: String,
    pub costs_bps: Vec<f64>,
    pub sharpe: Vec<f64>,
}

pub fn cost_decay_table(reports: &[BacktestReport], costs_bps: &[f64]) -> Result<Vec<CostDecayRow>> {
    reports
        .iter()
        .map(|r| {
            let sharpe = costs_bps
                .iter()
                .map(|&c| Ok(perf_summary(&apply_costs(r, c), MONTHLY)?.sharpe))
                .collect::<Result<Vec<f64>>>()?;
            Ok(CostDecayRow {
                strategy: r.strategy.clone(),
                costs_bps: costs_bps.to_vec(),
                sharpe,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_period_hand_values() {
        let s = perf_summary(&[0.01, 0.03], 12).unwrap();
        assert!((s.ann_return_pct - 24.0).abs() < 1e-12);
        assert!((s.ann_vol_pct - 100.0 * 0.02f64.sqrt() / 10.0 * 12f64.sqrt()).abs() < 1e-12);
        assert!((s.sharpe - 4.898979485566356).abs() < 1e-9);
        assert_eq!(s.max_drawdown_pct, 0.0);
        assert_eq!(s.mdd_duration_pct, 0.0);
    }

    #[test]
    fn constant_returns_have_no_sharpe() {
        assert_eq!(perf_summary(&[0.01; 6], 12), Err(Error::ZeroVolatility));
        assert!(matches!(perf_summary(&[0.01], 12), Err(Error::TooFewPeriods { .. })));
    }

    #[test]
    fn drawdown_fixture() {
        let d = drawdown_stats(&[100.0, 120.0, 90.0, 110.0]);
        assert_eq!(d.max_drawdown_pct, -25.0);
        assert_eq!(d.mdd_duration_pct, 50.0);
        let up = drawdown_stats(&[1.0, 2.0, 3.0]);
        assert_eq!((up.max_drawdown_pct, up.mdd_duration_pct), (0.0, 0.0));
    }

    #[test]
    fn log_curve() {
        let c = cumulative_log_curve(&[0.1, 0.1]).unwrap();
        assert_eq!(c, vec![ln(1.1), ln(1.1) + ln(1.1)]);
        assert_eq!(cumulative_log_curve(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(cumulative_log_curve(&[0.1, -1.0]), Err(Error::TotalLoss { period: 1, .. })));
    }

    #[test]
    fn correlation_of_self_and_negation() {
        let a = vec![0.01, -0.02, 0.03, 0.0];
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let m = correlation_matrix(&[a.clone(), a, b]);
        assert!((m[0][1] - 1.0).abs() < 1e-12);
        assert!((m[0][2] + 1.0).abs() < 1e-12);
    }
}
