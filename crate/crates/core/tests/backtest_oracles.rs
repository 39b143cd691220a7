use covnet_core::backtest::{audit_no_lookahead, run_walk_forward, BacktestReport, StrategyConfig};
use covnet_core::labels::{plan_periods, MarketData};
use covnet_core::metrics::{correlation_matrix, drawdown_stats, perf_summary, MONTHLY};
use covnet_core::synth::{generate, SynthConfig};
use proptest::prelude::*;

fn report(name: &str, seed: u64) -> (covnet_core::synth::SynthMarket, BacktestReport) {
    let m = generate(&SynthConfig { n_firms: 40, n_analysts: 20, n_days: 650, seed, ..Default::default() }).unwrap();
    let data = MarketData::new(&m.panel, &m.records, Some(&m.industries));
    let r = run_walk_forward(&data, StrategyConfig::preset(name, seed).unwrap()).unwrap();
    (m, r)
}

#[test]
fn period_arithmetic_from_first_principles() {
    for name in ["long_only", "macd", "analyst_matrix"] {
        let (m, r) = report(name, 4);
        let p = &m.panel;
        let (plans, _) = plan_periods(p.n_dates(), 21);
        assert_eq!(r.periods.len(), plans.len(), "{name}");
        let mut prev: Option<&[f64]> = None;
        for rec in &r.periods {
            assert_eq!(rec.exit_day, rec.position_day + 21);
            let gross: f64 = (0..p.n_firms())
                .map(|i| rec.weights[i] * (p.price(rec.exit_day, i) / p.price(rec.position_day, i) - 1.0))
                .sum();
            assert!((rec.gross - gross).abs() < 1e-12, "{name} period {}", rec.index);
            assert!((rec.gross_log - (1.0 + gross).ln()).abs() < 1e-12);
            let turnover: f64 = match prev {
                None => rec.weights.iter().map(|w| w.abs()).sum(),
                Some(w0) => w0.iter().zip(&rec.weights).map(|(a, b)| (a - b).abs()).sum(),
            };
            assert!((rec.turnover - turnover).abs() < 1e-12);
            for (k, c) in r.config.costs_bps.iter().enumerate() {
                assert!((rec.net[k] - (gross - c * 1e-4 * turnover)).abs() < 1e-12);
            }
            if name != "long_only" {
                // dollar neutral: +0.5 long, -0.5 short, 10 names per leg
                assert_eq!(rec.long.len(), 10);
                assert_eq!(rec.short.len(), 10);
                assert!((rec.weights.iter().sum::<f64>()).abs() < 1e-12);
                assert!((rec.weights.iter().map(|w| w.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            }
            prev = Some(&rec.weights);
        }
        assert!(audit_no_lookahead(&r).is_empty(), "{name}");
    }
}

#[test]
fn costs_only_ever_lower_the_sharpe() {
    let (_, r) = report("macd", 9);
    let sharpe: Vec<f64> = (0..r.config.costs_bps.len())
        .map(|k| perf_summary(&r.net_returns(k), MONTHLY).unwrap().sharpe)
        .collect();
    for w in sharpe.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{sharpe:?}");
    }
}

#[test]
fn summary_matches_hand_formulas() {
    let rets = [0.02, -0.01, 0.03, -0.04, 0.01, 0.0];
    let s = perf_summary(&rets, MONTHLY).unwrap();
    let mean = rets.iter().sum::<f64>() / 6.0;
    let sd = (rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
    assert!((s.ann_return_pct - 1200.0 * mean).abs() < 1e-12);
    assert!((s.ann_vol_pct - 100.0 * sd * 12f64.sqrt()).abs() < 1e-12);
    assert!((s.sharpe - mean * 12f64.sqrt() / sd).abs() < 1e-12);
    let cum: f64 = rets.iter().map(|r| (1.0 + r).ln()).sum();
    assert!((s.cum_log_return - cum).abs() < 1e-12);
    // values 1.02, 1.0098, 1.040094, 0.99849, 1.008475, 1.008475: the peak is
    // 1.040094 and the low after it 0.99849
    assert!((s.max_drawdown_pct - (-4.0)).abs() < 1e-9);
    assert!((s.mdd_duration_pct - 100.0 * 3.0 / 6.0).abs() < 1e-12);
}

#[test]
fn drawdown_of_a_hand_curve() {
    let d = drawdown_stats(&[100.0, 120.0, 90.0, 60.0, 130.0, 65.0, 70.0]);
    assert!((d.max_drawdown_pct + 50.0).abs() < 1e-12);
    // 90, 60 below 120 (two points); 65, 70 below 130 (two points)
    assert!((d.mdd_duration_pct - 100.0 * 2.0 / 7.0).abs() < 1e-12);
    let up = drawdown_stats(&[1.0, 2.0, 3.0]);
    assert_eq!((up.max_drawdown_pct, up.mdd_duration_pct), (0.0, 0.0));
}

proptest! {
    #[test]
    fn correlation_matrices_are_psd(
        series in proptest::collection::vec(proptest::collection::vec(-0.2f64..0.2, 12), 2..6),
        probe in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let m = correlation_matrix(&series);
        let k = m.len();
        let x = &probe[..k];
        let q: f64 = (0..k).map(|i| (0..k).map(|j| x[i] * m[i][j] * x[j]).sum::<f64>()).sum();
        prop_assert!(q >= -1e-9);
        for i in 0..k {
            prop_assert_eq!(m[i][i], 1.0);
            for j in 0..k {
                prop_assert_eq!(m[i][j], m[j][i]);
                prop_assert!(m[i][j].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn drawdown_is_bounded(values in proptest::collection::vec(0.1f64..10.0, 1..50)) {
        let d = drawdown_stats(&values);
        prop_assert!(d.max_drawdown_pct <= 0.0 && d.max_drawdown_pct > -100.0);
        prop_assert!((0.0..100.0).contains(&d.mdd_duration_pct));
    }
}
