use chrono::NaiveDate;
use covnet_core::features::{
    ewma_price, feature_matrix, log_return, macd_signal, FeatureEngine, MACD_PAIRS, N_FEATURES, RETURN_HORIZONS,
};
use covnet_core::PricePanel;
use proptest::prelude::*;

fn panel(series: &[Vec<f64>]) -> PricePanel {
    let start = NaiveDate::from_ymd_opt(2001, 1, 2).unwrap();
    let len = series[0].len();
    let dates = (0..len).map(|k| start + chrono::Days::new(k as u64)).collect();
    let firms = (0..series.len()).map(|i| format!("S{i}")).collect();
    let prices = (0..len).flat_map(|t| series.iter().map(move |s| s[t])).collect();
    PricePanel::new(dates, firms, prices).unwrap()
}

fn sine(len: usize, period: f64, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|t| 50.0 + 10.0 * (2.0 * std::f64::consts::PI * t as f64 / period + phase).sin())
        .collect()
}

/// `(1 - g)^t p0 + sum_s g (1 - g)^(t - s) p_s`
fn ewma_closed(p: &[f64], t: usize, scale: usize) -> f64 {
    let g = 1.0 / scale as f64;
    let mut m = (1.0 - g).powi(t as i32) * p[0];
    for (s, &ps) in p.iter().enumerate().take(t + 1).skip(1) {
        m += g * (1.0 - g).powi((t - s) as i32) * ps;
    }
    m
}

fn std_two_pass(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn macd_oracle(p: &[f64], t: usize, short: usize, long: usize) -> f64 {
    // the inner series needs 63 prices; the outer window holds at most 252 of it
    let first = 62usize.max((t + 1).saturating_sub(252));
    let q: Vec<f64> = (first..=t)
        .map(|s| (ewma_closed(p, s, short) - ewma_closed(p, s, long)) / std_two_pass(&p[s - 62..=s]))
        .collect();
    q[q.len() - 1] / std_two_pass(&q)
}

#[test]
fn macd_matches_closed_form_on_sine_waves() {
    let series = [sine(400, 40.0, 0.0), sine(400, 90.0, 1.1), sine(400, 17.0, 2.4)];
    let p = panel(&series);
    for (firm, s) in series.iter().enumerate() {
        for t in [252, 300, 399] {
            for pair in MACD_PAIRS {
                let got = macd_signal(&p, firm, t, pair).unwrap();
                let want = macd_oracle(s, t, pair.short, pair.long);
                assert!((got - want).abs() < 1e-10, "firm {firm} t {t} {pair:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn feature_columns_are_the_scalar_features() {
    let p = panel(&[sine(320, 40.0, 0.0), sine(320, 60.0, 0.7), sine(320, 25.0, 1.9)]);
    let engine = FeatureEngine::new(&p);
    let t = 300;
    let f = engine.matrix(t, false).unwrap();
    assert_eq!(f.values().len(), 3 * N_FEATURES);
    for i in 0..3 {
        for (c, &h) in RETURN_HORIZONS.iter().enumerate() {
            let want = (p.price(t, i) / p.price(t - h, i)).ln();
            assert!((f.get(i, c) - want).abs() < 1e-12);
        }
        for (k, pair) in MACD_PAIRS.into_iter().enumerate() {
            let want = macd_oracle(&p.series(i), t, pair.short, pair.long);
            assert!((f.get(i, 5 + k) - want).abs() < 1e-10);
        }
    }
    let z = engine.matrix(t, true).unwrap();
    for c in 0..N_FEATURES {
        let col = f.column(c);
        let m = col.iter().sum::<f64>() / 3.0;
        let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0).sqrt();
        for i in 0..3 {
            assert!((z.get(i, c) - (col[i] - m) / sd).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn macd_is_scale_invariant(scale in 0.01f64..100.0, period in 15.0f64..120.0, phase in 0.0f64..6.0) {
        let s = sine(300, period, phase);
        let scaled: Vec<f64> = s.iter().map(|v| v * scale).collect();
        let p = panel(&[s, scaled]);
        for pair in MACD_PAIRS {
            let a = macd_signal(&p, 0, 299, pair).unwrap();
            let b = macd_signal(&p, 1, 299, pair).unwrap();
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
        let fa = feature_matrix(&p, 299, false).unwrap();
        for c in 0..5 {
            prop_assert!((fa.get(0, c) - fa.get(1, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn log_returns_add_up(prices in proptest::collection::vec(0.5f64..200.0, 12..40), a in 1usize..6, b in 1usize..6) {
        let t = prices.len() - 1;
        let p = panel(&[prices]);
        let whole = log_return(&p, 0, t, a + b).unwrap();
        let parts = log_return(&p, 0, t, a).unwrap() + log_return(&p, 0, t - a, b).unwrap();
        prop_assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn ewma_stays_within_observed_prices(prices in proptest::collection::vec(0.5f64..200.0, 2..60), scale in 1usize..100) {
        let p = panel(&[prices.clone()]);
        for t in 0..prices.len() {
            let m = ewma_price(&p, 0, t, scale).unwrap();
            let lo = prices[..=t].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = prices[..=t].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
            prop_assert!((m - ewma_closed(&prices, t, scale)).abs() < 1e-9 * hi);
        }
    }
}
