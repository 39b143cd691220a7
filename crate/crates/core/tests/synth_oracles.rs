use covnet_core::baselines::analyst_matrix_signal;
use covnet_core::features::FeatureEngine;
use covnet_core::graphs::project_coverage;
use covnet_core::labels::{forward_log_returns, plan_periods};
use covnet_core::synth::{generate, SynthConfig, SynthMarket};
use covnet_core::PricePanel;

fn market(phi: f64, seed: u64, n_days: usize) -> SynthMarket {
    generate(&SynthConfig { spillover_phi: phi, seed, n_days, ..Default::default() }).unwrap()
}

fn ln_ret(p: &PricePanel, i: usize, from: usize, to: usize) -> f64 {
    (p.price(to, i) / p.price(from, i)).ln()
}

/// Slope t-statistic of `y = a + b x + e` by ordinary least squares.
fn ols_t(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    b / (sse / (n - 2.0) / sxx).sqrt()
}

/// Forward 21-day return against the coverage-weighted mean of the
/// neighbours' trailing 21-day return, sampled every 21 days and demeaned
/// across firms on each date.
fn spillover_t(m: &SynthMarket) -> f64 {
    let p = &m.panel;
    let n = p.n_firms();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in (252..p.n_dates() - 21).step_by(21) {
        let g = project_coverage(&m.records, t, 252, n);
        let own: Vec<f64> = (0..n).map(|i| ln_ret(p, i, t - 21, t)).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, nbrs) in g.adjacency_lists().iter().enumerate() {
            let w: f64 = nbrs.iter().map(|&(_, w)| w as f64).sum();
            if w > 0.0 {
                x.push(nbrs.iter().map(|&(j, wj)| wj as f64 * own[j]).sum::<f64>() / w);
                y.push(ln_ret(p, i, t, t + 21));
            }
        }
        let (mx, my) = (x.iter().sum::<f64>() / x.len() as f64, y.iter().sum::<f64>() / y.len() as f64);
        xs.extend(x.iter().map(|v| v - mx));
        ys.extend(y.iter().map(|v| v - my));
    }
    ols_t(&xs, &ys)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn planted_spillover_is_recoverable() {
    // three years of trading after the warm-up, 100 firms
    let m = market(0.5, 0, 252 + 3 * 252 + 22);
    let t = spillover_t(&m);
    assert!(t > 3.0, "t = {t}");
}

#[test]
fn spillover_t_is_monotone_in_phi() {
    let mean_t = |phi: f64| (0..5).map(|s| spillover_t(&market(phi, s, 1008))).sum::<f64>() / 5.0;
    let ts: Vec<f64> = [0.0, 0.25, 0.5].into_iter().map(mean_t).collect();
    assert!(ts[0] <= ts[1] && ts[1] <= ts[2], "{ts:?}");
}

#[test]
fn no_spillover_leaves_the_analyst_signal_uninformative() {
    let m = market(0.0, 0, 1008);
    let p = &m.panel;
    let fe = FeatureEngine::new(p);
    let (plans, _) = plan_periods(p.n_dates(), 21);
    let (mut s, mut r) = (Vec::new(), Vec::new());
    for plan in &plans {
        let f = fe.matrix(plan.test_day, true).unwrap();
        let g = project_coverage(&m.records, plan.test_day, 252, p.n_firms());
        s.extend(analyst_matrix_signal(&f, &g).unwrap().scores);
        r.extend(forward_log_returns(p, plan.position_day, 21).unwrap());
    }
    assert!(s.len() >= 200);
    let rho = pearson(&s, &r);
    assert!(rho.abs() < 0.05, "rho = {rho}");
}

#[test]
fn generation_is_deterministic_and_positive() {
    let a = market(0.5, 3, 700);
    let b = market(0.5, 3, 700);
    assert_eq!(a.panel, b.panel);
    assert_eq!(a.records, b.records);
    assert_eq!(a.industries, b.industries);
    assert!(a.panel.row(0).iter().all(|&v| v == 100.0));
    for t in 0..a.panel.n_dates() {
        assert!(a.panel.row(t).iter().all(|&v| v > 0.0 && v.is_finite()));
    }
    assert_ne!(market(0.5, 4, 700).panel, a.panel);
}
