//! End-to-end acceptance gate. Runs as a plain binary (no libtest harness) so
//! every criterion prints one PASS/FAIL line; exits non-zero if any fails.
//!
//! `COVNET_ACCEPTANCE_FULL=1` repeats the whole planted-signal run for the
//! determinism check instead of the seed-0 subset.

use std::path::Path;
use std::time::{Duration, Instant};

use covnet::cli::{cmd_ablate, RunArgs};
use covnet::config::RunConfig;
use covnet::io;
use covnet::runner::{run_strategy, Inputs};
use covnet_core::autodiff::Tensor;
use covnet_core::backtest::{audit_no_lookahead, BacktestReport, ABLATION_VARIANTS};
use covnet_core::gnn::{check_gradients, Model, ModelConfig, ModelKind, PreparedGraph};
use covnet_core::graphs::{project_coverage, topology_stats, CoverageGraph};
use covnet_core::labels::{build_graph, GraphSpec};
use covnet_core::metrics::{cumulative_log_curve, drawdown_stats, perf_summary, MONTHLY};
use covnet_core::seed::rng;
use covnet_core::synth::{generate, SynthConfig};
use covnet_core::EstimateRecord;
use rand::Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const PLANTED: [&str; 4] = ["long_only", "analyst_matrix", "gat_analysts", "gat_del_edge"];

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: String) -> Line {
    Line { ok, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn run_config() -> RunConfig {
    RunConfig::from_toml(
        "grid_lr = [0.01, 0.001]\ngrid_hidden = [64]\ngrid_layers = [1, 2]\n\
         grid_weight_decay = [0.00001]\ngrid_heads = [2]\nmax_epochs = 20\npatience = 5\n",
    )
    .expect("preset parses")
}

fn market(phi: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        spillover_phi: phi,
        seed,
        ..SynthConfig::default()
    }
}

fn gradients() -> Line {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..20 {
        match check_gradients(ModelKind::Gat, 2, 1000 + seed, 1e-6) {
            Ok(g) => {
                worst = worst.max(g.max_rel_error);
                checked += g.checked;
            }
            Err(e) => return line(false, format!("instance {seed}: {e}")),
        }
    }
    let took = t.elapsed();
    line(
        worst < 1e-3 && took < Duration::from_secs(60),
        format!("20 instances, {checked} gradients, max relative error {worst:.2e}, {}", secs(took)),
    )
}

fn projection() -> Line {
    let t = Instant::now();
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let (analysts, firms) = (r.random_range(1..=20), r.random_range(2..=30));
        let b: Vec<Vec<u32>> = (0..analysts)
            .map(|_| (0..firms).map(|_| u32::from(r.random::<f64>() < 0.25)).collect())
            .collect();
        let mut records = Vec::new();
        for (a, row) in b.iter().enumerate() {
            for (f, &on) in row.iter().enumerate() {
                if on == 1 {
                    let day = r.random_range(0..50);
                    records.push(EstimateRecord {
                        day,
                        date: chrono::NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(day as u64),
                        analyst_id: format!("a{a}"),
                        firm: f,
                    });
                }
            }
        }
        records.sort();
        let dense = project_coverage(&records, 49, 252, firms).dense_weights();
        for i in 0..firms {
            for j in 0..firms {
                let want: u32 = if i == j { 0 } else { b.iter().map(|row| row[i] * row[j]).sum() };
                if dense[i * firms + j] != f64::from(want) {
                    return line(false, format!("instance {seed} entry ({i}, {j})"));
                }
            }
        }
    }
    line(true, format!("100 instances exact, {}", secs(t.elapsed())))
}

fn metric_fixtures() -> Line {
    let d = drawdown_stats(&[100.0, 120.0, 90.0, 110.0]);
    let mut r = rng(3);
    let rets: Vec<f64> = (0..48).map(|_| r.random_range(-0.1..0.1)).collect();
    let curve = cumulative_log_curve(&rets).expect("returns above -1");
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for (c, x) in curve.iter().zip(&rets) {
        acc += (1.0 + x).ln();
        worst = worst.max((c - acc).abs());
    }
    line(
        d.max_drawdown_pct == -25.0 && d.mdd_duration_pct == 50.0 && worst <= 1e-12,
        format!("MD {}%, MDD duration {}%, log curve error {worst:.1e}", d.max_drawdown_pct, d.mdd_duration_pct),
    )
}

fn random_graph(n: usize, seed: u64) -> CoverageGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < 0.3 {
                edges.push((i, j, r.random_range(1..6)));
            }
        }
    }
    CoverageGraph::from_edges(0, n, 252, edges).unwrap()
}

fn random_x(n: usize, seed: u64) -> Tensor {
    let mut r = rng(seed);
    Tensor::from_vec(n, 8, (0..n * 8).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn attention_invariants() -> Line {
    let mut worst_sum: f64 = 0.0;
    let mut worst_perm: f64 = 0.0;
    let mut passes = 0;
    for seed in 0..60u64 {
        let n = 4 + (seed as usize % 20);
        let g = random_graph(n, seed);
        let x = random_x(n, seed + 7);
        let weighted = seed % 2 == 1;
        let pg = PreparedGraph::new(&g, weighted);
        let kind = [ModelKind::Gat, ModelKind::Gcn, ModelKind::Nn][seed as usize % 3];
        let config = ModelConfig {
            layers: 2,
            heads: 1 + seed as usize % 3,
            hidden: 8,
            seed,
            ..ModelConfig::new(kind)
        };
        let mut m = Model::init(&config, 8).unwrap();
        let mut r = rng(seed ^ 0x51);
        for t in &mut m.params.values {
            for v in t.data_mut() {
                *v = r.random_range(-0.5..0.5);
            }
        }
        if kind == ModelKind::Gat {
            for a in m.attention(&x, &pg).unwrap() {
                for dst in 0..n {
                    let s: f64 = (0..n).map(|src| a.get(dst, src)).sum();
                    worst_sum = worst_sum.max((s - 1.0).abs());
                }
                passes += 1;
            }
        }
        let order: Vec<usize> = (0..n).rev().collect();
        let mut data = Vec::new();
        for &i in &order {
            data.extend_from_slice(x.row(i));
        }
        let px = Tensor::from_vec(n, 8, data).unwrap();
        let base = m.predict(&x, &pg).unwrap();
        let moved = m.predict(&px, &PreparedGraph::new(&g.permuted(&order), weighted)).unwrap();
        for (k, &old) in order.iter().enumerate() {
            worst_perm = worst_perm.max((moved[k] - base[old]).abs());
        }
    }
    line(
        worst_sum <= 1e-9 && worst_perm <= 1e-9,
        format!("{passes} attention heads, row-sum error {worst_sum:.1e}, permutation error {worst_perm:.1e}"),
    )
}

fn sharpe(r: &BacktestReport) -> f64 {
    perf_summary(&r.gross_returns(), MONTHLY).map_or(f64::NAN, |s| s.sharpe)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Reports in `PLANTED` order per seed at phi 0.5, then gat_analysts per seed at phi 0.
fn planted_runs(c: &RunConfig) -> (Vec<Vec<BacktestReport>>, Vec<BacktestReport>) {
    let on = SEEDS
        .iter()
        .map(|&s| {
            let inputs = Inputs::from_synth(generate(&market(0.5, s)).unwrap());
            let data = inputs.market();
            PLANTED
                .iter()
                .map(|name| run_strategy(&data, c.strategy(name, s, false).unwrap()).unwrap())
                .collect()
        })
        .collect();
    let off = SEEDS
        .iter()
        .map(|&s| {
            let inputs = Inputs::from_synth(generate(&market(0.0, s)).unwrap());
            run_strategy(&inputs.market(), c.strategy("gat_analysts", s, false).unwrap()).unwrap()
        })
        .collect();
    (on, off)
}

fn planted_signal(on: &[Vec<BacktestReport>], off: &[BacktestReport], took: Duration) -> Line {
    let col = |k: usize| median(on.iter().map(|rs| sharpe(&rs[k])).collect());
    let (lo, am, gat, del) = (col(0), col(1), col(2), col(3));
    let null = median(off.iter().map(|r| sharpe(r).abs()).collect());
    let per_seed: Vec<String> = on
        .iter()
        .zip(off)
        .map(|(rs, z)| format!("{:.2}/{:.2}/{:.2}/{:.2}/{:.2}", sharpe(&rs[0]), sharpe(&rs[1]), sharpe(&rs[2]), sharpe(&rs[3]), sharpe(z)))
        .collect();
    let checks = [gat > lo + 0.5, gat > am, gat > del, null < 0.5, took < Duration::from_secs(1800)];
    line(
        checks.iter().all(|&c| c),
        format!(
            "median Sharpe GAT {gat:.2}, long-only {lo:.2}, analyst matrix {am:.2}, del-edge {del:.2}, |GAT| at phi 0 {null:.2}; \
             checks a/b/c/null/runtime {checks:?}; per seed LO/AM/GAT/DEL/GAT0 [{}]; {}",
            per_seed.join(" "),
            secs(took)
        ),
    )
}

fn ablation(dir: &Path, c: &RunConfig) -> (Line, Vec<BacktestReport>) {
    let m = generate(&market(0.5, 0)).unwrap();
    let data_dir = dir.join("data");
    io::write_price_panel(&data_dir.join("prices.csv"), &m.panel).unwrap();
    io::write_estimates(&data_dir.join("estimates.csv"), &m.records, &m.panel).unwrap();
    io::write_industries(&data_dir.join("industries.csv"), &m.industries, &m.panel).unwrap();
    let mut cfg = c.clone();
    cfg.prices = "data/prices.csv".into();
    cfg.estimates = "data/estimates.csv".into();
    cfg.industries = Some("data/industries.csv".into());
    cfg.out = "ablate".into();
    cfg.seeds = vec![0];
    std::fs::write(dir.join("ablate.toml"), toml::to_string(&cfg).unwrap()).unwrap();
    let reports = cmd_ablate(&RunArgs {
        config: dir.join("ablate.toml"),
        out: None,
    })
    .unwrap();

    let mut problems = Vec::new();
    let files = ABLATION_VARIANTS
        .iter()
        .filter(|v| dir.join("ablate").join(v).join("report.json").is_file())
        .count();
    if files != 6 || reports.len() != 6 {
        problems.push(format!("{files} report files"));
    }
    let bounds = |r: &BacktestReport| -> Vec<(usize, usize, usize)> {
        r.periods.iter().map(|p| (p.test_day, p.position_day, p.exit_day)).collect()
    };
    if reports.iter().any(|r| bounds(r) != bounds(&reports[0])) {
        problems.push("period boundaries differ".into());
    }
    let inputs = Inputs::from_synth(m);
    let data = inputs.market();
    let by = |name: &str| reports.iter().find(|r| r.strategy == name).unwrap();
    let del = by("gat_del_edge");
    let mut del_ok = 0;
    for p in &del.periods {
        let day = del.config.refresh.snapshot_day(p.test_day);
        let full = build_graph(&data, &GraphSpec::Analysts { lookback: c.lookback }, day).unwrap();
        if p.graph_edges == (0.4 * full.edge_count() as f64).round() as usize {
            del_ok += 1;
        } else {
            problems.push(format!("del_edge period {} keeps {} of {}", p.index, p.graph_edges, full.edge_count()));
        }
    }
    let ind = by("gat_industries");
    let mut prev = None;
    let mut ind_ok = 0;
    for p in &ind.periods {
        let g = build_graph(&data, &GraphSpec::Industry, ind.config.refresh.snapshot_day(p.test_day)).unwrap();
        let s = topology_stats(&g, prev.as_ref());
        if s.transitivity == 1.0 && s.jaccard_vs_prev == 1.0 {
            ind_ok += 1;
        } else {
            problems.push(format!("industry period {}: {s:?}", p.index));
        }
        prev = Some(g);
    }
    (
        line(
            problems.is_empty(),
            format!(
                "{} reports over {} shared periods; del-edge counts {del_ok}/{}; industry transitivity and Jaccard 1.0 {ind_ok}/{} {}",
                reports.len(),
                reports[0].periods.len(),
                del.periods.len(),
                ind.periods.len(),
                problems.join("; ")
            ),
        ),
        reports,
    )
}

fn cost_monotone(reports: &[&BacktestReport]) -> Line {
    let mut bad = Vec::new();
    for r in reports {
        let s: Vec<f64> = [0.0, 1.0, 2.0, 5.0]
            .iter()
            .map(|&c| perf_summary(&covnet_core::backtest::apply_costs(r, c), MONTHLY).map_or(f64::NAN, |p| p.sharpe))
            .collect();
        if !s.windows(2).all(|w| w[0] >= w[1]) {
            bad.push(format!("{}#{} {s:?}", r.strategy, r.config.base_seed));
        }
    }
    line(bad.is_empty(), format!("{} reports checked {}", reports.len(), bad.join("; ")))
}

fn no_lookahead(reports: &[&BacktestReport]) -> Line {
    let violations: usize = reports.iter().map(|r| audit_no_lookahead(r).len()).sum();
    let periods: usize = reports.iter().map(|r| r.periods.len()).sum();
    line(violations == 0, format!("{} reports, {periods} periods, {violations} violations", reports.len()))
}

fn bytes(r: &BacktestReport) -> String {
    serde_json::to_string_pretty(r).unwrap()
}

fn determinism(c: &RunConfig, on: &[Vec<BacktestReport>], off: &[BacktestReport], ablated: &[BacktestReport]) -> Line {
    let full = std::env::var("COVNET_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let mut compared = 0;
    let mut differ = Vec::new();
    if full {
        let (on2, off2) = planted_runs(c);
        for (a, b) in on.iter().flatten().chain(off).zip(on2.iter().flatten().chain(&off2)) {
            compared += 1;
            if bytes(a) != bytes(b) {
                differ.push(format!("{}#{}", a.strategy, a.config.base_seed));
            }
        }
    } else {
        // seed 0: the baselines rerun in memory; the GAT reports were rerun
        // from CSV files by the ablation
        let inputs = Inputs::from_synth(generate(&market(0.5, 0)).unwrap());
        for (k, name) in PLANTED.iter().enumerate() {
            let again = match ablated.iter().find(|r| r.strategy == *name) {
                Some(r) => r.clone(),
                None => run_strategy(&inputs.market(), c.strategy(name, 0, false).unwrap()).unwrap(),
            };
            compared += 1;
            if bytes(&on[0][k]) != bytes(&again) {
                differ.push(name.to_string());
            }
        }
    }
    line(
        differ.is_empty(),
        format!("{compared} reports compared byte for byte ({}) {}", if full { "full rerun" } else { "seed 0" }, differ.join(", ")),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let c = run_config();
    let mut lines = vec![gradients(), projection(), metric_fixtures(), attention_invariants()];
    let t = Instant::now();
    let (on, off) = planted_runs(&c);
    let planted = planted_signal(&on, &off, t.elapsed());
    let (ablate_line, ablated) = ablation(dir.path(), &c);
    let all: Vec<&BacktestReport> = on.iter().flatten().chain(&off).chain(&ablated).collect();
    lines.push(no_lookahead(&all));
    lines.push(planted);
    lines.push(ablate_line);
    lines.push(cost_monotone(&all));
    lines.push(determinism(&c, &on, &off, &ablated));

    let names = [
        "gradient correctness",
        "projection oracle",
        "metric oracles",
        "attention invariants",
        "no-lookahead audit",
        "planted-signal recovery",
        "ablation structure",
        "cost-decay monotonicity",
        "determinism",
    ];
    for (k, (name, l)) in names.iter().zip(&lines).enumerate() {
        println!("criterion {} {name}: {} ({})", k + 1, if l.ok { "PASS" } else { "FAIL" }, l.detail.trim());
    }
    if lines.iter().any(|l| !l.ok) {
        std::process::exit(1);
    }
}
