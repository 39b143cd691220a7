use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use covnet::io::{load_price_panel, write_price_panel};

fn covnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covnet"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn synth_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("synth.toml"),
        "n_firms = 24\nn_analysts = 12\nn_days = 700\nn_sectors = 4\nseed = 5\n",
    )
    .unwrap();
    let o = covnet(&["synth", "--config", "synth.toml", "--out", "data"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(
        dir.path().join("run.toml"),
        "prices = \"data/prices.csv\"\nestimates = \"data/estimates.csv\"\nindustries = \"data/industries.csv\"\n\
         strategy = \"macd\"\nout = \"out\"\n",
    )
    .unwrap();
    dir
}

#[test]
fn baseline_backtest_and_report() {
    let dir = synth_dir();
    let p = dir.path();
    let o = covnet(&["backtest", "run", "--config", "run.toml"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let returns = fs::read_to_string(p.join("out/returns.csv")).unwrap();
    assert_eq!(returns.lines().next().unwrap(), "date,gross,net@1,net@2,net@5,turnover");
    assert_eq!(returns.lines().count(), 1 + 19);

    let o = covnet(&["backtest", "run", "--config", "run.toml", "--strategy", "analyst_matrix", "--out", "am"], p);
    assert_eq!(code(&o), 0);
    let o = covnet(&["report", "out/report.json", "am/report.json", "--out", "tables"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(p.join("tables/summary.csv")).unwrap();
    assert!(summary.starts_with("strategy,seed,ann_return_pct"));
    assert_eq!(summary.lines().count(), 3);
    for f in ["corr.csv", "cost_decay.csv", "cum_returns.csv"] {
        assert!(p.join("tables").join(f).is_file(), "{f}");
    }
}

#[test]
fn audit_dumps() {
    let dir = synth_dir();
    let p = dir.path();
    let o = covnet(&["graph", "stats", "--config", "run.toml", "--out", "industry.csv", "--graph", "industry"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats = fs::read_to_string(p.join("industry.csv")).unwrap();
    let mut lines = stats.lines();
    assert_eq!(lines.next().unwrap(), "date,edges,jaccard_vs_prev,diameter,transitivity");
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!((cols[2], cols[4]), ("1.0", "1.0"), "{l}");
    }

    let o = covnet(&["features", "dump", "--config", "run.toml", "--out", "f.csv", "--from", "2016-06-01", "--to", "2016-06-03"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = fs::read_to_string(p.join("f.csv")).unwrap();
    assert!(f.starts_with("date,ticker,f1,f2,f3,f4,f5,f6,f7,f8\n"));
    assert_eq!(f.lines().count(), 1 + 3 * 24);

    let o = covnet(&["labels", "dump", "--config", "run.toml", "--out", "l.csv", "--from", "2016-06-01", "--to", "2016-06-01"], p);
    assert_eq!(code(&o), 0);
    let l = fs::read_to_string(p.join("l.csv")).unwrap();
    assert_eq!(l.lines().count(), 1 + 24);
    let ones = l.lines().skip(1).filter(|r| r.ends_with(",1")).count();
    assert!(ones > 0 && ones < 24);
}

#[test]
fn exit_codes() {
    let dir = synth_dir();
    let p = dir.path();
    fs::write(p.join("typo.toml"), "prices = \"data/prices.csv\"\nlearnin_rate = 1\n").unwrap();
    let o = covnet(&["backtest", "run", "--config", "typo.toml"], p);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("learnin_rate"));

    fs::write(p.join("missing.toml"), "prices = \"nope.csv\"\nestimates = \"data/estimates.csv\"\n").unwrap();
    let o = covnet(&["backtest", "run", "--config", "missing.toml"], p);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));

    fs::write(p.join("data/bad.csv"), "date,ticker,close\n2016-01-04,AAA,abc\n").unwrap();
    fs::write(p.join("bad.toml"), "prices = \"data/bad.csv\"\nestimates = \"data/estimates.csv\"\n").unwrap();
    let o = covnet(&["backtest", "run", "--config", "bad.toml"], p);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1:"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = covnet(&["backtest", "run", "--config", "run.toml", "--strategy", "momentum"], p);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&covnet(&["frobnicate"], p)), 1);
    assert_eq!(code(&covnet(&["--help"], p)), 0);
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = covnet(&["gradcheck", "--instances", "4"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{out}");
}

#[test]
fn written_prices_reload_bit_exact() {
    let dir = synth_dir();
    let src = dir.path().join("data/prices.csv");
    let (panel, q) = load_price_panel(&src, 0.0).unwrap();
    assert_eq!(q.firms_dropped.len(), 0);
    let copy = dir.path().join("copy.csv");
    write_price_panel(&copy, &panel).unwrap();
    let (again, _) = load_price_panel(&copy, 0.0).unwrap();
    assert_eq!(again, panel);
    assert_eq!(fs::read(&copy).unwrap(), fs::read(&src).unwrap());
}
