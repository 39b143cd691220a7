//! Command-line surface. Every subcommand is deterministic given its config
//! and seed; outputs are CSV or JSON.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use covnet_core::backtest::{BacktestReport, ABLATION_VARIANTS};
use covnet_core::features::WARMUP;
use covnet_core::gnn::{check_gradients, ModelKind};
use covnet_core::synth::{generate, SynthConfig};

use crate::config::{GraphSource, RunConfig};
use crate::dump;
use crate::error::{Error, Result};
use crate::io;
use crate::report;
use crate::runner::{ensure_valid, run_all, with_jobs, Inputs};

/// Gradient checks pass below this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "covnet", version, about = "Analyst coverage network momentum backtests")]
pub struct Cli {
    /// Worker threads (default: all processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic market (prices.csv, estimates.csv, industries.csv).
    Synth(SynthArgs),
    /// Walk-forward backtests.
    #[command(subcommand)]
    Backtest(BacktestCmd),
    /// Run the six graph/architecture variants on shared periods.
    Ablate(RunArgs),
    /// Summary, correlation, cost-decay and cumulative-return tables from report.json files.
    Report(ReportArgs),
    /// Network snapshots.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Node features.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Classification targets.
    #[command(subcommand)]
    Labels(LabelsCmd),
    /// First-layer attention of a trained GAT.
    #[command(subcommand)]
    Attention(AttentionCmd),
    /// Finite-difference check of model gradients; exits 3 on failure.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with synthetic market parameters (defaults when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config spillover coefficient.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BacktestCmd {
    /// Writes report.json and returns.csv per seed.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Strategy id: long_only, macd, analyst_matrix, nn, gat, gcn or an ablation variant.
        #[arg(long)]
        strategy: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// First date (inclusive).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date (inclusive).
    #[arg(long)]
    pub to: Option<NaiveDate>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GraphKind {
    Analysts,
    Correlation,
    Industry,
    DelEdge,
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Edge list `date,src,dst,weight` per monthly snapshot.
    Dump {
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, value_enum, default_value = "analysts")]
        graph: GraphKind,
    },
    /// Edge count, Jaccard vs the previous snapshot, diameter and transitivity.
    Stats {
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, value_enum, default_value = "analysts")]
        graph: GraphKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum FeaturesCmd {
    /// `date,ticker,f1..f8`.
    Dump {
        #[command(flatten)]
        range: RangeArgs,
        /// Skip cross-sectional standardization.
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum LabelsCmd {
    /// `date,realized_date,ticker,forward_log_return,label`.
    Dump {
        #[command(flatten)]
        range: RangeArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum AttentionCmd {
    /// `date,src,dst,head,alpha` on one period's test sample. The model is
    /// trained from scratch for that period.
    Dump {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        strategy: Option<String>,
        /// Period index (default: the last eligible period).
        #[arg(long)]
        period: Option<usize>,
        /// Write the `k` strongest non-self edges instead.
        #[arg(long)]
        top: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random instances per model kind.
    #[arg(long, default_value_t = 20)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl From<GraphKind> for GraphSource {
    fn from(g: GraphKind) -> Self {
        match g {
            GraphKind::Analysts => GraphSource::Analysts,
            GraphKind::Correlation => GraphSource::Correlation,
            GraphKind::Industry => GraphSource::Industry,
            GraphKind::DelEdge => GraphSource::DelEdge,
        }
    }
}

fn load_run(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let c = RunConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| c.out.clone());
    Ok((c, out))
}

fn seed_dir(out: &Path, seeds: &[u64], seed: u64) -> PathBuf {
    if seeds.len() == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("seed-{seed}"))
    }
}

fn write_run(dir: &Path, r: &BacktestReport) -> Result<()> {
    io::write_json(&dir.join("report.json"), r)?;
    report::write_returns(&dir.join("returns.csv"), r)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut c = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<SynthConfig>(&text).map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(phi) = args.phi {
        c.spillover_phi = phi;
    }
    let m = generate(&c)?;
    io::write_price_panel(&args.out.join("prices.csv"), &m.panel)?;
    io::write_estimates(&args.out.join("estimates.csv"), &m.records, &m.panel)?;
    io::write_industries(&args.out.join("industries.csv"), &m.industries, &m.panel)
}

pub fn cmd_backtest(args: &RunArgs, strategy: Option<&str>) -> Result<Vec<BacktestReport>> {
    let (c, out) = load_run(args)?;
    let name = strategy.unwrap_or(&c.strategy);
    let configs = c.seeds.iter().map(|&s| c.strategy(name, s, true)).collect::<Result<Vec<_>>>()?;
    let inputs = Inputs::load(&c)?;
    let reports = run_all(&inputs.market(), configs)?;
    for r in &reports {
        write_run(&seed_dir(&out, &c.seeds, r.config.base_seed), r)?;
    }
    ensure_valid(&reports)?;
    Ok(reports)
}

pub fn cmd_ablate(args: &RunArgs) -> Result<Vec<BacktestReport>> {
    let (c, out) = load_run(args)?;
    let mut configs = Vec::new();
    for &seed in &c.seeds {
        for v in ABLATION_VARIANTS {
            configs.push(c.strategy(v, seed, false)?);
        }
    }
    let inputs = Inputs::load(&c)?;
    let reports = run_all(&inputs.market(), configs)?;
    for r in &reports {
        write_run(&seed_dir(&out, &c.seeds, r.config.base_seed).join(&r.strategy), r)?;
    }
    ensure_valid(&reports)?;
    report::write_ablation_tables(&out, &reports, ABLATION_VARIANTS[0])?;
    Ok(reports)
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| io::read_json::<BacktestReport>(p))
        .collect::<Result<Vec<_>>>()?;
    report::write_report_tables(&args.out, &reports)
}

fn range_inputs(r: &RangeArgs) -> Result<(RunConfig, Inputs)> {
    let c = RunConfig::load(&r.config)?;
    let inputs = Inputs::load(&c)?;
    Ok((c, inputs))
}

pub fn cmd_graph(cmd: &GraphCmd) -> Result<()> {
    let (GraphCmd::Dump { range, graph } | GraphCmd::Stats { range, graph }) = cmd;
    let (c, inputs) = range_inputs(range)?;
    let spec = c.graph_spec((*graph).into(), c.seeds[0]);
    let data = inputs.market();
    let days = dump::snapshot_days(&dump::day_range(&inputs.panel, range.from, range.to, 0, inputs.panel.n_dates()));
    match cmd {
        GraphCmd::Dump { .. } => dump::write_graph_edges(&range.out, &data, &spec, &days),
        GraphCmd::Stats { .. } => dump::write_graph_stats(&range.out, &data, &spec, &days),
    }
}

pub fn cmd_features(cmd: &FeaturesCmd) -> Result<()> {
    let FeaturesCmd::Dump { range, raw } = cmd;
    let (_, inputs) = range_inputs(range)?;
    let days = dump::day_range(&inputs.panel, range.from, range.to, WARMUP, inputs.panel.n_dates());
    dump::write_features(&range.out, &inputs.market(), &days, !raw)
}

pub fn cmd_labels(cmd: &LabelsCmd) -> Result<()> {
    let LabelsCmd::Dump { range } = cmd;
    let (c, inputs) = range_inputs(range)?;
    let days = dump::day_range(&inputs.panel, range.from, range.to, 0, inputs.panel.n_dates());
    dump::write_labels(&range.out, &inputs.panel, &days, c.horizon)
}

pub fn cmd_attention(cmd: &AttentionCmd) -> Result<()> {
    let AttentionCmd::Dump { run, strategy, period, top } = cmd;
    let (c, out) = load_run(run)?;
    let config = c.strategy(strategy.as_deref().unwrap_or(&c.strategy), c.seeds[0], true)?;
    let inputs = Inputs::load(&c)?;
    dump::write_attention(&out, &inputs.market(), config, *period, *top)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckLine {
    pub model: &'static str,
    pub instances: u64,
    pub checked: usize,
    pub max_rel_error: f64,
}

/// Checks a 2-layer GAT on `instances` seeds and a 2-layer GCN and the
/// feed-forward model on a quarter as many.
pub fn run_gradcheck(instances: u64, seed: u64) -> Result<Vec<GradcheckLine>> {
    let suites: [(&'static str, ModelKind, usize, u64); 3] = [
        ("gat_2layer_2head", ModelKind::Gat, 2, instances),
        ("gcn_2layer", ModelKind::Gcn, 2, instances.div_ceil(4)),
        ("nn", ModelKind::Nn, 1, instances.div_ceil(4)),
    ];
    suites
        .iter()
        .map(|&(model, kind, layers, count)| {
            let mut line = GradcheckLine {
                model,
                instances: count,
                checked: 0,
                max_rel_error: 0.0,
            };
            for k in 0..count {
                let g = check_gradients(kind, layers, seed + k, 1e-6)?;
                line.checked += g.checked;
                line.max_rel_error = line.max_rel_error.max(g.max_rel_error);
            }
            Ok(line)
        })
        .collect()
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let lines = run_gradcheck(args.instances, args.seed)?;
    let mut failed = Vec::new();
    for l in &lines {
        let ok = l.max_rel_error < GRADCHECK_TOLERANCE;
        println!(
            "{} {}: {} instances, {} gradients, max relative error {:.3e}",
            if ok { "PASS" } else { "FAIL" },
            l.model,
            l.instances,
            l.checked,
            l.max_rel_error
        );
        if !ok {
            failed.push(l.model);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("gradient check failed for {}", failed.join(", "))))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs;
    with_jobs(jobs, move || match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Backtest(BacktestCmd::Run { run, strategy }) => cmd_backtest(run, strategy.as_deref()).map(|_| ()),
        Command::Ablate(a) => cmd_ablate(a).map(|_| ()),
        Command::Report(a) => cmd_report(a),
        Command::Graph(g) => cmd_graph(g),
        Command::Features(f) => cmd_features(f),
        Command::Labels(l) => cmd_labels(l),
        Command::Attention(a) => cmd_attention(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    })?
}
