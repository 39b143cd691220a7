//! Graph attention / graph convolution forecasters on the autodiff tape,
//! their training loop and grid search, and attention extraction.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{finite_difference_check, AdamConfig, AdamState, GradCheck, ParamSet, Tape, Tensor, Var};
use crate::features::N_FEATURES;
use crate::graphs::CoverageGraph;
use crate::labels::Sample;
use crate::math::{ln, sqrt};
use crate::seed::{derive_seed, rng};
use crate::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;
pub const DEFAULT_MAX_EPOCHS: usize = 300;
pub const DEFAULT_PATIENCE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gat,
    Gcn,
    Nn,
}

impl ModelKind {
    pub fn uses_graph(self) -> bool {
        !matches!(self, ModelKind::Nn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub max_epochs: usize,
    pub patience: usize,
    #[serde(default)]
    pub use_edge_weights: bool,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            layers: 2,
            hidden: 64,
            heads: 2,
            lr: 1e-3,
            weight_decay: 1e-5,
            seed: 0,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            use_edge_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("model {what}")));
        if self.layers == 0 || self.layers > 2 {
            return bad("layers must be 1 or 2");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if self.heads == 0 {
            return bad("heads must be at least 1");
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("lr must be positive and weight_decay non-negative");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        Ok(())
    }
}

/// Cartesian hyperparameter grid. Cells are enumerated with `lr` slowest and
/// `heads` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelGrid {
    pub lr: Vec<f64>,
    pub hidden: Vec<usize>,
    pub layers: Vec<usize>,
    pub weight_decay: Vec<f64>,
    pub heads: Vec<usize>,
}

impl Default for ModelGrid {
    fn default() -> Self {
        Self {
            lr: vec![1e-2, 1e-3, 1e-4],
            hidden: vec![64, 128],
            layers: vec![1, 2],
            weight_decay: vec![1e-4, 1e-5, 1e-6],
            heads: vec![2, 8],
        }
    }
}

impl ModelGrid {
    pub fn reduced() -> Self {
        Self {
            lr: vec![1e-2, 1e-3],
            hidden: vec![64],
            layers: vec![1, 2],
            weight_decay: vec![1e-5],
            heads: vec![2],
        }
    }

    pub fn single(config: &ModelConfig) -> Self {
        Self {
            lr: vec![config.lr],
            hidden: vec![config.hidden],
            layers: vec![config.layers],
            weight_decay: vec![config.weight_decay],
            heads: vec![config.heads],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lr.is_empty()
            || self.hidden.is_empty()
            || self.layers.is_empty()
            || self.weight_decay.is_empty()
            || self.heads.is_empty()
    }

    /// Concrete configs in enumeration order. `template` supplies the kind and
    /// training limits. Head counts are collapsed to one cell for models without
    /// attention, and the feed-forward model always has a single hidden layer.
    pub fn cells(&self, template: &ModelConfig) -> Vec<ModelConfig> {
        let heads: Vec<usize> = if template.kind == ModelKind::Gat {
            self.heads.clone()
        } else {
            self.heads.first().copied().into_iter().collect()
        };
        let layers: Vec<usize> = if template.kind == ModelKind::Nn {
            self.layers.first().map(|_| 1).into_iter().collect()
        } else {
            self.layers.clone()
        };
        let mut out = Vec::new();
        for &lr in &self.lr {
            for &hidden in &self.hidden {
                for &l in &layers {
                    for &weight_decay in &self.weight_decay {
                        for &h in &heads {
                            out.push(ModelConfig {
                                lr,
                                hidden,
                                layers: l,
                                weight_decay,
                                heads: h,
                                ..template.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Graph-derived constants shared by every sample that uses the same snapshot.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub n: usize,
    /// `A + I` as a boolean mask, row-major.
    pub mask: Arc<[bool]>,
    /// `ln(1 + w)` per masked entry (self-loops count as weight 1); present
    /// only when edge weights scale the attention scores.
    pub score_scale: Option<Arc<[f64]>>,
    /// Symmetric normalized `D^-1/2 (A + I) D^-1/2` for GCN layers.
    pub gcn_norm: Tensor,
}

impl PreparedGraph {
    pub fn new(g: &CoverageGraph, use_edge_weights: bool) -> Self {
        let n = g.n();
        let mut mask = vec![false; n * n];
        let mut weight = vec![0.0; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
            weight[i * n + i] = 1.0;
        }
        for e in g.edges() {
            for (a, b) in [(e.src, e.dst), (e.dst, e.src)] {
                mask[a * n + b] = true;
                weight[a * n + b] = e.weight as f64;
            }
        }
        let degree: Vec<f64> = (0..n)
            .map(|i| mask[i * n..(i + 1) * n].iter().filter(|&&m| m).count() as f64)
            .collect();
        let mut norm = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if mask[i * n + j] {
                    norm.set(i, j, 1.0 / sqrt(degree[i] * degree[j]));
                }
            }
        }
        let score_scale = use_edge_weights.then(|| {
            weight
                .iter()
                .map(|&w| if w > 0.0 { ln(1.0 + w) } else { 0.0 })
                .collect::<Vec<f64>>()
                .into()
        });
        Self {
            n,
            mask: mask.into(),
            score_scale,
            gcn_norm: norm,
        }
    }
}

/// One sample converted to tape inputs.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub day: usize,
    pub date: NaiveDate,
    pub x: Tensor,
    pub graph: Arc<PreparedGraph>,
    pub y: Arc<[f64]>,
    /// Class-balancing weights: `n / (2 n_c)` for an entry of class `c`.
    pub weights: Arc<[f64]>,
}

pub fn class_weights(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return vec![1.0; y.len()];
    }
    y.iter()
        .map(|&v| if v > 0.5 { n / (2.0 * pos) } else { n / (2.0 * neg) })
        .collect()
}

/// Converts samples, reusing the prepared graph while consecutive samples
/// share a snapshot.
pub fn prepare_samples(samples: &[Sample], use_edge_weights: bool) -> Vec<PreparedSample> {
    let mut out: Vec<PreparedSample> = Vec::with_capacity(samples.len());
    let mut last: Option<(Arc<CoverageGraph>, Arc<PreparedGraph>)> = None;
    for s in samples {
        let graph = match &last {
            Some((g, p)) if Arc::ptr_eq(g, &s.graph) => p.clone(),
            _ => {
                let p = Arc::new(PreparedGraph::new(&s.graph, use_edge_weights));
                last = Some((s.graph.clone(), p.clone()));
                p
            }
        };
        let y = s.target.as_f64();
        let n = s.features.n_firms();
        out.push(PreparedSample {
            day: s.day,
            date: s.features.date,
            x: Tensor::from_vec(n, N_FEATURES, s.features.values().to_vec())
                .expect("feature matrix is n x 8"),
            graph,
            weights: class_weights(&y).into(),
            y: y.into(),
        });
    }
    out
}

/// A configuration together with its parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamSet,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let limit = sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::from_vec(rows, cols, data).expect("sized")
}

struct Forward {
    probs: Var,
    first_alpha: Vec<Var>,
}

impl Model {
    /// Glorot-uniform weights from `config.seed`; biases and the output head
    /// start at zero, so every cell starts from p = 0.5.
    pub fn init(config: &ModelConfig, n_features: usize) -> Result<Self> {
        config.validate()?;
        let mut r = rng(derive_seed(config.seed, &[0x1417]));
        let mut values = Vec::new();
        let h = config.hidden;
        let out_dim = match config.kind {
            ModelKind::Gat => {
                let mut d_in = n_features;
                for layer in 0..config.layers {
                    for _ in 0..config.heads {
                        values.push(glorot(d_in, h, &mut r));
                        values.push(glorot(h, 1, &mut r));
                        values.push(glorot(h, 1, &mut r));
                    }
                    d_in = if layer + 1 < config.layers { h * config.heads } else { h };
                }
                h
            }
            ModelKind::Gcn => {
                let mut d_in = n_features;
                for _ in 0..config.layers {
                    values.push(glorot(d_in, h, &mut r));
                    d_in = h;
                }
                h
            }
            ModelKind::Nn => {
                values.push(glorot(n_features, h, &mut r));
                values.push(Tensor::zeros(1, h));
                h
            }
        };
        values.push(Tensor::zeros(out_dim, 1));
        values.push(Tensor::zeros(1, 1));
        Ok(Self {
            config: config.clone(),
            params: ParamSet::new(values),
        })
    }

    /// Same architecture with every parameter set to zero.
    pub fn zeros(config: &ModelConfig, n_features: usize) -> Result<Self> {
        let mut m = Self::init(config, n_features)?;
        for t in &mut m.params.values {
            t.fill(0.0);
        }
        Ok(m)
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], x: &Tensor, g: &PreparedGraph) -> Result<Forward> {
        let c = &self.config;
        let x = tape.constant(x.clone());
        let mut k = 0;
        let mut first_alpha = Vec::new();
        let h = match c.kind {
            ModelKind::Gat => {
                let mut h = x;
                for layer in 0..c.layers {
                    let mut outs = Vec::with_capacity(c.heads);
                    for _ in 0..c.heads {
                        let (w, a1, a2) = (vars[k], vars[k + 1], vars[k + 2]);
                        k += 3;
                        let (out, alpha) = gat_head(tape, h, w, a1, a2, g)?;
                        if layer == 0 {
                            first_alpha.push(alpha);
                        }
                        outs.push(out);
                    }
                    h = if layer + 1 < c.layers {
                        tape.concat_cols(&outs)?
                    } else {
                        tape.mean_of(&outs)?
                    };
                }
                h
            }
            ModelKind::Gcn => {
                let norm = tape.constant(g.gcn_norm.clone());
                let mut h = x;
                for _ in 0..c.layers {
                    let agg = tape.matmul(norm, h)?;
                    let z = tape.matmul(agg, vars[k])?;
                    k += 1;
                    h = tape.relu(z);
                }
                h
            }
            ModelKind::Nn => {
                let z = tape.matmul(x, vars[0])?;
                let z = tape.add_bias(z, vars[1])?;
                k = 2;
                tape.relu(z)
            }
        };
        let logits = tape.matmul(h, vars[k])?;
        let logits = tape.add_bias(logits, vars[k + 1])?;
        Ok(Forward {
            probs: tape.sigmoid(logits),
            first_alpha,
        })
    }

    /// Class-1 probabilities, one per node.
    pub fn predict(&self, x: &Tensor, g: &PreparedGraph) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = self.bind_const(&mut tape);
        let f = self.forward(&mut tape, &vars, x, g)?;
        Ok(tape.value(f.probs).data().to_vec())
    }

    pub fn predict_sample(&self, s: &PreparedSample) -> Result<Vec<f64>> {
        self.predict(&s.x, &s.graph)
    }

    /// First-layer attention matrices, one `N x N` row-stochastic matrix per
    /// head (row = destination). Empty for models without attention.
    pub fn attention(&self, x: &Tensor, g: &PreparedGraph) -> Result<Vec<Tensor>> {
        let mut tape = Tape::new();
        let vars = self.bind_const(&mut tape);
        let f = self.forward(&mut tape, &vars, x, g)?;
        Ok(f.first_alpha.iter().map(|&a| tape.value(a).clone()).collect())
    }

    fn bind_const(&self, tape: &mut Tape) -> Vec<Var> {
        self.params
            .values
            .iter()
            .map(|t| tape.constant(t.clone()))
            .collect()
    }

    /// Weighted BCE of one sample; gradients are accumulated into
    /// `self.params.grads` when `backprop` is set.
    pub fn loss(&mut self, s: &PreparedSample, backprop: bool) -> Result<f64> {
        let mut tape = Tape::new();
        let vars = if backprop {
            self.params.bind(&mut tape)
        } else {
            self.bind_const(&mut tape)
        };
        let f = self.forward(&mut tape, &vars, &s.x, &s.graph)?;
        let l = tape.bce_loss(f.probs, s.y.clone(), s.weights.clone())?;
        let value = tape.value(l).item();
        if backprop {
            tape.backward(l)?;
            self.params.collect_grads(&tape, &vars);
        }
        Ok(value)
    }

    pub fn mean_loss(&mut self, samples: &[PreparedSample]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            total += self.loss(s, false)?;
        }
        Ok(total / samples.len() as f64)
    }
}

fn gat_head(tape: &mut Tape, x: Var, w: Var, a1: Var, a2: Var, g: &PreparedGraph) -> Result<(Var, Var)> {
    let h = tape.matmul(x, w)?;
    let s_dst = tape.matmul(h, a1)?;
    let s_src = tape.matmul(h, a2)?;
    let e = tape.outer_sum(s_dst, s_src)?;
    let mut e = tape.leaky_relu(e, LEAKY_SLOPE);
    if let Some(scale) = &g.score_scale {
        e = tape.mul_const(e, scale.clone())?;
    }
    let alpha = tape.masked_softmax(e, g.mask.clone())?;
    let agg = tape.matmul(alpha, h)?;
    Ok((tape.relu(agg), alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub final_train_loss: f64,
}

/// Adam over the training samples (one update per sample, visited in a
/// seeded shuffled order each epoch), early-stopped on validation loss.
/// Returns the parameters of the best validation epoch.
pub fn train(config: &ModelConfig, train: &[PreparedSample], val: &[PreparedSample]) -> Result<TrainOutcome> {
    train_from(config, None, train, val)
}

/// As [`train`], starting from `init` instead of a fresh initialization when
/// its shapes fit the configuration.
pub fn train_from(
    config: &ModelConfig,
    init: Option<&ParamSet>,
    train: &[PreparedSample],
    val: &[PreparedSample],
) -> Result<TrainOutcome> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidConfig("train and validation sets must be non-empty".into()));
    }
    let n_features = train[0].x.cols();
    let mut model = Model::init(config, n_features)?;
    if let Some(p) = init {
        let fits = p.len() == model.params.len()
            && p.values.iter().zip(&model.params.values).all(|(a, b)| a.shape() == b.shape());
        if fits {
            model.params = ParamSet::new(p.values.clone());
        }
    }
    let mut adam = AdamState::new(AdamConfig::new(config.lr, config.weight_decay), &model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = rng(derive_seed(config.seed, &[0x5eed]));
    let mut best: Option<(f64, usize, ParamSet)> = None;
    let mut stale = 0;
    let mut epochs_run = 0;
    let mut final_train_loss = f64::NAN;
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for &i in &order {
            let l = model.loss(&train[i], true)?;
            if !l.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += l;
            adam.step(&mut model.params);
        }
        if !model.params.all_finite() {
            return Err(Error::Divergence { epoch });
        }
        final_train_loss = total / train.len() as f64;
        epochs_run = epoch + 1;
        let v = model.mean_loss(val)?;
        if !v.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let improved = best.as_ref().is_none_or(|(b, _, _)| v < *b);
        if improved {
            best = Some((v, epoch, model.params.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            break;
        }
    }
    let (best_val_loss, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model: Model {
            config: config.clone(),
            params,
        },
        best_val_loss,
        best_epoch,
        epochs_run,
        final_train_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellLog {
    pub index: usize,
    pub config: ModelConfig,
    pub val_loss: Option<f64>,
    pub epochs_run: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best_index: usize,
    pub best: TrainOutcome,
    pub log: Vec<CellLog>,
    /// Best-validation parameters of every cell; `None` for diverged cells.
    pub trained: Vec<Option<ParamSet>>,
}

/// Trains every cell and keeps the lowest validation loss; ties go to the
/// earlier cell.
pub fn grid_search(cells: &[ModelConfig], train_set: &[PreparedSample], val: &[PreparedSample]) -> Result<GridOutcome> {
    grid_search_from(cells, &[], train_set, val)
}

/// As [`grid_search`], with cell `k` starting from `inits[k]` when present.
pub fn grid_search_from(
    cells: &[ModelConfig],
    inits: &[Option<ParamSet>],
    train_set: &[PreparedSample],
    val: &[PreparedSample],
) -> Result<GridOutcome> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("empty model grid".into()));
    }
    let mut log = Vec::with_capacity(cells.len());
    let mut best: Option<(usize, TrainOutcome)> = None;
    let mut trained = Vec::with_capacity(cells.len());
    for (index, cell) in cells.iter().enumerate() {
        let init = inits.get(index).and_then(Option::as_ref);
        match train_from(cell, init, train_set, val) {
            Ok(out) => {
                trained.push(Some(out.model.params.clone()));
                log.push(CellLog {
                    index,
                    config: cell.clone(),
                    val_loss: Some(out.best_val_loss),
                    epochs_run: out.epochs_run,
                    error: None,
                });
                if best
                    .as_ref()
                    .is_none_or(|(_, b)| out.best_val_loss < b.best_val_loss)
                {
                    best = Some((index, out));
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                trained.push(None);
                log.push(CellLog {
                    index,
                    config: cell.clone(),
                    val_loss: None,
                    epochs_run: 0,
                    error: Some(alloc::format!("{e}")),
                })
            }
            Err(e) => return Err(e),
        }
    }
    let (best_index, best) = best.ok_or(Error::AllCellsFailed)?;
    Ok(GridOutcome {
        best_index,
        best,
        log,
        trained,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionEntry {
    pub src: String,
    pub dst: String,
    pub head: usize,
    pub alpha: f64,
}

/// First-layer attention of one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSnapshot {
    pub date: NaiveDate,
    pub entries: Vec<AttentionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEdge {
    pub src: String,
    pub dst: String,
    pub mean_alpha: f64,
    pub per_head: Vec<f64>,
}

/// Full first-layer snapshot (including self-loops) for `firms`-labelled nodes.
pub fn attention_snapshot(model: &Model, s: &PreparedSample, firms: &[String]) -> Result<AttentionSnapshot> {
    let alphas = model.attention(&s.x, &s.graph)?;
    let n = s.graph.n;
    let mut entries = Vec::new();
    for dst in 0..n {
        for src in 0..n {
            if !s.graph.mask[dst * n + src] {
                continue;
            }
            for (head, a) in alphas.iter().enumerate() {
                entries.push(AttentionEntry {
                    src: firms[src].clone(),
                    dst: firms[dst].clone(),
                    head,
                    alpha: a.get(dst, src),
                });
            }
        }
    }
    Ok(AttentionSnapshot { date: s.date, entries })
}

/// The `k` directed non-self edges with the largest head-averaged
/// first-layer attention. Ties keep `(dst, src)` index order.
pub fn extract_top_attention(model: &Model, s: &PreparedSample, k: usize, firms: &[String]) -> Result<Vec<RankedEdge>> {
    if model.config.kind != ModelKind::Gat {
        return Err(Error::InvalidConfig("attention needs a GAT model".into()));
    }
    let alphas = model.attention(&s.x, &s.graph)?;
    let n = s.graph.n;
    let mut ranked = Vec::new();
    for dst in 0..n {
        for src in 0..n {
            if src == dst || !s.graph.mask[dst * n + src] {
                continue;
            }
            let per_head: Vec<f64> = alphas.iter().map(|a| a.get(dst, src)).collect();
            let mean_alpha = per_head.iter().sum::<f64>() / per_head.len() as f64;
            ranked.push(RankedEdge {
                src: firms[src].clone(),
                dst: firms[dst].clone(),
                mean_alpha,
                per_head,
            });
        }
    }
    ranked.sort_by(|a, b| b.mean_alpha.total_cmp(&a.mean_alpha));
    ranked.truncate(k.max(1));
    Ok(ranked)
}

/// Random small instance for gradient checks: 6..=12 nodes, 8 features,
/// edge probability 0.35, edge weights used on even seeds.
pub fn gradcheck_instance(seed: u64) -> Result<PreparedSample> {
    let mut r = rng(seed);
    let n = r.random_range(6..=12);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < 0.35 {
                edges.push((i, j, r.random_range(1..4)));
            }
        }
    }
    let g = CoverageGraph::from_edges(0, n, 252, edges)?;
    let x = Tensor::from_vec(n, N_FEATURES, (0..n * N_FEATURES).map(|_| r.random_range(-2.0..2.0)).collect())?;
    let y: Vec<f64> = (0..n).map(|_| f64::from(r.random::<bool>())).collect();
    Ok(PreparedSample {
        day: 0,
        date: NaiveDate::default(),
        x,
        graph: Arc::new(PreparedGraph::new(&g, seed % 2 == 0)),
        weights: class_weights(&y).into(),
        y: y.into(),
    })
}

/// Analytic gradients of a freshly initialized `kind` model with 2 heads and
/// hidden width 6 against central differences on [`gradcheck_instance`].
pub fn check_gradients(kind: ModelKind, layers: usize, seed: u64, step: f64) -> Result<GradCheck> {
    let config = ModelConfig {
        layers,
        heads: 2,
        hidden: 6,
        seed,
        ..ModelConfig::new(kind)
    };
    let s = gradcheck_instance(seed)?;
    let mut model = Model::init(&config, N_FEATURES)?;
    model.loss(&s, true)?;
    let grads = model.params.grads.clone();
    let mut probe = model.clone();
    finite_difference_check(&model.params, &grads, step, |p| {
        probe.params.values.clone_from(&p.values);
        probe.loss(&s, false)
    })
}
