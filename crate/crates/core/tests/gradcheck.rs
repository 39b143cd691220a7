use std::sync::Arc;

use chrono::NaiveDate;
use covnet_core::autodiff::{finite_difference_check, Tensor};
use covnet_core::gnn::{class_weights, Model, ModelConfig, ModelKind, PreparedGraph, PreparedSample};
use covnet_core::graphs::CoverageGraph;
use covnet_core::seed::rng;
use rand::Rng;

fn instance(seed: u64) -> PreparedSample {
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
    let g = CoverageGraph::from_edges(0, n, 252, edges).unwrap();
    let x = Tensor::from_vec(n, 8, (0..n * 8).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap();
    let y: Vec<f64> = (0..n).map(|_| f64::from(r.random::<bool>())).collect();
    PreparedSample {
        day: 0,
        date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        x,
        graph: Arc::new(PreparedGraph::new(&g, seed % 2 == 0)),
        weights: class_weights(&y).into(),
        y: y.into(),
    }
}

fn check(kind: ModelKind, layers: usize, seed: u64) -> f64 {
    let config = ModelConfig {
        kind,
        layers,
        heads: 2,
        hidden: 6,
        seed,
        ..ModelConfig::new(kind)
    };
    let s = instance(seed);
    let mut model = Model::init(&config, 8).unwrap();
    model.loss(&s, true).unwrap();
    let grads = model.params.grads.clone();
    let probe = model.clone();
    let out = finite_difference_check(&model.params, &grads, 1e-6, |p| {
        let mut m = Model {
            config: probe.config.clone(),
            params: p.clone(),
        };
        m.loss(&s, false)
    })
    .unwrap();
    assert_eq!(out.checked, model.params.size());
    out.max_rel_error
}

#[test]
fn two_layer_gat_matches_central_differences() {
    for seed in 0..20 {
        let err = check(ModelKind::Gat, 2, seed);
        assert!(err < 1e-3, "seed {seed}: {err}");
    }
}

#[test]
fn gcn_and_dense_match_central_differences() {
    for seed in 0..5 {
        assert!(check(ModelKind::Gcn, 2, seed) < 1e-3);
        assert!(check(ModelKind::Nn, 1, seed) < 1e-3);
    }
}
