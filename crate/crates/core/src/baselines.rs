//! Comparison signals: equal-weight market, MACD averaging, neighbour MACD
//! averaging over the coverage graph, and the feed-forward network.

use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureMatrix, MACD_COLUMNS};
use crate::gnn::{Model, ModelKind, PreparedSample};
use crate::graphs::CoverageGraph;
use crate::{Error, Result};

/// Per-firm scores on one date; higher means a stronger buy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalVector {
    pub day: usize,
    pub date: NaiveDate,
    pub scores: Vec<f64>,
}

impl SignalVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn long_only_signal(n: usize, day: usize, date: NaiveDate) -> SignalVector {
    SignalVector {
        day,
        date,
        scores: alloc::vec![1.0; n],
    }
}

fn macd_mean(f: &FeatureMatrix, firm: usize) -> f64 {
    let row = f.row(firm);
    row[MACD_COLUMNS].iter().sum::<f64>() / MACD_COLUMNS.len() as f64
}

/// Mean of the three MACD columns per firm.
pub fn macd_signal_avg(f: &FeatureMatrix) -> SignalVector {
    SignalVector {
        day: f.day,
        date: f.date,
        scores: (0..f.n_firms()).map(|i| macd_mean(f, i)).collect(),
    }
}

/// Edge-weighted mean of the neighbours' MACD composite; isolated firms get 0.
pub fn analyst_matrix_signal(f: &FeatureMatrix, g: &CoverageGraph) -> Result<SignalVector> {
    if g.n() != f.n_firms() {
        return Err(Error::ShapeMismatch {
            op: "analyst_matrix_signal",
            left: (f.n_firms(), crate::features::N_FEATURES),
            right: (g.n(), g.n()),
        });
    }
    let mom: Vec<f64> = (0..f.n_firms()).map(|i| macd_mean(f, i)).collect();
    let scores = g
        .adjacency_lists()
        .iter()
        .map(|nbrs| {
            let total: f64 = nbrs.iter().map(|&(_, w)| w as f64).sum();
            if total == 0.0 {
                0.0
            } else {
                nbrs.iter().map(|&(j, w)| w as f64 * mom[j]).sum::<f64>() / total
            }
        })
        .collect();
    Ok(SignalVector {
        day: f.day,
        date: f.date,
        scores,
    })
}

/// Probabilities of a trained feed-forward model on one sample; the graph of
/// the sample is ignored.
pub fn nn_signal(model: &Model, sample: &PreparedSample) -> Result<SignalVector> {
    if model.config.kind != ModelKind::Nn {
        return Err(Error::InvalidConfig("nn_signal needs a feed-forward model".into()));
    }
    Ok(SignalVector {
        day: sample.day,
        date: sample.date,
        scores: model.predict_sample(sample)?,
    })
}
