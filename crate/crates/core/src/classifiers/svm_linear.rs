use nalgebra::DMatrix;
use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledSet, SvmKind, SvmModel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSvmParams {
    /// Soft-margin constant; the primal regulariser is `λ = 1 / (C n)`.
    pub c_reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams {
            c_reg: 1.0,
            epochs: 100,
            seed: 0,
        }
    }
}

/// `λ/2 (‖w‖² + b²) + mean_i max(0, 1 − y_i (wᵀx_i + b))`.
///
/// The bias is regularised because it is learned as the weight of a
/// constant feature.
pub fn hinge_objective(w: &[f64], b: f64, x: &DMatrix<f64>, y: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let loss: f64 = (0..x.nrows())
        .map(|i| {
            let f: f64 = x.row(i).iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
            (1.0 - y[i] * f).max(0.0)
        })
        .sum();
    reg + loss / x.nrows() as f64
}

/// Pegasos with step `1 / (λ t)` over the given visiting order; returns the
/// average of the iterates from the second half of the run.
fn pegasos(x: &DMatrix<f64>, y: &[f64], lambda: f64, order: &[usize]) -> (Vec<f64>, f64) {
    let d = x.ncols();
    // last slot is the bias weight on a constant feature
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let start_avg = order.len() / 2;
    let radius = 1.0 / lambda.sqrt();

    for (step, &i) in order.iter().enumerate() {
        let t = (step + 1) as f64;
        let eta = 1.0 / (lambda * t);
        let row = x.row(i);
        let margin = y[i] * (row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + w[d]);
        let shrink = 1.0 - eta * lambda;
        for v in w.iter_mut() {
            *v *= shrink;
        }
        if margin < 1.0 {
            let g = eta * y[i];
            for (v, a) in w.iter_mut().zip(row.iter()) {
                *v += g * a;
            }
            w[d] += g;
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let s = radius / norm;
            for v in w.iter_mut() {
                *v *= s;
            }
        }
        if step >= start_avg {
            averaged += 1;
            let a = 1.0 / averaged as f64;
            for (m, v) in avg.iter_mut().zip(&w) {
                *m += (v - *m) * a;
            }
        }
    }
    let b = avg.pop().unwrap_or(0.0);
    (avg, b)
}

fn visiting_order(n: usize, epochs: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n * epochs);
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        idx.shuffle(&mut rng);
        order.extend_from_slice(&idx);
    }
    order
}

/// Trains one Pegasos machine per class. Every machine sees the same seeded
/// visiting order, so permuting class ids permutes the machines exactly.
pub fn train_svm_linear(train: &LabeledSet, params: &LinearSvmParams) -> Result<SvmModel> {
    train.require_all_classes()?;
    if !(params.c_reg > 0.0) {
        return Err(Error::Config(format!(
            "C must be positive, got {}",
            params.c_reg
        )));
    }
    if params.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    let n = train.len();
    let lambda = 1.0 / (params.c_reg * n as f64);
    let order = visiting_order(n, params.epochs, params.seed);
    let c = train.n_classes;
    let d = train.dim();

    let solve = |class: usize| {
        let y: Vec<f64> = train
            .labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        pegasos(&train.features, &y, lambda, &order)
    };

    let machines: Vec<(Vec<f64>, f64)> = if c == 2 {
        // the "rest" machine of a two-class problem is the negated first one
        let (w, b) = solve(0);
        let neg = (w.iter().map(|v| -v).collect(), -b);
        vec![(w, b), neg]
    } else {
        (0..c).into_par_iter().map(solve).collect()
    };

    let mut weights = DMatrix::zeros(c, d);
    let mut bias = Vec::with_capacity(c);
    for (k, (w, b)) in machines.into_iter().enumerate() {
        for (j, v) in w.into_iter().enumerate() {
            weights[(k, j)] = v;
        }
        bias.push(b);
    }
    Ok(SvmModel {
        kind: SvmKind::Linear,
        n_classes: c,
        dim: d,
        weights,
        support_vectors: DMatrix::zeros(0, d),
        dual_coef: DMatrix::zeros(0, c),
        bias,
        gamma: 0.0,
    })
}
