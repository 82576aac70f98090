//! Soft-margin kernel SVM trained by sequential minimal optimisation.
//!
//! Dual: `min ½ αᵀQα − eᵀα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C`, `Q_ij = y_i y_j K_ij`.
//! Working pairs are chosen by maximal violation for the first index and
//! second-order gain for the second; iteration stops once the violating-pair
//! gap `m(α) − M(α)` drops below the tolerance.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_gamma, LabeledSet, SvmKind, SvmModel};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Largest training set whose kernel matrix is held in memory.
pub const MAX_KERNEL_ROWS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSvmParams {
    pub c_reg: f64,
    /// `None` uses `1 / (d · var(features))`.
    pub gamma: Option<f64>,
    /// Stopping tolerance on the KKT gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        RbfSvmParams {
            c_reg: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

/// Solution of one binary dual problem.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySmo {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final violating-pair gap.
    pub gap: f64,
}

fn gaussian_gram(x: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let n = x.nrows();
    let sq: Vec<f64> = (0..n).map(|i| x.row(i).norm_squared()).collect();
    let dots = x * x.transpose();
    let mut k = DMatrix::zeros(n, n);
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let d2 = (sq[i] + sq[j] - 2.0 * dots[(i, j)]).max(0.0);
                    (-gamma * d2).exp()
                })
                .collect()
        })
        .collect();
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            k[(i, j)] = v;
        }
    }
    k
}

/// SMO on a precomputed kernel matrix with labels `y ∈ {−1, +1}`.
pub fn train_binary_smo(
    kernel: &DMatrix<f64>,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BinarySmo> {
    let n = y.len();
    if kernel.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kernel.nrows(),
        });
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("kernel matrix is not finite".into()));
    }
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // first index: maximal violation over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        // second index: best second-order gain over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let yg = y[t] * grad[t];
                if yg >= gmax2 {
                    gmax2 = yg;
                }
                let diff = gmax + yg;
                if diff > 0.0 {
                    let quad = kernel[(i, i)] + kernel[(t, t)] - 2.0 * kernel[(i, t)];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gap >= tol => (i, j),
            _ => break,
        };
        if iterations >= max_iter {
            log::warn!("SMO reached {max_iter} iterations with gap {gap}");
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * kernel[(i, j)];
        if y[i] != y[j] {
            let quad = (kernel[(i, i)] + kernel[(j, j)] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (kernel[(i, i)] + kernel[(j, j)] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel[(t, i)] * di + y[j] * kernel[(t, j)] * dj);
        }
    }

    // bias from free variables, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    Ok(BinarySmo {
        alpha,
        bias: -rho,
        iterations,
        gap: gap.max(0.0),
    })
}

pub fn train_svm_rbf(train: &LabeledSet, params: &RbfSvmParams) -> Result<SvmModel> {
    train.require_all_classes()?;
    if !(params.c_reg > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {}", params.c_reg)));
    }
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(&train.features));
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let n = train.len();
    if n > MAX_KERNEL_ROWS {
        return Err(Error::Config(format!(
            "{n} training rows exceed the in-memory kernel limit of {MAX_KERNEL_ROWS}"
        )));
    }
    let kernel = gaussian_gram(&train.features, gamma);
    let c = train.n_classes;

    let solve = |class: usize| -> Result<BinarySmo> {
        let y: Vec<f64> = train
            .labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        train_binary_smo(&kernel, &y, params.c_reg, params.tol, params.max_iter)
    };
    // per-class coefficients α_i y_i
    let coef_of = |class: usize, sol: &BinarySmo| -> Vec<f64> {
        sol.alpha
            .iter()
            .zip(&train.labels)
            .map(|(a, &l)| if l == class { *a } else { -*a })
            .collect()
    };

    let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(c);
    let mut bias = Vec::with_capacity(c);
    if c == 2 {
        let sol = solve(0)?;
        let first = coef_of(0, &sol);
        coefs.push(first.iter().map(|v| -v).collect());
        coefs.insert(0, first);
        bias.extend([sol.bias, -sol.bias]);
    } else {
        let sols: Vec<BinarySmo> = (0..c).into_par_iter().map(solve).collect::<Result<_>>()?;
        for (k, sol) in sols.iter().enumerate() {
            coefs.push(coef_of(k, sol));
            bias.push(sol.bias);
        }
    }

    let support: Vec<usize> = (0..n)
        .filter(|&i| coefs.iter().any(|col| col[i] != 0.0))
        .collect();
    let d = train.dim();
    let support_vectors = DMatrix::from_fn(support.len(), d, |r, j| train.features[(support[r], j)]);
    let dual_coef = DMatrix::from_fn(support.len(), c, |r, k| coefs[k][support[r]]);
    Ok(SvmModel {
        kind: SvmKind::Rbf,
        n_classes: c,
        dim: d,
        weights: DMatrix::zeros(0, d),
        support_vectors,
        dual_coef,
        bias,
        gamma,
    })
}
