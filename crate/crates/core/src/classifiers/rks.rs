use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, LabeledSet};
use crate::error::{Error, Result};
use crate::rff::{median_heuristic, sample_map, RffMap};

/// Rows sampled for the median-distance bandwidth.
pub const MEDIAN_SAMPLE: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RksParams {
    /// Number of random frequencies; the lifted dimension is `2k`.
    pub k: usize,
    /// Kernel bandwidth. `None` picks the median pairwise distance.
    pub sigma: Option<f64>,
    pub reg_lambda: f64,
    pub seed: u64,
}

impl Default for RksParams {
    fn default() -> Self {
        RksParams {
            k: 250,
            sigma: None,
            reg_lambda: 1e-3,
            seed: 0,
        }
    }
}

/// Random-feature ridge classifier.
///
/// Scores are `Wᵀ z(x) + c` where `W` solves the ridge system on centred
/// lifted features and one-hot targets and `c` is the matching intercept.
/// As `reg_lambda` grows, `W → 0` and `c` tends to the class frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct RksModel {
    pub map: RffMap,
    /// `2k × C`.
    pub weights: DMatrix<f64>,
    pub intercept: Vec<f64>,
    pub reg_lambda: f64,
}

pub fn train_rks(train: &LabeledSet, params: &RksParams) -> Result<RksModel> {
    train.require_all_classes()?;
    if params.k == 0 {
        return Err(Error::Config("RKS needs k >= 1".into()));
    }
    if !(params.reg_lambda >= 0.0) {
        return Err(Error::Config(format!(
            "ridge coefficient must be non-negative, got {}",
            params.reg_lambda
        )));
    }
    let sigma = match params.sigma {
        Some(s) => s,
        None => {
            let s = median_heuristic(&train.features, MEDIAN_SAMPLE, params.seed);
            log::info!("RKS bandwidth from median heuristic: {s}");
            s
        }
    };
    let map = sample_map(params.seed, params.k, sigma, train.dim())?;
    let mut z = map.transform_rows(&train.features)?;
    let (n, p) = z.shape();
    let c = train.n_classes;

    let mut y = DMatrix::<f64>::zeros(n, c);
    for (i, &l) in train.labels.iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    let z_mean: DVector<f64> = z.row_mean().transpose();
    let y_mean: DVector<f64> = y.row_mean().transpose();
    for mut row in z.row_iter_mut() {
        row -= z_mean.transpose();
    }
    for mut row in y.row_iter_mut() {
        row -= y_mean.transpose();
    }

    // primal (p × p) or dual (n × n) normal equations, whichever is smaller
    let singular =
        || Error::Numerical("ridge system is singular; use a positive reg_lambda".into());
    let weights = if p <= n {
        let mut gram = z.transpose() * &z;
        for i in 0..p {
            gram[(i, i)] += params.reg_lambda;
        }
        gram.cholesky().ok_or_else(singular)?.solve(&(z.transpose() * &y))
    } else {
        let mut gram = &z * z.transpose();
        for i in 0..n {
            gram[(i, i)] += params.reg_lambda;
        }
        z.transpose() * gram.cholesky().ok_or_else(singular)?.solve(&y)
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical(
            "ridge solution is not finite; use a larger reg_lambda".into(),
        ));
    }
    let intercept = (y_mean - weights.transpose() * z_mean).iter().copied().collect();
    Ok(RksModel {
        map,
        weights,
        intercept,
        reg_lambda: params.reg_lambda,
    })
}

impl Classifier for RksModel {
    fn n_classes(&self) -> usize {
        self.weights.ncols()
    }

    fn input_dim(&self) -> usize {
        self.map.input_dim()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x)?;
        let z = self.map.transform(x)?;
        Ok((0..self.n_classes())
            .map(|c| {
                self.weights
                    .column(c)
                    .iter()
                    .zip(&z)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + self.intercept[c]
            })
            .collect())
    }
}
