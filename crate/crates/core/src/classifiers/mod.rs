//! One-vs-rest classifiers over fixed-length feature vectors.
//!
//! * [`RksModel`]: random Fourier features followed by ridge regression on
//!   one-hot targets.
//! * [`SvmModel`] with [`SvmKind::Linear`]: Pegasos subgradient descent on
//!   the primal hinge loss.
//! * [`SvmModel`] with [`SvmKind::Rbf`]: SMO on the dual with a Gaussian kernel.

mod io;
mod rks;
mod svm_linear;
mod svm_rbf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_model, read_model, save_model, write_model, Model};
pub use rks::{train_rks, RksModel, RksParams};
pub use svm_linear::{hinge_objective, train_svm_linear, LinearSvmParams};
pub use svm_rbf::{train_binary_smo, train_svm_rbf, BinarySmo, RbfSvmParams};

/// Feature rows with dense class indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Config("labeled set is empty".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("features contain non-finite values".into()));
        }
        Ok(LabeledSet {
            features,
            labels,
            n_classes,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Config("ragged feature rows".into()));
        }
        let features = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(features, labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Training sets must contain every class at least once.
    pub(crate) fn require_all_classes(&self) -> Result<()> {
        if let Some(c) = self.class_counts().iter().position(|&n| n == 0) {
            return Err(Error::Config(format!(
                "class {c} has no training examples"
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        Ok(())
    }
}

/// Anything that produces one score per class.
pub trait Classifier {
    fn n_classes(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Argmax of [`Classifier::scores`], ties going to the lowest class index.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvmKind {
    Linear,
    Rbf,
}

/// One-vs-rest SVM: exactly one binary machine per class.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub kind: SvmKind,
    pub n_classes: usize,
    pub dim: usize,
    /// Linear: `C × d` weights. Empty for RBF.
    pub weights: DMatrix<f64>,
    /// RBF: support vectors, `n_sv × d`. Empty for linear.
    pub support_vectors: DMatrix<f64>,
    /// RBF: `α_i y_i` per support vector and class, `n_sv × C`.
    pub dual_coef: DMatrix<f64>,
    pub bias: Vec<f64>,
    pub gamma: f64,
}

impl Classifier for SvmModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        match self.kind {
            SvmKind::Linear => Ok((0..self.n_classes)
                .map(|c| {
                    self.weights
                        .row(c)
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
                        + self.bias[c]
                })
                .collect()),
            SvmKind::Rbf => {
                let kx: Vec<f64> = self
                    .support_vectors
                    .row_iter()
                    .map(|sv| {
                        let d2: f64 = sv.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-self.gamma * d2).exp()
                    })
                    .collect();
                Ok((0..self.n_classes)
                    .map(|c| {
                        self.dual_coef
                            .column(c)
                            .iter()
                            .zip(&kx)
                            .map(|(a, k)| a * k)
                            .sum::<f64>()
                            + self.bias[c]
                    })
                    .collect())
            }
        }
    }
}

/// Accuracy and confusion counts (`confusion[true][predicted]`).
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

pub fn evaluate<M: Classifier + ?Sized>(model: &M, test: &LabeledSet) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty test set".into()));
    }
    let c = model.n_classes().max(test.n_classes);
    let mut confusion = vec![vec![0usize; c]; c];
    let mut predictions = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let p = model.predict(&test.row(i))?;
        confusion[test.labels[i]][p] += 1;
        predictions.push(p);
    }
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    Ok(Evaluation {
        accuracy: correct as f64 / test.len() as f64,
        confusion,
        predictions,
    })
}

/// Default RBF width `1 / (d · var(features))`, variance over all entries.
pub fn default_gamma(features: &DMatrix<f64>) -> f64 {
    let n = features.len() as f64;
    let mean = features.iter().sum::<f64>() / n;
    let var = features.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let d = features.ncols() as f64;
    if var > 0.0 {
        1.0 / (d * var)
    } else {
        1.0 / d
    }
}
