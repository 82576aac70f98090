//! Random Fourier features for the Gaussian kernel ("random kitchen sinks").
//!
//! `z(x) = sqrt(1/k) [cos(xᵀω_1) .. cos(xᵀω_k), sin(xᵀω_1) .. sin(xᵀω_k)]`
//! with `ω_i ~ N(0, σ⁻² I)`, so that `z(x)ᵀz(y) ≈ exp(−‖x−y‖² / 2σ²)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything needed to regenerate a map bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RffParams {
    pub seed: u64,
    pub k: usize,
    pub sigma: f64,
    pub d: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RffMap {
    params: RffParams,
    /// `d × k`; column `i` is the frequency vector `ω_i`.
    omega: DMatrix<f64>,
}

/// Samples `k` Gaussian frequency vectors of dimension `d`.
///
/// Column `i` is drawn from its own ChaCha stream, so the matrix does not
/// depend on the order in which columns are generated.
pub fn sample_map(seed: u64, k: usize, sigma: f64, d: usize) -> Result<RffMap> {
    RffMap::from_params(RffParams { seed, k, sigma, d })
}

impl RffMap {
    pub fn from_params(params: RffParams) -> Result<Self> {
        let RffParams { seed, k, sigma, d } = params;
        if k == 0 || d == 0 {
            return Err(Error::Config(format!(
                "random feature map needs k >= 1 and d >= 1, got k={k}, d={d}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        let inv = 1.0 / sigma;
        let mut omega = DMatrix::zeros(d, k);
        for j in 0..k {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            for i in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                omega[(i, j)] = g * inv;
            }
        }
        Ok(RffMap { params, omega })
    }

    pub fn params(&self) -> RffParams {
        self.params
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn input_dim(&self) -> usize {
        self.params.d
    }

    pub fn output_dim(&self) -> usize {
        2 * self.params.k
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                got: x.len(),
            });
        }
        let k = self.params.k;
        let scale = (1.0 / k as f64).sqrt();
        let mut z = vec![0.0; 2 * k];
        for (j, col) in self.omega.column_iter().enumerate() {
            let p: f64 = col.iter().zip(x).map(|(w, v)| w * v).sum();
            let (s, c) = p.sin_cos();
            z[j] = scale * c;
            z[k + j] = scale * s;
        }
        Ok(z)
    }

    /// Maps every row of `x` (`n × d`) to a row of the result (`n × 2k`).
    pub fn transform_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                got: x.ncols(),
            });
        }
        let k = self.params.k;
        let scale = (1.0 / k as f64).sqrt();
        let proj = x * &self.omega;
        let mut z = DMatrix::zeros(x.nrows(), 2 * k);
        for r in 0..x.nrows() {
            for j in 0..k {
                let (s, c) = proj[(r, j)].sin_cos();
                z[(r, j)] = scale * c;
                z[(r, k + j)] = scale * s;
            }
        }
        Ok(z)
    }
}

/// Exact Gaussian kernel value the map approximates.
pub fn gaussian_kernel(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Median pairwise Euclidean distance over a seeded subset of at most
/// `max_samples` rows. Falls back to 1 when all sampled rows coincide.
pub fn median_heuristic(x: &DMatrix<f64>, max_samples: usize, seed: u64) -> f64 {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    if idx.len() > max_samples {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(max_samples);
        idx.sort_unstable();
    }
    let mut dists = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push((x.row(i) - x.row(j)).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}
