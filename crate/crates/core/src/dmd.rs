//! Exact dynamic mode decomposition of a snapshot sequence.
//!
//! Given snapshots `x_1 .. x_M`, the pairs `X_a = [x_1 .. x_{M-1}]` and
//! `X_b = [x_2 .. x_M]` are related by a best-fit linear operator `A` with
//! `X_b ≈ A X_a`. The operator is never formed; instead it is projected onto
//! the leading left singular vectors of `X_a`:
//!
//! ```text
//! X_a ≈ Q Σ Bᵀ
//! C̃   = Qᵀ X_b B Σ⁻¹          (J × J)
//! C̃ T = T Ω                   (eigenpairs of the reduced operator)
//! Φ   = X_b B Σ⁻¹ T           (exact DMD modes)
//! ```
//!
//! Amplitudes are the least-squares coefficients of the first snapshot in
//! the mode basis, and `Φ diag(b) λᵗ` reconstructs `x_{t+1}`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::color_flow::SnapshotMatrix;
use crate::error::{Error, Result};
use crate::linalg::{eig_real, thin_svd, SvdFactors};

/// Default background threshold on `|log λ| / dt`.
pub const DEFAULT_BACKGROUND_EPS: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct DmdResult {
    pub eigenvalues: Vec<Complex64>,
    /// `N × J`, unit 2-norm columns.
    pub modes: DMatrix<Complex64>,
    pub amplitudes: Vec<Complex64>,
    pub svd: SvdFactors,
    /// Sampling interval of the pseudo-time axis.
    pub dt: f64,
    /// Reduced operator `C̃`.
    pub reduced_operator: DMatrix<f64>,
    /// Eigenvectors `T` of `C̃`, columns ordered like `eigenvalues`.
    pub reduced_eigenvectors: DMatrix<Complex64>,
}

impl DmdResult {
    /// Truncation rank actually used.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Continuous-time frequencies `log(λ) / dt`.
    pub fn frequencies(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|l| l.ln() / self.dt).collect()
    }

    /// `Φ · diag(b) · λᵗ`.
    pub fn reconstruct(&self, t: u32) -> DVector<Complex64> {
        let coeffs = DVector::from_iterator(
            self.rank(),
            self.eigenvalues
                .iter()
                .zip(&self.amplitudes)
                .map(|(l, b)| b * l.powu(t)),
        );
        &self.modes * coeffs
    }

    /// Per-mode magnitudes for spectrum plots.
    pub fn spectrum(&self) -> Vec<SpectrumRow> {
        self.eigenvalues
            .iter()
            .zip(self.frequencies())
            .zip(&self.amplitudes)
            .enumerate()
            .map(|(i, ((l, w), b))| SpectrumRow {
                mode_index: i,
                re_lambda: l.re,
                im_lambda: l.im,
                abs_lambda: l.norm(),
                abs_omega: w.norm(),
                amplitude_abs: b.norm(),
            })
            .collect()
    }
}

/// Decomposes `snapshots` keeping at most `rank` modes, with `dt = 1`.
pub fn dmd(snapshots: &SnapshotMatrix, rank: usize) -> Result<DmdResult> {
    dmd_matrix(snapshots.data(), rank, 1.0)
}

pub fn dmd_matrix(x: &DMatrix<f64>, rank: usize, dt: f64) -> Result<DmdResult> {
    let (n, m) = x.shape();
    if m < 2 {
        return Err(Error::Config(format!("DMD needs at least 2 snapshots, got {m}")));
    }
    if rank == 0 || rank > n.min(m - 1) {
        return Err(Error::Config(format!(
            "DMD rank must lie in 1..={}, got {rank}",
            n.min(m - 1)
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let xa = x.columns(0, m - 1).into_owned();
    let xb = x.columns(1, m - 1).into_owned();

    let svd = thin_svd(&xa, rank)?;
    let r = svd.rank();

    let mut b_sinv = svd.b.clone();
    for (mut col, s) in b_sinv.column_iter_mut().zip(&svd.sigma) {
        col /= *s;
    }
    let projected = &xb * b_sinv;
    let reduced = svd.q.transpose() * &projected;
    let eigen = eig_real(&reduced)?;

    let order = spectral_order(&eigen.values);
    let values: Vec<Complex64> = order.iter().map(|&i| eigen.values[i]).collect();
    let t = DMatrix::from_fn(r, r, |i, j| eigen.vectors[(i, order[j])]);

    let projected_c = projected.map(|v| Complex64::new(v, 0.0));
    let q_c = svd.q.map(|v| Complex64::new(v, 0.0));
    let mut modes = &projected_c * &t;
    let reduced_scale = reduced.norm().max(1.0);
    for j in 0..r {
        let mut norm = modes.column(j).norm();
        // A zero eigenvalue annihilates its exact mode; use the projected mode instead.
        if norm <= 1e-10 * reduced_scale {
            let fallback = &q_c * t.column(j);
            modes.set_column(j, &fallback);
            norm = modes.column(j).norm();
        }
        modes.column_mut(j).unscale_mut(norm);
    }

    let x1 = x.column(0).map(|v| Complex64::new(v, 0.0));
    let amplitudes = least_squares(&modes, &x1)?;

    Ok(DmdResult {
        eigenvalues: values,
        modes,
        amplitudes,
        svd,
        dt,
        reduced_operator: reduced,
        reduced_eigenvectors: t,
    })
}

/// Indices sorting eigenvalues by descending magnitude, exact ties by
/// ascending phase. No tolerance on the magnitude: a near-degenerate pair
/// must not come out with magnitudes out of order.
fn spectral_order(values: &[Complex64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        values[j]
            .norm()
            .total_cmp(&values[i].norm())
            .then(values[i].arg().total_cmp(&values[j].arg()))
    });
    idx
}

fn least_squares(a: &DMatrix<Complex64>, rhs: &DVector<Complex64>) -> Result<Vec<Complex64>> {
    let svd = a.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-12;
    let sol = svd
        .solve(rhs, cutoff)
        .map_err(|e| Error::Numerical(format!("amplitude fit failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Background (near-unit-circle) and foreground parts of the snapshots.
#[derive(Clone, Debug)]
pub struct LowRankSparsePair {
    /// Real part of the background-mode reconstruction, `N × M`.
    pub lowrank: DMatrix<f64>,
    /// `X − lowrank`.
    pub sparse: DMatrix<f64>,
    pub eps: f64,
    /// Indices into the DMD eigenvalues that were classed as background.
    pub background_modes: Vec<usize>,
}

impl LowRankSparsePair {
    /// True when no mode met the background threshold (then `lowrank = 0`).
    pub fn no_background(&self) -> bool {
        self.background_modes.is_empty()
    }
}

pub fn lowrank_sparse_split(
    result: &DmdResult,
    snapshots: &DMatrix<f64>,
    eps: f64,
) -> Result<LowRankSparsePair> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!(
            "background threshold must be positive, got {eps}"
        )));
    }
    if snapshots.nrows() != result.modes.nrows() {
        return Err(Error::DimensionMismatch {
            expected: result.modes.nrows(),
            got: snapshots.nrows(),
        });
    }
    let background_modes: Vec<usize> = result
        .frequencies()
        .iter()
        .enumerate()
        .filter(|(_, w)| w.norm() < eps)
        .map(|(j, _)| j)
        .collect();

    let (n, m) = snapshots.shape();
    let mut lowrank = DMatrix::<f64>::zeros(n, m);
    for &j in &background_modes {
        let phi = result.modes.column(j);
        let (lam, b) = (result.eigenvalues[j], result.amplitudes[j]);
        for t in 0..m {
            let coeff = b * lam.powu(t as u32);
            for i in 0..n {
                lowrank[(i, t)] += (phi[i] * coeff).re;
            }
        }
    }
    let sparse = snapshots - &lowrank;
    Ok(LowRankSparsePair {
        lowrank,
        sparse,
        eps,
        background_modes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub mode_index: usize,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub abs_lambda: f64,
    pub abs_omega: f64,
    pub amplitude_abs: f64,
}

pub const SPECTRUM_HEADER: [&str; 6] = [
    "mode_index",
    "re_lambda",
    "im_lambda",
    "abs_lambda",
    "abs_omega",
    "amplitude_abs",
];

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRUM_HEADER)?;
    for r in rows {
        w.write_record([
            r.mode_index.to_string(),
            r.re_lambda.to_string(),
            r.im_lambda.to_string(),
            r.abs_lambda.to_string(),
            r.abs_omega.to_string(),
            r.amplitude_abs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<spectrum csv>", e))?;
    Ok(())
}
