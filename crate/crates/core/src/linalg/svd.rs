use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 60;

/// Rank-`rank` thin SVD, `X ≈ Q diag(sigma) Bᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    /// Left singular vectors, `N × rank`, orthonormal columns.
    pub q: DMatrix<f64>,
    /// Singular values, strictly positive and non-increasing.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `M' × rank`, orthonormal columns.
    pub b: DMatrix<f64>,
    /// Rank asked for by the caller.
    pub requested_rank: usize,
    /// Every singular value of the input, including the discarded ones.
    pub all_sigma: Vec<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// True when the input's numerical rank was below the requested rank.
    pub fn rank_limited(&self) -> bool {
        self.rank() < self.requested_rank
    }

    /// Root-sum-square of the singular values left out of the factorisation.
    pub fn discarded_rss(&self) -> f64 {
        self.all_sigma[self.rank()..]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut qs = self.q.clone();
        for (mut col, &s) in qs.column_iter_mut().zip(&self.sigma) {
            col *= s;
        }
        qs * self.b.transpose()
    }
}

/// One-sided Jacobi on the columns of `a` (`rows ≥ cols` preferred).
/// Returns the rotated `a` with mutually orthogonal columns and the
/// accumulated orthogonal `v` such that `a_in · v = a_out`.
fn one_sided_jacobi(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * (a.nrows() as f64).sqrt();
    // columns this small relative to the whole matrix are numerically zero
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((a, v));
        }
    }
    Err(Error::Numerical(
        "one-sided Jacobi SVD did not converge".into(),
    ))
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let xp = m[(r, p)];
        let xq = m[(r, q)];
        m[(r, p)] = c * xp - s * xq;
        m[(r, q)] = s * xp + c * xq;
    }
}

/// Thin SVD keeping the `rank` largest singular triplets.
///
/// If the numerical rank of `x` is below `rank`, only the achievable
/// triplets are returned and [`SvdFactors::rank_limited`] reports it.
pub fn thin_svd(x: &DMatrix<f64>, rank: usize) -> Result<SvdFactors> {
    let (nr, nc) = x.shape();
    if rank == 0 || rank > nr.min(nc) {
        return Err(Error::Config(format!(
            "SVD rank must lie in 1..={}, got {rank}",
            nr.min(nc)
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD input contains non-finite entries".into()));
    }

    // Work on whichever orientation has fewer columns.
    let transposed = nr < nc;
    let work = if transposed { x.transpose() } else { x.clone() };
    let (rotated, v) = one_sided_jacobi(work)?;

    let norms: Vec<f64> = rotated.column_iter().map(|c| c.norm()).collect();
    let mut idx: Vec<usize> = (0..norms.len()).collect();
    idx.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let all_sigma: Vec<f64> = idx.iter().map(|&i| norms[i]).collect();

    let cutoff = RANK_TOL * all_sigma[0];
    let keep = all_sigma
        .iter()
        .take(rank)
        .take_while(|&&s| s > cutoff)
        .count();

    let rows = rotated.nrows();
    let mut left = DMatrix::zeros(rows, keep);
    let mut right = DMatrix::zeros(v.nrows(), keep);
    for (k, &i) in idx.iter().take(keep).enumerate() {
        left.set_column(k, &(rotated.column(i) / norms[i]));
        right.set_column(k, &v.column(i));
    }
    let (q, b) = if transposed { (right, left) } else { (left, right) };

    Ok(SvdFactors {
        q,
        sigma: all_sigma[..keep].to_vec(),
        b,
        requested_rank: rank,
        all_sigma,
    })
}
