//! Dense eigensolver for small general (non-symmetric) matrices.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR iteration gives a Schur form `A = Z T Zᴴ`; eigenvectors come
//! from back substitution on the triangular factor. Intended for the tiny
//! reduced operators produced by DMD (a handful of rows).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const MAX_ITER_PER_EIGENVALUE: usize = 100;

#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C>,
    /// Unit 2-norm eigenvectors as columns, same order as `values`.
    pub vectors: DMatrix<C>,
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with `G·[a; b] = [r; 0]`.
fn givens(a: C, b: C) -> (f64, C) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn rotate_rows(m: &mut DMatrix<C>, k: usize, c: f64, s: C, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = m[(k, j)];
        let y = m[(k + 1, j)];
        m[(k, j)] = x * c + s * y;
        m[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

// right-multiplies columns (k, k+1) by Gᴴ
fn rotate_cols(m: &mut DMatrix<C>, k: usize, c: f64, s: C, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = x * c + s.conj() * y;
        m[(i, k + 1)] = -s * x + y * c;
    }
}

fn hessenberg(h: &mut DMatrix<C>, z: &mut DMatrix<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for e in &mut v {
            *e /= vnorm;
        }
        // H ← (I − 2vvᴴ) H
        for j in 0..n {
            let dot: C = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * h[(k + 1 + t, j)])
                .sum();
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vi * dot * 2.0;
            }
        }
        // H ← H (I − 2vvᴴ), Z ← Z (I − 2vvᴴ)
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let dot: C = v
                    .iter()
                    .enumerate()
                    .map(|(t, vi)| m[(i, k + 1 + t)] * *vi)
                    .sum();
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= dot * vi.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::new(0.0, 0.0);
        }
    }
}

fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (m1, m2) = (mid + disc, mid - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Complex Schur decomposition `A = Z T Zᴴ` with `T` upper triangular.
pub fn schur(a: &DMatrix<C>) -> Result<(DMatrix<C>, DMatrix<C>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut h = a.clone();
    let mut z = DMatrix::<C>::identity(n, n);
    if n == 0 {
        return Ok((h, z));
    }
    hessenberg(&mut h, &mut z);

    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let sub = h[(l, l - 1)].norm();
            if sub <= f64::EPSILON * scale || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = C::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > MAX_ITER_PER_EIGENVALUE * n {
            return Err(Error::Numerical("QR iteration did not converge".into()));
        }

        let mu = if iter.is_multiple_of(10) {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rotate_rows(&mut h, k, c, s, k..n);
            h[(k + 1, k)] = C::new(0.0, 0.0);
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            rotate_cols(&mut h, k, c, s, 0..(k + 2).min(hi + 1));
            rotate_cols(&mut z, k, c, s, 0..n);
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    // clean strictly-lower part
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C::new(0.0, 0.0);
        }
    }
    Ok((h, z))
}

/// Eigenvalues and unit-norm eigenvectors of a small square matrix.
pub fn eig(a: &DMatrix<C>) -> Result<Eigen> {
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("eigensolver input is not finite".into()));
    }
    let (t, z) = schur(a)?;
    let n = t.nrows();
    let tnorm = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let small = f64::EPSILON * tnorm.max(f64::MIN_POSITIVE);

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<C>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![C::new(0.0, 0.0); n];
        y[k] = C::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C = (j + 1..=k).map(|l| t[(j, l)] * y[l]).sum();
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = C::new(small, 0.0);
            }
            y[j] = -s / denom;
        }
        let mut v = &z * nalgebra::DVector::from_vec(y);
        let norm = v.norm();
        v /= C::new(norm, 0.0);
        vectors.set_column(k, &v);
        values.push(lambda);
    }
    Ok(Eigen { values, vectors })
}

/// Real-input convenience wrapper.
pub fn eig_real(a: &DMatrix<f64>) -> Result<Eigen> {
    eig(&a.map(|v| C::new(v, 0.0)))
}
