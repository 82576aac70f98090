//! DMD recovers the spectrum of a linear system from its trajectory.

use modeforge::dmd::dmd_matrix;
use nalgebra::{DMatrix, DVector};

fn main() -> modeforge::Result<()> {
    // a damped rotation (0.95 ∠ ±0.3) and a slow real decay
    let (c, s) = (0.95 * 0.3f64.cos(), 0.95 * 0.3f64.sin());
    let a = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 0.8]);
    let mut x = DMatrix::zeros(3, 12);
    let mut cur = DVector::from_vec(vec![1.0, 0.0, 1.0]);
    for t in 0..12 {
        x.set_column(t, &cur);
        cur = &a * cur;
    }

    let res = dmd_matrix(&x, 3, 1.0)?;
    for (lam, w) in res.eigenvalues.iter().zip(res.frequencies()) {
        println!("lambda = {:+.6} {:+.6}i   |lambda| = {:.6}   omega = {:+.4} {:+.4}i", lam.re, lam.im, lam.norm(), w.re, w.im);
    }

    let err = (0..12)
        .map(|t| {
            let r = res.reconstruct(t);
            (0..3).map(|i| (r[i].re - x[(i, t as usize)]).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    println!("worst reconstruction error over 12 steps: {err:.2e}");
    Ok(())
}
