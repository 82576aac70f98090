//! Splitting snapshots into a static background and a transient part.

use modeforge::dmd::{dmd_matrix, lowrank_sparse_split, DEFAULT_BACKGROUND_EPS};
use nalgebra::DMatrix;

fn main() -> modeforge::Result<()> {
    let n = 200;
    let background: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).sin()).collect();
    // a bump that fades by half at every step
    let x = DMatrix::from_fn(n, 6, |i, t| {
        let bump = (-((i as f64 - 120.0) / 8.0).powi(2)).exp();
        background[i] + 2.0 * bump * 0.5f64.powi(t as i32)
    });

    let res = dmd_matrix(&x, 5, 1.0)?;
    let split = lowrank_sparse_split(&res, &x, DEFAULT_BACKGROUND_EPS)?;
    println!("background modes: {:?}", split.background_modes);

    let truth = DMatrix::from_fn(n, 6, |i, _| background[i]);
    println!(
        "relative background error: {:.2e}",
        (&split.lowrank - &truth).norm() / truth.norm()
    );
    println!(
        "sparse energy per step: {:?}",
        (0..6).map(|t| format!("{:.3}", split.sparse.column(t).norm())).collect::<Vec<_>>()
    );
    Ok(())
}
