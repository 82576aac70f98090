//! How well random Fourier features approximate the Gaussian kernel as k grows.

use modeforge::rff::{gaussian_kernel, sample_map};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> modeforge::Result<()> {
    let d = 64;
    let sigma = 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..50)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
            (x, y)
        })
        .collect();

    for k in [16, 64, 256, 1024, 4096] {
        let map = sample_map(7, k, sigma, d)?;
        let mut worst = 0.0f64;
        for (x, y) in &pairs {
            let (zx, zy) = (map.transform(x)?, map.transform(y)?);
            let approx: f64 = zx.iter().zip(&zy).map(|(a, b)| a * b).sum();
            worst = worst.max((approx - gaussian_kernel(x, y, sigma)).abs());
        }
        println!("k = {k:5}: worst |z(x)·z(y) - k(x, y)| = {worst:.4}");
    }
    Ok(())
}
