#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use modeforge::classifiers::LabeledSet;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Real `8 × 8` block-diagonal generator with known spectrum and its
/// eigenvalues: two complex pairs and four real values, all inside the unit disc.
pub fn known_spectrum_8() -> (DMatrix<f64>, Vec<Complex64>) {
    let mut d = DMatrix::zeros(8, 8);
    let mut eig = Vec::new();
    let mut put_pair = |d: &mut DMatrix<f64>, k: usize, r: f64, th: f64| {
        let (s, c) = th.sin_cos();
        d[(k, k)] = r * c;
        d[(k, k + 1)] = -r * s;
        d[(k + 1, k)] = r * s;
        d[(k + 1, k + 1)] = r * c;
        eig.push(Complex64::from_polar(r, th));
        eig.push(Complex64::from_polar(r, -th));
    };
    put_pair(&mut d, 0, 0.93, 0.45);
    put_pair(&mut d, 2, 0.74, 1.6);
    for (k, v) in [(4, 0.98), (5, 0.85), (6, -0.62), (7, 0.5)] {
        d[(k, k)] = v;
        eig.push(Complex64::new(v, 0.0));
    }
    (d, eig)
}

/// Snapshots `x_{t+1} = A x_t` for `steps` columns.
pub fn simulate(a: &DMatrix<f64>, x0: &DVector<f64>, steps: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(a.nrows(), steps);
    let mut cur = x0.clone();
    for t in 0..steps {
        x.set_column(t, &cur);
        cur = a * &cur;
    }
    x
}

/// Greedy nearest matching of two eigenvalue sets; returns the worst distance.
pub fn setwise_distance(got: &[Complex64], want: &[Complex64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let mut used = vec![false; got.len()];
    let mut worst = 0.0f64;
    for w in want {
        let (idx, dist) = got
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, g)| (i, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("equal lengths");
        used[idx] = true;
        worst = worst.max(dist);
    }
    worst
}

/// Four Gaussian clusters at (±1, ±1); label = parity of the quadrant.
pub fn xor_set(n: usize, seed: u64) -> LabeledSet {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (sx, sy) = ([-1.0, 1.0][i % 2], [-1.0, 1.0][(i / 2) % 2]);
        let nx: f64 = r.sample(StandardNormal);
        let ny: f64 = r.sample(StandardNormal);
        rows.push(vec![sx + 0.25 * nx, sy + 0.25 * ny]);
        labels.push(usize::from(sx * sy > 0.0));
    }
    LabeledSet::from_rows(&rows, labels, 2).unwrap()
}
