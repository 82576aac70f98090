mod common;

use common::*;
use modeforge::classifiers::{
    evaluate, hinge_objective, train_binary_smo, train_rks, train_svm_linear, train_svm_rbf,
    Classifier, LabeledSet, LinearSvmParams, RbfSvmParams, RksParams,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Two bands `x₁ ≥ 1` and `x₁ ≤ −1`, with corner anchors so that the
/// max-margin separator is exactly `x₁ = 0` with margin 1.
fn blob_set(n: usize, seed: u64) -> LabeledSet {
    let mut r = rng(seed);
    let mut rows = vec![
        vec![1.0, -2.0],
        vec![1.0, 2.0],
        vec![-1.0, -2.0],
        vec![-1.0, 2.0],
    ];
    let mut labels = vec![0, 0, 1, 1];
    while rows.len() < n {
        let cls = rows.len() % 2;
        let s = if cls == 0 { 1.0 } else { -1.0 };
        let x1 = s * (1.0 + r.random_range(0.0..1.5));
        let x2 = r.random_range(-2.0..2.0);
        rows.push(vec![x1, x2]);
        labels.push(cls);
    }
    LabeledSet::from_rows(&rows, labels, 2).unwrap()
}

fn split_half(set: &LabeledSet) -> (LabeledSet, LabeledSet) {
    let n = set.len() / 2;
    let take = |range: std::ops::Range<usize>| {
        let rows: Vec<Vec<f64>> = range.clone().map(|i| set.row(i)).collect();
        LabeledSet::from_rows(&rows, set.labels[range].to_vec(), set.n_classes).unwrap()
    };
    (take(0..n), take(n..set.len()))
}

#[test]
fn xor_is_solved_by_kernel_models() {
    let (train, test) = split_half(&xor_set(400, 1));
    let rks = train_rks(&train, &RksParams { k: 512, ..Default::default() }).unwrap();
    let rbf = train_svm_rbf(&train, &RbfSvmParams::default()).unwrap();
    assert!(evaluate(&rks, &test).unwrap().accuracy >= 0.95);
    assert!(evaluate(&rbf, &test).unwrap().accuracy >= 0.95);
}

#[test]
fn linear_svm_on_xor_reaches_the_exact_hinge_optimum() {
    let (train, test) = split_half(&xor_set(400, 1));
    let params = LinearSvmParams {
        epochs: 1000,
        ..Default::default()
    };
    let m = train_svm_linear(&train, &params).unwrap();
    let y: Vec<f64> = train.labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    let w: Vec<f64> = m.weights.row(0).iter().copied().collect();
    let obj = hinge_objective(&w, m.bias[0], &train.features, &y, 1.0 / train.len() as f64);
    // optimum of the same objective from an interior-point QP solver on this data
    let exact = 0.989_158_046;
    assert!((obj - exact).abs() < 1e-4, "objective {obj}");
    // a half-plane can isolate at most one of the four clusters
    assert!(evaluate(&m, &test).unwrap().accuracy <= 0.80);
}

#[test]
fn linear_svm_separates_margin_one_blobs() {
    let (train, _) = split_half(&blob_set(400, 2));
    let (_, test) = split_half(&blob_set(400, 3));
    let m = train_svm_linear(&train, &LinearSvmParams::default()).unwrap();
    assert!(evaluate(&m, &test).unwrap().accuracy >= 0.99);
}

#[test]
fn linear_svm_objective_near_max_margin_oracle() {
    let set = blob_set(200, 4);
    let c_reg = 0.05;
    let lambda = 1.0 / (c_reg * set.len() as f64);
    let params = LinearSvmParams {
        c_reg,
        epochs: 200,
        seed: 1,
    };
    let m = train_svm_linear(&set, &params).unwrap();
    let y: Vec<f64> = set.labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    let w: Vec<f64> = m.weights.row(0).iter().copied().collect();
    let trained = hinge_objective(&w, m.bias[0], &set.features, &y, lambda);
    // oracle: w = (1, 0), b = 0 has zero hinge loss on this construction
    let oracle = hinge_objective(&[1.0, 0.0], 0.0, &set.features, &y, lambda);
    assert!((oracle - lambda / 2.0).abs() < 1e-15);
    assert!(trained <= 1.05 * oracle, "{trained} vs oracle {oracle}");
}

#[test]
fn rbf_duplicates_of_training_points_keep_their_label() {
    let set = xor_set(60, 5);
    let m = train_svm_rbf(
        &set,
        &RbfSvmParams {
            c_reg: 1e4,
            gamma: Some(2.0),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(evaluate(&m, &set).unwrap().accuracy, 1.0);
}

#[test]
fn smo_solution_satisfies_kkt_conditions() {
    let set = xor_set(120, 6);
    let gamma = 0.7;
    let c = 1.0;
    let n = set.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = set.row(i).iter().zip(set.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
        (-gamma * d2).exp()
    });
    let y: Vec<f64> = set.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let sol = train_binary_smo(&k, &y, c, 1e-3, 1_000_000).unwrap();

    // equality constraint and box
    let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
    assert!(eq.abs() < 1e-10);
    assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));

    // gradient of the dual recomputed from scratch
    let grad: Vec<f64> = (0..n)
        .map(|i| y[i] * (0..n).map(|j| k[(i, j)] * y[j] * sol.alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let v = -y[i] * grad[i];
        let (a, pos) = (sol.alpha[i], y[i] > 0.0);
        if (pos && a < c) || (!pos && a > 0.0) {
            up = up.max(v);
        }
        if (pos && a > 0.0) || (!pos && a < c) {
            low = low.min(v);
        }
    }
    assert!(up - low <= 1e-3, "max violating pair gap {}", up - low);

    // free support vectors sit on the margin
    for i in (0..n).filter(|&i| sol.alpha[i] > 1e-8 && sol.alpha[i] < c - 1e-8) {
        let f = (0..n).map(|j| sol.alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + sol.bias;
        assert!((y[i] * f - 1.0).abs() <= 1e-3, "sample {i}: {}", y[i] * f);
    }
}

#[test]
fn two_class_prediction_is_the_binary_sign() {
    let set = xor_set(80, 7);
    let lin = train_svm_linear(&set, &LinearSvmParams::default()).unwrap();
    let rbf = train_svm_rbf(&set, &RbfSvmParams::default()).unwrap();
    for m in [&lin, &rbf] {
        for i in 0..set.len() {
            let s = m.scores(&set.row(i)).unwrap();
            assert_eq!(s[1], -s[0]);
            let sign_pred = if s[0] >= 0.0 { 0 } else { 1 };
            assert_eq!(m.predict(&set.row(i)).unwrap(), sign_pred);
        }
    }
}

fn three_class_set(seed: u64) -> LabeledSet {
    let mut r = rng(seed);
    let centers = [(0.0, 0.0), (2.0, 0.5), (0.5, 2.0)];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..90 {
        let (cx, cy) = centers[i % 3];
        let nx: f64 = r.sample(StandardNormal);
        let ny: f64 = r.sample(StandardNormal);
        rows.push(vec![cx + 0.6 * nx, cy + 0.6 * ny]);
        labels.push(i % 3);
    }
    LabeledSet::from_rows(&rows, labels, 3).unwrap()
}

#[test]
fn permuting_labels_permutes_predictions() {
    let set = three_class_set(8);
    let perm = [2usize, 0, 1];
    let permuted = LabeledSet::new(
        set.features.clone(),
        set.labels.iter().map(|&l| perm[l]).collect(),
        3,
    )
    .unwrap();
    let rks = RksParams {
        k: 64,
        sigma: Some(1.0),
        ..Default::default()
    };
    let pairs: Vec<(Box<dyn Classifier>, Box<dyn Classifier>)> = vec![
        (
            Box::new(train_rks(&set, &rks).unwrap()),
            Box::new(train_rks(&permuted, &rks).unwrap()),
        ),
        (
            Box::new(train_svm_linear(&set, &LinearSvmParams::default()).unwrap()),
            Box::new(train_svm_linear(&permuted, &LinearSvmParams::default()).unwrap()),
        ),
        (
            Box::new(train_svm_rbf(&set, &RbfSvmParams::default()).unwrap()),
            Box::new(train_svm_rbf(&permuted, &RbfSvmParams::default()).unwrap()),
        ),
    ];
    for (a, b) in &pairs {
        for i in 0..set.len() {
            let x = set.row(i);
            assert_eq!(perm[a.predict(&x).unwrap()], b.predict(&x).unwrap());
        }
    }
}

#[test]
fn training_is_deterministic() {
    let set = three_class_set(9);
    let p = RksParams {
        k: 32,
        seed: 4,
        ..Default::default()
    };
    assert_eq!(train_rks(&set, &p).unwrap(), train_rks(&set, &p).unwrap());
    let l = LinearSvmParams {
        seed: 4,
        ..Default::default()
    };
    assert_eq!(train_svm_linear(&set, &l).unwrap(), train_svm_linear(&set, &l).unwrap());
    let r = RbfSvmParams::default();
    assert_eq!(train_svm_rbf(&set, &r).unwrap(), train_svm_rbf(&set, &r).unwrap());
}

#[test]
fn accuracy_matches_naive_recount() {
    let set = three_class_set(10);
    let m = train_svm_linear(&set, &LinearSvmParams::default()).unwrap();
    let e = evaluate(&m, &set).unwrap();
    let mut correct = 0;
    for i in 0..set.len() {
        let s = m.scores(&set.row(i)).unwrap();
        let mut best = 0;
        for c in 1..s.len() {
            if s[c] > s[best] {
                best = c;
            }
        }
        correct += usize::from(best == set.labels[i]);
    }
    assert_eq!(e.accuracy, correct as f64 / set.len() as f64);
    let row_sums: Vec<usize> = e.confusion.iter().map(|r| r.iter().sum()).collect();
    assert_eq!(row_sums, set.class_counts());
}

#[test]
fn rks_accuracy_does_not_degrade_with_more_features() {
    let mut drops = 0;
    for seed in 0..5 {
        let (train, test) = split_half(&xor_set(400, 100 + seed));
        let acc = |k| {
            let m = train_rks(&train, &RksParams { k, seed, ..Default::default() }).unwrap();
            evaluate(&m, &test).unwrap().accuracy
        };
        let (lo, hi) = (acc(512), acc(4096));
        if hi < lo - 0.02 {
            drops += 1;
        }
    }
    assert_eq!(drops, 0);
}
