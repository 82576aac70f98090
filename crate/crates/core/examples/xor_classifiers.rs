//! A problem no hyperplane solves: four clusters in XOR layout.

use modeforge::classifiers::{
    evaluate, train_rks, train_svm_linear, train_svm_rbf, Classifier, LabeledSet,
    LinearSvmParams, RbfSvmParams, RksParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn xor_points(n: usize, seed: u64) -> modeforge::Result<LabeledSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.25).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let (sx, sy) = ([-1.0, 1.0][i % 2], [-1.0, 1.0][(i / 2) % 2]);
        rows.push(vec![sx + noise.sample(&mut rng), sy + noise.sample(&mut rng)]);
        labels.push(usize::from(sx * sy > 0.0));
    }
    LabeledSet::from_rows(&rows, labels, 2)
}

fn main() -> modeforge::Result<()> {
    let train = xor_points(200, 1)?;
    let test = xor_points(200, 2)?;

    let models: Vec<(&str, Box<dyn Classifier>)> = vec![
        ("rks k=512", Box::new(train_rks(&train, &RksParams { k: 512, ..Default::default() })?)),
        ("svm rbf", Box::new(train_svm_rbf(&train, &RbfSvmParams::default())?)),
        ("svm linear", Box::new(train_svm_linear(&train, &LinearSvmParams::default())?)),
    ];
    for (name, model) in &models {
        let e = evaluate(model.as_ref(), &test)?;
        println!("{name:11} {:5.1}%  confusion {:?}", 100.0 * e.accuracy, e.confusion);
    }
    Ok(())
}
