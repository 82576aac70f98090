//! Trained models survive a save/load cycle with identical predictions.

use modeforge::classifiers::{
    load_model, save_model, train_rks, Classifier, LabeledSet, Model, RksParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let t = i as f64 * 0.1;
            vec![t.cos() * (1 + i % 3) as f64, t.sin() * (1 + i % 3) as f64]
        })
        .collect();
    let labels = (0..60).map(|i| i % 3).collect();
    let set = LabeledSet::from_rows(&rows, labels, 3)?;

    let model = Model::Rks(train_rks(&set, &RksParams { k: 64, ..Default::default() })?);
    let path = std::env::temp_dir().join("modeforge-example.dmdm");
    save_model(&model, &path)?;
    let back = load_model(&path)?;

    // weights are stored as f32, so scores move slightly but labels do not
    let same = rows
        .iter()
        .filter(|x| model.predict(x).ok() == back.predict(x).ok())
        .count();
    println!(
        "{} bytes at {}; {same}/{} predictions unchanged",
        std::fs::metadata(&path)?.len(),
        path.display(),
        rows.len()
    );
    std::fs::remove_file(path)?;
    Ok(())
}
