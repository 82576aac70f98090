//! The 640-dimensional image descriptor, written as CSV.
//!
//! ```text
//! cargo run --example extract_features -- out.csv
//! ```

use modeforge::dataset::{synth_textures, SynthPreset};
use modeforge::features::{extract_feature, FeatureConfig, FeatureFormat, FeatureSet};

fn main() -> modeforge::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "features.csv".into());
    let cfg = FeatureConfig::default();
    let data = synth_textures(3, &SynthPreset::Distinctive.classes(4), 0)?;

    let mut set = FeatureSet::new(cfg.dim());
    for item in &data.items {
        let f = extract_feature(&item.load()?, &cfg, &item.id)?;
        set.push(&item.id, &data.class_names[item.class], &f.values)?;
    }
    let first = &set.rows[0].values;
    println!(
        "{} images, dim {}, config {}; first row low-rank block starts {:.3?}",
        set.rows.len(),
        set.dim,
        cfg.hash(),
        &first[..4]
    );
    set.save(out.as_ref(), FeatureFormat::Csv)?;
    println!("wrote {out}");
    Ok(())
}
