//! A small accuracy sweep over both synthetic presets, printed as CSV.
//!
//! Pass a TOML file to override the built-in grid, e.g.
//! `cargo run --release --example synthetic_experiment -- examples/configs/presets.toml`.

use modeforge::dataset::SynthPreset;
use modeforge::harness::{run_experiment, write_accuracy_csv, ClassifierKind, ExperimentConfig};

fn main() -> modeforge::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => {
            let mut cfg = ExperimentConfig {
                test_pct: vec![60.0],
                n_eigs: vec![3, 5],
                classifiers: vec![ClassifierKind::Rks, ClassifierKind::SvmLinear],
                ..Default::default()
            };
            cfg.dataset.synthetic = vec![SynthPreset::Distinctive, SynthPreset::Overlapped];
            cfg.dataset.n_per_class = 40;
            cfg
        }
    };
    let records = run_experiment(&cfg)?;
    write_accuracy_csv(&records, std::io::stdout())
}
