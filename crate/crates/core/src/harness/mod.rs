//! Experiment harness behind the `modeforge` command line.

mod commands;
mod config;
mod pipeline;

pub use commands::{
    cmd_embed, cmd_experiment, cmd_extract, cmd_recon, cmd_spectrum, image_recon, image_spectrum,
    to_gray8, write_embedding_csv, ExtractReport, ACCURACY_CSV, EMBED_CSV, FEATURES_BIN,
    FEATURES_CSV, LOWRANK_PNG, SPARSE_PNG, SPECTRUM_CSV,
};
pub use config::{ClassifierKind, DatasetConfig, ExperimentConfig};
pub use pipeline::{
    extract_dataset, feature_matrix, resolve_groups, run_experiment, train_classifier,
    write_accuracy_csv, AccuracyRecord, ACCURACY_HEADER,
};
