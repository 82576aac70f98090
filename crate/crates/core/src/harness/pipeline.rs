use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{ClassifierKind, ExperimentConfig};
use crate::classifiers::{
    evaluate, train_rks, train_svm_linear, train_svm_rbf, LabeledSet, LinearSvmParams, Model,
    RksParams,
};
use crate::dataset::{load_class_groups, load_dir, split, synth_textures, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{extract_feature, FeatureConfig, FeatureVector};

/// Extracts one feature vector per item, in item order.
pub fn extract_dataset(ds: &Dataset, cfg: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    ds.items
        .par_iter()
        .map(|item| {
            let img = item.load()?;
            extract_feature(&img, cfg, &item.id)
                .map_err(|e| Error::Dataset(format!("{}: {e}", item.id)))
        })
        .collect()
}

/// Stacks feature vectors into an `n × d` matrix.
pub fn feature_matrix(features: &[FeatureVector]) -> DMatrix<f64> {
    let d = features.first().map_or(0, |f| f.values.len());
    DMatrix::from_fn(features.len(), d, |i, j| features[i].values[j])
}

/// Labeled rows of `x` for a subset of dataset items, by id.
fn subset(x: &DMatrix<f64>, full: &Dataset, part: &Dataset) -> Result<LabeledSet> {
    let index: std::collections::HashMap<&str, usize> = full
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.as_str(), i))
        .collect();
    let rows: Vec<usize> = part.items.iter().map(|it| index[it.id.as_str()]).collect();
    let features = DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)]);
    LabeledSet::new(features, part.labels(), full.n_classes())
}

pub fn train_classifier(
    kind: ClassifierKind,
    train: &LabeledSet,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Model> {
    Ok(match kind {
        ClassifierKind::Rks => Model::Rks(train_rks(train, &RksParams { seed, ..cfg.rks.clone() })?),
        ClassifierKind::SvmLinear => Model::Svm(train_svm_linear(
            train,
            &LinearSvmParams {
                seed,
                ..cfg.svm_linear.clone()
            },
        )?),
        ClassifierKind::SvmRbf => {
            Model::Svm(train_svm_rbf(train, &cfg.svm_rbf)?)
        }
    })
}

/// Named datasets the sweep runs over.
pub fn resolve_groups(cfg: &ExperimentConfig) -> Result<Vec<(String, Dataset)>> {
    let ds = &cfg.dataset;
    match &ds.path {
        Some(root) => match &ds.groups_file {
            None => Ok(vec![("all".to_string(), load_dir(root, None)?)]),
            Some(file) => {
                let groups = load_class_groups(file)?;
                let names: Vec<String> = if ds.groups.is_empty() {
                    groups.keys().cloned().collect()
                } else {
                    ds.groups.clone()
                };
                names
                    .into_iter()
                    .map(|name| {
                        let classes = groups.get(&name).ok_or_else(|| {
                            Error::Config(format!("class group {name:?} not in {}", file.display()))
                        })?;
                        let data = load_dir(root, Some(classes))?;
                        Ok((name, data))
                    })
                    .collect()
            }
        },
        None => ds
            .presets()
            .into_iter()
            .map(|p| {
                let data = synth_textures(ds.n_per_class, &p.classes(ds.n_classes), cfg.seed)?;
                Ok((p.name().to_string(), data))
            })
            .collect(),
    }
}

/// One row of the accuracy table.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRecord {
    pub test_pct: f64,
    pub n_eigs: usize,
    pub class_group: String,
    pub classifier: ClassifierKind,
    /// Accuracy of the run with the base seed.
    pub accuracy_pct: f64,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
    /// Mean and standard deviation over all repeats, when there is more than one.
    pub repeat_stats: Option<(f64, f64)>,
}

pub const ACCURACY_HEADER: [&str; 8] = [
    "test_pct",
    "n_eigs",
    "class_group",
    "classifier",
    "kernel",
    "accuracy_pct",
    "seed",
    "wall_time_s",
];

struct Run {
    accuracy_pct: f64,
    seconds: f64,
}

fn run_cell(
    x: &DMatrix<f64>,
    data: &Dataset,
    test_pct: f64,
    kind: ClassifierKind,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Run> {
    let start = Instant::now();
    let spec = SplitSpec {
        test_fraction: test_pct / 100.0,
        seed,
        stratified: true,
    };
    let (train, test) = split(data, &spec)?;
    let train = subset(x, data, &train)?;
    let test = subset(x, data, &test)?;
    let model = train_classifier(kind, &train, cfg, seed)?;
    let eval = evaluate(&model, &test)?;
    Ok(Run {
        accuracy_pct: 100.0 * eval.accuracy,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Full sweep over groups × test fractions × eigenvalue counts × classifiers.
///
/// Cells run in parallel; records come back in configuration order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<AccuracyRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for (group, data) in resolve_groups(cfg)? {
        log::info!("group {group}: {} images, {} classes", data.len(), data.n_classes());
        let mut by_rank = Vec::with_capacity(cfg.n_eigs.len());
        for &j in &cfg.n_eigs {
            let feats = extract_dataset(&data, &cfg.feature_config(j))?;
            by_rank.push(feature_matrix(&feats));
        }
        let mut cells = Vec::new();
        for &pct in &cfg.test_pct {
            for (ji, &j) in cfg.n_eigs.iter().enumerate() {
                for &kind in &cfg.classifiers {
                    cells.push((pct, ji, j, kind));
                }
            }
        }
        let rows: Vec<AccuracyRecord> = cells
            .par_iter()
            .map(|&(pct, ji, j, kind)| {
                let runs: Vec<Run> = (0..cfg.repeats as u64)
                    .map(|r| run_cell(&by_rank[ji], &data, pct, kind, cfg, cfg.seed + r))
                    .collect::<Result<_>>()
                    .map_err(|e| {
                        Error::Config(format!(
                            "cell group={group} test_pct={pct} n_eigs={j} classifier={}: {e}",
                            kind.name()
                        ))
                    })?;
                let repeat_stats = (runs.len() > 1).then(|| {
                    let n = runs.len() as f64;
                    let mean = runs.iter().map(|r| r.accuracy_pct).sum::<f64>() / n;
                    let var = runs
                        .iter()
                        .map(|r| (r.accuracy_pct - mean).powi(2))
                        .sum::<f64>()
                        / (n - 1.0);
                    (mean, var.sqrt())
                });
                Ok(AccuracyRecord {
                    test_pct: pct,
                    n_eigs: j,
                    class_group: group.clone(),
                    classifier: kind,
                    accuracy_pct: runs[0].accuracy_pct,
                    seed: cfg.seed,
                    wall_time_s: cfg.record_time.then(|| runs[0].seconds),
                    repeat_stats,
                })
            })
            .collect::<Result<_>>()?;
        records.extend(rows);
    }
    Ok(records)
}

pub fn write_accuracy_csv<W: std::io::Write>(records: &[AccuracyRecord], out: W) -> Result<()> {
    let with_stats = records.iter().any(|r| r.repeat_stats.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ACCURACY_HEADER.to_vec();
    if with_stats {
        header.extend(["accuracy_mean_pct", "accuracy_std_pct"]);
    }
    w.write_record(&header)?;
    for r in records {
        let mut rec = vec![
            r.test_pct.to_string(),
            r.n_eigs.to_string(),
            r.class_group.clone(),
            r.classifier.name().to_string(),
            r.classifier.kernel().to_string(),
            format!("{:.4}", r.accuracy_pct),
            r.seed.to_string(),
            r.wall_time_s.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ];
        if with_stats {
            let (m, s) = r.repeat_stats.unwrap_or((r.accuracy_pct, 0.0));
            rec.extend([format!("{m:.4}"), format!("{s:.4}")]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<accuracy csv>", e))?;
    Ok(())
}
