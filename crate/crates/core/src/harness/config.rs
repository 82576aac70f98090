use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{LinearSvmParams, RbfSvmParams, RksParams};
use crate::dataset::SynthPreset;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Rks,
    SvmLinear,
    SvmRbf,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Rks => "rks",
            ClassifierKind::SvmLinear => "svm_linear",
            ClassifierKind::SvmRbf => "svm_rbf",
        }
    }

    /// Value of the `kernel` column; empty for RKS.
    pub fn kernel(self) -> &'static str {
        match self {
            ClassifierKind::Rks => "",
            ClassifierKind::SvmLinear => "linear",
            ClassifierKind::SvmRbf => "rbf",
        }
    }
}

/// Where images come from.
///
/// With `path`, classes are read from `path/<class>/`; `groups_file` names
/// class groups and `groups` selects which of them to run (all when empty).
/// Without `path`, every preset in `synthetic` becomes one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub groups_file: Option<PathBuf>,
    pub groups: Vec<String>,
    pub synthetic: Vec<SynthPreset>,
    pub n_classes: usize,
    pub n_per_class: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: None,
            groups_file: None,
            groups: Vec::new(),
            synthetic: Vec::new(),
            n_classes: 5,
            n_per_class: 100,
        }
    }
}

impl DatasetConfig {
    /// Presets to generate, defaulting to the distinctive one.
    pub fn presets(&self) -> Vec<SynthPreset> {
        if self.synthetic.is_empty() {
            vec![SynthPreset::Distinctive]
        } else {
            self.synthetic.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Runs per cell; seeds `seed .. seed + repeats`.
    pub repeats: usize,
    /// Fill the `wall_time_s` column. Off by default so reruns are byte-identical.
    pub record_time: bool,
    pub out_dir: PathBuf,
    pub test_pct: Vec<f64>,
    /// Number of DMD eigenvalues per sweep cell.
    pub n_eigs: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    pub dataset: DatasetConfig,
    /// Feature settings; `rank` applies to single-image commands, sweeps
    /// override it with each `n_eigs` value.
    pub features: FeatureConfig,
    pub rks: RksParams,
    pub svm_linear: LinearSvmParams,
    pub svm_rbf: RbfSvmParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            repeats: 1,
            record_time: false,
            out_dir: PathBuf::from("modeforge-out"),
            test_pct: vec![50.0, 60.0, 70.0],
            n_eigs: vec![3, 4, 5],
            classifiers: vec![ClassifierKind::Rks],
            dataset: DatasetConfig::default(),
            features: FeatureConfig::default(),
            rks: RksParams::default(),
            svm_linear: LinearSvmParams::default(),
            svm_rbf: RbfSvmParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.dataset.path.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.dataset.groups_file.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_pct.is_empty() || self.n_eigs.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config(
                "test_pct, n_eigs and classifiers must all be non-empty".into(),
            ));
        }
        if let Some(p) = self.test_pct.iter().find(|p| !(**p > 0.0 && **p < 100.0)) {
            return Err(Error::Config(format!("test_pct {p} is outside (0, 100)")));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.features.validate()?;
        for &j in &self.n_eigs {
            FeatureConfig {
                rank: j,
                ..self.features.clone()
            }
            .validate()?;
        }
        let ds = &self.dataset;
        if ds.path.is_some() && !ds.synthetic.is_empty() {
            return Err(Error::Config(
                "dataset.path and dataset.synthetic are mutually exclusive".into(),
            ));
        }
        if ds.path.is_none() && (ds.n_classes == 0 || ds.n_per_class == 0) {
            return Err(Error::Config(
                "synthetic datasets need n_classes >= 1 and n_per_class >= 1".into(),
            ));
        }
        if ds.groups_file.is_none() && !ds.groups.is_empty() {
            return Err(Error::Config("dataset.groups requires dataset.groups_file".into()));
        }
        Ok(())
    }

    pub fn feature_config(&self, rank: usize) -> FeatureConfig {
        FeatureConfig {
            rank,
            ..self.features.clone()
        }
    }
}
