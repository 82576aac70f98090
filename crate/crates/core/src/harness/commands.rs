use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::pipeline::{run_experiment, write_accuracy_csv};
use crate::color_flow::{build_snapshots, rgb_to_lab, Plane, RgbImage};
use crate::dataset::{load_dir, Dataset, DatasetSource, ImageSource, Item};
use crate::dmd::{dmd, lowrank_sparse_split, write_spectrum_csv, SpectrumRow};
use crate::error::{Error, Result};
use crate::features::{extract_feature, FeatureConfig, FeatureFormat, FeatureSet};

pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_BIN: &str = "features.bin";
pub const ACCURACY_CSV: &str = "accuracy.csv";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const LOWRANK_PNG: &str = "lowrank.png";
pub const SPARSE_PNG: &str = "sparse.png";
pub const EMBED_CSV: &str = "embed.csv";

fn create_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Images directly inside `dir` (unlabeled), or a class-per-directory
/// layout when `dir` has subdirectories.
fn collect_images(dir: &Path) -> Result<Dataset> {
    let has_subdirs = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .any(|e| e.path().is_dir());
    if has_subdirs {
        return load_dir(dir, None);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort_by(|a, b| {
        let key = |p: &PathBuf| p.file_name().map(|n| n.as_encoded_bytes().to_vec());
        key(a).cmp(&key(b))
    });
    if files.is_empty() {
        return Err(Error::Dataset(format!("no files in {}", dir.display())));
    }
    let items = files
        .into_iter()
        .map(|f| Item {
            id: f.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            image: ImageSource::Path(f),
            class: 0,
        })
        .collect();
    Ok(Dataset {
        items,
        class_names: vec![String::new()],
        source: DatasetSource::Directory(dir.to_path_buf()),
    })
}

/// Outcome of a batch extraction.
#[derive(Debug)]
pub struct ExtractReport {
    pub output: PathBuf,
    pub written: usize,
    /// Items that failed, with the error message.
    pub failures: Vec<(String, String)>,
}

/// Features for every image under `input`, written to `out_dir`.
///
/// Failing images are logged and skipped; the rest are still written.
pub fn cmd_extract(
    input: &Path,
    cfg: &FeatureConfig,
    format: FeatureFormat,
    out_dir: &Path,
) -> Result<ExtractReport> {
    cfg.validate()?;
    let ds = collect_images(input)?;
    let results: Vec<_> = ds
        .items
        .par_iter()
        .map(|item| item.load().and_then(|img| extract_feature(&img, cfg, &item.id)))
        .collect();
    let mut set = FeatureSet::new(cfg.dim());
    let mut failures = Vec::new();
    for (item, res) in ds.items.iter().zip(results) {
        match res {
            Ok(f) => set.push(&f.id, &ds.class_names[item.class], &f.values)?,
            Err(e) => {
                let where_ = match &item.image {
                    ImageSource::Path(p) => p.display().to_string(),
                    ImageSource::Memory(_) => item.id.clone(),
                };
                log::error!("{where_}: {e}");
                failures.push((where_, e.to_string()));
            }
        }
    }
    create_out_dir(out_dir)?;
    let output = out_dir.join(match format {
        FeatureFormat::Csv => FEATURES_CSV,
        FeatureFormat::Binary => FEATURES_BIN,
    });
    set.save(&output, format)?;
    Ok(ExtractReport {
        output,
        written: set.rows.len(),
        failures,
    })
}

/// Runs the configured sweep and writes the accuracy table.
pub fn cmd_experiment(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let records = run_experiment(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(ACCURACY_CSV);
    write_accuracy_csv(&records, create_file(&path)?)?;
    Ok(path)
}

fn max_rank(image: &RgbImage, cfg: &FeatureConfig) -> usize {
    (cfg.order.len() - 1).min(image.width() * image.height())
}

/// Spectrum rows of one image at the largest admissible rank.
pub fn image_spectrum(image: &RgbImage, cfg: &FeatureConfig) -> Result<Vec<SpectrumRow>> {
    cfg.validate()?;
    let snaps = build_snapshots(&rgb_to_lab(image), &cfg.order)?;
    match dmd(&snaps, max_rank(image, cfg)) {
        Ok(r) => Ok(r.spectrum()),
        // an all-black image has no dynamics at all
        Err(Error::ZeroMatrix) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

pub fn cmd_spectrum(image: &Path, cfg: &FeatureConfig, out_dir: &Path) -> Result<PathBuf> {
    let img = RgbImage::open(image)?;
    let rows = image_spectrum(&img, cfg)?;
    create_out_dir(out_dir)?;
    let path = out_dir.join(SPECTRUM_CSV);
    write_spectrum_csv(&rows, create_file(&path)?)?;
    Ok(path)
}

/// Maps values to 8-bit gray by min-max scaling; constant input is black.
pub fn to_gray8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let tol = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    values
        .iter()
        .map(|&v| {
            if span <= tol {
                0
            } else {
                ((v - lo) / span * 255.0).round() as u8
            }
        })
        .collect()
}

/// Low-rank and sparse luminance planes of one image, in pixel order.
pub fn image_recon(image: &RgbImage, cfg: &FeatureConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let snaps = build_snapshots(&rgb_to_lab(image), &cfg.order)?;
    let x = snaps.data();
    let column = cfg.order.iter().position(|&p| p == Plane::L).unwrap_or(0);
    let n = x.nrows();
    if x.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; n], vec![0.0; n]));
    }
    let result = dmd(&snaps, cfg.rank.min(max_rank(image, cfg)))?;
    let split = lowrank_sparse_split(&result, x, cfg.eps)?;
    Ok((
        split.lowrank.column(column).iter().copied().collect(),
        split.sparse.column(column).iter().copied().collect(),
    ))
}

pub fn cmd_recon(image: &Path, cfg: &FeatureConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let img = RgbImage::open(image)?;
    let (low, sparse) = image_recon(&img, cfg)?;
    create_out_dir(out_dir)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let mut paths = Vec::with_capacity(2);
    for (plane, name) in [(&low, LOWRANK_PNG), (&sparse, SPARSE_PNG)] {
        let path = out_dir.join(name);
        let buf = image::GrayImage::from_raw(w, h, to_gray8(plane))
            .expect("plane length matches image size");
        buf.save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    let sparse = paths.pop().expect("two paths");
    let low = paths.pop().expect("two paths");
    Ok((low, sparse))
}

/// Writes `label,f0,f1,..` rows for external embedding tools.
pub fn write_embedding_csv<W: std::io::Write>(set: &FeatureSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((0..set.dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for row in &set.rows {
        let mut rec = vec![row.label.clone()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<embedding csv>", e))?;
    Ok(())
}

pub fn cmd_embed(features: &Path, out_dir: &Path) -> Result<PathBuf> {
    let set = FeatureSet::load(features)?;
    create_out_dir(out_dir)?;
    let path = out_dir.join(EMBED_CSV);
    write_embedding_csv(&set, create_file(&path)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_scaling() {
        assert_eq!(to_gray8(&[0.0, 0.5, 1.0]), vec![0, 128, 255]);
        assert_eq!(to_gray8(&[3.0, 3.0]), vec![0, 0]);
        assert_eq!(to_gray8(&[-2.0, 2.0]), vec![0, 255]);
    }

    #[test]
    fn spectrum_is_capped_by_order_length() {
        let img = RgbImage::from_fn(16, 16, |r, c| [(r * 16) as u8, (c * 16) as u8, 90]).unwrap();
        let rows = image_spectrum(&img, &FeatureConfig::default()).unwrap();
        assert!(!rows.is_empty() && rows.len() <= 5);
        assert!(rows.windows(2).all(|w| w[0].abs_lambda >= w[1].abs_lambda));
        let black = RgbImage::filled(8, 8, [0, 0, 0]).unwrap();
        assert!(image_spectrum(&black, &FeatureConfig::default()).unwrap().is_empty());
    }
}
