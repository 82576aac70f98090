//! Image datasets: class-per-directory ingestion, stratified splits and a
//! seeded synthetic texture generator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::color_flow::RgbImage;
use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

/// Side length of generated textures.
pub const SYNTH_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum ImageSource {
    Path(PathBuf),
    Memory(Arc<RgbImage>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub image: ImageSource,
    pub class: usize,
    /// Stable identifier: relative path or synthetic index.
    pub id: String,
}

impl Item {
    /// Decodes the image, reading from disk if needed.
    pub fn load(&self) -> Result<RgbImage> {
        match &self.image {
            ImageSource::Path(p) => RgbImage::open(p),
            ImageSource::Memory(img) => Ok((**img).clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Directory(PathBuf),
    Synthetic,
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Directory(p) => write!(f, "{}", p.display()),
            DatasetSource::Synthetic => f.write_str("synthetic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub items: Vec<Item>,
    pub class_names: Vec<String>,
    pub source: DatasetSource,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for it in &self.items {
            counts[it.class] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|it| it.class).collect()
    }

    fn with_items(&self, items: Vec<Item>) -> Dataset {
        Dataset {
            items,
            class_names: self.class_names.clone(),
            source: self.source.clone(),
        }
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort_by(|a, b| {
        let key = |p: &PathBuf| p.file_name().map(|n| n.as_encoded_bytes().to_vec());
        key(a).cmp(&key(b))
    });
    Ok(out)
}

/// Reads `root/<class>/*.{png,jpg,jpeg}`.
///
/// Classes and files are ordered byte-wise by name. With a filter, only the
/// named classes are kept and re-indexed densely in that same order. Images
/// are not decoded here.
pub fn load_dir(root: &Path, class_filter: Option<&[String]>) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(Error::Dataset(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let mut classes: Vec<(String, PathBuf)> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_string();
            Some((name, p))
        })
        .collect();
    if let Some(filter) = class_filter {
        if let Some(missing) = filter.iter().find(|f| !classes.iter().any(|(n, _)| n == *f)) {
            return Err(Error::Dataset(format!(
                "class {missing:?} not found under {}",
                root.display()
            )));
        }
        classes.retain(|(n, _)| filter.contains(n));
    }
    if classes.is_empty() {
        return Err(Error::Dataset(format!(
            "no class directories under {}",
            root.display()
        )));
    }

    let mut items = Vec::new();
    let mut class_names = Vec::with_capacity(classes.len());
    for (class, (name, dir)) in classes.into_iter().enumerate() {
        let files: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        if files.is_empty() {
            return Err(Error::Dataset(format!("class {name:?} has no images")));
        }
        for f in files {
            let id = f
                .strip_prefix(root)
                .unwrap_or(&f)
                .to_string_lossy()
                .replace('\\', "/");
            items.push(Item {
                image: ImageSource::Path(f),
                class,
                id,
            });
        }
        class_names.push(name);
    }
    Ok(Dataset {
        items,
        class_names,
        source: DatasetSource::Directory(root.to_path_buf()),
    })
}

/// Named lists of class directories, read from a TOML table
/// `name = ["class_a", "class_b", ...]`.
pub fn load_class_groups(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let groups: BTreeMap<String, Vec<String>> = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some((name, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("class group {name:?} is empty")));
    }
    Ok(groups)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.5,
            seed: 0,
            stratified: true,
        }
    }
}

/// Seeded train/test partition.
///
/// Stratified splits move `round(count · test_fraction)` items of every
/// class to the test side. Both sides keep the original item order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let f = spec.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {f}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut is_test = vec![false; ds.len()];
    if spec.stratified {
        for class in 0..ds.n_classes() {
            let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.items[i].class == class).collect();
            let n_test = (idx.len() as f64 * f).round() as usize;
            if n_test == 0 || n_test == idx.len() {
                return Err(Error::Dataset(format!(
                    "test fraction {f} leaves class {:?} ({} items) empty on one side",
                    ds.class_names[class],
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            for &i in &idx[..n_test] {
                is_test[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        let n_test = (idx.len() as f64 * f).round() as usize;
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
        let mut test_counts = vec![0usize; ds.n_classes()];
        for &i in &idx[..n_test] {
            test_counts[ds.items[i].class] += 1;
        }
        for (c, (&t, &n)) in test_counts.iter().zip(&ds.class_counts()).enumerate() {
            if t == 0 || t == n {
                return Err(Error::Dataset(format!(
                    "unstratified split leaves class {:?} empty on one side",
                    ds.class_names[c]
                )));
            }
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (item, t) in ds.items.iter().zip(is_test) {
        if t {
            test.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((ds.with_items(train), ds.with_items(test)))
}

/// One synthetic class: a hue-tinted sinusoidal grating plus pixel noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureSpec {
    pub name: String,
    /// Base hue in degrees.
    pub hue: f64,
    /// Grating frequency in cycles per image width.
    pub frequency: f64,
    /// Standard deviation of additive noise, as a fraction of full scale.
    pub noise: f64,
}

/// Built-in class layouts for synthetic experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthPreset {
    /// Hues and frequencies spread far apart.
    Distinctive,
    /// Neighbouring hues and frequencies with heavier noise.
    Overlapped,
}

impl SynthPreset {
    pub fn name(self) -> &'static str {
        match self {
            SynthPreset::Distinctive => "distinctive",
            SynthPreset::Overlapped => "overlapped",
        }
    }

    pub fn classes(self, n: usize) -> Vec<TextureSpec> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                let (hue, frequency, noise) = match self {
                    SynthPreset::Distinctive => (360.0 * t / n as f64, 1.0 + 1.5 * t, 0.03),
                    SynthPreset::Overlapped => (12.0 * t, 2.0 + 0.25 * t, 0.12),
                };
                TextureSpec {
                    name: format!("{}_{i}", self.name()),
                    hue,
                    frequency,
                    noise,
                }
            })
            .collect()
    }
}

impl fmt::Display for SynthPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distinctive" => Ok(SynthPreset::Distinctive),
            "overlapped" => Ok(SynthPreset::Overlapped),
            other => Err(Error::Config(format!("unknown synthetic preset {other:?}"))),
        }
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Renders one texture. `phase` shifts the grating.
pub fn render_texture(spec: &TextureSpec, phase: f64, rng: &mut impl Rng) -> RgbImage {
    let n = SYNTH_SIZE;
    let omega = 2.0 * std::f64::consts::PI * spec.frequency / n as f64;
    let base = hsv_to_rgb(spec.hue, 0.8, 1.0);
    let mut pixels = Vec::with_capacity(n * n);
    for _row in 0..n {
        for col in 0..n {
            let v = 0.5 + 0.35 * (omega * col as f64 + phase).sin();
            let mut px = [0u8; 3];
            for (ch, &b) in px.iter_mut().zip(&base) {
                let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise;
                *ch = ((b * v + noise).clamp(0.0, 1.0) * 255.0).round() as u8;
            }
            pixels.push(px);
        }
    }
    RgbImage::new(n, n, pixels).expect("fixed synthetic size")
}

/// `n_per_class` 64×64 textures per spec with a random grating phase each.
///
/// Image `j` of class `c` is drawn from its own ChaCha stream, so the
/// output is bit-identical for a given seed regardless of class count.
pub fn synth_textures(n_per_class: usize, specs: &[TextureSpec], seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::Config("need at least one image per class".into()));
    }
    if specs.is_empty() {
        return Err(Error::Config("need at least one texture class".into()));
    }
    let mut items = Vec::with_capacity(n_per_class * specs.len());
    for (class, spec) in specs.iter().enumerate() {
        for j in 0..n_per_class {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(((class as u64) << 32) | j as u64);
            let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let img = render_texture(spec, phase, &mut rng);
            items.push(Item {
                image: ImageSource::Memory(Arc::new(img)),
                class,
                id: format!("{}/{j:05}", spec.name),
            });
        }
    }
    Ok(Dataset {
        items,
        class_names: specs.iter().map(|s| s.name.clone()).collect(),
        source: DatasetSource::Synthetic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(counts: &[usize]) -> Dataset {
        let img = Arc::new(RgbImage::filled(2, 2, [0, 0, 0]).unwrap());
        let mut items = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for j in 0..n {
                items.push(Item {
                    image: ImageSource::Memory(img.clone()),
                    class: c,
                    id: format!("{c}/{j}"),
                });
            }
        }
        Dataset {
            items,
            class_names: (0..counts.len()).map(|c| format!("c{c}")).collect(),
            source: DatasetSource::Synthetic,
        }
    }

    #[test]
    fn stratified_counts() {
        let ds = toy(&[100, 100]);
        let spec = SplitSpec {
            test_fraction: 0.6,
            ..Default::default()
        };
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!(test.class_counts(), vec![60, 60]);
        assert_eq!(train.class_counts(), vec![40, 40]);
        let (train, test) = split(&toy(&[10]), &SplitSpec::default()).unwrap();
        assert_eq!((train.len(), test.len()), (5, 5));
    }

    #[test]
    fn split_is_seeded() {
        let ds = toy(&[20, 20, 20]);
        let a = SplitSpec {
            seed: 1,
            ..Default::default()
        };
        let b = SplitSpec { seed: 2, ..a };
        assert_eq!(split(&ds, &a).unwrap(), split(&ds, &a).unwrap());
        let (ta, _) = split(&ds, &a).unwrap();
        let (tb, _) = split(&ds, &b).unwrap();
        assert_eq!(ta.class_counts(), tb.class_counts());
        assert_ne!(ta, tb);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let ds = toy(&[1, 5]);
        assert!(split(&ds, &SplitSpec::default()).is_err());
        for f in [0.0, 1.0, -0.2] {
            let spec = SplitSpec {
                test_fraction: f,
                ..Default::default()
            };
            assert!(split(&toy(&[10]), &spec).is_err());
        }
    }

    #[test]
    fn synthetic_is_reproducible() {
        let specs = SynthPreset::Distinctive.classes(3);
        let a = synth_textures(4, &specs, 9).unwrap();
        let b = synth_textures(4, &specs, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert_eq!(a.class_counts(), vec![4, 4, 4]);
        let c = synth_textures(4, &specs, 10).unwrap();
        assert_ne!(a, c);
        let img = a.items[0].load().unwrap();
        assert_eq!((img.width(), img.height()), (64, 64));
    }

    #[test]
    fn hsv_primaries() {
        let near = |a: [f64; 3], b: [f64; 3]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(near(hsv_to_rgb(0.0, 1.0, 1.0), [1.0, 0.0, 0.0]));
        assert!(near(hsv_to_rgb(120.0, 1.0, 1.0), [0.0, 1.0, 0.0]));
        assert!(near(hsv_to_rgb(240.0, 1.0, 1.0), [0.0, 0.0, 1.0]));
        assert!(near(hsv_to_rgb(360.0, 0.0, 0.5), [0.5, 0.5, 0.5]));
    }

    #[test]
    fn preset_names_parse() {
        for p in [SynthPreset::Distinctive, SynthPreset::Overlapped] {
            assert_eq!(p.name().parse::<SynthPreset>().unwrap(), p);
        }
        assert!("mixed".parse::<SynthPreset>().is_err());
    }
}
