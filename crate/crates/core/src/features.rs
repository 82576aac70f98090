//! Fixed-length image descriptors built from the DMD low-rank/sparse split.
//!
//! The luminance snapshot of the low-rank and sparse reconstructions is
//! average-pooled onto a coarse grid, each pooled block is min-max scaled to
//! `[0, 1]`, and the two blocks are concatenated (low-rank first).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::color_flow::{build_snapshots, default_order, rgb_to_lab, LabImage, Plane, RgbImage};
use crate::dmd::{dmd, lowrank_sparse_split, DEFAULT_BACKGROUND_EPS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Number of DMD eigenvalues kept.
    pub rank: usize,
    pub pool_rows: usize,
    pub pool_cols: usize,
    /// Background threshold on `|log λ|`.
    pub eps: f64,
    pub order: Vec<Plane>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            rank: 5,
            pool_rows: 16,
            pool_cols: 20,
            eps: DEFAULT_BACKGROUND_EPS,
            order: default_order(),
        }
    }
}

impl FeatureConfig {
    pub fn with_rank(rank: usize) -> Self {
        FeatureConfig {
            rank,
            ..Default::default()
        }
    }

    /// Output dimension, two pooled blocks.
    pub fn dim(&self) -> usize {
        2 * self.pool_rows * self.pool_cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("feature rank must be at least 1".into()));
        }
        if self.pool_rows == 0 || self.pool_cols == 0 {
            return Err(Error::Config("pool shape must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("background eps must be positive".into()));
        }
        if self.order.len() < 2 {
            return Err(Error::Config(
                "snapshot order needs at least two planes".into(),
            ));
        }
        if self.rank > self.order.len() - 1 {
            return Err(Error::Config(format!(
                "rank {} exceeds the {} transitions of the snapshot order",
                self.rank,
                self.order.len() - 1
            )));
        }
        Ok(())
    }

    /// Short stable digest identifying the configuration.
    pub fn hash(&self) -> String {
        let order: String = self.order.iter().map(|p| p.to_string()).collect();
        let canonical = format!(
            "rank={};pool={}x{};eps={:e};order={}",
            self.rank, self.pool_rows, self.pool_cols, self.eps, order
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub id: String,
    pub rank: usize,
    pub config_hash: String,
}

/// `(x − min) / (max − min)`; a constant block maps to zeros.
pub fn minmax_normalize(block: &[f64]) -> Vec<f64> {
    let scale = block.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    minmax_normalize_with_tol(block, 1e-12 * scale.max(1.0))
}

/// As [`minmax_normalize`], treating any range `≤ tol` as constant.
pub fn minmax_normalize_with_tol(block: &[f64], tol: f64) -> Vec<f64> {
    let (lo, hi) = block
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if block.is_empty() || !(range > tol) {
        return vec![0.0; block.len()];
    }
    block
        .iter()
        .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
        .collect()
}

/// Cell boundaries splitting `len` into `parts` near-equal spans, the
/// remainder going to the leading spans.
fn cell_bounds(len: usize, parts: usize) -> Vec<usize> {
    let base = len / parts;
    let extra = len % parts;
    let mut bounds = Vec::with_capacity(parts + 1);
    let mut at = 0;
    bounds.push(0);
    for i in 0..parts {
        at += base + usize::from(i < extra);
        bounds.push(at);
    }
    bounds
}

/// Mean-pools a row-major `height × width` plane onto a `rows × cols` grid.
pub fn average_pool(
    plane: &[f64],
    height: usize,
    width: usize,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    if plane.len() != height * width {
        return Err(Error::DimensionMismatch {
            expected: height * width,
            got: plane.len(),
        });
    }
    if rows == 0 || cols == 0 || rows > height || cols > width {
        return Err(Error::Config(format!(
            "pool target {rows}x{cols} does not fit a {height}x{width} plane"
        )));
    }
    let rb = cell_bounds(height, rows);
    let cb = cell_bounds(width, cols);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut sum = 0.0;
            for r in rb[i]..rb[i + 1] {
                sum += plane[r * width + cb[j]..r * width + cb[j + 1]]
                    .iter()
                    .sum::<f64>();
            }
            let count = (rb[i + 1] - rb[i]) * (cb[j + 1] - cb[j]);
            out.push(sum / count as f64);
        }
    }
    Ok(out)
}

/// Nearest-neighbour replication so that a plane covers at least the pool grid.
fn upsample_to_cover(
    plane: &[f64],
    height: usize,
    width: usize,
    rows: usize,
    cols: usize,
) -> (Vec<f64>, usize, usize) {
    let fr = rows.div_ceil(height).max(1);
    let fc = cols.div_ceil(width).max(1);
    if fr == 1 && fc == 1 {
        return (plane.to_vec(), height, width);
    }
    let (h, w) = (height * fr, width * fc);
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(plane[(r / fr) * width + c / fc]);
        }
    }
    (out, h, w)
}

/// Runs the full pipeline on one image.
pub fn extract_feature(image: &RgbImage, cfg: &FeatureConfig, id: &str) -> Result<FeatureVector> {
    extract_from_lab(&rgb_to_lab(image), cfg, id)
}

/// Same as [`extract_feature`], starting from Lab planes.
pub fn extract_from_lab(lab: &LabImage, cfg: &FeatureConfig, id: &str) -> Result<FeatureVector> {
    cfg.validate()?;
    let snaps = build_snapshots(lab, &cfg.order)?;
    let x = snaps.data();
    let column = cfg.order.iter().position(|&p| p == Plane::L).unwrap_or(0);
    let (h, w) = (lab.height(), lab.width());
    let n = h * w;

    let (low, sparse) = if x.iter().all(|&v| v == 0.0) {
        (vec![0.0; n], vec![0.0; n])
    } else {
        let rank = cfg.rank.min(n);
        let result = dmd(&snaps, rank)?;
        let split = lowrank_sparse_split(&result, x, cfg.eps)?;
        (
            split.lowrank.column(column).iter().copied().collect(),
            split.sparse.column(column).iter().copied().collect(),
        )
    };

    let xscale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * xscale.max(1.0);
    let mut values = Vec::with_capacity(cfg.dim());
    for plane in [&low, &sparse] {
        let (p, ph, pw) = upsample_to_cover(plane, h, w, cfg.pool_rows, cfg.pool_cols);
        let pooled = average_pool(&p, ph, pw, cfg.pool_rows, cfg.pool_cols)?;
        values.extend(minmax_normalize_with_tol(&pooled, tol));
    }
    Ok(FeatureVector {
        values,
        id: id.to_string(),
        rank: cfg.rank,
        config_hash: cfg.hash(),
    })
}

/// One exported feature row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub label: String,
    pub values: Vec<f32>,
}

/// A table of feature rows sharing one dimension, as stored on disk.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FeatureSet {
    pub dim: usize,
    pub rows: Vec<FeatureRow>,
}

const MAGIC: &[u8; 4] = b"DMDF";
const VERSION: u16 = 1;

/// On-disk encoding of a [`FeatureSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    Binary,
}

impl FeatureSet {
    pub fn new(dim: usize) -> Self {
        FeatureSet {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, label: impl Into<String>, values: &[f64]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        self.rows.push(FeatureRow {
            id: id.into(),
            label: label.into(),
            values: values.iter().map(|&v| v as f32).collect(),
        });
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..self.dim).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.id.clone(), row.label.clone()];
            rec.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
            return Err(Error::Format(
                "feature CSV must start with id,label columns".into(),
            ));
        }
        let dim = header.len() - 2;
        let mut set = FeatureSet::new(dim);
        for rec in r.records() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(2)
                .map(|s| {
                    s.parse::<f32>()
                        .map_err(|_| Error::Format(format!("bad feature value {s:?}")))
                })
                .collect::<Result<Vec<f32>>>()?;
            if values.len() != dim {
                return Err(Error::Format("ragged feature CSV row".into()));
            }
            set.rows.push(FeatureRow {
                id: rec[0].to_string(),
                label: rec[1].to_string(),
                values,
            });
        }
        Ok(set)
    }

    /// Layout: `"DMDF"`, version `u16`, dim `u32`, row count `u32`, then per
    /// row a `u16`-length-prefixed UTF-8 id and label followed by `dim`
    /// `f32` values. All integers and floats little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<feature binary>", e);
        out.write_all(MAGIC).map_err(io)?;
        out.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        out.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        out.write_all(&(self.rows.len() as u32).to_le_bytes()).map_err(io)?;
        for row in &self.rows {
            for s in [&row.id, &row.label] {
                let len = u16::try_from(s.len())
                    .map_err(|_| Error::Format(format!("string too long: {s:?}")))?;
                out.write_all(&len.to_le_bytes()).map_err(io)?;
                out.write_all(s.as_bytes()).map_err(io)?;
            }
            for v in &row.values {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input
            .read_to_end(&mut buf)
            .map_err(|e| Error::io("<feature binary>", e))?;
        let mut cur = Cursor { buf: &buf, at: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("missing DMDF magic".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported DMDF version {version}")));
        }
        let dim = u32::from_le_bytes(cur.array()?) as usize;
        let count = u32::from_le_bytes(cur.array()?) as usize;
        let mut set = FeatureSet::new(dim);
        for _ in 0..count {
            let id = cur.string()?;
            let label = cur.string()?;
            let values = (0..dim)
                .map(|_| cur.array().map(f32::from_le_bytes))
                .collect::<Result<Vec<f32>>>()?;
            set.rows.push(FeatureRow { id, label, values });
        }
        if cur.at != buf.len() {
            return Err(Error::Format("trailing bytes after DMDF payload".into()));
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path, format: FeatureFormat) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let w = BufWriter::new(file);
        match format {
            FeatureFormat::Csv => self.write_csv(w),
            FeatureFormat::Binary => self.write_binary(w),
        }
    }

    /// Loads either encoding, sniffing the binary magic.
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.is_empty() {
            return Err(Error::Format(format!("{} is empty", path.display())));
        }
        if bytes.starts_with(MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_csv(bytes.as_slice())
        }
    }
}

pub(crate) struct Cursor<'a> {
    pub(crate) buf: &'a [u8],
    pub(crate) at: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at + n;
        if end > self.buf.len() {
            return Err(Error::Format("truncated binary file".into()));
        }
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice length checked"))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let len = u16::from_le_bytes(self.array()?) as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Format("invalid UTF-8 in binary string".into()))
    }
}
