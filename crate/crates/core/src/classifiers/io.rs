//! Binary model container.
//!
//! ```text
//! "DMDM"  u16 version  u8 kind (1 rks, 2 linear svm, 3 rbf svm)
//! kind-specific header (integers u32/u64, scalars f64)
//! payload: little-endian f32
//! ```
//!
//! RKS models store the `(seed, k, sigma, d)` tuple of their map and
//! regenerate the frequencies on load. Payload values are rounded to `f32`,
//! so a loaded model scores within single precision of the original; saving
//! a loaded model again reproduces the same bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Classifier, RksModel, SvmKind, SvmModel};
use crate::error::{Error, Result};
use crate::features::Cursor;
use crate::rff::{RffMap, RffParams};

const MAGIC: &[u8; 4] = b"DMDM";
const VERSION: u16 = 1;
const KIND_RKS: u8 = 1;
const KIND_LINEAR: u8 = 2;
const KIND_RBF: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Rks(RksModel),
    Svm(SvmModel),
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        match self {
            Model::Rks(m) => m.n_classes(),
            Model::Svm(m) => m.n_classes(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Model::Rks(m) => m.input_dim(),
            Model::Svm(m) => m.input_dim(),
        }
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Rks(m) => m.scores(x),
            Model::Svm(m) => m.scores(x),
        }
    }
}

struct Writer<W> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.out
            .write_all(b)
            .map_err(|e| Error::io("<model binary>", e))
    }

    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn matrix(&mut self, m: &DMatrix<f64>) -> Result<()> {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.bytes(&(m[(r, c)] as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn floats(&mut self, v: &[f64]) -> Result<()> {
        for x in v {
            self.bytes(&(*x as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

impl Cursor<'_> {
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| self.array().map(|b| f32::from_le_bytes(b) as f64))
            .collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let v = self.floats(rows * cols)?;
        Ok(DMatrix::from_row_slice(rows, cols, &v))
    }
}

pub fn write_model<W: Write>(model: &Model, out: W) -> Result<()> {
    let mut w = Writer { out };
    w.bytes(MAGIC)?;
    w.bytes(&VERSION.to_le_bytes())?;
    match model {
        Model::Rks(m) => {
            let p = m.map.params();
            w.bytes(&[KIND_RKS])?;
            w.bytes(&p.seed.to_le_bytes())?;
            w.u32(p.k)?;
            w.f64(p.sigma)?;
            w.u32(p.d)?;
            w.u32(m.n_classes())?;
            w.f64(m.reg_lambda)?;
            w.matrix(&m.weights)?;
            w.floats(&m.intercept)?;
        }
        Model::Svm(m) => match m.kind {
            SvmKind::Linear => {
                w.bytes(&[KIND_LINEAR])?;
                w.u32(m.n_classes)?;
                w.u32(m.dim)?;
                w.matrix(&m.weights)?;
                w.floats(&m.bias)?;
            }
            SvmKind::Rbf => {
                w.bytes(&[KIND_RBF])?;
                w.u32(m.n_classes)?;
                w.u32(m.dim)?;
                w.u32(m.support_vectors.nrows())?;
                w.f64(m.gamma)?;
                w.matrix(&m.support_vectors)?;
                w.matrix(&m.dual_coef)?;
                w.floats(&m.bias)?;
            }
        },
    }
    w.out.flush().map_err(|e| Error::io("<model binary>", e))
}

pub fn read_model<R: Read>(mut input: R) -> Result<Model> {
    let mut buf = Vec::new();
    input
        .read_to_end(&mut buf)
        .map_err(|e| Error::io("<model binary>", e))?;
    let mut cur = Cursor { buf: &buf, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("missing DMDM magic".into()));
    }
    let version = u16::from_le_bytes(cur.array()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported DMDM version {version}")));
    }
    let [kind] = cur.array()?;
    let model = match kind {
        KIND_RKS => {
            let seed = u64::from_le_bytes(cur.array()?);
            let k = cur.u32()?;
            let sigma = cur.f64()?;
            let d = cur.u32()?;
            let c = cur.u32()?;
            let reg_lambda = cur.f64()?;
            let map = RffMap::from_params(RffParams { seed, k, sigma, d })?;
            let weights = cur.matrix(2 * k, c)?;
            let intercept = cur.floats(c)?;
            Model::Rks(RksModel {
                map,
                weights,
                intercept,
                reg_lambda,
            })
        }
        KIND_LINEAR => {
            let c = cur.u32()?;
            let d = cur.u32()?;
            let weights = cur.matrix(c, d)?;
            let bias = cur.floats(c)?;
            Model::Svm(SvmModel {
                kind: SvmKind::Linear,
                n_classes: c,
                dim: d,
                weights,
                support_vectors: DMatrix::zeros(0, d),
                dual_coef: DMatrix::zeros(0, c),
                bias,
                gamma: 0.0,
            })
        }
        KIND_RBF => {
            let c = cur.u32()?;
            let d = cur.u32()?;
            let n_sv = cur.u32()?;
            let gamma = cur.f64()?;
            let support_vectors = cur.matrix(n_sv, d)?;
            let dual_coef = cur.matrix(n_sv, c)?;
            let bias = cur.floats(c)?;
            Model::Svm(SvmModel {
                kind: SvmKind::Rbf,
                n_classes: c,
                dim: d,
                weights: DMatrix::zeros(0, d),
                support_vectors,
                dual_coef,
                bias,
                gamma,
            })
        }
        other => return Err(Error::Format(format!("unknown model kind tag {other}"))),
    };
    if cur.at != buf.len() {
        return Err(Error::Format("trailing bytes after model payload".into()));
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, BufWriter::new(f))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(f))
}
