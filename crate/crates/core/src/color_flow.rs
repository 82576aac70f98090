//! sRGB to CIE Lab conversion and pseudo-temporal snapshot assembly.
//!
//! A static image has no time axis, so one is fabricated: each Lab plane is
//! flattened into a column and the columns are stacked in a configurable
//! plane order. The resulting matrix is what the DMD routines consume.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear sRGB to XYZ, D65 white, 2 degree observer.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

// CIE constants, exact rational forms.
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Reference white: the XYZ image of linear RGB (1, 1, 1), so that sRGB white
/// lands exactly on L = 100, a = b = 0.
fn white_point() -> [f64; 3] {
    [
        RGB_TO_XYZ[0].iter().sum(),
        RGB_TO_XYZ[1].iter().sum(),
        RGB_TO_XYZ[2].iter().sum(),
    ]
}

/// An 8-bit sRGB image with row-major pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    /// Constant-colour image.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Builds an image from a per-pixel generator `f(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Decodes a PNG or JPEG file. Grayscale is expanded and alpha is dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(&decoded))
    }

    pub fn from_dynamic(img: &image::DynamicImage) -> Self {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        RgbImage {
            width: w as usize,
            height: h as usize,
            pixels: rgb.pixels().map(|p| p.0).collect(),
        }
    }

    pub fn to_image_buffer(&self) -> image::RgbImage {
        let mut buf = image::RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in buf.pixels_mut().zip(&self.pixels) {
            dst.0 = *src;
        }
        buf
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// A Lab image stored as three planes in the pixel order of its source.
#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    l: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LabImage {
    pub fn from_planes(
        width: usize,
        height: usize,
        l: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 {
            return Err(Error::Config("Lab image must be non-empty".into()));
        }
        for plane in [&l, &a, &b] {
            if plane.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: plane.len(),
                });
            }
        }
        Ok(LabImage {
            width,
            height,
            l,
            a,
            b,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, p: Plane) -> &[f64] {
        match p {
            Plane::L => &self.l,
            Plane::A => &self.a,
            Plane::B => &self.b,
        }
    }

    /// Adds `offset` to every entry of all three planes.
    pub fn shifted(&self, offset: f64) -> LabImage {
        let shift = |v: &[f64]| v.iter().map(|x| x + offset).collect::<Vec<_>>();
        LabImage {
            width: self.width,
            height: self.height,
            l: shift(&self.l),
            a: shift(&self.a),
            b: shift(&self.b),
        }
    }
}

/// One of the three Lab planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    L,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::L => "L",
            Plane::A => "a",
            Plane::B => "b",
        })
    }
}

impl FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Plane::L),
            "a" | "A" => Ok(Plane::A),
            "b" | "B" => Ok(Plane::B),
            other => Err(Error::Config(format!("unknown Lab plane {other:?}"))),
        }
    }
}

/// The default plane sequence `L a b L b a`: six snapshots, so five transitions.
pub fn default_order() -> Vec<Plane> {
    vec![Plane::L, Plane::A, Plane::B, Plane::L, Plane::B, Plane::A]
}

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let v = c as f64 / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// Converts one sRGB pixel to `(L, a, b)`.
pub fn pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let white = white_point();
    let mut f = [0.0; 3];
    for i in 0..3 {
        let xyz = RGB_TO_XYZ[i][0] * lin[0] + RGB_TO_XYZ[i][1] * lin[1] + RGB_TO_XYZ[i][2] * lin[2];
        f[i] = lab_f(xyz / white[i]);
    }
    [116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])]
}

/// Converts `(L, a, b)` back to 8-bit sRGB, clamping out-of-gamut values.
pub fn lab_to_pixel(lab: [f64; 3]) -> [u8; 3] {
    let white = white_point();
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * white[0],
        lab_f_inv(fy) * white[1],
        lab_f_inv(fz) * white[2],
    ];
    let mut out = [0u8; 3];
    for i in 0..3 {
        let lin = XYZ_TO_RGB[i][0] * xyz[0] + XYZ_TO_RGB[i][1] * xyz[1] + XYZ_TO_RGB[i][2] * xyz[2];
        out[i] = (linear_to_srgb(lin.clamp(0.0, 1.0)) * 255.0).round() as u8;
    }
    out
}

pub fn rgb_to_lab(image: &RgbImage) -> LabImage {
    let n = image.pixels.len();
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &px in &image.pixels {
        let [pl, pa, pb] = pixel_to_lab(px);
        l.push(pl);
        a.push(pa);
        b.push(pb);
    }
    LabImage {
        width: image.width,
        height: image.height,
        l,
        a,
        b,
    }
}

pub fn lab_to_rgb(lab: &LabImage) -> RgbImage {
    let pixels = (0..lab.l.len())
        .map(|i| lab_to_pixel([lab.l[i], lab.a[i], lab.b[i]]))
        .collect();
    RgbImage {
        width: lab.width,
        height: lab.height,
        pixels,
    }
}

/// Columns are flattened Lab planes, one per entry of `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix {
    width: usize,
    height: usize,
    data: DMatrix<f64>,
    order: Vec<Plane>,
}

impl SnapshotMatrix {
    /// Wraps an arbitrary snapshot matrix, e.g. states of a simulated system.
    /// The matrix is treated as a single-row "image" of `nrows` pixels.
    pub fn from_matrix(data: DMatrix<f64>) -> Self {
        SnapshotMatrix {
            width: data.nrows(),
            height: 1,
            data,
            order: Vec::new(),
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Pixels per plane.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Snapshot count.
    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    pub fn order(&self) -> &[Plane] {
        &self.order
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

pub fn build_snapshots(lab: &LabImage, order: &[Plane]) -> Result<SnapshotMatrix> {
    if order.is_empty() {
        return Err(Error::Config("snapshot order must not be empty".into()));
    }
    let n = lab.width * lab.height;
    let mut data = DMatrix::zeros(n, order.len());
    for (j, &p) in order.iter().enumerate() {
        data.column_mut(j).copy_from_slice(lab.plane(p));
    }
    Ok(SnapshotMatrix {
        width: lab.width,
        height: lab.height,
        data,
        order: order.to_vec(),
    })
}
