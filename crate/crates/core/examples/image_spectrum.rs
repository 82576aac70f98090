//! Eigenvalue spectrum of one image's colour snapshots.

use modeforge::color_flow::RgbImage;
use modeforge::dmd::write_spectrum_csv;
use modeforge::features::FeatureConfig;
use modeforge::harness::image_spectrum;

fn main() -> modeforge::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(path) => RgbImage::open(path)?,
        None => RgbImage::from_fn(96, 64, |r, c| {
            let wave = (127.0 + 120.0 * (c as f64 * 0.2).sin()) as u8;
            [wave, (r * 4) as u8, 255 - wave]
        })?,
    };
    let rows = image_spectrum(&img, &FeatureConfig::default())?;
    write_spectrum_csv(&rows, std::io::stdout())
}
