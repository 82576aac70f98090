//! Colour planes as a snapshot sequence.
//!
//! ```text
//! cargo run --example lab_snapshots [image.png]
//! ```

use modeforge::color_flow::{build_snapshots, default_order, pixel_to_lab, rgb_to_lab, RgbImage};

fn main() -> modeforge::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(path) => RgbImage::open(path)?,
        None => RgbImage::from_fn(32, 24, |r, c| [(c * 8) as u8, (r * 10) as u8, 90])?,
    };

    for rgb in [[255, 0, 0], [0, 255, 0], [255, 255, 255], img.pixels()[0]] {
        let [l, a, b] = pixel_to_lab(rgb);
        println!("{rgb:?} -> L={l:.2} a={a:.2} b={b:.2}");
    }

    let lab = rgb_to_lab(&img);
    let snaps = build_snapshots(&lab, &default_order())?;
    println!(
        "{}x{} image -> {} x {} snapshot matrix, order {:?}",
        img.width(),
        img.height(),
        snaps.n(),
        snaps.m(),
        snaps.order()
    );
    Ok(())
}
