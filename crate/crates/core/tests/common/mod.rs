#![allow(dead_code)]

use dualtile::pipeline::{ProjectConfig, Scheme};
use dualtile::{ColorCount, Raster};

/// Smooth, non-periodic synthetic exemplar with distinct content everywhere.
pub fn exemplar(w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as f32, y as f32);
        let c = |p: f32| {
            0.5 + 0.22 * (x / 9.3 + p + 1.4 * (y / 17.0 + p).sin()).sin() + 0.18 * (y / 7.1 - 0.6 * p + x / 23.0).cos()
        };
        [c(0.0), c(1.7), c(3.1)]
    })
    .quantized()
}

pub fn config(scheme: Scheme, colors: u32, tile_size: usize) -> ProjectConfig {
    ProjectConfig {
        scheme,
        colors: ColorCount::new(colors).unwrap(),
        tile_size,
        candidates: 1,
        seed: 1234,
        ..Default::default()
    }
}
