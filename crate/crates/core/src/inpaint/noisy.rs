//! Harmonic inpainting plus seeded band-limited noise that fades to zero at
//! the mask boundary.

use crate::error::Result;
use crate::hash::hash_words;
use crate::raster::{Mask, Raster};

use super::harmonic::harmonic_inpaint;

/// Value noise in `[-1, 1]` with lattice spacing `corr_len`, smoothly
/// interpolated.
pub fn value_noise(seed: u64, channel: usize, x: f64, y: f64, corr_len: f64) -> f64 {
    let (fx, fy) = (x / corr_len, y / corr_len);
    let (x0, y0) = (fx.floor(), fy.floor());
    let (tx, ty) = (smooth(fx - x0), smooth(fy - y0));
    let at = |i: f64, j: f64| {
        let h = hash_words(&[seed, channel as u64, i as i64 as u64, j as i64 as u64]);
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1.0, y0) * tx;
    let bottom = at(x0, y0 + 1.0) * (1.0 - tx) + at(x0 + 1.0, y0 + 1.0) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// The noise weight at `distance` texels from the boundary.
pub fn fade(distance: u32, width: f64) -> f64 {
    (distance as f64 / width.max(1.0)).min(1.0)
}

pub fn noisy_harmonic(image: &Raster, mask: &Mask, seed: u64, amplitude: f64, corr_len: f64, tolerance: f64) -> Result<Raster> {
    let mut out = harmonic_inpaint(image, mask, tolerance)?;
    if amplitude == 0.0 {
        return Ok(out);
    }
    let corr = corr_len.max(1.0);
    let dist = mask.distance_to_unset();
    let w = image.width();
    for (i, t) in out.data_mut().iter_mut().enumerate() {
        if !mask.bits()[i] {
            continue;
        }
        let f = fade(dist[i], corr);
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        for (c, v) in t.iter_mut().enumerate() {
            let n = value_noise(seed, c, x, y, corr);
            *v = (*v as f64 + amplitude * f * n).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_deterministic() {
        for i in 0..200 {
            let (x, y) = (i as f64 * 1.37, i as f64 * 0.71 - 50.0);
            let v = value_noise(3, 1, x, y, 8.0);
            assert!((-1.0..=1.0).contains(&v));
            assert_eq!(v, value_noise(3, 1, x, y, 8.0));
        }
    }
}
