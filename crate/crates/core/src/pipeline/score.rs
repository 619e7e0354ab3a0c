//! Pixel-domain tile scorers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryCanvas, TileImage};
use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    SeamEnergy,
    TotalVariation,
    Diversity,
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scorer::SeamEnergy => "seam_energy",
            Scorer::TotalVariation => "total_variation",
            Scorer::Diversity => "diversity",
        })
    }
}

impl FromStr for Scorer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seam_energy" => Ok(Scorer::SeamEnergy),
            "total_variation" => Ok(Scorer::TotalVariation),
            "diversity" => Ok(Scorer::Diversity),
            other => Err(Error::Config(format!("scorer {other:?} is not available"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Orientation::HigherBetter => a > b,
            Orientation::LowerBetter => a < b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scorer: Scorer,
    pub value: f64,
    pub orientation: Orientation,
}

fn sq(a: [f32; 3], b: [f32; 3]) -> f64 {
    (0..3).map(|c| ((a[c] - b[c]) as f64).powi(2)).sum::<f64>() / 3.0
}

/// Mean squared difference between synthesized retained texels and the
/// boundary texels next to them.
pub fn seam_energy(canvas: &BoundaryCanvas, inpainted: &Raster) -> f64 {
    let s = canvas.size();
    let (mut acc, mut n) = (0.0, 0usize);
    for y in 0..s {
        for x in 0..s {
            if !(canvas.retained.get(x, y) && canvas.mask.get(x, y)) {
                continue;
            }
            let p = inpainted.get(x, y);
            let mut visit = |qx: usize, qy: usize| {
                if !canvas.mask.get(qx, qy) {
                    acc += sq(p, canvas.pixels.get(qx, qy));
                    n += 1;
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < s {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < s {
                visit(x, y + 1);
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// Mean gradient magnitude (forward differences) over valid texel pairs.
pub fn total_variation(tile: &TileImage) -> f64 {
    let (w, h) = tile.pixels.dims();
    let (mut acc, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if !tile.valid.get(x, y) {
                continue;
            }
            let p = tile.pixels.get(x, y);
            let gx = (x + 1 < w && tile.valid.get(x + 1, y)).then(|| sq(tile.pixels.get(x + 1, y), p));
            let gy = (y + 1 < h && tile.valid.get(x, y + 1)).then(|| sq(tile.pixels.get(x, y + 1), p));
            if gx.is_none() && gy.is_none() {
                continue;
            }
            acc += (gx.unwrap_or(0.0) + gy.unwrap_or(0.0)).sqrt();
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// Zero-normalized cross-correlation over texels valid in both tiles.
pub fn zncc(a: &TileImage, b: &TileImage) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..a.pixels.data().len().min(b.pixels.data().len()) {
        if a.valid.bits()[i] && b.valid.bits()[i] {
            xs.extend(a.pixels.data()[i].iter().map(|&v| v as f64));
            ys.extend(b.pixels.data()[i].iter().map(|&v| v as f64));
        }
    }
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if xs == ys { 1.0 } else { 0.0 };
    }
    sxy / (sxx * syy).sqrt()
}

/// Mean pairwise correlation of a tile list (1 for a single tile).
pub fn diversity(tiles: &[TileImage]) -> Result<f64> {
    if tiles.is_empty() {
        return Err(Error::Config("diversity needs at least one tile".into()));
    }
    if tiles.len() == 1 {
        return Ok(1.0);
    }
    let (mut acc, mut n) = (0.0, 0usize);
    for i in 0..tiles.len() {
        for j in i + 1..tiles.len() {
            acc += zncc(&tiles[i], &tiles[j]);
            n += 1;
        }
    }
    Ok(acc / n as f64)
}

/// Scores a tile list: the mean per-tile value for seam energy (needs the
/// canvases) and total variation, or the list's diversity.
pub fn score(
    scorer: Scorer,
    tiles: &[(TileImage, Option<(BoundaryCanvas, Raster)>)],
    orientation: Option<Orientation>,
) -> Result<ScoreReport> {
    if tiles.is_empty() {
        return Err(Error::Config("nothing to score".into()));
    }
    let value = match scorer {
        Scorer::SeamEnergy => {
            let mut acc = 0.0;
            for (_, ctx) in tiles {
                let (canvas, inpainted) = ctx
                    .as_ref()
                    .ok_or_else(|| Error::Config("seam energy needs the tile canvases".into()))?;
                acc += seam_energy(canvas, inpainted);
            }
            acc / tiles.len() as f64
        }
        Scorer::TotalVariation => tiles.iter().map(|(t, _)| total_variation(t)).sum::<f64>() / tiles.len() as f64,
        Scorer::Diversity => diversity(&tiles.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>())?,
    };
    Ok(ScoreReport {
        scorer,
        value,
        orientation: orientation.unwrap_or(Orientation::LowerBetter),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Mask;

    fn tile(f: impl Fn(usize, usize) -> f32) -> TileImage {
        TileImage {
            pixels: Raster::from_fn(8, 8, |x, y| [f(x, y); 3]),
            valid: Mask::filled(8, 8, true),
        }
    }

    #[test]
    fn identical_list_has_unit_correlation() {
        let t = tile(|x, y| (x * y) as f32 / 64.0);
        assert!((diversity(&[t.clone(), t.clone(), t]).unwrap() - 1.0).abs() < 1e-12);
        assert!(diversity(&[]).is_err());
    }

    #[test]
    fn tv_of_constant_is_zero() {
        assert_eq!(total_variation(&tile(|_, _| 0.3)), 0.0);
        assert!(total_variation(&tile(|x, _| (x % 2) as f32)) > 0.5);
    }

    #[test]
    fn orientation() {
        assert!(Orientation::LowerBetter.better(1.0, 2.0));
        assert!(Orientation::HigherBetter.better(2.0, 1.0));
        assert!(!Orientation::HigherBetter.better(2.0, 2.0));
    }
}
