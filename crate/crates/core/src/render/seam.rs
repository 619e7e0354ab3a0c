use serde::{Deserialize, Serialize};

use crate::boundary::Axis;
use crate::raster::Raster;

/// A seam segment. A vertical seam at `pos` runs between columns `pos - 1`
/// and `pos` over rows `start..start + len`; horizontal seams likewise
/// between rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seam {
    pub axis: Axis,
    pub pos: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub per_seam: Vec<f64>,
    pub aggregate: f64,
}

/// Below one 8-bit quantization step squared, so flat regions do not blow
/// the ratio up.
const FLOOR: f64 = 1e-8;

fn d2(a: [f32; 3], b: [f32; 3]) -> f64 {
    (0..3).map(|c| ((a[c] - b[c]) as f64).powi(2)).sum::<f64>() / 3.0
}

/// Per seam: mean squared difference across the seam divided by the mean
/// squared difference between the two texel pairs just inside it on either
/// side. Seams touching the image border use whichever side exists.
pub fn seam_energy_map(image: &Raster, seams: &[Seam]) -> SeamReport {
    let (w, h) = image.dims();
    let per_seam: Vec<f64> = seams
        .iter()
        .map(|s| {
            let extent = match s.axis {
                Axis::Vertical => w,
                Axis::Horizontal => h,
            };
            if s.pos == 0 || s.pos >= extent {
                return 0.0;
            }
            let at = |along: usize, across: usize| match s.axis {
                Axis::Vertical => image.get(across, along),
                Axis::Horizontal => image.get(along, across),
            };
            let limit = match s.axis {
                Axis::Vertical => h,
                Axis::Horizontal => w,
            };
            let (mut cross, mut inner, mut n_inner, mut n) = (0.0, 0.0, 0usize, 0usize);
            for t in s.start..(s.start + s.len).min(limit) {
                cross += d2(at(t, s.pos - 1), at(t, s.pos));
                n += 1;
                if s.pos >= 2 {
                    inner += d2(at(t, s.pos - 2), at(t, s.pos - 1));
                    n_inner += 1;
                }
                if s.pos + 1 < extent {
                    inner += d2(at(t, s.pos), at(t, s.pos + 1));
                    n_inner += 1;
                }
            }
            if n == 0 {
                return 0.0;
            }
            let cross = cross / n as f64;
            if cross == 0.0 {
                return 0.0;
            }
            let inner = if n_inner == 0 { 0.0 } else { inner / n_inner as f64 };
            cross / inner.max(FLOOR)
        })
        .collect();
    let aggregate = if per_seam.is_empty() {
        0.0
    } else {
        per_seam.iter().sum::<f64>() / per_seam.len() as f64
    };
    SeamReport { per_seam, aggregate }
}

/// The interior tile-edge segments of a `width × height` grid of `R × R`
/// tiles.
pub fn tile_seams(width: usize, height: usize, tile_size: usize) -> Vec<Seam> {
    let mut out = Vec::new();
    for y in 0..height {
        for x in 1..width {
            out.push(Seam {
                axis: Axis::Vertical,
                pos: x * tile_size,
                start: y * tile_size,
                len: tile_size,
            });
        }
    }
    for y in 1..height {
        for x in 0..width {
            out.push(Seam {
                axis: Axis::Horizontal,
                pos: y * tile_size,
                start: x * tile_size,
                len: tile_size,
            });
        }
    }
    out
}
