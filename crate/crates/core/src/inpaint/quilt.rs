//! Patch quilting: exemplar blocks chosen by overlap error and merged along
//! minimum-error boundary cuts.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuiltParams {
    pub patch: usize,
    pub overlap: usize,
    /// Candidate placements examined per block; all placements are tried
    /// when the exemplar offers no more than this.
    pub candidates: usize,
    /// Candidates within `(1 + tolerance)` of the best error are equally
    /// eligible. Zero always takes the best.
    pub tolerance: f64,
}

impl Default for QuiltParams {
    fn default() -> Self {
        QuiltParams {
            patch: 32,
            overlap: 8,
            candidates: 256,
            tolerance: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuiltOutput {
    pub image: Raster,
    /// Exemplar texel each synthesized texel was copied from.
    pub provenance: Vec<Option<(u32, u32)>>,
}

pub fn quilt_inpaint(image: &Raster, mask: &Mask, exemplar: &Raster, seed: u64, params: &QuiltParams) -> Result<Raster> {
    quilt(image, mask, exemplar, seed, params).map(|o| o.image)
}

/// Mean squared error of an exemplar placement over the known texels of a
/// block.
pub fn block_error(
    image: &Raster,
    known: &[bool],
    exemplar: &Raster,
    block: (usize, usize),
    source: (usize, usize),
    size: usize,
) -> f64 {
    let w = image.width();
    let (mut acc, mut n) = (0.0f64, 0usize);
    for j in 0..size {
        for i in 0..size {
            let (x, y) = (block.0 + i, block.1 + j);
            if !known[y * w + x] {
                continue;
            }
            let a = image.get(x, y);
            let b = exemplar.get(source.0 + i, source.1 + j);
            for c in 0..3 {
                let d = (a[c] - b[c]) as f64;
                acc += d * d;
            }
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

pub fn quilt(image: &Raster, mask: &Mask, exemplar: &Raster, seed: u64, params: &QuiltParams) -> Result<QuiltOutput> {
    let (w, h) = image.dims();
    let mut out = image.clone();
    let mut provenance = vec![None; w * h];
    if !mask.any() {
        return Ok(QuiltOutput { image: out, provenance });
    }
    let p = params.patch.min(w).min(h);
    if p == 0 || exemplar.width() < p || exemplar.height() < p {
        return Err(Error::Geometry(format!(
            "exemplar {}x{} smaller than the {p}x{p} quilting patch",
            exemplar.width(),
            exemplar.height()
        )));
    }
    let overlap = params.overlap.min(p / 2);
    let step = (p - overlap).max(1);

    let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    let origins = |lo: usize, hi: usize, extent: usize| -> Vec<usize> {
        if hi - lo <= p {
            let center = (lo + hi) / 2;
            return vec![center.saturating_sub(p / 2).min(extent - p)];
        }
        let mut v = Vec::new();
        let mut o = lo.saturating_sub(overlap);
        loop {
            let clamped = o.min(extent - p);
            v.push(clamped);
            if clamped + p >= hi {
                break;
            }
            o += step;
        }
        v
    };
    let bxs = origins(x0, x1, w);
    let bys = origins(y0, y1, h);

    let mut known: Vec<bool> = mask.bits().iter().map(|&m| !m).collect();
    let mut filled = vec![false; w * h];
    let (ew, eh) = (exemplar.width() - p + 1, exemplar.height() - p + 1);
    let total = ew * eh;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for &by in &bys {
        for &bx in &bxs {
            let pending = (0..p).any(|j| (0..p).any(|i| mask.get(bx + i, by + j) && !filled[(by + j) * w + bx + i]));
            if !pending {
                continue;
            }
            let candidates: Vec<usize> = if total <= params.candidates {
                (0..total).collect()
            } else {
                sample(&mut rng, total, params.candidates).into_vec()
            };
            let errors: Vec<f64> = candidates
                .iter()
                .map(|&c| block_error(&out, &known, exemplar, (bx, by), (c % ew, c / ew), p))
                .collect();
            let best = errors.iter().cloned().fold(f64::INFINITY, f64::min);
            let eligible: Vec<usize> = (0..candidates.len())
                .filter(|&k| errors[k] <= best * (1.0 + params.tolerance))
                .collect();
            let pick = if params.tolerance == 0.0 {
                eligible[0]
            } else {
                eligible[rng.gen_range(0..eligible.len())]
            };
            let (sx, sy) = (candidates[pick] % ew, candidates[pick] / ew);

            let cost = |i: usize, j: usize| -> f64 {
                let (x, y) = (bx + i, by + j);
                if !filled[y * w + x] {
                    return 0.0;
                }
                let a = out.get(x, y);
                let b = exemplar.get(sx + i, sy + j);
                (0..3).map(|c| ((a[c] - b[c]) as f64).powi(2)).sum()
            };
            // vertical cut through the left overlap, horizontal through the top
            let left_cut = min_cut(p, overlap, |along, across| cost(across, along));
            let top_cut = min_cut(p, overlap, |along, across| cost(along, across));

            for j in 0..p {
                for i in 0..p {
                    let (x, y) = (bx + i, by + j);
                    let k = y * w + x;
                    if !mask.get(x, y) {
                        continue;
                    }
                    let take = !filled[k] || (i >= left_cut[j] && j >= top_cut[i]);
                    if take {
                        out.set(x, y, exemplar.get(sx + i, sy + j));
                        provenance[k] = Some(((sx + i) as u32, (sy + j) as u32));
                        filled[k] = true;
                        known[k] = true;
                    }
                }
            }
        }
    }
    debug_assert!((0..w * h).all(|k| !mask.bits()[k] || filled[k]));
    Ok(QuiltOutput { image: out, provenance })
}

/// Dynamic-programming minimum cut across a strip `len` long and `width`
/// wide. Returns, for every position along the strip, the first offset that
/// belongs to the new block (0 when the strip is empty).
fn min_cut(len: usize, width: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    if width == 0 {
        return vec![0; len];
    }
    let mut acc = vec![vec![0.0f64; width]; len];
    let mut from = vec![vec![0usize; width]; len];
    for a in 0..len {
        for c in 0..width {
            let e = cost(a, c);
            if a == 0 {
                acc[a][c] = e;
                continue;
            }
            let mut best = (f64::INFINITY, c);
            for pc in c.saturating_sub(1)..=(c + 1).min(width - 1) {
                if acc[a - 1][pc] < best.0 {
                    best = (acc[a - 1][pc], pc);
                }
            }
            acc[a][c] = e + best.0;
            from[a][c] = best.1;
        }
    }
    let mut cut = vec![0; len];
    let mut c = (0..width)
        .min_by(|&x, &y| acc[len - 1][x].total_cmp(&acc[len - 1][y]))
        .unwrap();
    for a in (0..len).rev() {
        cut[a] = c;
        c = from[a][c];
    }
    cut
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_cut_on_uniform_cost() {
        let cut = min_cut(5, 3, |_, c| if c == 2 { 0.0 } else { 1.0 });
        assert_eq!(cut, vec![2; 5]);
    }

    #[test]
    fn tiny_exemplar_is_an_error() {
        let img = Raster::new(40, 40);
        let mask = Mask::from_fn(40, 40, |x, _| x > 20);
        let ex = Raster::new(8, 8);
        assert!(quilt_inpaint(&img, &mask, &ex, 0, &QuiltParams::default()).is_err());
    }
}
