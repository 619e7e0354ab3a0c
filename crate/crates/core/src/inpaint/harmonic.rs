//! Discrete Laplace inpainting.
//!
//! Masked texels solve `deg·p − Σ neighbours = 0` (neighbours inside the
//! image; unmasked ones act as Dirichlet data, the image border as a
//! Neumann boundary). The system is solved per channel by conjugate
//! gradients preconditioned with a multigrid V-cycle on a Galerkin
//! hierarchy built from piecewise-constant 2×2 aggregation, which keeps the
//! iteration count nearly independent of canvas size.

use crate::error::{Error, Result};
use crate::raster::{Mask, Raster};

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    /// Largest PCG iteration count over the channels.
    pub iterations: usize,
    /// Largest `|p − mean of neighbours|` over masked texels and channels,
    /// before clamping.
    pub residual: f64,
}

/// Default cap on PCG iterations per channel.
pub const MAX_ITERATIONS: usize = 2000;

/// Fills masked texels with the harmonic interpolant of the unmasked ones,
/// iterating until `|p − mean of neighbours| ≤ tolerance · range` everywhere
/// (`range` = spread of the boundary values of the channel). The result is
/// clamped to the boundary range, so the maximum principle holds exactly.
pub fn harmonic_inpaint(image: &Raster, mask: &Mask, tolerance: f64) -> Result<Raster> {
    solve(image, mask, tolerance, MAX_ITERATIONS).map(|(r, _)| r)
}

pub fn solve(image: &Raster, mask: &Mask, tolerance: f64, max_iterations: usize) -> Result<(Raster, SolveStats)> {
    if image.dims() != mask.dims() {
        return Err(Error::SizeMismatch {
            expected: image.dims(),
            actual: mask.dims(),
        });
    }
    if !(tolerance > 0.0) {
        return Err(Error::Config("harmonic tolerance must be positive".into()));
    }
    let mut out = image.clone();
    let mut stats = SolveStats {
        iterations: 0,
        residual: 0.0,
    };
    if !mask.any() {
        return Ok((out, stats));
    }
    check_boundary(mask)?;
    let hierarchy = Hierarchy::new(mask);
    let (w, h) = mask.dims();
    for ch in 0..3 {
        let known = |i: usize| image.data()[i][ch] as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..w * h {
            if !mask.bits()[i] && touches_mask(mask, i) {
                let v = known(i);
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
                count += 1;
            }
        }
        let level = &hierarchy.levels[0];
        let mut x = vec![0.0f64; w * h];
        if hi - lo <= 0.0 {
            for i in 0..w * h {
                if level.unknown[i] {
                    x[i] = lo;
                }
            }
        } else {
            let mut b = vec![0.0f64; w * h];
            for i in 0..w * h {
                if !level.unknown[i] {
                    continue;
                }
                let (px, py) = (i % w, i / w);
                let mut acc = 0.0;
                for j in neighbours(px, py, w, h) {
                    if !mask.bits()[j] {
                        acc += known(j);
                    }
                }
                b[i] = acc;
                x[i] = sum / count as f64;
            }
            let tol_abs = tolerance * (hi - lo);
            let (iters, res) = pcg(&hierarchy, &b, &mut x, tol_abs, max_iterations)?;
            stats.iterations = stats.iterations.max(iters);
            stats.residual = stats.residual.max(res);
        }
        for i in 0..w * h {
            if level.unknown[i] {
                out.data_mut()[i][ch] = x[i].clamp(lo, hi) as f32;
            }
        }
    }
    Ok((out, stats))
}

fn neighbours(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let i = y * w + x;
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

fn touches_mask(mask: &Mask, i: usize) -> bool {
    let (w, h) = mask.dims();
    neighbours(i % w, i / w, w, h).any(|j| mask.bits()[j])
}

/// Every 4-connected masked component must touch an unmasked texel.
fn check_boundary(mask: &Mask) -> Result<()> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits()[start] || seen[start] {
            continue;
        }
        let mut grounded = false;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in neighbours(i % w, i / w, w, h) {
                if !mask.bits()[j] {
                    grounded = true;
                } else if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if !grounded {
            return Err(Error::NoBoundary(format!(
                "masked component containing ({}, {})",
                start % w,
                start / w
            )));
        }
    }
    Ok(())
}

/// Five-point symmetric operator on a grid: `diag` on unknowns, `east[i]`
/// couples `i` and `i + 1`, `south[i]` couples `i` and `i + w`.
struct Level {
    w: usize,
    h: usize,
    unknown: Vec<bool>,
    diag: Vec<f64>,
    east: Vec<f64>,
    south: Vec<f64>,
}

impl Level {
    fn finest(mask: &Mask) -> Level {
        let (w, h) = mask.dims();
        let unknown = mask.bits().to_vec();
        let mut diag = vec![0.0; w * h];
        let mut east = vec![0.0; w * h];
        let mut south = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !unknown[i] {
                    continue;
                }
                diag[i] = neighbours(x, y, w, h).count() as f64;
                if x + 1 < w && unknown[i + 1] {
                    east[i] = 1.0;
                }
                if y + 1 < h && unknown[i + w] {
                    south[i] = 1.0;
                }
            }
        }
        Level {
            w,
            h,
            unknown,
            diag,
            east,
            south,
        }
    }

    /// Galerkin coarsening `Pᵀ A P` with `P` injecting each coarse value
    /// into its 2×2 children.
    fn coarsen(&self) -> Level {
        let (w, h) = (self.w, self.h);
        let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
        let mut unknown = vec![false; cw * ch];
        let mut diag = vec![0.0; cw * ch];
        let mut east = vec![0.0; cw * ch];
        let mut south = vec![0.0; cw * ch];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !self.unknown[i] {
                    continue;
                }
                let c = (y / 2) * cw + x / 2;
                unknown[c] = true;
                diag[c] += self.diag[i];
                if self.east[i] != 0.0 {
                    if (x + 1) / 2 == x / 2 {
                        diag[c] -= 2.0 * self.east[i];
                    } else {
                        east[c] += self.east[i];
                    }
                }
                if self.south[i] != 0.0 {
                    if (y + 1) / 2 == y / 2 {
                        diag[c] -= 2.0 * self.south[i];
                    } else {
                        south[c] += self.south[i];
                    }
                }
            }
        }
        Level {
            w: cw,
            h: ch,
            unknown,
            diag,
            east,
            south,
        }
    }

    fn unknowns(&self) -> usize {
        self.unknown.iter().filter(|&&u| u).count()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w = self.w;
        for i in 0..x.len() {
            if !self.unknown[i] {
                out[i] = 0.0;
                continue;
            }
            let mut v = self.diag[i] * x[i];
            v -= self.east[i] * x.get(i + 1).copied().unwrap_or(0.0);
            v -= self.south[i] * x.get(i + w).copied().unwrap_or(0.0);
            if i % w > 0 {
                v -= self.east[i - 1] * x[i - 1];
            }
            if i >= w {
                v -= self.south[i - w] * x[i - w];
            }
            out[i] = v;
        }
    }

    fn relax(&self, b: &[f64], x: &mut [f64], i: usize) {
        if !self.unknown[i] || self.diag[i] <= 0.0 {
            return;
        }
        let w = self.w;
        let mut acc = b[i];
        if self.east[i] != 0.0 {
            acc += self.east[i] * x[i + 1];
        }
        if self.south[i] != 0.0 {
            acc += self.south[i] * x[i + w];
        }
        if i % w > 0 {
            acc += self.east[i - 1] * x[i - 1];
        }
        if i >= w {
            acc += self.south[i - w] * x[i - w];
        }
        x[i] = acc / self.diag[i];
    }

    fn sweep_forward(&self, b: &[f64], x: &mut [f64]) {
        for i in 0..x.len() {
            self.relax(b, x, i);
        }
    }

    fn sweep_backward(&self, b: &[f64], x: &mut [f64]) {
        for i in (0..x.len()).rev() {
            self.relax(b, x, i);
        }
    }
}

struct Hierarchy {
    levels: Vec<Level>,
}

impl Hierarchy {
    fn new(mask: &Mask) -> Hierarchy {
        let mut levels = vec![Level::finest(mask)];
        loop {
            let last = levels.last().unwrap();
            if last.w <= 4 || last.h <= 4 || last.unknowns() <= 64 {
                break;
            }
            let next = last.coarsen();
            levels.push(next);
        }
        Hierarchy { levels }
    }

    /// One symmetric V-cycle approximating `A⁻¹ r` (starting from zero).
    fn vcycle(&self, l: usize, r: &[f64], x: &mut [f64]) {
        let level = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        if l + 1 == self.levels.len() {
            for _ in 0..40 {
                level.sweep_forward(r, x);
                level.sweep_backward(r, x);
            }
            return;
        }
        level.sweep_forward(r, x);
        let mut ax = vec![0.0; x.len()];
        level.apply(x, &mut ax);
        let coarse = &self.levels[l + 1];
        let mut rc = vec![0.0; coarse.w * coarse.h];
        for y in 0..level.h {
            for xx in 0..level.w {
                let i = y * level.w + xx;
                if level.unknown[i] {
                    rc[(y / 2) * coarse.w + xx / 2] += r[i] - ax[i];
                }
            }
        }
        let mut xc = vec![0.0; rc.len()];
        self.vcycle(l + 1, &rc, &mut xc);
        for y in 0..level.h {
            for xx in 0..level.w {
                let i = y * level.w + xx;
                if level.unknown[i] {
                    x[i] += xc[(y / 2) * coarse.w + xx / 2];
                }
            }
        }
        level.sweep_backward(r, x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(hier: &Hierarchy, b: &[f64], x: &mut [f64], tol_abs: f64, max_iterations: usize) -> Result<(usize, f64)> {
    let level = &hier.levels[0];
    let n = x.len();
    let mut r = vec![0.0; n];
    level.apply(x, &mut r);
    for i in 0..n {
        r[i] = if level.unknown[i] { b[i] - r[i] } else { 0.0 };
    }
    let scaled_max = |r: &[f64]| {
        r.iter()
            .zip(&level.diag)
            .zip(&level.unknown)
            .filter(|(_, &u)| u)
            .map(|((v, d), _)| (v / d).abs())
            .fold(0.0, f64::max)
    };
    let mut res = scaled_max(&r);
    if res <= tol_abs {
        return Ok((0, res));
    }
    let mut z = vec![0.0; n];
    hier.vcycle(0, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iterations {
        level.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = scaled_max(&r);
        if res <= tol_abs {
            // recompute from scratch to rule out drift
            let mut fresh = vec![0.0; n];
            level.apply(x, &mut fresh);
            for i in 0..n {
                fresh[i] = if level.unknown[i] { b[i] - fresh[i] } else { 0.0 };
            }
            let true_res = scaled_max(&fresh);
            if true_res <= tol_abs {
                return Ok((it, true_res));
            }
            r = fresh;
        }
        hier.vcycle(0, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_without_mask() {
        let img = Raster::from_fn(5, 4, |x, y| [x as f32 / 5.0, y as f32 / 4.0, 0.5]);
        let out = harmonic_inpaint(&img, &Mask::new(5, 4), 1e-6).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let img = Raster::filled(40, 40, [0.25, 0.5, 0.75]);
        let mask = Mask::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 20.0);
            dx * dx + dy * dy < 150.0
        });
        let out = harmonic_inpaint(&img, &mask, 1e-6).unwrap();
        for t in out.data() {
            assert!((t[0] - 0.25).abs() < 1e-6 && (t[2] - 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_ramp_is_reproduced() {
        let n = 66;
        let img = Raster::from_fn(n, n, |x, y| [x as f32 / n as f32, (x + y) as f32 / (2 * n) as f32, 0.1]);
        let mask = Mask::from_fn(n, n, |x, y| (1..n - 1).contains(&x) && (1..n - 1).contains(&y));
        let mut holed = img.clone();
        for y in 1..n - 1 {
            for x in 1..n - 1 {
                holed.set(x, y, [0.0; 3]);
            }
        }
        let (out, stats) = solve(&holed, &mask, 1e-9, MAX_ITERATIONS).unwrap();
        assert!(stats.iterations < 100, "{stats:?}");
        for (a, b) in out.data().iter().zip(img.data()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn isolated_component_is_an_error() {
        let img = Raster::new(6, 6);
        let mask = Mask::filled(6, 6, true);
        assert!(matches!(harmonic_inpaint(&img, &mask, 1e-6), Err(Error::NoBoundary(_))));
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let img = Raster::from_fn(64, 64, |x, _| [x as f32 / 64.0; 3]);
        let mask = Mask::from_fn(64, 64, |x, _| (1..63).contains(&x));
        assert!(matches!(solve(&img, &mask, 1e-12, 1), Err(Error::NoConvergence { .. })));
    }
}
