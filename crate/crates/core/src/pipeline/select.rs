//! Template patch selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{Axis, CutPath, PatchAxis, PatchLibrary, TemplatePatch};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::pipeline::config::{check_library, PatchStrategy, ProjectConfig, Scheme};
use crate::raster::Raster;

/// Builds the patch library for `config.scheme`. Random placements are
/// independent and uniform; constrained placements put every horizontal cut
/// on one shared exemplar row and every vertical cut on one shared column;
/// manual libraries are taken verbatim.
pub fn select_patches(strategy: &PatchStrategy, exemplar: &Raster, config: &ProjectConfig, seed: u64) -> Result<PatchLibrary> {
    let r = config.tile_size;
    let (w, h) = exemplar.dims();
    if w < r || h < r {
        return Err(Error::Geometry(format!("exemplar {w}x{h} is smaller than the {r}x{r} tile")));
    }
    let colors = config.tileset_colors();
    if let PatchStrategy::Manual { library } = strategy {
        check_library(library, config.scheme, colors, r)?;
        library.validate(exemplar)?;
        return Ok(library.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["patches", strategy.name(), config.scheme.name()]));
    let (nh, nv, nd) = config.scheme.patch_counts(colors);
    let mut lib = PatchLibrary::new(r);
    let patch = |x, y, axis, color: usize| TemplatePatch {
        x,
        y,
        size: r,
        axis,
        color: color as u8,
    };
    match strategy {
        PatchStrategy::Random => {
            for c in 0..nh {
                let (x, y) = (rng.gen_range(0..=w - r), rng.gen_range(0..=h - r));
                lib.horizontal.push(patch(x, y, PatchAxis::Horizontal, c));
            }
            for c in 0..nv {
                let (x, y) = (rng.gen_range(0..=w - r), rng.gen_range(0..=h - r));
                lib.vertical.push(patch(x, y, PatchAxis::Vertical, c));
            }
        }
        PatchStrategy::Constrained => {
            let row = rng.gen_range(r / 2..=h - r / 2);
            let col = rng.gen_range(r / 2..=w - r / 2);
            for c in 0..nh {
                lib.horizontal
                    .push(patch(rng.gen_range(0..=w - r), row - r / 2, PatchAxis::Horizontal, c));
            }
            for c in 0..nv {
                lib.vertical
                    .push(patch(col - r / 2, rng.gen_range(0..=h - r), PatchAxis::Vertical, c));
            }
        }
        PatchStrategy::Manual { .. } => unreachable!(),
    }
    for c in 0..nd {
        let (x, y) = (rng.gen_range(0..=w - r), rng.gen_range(0..=h - r));
        lib.diamonds.push(patch(x, y, PatchAxis::Diamond, c));
    }
    if config.scheme == Scheme::Escher {
        let amp = config.escher_amplitude();
        lib.h_path = CutPath::random(Axis::Horizontal, r, amp, r / 8, &mut rng);
        lib.v_path = CutPath::random(Axis::Vertical, r, amp, r / 8, &mut rng);
    }
    Ok(lib)
}
