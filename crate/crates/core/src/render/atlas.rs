use serde::{Deserialize, Serialize};

use crate::boundary::TileImage;
use crate::error::{Error, Result};
use crate::lattice::ColorCount;
use crate::packing::{validate_packing, PackingGrid};
use crate::pipeline::{validity_mask, Scheme, TileKey, TileSet};
use crate::raster::{Mask, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiamondKind {
    Interior,
    Cross,
}

/// One diamond of the atlas, centered at texel `(cx, cy)`. Crosses on the
/// atlas border wrap around.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub id: TileKey,
    pub kind: DiamondKind,
    pub cx: usize,
    pub cy: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasLayout {
    pub colors: ColorCount,
    pub tile_size: usize,
    pub atlas_file: String,
    pub width: usize,
    pub height: usize,
    pub entries: Vec<AtlasEntry>,
}

impl AtlasLayout {
    pub fn entry(&self, id: TileKey) -> Option<&AtlasEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Clone, Debug)]
pub struct Atlas {
    pub image: Raster,
    pub layout: AtlasLayout,
    /// Number of diamonds covering each texel (row-major).
    pub coverage: Vec<u8>,
}

impl Atlas {
    /// Texels written by some diamond, counted with multiplicity.
    pub fn stored_texels(&self) -> usize {
        self.coverage.iter().map(|&c| c as usize).sum()
    }
}

/// Packs every interior and cross tile of a Dual Wang set into one seamless
/// `C²R × C²R` texture laid out as the packing: interiors at cell centers,
/// crosses at the (wrapping) lattice corners.
pub fn build_atlas(set: &TileSet, grid: &PackingGrid, atlas_file: &str) -> Result<Atlas> {
    if set.scheme != Scheme::Dual {
        return Err(Error::Config(format!("atlases hold dual sets, not {}", set.scheme)));
    }
    if grid.colors() != set.colors {
        return Err(Error::Config(format!(
            "packing has {} colors, tile set {}",
            grid.colors(),
            set.colors
        )));
    }
    let check = validate_packing(grid)?;
    if !check.valid {
        return Err(Error::Config(format!(
            "not a packing: tiling {}, complement {}",
            check.tiling, check.complement
        )));
    }
    if !set.is_complete() {
        return Err(Error::Missing("dual tile set is incomplete".into()));
    }
    let r = set.tile_size;
    let n = grid.side();
    let size = n * r;
    let mut image = Raster::new(size, size);
    let mut coverage = vec![0u8; size * size];
    let mut entries = Vec::with_capacity(2 * n * n);
    let lat = &grid.lattice;
    for y in 0..n as i64 {
        for x in 0..n as i64 {
            entries.push(AtlasEntry {
                id: TileKey::Interior(lat.tile_of(x, y)?),
                kind: DiamondKind::Interior,
                cx: x as usize * r + r / 2,
                cy: y as usize * r + r / 2,
            });
        }
    }
    for y in 0..n as i64 {
        for x in 0..n as i64 {
            entries.push(AtlasEntry {
                id: TileKey::Cross(lat.cross_of(x, y)?),
                kind: DiamondKind::Cross,
                cx: x as usize * r,
                cy: y as usize * r,
            });
        }
    }
    for e in &entries {
        let t = set.get(e.id, 0).ok_or_else(|| Error::Missing(e.id.to_string()))?;
        for j in 0..r {
            for i in 0..r {
                if !t.valid.get(i, j) {
                    continue;
                }
                let (u, v) = texel(e, i, j, r, size);
                let k = v * size + u;
                coverage[k] = coverage[k].saturating_add(1);
                image.set(u, v, t.pixels.get(i, j));
            }
        }
    }
    Ok(Atlas {
        image,
        layout: AtlasLayout {
            colors: set.colors,
            tile_size: r,
            atlas_file: atlas_file.to_string(),
            width: size,
            height: size,
            entries,
        },
        coverage,
    })
}

fn texel(e: &AtlasEntry, i: usize, j: usize, r: usize, size: usize) -> (usize, usize) {
    let u = (e.cx + size + i - r / 2) % size;
    let v = (e.cy + size + j - r / 2) % size;
    (u, v)
}

/// Reads one diamond back out of an atlas as an `R × R` tile.
pub fn sample_atlas(atlas: &Raster, layout: &AtlasLayout, id: TileKey) -> Result<TileImage> {
    let e = layout.entry(id).ok_or_else(|| Error::UnknownTile(id.to_string()))?;
    if atlas.dims() != (layout.width, layout.height) {
        return Err(Error::SizeMismatch {
            expected: (layout.width, layout.height),
            actual: atlas.dims(),
        });
    }
    let r = layout.tile_size;
    let valid: Mask = validity_mask(id.region(), r);
    let mut pixels = Raster::new(r, r);
    for j in 0..r {
        for i in 0..r {
            if valid.get(i, j) {
                let (u, v) = texel(e, i, j, r, layout.width);
                pixels.set(i, j, atlas.get(u, v));
            }
        }
    }
    Ok(TileImage { pixels, valid })
}
