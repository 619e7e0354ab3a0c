//! Compositing tile sets into images: finite and infinite tilings, Dual Wang
//! atlases and seam metrics.

mod atlas;
mod seam;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::square_cell;
use crate::error::{Error, Result};
use crate::hash::{derive_seed, hash_edge_coloring, hash_words, EdgeKind};
use crate::lattice::{ColorCount, CornerTileId, CrossTileId, EdgeColor, WangTileId};
use crate::pipeline::{Engine, Scheme, TileKey, TileSet, TileTexture};
use crate::raster::Raster;

pub use atlas::{build_atlas, sample_atlas, Atlas, AtlasEntry, AtlasLayout, DiamondKind};
pub use seam::{seam_energy_map, tile_seams, Seam, SeamReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantPolicy {
    #[default]
    Fixed,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    #[serde(default)]
    pub variants: VariantPolicy,
}

/// A texel rectangle of the infinite plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneRegion {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
}

impl PlaneRegion {
    pub fn new(x: i64, y: i64, width: usize, height: usize) -> Self {
        PlaneRegion { x, y, width, height }
    }
}

/// Where a placement sits: a lattice cell or (dual crosses) a lattice corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Cell,
    Corner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub site: Site,
    pub x: i64,
    pub y: i64,
    pub key: TileKey,
    pub variant: usize,
}

#[derive(Clone, Debug)]
pub struct Rendering {
    pub image: Raster,
    /// Every placement touching the rendered region, in (site, y, x) order.
    pub placements: Vec<Placement>,
    /// How many tiles wrote each texel (row-major).
    pub coverage: Vec<u8>,
}

/// Stateless colors of the infinite plane for one seed.
#[derive(Clone, Copy, Debug)]
pub struct PlaneColoring {
    pub seed: u64,
    pub colors: ColorCount,
}

impl PlaneColoring {
    pub fn h(&self, x: i64, y: i64) -> EdgeColor {
        hash_edge_coloring(self.seed, EdgeKind::Horizontal, x, y, self.colors)
    }

    pub fn v(&self, x: i64, y: i64) -> EdgeColor {
        hash_edge_coloring(self.seed, EdgeKind::Vertical, x, y, self.colors)
    }

    pub fn corner(&self, x: i64, y: i64) -> EdgeColor {
        hash_edge_coloring(self.seed, EdgeKind::Corner, x, y, self.colors)
    }

    pub fn wang(&self, x: i64, y: i64) -> WangTileId {
        WangTileId::new(self.h(x, y), self.v(x + 1, y), self.h(x, y + 1), self.v(x, y))
    }

    pub fn corner_tile(&self, x: i64, y: i64) -> CornerTileId {
        CornerTileId::new(
            self.corner(x, y),
            self.corner(x + 1, y),
            self.corner(x + 1, y + 1),
            self.corner(x, y + 1),
        )
    }

    pub fn cross(&self, x: i64, y: i64) -> CrossTileId {
        CrossTileId::new(self.v(x, y - 1), self.h(x, y), self.v(x, y), self.h(x - 1, y))
    }
}

/// Where tile textures come from.
pub enum TileSource<'a> {
    /// A generated set.
    Set(&'a TileSet),
    /// Synthesize each placed tile from its canvas, seeded by its position.
    OnDemand(&'a Engine),
}

impl TileSource<'_> {
    fn scheme(&self) -> Scheme {
        match self {
            TileSource::Set(s) => s.scheme,
            TileSource::OnDemand(e) => e.config().scheme,
        }
    }

    fn colors(&self) -> ColorCount {
        match self {
            TileSource::Set(s) => s.colors,
            TileSource::OnDemand(e) => e.config().tileset_colors(),
        }
    }

    fn tile_size(&self) -> usize {
        match self {
            TileSource::Set(s) => s.tile_size,
            TileSource::OnDemand(e) => e.config().tile_size,
        }
    }
}

fn pick_variant(seed: u64, site: Site, x: i64, y: i64, count: usize, policy: VariantPolicy) -> usize {
    match policy {
        VariantPolicy::Fixed => 0,
        VariantPolicy::Random => (hash_words(&[seed, 0x7661, site as u64, x as u64, y as u64]) % count as u64) as usize,
    }
}

fn placements(source: &TileSource, region: PlaneRegion, seed: u64, policy: VariantPolicy) -> Result<Vec<Placement>> {
    let scheme = source.scheme();
    let r = source.tile_size() as i64;
    let plane = PlaneColoring {
        seed,
        colors: source.colors(),
    };
    // Escher cells reach up to R/2 past their square
    let pad = if scheme == Scheme::Escher { 1 } else { 0 };
    let x0 = region.x.div_euclid(r) - pad;
    let y0 = region.y.div_euclid(r) - pad;
    let x1 = (region.x + region.width as i64 - 1).div_euclid(r) + pad;
    let y1 = (region.y + region.height as i64 - 1).div_euclid(r) + pad;
    let count = |key: TileKey| match source {
        TileSource::Set(s) => s.variants(key),
        TileSource::OnDemand(_) => 1,
    };
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let key = match scheme {
                Scheme::SelfTiling | Scheme::Stochastic | Scheme::Escher => TileKey::Single,
                Scheme::Wang => TileKey::Wang(plane.wang(x, y)),
                Scheme::Corner => TileKey::Corner(plane.corner_tile(x, y)),
                Scheme::Dual => TileKey::Interior(plane.wang(x, y)),
            };
            let n = count(key);
            if n == 0 {
                return Err(Error::Missing(format!("tile {key} in the tile set")));
            }
            let variant = pick_variant(seed, Site::Cell, x, y, n, policy);
            out.push(Placement {
                site: Site::Cell,
                x,
                y,
                key,
                variant,
            });
        }
    }
    if scheme == Scheme::Dual {
        for y in y0..=y1 + 1 {
            for x in x0..=x1 + 1 {
                let key = TileKey::Cross(plane.cross(x, y));
                let n = count(key);
                if n == 0 {
                    return Err(Error::Missing(format!("tile {key} in the tile set")));
                }
                let variant = pick_variant(seed, Site::Corner, x, y, n, policy);
                out.push(Placement {
                    site: Site::Corner,
                    x,
                    y,
                    key,
                    variant,
                });
            }
        }
    }
    Ok(out)
}

/// Renders a window of the infinite plane tiled by the source. The result
/// depends only on the source, `seed` and the window, so overlapping windows
/// agree texel for texel.
pub fn render_infinite(source: &TileSource, region: PlaneRegion, seed: u64, policy: VariantPolicy) -> Result<Rendering> {
    if region.width == 0 || region.height == 0 {
        return Err(Error::Geometry("empty render region".into()));
    }
    let scheme = source.scheme();
    let r = source.tile_size() as i64;
    let places = placements(source, region, seed, policy)?;
    let textures: Vec<TileTexture> = match source {
        TileSource::Set(set) => places
            .iter()
            .map(|p| set.get(p.key, p.variant).cloned().ok_or_else(|| Error::Missing(p.key.to_string())))
            .collect::<Result<_>>()?,
        TileSource::OnDemand(engine) => {
            if scheme == Scheme::Dual {
                return Err(Error::Config(
                    "on-demand rendering needs a scheme whose canvases come from patches alone".into(),
                ));
            }
            let empty = engine.empty_set();
            places
                .par_iter()
                .map(|p| {
                    let canvas = engine.canvas(&empty, p.key, 0)?;
                    let base = derive_seed(seed, &["on-demand", &p.x.to_string(), &p.y.to_string()]);
                    engine.synthesize(p.key, 0, &canvas, base).map(|t| t.0)
                })
                .collect::<Result<_>>()?
        }
    };
    let (w, h) = (region.width, region.height);
    let mut image = Raster::new(w, h);
    let mut coverage = vec![0u8; w * h];

    if scheme == Scheme::Dual {
        for (p, t) in places.iter().zip(&textures) {
            let (ox, oy) = match p.site {
                Site::Cell => (p.x * r, p.y * r),
                Site::Corner => (p.x * r - r / 2, p.y * r - r / 2),
            };
            for j in 0..r {
                let v = oy + j - region.y;
                if v < 0 || v >= h as i64 {
                    continue;
                }
                for i in 0..r {
                    let u = ox + i - region.x;
                    if u < 0 || u >= w as i64 || !t.valid.get(i as usize, j as usize) {
                        continue;
                    }
                    let k = v as usize * w + u as usize;
                    coverage[k] = coverage[k].saturating_add(1);
                    image.set(u as usize, v as usize, t.pixels.get(i as usize, j as usize));
                }
            }
        }
        return Ok(Rendering {
            image,
            placements: places,
            coverage,
        });
    }

    let index: HashMap<(i64, i64), usize> = places.iter().enumerate().map(|(k, p)| ((p.x, p.y), k)).collect();
    let (h_path, v_path) = match source {
        TileSource::Set(s) => (s.library.h_path.clone(), s.library.v_path.clone()),
        TileSource::OnDemand(e) => (e.library().h_path.clone(), e.library().v_path.clone()),
    };
    let rows: Vec<Vec<[f32; 3]>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let v = region.y + y as i64;
            (0..w)
                .map(|x| {
                    let u = region.x + x as i64;
                    let (cx, cy) = if scheme == Scheme::Escher {
                        square_cell(&h_path, &v_path, u, v)
                    } else {
                        (u.div_euclid(r), v.div_euclid(r))
                    };
                    let t = &textures[index[&(cx, cy)]];
                    t.pixels.get((u - cx * r).rem_euclid(r) as usize, (v - cy * r).rem_euclid(r) as usize)
                })
                .collect()
        })
        .collect();
    for (y, row) in rows.into_iter().enumerate() {
        for (x, t) in row.into_iter().enumerate() {
            image.set(x, y, t);
            coverage[y * w + x] = 1;
        }
    }
    Ok(Rendering {
        image,
        placements: places,
        coverage,
    })
}

/// Renders `spec.width × spec.height` tiles from the plane origin.
pub fn render_tiling(set: &TileSet, spec: &TilingSpec) -> Result<Rendering> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Geometry("tiling needs at least one tile each way".into()));
    }
    let r = set.tile_size;
    let region = PlaneRegion::new(0, 0, spec.width * r, spec.height * r);
    render_infinite(&TileSource::Set(set), region, spec.seed, spec.variants)
}

/// Placed cells only (no dual crosses) inside the tiling.
pub fn cell_placements(rendering: &Rendering) -> impl Iterator<Item = &Placement> {
    rendering.placements.iter().filter(|p| p.site == Site::Cell)
}
