//! Exterior boundary canvases.
//!
//! Every canvas is `2R × 2R` texels for tile size `R`. Square-family tiles
//! sit at `[R/2, 3R/2)²` with template halves in the `R/2`-wide ring around
//! them; diamond-family canvases place their neighbours so that the retained
//! diamond is centered the same way.
//!
//! Diamond ownership is decided per texel by [`owner`]: with doubled offsets
//! `a = 2i + 1 − R`, `b = 2j + 1 − R` from the center of cell `(i, j)`, a
//! texel belongs to the cell's interior diamond when `|a| + |b| < R`, or when
//! `|a| + |b| = R` and `a·b < 0` (the north-east and south-west edges);
//! otherwise to the cross diamond of the nearest lattice corner. Both kinds
//! of diamond hold exactly `R²/2` texels and together cover the plane once.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{ColorCount, CornerTileId, CrossTileId, EdgeColor, InteriorTileId, WangTileId};
use crate::raster::{hex, Mask, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Which cut (or diamond) a template patch is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchAxis {
    Horizontal,
    Vertical,
    Diamond,
}

/// A tile-sized square of the exemplar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePatch {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub axis: PatchAxis,
    /// The edge (or corner) color this patch serves.
    #[serde(default)]
    pub color: EdgeColor,
}

impl TemplatePatch {
    pub fn extract(&self, exemplar: &Raster) -> Result<Raster> {
        exemplar.crop(self.x, self.y, self.size, self.size).map_err(|_| {
            Error::Geometry(format!(
                "patch {}x{}+{}+{} outside the {}x{} exemplar",
                self.size,
                self.size,
                self.x,
                self.y,
                exemplar.width(),
                exemplar.height()
            ))
        })
    }
}

/// A cut through a template patch: for a horizontal cut `offsets[x]` is the
/// first row of the lower half in column `x`; for a vertical cut
/// `offsets[y]` is the first column of the right half in row `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutPath {
    pub axis: Axis,
    pub offsets: Vec<usize>,
}

impl CutPath {
    pub fn straight(axis: Axis, tile_size: usize) -> CutPath {
        CutPath {
            axis,
            offsets: vec![tile_size / 2; tile_size],
        }
    }

    pub fn is_straight(&self) -> bool {
        let r = self.offsets.len();
        self.offsets.iter().all(|&o| o == r / 2)
    }

    /// Checks length, range `(0, R)` and wrap continuity.
    pub fn validate(&self, tile_size: usize) -> Result<()> {
        if self.offsets.len() != tile_size {
            return Err(Error::Geometry(format!(
                "cut path has {} offsets, tile size is {tile_size}",
                self.offsets.len()
            )));
        }
        if self.offsets.iter().any(|&o| o == 0 || o >= tile_size) {
            return Err(Error::Geometry("cut path touches the patch border".into()));
        }
        if self.offsets.first() != self.offsets.last() {
            return Err(Error::Geometry("cut path does not wrap (first offset != last)".into()));
        }
        Ok(())
    }

    /// Deviation of the cut from the midline, which is also how far the tile
    /// boundary moves from the straight square edge.
    pub fn shift(&self, k: i64) -> i64 {
        let r = self.offsets.len() as i64;
        self.offsets[k.rem_euclid(r) as usize] as i64 - r / 2
    }

    /// A smooth random path: a sum of a few sines that stays straight within
    /// `pinned` texels of both ends, with peak deviation at most `amplitude`.
    pub fn random(axis: Axis, tile_size: usize, amplitude: usize, pinned: usize, rng: &mut impl Rng) -> CutPath {
        let r = tile_size;
        let span = r.saturating_sub(2 * pinned).max(1);
        let amp = amplitude.min(r / 2 - 1) as f64;
        let waves: Vec<(f64, f64, f64)> = (1..=3)
            .map(|k| (rng.gen_range(-1.0..1.0), k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let total: f64 = waves.iter().map(|w| w.0.abs()).sum::<f64>().max(1e-9);
        let offsets = (0..r)
            .map(|k| {
                if k < pinned || k + pinned >= r {
                    return r / 2;
                }
                let t = (k - pinned) as f64 / span as f64;
                let envelope = (std::f64::consts::PI * t).sin();
                let wave: f64 = waves
                    .iter()
                    .map(|&(a, f, p)| a * (std::f64::consts::PI * f * t + p).sin())
                    .sum::<f64>()
                    / total;
                let d = (amp * envelope * wave).round() as i64;
                (r as i64 / 2 + d) as usize
            })
            .collect();
        CutPath { axis, offsets }
    }
}

/// One side of a cut patch: the full patch raster with texels outside the
/// region zeroed, plus the region itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Half {
    pub pixels: Raster,
    pub region: Mask,
}

/// Splits a square patch along `path` into (top, bottom) for horizontal cuts
/// and (left, right) for vertical cuts.
pub fn cut_halves(patch: &Raster, path: &CutPath) -> Result<(Half, Half)> {
    let r = patch.width();
    if patch.height() != r {
        return Err(Error::SizeMismatch {
            expected: (r, r),
            actual: patch.dims(),
        });
    }
    path.validate(r)?;
    let first = |x: usize, y: usize| match path.axis {
        Axis::Horizontal => y < path.offsets[x],
        Axis::Vertical => x < path.offsets[y],
    };
    let a = Mask::from_fn(r, r, first);
    let b = a.not();
    let keep = |m: &Mask| Raster::from_fn(r, r, |x, y| if m.get(x, y) { patch.get(x, y) } else { [0.0; 3] });
    Ok((
        Half {
            pixels: keep(&a),
            region: a,
        },
        Half {
            pixels: keep(&b),
            region: b,
        },
    ))
}

/// Owner of a texel in the diamond decomposition of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    /// The interior diamond of cell `(x, y)`.
    Interior(i64, i64),
    /// The cross diamond on the lattice corner at the north-west of cell
    /// `(x, y)`.
    Cross(i64, i64),
}

pub fn owner(x: i64, y: i64, tile_size: usize) -> Owner {
    let r = tile_size as i64;
    let (cx, cy) = (x.div_euclid(r), y.div_euclid(r));
    let a = 2 * x.rem_euclid(r) + 1 - r;
    let b = 2 * y.rem_euclid(r) + 1 - r;
    let d = a.abs() + b.abs();
    if d < r || (d == r && a * b < 0) {
        Owner::Interior(cx, cy)
    } else {
        Owner::Cross(cx + (a > 0) as i64, cy + (b > 0) as i64)
    }
}

/// Texels of an `R × R` cell that belong to its interior diamond.
pub fn interior_mask(tile_size: usize) -> Mask {
    Mask::from_fn(tile_size, tile_size, |x, y| {
        owner(x as i64, y as i64, tile_size) == Owner::Interior(0, 0)
    })
}

/// Texels of an `R × R` square centered on a lattice corner that belong to
/// that corner's cross diamond.
pub fn cross_mask(tile_size: usize) -> Mask {
    let h = (tile_size / 2) as i64;
    Mask::from_fn(tile_size, tile_size, |x, y| {
        owner(x as i64 + h, y as i64 + h, tile_size) == Owner::Cross(1, 1)
    })
}

/// Diagonal positions around a Wang tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagonal {
    Ne,
    Se,
    Sw,
    Nw,
}

impl Diagonal {
    pub const ALL: [Diagonal; 4] = [Diagonal::Ne, Diagonal::Se, Diagonal::Sw, Diagonal::Nw];

    fn name(self) -> &'static str {
        match self {
            Diagonal::Ne => "ne",
            Diagonal::Se => "se",
            Diagonal::Sw => "sw",
            Diagonal::Nw => "nw",
        }
    }
}

/// A dedicated first-stage Wang tile: the two edges adjacent to `position`
/// take the colors of `pair` (clockwise order), all other edges color 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stage1Key {
    pub position: Diagonal,
    pub pair: (EdgeColor, EdgeColor),
}

impl Stage1Key {
    pub fn all(colors: ColorCount) -> Vec<Stage1Key> {
        let mut out = Vec::with_capacity(4 * colors.squared());
        for position in Diagonal::ALL {
            for a in colors.colors() {
                for b in colors.colors() {
                    out.push(Stage1Key { position, pair: (a, b) });
                }
            }
        }
        out
    }

    pub fn wang_id(self) -> WangTileId {
        let (a, b) = self.pair;
        match self.position {
            Diagonal::Ne => WangTileId::new(a, b, 0, 0),
            Diagonal::Se => WangTileId::new(0, a, b, 0),
            Diagonal::Sw => WangTileId::new(0, 0, a, b),
            Diagonal::Nw => WangTileId::new(b, 0, 0, a),
        }
    }

    /// The four keys an interior tile is assembled from.
    pub fn for_interior(id: InteriorTileId) -> [Stage1Key; 4] {
        [
            Stage1Key {
                position: Diagonal::Ne,
                pair: (id.n, id.e),
            },
            Stage1Key {
                position: Diagonal::Se,
                pair: (id.e, id.s),
            },
            Stage1Key {
                position: Diagonal::Sw,
                pair: (id.s, id.w),
            },
            Stage1Key {
                position: Diagonal::Nw,
                pair: (id.w, id.n),
            },
        ]
    }
}

impl fmt::Display for Stage1Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.position.name(), self.pair.0, self.pair.1)
    }
}

impl FromStr for Stage1Key {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownTile(s.to_string());
        let mut parts = s.split('-');
        let position = match parts.next() {
            Some("ne") => Diagonal::Ne,
            Some("se") => Diagonal::Se,
            Some("sw") => Diagonal::Sw,
            Some("nw") => Diagonal::Nw,
            _ => return Err(bad()),
        };
        let a = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let b = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Stage1Key { position, pair: (a, b) })
    }
}

/// The four interiors arranged around a cross tile's center, in the order
/// north-west, north-east, south-east, south-west. Edges not incident on the
/// center are color 0.
pub fn cross_neighbours(id: CrossTileId) -> [InteriorTileId; 4] {
    [
        WangTileId::new(0, id.cn, id.cw, 0),
        WangTileId::new(0, 0, id.ce, id.cn),
        WangTileId::new(id.ce, 0, 0, id.cs),
        WangTileId::new(id.cw, id.cs, 0, 0),
    ]
}

/// Template patches for a scheme.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchLibrary {
    pub tile_size: usize,
    /// Indexed by edge color.
    #[serde(default)]
    pub horizontal: Vec<TemplatePatch>,
    #[serde(default)]
    pub vertical: Vec<TemplatePatch>,
    /// Indexed by corner color.
    #[serde(default)]
    pub diamonds: Vec<TemplatePatch>,
    pub h_path: CutPath,
    pub v_path: CutPath,
}

impl PatchLibrary {
    pub fn new(tile_size: usize) -> Self {
        PatchLibrary {
            tile_size,
            horizontal: Vec::new(),
            vertical: Vec::new(),
            diamonds: Vec::new(),
            h_path: CutPath::straight(Axis::Horizontal, tile_size),
            v_path: CutPath::straight(Axis::Vertical, tile_size),
        }
    }

    pub fn validate(&self, exemplar: &Raster) -> Result<()> {
        check_tile_size(self.tile_size)?;
        self.h_path.validate(self.tile_size)?;
        self.v_path.validate(self.tile_size)?;
        if self.h_path.axis != Axis::Horizontal || self.v_path.axis != Axis::Vertical {
            return Err(Error::Geometry("cut path axes swapped".into()));
        }
        for p in self.horizontal.iter().chain(&self.vertical).chain(&self.diamonds) {
            if p.size != self.tile_size {
                return Err(Error::Geometry(format!("patch size {} != tile size {}", p.size, self.tile_size)));
            }
            p.extract(exemplar)?;
        }
        Ok(())
    }

    /// Extracts and cuts every patch once.
    pub fn prepare(&self, exemplar: &Raster) -> Result<PreparedPatches> {
        self.validate(exemplar)?;
        let mut top = Vec::new();
        let mut bottom = Vec::new();
        for p in &self.horizontal {
            let (a, b) = cut_halves(&p.extract(exemplar)?, &self.h_path)?;
            top.push(a);
            bottom.push(b);
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for p in &self.vertical {
            let (a, b) = cut_halves(&p.extract(exemplar)?, &self.v_path)?;
            left.push(a);
            right.push(b);
        }
        let diamonds = self
            .diamonds
            .iter()
            .map(|p| p.extract(exemplar))
            .collect::<Result<Vec<_>>>()?;
        let prepared = PreparedPatches {
            tile_size: self.tile_size,
            h_path: self.h_path.clone(),
            v_path: self.v_path.clone(),
            top,
            bottom,
            left,
            right,
            diamonds,
        };
        prepared.check_strip_overlap()?;
        Ok(prepared)
    }
}

pub fn check_tile_size(r: usize) -> Result<()> {
    if r < 4 || r % 2 != 0 {
        return Err(Error::Geometry(format!("tile size must be even and at least 4, got {r}")));
    }
    Ok(())
}

/// Patches cut and ready for assembly.
#[derive(Clone, Debug)]
pub struct PreparedPatches {
    pub tile_size: usize,
    pub h_path: CutPath,
    pub v_path: CutPath,
    pub top: Vec<Half>,
    pub bottom: Vec<Half>,
    pub left: Vec<Half>,
    pub right: Vec<Half>,
    pub diamonds: Vec<Raster>,
}

/// How the retained texels of a canvas map onto an `R × R` tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// The square tile, or its Escher deformation stored torus-wrapped.
    Square,
    /// A Corner Wang tile, including its copied corner triangles.
    Corner,
    Interior,
    Cross,
}

/// Boundary data and mask handed to an inpainter.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCanvas {
    pub tile_size: usize,
    pub region: Region,
    pub pixels: Raster,
    /// `true` where the inpainter must synthesize.
    pub mask: Mask,
    /// Texels that end up in the tile.
    pub retained: Mask,
    /// Canvas texel that becomes tile texel `(0, 0)`; tile coordinates wrap.
    pub origin: (usize, usize),
    /// Source texels continuing past the boundary into the mask, used by
    /// [`extend_margin`].
    pub overflow: Raster,
    pub overflow_valid: Mask,
}

impl BoundaryCanvas {
    fn blank(tile_size: usize, region: Region, origin: (usize, usize)) -> Self {
        let s = 2 * tile_size;
        BoundaryCanvas {
            tile_size,
            region,
            pixels: Raster::new(s, s),
            mask: Mask::filled(s, s, true),
            retained: Mask::new(s, s),
            origin,
            overflow: Raster::new(s, s),
            overflow_valid: Mask::new(s, s),
        }
    }

    pub fn size(&self) -> usize {
        self.pixels.width()
    }

    /// Boundary texel: written and unmasked.
    fn put(&mut self, x: usize, y: usize, v: [f32; 3]) -> Result<()> {
        if !self.mask.get(x, y) {
            return Err(Error::Geometry(format!("boundary sources overlap at ({x}, {y})")));
        }
        self.mask.set(x, y, false);
        self.pixels.set(x, y, v);
        Ok(())
    }

    fn put_overflow(&mut self, x: usize, y: usize, v: [f32; 3]) {
        if !self.overflow_valid.get(x, y) {
            self.overflow_valid.set(x, y, true);
            self.overflow.set(x, y, v);
        }
    }

    fn finish(mut self) -> Self {
        let s = self.size();
        for y in 0..s {
            for x in 0..s {
                if self.mask.get(x, y) {
                    self.pixels.set(x, y, [0.0; 3]);
                } else {
                    self.overflow_valid.set(x, y, false);
                }
            }
        }
        self
    }

    /// Tile coordinates of a canvas texel.
    pub fn tile_coords(&self, x: usize, y: usize) -> (usize, usize) {
        let r = self.tile_size as i64;
        (
            (x as i64 - self.origin.0 as i64).rem_euclid(r) as usize,
            (y as i64 - self.origin.1 as i64).rem_euclid(r) as usize,
        )
    }

    /// Digest of pixels and mask, used for provenance.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.pixels.digest().as_bytes());
        let bits: Vec<u8> = self.mask.bits().iter().map(|&b| b as u8).collect();
        h.update(&bits);
        hex(&h.finalize())[..32].to_string()
    }

    /// Texels retained in the tile but not synthesized (Corner Wang's copied
    /// triangles).
    pub fn retained_copies(&self) -> Mask {
        self.retained.and(&self.mask.not())
    }
}

/// A cropped tile: `R × R` texels plus the texels that belong to it.
#[derive(Clone, Debug, PartialEq)]
pub struct TileImage {
    pub pixels: Raster,
    pub valid: Mask,
}

impl PreparedPatches {
    fn get<'a, T>(v: &'a [T], c: EdgeColor, what: &str) -> Result<&'a T> {
        v.get(c as usize)
            .ok_or_else(|| Error::Missing(format!("{what} patch for color {c}")))
    }

    fn check_strip_overlap(&self) -> Result<()> {
        if self.top.is_empty() || self.left.is_empty() {
            return Ok(());
        }
        let r = self.tile_size as i64;
        for u in 0..r {
            for v in 0..r {
                let in_top = v < self.h_path.shift(u);
                let in_left = u < self.v_path.shift(v);
                let in_bottom = v >= r + self.h_path.shift(u);
                let in_right = u >= r + self.v_path.shift(v);
                if (in_top || in_bottom) && (in_left || in_right) {
                    return Err(Error::Geometry(
                        "cut paths make the horizontal and vertical strips overlap; pin the path ends straight".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Tile-local cell of a square-family texel given the cut paths.
    pub fn square_cell(&self, u: i64, v: i64) -> (i64, i64) {
        square_cell(&self.h_path, &self.v_path, u, v)
    }
}

/// Which tile of a (possibly Escher-deformed) square tiling owns plane texel
/// `(u, v)`. Straight paths give `(u div R, v div R)`.
pub fn square_cell(h_path: &CutPath, v_path: &CutPath, u: i64, v: i64) -> (i64, i64) {
    let r = h_path.offsets.len() as i64;
    (
        (u - v_path.shift(v)).div_euclid(r),
        (v - h_path.shift(u)).div_euclid(r),
    )
}

/// Square-family canvas (self, stochastic, Escher and Wang): the top half of
/// the horizontal patch for `n` above the tile, the bottom half of the one
/// for `s` below, and the left and right halves of the vertical patches for
/// `w` and `e` at the sides. Tiles abutting on an edge of color `c` thus see
/// the two halves of the same patch across that edge.
pub fn assemble_wang(id: WangTileId, patches: &PreparedPatches) -> Result<BoundaryCanvas> {
    let r = patches.tile_size;
    let b = r / 2;
    let mut canvas = BoundaryCanvas::blank(r, Region::Square, (b, b));
    let top = PreparedPatches::get(&patches.top, id.n, "horizontal")?;
    let top_rest = PreparedPatches::get(&patches.bottom, id.n, "horizontal")?;
    let bottom = PreparedPatches::get(&patches.bottom, id.s, "horizontal")?;
    let bottom_rest = PreparedPatches::get(&patches.top, id.s, "horizontal")?;
    let left = PreparedPatches::get(&patches.left, id.w, "vertical")?;
    let left_rest = PreparedPatches::get(&patches.right, id.w, "vertical")?;
    let right = PreparedPatches::get(&patches.right, id.e, "vertical")?;
    let right_rest = PreparedPatches::get(&patches.left, id.e, "vertical")?;
    for col in 0..r {
        for row in 0..r {
            if top.region.get(col, row) {
                canvas.put(b + col, row, top.pixels.get(col, row))?;
            }
            if bottom.region.get(col, row) {
                canvas.put(b + col, row + r, bottom.pixels.get(col, row))?;
            }
        }
    }
    for row in 0..r {
        for col in 0..r {
            if left.region.get(col, row) {
                canvas.put(col, b + row, left.pixels.get(col, row))?;
            }
            if right.region.get(col, row) {
                canvas.put(col + r, b + row, right.pixels.get(col, row))?;
            }
        }
    }
    // the rest of each patch continues past its cut into the mask
    for col in 0..r {
        for row in 0..r {
            if top_rest.region.get(col, row) {
                canvas.put_overflow(b + col, row, top_rest.pixels.get(col, row));
            }
            if bottom_rest.region.get(col, row) {
                canvas.put_overflow(b + col, row + r, bottom_rest.pixels.get(col, row));
            }
            if left_rest.region.get(row, col) {
                canvas.put_overflow(row, b + col, left_rest.pixels.get(row, col));
            }
            if right_rest.region.get(row, col) {
                canvas.put_overflow(row + r, b + col, right_rest.pixels.get(row, col));
            }
        }
    }
    let s = 2 * r;
    for y in 0..s {
        for x in 0..s {
            let (u, v) = (x as i64 - b as i64, y as i64 - b as i64);
            if patches.square_cell(u, v) == (0, 0) {
                debug_assert!(canvas.mask.get(x, y));
                canvas.retained.set(x, y, true);
            }
        }
    }
    Ok(canvas.finish())
}

/// Self-tiling canvas: one horizontal and one vertical patch around the tile.
pub fn assemble_self(patches: &PreparedPatches) -> Result<BoundaryCanvas> {
    assemble_wang(WangTileId::new(0, 0, 0, 0), patches)
}

/// Escher canvas. Identical to [`assemble_self`]; the deformation lives in
/// the cut paths of the prepared library, and straight paths reduce to the
/// square tile exactly.
pub fn assemble_escher(patches: &PreparedPatches) -> Result<BoundaryCanvas> {
    assemble_self(patches)
}

fn diamond_for(patches: &PreparedPatches, c: EdgeColor) -> Result<&Raster> {
    PreparedPatches::get(&patches.diamonds, c, "diamond")
}

/// Corner Wang canvas: the cross diamond of each tile corner's color is
/// copied whole around that corner. The four triangles inside the tile stay
/// in the final texture; the interior diamond is synthesized.
pub fn assemble_corner(id: CornerTileId, patches: &PreparedPatches) -> Result<BoundaryCanvas> {
    let r = patches.tile_size;
    let b = r / 2;
    let h = b as i64;
    let mut canvas = BoundaryCanvas::blank(r, Region::Corner, (b, b));
    let corner_color = |kx: i64, ky: i64| match (kx, ky) {
        (0, 0) => id.nw,
        (1, 0) => id.ne,
        (1, 1) => id.se,
        _ => id.sw,
    };
    let s = 2 * r;
    for y in 0..s {
        for x in 0..s {
            let (gx, gy) = (x as i64 - h, y as i64 - h);
            // every canvas texel lies in the R x R window of exactly one corner
            let (kx, ky) = ((gx + h).div_euclid(r as i64), (gy + h).div_euclid(r as i64));
            let d = diamond_for(patches, corner_color(kx, ky))?;
            let (px, py) = ((gx - kx * r as i64 + h) as usize, (gy - ky * r as i64 + h) as usize);
            if owner(gx, gy, r) == Owner::Cross(kx, ky) {
                canvas.put(x, y, d.get(px, py))?;
            } else {
                canvas.put_overflow(x, y, d.get(px, py));
            }
            if (0..r as i64).contains(&gx) && (0..r as i64).contains(&gy) {
                canvas.retained.set(x, y, true);
            }
        }
    }
    Ok(canvas.finish())
}

/// Source of first-stage canvases for [`assemble_interior`].
pub trait Stage1Source {
    fn stage1(&self, key: Stage1Key) -> Option<&Raster>;
}

impl Stage1Source for std::collections::BTreeMap<Stage1Key, Raster> {
    fn stage1(&self, key: Stage1Key) -> Option<&Raster> {
        self.get(&key)
    }
}

/// Interior canvas: each quarter of the canvas is the matching quarter of the
/// inpainted first-stage canvas for that diagonal, so the boundary is the
/// template strips plus the synthesized corner regions; the inscribed diamond
/// is masked.
pub fn assemble_interior(id: InteriorTileId, tile_size: usize, stage1: &impl Stage1Source) -> Result<BoundaryCanvas> {
    let r = tile_size;
    let b = r / 2;
    let mut canvas = BoundaryCanvas::blank(r, Region::Interior, (b, b));
    let keys = Stage1Key::for_interior(id);
    let sources = keys
        .iter()
        .map(|&k| {
            let src = stage1.stage1(k).ok_or_else(|| Error::Missing(format!("stage-1 canvas {k}")))?;
            if src.dims() != (2 * r, 2 * r) {
                return Err(Error::SizeMismatch {
                    expected: (2 * r, 2 * r),
                    actual: src.dims(),
                });
            }
            Ok(src)
        })
        .collect::<Result<Vec<_>>>()?;
    let s = 2 * r;
    for y in 0..s {
        for x in 0..s {
            let q = match (x >= r, y >= r) {
                (true, false) => 0,
                (true, true) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            let v = sources[q].get(x, y);
            let (gx, gy) = (x as i64 - b as i64, y as i64 - b as i64);
            if owner(gx, gy, r) == Owner::Interior(0, 0) {
                canvas.retained.set(x, y, true);
                canvas.put_overflow(x, y, v);
            } else {
                canvas.put(x, y, v)?;
            }
        }
    }
    Ok(canvas.finish())
}

/// Cross canvas: a 2 × 2 block of interior tiles around the central corner
/// (see [`cross_neighbours`]); everything outside their diamonds is masked
/// and the central cross diamond is retained.
pub fn assemble_cross(
    id: CrossTileId,
    tile_size: usize,
    interiors: impl Fn(InteriorTileId) -> Option<TileImage>,
) -> Result<BoundaryCanvas> {
    let r = tile_size;
    let h = r / 2;
    let mut canvas = BoundaryCanvas::blank(r, Region::Cross, (h, h));
    let around = cross_neighbours(id);
    let tiles = around
        .iter()
        .map(|&t| interiors(t).ok_or_else(|| Error::Missing(format!("interior tile {t}"))))
        .collect::<Result<Vec<_>>>()?;
    let s = 2 * r;
    for y in 0..s {
        for x in 0..s {
            match owner(x as i64, y as i64, r) {
                Owner::Interior(cx, cy) => {
                    let t = &tiles[match (cx, cy) {
                        (0, 0) => 0,
                        (1, 0) => 1,
                        (1, 1) => 2,
                        _ => 3,
                    }];
                    let (i, j) = (x % r, y % r);
                    if !t.valid.get(i, j) {
                        return Err(Error::Geometry(format!("interior tile lacks texel ({i}, {j})")));
                    }
                    canvas.put(x, y, t.pixels.get(i, j))?;
                }
                Owner::Cross(1, 1) => canvas.retained.set(x, y, true),
                Owner::Cross(..) => {}
            }
        }
    }
    Ok(canvas.finish())
}

/// Copies overflow texels up to `margin` texels past the boundary into the
/// masked area. The mask is unchanged, so those texels are still
/// synthesized; they only give latent-space models context.
pub fn extend_margin(canvas: &BoundaryCanvas, margin: usize) -> Result<BoundaryCanvas> {
    if margin >= canvas.tile_size / 2 {
        return Err(Error::Config(format!(
            "margin {margin} must be below half the tile size ({})",
            canvas.tile_size / 2
        )));
    }
    let mut out = canvas.clone();
    if margin == 0 {
        return Ok(out);
    }
    let dist = canvas.mask.distance_to_unset();
    let s = canvas.size();
    for y in 0..s {
        for x in 0..s {
            let i = y * s + x;
            if canvas.mask.get(x, y) && dist[i] as usize <= margin && canvas.overflow_valid.get(x, y) {
                out.pixels.set(x, y, canvas.overflow.get(x, y));
            }
        }
    }
    Ok(out)
}

/// Extracts the retained texels of an inpainted canvas into an `R × R`
/// tile. Unmasked retained texels (Corner Wang's copies) come straight from
/// the canvas.
pub fn crop_result(canvas: &BoundaryCanvas, inpainted: &Raster) -> Result<TileImage> {
    if inpainted.dims() != canvas.pixels.dims() {
        return Err(Error::SizeMismatch {
            expected: canvas.pixels.dims(),
            actual: inpainted.dims(),
        });
    }
    let r = canvas.tile_size;
    let mut pixels = Raster::new(r, r);
    let mut valid = Mask::new(r, r);
    let s = canvas.size();
    for y in 0..s {
        for x in 0..s {
            if !canvas.retained.get(x, y) {
                continue;
            }
            let (i, j) = canvas.tile_coords(x, y);
            let v = if canvas.mask.get(x, y) {
                inpainted.get(x, y)
            } else {
                canvas.pixels.get(x, y)
            };
            pixels.set(i, j, v);
            valid.set(i, j, true);
        }
    }
    Ok(TileImage { pixels, valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_partition() {
        for r in [4usize, 6, 8, 16, 30] {
            assert_eq!(interior_mask(r).count(), r * r / 2, "R={r}");
            assert_eq!(cross_mask(r).count(), r * r / 2, "R={r}");
        }
    }

    #[test]
    fn stage1_keys() {
        let c = ColorCount::new(3).unwrap();
        let keys = Stage1Key::all(c);
        assert_eq!(keys.len(), 36);
        for k in keys {
            assert_eq!(k.to_string().parse::<Stage1Key>().unwrap(), k);
        }
        let id = WangTileId::new(1, 2, 0, 1);
        let [ne, se, sw, nw] = Stage1Key::for_interior(id);
        assert_eq!((ne.wang_id().n, ne.wang_id().e), (1, 2));
        assert_eq!((se.wang_id().e, se.wang_id().s), (2, 0));
        assert_eq!((sw.wang_id().s, sw.wang_id().w), (0, 1));
        assert_eq!((nw.wang_id().w, nw.wang_id().n), (1, 1));
    }

    #[test]
    fn cross_neighbours_share_center_edges() {
        let id = CrossTileId::new(1, 2, 3, 4);
        let [nw, ne, se, sw] = cross_neighbours(id);
        assert_eq!((nw.e, ne.w), (1, 1));
        assert_eq!((ne.s, se.n), (2, 2));
        assert_eq!((se.w, sw.e), (3, 3));
        assert_eq!((sw.n, nw.s), (4, 4));
    }

    #[test]
    fn path_validation() {
        let mut p = CutPath::straight(Axis::Horizontal, 8);
        assert!(p.validate(8).is_ok());
        p.offsets[0] = 3;
        assert!(p.validate(8).is_err());
        p.offsets[7] = 3;
        assert!(p.validate(8).is_ok());
        p.offsets[2] = 0;
        assert!(p.validate(8).is_err());
    }
}
