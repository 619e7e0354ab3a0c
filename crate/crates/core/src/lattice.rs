//! Tile identities and torus edge lattices.
//!
//! Coordinates run x rightward and y downward. `H(x, y)` is the horizontal
//! edge on the north side of tile `(x, y)` and `V(x, y)` the vertical edge on
//! its west side, so every edge is stored once and any two tiles read from a
//! lattice agree on the edge they share.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single edge (or corner) color, always smaller than the lattice's
/// [`ColorCount`].
pub type EdgeColor = u8;

/// The number of edge colors `C` of a tile set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ColorCount(u8);

impl ColorCount {
    pub fn new(c: u32) -> Result<Self> {
        match c {
            0 => Err(Error::ZeroColors),
            1..=255 => Ok(ColorCount(c as u8)),
            _ => Err(Error::ColorOutOfRange { color: c, colors: 255 }),
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }

    /// `C²`: the side length of a packing and the length of a domino string.
    pub fn squared(self) -> usize {
        let c = self.0 as usize;
        c * c
    }

    /// `C⁴`: the number of distinct Wang (or interior, or cross) tiles.
    pub fn tile_count(self) -> usize {
        self.squared() * self.squared()
    }

    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn check(self, color: EdgeColor) -> Result<EdgeColor> {
        if color < self.0 {
            Ok(color)
        } else {
            Err(Error::ColorOutOfRange {
                color: color as u32,
                colors: self.get(),
            })
        }
    }

    /// Every color in order.
    pub fn colors(self) -> impl Iterator<Item = EdgeColor> + Clone {
        0..self.0
    }
}

impl TryFrom<u32> for ColorCount {
    type Error = Error;
    fn try_from(c: u32) -> Result<Self> {
        ColorCount::new(c)
    }
}

impl From<ColorCount> for u32 {
    fn from(c: ColorCount) -> u32 {
        c.get()
    }
}

impl fmt::Display for ColorCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn quad_index(colors: ColorCount, q: [EdgeColor; 4]) -> usize {
    let c = colors.get() as usize;
    q.iter().fold(0, |acc, &v| acc * c + v as usize)
}

fn quad_from_index(colors: ColorCount, mut index: usize) -> Result<[EdgeColor; 4]> {
    if index >= colors.tile_count() {
        return Err(Error::Missing(format!(
            "tile index {index} with {colors} colors"
        )));
    }
    let c = colors.get() as usize;
    let mut q = [0; 4];
    for slot in q.iter_mut().rev() {
        *slot = (index % c) as EdgeColor;
        index /= c;
    }
    Ok(q)
}

macro_rules! quad_id {
    ($(#[$meta:meta])* $name:ident { $a:ident, $b:ident, $c:ident, $d:ident }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name {
            pub $a: EdgeColor,
            pub $b: EdgeColor,
            pub $c: EdgeColor,
            pub $d: EdgeColor,
        }

        impl $name {
            pub const fn new($a: EdgeColor, $b: EdgeColor, $c: EdgeColor, $d: EdgeColor) -> Self {
                $name { $a, $b, $c, $d }
            }

            pub fn to_array(self) -> [EdgeColor; 4] {
                [self.$a, self.$b, self.$c, self.$d]
            }

            pub fn from_array(q: [EdgeColor; 4]) -> Self {
                $name::new(q[0], q[1], q[2], q[3])
            }

            /// Canonical index, big-endian in the color count.
            pub fn index(self, colors: ColorCount) -> usize {
                quad_index(colors, self.to_array())
            }

            pub fn from_index(colors: ColorCount, index: usize) -> Result<Self> {
                quad_from_index(colors, index).map(Self::from_array)
            }

            /// All `C⁴` ids in canonical order.
            pub fn all(colors: ColorCount) -> impl Iterator<Item = Self> {
                (0..colors.tile_count())
                    .map(move |i| Self::from_array(quad_from_index(colors, i).unwrap()))
            }

            pub fn validate(self, colors: ColorCount) -> Result<Self> {
                for v in self.to_array() {
                    colors.check(v)?;
                }
                Ok(self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}-{}-{}-{}", self.$a, self.$b, self.$c, self.$d)
            }
        }
    };
}

quad_id!(
    /// A Wang tile named by its north, east, south and west edge colors.
    WangTileId { n, e, s, w }
);

quad_id!(
    /// A Corner Wang tile named by its four corner colors.
    CornerTileId { nw, ne, se, sw }
);

quad_id!(
    /// A cross (Dual Wang) tile named by the four edges meeting at its center:
    /// the vertical edge above, horizontal edge to the right, vertical edge
    /// below and horizontal edge to the left.
    CrossTileId { cn, ce, cs, cw }
);

/// Interior Dual Wang tiles carry the edges of the Wang tile around them.
pub type InteriorTileId = WangTileId;

impl std::str::FromStr for WangTileId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_quad(s).map(Self::from_array)
    }
}

impl std::str::FromStr for CornerTileId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_quad(s).map(Self::from_array)
    }
}

impl std::str::FromStr for CrossTileId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_quad(s).map(Self::from_array)
    }
}

fn parse_quad(s: &str) -> Result<[EdgeColor; 4]> {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 4 {
        return Err(Error::UnknownTile(s.to_string()));
    }
    let mut q = [0; 4];
    for (slot, p) in q.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| Error::UnknownTile(s.to_string()))?;
    }
    Ok(q)
}

/// A rectangular (optionally torus-periodic) assignment of colors to the
/// edges of a tile grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLattice {
    colors: ColorCount,
    width: usize,
    height: usize,
    periodic: bool,
    /// Row-major, `width` columns by `height` rows (`height + 1` when not
    /// periodic).
    h: Vec<EdgeColor>,
    /// Row-major, `width` columns (`width + 1` when not periodic) by `height`
    /// rows.
    v: Vec<EdgeColor>,
}

impl EdgeLattice {
    /// An all-zero lattice.
    pub fn new(colors: ColorCount, width: usize, height: usize, periodic: bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry("lattice must be at least 1x1".into()));
        }
        let (hw, hh, vw, vh) = Self::storage_dims(width, height, periodic);
        Ok(EdgeLattice {
            colors,
            width,
            height,
            periodic,
            h: vec![0; hw * hh],
            v: vec![0; vw * vh],
        })
    }

    /// A periodic lattice whose edges are given by two functions of the
    /// (already wrapped) edge coordinates.
    pub fn periodic_from_fn(
        colors: ColorCount,
        width: usize,
        height: usize,
        mut h: impl FnMut(usize, usize) -> EdgeColor,
        mut v: impl FnMut(usize, usize) -> EdgeColor,
    ) -> Result<Self> {
        let mut lattice = EdgeLattice::new(colors, width, height, true)?;
        for y in 0..height {
            for x in 0..width {
                lattice.h[y * width + x] = colors.check(h(x, y))?;
                lattice.v[y * width + x] = colors.check(v(x, y))?;
            }
        }
        Ok(lattice)
    }

    /// Builds a periodic lattice from row-major `H` and `V` arrays, as stored
    /// in packing grid documents.
    pub fn from_arrays(
        colors: ColorCount,
        width: usize,
        height: usize,
        h: Vec<EdgeColor>,
        v: Vec<EdgeColor>,
    ) -> Result<Self> {
        if h.len() != width * height || v.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: (width, height),
                actual: (h.len(), v.len()),
            });
        }
        for &c in h.iter().chain(&v) {
            colors.check(c)?;
        }
        let mut lattice = EdgeLattice::new(colors, width, height, true)?;
        lattice.h = h;
        lattice.v = v;
        Ok(lattice)
    }

    fn storage_dims(width: usize, height: usize, periodic: bool) -> (usize, usize, usize, usize) {
        if periodic {
            (width, height, width, height)
        } else {
            (width, height + 1, width + 1, height)
        }
    }

    pub fn colors(&self) -> ColorCount {
        self.colors
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn h_array(&self) -> &[EdgeColor] {
        &self.h
    }

    pub fn v_array(&self) -> &[EdgeColor] {
        &self.v
    }

    fn slot(&self, x: i64, y: i64, w: usize, h: usize) -> Result<usize> {
        if self.periodic {
            let xx = x.rem_euclid(w as i64) as usize;
            let yy = y.rem_euclid(h as i64) as usize;
            Ok(yy * w + xx)
        } else if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            Ok(y as usize * w + x as usize)
        } else {
            Err(Error::OutOfRange {
                x,
                y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Color of the horizontal edge on the north side of tile `(x, y)`.
    pub fn h(&self, x: i64, y: i64) -> Result<EdgeColor> {
        let (hw, hh, _, _) = Self::storage_dims(self.width, self.height, self.periodic);
        self.slot(x, y, hw, hh).map(|i| self.h[i])
    }

    /// Color of the vertical edge on the west side of tile `(x, y)`.
    pub fn v(&self, x: i64, y: i64) -> Result<EdgeColor> {
        let (_, _, vw, vh) = Self::storage_dims(self.width, self.height, self.periodic);
        self.slot(x, y, vw, vh).map(|i| self.v[i])
    }

    pub fn set_h(&mut self, x: i64, y: i64, color: EdgeColor) -> Result<()> {
        self.colors.check(color)?;
        let (hw, hh, _, _) = Self::storage_dims(self.width, self.height, self.periodic);
        let i = self.slot(x, y, hw, hh)?;
        self.h[i] = color;
        Ok(())
    }

    pub fn set_v(&mut self, x: i64, y: i64, color: EdgeColor) -> Result<()> {
        self.colors.check(color)?;
        let (_, _, vw, vh) = Self::storage_dims(self.width, self.height, self.periodic);
        let i = self.slot(x, y, vw, vh)?;
        self.v[i] = color;
        Ok(())
    }

    fn check_tile(&self, x: i64, y: i64) -> Result<()> {
        if self.periodic || (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                x,
                y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// The Wang tile at `(x, y)`.
    pub fn tile_of(&self, x: i64, y: i64) -> Result<WangTileId> {
        self.check_tile(x, y)?;
        Ok(WangTileId {
            n: self.h(x, y)?,
            e: self.v(x + 1, y)?,
            s: self.h(x, y + 1)?,
            w: self.v(x, y)?,
        })
    }

    /// The cross tile centered on the lattice corner at the north-west corner
    /// of tile `(x, y)`.
    pub fn cross_of(&self, x: i64, y: i64) -> Result<CrossTileId> {
        if !self.periodic
            && !(x >= 1 && y >= 1 && (x as usize) < self.width && (y as usize) < self.height)
        {
            return Err(Error::OutOfRange {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(CrossTileId {
            cn: self.v(x, y - 1)?,
            ce: self.h(x, y)?,
            cs: self.v(x, y)?,
            cw: self.h(x - 1, y)?,
        })
    }

    /// Every tile in row-major order.
    pub fn tiles(&self) -> Vec<WangTileId> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                out.push(self.tile_of(x, y).expect("in range"));
            }
        }
        out
    }

    /// Every cross tile of a periodic lattice in row-major corner order.
    pub fn crosses(&self) -> Result<Vec<CrossTileId>> {
        if !self.periodic {
            return Err(Error::NotPeriodic);
        }
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                out.push(self.cross_of(x, y)?);
            }
        }
        Ok(out)
    }

    /// The complement tiling: every edge replaced by its perpendicular
    /// through the edge center, so that tile `(x, y)` of the result is the
    /// cross tile at the north-west corner of tile `(x, y)` here.
    pub fn complement(&self) -> Result<EdgeLattice> {
        if !self.periodic {
            return Err(Error::NotPeriodic);
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let mut out = EdgeLattice::new(self.colors, self.width, self.height, true)?;
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                out.h[i] = self.v(x, y - 1)?;
                out.v[i] = self.h(x - 1, y)?;
            }
        }
        Ok(out)
    }

    /// Whether each of the `C⁴` Wang tiles occurs exactly once.
    pub fn check_complete(&self) -> Result<CompletenessReport> {
        if !self.periodic {
            return Err(Error::NotPeriodic);
        }
        let expected = self.colors.squared();
        if self.width * self.height != self.colors.tile_count() {
            return Err(Error::DimensionMismatch {
                width: self.width,
                height: self.height,
                colors: self.colors.get(),
                expected,
            });
        }
        Ok(CompletenessReport::from_counts(
            self.colors,
            self.tiles().iter().map(|t| t.index(self.colors)),
        ))
    }
}

/// Result of checking a multiset of `C⁴` quad ids for exact coverage. Ids are
/// reported by canonical index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub complete: bool,
    pub missing: Vec<usize>,
    pub duplicated: Vec<(usize, usize)>,
}

impl CompletenessReport {
    pub(crate) fn from_counts(colors: ColorCount, indices: impl IntoIterator<Item = usize>) -> Self {
        Self::from_universe(colors.tile_count(), indices)
    }

    /// Coverage of `0..universe` by `indices`.
    pub(crate) fn from_universe(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0usize; universe];
        for i in indices {
            counts[i] += 1;
        }
        let missing: Vec<usize> = (0..universe).filter(|&i| counts[i] == 0).collect();
        let duplicated: Vec<(usize, usize)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 1)
            .map(|(i, &n)| (i, n))
            .collect();
        CompletenessReport {
            complete: missing.is_empty() && duplicated.is_empty(),
            missing,
            duplicated,
        }
    }

    pub fn missing_wang(&self, colors: ColorCount) -> Vec<WangTileId> {
        self.missing
            .iter()
            .map(|&i| WangTileId::from_index(colors, i).unwrap())
            .collect()
    }

    /// Histogram of multiplicities among duplicated ids.
    pub fn duplicate_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for &(_, n) in &self.duplicated {
            *hist.entry(n).or_insert(0) += 1;
        }
        hist
    }
}

impl fmt::Display for CompletenessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complete {
            return f.write_str("complete");
        }
        write!(
            f,
            "incomplete: {} missing, {} duplicated",
            self.missing.len(),
            self.duplicated.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: u32) -> ColorCount {
        ColorCount::new(n).unwrap()
    }

    #[test]
    fn trivial_lattice() {
        let l = EdgeLattice::new(c(1), 1, 1, true).unwrap();
        assert_eq!(l.tile_of(0, 0).unwrap(), WangTileId::new(0, 0, 0, 0));
        assert_eq!(l.cross_of(0, 0).unwrap(), CrossTileId::new(0, 0, 0, 0));
        assert!(l.check_complete().unwrap().complete);
        let comp = l.complement().unwrap();
        assert_eq!(comp.tile_of(0, 0).unwrap(), WangTileId::new(0, 0, 0, 0));
    }

    #[test]
    fn constant_lattice_is_incomplete() {
        let l = EdgeLattice::new(c(2), 4, 4, true).unwrap();
        let r = l.check_complete().unwrap();
        assert!(!r.complete);
        assert_eq!(r.duplicated, vec![(0, 16)]);
        assert_eq!(r.missing.len(), 15);
    }

    #[test]
    fn dimension_mismatch() {
        let l = EdgeLattice::new(c(2), 3, 4, true).unwrap();
        assert!(matches!(
            l.check_complete(),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_periodic_bounds() {
        let mut l = EdgeLattice::new(c(3), 2, 2, false).unwrap();
        l.set_v(2, 1, 2).unwrap();
        l.set_h(1, 2, 1).unwrap();
        assert_eq!(l.tile_of(1, 1).unwrap(), WangTileId::new(0, 2, 1, 0));
        assert!(matches!(l.tile_of(2, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(l.tile_of(-1, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(l.complement(), Err(Error::NotPeriodic)));
        assert!(l.cross_of(1, 1).is_ok());
        assert!(l.cross_of(0, 1).is_err());
    }

    #[test]
    fn cross_projection() {
        let colors = c(3);
        let l = EdgeLattice::periodic_from_fn(
            colors,
            5,
            4,
            |x, y| ((x * 7 + y * 3) % 3) as u8,
            |x, y| ((x + y * 2) % 3) as u8,
        )
        .unwrap();
        for y in -4..8 {
            for x in -5..10 {
                let cr = l.cross_of(x, y).unwrap();
                assert_eq!(cr.cs, l.v(x, y).unwrap());
                assert_eq!(cr.ce, l.h(x, y).unwrap());
                // the cross tile and the four tiles around its center agree
                assert_eq!(cr.cn, l.tile_of(x, y - 1).unwrap().w);
                assert_eq!(cr.ce, l.tile_of(x, y).unwrap().n);
                assert_eq!(cr.cs, l.tile_of(x - 1, y).unwrap().e);
                assert_eq!(cr.cw, l.tile_of(x - 1, y - 1).unwrap().s);
            }
        }
    }

    #[test]
    fn complement_reads_crosses() {
        let colors = c(2);
        let l = EdgeLattice::periodic_from_fn(
            colors,
            4,
            4,
            |x, y| ((x * y + x) % 2) as u8,
            |x, y| ((x + 3 * y) % 2) as u8,
        )
        .unwrap();
        let comp = l.complement().unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(
                    comp.tile_of(x, y).unwrap().to_array(),
                    l.cross_of(x, y).unwrap().to_array()
                );
            }
        }
    }

    #[test]
    fn index_round_trip() {
        for n in 1..=4 {
            let colors = c(n);
            for (i, id) in WangTileId::all(colors).enumerate() {
                assert_eq!(id.index(colors), i);
                assert_eq!(WangTileId::from_index(colors, i).unwrap(), id);
            }
            assert!(WangTileId::from_index(colors, colors.tile_count()).is_err());
        }
        assert_eq!(WangTileId::new(1, 0, 2, 1).index(c(3)), ((3 + 0) * 3 + 2) * 3 + 1);
    }

    #[test]
    fn id_text_round_trip() {
        let id = WangTileId::new(3, 0, 12, 1);
        assert_eq!(id.to_string(), "3-0-12-1");
        assert_eq!("3-0-12-1".parse::<WangTileId>().unwrap(), id);
        assert!("3-0-1".parse::<WangTileId>().is_err());
        assert!("a-b-c-d".parse::<CrossTileId>().is_err());
    }

    #[test]
    fn zero_colors_rejected() {
        assert!(matches!(ColorCount::new(0), Err(Error::ZeroColors)));
        assert!(c(3).check(3).is_err());
    }
}
