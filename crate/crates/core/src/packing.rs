//! Domino strings and Dual Wang tile packings.
//!
//! A packing is a `C² × C²` torus tiling in which every Wang tile occurs
//! exactly once and whose complement (the cross tiles read at the lattice
//! corners) is complete as well.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ColorCount, CompletenessReport, EdgeColor, EdgeLattice, WangTileId};

/// A cyclic color sequence of length `C²`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominoString {
    pub colors: ColorCount,
    pub seq: Vec<EdgeColor>,
}

impl DominoString {
    pub fn new(colors: ColorCount, seq: Vec<EdgeColor>) -> Result<Self> {
        for &c in &seq {
            colors.check(c)?;
        }
        Ok(DominoString { colors, seq })
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// Color at cyclic position `k`.
    pub fn at(&self, k: i64) -> EdgeColor {
        self.seq[k.rem_euclid(self.seq.len() as i64) as usize]
    }

    /// The domino starting at cyclic position `k`.
    pub fn domino(&self, k: i64) -> (EdgeColor, EdgeColor) {
        (self.at(k), self.at(k + 1))
    }

    /// The same cycle started at position `k`.
    pub fn rotated(&self, k: usize) -> DominoString {
        let mut seq = self.seq.clone();
        if !seq.is_empty() {
            seq.rotate_left(k % self.seq.len());
        }
        DominoString {
            colors: self.colors,
            seq,
        }
    }
}

fn pair_index(colors: ColorCount, p: (EdgeColor, EdgeColor)) -> usize {
    p.0 as usize * colors.get() as usize + p.1 as usize
}

fn pair_report(colors: ColorCount, pairs: impl IntoIterator<Item = (EdgeColor, EdgeColor)>) -> CompletenessReport {
    CompletenessReport::from_universe(colors.squared(), pairs.into_iter().map(|p| pair_index(colors, p)))
}

/// Builds a complete domino string by taking each color in turn as the fixed
/// color and interleaving it with every larger color.
///
/// For `C = 3` this yields `0 0 1 0 2 1 1 2 2`.
pub fn make_domino_string(colors: ColorCount) -> DominoString {
    let c = colors.get() as EdgeColor;
    let mut seq = Vec::with_capacity(colors.squared());
    for f in 0..c {
        seq.push(f);
        for j in f + 1..c {
            seq.push(f);
            seq.push(j);
        }
    }
    let s = DominoString { colors, seq };
    if is_complete_domino(&s) {
        s
    } else {
        eulerian_domino_string(colors, None)
    }
}

/// A domino string from an Eulerian circuit of the complete digraph with
/// self-loops on `C` vertices (Hierholzer). With a seed the edge order is
/// shuffled, giving a random complete string.
pub fn eulerian_domino_string(colors: ColorCount, seed: Option<u64>) -> DominoString {
    let c = colors.get() as usize;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut out_edges: Vec<Vec<EdgeColor>> = (0..c)
        .map(|_| {
            let mut e: Vec<EdgeColor> = (0..c as EdgeColor).rev().collect();
            if let Some(r) = rng.as_mut() {
                e.shuffle(r);
            }
            e
        })
        .collect();
    let mut stack = vec![0 as EdgeColor];
    let mut circuit = Vec::with_capacity(c * c + 1);
    while let Some(&v) = stack.last() {
        if let Some(next) = out_edges[v as usize].pop() {
            stack.push(next);
        } else {
            circuit.push(v);
            stack.pop();
        }
    }
    circuit.reverse();
    circuit.pop();
    DominoString { colors, seq: circuit }
}

/// Whether the cyclic dominoes of `s` are exactly the `C²` ordered pairs.
pub fn is_complete_domino(s: &DominoString) -> bool {
    if s.len() != s.colors.squared() || s.seq.iter().any(|&c| s.colors.check(c).is_err()) {
        return false;
    }
    pair_report(s.colors, (0..s.len() as i64).map(|k| s.domino(k))).complete
}

/// Two interleaved domino templates for even `C`. Column `x` of an even
/// packing reads its west/east pairs from `d0` when `x` is even and from `d1`
/// when odd, so `d1(k)` is always `d0(k)` reversed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleDominoString {
    pub colors: ColorCount,
    pub d0: Vec<(EdgeColor, EdgeColor)>,
    pub d1: Vec<(EdgeColor, EdgeColor)>,
}

impl DoubleDominoString {
    /// Builds the pair from `d0`, deriving `d1` by reversal.
    pub fn from_d0(colors: ColorCount, d0: Vec<(EdgeColor, EdgeColor)>) -> Self {
        let d1 = d0.iter().map(|&(a, b)| (b, a)).collect();
        DoubleDominoString { colors, d0, d1 }
    }

    pub fn row(&self, parity: usize) -> &[(EdgeColor, EdgeColor)] {
        if parity % 2 == 0 {
            &self.d0
        } else {
            &self.d1
        }
    }

    fn z(&self) -> (Vec<EdgeColor>, Vec<EdgeColor>) {
        let n = self.d0.len();
        let z0 = (0..n).map(|k| self.row(k)[k].0).collect();
        let z1 = (0..n).map(|k| self.row(k + 1)[k].0).collect();
        (z0, z1)
    }
}

fn require_even(colors: ColorCount) -> Result<()> {
    if colors.is_odd() {
        Err(Error::Parity("even", colors.get()))
    } else {
        Ok(())
    }
}

fn require_odd(colors: ColorCount) -> Result<()> {
    if colors.is_odd() {
        Ok(())
    } else {
        Err(Error::Parity("odd", colors.get()))
    }
}

/// Double domino template for even `C`: every domino is placed with its
/// fixed color on the west side in even rows and on the east side in odd
/// rows.
pub fn make_double_domino(colors: ColorCount) -> Result<DoubleDominoString> {
    require_even(colors)?;
    let c = colors.get() as usize;
    let d0 = (0..colors.squared())
        .map(|k| {
            let (a, b) = ((k / c) as EdgeColor, (k % c) as EdgeColor);
            if k % 2 == 0 {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let d = DoubleDominoString::from_d0(colors, d0);
    if double_conditions_hold(&d) {
        return Ok(d);
    }
    search_double_domino(colors)?.ok_or_else(|| Error::Missing(format!("double domino string for {colors} colors")))
}

fn double_conditions_hold(d: &DoubleDominoString) -> bool {
    check_double_conditions(d).iter().all(|r| r.complete)
}

/// Backtracking search for a double domino template. Works on the column
/// sequences `z0(k)`, `z1(k)` (the west colors of even and odd columns in
/// row `k`).
pub fn search_double_domino(colors: ColorCount) -> Result<Option<DoubleDominoString>> {
    require_even(colors)?;
    let n = colors.squared();
    let c = colors.get() as usize;
    struct St {
        n: usize,
        c: usize,
        z: Vec<(usize, usize)>,
        own: Vec<bool>,
        pe: Vec<bool>,
        po: Vec<bool>,
    }
    fn go(st: &mut St) -> bool {
        let k = st.z.len();
        let c = st.c;
        if k == st.n {
            let (f, l) = (st.z[0], st.z[k - 1]);
            let (e, o) = (l.0 * c + f.1, l.1 * c + f.0);
            return !st.pe[e] && !st.po[o];
        }
        for a in 0..c {
            for b in 0..c {
                let own = a * c + b;
                if st.own[own] {
                    continue;
                }
                let links = st.z.last().map(|&(pa, pb)| (pa * c + b, pb * c + a));
                if let Some((e, o)) = links {
                    if st.pe[e] || st.po[o] {
                        continue;
                    }
                    st.pe[e] = true;
                    st.po[o] = true;
                }
                st.own[own] = true;
                st.z.push((a, b));
                if go(st) {
                    return true;
                }
                st.z.pop();
                st.own[own] = false;
                if let Some((e, o)) = links {
                    st.pe[e] = false;
                    st.po[o] = false;
                }
            }
        }
        false
    }
    let mut st = St {
        n,
        c,
        z: Vec::with_capacity(n),
        own: vec![false; n],
        pe: vec![false; n],
        po: vec![false; n],
    };
    if !go(&mut st) {
        return Ok(None);
    }
    let d0 = st
        .z
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let (a, b) = (a as EdgeColor, b as EdgeColor);
            if k % 2 == 0 {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    Ok(Some(DoubleDominoString::from_d0(colors, d0)))
}

/// The three completeness conditions of a double domino template:
///
/// 1. `{d0(2i)} ∪ {d1(2i+1)}` contains every domino once;
/// 2. `{d1(2i)} ∪ {d0(2i+1)}` likewise;
/// 3. the complement condition. With `z0(k)` and `z1(k)` the first colors of
///    `d_{k mod 2}(k)` and `d_{(k+1) mod 2}(k)`, both `(z0(k), z1(k+1))` and
///    `(z1(k), z0(k+1))` must run through every pair once. The report covers
///    `2·C²` slots: the first `C²` for the former sequence, the rest for the
///    latter.
///
/// Templates that break the reversal constraint fail all three.
pub fn check_double_conditions(d: &DoubleDominoString) -> [CompletenessReport; 3] {
    let colors = d.colors;
    let n = colors.squared();
    let nn = n as i64;
    let shaped = d.d0.len() == n && d.d1.len() == n;
    let reversed = shaped && d.d0.iter().zip(&d.d1).all(|(&(a, b), &(c, e))| (a, b) == (e, c));
    if !reversed || d.d0.iter().chain(&d.d1).any(|&(a, b)| colors.check(a).is_err() || colors.check(b).is_err()) {
        let bad = CompletenessReport {
            complete: false,
            missing: (0..n).collect(),
            duplicated: Vec::new(),
        };
        let mut third = bad.clone();
        third.missing = (0..2 * n).collect();
        return [bad.clone(), bad, third];
    }
    let first = pair_report(
        colors,
        (0..n).map(|k| if k % 2 == 0 { d.d0[k] } else { d.d1[k] }),
    );
    let second = pair_report(
        colors,
        (0..n).map(|k| if k % 2 == 0 { d.d1[k] } else { d.d0[k] }),
    );
    let (z0, z1) = d.z();
    let at = |z: &Vec<EdgeColor>, k: i64| z[k.rem_euclid(nn) as usize];
    let idx = |p: (EdgeColor, EdgeColor)| pair_index(colors, p);
    let third = CompletenessReport::from_universe(
        2 * n,
        (0..nn)
            .map(|k| idx((at(&z0, k), at(&z1, k + 1))))
            .chain((0..nn).map(|k| n + idx((at(&z1, k), at(&z0, k + 1))))),
    );
    [first, second, third]
}

/// A `C² × C²` torus lattice proposed as a Dual Wang tile packing. Whether it
/// is one is decided by [`validate_packing`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingGrid {
    pub lattice: EdgeLattice,
}

impl PackingGrid {
    pub fn new(lattice: EdgeLattice) -> Result<Self> {
        let side = lattice.colors().squared();
        if !lattice.is_periodic() {
            return Err(Error::NotPeriodic);
        }
        if lattice.width() != side || lattice.height() != side {
            return Err(Error::DimensionMismatch {
                width: lattice.width(),
                height: lattice.height(),
                colors: lattice.colors().get(),
                expected: side,
            });
        }
        Ok(PackingGrid { lattice })
    }

    pub fn colors(&self) -> ColorCount {
        self.lattice.colors()
    }

    pub fn side(&self) -> usize {
        self.lattice.width()
    }

    pub fn to_document(&self) -> PackingDocument {
        PackingDocument {
            colors: self.colors().get(),
            width: self.lattice.width(),
            height: self.lattice.height(),
            h: self.lattice.h_array().to_vec(),
            v: self.lattice.v_array().to_vec(),
        }
    }

    pub fn from_document(doc: PackingDocument) -> Result<Self> {
        let colors = ColorCount::new(doc.colors)?;
        PackingGrid::new(EdgeLattice::from_arrays(colors, doc.width, doc.height, doc.h, doc.v)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

/// On-disk form of a packing grid; `H` and `V` are row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingDocument {
    pub colors: u32,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "H")]
    pub h: Vec<EdgeColor>,
    #[serde(rename = "V")]
    pub v: Vec<EdgeColor>,
}

/// Packing for odd `C`: horizontal edges follow the domino string along one
/// diagonal and vertical edges along the other.
pub fn pack_odd(colors: ColorCount) -> Result<PackingGrid> {
    require_odd(colors)?;
    PackingGrid::new(diagonal_lattice(colors, &make_domino_string(colors))?)
}

/// `H(x,y) = s(y−x)`, `V(x,y) = s(x+y)` for any domino string `s`.
pub fn diagonal_lattice(colors: ColorCount, s: &DominoString) -> Result<EdgeLattice> {
    let n = colors.squared();
    EdgeLattice::periodic_from_fn(
        colors,
        n,
        n,
        |x, y| s.at(y as i64 - x as i64),
        |x, y| s.at((x + y) as i64),
    )
}

/// Packing for even `C`: the north/south chain follows a single domino
/// string along the anti-diagonal while west/east pairs come from the double
/// template, `d0` in even columns and `d1` in odd ones.
pub fn pack_even(colors: ColorCount) -> Result<PackingGrid> {
    require_even(colors)?;
    let u = make_domino_string(colors);
    let d = make_double_domino(colors)?;
    PackingGrid::new(even_lattice(&u, &d)?)
}

/// The even construction for explicit strings.
pub fn even_lattice(u: &DominoString, d: &DoubleDominoString) -> Result<EdgeLattice> {
    let colors = d.colors;
    let n = colors.squared();
    EdgeLattice::periodic_from_fn(
        colors,
        n,
        n,
        |x, y| u.at((x + y) as i64),
        |x, y| d.row(x)[y].0,
    )
}

/// Dispatches on the parity of `C`.
pub fn pack(colors: ColorCount) -> Result<PackingGrid> {
    if colors.is_odd() {
        pack_odd(colors)
    } else {
        pack_even(colors)
    }
}

/// Completeness of a grid and of its complement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingValidation {
    pub valid: bool,
    pub tiling: CompletenessReport,
    pub complement: CompletenessReport,
}

pub fn validate_packing(grid: &PackingGrid) -> Result<PackingValidation> {
    let tiling = grid.lattice.check_complete()?;
    let complement = grid.lattice.complement()?.check_complete()?;
    Ok(PackingValidation {
        valid: tiling.complete && complement.complete,
        tiling,
        complement,
    })
}

/// The odd construction applied to an even color count. It does not give a
/// packing: half of the tiles appear twice and the rest not at all.
pub fn naive_even_construction(colors: ColorCount) -> Result<EdgeLattice> {
    require_even(colors)?;
    diagonal_lattice(colors, &make_domino_string(colors))
}

/// Counts from an exhaustive packing search.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationSummary {
    pub colors: u32,
    /// Labeled grids: distinct `(H, V)` arrays on the fixed torus.
    pub labeled: u64,
    /// Labeled complete tilings, ignoring the complement.
    pub complete_tilings: u64,
    /// Orbits under torus translation.
    pub up_to_translation: u64,
    /// Orbits under translation and color permutation.
    pub up_to_translation_and_colors: u64,
    /// Orbits under translation and the eight square symmetries.
    pub up_to_translation_and_dihedral: u64,
    /// Orbits under translation, square symmetries and color permutation.
    pub up_to_all: u64,
}

/// Exhaustive backtracking over the `C² × C²` torus. Each cell takes one
/// unused Wang tile consistent with its west and north neighbours (and, in
/// the last column and row, with the wrapped east and south ones);
/// complement completeness is checked on full assignments. `on_grid` sees
/// every packing found.
///
/// `C > 2` is refused unless `allow_large` is set.
pub fn enumerate_packings(
    colors: ColorCount,
    allow_large: bool,
    mut on_grid: impl FnMut(&PackingGrid),
) -> Result<EnumerationSummary> {
    if colors.get() > 2 && !allow_large {
        return Err(Error::ResourceGuard { colors: colors.get() });
    }
    let n = colors.squared();
    let cells = n * n;
    let tiles: Vec<WangTileId> = WangTileId::all(colors).collect();
    let mut used = vec![false; tiles.len()];
    let mut assign: Vec<usize> = Vec::with_capacity(cells);
    let mut summary = EnumerationSummary {
        colors: colors.get(),
        ..Default::default()
    };
    let mut found: Vec<Vec<EdgeColor>> = Vec::new();

    struct Ctx<'a> {
        colors: ColorCount,
        n: usize,
        tiles: &'a [WangTileId],
    }

    fn fits(ctx: &Ctx, assign: &[usize], t: WangTileId) -> bool {
        let n = ctx.n;
        let k = assign.len();
        let (x, y) = (k % n, k / n);
        let at = |xx: usize, yy: usize| ctx.tiles[assign[yy * n + xx]];
        if x > 0 && at(x - 1, y).e != t.w {
            return false;
        }
        if y > 0 && at(x, y - 1).s != t.n {
            return false;
        }
        if x == n - 1 && x > 0 && at(0, y).w != t.e {
            return false;
        }
        if x == n - 1 && x == 0 && t.w != t.e {
            return false;
        }
        if y == n - 1 && y > 0 && at(x, 0).n != t.s {
            return false;
        }
        if y == n - 1 && y == 0 && t.n != t.s {
            return false;
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn go(
        ctx: &Ctx,
        used: &mut [bool],
        assign: &mut Vec<usize>,
        summary: &mut EnumerationSummary,
        found: &mut Vec<Vec<EdgeColor>>,
        on_grid: &mut dyn FnMut(&PackingGrid),
    ) {
        let n = ctx.n;
        if assign.len() == n * n {
            summary.complete_tilings += 1;
            let h: Vec<EdgeColor> = assign.iter().map(|&i| ctx.tiles[i].n).collect();
            let v: Vec<EdgeColor> = assign.iter().map(|&i| ctx.tiles[i].w).collect();
            let lattice = EdgeLattice::from_arrays(ctx.colors, n, n, h.clone(), v.clone()).expect("sized");
            let comp = lattice.complement().expect("periodic").check_complete().expect("sized");
            if comp.complete {
                summary.labeled += 1;
                let grid = PackingGrid { lattice };
                on_grid(&grid);
                let mut key = h;
                key.extend(v);
                found.push(key);
            }
            return;
        }
        for (i, &t) in ctx.tiles.iter().enumerate() {
            if used[i] || !fits(ctx, assign, t) {
                continue;
            }
            used[i] = true;
            assign.push(i);
            go(ctx, used, assign, summary, found, on_grid);
            assign.pop();
            used[i] = false;
        }
    }

    let ctx = Ctx {
        colors,
        n,
        tiles: &tiles,
    };
    go(&ctx, &mut used, &mut assign, &mut summary, &mut found, &mut on_grid);

    let symmetries = Symmetries::new(colors);
    summary.up_to_translation = symmetries.orbits(&found, false, false);
    summary.up_to_translation_and_colors = symmetries.orbits(&found, false, true);
    summary.up_to_translation_and_dihedral = symmetries.orbits(&found, true, false);
    summary.up_to_all = symmetries.orbits(&found, true, true);
    Ok(summary)
}

/// Symmetries of the packing problem acting on `(H, V)` keys.
struct Symmetries {
    n: usize,
    perms: Vec<Vec<EdgeColor>>,
}

impl Symmetries {
    fn new(colors: ColorCount) -> Self {
        let c = colors.get() as usize;
        let mut perms = Vec::new();
        let mut p: Vec<EdgeColor> = (0..c as EdgeColor).collect();
        permutations(&mut p, 0, &mut perms);
        Symmetries {
            n: colors.squared(),
            perms,
        }
    }

    /// `(transpose, mirror x, mirror y)` applied in that order.
    fn dihedral(&self, key: &[EdgeColor], t: bool, mx: bool, my: bool) -> Vec<EdgeColor> {
        let n = self.n;
        let (h, v) = key.split_at(n * n);
        let (mut h, mut v) = (h.to_vec(), v.to_vec());
        if t {
            let (oh, ov) = (h.clone(), v.clone());
            for y in 0..n {
                for x in 0..n {
                    h[y * n + x] = ov[x * n + y];
                    v[y * n + x] = oh[x * n + y];
                }
            }
        }
        if mx {
            let (oh, ov) = (h.clone(), v.clone());
            for y in 0..n {
                for x in 0..n {
                    h[y * n + x] = oh[y * n + (n - 1 - x)];
                    v[y * n + x] = ov[y * n + (n - x) % n];
                }
            }
        }
        if my {
            let (oh, ov) = (h.clone(), v.clone());
            for y in 0..n {
                for x in 0..n {
                    h[y * n + x] = oh[((n - y) % n) * n + x];
                    v[y * n + x] = ov[(n - 1 - y) * n + x];
                }
            }
        }
        h.extend(v);
        h
    }

    fn translate(&self, key: &[EdgeColor], dx: usize, dy: usize) -> Vec<EdgeColor> {
        let n = self.n;
        let mut out = vec![0; key.len()];
        for plane in 0..2 {
            for y in 0..n {
                for x in 0..n {
                    out[plane * n * n + ((y + dy) % n) * n + (x + dx) % n] = key[plane * n * n + y * n + x];
                }
            }
        }
        out
    }

    fn canonical(&self, key: &[EdgeColor], dihedral: bool, recolor: bool) -> Vec<EdgeColor> {
        let mut best: Option<Vec<EdgeColor>> = None;
        let flips: &[(bool, bool, bool)] = if dihedral {
            &[
                (false, false, false),
                (false, true, false),
                (false, false, true),
                (false, true, true),
                (true, false, false),
                (true, true, false),
                (true, false, true),
                (true, true, true),
            ]
        } else {
            &[(false, false, false)]
        };
        let identity = vec![self.perms[0].clone()];
        let perms = if recolor { &self.perms } else { &identity };
        for &(t, mx, my) in flips {
            let base = self.dihedral(key, t, mx, my);
            for perm in perms {
                let recolored: Vec<EdgeColor> = base.iter().map(|&c| perm[c as usize]).collect();
                for dy in 0..self.n {
                    for dx in 0..self.n {
                        let k = self.translate(&recolored, dx, dy);
                        if best.as_ref().is_none_or(|b| k < *b) {
                            best = Some(k);
                        }
                    }
                }
            }
        }
        best.expect("at least the identity")
    }

    fn orbits(&self, keys: &[Vec<EdgeColor>], dihedral: bool, recolor: bool) -> u64 {
        keys.iter()
            .map(|k| self.canonical(k, dihedral, recolor))
            .collect::<HashSet<_>>()
            .len() as u64
    }
}

fn permutations(p: &mut Vec<EdgeColor>, k: usize, out: &mut Vec<Vec<EdgeColor>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
    if k == 0 {
        out.sort();
    }
}

/// Whether no complete domino string `s` also has all `C²` distance-two
/// pairs `(s(k), s(k+2))` distinct. Such a string would allow a packing with
/// horizontal edges shifted by two per column; the answer is `true` for
/// `C = 2, 3, 4`. For `C = 1` the string `[0]` qualifies trivially and the
/// result is `false`.
///
/// Searches rotations starting with color 0 only. `C > 4` is refused unless
/// `allow_large` is set.
pub fn no_shift2_complete_string(colors: ColorCount, allow_large: bool) -> Result<bool> {
    if colors.get() > 4 && !allow_large {
        return Err(Error::ResourceGuard { colors: colors.get() });
    }
    let c = colors.get() as usize;
    let n = c * c;
    if n == 1 {
        return Ok(false);
    }
    fn go(seq: &mut Vec<usize>, c: usize, n: usize, one: &mut [bool], two: &mut [bool]) -> bool {
        let k = seq.len();
        if k == n {
            let closing_one = [(seq[n - 1], seq[0])];
            let closing_two = [(seq[n - 2], seq[0]), (seq[n - 1], seq[1])];
            let mut o = one.to_vec();
            let mut t = two.to_vec();
            for (a, b) in closing_one {
                if o[a * c + b] {
                    return false;
                }
                o[a * c + b] = true;
            }
            for (a, b) in closing_two {
                if t[a * c + b] {
                    return false;
                }
                t[a * c + b] = true;
            }
            return true;
        }
        for next in 0..c {
            let p1 = seq[k - 1] * c + next;
            if one[p1] {
                continue;
            }
            let p2 = (k >= 2).then(|| seq[k - 2] * c + next);
            if p2.is_some_and(|p| two[p]) {
                continue;
            }
            one[p1] = true;
            if let Some(p) = p2 {
                two[p] = true;
            }
            seq.push(next);
            if go(seq, c, n, one, two) {
                return true;
            }
            seq.pop();
            one[p1] = false;
            if let Some(p) = p2 {
                two[p] = false;
            }
        }
        false
    }
    let mut seq = vec![0];
    let found = go(&mut seq, c, n, &mut vec![false; n], &mut vec![false; n]);
    Ok(!found)
}

/// A uniformly shuffled complete domino string, for tests and experiments.
pub fn random_domino_string(colors: ColorCount, rng: &mut impl Rng) -> DominoString {
    let s = eulerian_domino_string(colors, Some(rng.gen()));
    let k = rng.gen_range(0..s.len());
    s.rotated(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: u32) -> ColorCount {
        ColorCount::new(n).unwrap()
    }

    #[test]
    fn domino_strings_small() {
        assert_eq!(make_domino_string(c(1)).seq, vec![0]);
        assert_eq!(make_domino_string(c(2)).seq, vec![0, 0, 1, 1]);
        assert_eq!(make_domino_string(c(3)).seq, vec![0, 0, 1, 0, 2, 1, 1, 2, 2]);
        for n in 1..=8 {
            assert!(is_complete_domino(&make_domino_string(c(n))), "C={n}");
            assert!(is_complete_domino(&eulerian_domino_string(c(n), None)), "C={n}");
            assert!(is_complete_domino(&eulerian_domino_string(c(n), Some(n as u64))), "C={n}");
        }
    }

    #[test]
    fn completeness_rejects() {
        let s = DominoString::new(c(2), vec![0, 1, 0, 1]).unwrap();
        assert!(!is_complete_domino(&s));
        let short = DominoString::new(c(2), vec![0, 0, 1]).unwrap();
        assert!(!is_complete_domino(&short));
        assert!(DominoString::new(c(2), vec![0, 2, 1, 1]).is_err());
    }

    #[test]
    fn double_domino_constructions() {
        for n in [2, 4, 6, 8] {
            let d = make_double_domino(c(n)).unwrap();
            assert!(double_conditions_hold(&d), "C={n}");
            for k in 0..d.d0.len() {
                assert_eq!(d.d1[k], (d.d0[k].1, d.d0[k].0));
            }
        }
        assert!(matches!(make_double_domino(c(3)), Err(Error::Parity(..))));
    }

    #[test]
    fn search_agrees_with_validator() {
        for n in [2, 4] {
            let d = search_double_domino(c(n)).unwrap().unwrap();
            assert!(double_conditions_hold(&d));
            let u = make_domino_string(c(n));
            let grid = PackingGrid::new(even_lattice(&u, &d).unwrap()).unwrap();
            assert!(validate_packing(&grid).unwrap().valid, "C={n}");
        }
    }

    #[test]
    fn constant_template_fails_everything() {
        let d = DoubleDominoString::from_d0(c(2), vec![(0, 0); 4]);
        assert!(check_double_conditions(&d).iter().all(|r| !r.complete));
    }

    #[test]
    fn broken_reversal_fails() {
        let mut d = make_double_domino(c(2)).unwrap();
        d.d1[1] = d.d0[1];
        if d.d0[1].0 != d.d0[1].1 {
            assert!(check_double_conditions(&d).iter().all(|r| !r.complete));
        }
    }

    #[test]
    fn double_conditions_match_validation_for_c2() {
        // all 16^4 templates d0 for C = 2
        let colors = c(2);
        let u = make_domino_string(colors);
        let pairs: Vec<(u8, u8)> = (0..4).map(|i| ((i / 2) as u8, (i % 2) as u8)).collect();
        let mut valid = 0;
        for code in 0..256usize {
            let d0 = (0..4).map(|k| pairs[(code >> (2 * k)) & 3]).collect();
            let d = DoubleDominoString::from_d0(colors, d0);
            let grid = PackingGrid::new(even_lattice(&u, &d).unwrap()).unwrap();
            let ok = validate_packing(&grid).unwrap().valid;
            let cond = check_double_conditions(&d);
            assert_eq!(ok, cond[0].complete && cond[2].complete, "code {code}");
            assert_eq!(cond[0].complete, cond[1].complete);
            valid += ok as usize;
        }
        assert!(valid > 0);
    }

    #[test]
    fn packings_validate() {
        for n in 1..=5 {
            let g = pack(c(n)).unwrap();
            assert_eq!(g.side(), (n * n) as usize);
            let v = validate_packing(&g).unwrap();
            assert!(v.valid, "C={n}: {} / {}", v.tiling, v.complement);
        }
        assert!(pack_odd(c(2)).is_err());
        assert!(pack_even(c(3)).is_err());
    }

    #[test]
    fn naive_even_signature() {
        for (n, dup) in [(2u32, 8usize), (4, 128)] {
            let l = naive_even_construction(c(n)).unwrap();
            let r = l.check_complete().unwrap();
            assert_eq!(r.duplicated.len(), dup);
            assert!(r.duplicated.iter().all(|&(_, k)| k == 2));
            assert_eq!(r.missing.len(), dup);
            assert!(!l.complement().unwrap().check_complete().unwrap().complete);
        }
    }

    #[test]
    fn perturbed_packing_fails() {
        let g = pack(c(3)).unwrap();
        let mut l = g.lattice.clone();
        let old = l.h(4, 2).unwrap();
        l.set_h(4, 2, (old + 1) % 3).unwrap();
        assert!(!validate_packing(&PackingGrid::new(l).unwrap()).unwrap().valid);
    }

    #[test]
    fn document_round_trip() {
        let g = pack(c(2)).unwrap();
        let text = g.to_json();
        assert!(text.contains("\"H\""));
        assert_eq!(PackingGrid::from_json(&text).unwrap(), g);
    }

    #[test]
    fn enumerate_trivial() {
        let s = enumerate_packings(c(1), false, |_| {}).unwrap();
        assert_eq!(s.labeled, 1);
        assert_eq!(s.up_to_all, 1);
        assert!(matches!(
            enumerate_packings(c(3), false, |_| {}),
            Err(Error::ResourceGuard { colors: 3 })
        ));
    }

    #[test]
    fn shift2_search() {
        assert!(!no_shift2_complete_string(c(1), false).unwrap());
        assert!(no_shift2_complete_string(c(2), false).unwrap());
        assert!(no_shift2_complete_string(c(3), false).unwrap());
        assert!(no_shift2_complete_string(c(5), false).is_err());
    }

    #[test]
    fn symmetries_preserve_validity() {
        let colors = c(2);
        let g = pack(colors).unwrap();
        let sym = Symmetries::new(colors);
        let mut key = g.lattice.h_array().to_vec();
        key.extend(g.lattice.v_array());
        for t in [false, true] {
            for mx in [false, true] {
                for my in [false, true] {
                    let k = sym.translate(&sym.dihedral(&key, t, mx, my), 1, 3);
                    let (h, v) = k.split_at(16);
                    let l = EdgeLattice::from_arrays(colors, 4, 4, h.to_vec(), v.to_vec()).unwrap();
                    assert!(validate_packing(&PackingGrid::new(l).unwrap()).unwrap().valid);
                }
            }
        }
    }
}
