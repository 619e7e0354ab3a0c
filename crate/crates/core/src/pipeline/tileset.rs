use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{cross_mask, interior_mask, PatchLibrary, Region, Stage1Key, TileImage};
use crate::error::{Error, IoContext, Result};
use crate::lattice::{ColorCount, CornerTileId, CrossTileId, InteriorTileId, WangTileId};
use crate::pipeline::config::Scheme;
use crate::raster::{Mask, Raster};

/// Identity of a generated texture. Text forms are URL-safe:
/// `tile`, `wang_0-1-2-0`, `corner_…`, `interior_…`, `cross_…`,
/// `stage1_ne-0-1` and `stage1_wang-0-1-0-0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TileKey {
    Single,
    Wang(WangTileId),
    Corner(CornerTileId),
    Interior(InteriorTileId),
    Cross(CrossTileId),
    Stage1(Stage1Key),
    /// A full-set first-stage Wang tile.
    Stage1Full(WangTileId),
}

impl TileKey {
    pub fn is_stage1(self) -> bool {
        matches!(self, TileKey::Stage1(_) | TileKey::Stage1Full(_))
    }

    pub fn region(self) -> Region {
        match self {
            TileKey::Corner(_) => Region::Corner,
            TileKey::Interior(_) => Region::Interior,
            TileKey::Cross(_) => Region::Cross,
            _ => Region::Square,
        }
    }

    /// The ids a complete set of `scheme` holds.
    pub fn all(scheme: Scheme, colors: ColorCount) -> Vec<TileKey> {
        match scheme {
            Scheme::SelfTiling | Scheme::Stochastic | Scheme::Escher => vec![TileKey::Single],
            Scheme::Wang => WangTileId::all(colors).map(TileKey::Wang).collect(),
            Scheme::Corner => CornerTileId::all(colors).map(TileKey::Corner).collect(),
            Scheme::Dual => WangTileId::all(colors)
                .map(TileKey::Interior)
                .chain(CrossTileId::all(colors).map(TileKey::Cross))
                .collect(),
        }
    }

    /// Whether the key names a tile of `scheme`.
    pub fn belongs_to(self, scheme: Scheme) -> bool {
        match self {
            TileKey::Single => scheme.is_single(),
            TileKey::Wang(_) => scheme == Scheme::Wang,
            TileKey::Corner(_) => scheme == Scheme::Corner,
            TileKey::Interior(_) | TileKey::Cross(_) | TileKey::Stage1(_) | TileKey::Stage1Full(_) => {
                scheme == Scheme::Dual
            }
        }
    }
}

impl fmt::Display for TileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileKey::Single => f.write_str("tile"),
            TileKey::Wang(id) => write!(f, "wang_{id}"),
            TileKey::Corner(id) => write!(f, "corner_{id}"),
            TileKey::Interior(id) => write!(f, "interior_{id}"),
            TileKey::Cross(id) => write!(f, "cross_{id}"),
            TileKey::Stage1(k) => write!(f, "stage1_{k}"),
            TileKey::Stage1Full(id) => write!(f, "stage1_wang-{id}"),
        }
    }
}

impl FromStr for TileKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "tile" {
            return Ok(TileKey::Single);
        }
        let bad = || Error::UnknownTile(s.to_string());
        let (kind, rest) = s.split_once('_').ok_or_else(bad)?;
        let key = match kind {
            "wang" => TileKey::Wang(rest.parse()?),
            "corner" => TileKey::Corner(rest.parse()?),
            "interior" => TileKey::Interior(rest.parse()?),
            "cross" => TileKey::Cross(rest.parse()?),
            "stage1" => match rest.strip_prefix("wang-") {
                Some(id) => TileKey::Stage1Full(id.parse()?),
                None => TileKey::Stage1(rest.parse()?),
            },
            _ => return Err(bad()),
        };
        Ok(key)
    }
}

impl Serialize for TileKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TileKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Texels of an `R × R` tile that belong to it.
pub fn validity_mask(region: Region, tile_size: usize) -> Mask {
    match region {
        Region::Interior => interior_mask(tile_size),
        Region::Cross => cross_mask(tile_size),
        Region::Square | Region::Corner => Mask::filled(tile_size, tile_size, true),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TileTexture {
    pub key: TileKey,
    pub variant: usize,
    pub pixels: Raster,
    pub valid: Mask,
    /// Seed of the chosen candidate.
    pub seed: u64,
    /// Seed the candidate seeds were derived from.
    pub base_seed: u64,
    pub score: Option<f64>,
    pub canvas_hash: String,
    /// Hash of everything besides the canvas that determined the texture.
    pub fingerprint: String,
    pub backend: String,
    /// An upstream tile changed after this one was made.
    pub stale: bool,
}

impl TileTexture {
    pub fn image(&self) -> TileImage {
        TileImage {
            pixels: self.pixels.clone(),
            valid: self.valid.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Canvases synthesized (one per tile variant, whatever `K` is).
    pub inpaints: usize,
    /// Individual backend invocations, `K` per canvas.
    pub backend_calls: usize,
    /// Canvases taken from an earlier run instead of being synthesized.
    pub resumed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TileSet {
    pub scheme: Scheme,
    pub colors: ColorCount,
    pub tile_size: usize,
    pub master_seed: u64,
    pub library: PatchLibrary,
    pub tiles: BTreeMap<TileKey, Vec<TileTexture>>,
    /// Dual first-stage results; `pixels` holds the whole inpainted canvas.
    pub stage1: BTreeMap<TileKey, TileTexture>,
    pub counters: Counters,
}

impl TileSet {
    pub fn new(scheme: Scheme, colors: ColorCount, tile_size: usize, master_seed: u64, library: PatchLibrary) -> Self {
        TileSet {
            scheme,
            colors,
            tile_size,
            master_seed,
            library,
            tiles: BTreeMap::new(),
            stage1: BTreeMap::new(),
            counters: Counters::default(),
        }
    }

    pub fn get(&self, key: TileKey, variant: usize) -> Option<&TileTexture> {
        if key.is_stage1() {
            return (variant == 0).then(|| self.stage1.get(&key)).flatten();
        }
        self.tiles.get(&key).and_then(|v| v.get(variant))
    }

    pub fn variants(&self, key: TileKey) -> usize {
        self.tiles.get(&key).map_or(0, Vec::len)
    }

    pub fn insert(&mut self, t: TileTexture) {
        if t.key.is_stage1() {
            self.stage1.insert(t.key, t);
            return;
        }
        let list = self.tiles.entry(t.key).or_default();
        let v = t.variant;
        if v < list.len() {
            list[v] = t;
        } else {
            list.push(t);
        }
    }

    pub fn contains(&self, key: TileKey) -> bool {
        self.stage1.contains_key(&key) || self.tiles.contains_key(&key)
    }

    /// Every id the scheme requires is present.
    pub fn is_complete(&self) -> bool {
        TileKey::all(self.scheme, self.colors)
            .iter()
            .all(|k| self.tiles.get(k).is_some_and(|v| !v.is_empty()))
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn manifest(&self) -> Manifest {
        let entry = |t: &TileTexture| ManifestEntry {
            id: t.key,
            variant: t.variant,
            file: file_name(t.key, t.variant),
            seed: t.seed,
            base_seed: t.base_seed,
            score: t.score,
            canvas_hash: t.canvas_hash.clone(),
            fingerprint: t.fingerprint.clone(),
            backend: t.backend.clone(),
            stale: t.stale,
        };
        Manifest {
            version: MANIFEST_VERSION,
            scheme: self.scheme,
            colors: self.colors,
            tile_size: self.tile_size,
            master_seed: self.master_seed,
            library: self.library.clone(),
            counters: self.counters,
            entries: self.tiles.values().flatten().map(entry).collect(),
            stage1: self.stage1.values().map(entry).collect(),
        }
    }

    /// Writes `manifest.json` and every texture not yet on disk with the
    /// same content.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("tiles")).at(dir)?;
        if !self.stage1.is_empty() {
            fs::create_dir_all(dir.join("stage1")).at(dir)?;
        }
        for t in self.tiles.values().flatten().chain(self.stage1.values()) {
            write_texture(dir, t)?;
        }
        self.write_manifest(dir)
    }

    pub fn write_manifest(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest())?;
        let tmp = dir.join("manifest.json.tmp");
        fs::write(&tmp, json).at(&tmp)?;
        fs::rename(&tmp, &path).at(&path)
    }

    pub fn load(dir: &Path) -> Result<TileSet> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).at(&path)?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config(format!("unsupported manifest version {}", m.version)));
        }
        let mut set = TileSet::new(m.scheme, m.colors, m.tile_size, m.master_seed, m.library);
        set.counters = m.counters;
        for e in m.entries.into_iter().chain(m.stage1) {
            let pixels = Raster::load(dir.join(&e.file))?;
            let valid = if e.id.is_stage1() {
                Mask::filled(pixels.width(), pixels.height(), true)
            } else {
                if pixels.dims() != (m.tile_size, m.tile_size) {
                    return Err(Error::SizeMismatch {
                        expected: (m.tile_size, m.tile_size),
                        actual: pixels.dims(),
                    });
                }
                validity_mask(e.id.region(), m.tile_size)
            };
            set.insert(TileTexture {
                key: e.id,
                variant: e.variant,
                pixels,
                valid,
                seed: e.seed,
                base_seed: e.base_seed,
                score: e.score,
                canvas_hash: e.canvas_hash,
                fingerprint: e.fingerprint,
                backend: e.backend,
                stale: e.stale,
            });
        }
        Ok(set)
    }
}

pub(crate) fn write_texture(dir: &Path, t: &TileTexture) -> Result<()> {
    let path = dir.join(file_name(t.key, t.variant));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    let bytes = t.pixels.to_png_bytes();
    if fs::read(&path).ok().as_deref() == Some(&bytes[..]) {
        return Ok(());
    }
    fs::write(&path, bytes).at(&path)
}

pub fn file_name(key: TileKey, variant: usize) -> String {
    let dir = if key.is_stage1() { "stage1" } else { "tiles" };
    format!("{dir}/{key}.v{variant}.png")
}

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: TileKey,
    pub variant: usize,
    pub file: String,
    pub seed: u64,
    pub base_seed: u64,
    pub score: Option<f64>,
    pub canvas_hash: String,
    pub fingerprint: String,
    pub backend: String,
    #[serde(default)]
    pub stale: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scheme: Scheme,
    pub colors: ColorCount,
    pub tile_size: usize,
    pub master_seed: u64,
    pub library: PatchLibrary,
    pub counters: Counters,
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub stage1: Vec<ManifestEntry>,
}
