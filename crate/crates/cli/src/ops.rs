//! Operations shared by the command line and the HTTP service.

use std::fs;
use std::path::{Path, PathBuf};

use dualtile::hash::derive_seed;
use dualtile::packing::{pack, validate_packing, PackingGrid, PackingValidation};
use dualtile::pipeline::score::score;
use dualtile::pipeline::{Progress, ProjectConfig, RegenerateReport, ScoreReport, Scorer, TileKey, TileSet};
use dualtile::project::Project;
use dualtile::render::{build_atlas, render_infinite, render_tiling, Atlas, PlaneRegion, Rendering, TileSource, TilingSpec, VariantPolicy};
use dualtile::{Error, Raster, Result};
use serde::Serialize;
use serde_json::Value;

/// What to render: a finite grid of tiles or a window of the infinite plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderTarget {
    Tiles { width: usize, height: usize },
    Region(PlaneRegion),
}

/// Generates the project's tile set into its tileset directory, resuming
/// from any compatible tiles already there.
pub fn generate(project: &Project, progress: &Progress) -> Result<TileSet> {
    let engine = project.engine()?;
    let dir = project.tileset_path();
    engine.generate_into(&dir, progress)
}

#[derive(Clone, Debug, Serialize)]
pub struct Regenerated {
    pub id: TileKey,
    pub seed: u64,
    #[serde(flatten)]
    pub report: RegenerateReport,
}

pub fn parse_tile_id(id: &str) -> Result<TileKey> {
    id.parse().map_err(|_| Error::UnknownTile(id.to_string()))
}

/// The seed used when a regeneration does not name one: derived from the
/// tile's current base seed, so repeated calls keep producing new textures.
pub fn fresh_seed(set: &TileSet, key: TileKey) -> u64 {
    let base = set.get(key, 0).map_or(set.master_seed, |t| t.base_seed);
    derive_seed(base, &["regenerate", &key.to_string()])
}

/// Regenerates one tile of the saved set and writes the result back.
pub fn regenerate(project: &Project, id: &str, seed: Option<u64>, defer: bool) -> Result<Regenerated> {
    let key = parse_tile_id(id)?;
    let dir = project.tileset_path();
    let mut set = TileSet::load(&dir)?;
    if !set.contains(key) {
        return Err(Error::UnknownTile(id.to_string()));
    }
    let seed = seed.unwrap_or_else(|| fresh_seed(&set, key));
    let engine = project.engine()?;
    let report = engine.regenerate(&mut set, key, seed, defer)?;
    set.save(&dir)?;
    Ok(Regenerated { id: key, seed, report })
}

/// Renders the saved set, or synthesizes tiles on demand from the project's
/// patches.
pub fn render(project: &Project, target: RenderTarget, seed: u64, on_demand: bool) -> Result<Rendering> {
    if on_demand {
        let engine = project.engine()?;
        let region = match target {
            RenderTarget::Tiles { width, height } => {
                let r = engine.config().tile_size;
                PlaneRegion::new(0, 0, width * r, height * r)
            }
            RenderTarget::Region(r) => r,
        };
        return render_infinite(&TileSource::OnDemand(&engine), region, seed, VariantPolicy::Random);
    }
    let set = project.load_tileset()?;
    match target {
        RenderTarget::Tiles { width, height } => render_tiling(
            &set,
            &TilingSpec {
                width,
                height,
                seed,
                variants: VariantPolicy::Random,
            },
        ),
        RenderTarget::Region(region) => render_infinite(&TileSource::Set(&set), region, seed, VariantPolicy::Random),
    }
}

/// A `width × height` preview of the saved set as PNG bytes.
pub fn preview(project: &Project, width: usize, height: usize, seed: u64) -> Result<Vec<u8>> {
    Ok(render(project, RenderTarget::Tiles { width, height }, seed, false)?.image.to_png_bytes())
}

/// Builds the packing atlas of the saved Dual set and writes it to `out`
/// together with its layout (`out` with a `.json` extension).
pub fn atlas(project: &Project, out: &Path) -> Result<(Atlas, PathBuf)> {
    let set = project.load_tileset()?;
    let grid = pack(set.colors)?;
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let atlas = build_atlas(&set, &grid, &name)?;
    atlas.image.save_png(out)?;
    let layout = out.with_extension("json");
    write(&layout, serde_json::to_string_pretty(&atlas.layout)? + "\n")?;
    Ok((atlas, layout))
}

/// Scores every tile variant of a saved set. Seam energy compares tiles with
/// their boundary canvases, which are rebuilt from `project`.
pub fn score_tileset(dir: &Path, scorer: Scorer, project: Option<&Project>) -> Result<ScoreReport> {
    let set = TileSet::load(dir)?;
    let engine = match (scorer, project) {
        (Scorer::SeamEnergy, Some(p)) => Some(p.engine()?),
        (Scorer::SeamEnergy, None) => {
            return Err(Error::Config("seam_energy needs the project (--config) to rebuild tile canvases".into()))
        }
        _ => None,
    };
    let mut tiles = Vec::new();
    for (&key, list) in &set.tiles {
        for t in list {
            let ctx = match &engine {
                Some(e) => {
                    let canvas = e.canvas(&set, key, t.variant)?;
                    let mut inpainted = canvas.pixels.clone();
                    let s = canvas.size();
                    for y in 0..s {
                        for x in 0..s {
                            if canvas.retained.get(x, y) {
                                let (i, j) = canvas.tile_coords(x, y);
                                inpainted.set(x, y, t.pixels.get(i, j));
                            }
                        }
                    }
                    Some((canvas, inpainted))
                }
                None => None,
            };
            tiles.push((t.image(), ctx));
        }
    }
    score(scorer, &tiles, project.map(|p| p.config().orientation()))
}

pub fn load_packing(path: &Path) -> Result<PackingGrid> {
    PackingGrid::from_json(&read(path)?)
}

pub fn check_packing(path: &Path) -> Result<PackingValidation> {
    validate_packing(&load_packing(path)?)
}

/// Applies a JSON merge patch to the project's configuration, validates the
/// result and saves the project file.
pub fn update_config(project: &mut Project, patch: Value) -> Result<()> {
    if !patch.is_object() {
        return Err(Error::Config("project update must be a JSON object".into()));
    }
    let mut value = serde_json::to_value(project.config())?;
    merge(&mut value, patch);
    let config: ProjectConfig = serde_json::from_value(value)?;
    config.validate()?;
    let mut next = project.clone();
    next.file.project = config;
    if !next.exemplar_path().is_file() {
        return Err(Error::Missing(format!("exemplar {}", next.exemplar_path().display())));
    }
    next.save()?;
    *project = next;
    Ok(())
}

fn merge(target: &mut Value, patch: Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(&k);
                } else {
                    merge(t.entry(k).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p,
    }
}

pub fn exemplar_png(project: &Project) -> Result<Vec<u8>> {
    Ok(Raster::load(project.exemplar_path())?.to_png_bytes())
}

/// PNG bytes of one stored tile variant.
pub fn tile_png(project: &Project, id: &str, variant: usize) -> Result<Vec<u8>> {
    let key = parse_tile_id(id)?;
    let set = project.load_tileset()?;
    let t = set.get(key, variant).ok_or_else(|| Error::UnknownTile(format!("{id} variant {variant}")))?;
    Ok(t.pixels.to_png_bytes())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
