//! Tile-set generation: patch selection, per-scheme canvas orchestration,
//! candidate selection, regeneration and persistence.

pub mod config;
pub mod score;
pub mod select;
pub mod tileset;

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::boundary::{
    assemble_corner, assemble_cross, assemble_interior, assemble_wang, crop_result, cross_neighbours, extend_margin,
    BoundaryCanvas, PatchLibrary, PreparedPatches, Stage1Key, Stage1Source, TileImage,
};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::inpaint::{Backend, InpaintRequest, Inpainter};
use crate::lattice::{CrossTileId, WangTileId};
use crate::raster::{hex, Raster};

pub use config::{check_library, PatchStrategy, ProjectConfig, Scheme};
pub use score::{diversity, seam_energy, total_variation, Orientation, ScoreReport, Scorer};
pub use select::select_patches;
pub use tileset::{validity_mask, Counters, Manifest, ManifestEntry, TileKey, TileSet, TileTexture};

/// Box-filters the exemplar and checks it still holds a tile.
pub fn downsample_exemplar(exemplar: &Raster, factor: usize, tile_size: usize) -> Result<Raster> {
    let out = exemplar.downsample(factor)?;
    if out.width() < tile_size || out.height() < tile_size {
        return Err(Error::Geometry(format!(
            "downsampling by {factor} leaves {}x{}, smaller than the {tile_size}x{tile_size} tile",
            out.width(),
            out.height()
        )));
    }
    Ok(out)
}

/// Shared generation progress, readable while a job runs.
#[derive(Debug, Default)]
pub struct Progress {
    state: Mutex<ProgressState>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProgressState {
    pub stage: String,
    pub done: usize,
    pub total: usize,
}

impl Progress {
    pub fn snapshot(&self) -> ProgressState {
        self.state.lock().unwrap().clone()
    }

    fn start(&self, stage: &str, total: usize) {
        *self.state.lock().unwrap() = ProgressState {
            stage: stage.to_string(),
            done: 0,
            total,
        };
    }

    fn tick(&self) {
        self.state.lock().unwrap().done += 1;
    }

    pub fn finish(&self, stage: &str) {
        let mut s = self.state.lock().unwrap();
        s.stage = stage.to_string();
        s.done = s.total;
    }
}

/// Candidate-selection settings shared by every tile of a run.
#[derive(Clone, Debug)]
pub struct CandidateSettings {
    pub scorer: Scorer,
    pub orientation: Orientation,
    pub latent_margin: usize,
    pub prompt: String,
    pub negative_prompt: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub seed: u64,
    pub score: f64,
    pub inpainted: Raster,
    pub tile: TileImage,
    /// Backend invocations spent, including failed ones.
    pub calls: usize,
}

/// Inpaints `canvas` once per seed and keeps the best candidate under the
/// scorer's orientation; ties go to the lowest seed. Failed attempts are
/// skipped unless every attempt fails.
pub fn generate_candidates(
    seeds: &[u64],
    canvas: &BoundaryCanvas,
    settings: &CandidateSettings,
    backend: &dyn Inpainter,
) -> Result<Candidate> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one candidate is required".into()));
    }
    let input = extend_margin(canvas, settings.latent_margin)?;
    let mut best: Option<Candidate> = None;
    let mut last_err = None;
    for &seed in seeds {
        let mut req = InpaintRequest::new(input.pixels.clone(), input.mask.clone(), seed).with_prompt(settings.prompt.clone());
        req.negative_prompt = settings.negative_prompt.clone();
        let inpainted = match backend.inpaint(&req) {
            Ok(r) => r.quantized(),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut inpainted = inpainted;
        // boundary texels stay exactly as assembled, margin copies included
        for (i, t) in inpainted.data_mut().iter_mut().enumerate() {
            if !canvas.mask.bits()[i] {
                *t = canvas.pixels.data()[i];
            }
        }
        let tile = crop_result(canvas, &inpainted)?;
        let score = match settings.scorer {
            Scorer::SeamEnergy => seam_energy(canvas, &inpainted),
            Scorer::TotalVariation => total_variation(&tile),
            Scorer::Diversity => return Err(Error::Config("diversity ranks tile lists, not candidates".into())),
        };
        let replace = match &best {
            None => true,
            Some(b) => {
                settings.orientation.better(score, b.score) || (score == b.score && seed < b.seed)
            }
        };
        if replace {
            best = Some(Candidate {
                seed,
                score,
                inpainted,
                tile,
                calls: 0,
            });
        }
    }
    match best {
        Some(mut b) => {
            b.calls = seeds.len();
            Ok(b)
        }
        None => Err(last_err.unwrap()),
    }
}

/// Canvas-level seed for candidate `k` of a tile variant.
pub fn candidate_seed(base_seed: u64, scheme: Scheme, key: TileKey, variant: usize, k: usize) -> u64 {
    derive_seed(
        base_seed,
        &[scheme.name(), &key.to_string(), &variant.to_string(), &k.to_string()],
    )
}

struct Stage1View<'a> {
    set: &'a TileSet,
    full: bool,
}

impl Stage1Source for Stage1View<'_> {
    fn stage1(&self, key: Stage1Key) -> Option<&Raster> {
        let k = if self.full {
            TileKey::Stage1Full(key.wang_id())
        } else {
            TileKey::Stage1(key)
        };
        self.set.stage1.get(&k).map(|t| &t.pixels)
    }
}

enum Outcome {
    Made(TileTexture, usize),
    Resumed(TileTexture),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegenerateReport {
    pub regenerated: Vec<TileKey>,
    /// Dependents left stale because regeneration was deferred.
    pub stale: Vec<TileKey>,
}

/// A configured generator: the exemplar, its patch library and a backend.
pub struct Engine {
    config: ProjectConfig,
    exemplar: Arc<Raster>,
    library: PatchLibrary,
    patches: PreparedPatches,
    backend: Arc<dyn Inpainter>,
    backend_name: String,
    fingerprint: String,
}

impl Engine {
    /// Downsamples and quantizes the exemplar, selects patches and builds
    /// the configured backend.
    pub fn new(config: ProjectConfig, exemplar: &Raster) -> Result<Engine> {
        config.validate()?;
        let ex = Arc::new(downsample_exemplar(exemplar, config.downsample, config.tile_size)?.quantized());
        let backend = Backend::new(config.backend.clone(), Some(ex.clone()))?;
        let name = config.backend.kind.to_string();
        Self::assemble(config, ex, Arc::new(backend), name)
    }

    /// As [`Engine::new`] with a caller-supplied inpainter.
    pub fn with_backend(
        config: ProjectConfig,
        exemplar: &Raster,
        backend: Arc<dyn Inpainter>,
        backend_name: impl Into<String>,
    ) -> Result<Engine> {
        config.validate()?;
        let ex = Arc::new(downsample_exemplar(exemplar, config.downsample, config.tile_size)?.quantized());
        Self::assemble(config, ex, backend, backend_name.into())
    }

    fn assemble(config: ProjectConfig, exemplar: Arc<Raster>, backend: Arc<dyn Inpainter>, backend_name: String) -> Result<Engine> {
        let library = select_patches(&config.patches, &exemplar, &config, config.seed)?;
        let patches = library.prepare(&exemplar)?;
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&config.backend)?);
        h.update(backend_name.as_bytes());
        h.update(
            serde_json::to_vec(&(
                config.candidates,
                config.scorer,
                config.orientation(),
                config.latent_margin,
                &config.prompt,
                &config.negative_prompt,
            ))?,
        );
        let fingerprint = hex(&h.finalize())[..16].to_string();
        Ok(Engine {
            config,
            exemplar,
            library,
            patches,
            backend,
            backend_name,
            fingerprint,
        })
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn exemplar(&self) -> &Raster {
        &self.exemplar
    }

    pub fn library(&self) -> &PatchLibrary {
        &self.library
    }

    pub fn patches(&self) -> &PreparedPatches {
        &self.patches
    }

    pub fn backend(&self) -> &dyn Inpainter {
        self.backend.as_ref()
    }

    fn settings(&self) -> CandidateSettings {
        CandidateSettings {
            scorer: self.config.scorer,
            orientation: self.config.orientation(),
            latent_margin: self.config.latent_margin,
            prompt: self.config.prompt.clone(),
            negative_prompt: self.config.negative_prompt.clone(),
        }
    }

    pub fn empty_set(&self) -> TileSet {
        TileSet::new(
            self.config.scheme,
            self.config.tileset_colors(),
            self.config.tile_size,
            self.config.seed,
            self.library.clone(),
        )
    }

    /// The boundary canvas of a tile variant. Dual interiors read the
    /// first-stage results of `set`; crosses read its interiors of the same
    /// variant.
    pub fn canvas(&self, set: &TileSet, key: TileKey, variant: usize) -> Result<BoundaryCanvas> {
        if !key.belongs_to(self.config.scheme) {
            return Err(Error::UnknownTile(key.to_string()));
        }
        let r = self.config.tile_size;
        match key {
            TileKey::Single => assemble_wang(WangTileId::new(0, 0, 0, 0), &self.patches),
            TileKey::Wang(id) | TileKey::Stage1Full(id) => assemble_wang(id.validate(set.colors)?, &self.patches),
            TileKey::Stage1(k) => assemble_wang(k.wang_id().validate(set.colors)?, &self.patches),
            TileKey::Corner(id) => assemble_corner(id.validate(set.colors)?, &self.patches),
            TileKey::Interior(id) => assemble_interior(
                id.validate(set.colors)?,
                r,
                &Stage1View {
                    set,
                    full: self.config.dual_full_stage1,
                },
            ),
            TileKey::Cross(id) => assemble_cross(id.validate(set.colors)?, r, |i| {
                set.get(TileKey::Interior(i), variant)
                    .or_else(|| set.get(TileKey::Interior(i), 0))
                    .map(TileTexture::image)
            }),
        }
    }

    /// Synthesizes one tile variant from its canvas.
    pub fn synthesize(&self, key: TileKey, variant: usize, canvas: &BoundaryCanvas, base_seed: u64) -> Result<(TileTexture, usize)> {
        let seeds: Vec<u64> = (0..self.config.candidates)
            .map(|k| candidate_seed(base_seed, self.config.scheme, key, variant, k))
            .collect();
        let c = generate_candidates(&seeds, canvas, &self.settings(), self.backend.as_ref())?;
        let (pixels, valid) = if key.is_stage1() {
            let s = c.inpainted.width();
            (c.inpainted, crate::raster::Mask::filled(s, s, true))
        } else {
            (c.tile.pixels, c.tile.valid)
        };
        let t = TileTexture {
            key,
            variant,
            pixels,
            valid,
            seed: c.seed,
            base_seed,
            score: Some(c.score),
            canvas_hash: canvas.digest(),
            fingerprint: self.fingerprint.clone(),
            backend: self.backend_name.clone(),
            stale: false,
        };
        Ok((t, c.calls))
    }

    /// The stages of the configured scheme, each a list of (key, variant)
    /// jobs. Dual has three; every other scheme one.
    pub fn stages(&self) -> Vec<(&'static str, Vec<(TileKey, usize)>)> {
        let colors = self.config.tileset_colors();
        let variants = self.config.variants();
        let expand = |keys: Vec<TileKey>, n: usize| -> Vec<(TileKey, usize)> {
            keys.into_iter().flat_map(|k| (0..n).map(move |v| (k, v))).collect()
        };
        match self.config.scheme {
            Scheme::Dual => {
                let stage1: Vec<TileKey> = if self.config.dual_full_stage1 {
                    WangTileId::all(colors).map(TileKey::Stage1Full).collect()
                } else {
                    Stage1Key::all(colors).into_iter().map(TileKey::Stage1).collect()
                };
                vec![
                    ("stage1", expand(stage1, 1)),
                    ("interiors", expand(WangTileId::all(colors).map(TileKey::Interior).collect(), variants)),
                    ("crosses", expand(CrossTileId::all(colors).map(TileKey::Cross).collect(), variants)),
                ]
            }
            scheme => vec![("tiles", expand(TileKey::all(scheme, colors), variants))],
        }
    }

    pub fn generate(&self, progress: &Progress) -> Result<TileSet> {
        self.run(None, progress)
    }

    /// Generates into `dir`, reusing textures of an earlier (possibly
    /// interrupted) run whose canvas, seed and settings still match, and
    /// persisting each stage as it completes.
    pub fn generate_into(&self, dir: &Path, progress: &Progress) -> Result<TileSet> {
        self.run(Some(dir), progress)
    }

    fn run(&self, dir: Option<&Path>, progress: &Progress) -> Result<TileSet> {
        let previous = dir
            .filter(|d| d.join("manifest.json").exists())
            .and_then(|d| TileSet::load(d).ok())
            .filter(|p| p.scheme == self.config.scheme && p.tile_size == self.config.tile_size);
        let mut set = self.empty_set();
        for (name, jobs) in self.stages() {
            let base = self.config.seed;
            self.run_stage(&mut set, name, &jobs, |_, _| base, previous.as_ref(), dir, progress)?;
        }
        progress.finish("done");
        Ok(set)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_stage(
        &self,
        set: &mut TileSet,
        name: &str,
        jobs: &[(TileKey, usize)],
        base_seed: impl Fn(TileKey, usize) -> u64 + Sync,
        previous: Option<&TileSet>,
        dir: Option<&Path>,
        progress: &Progress,
    ) -> Result<()> {
        progress.start(name, jobs.len());
        let view: &TileSet = set;
        let results: Vec<Result<Outcome>> = jobs
            .par_iter()
            .map(|&(key, variant)| {
                let canvas = self.canvas(view, key, variant)?;
                let base = base_seed(key, variant);
                if let Some(old) = previous.and_then(|p| p.get(key, variant)) {
                    if old.base_seed == base
                        && old.canvas_hash == canvas.digest()
                        && old.fingerprint == self.fingerprint
                        && !old.stale
                    {
                        progress.tick();
                        return Ok(Outcome::Resumed(old.clone()));
                    }
                }
                let out = self.synthesize(key, variant, &canvas, base);
                progress.tick();
                out.map(|(t, calls)| Outcome::Made(t, calls))
            })
            .collect();
        let mut first_err = None;
        for r in results {
            match r {
                Ok(Outcome::Made(t, calls)) => {
                    set.counters.inpaints += 1;
                    set.counters.backend_calls += calls;
                    if let Some(d) = dir {
                        tileset::write_texture(d, &t)?;
                    }
                    set.insert(t);
                }
                Ok(Outcome::Resumed(t)) => {
                    set.counters.resumed += 1;
                    if let Some(d) = dir {
                        tileset::write_texture(d, &t)?;
                    }
                    set.insert(t);
                }
                Err(e) => {
                    log::warn!("tile generation failed: {e}");
                    first_err.get_or_insert(e);
                }
            }
        }
        if let Some(d) = dir {
            set.write_manifest(d)?;
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Tiles whose canvases read `key` directly.
    pub fn direct_dependents(&self, set: &TileSet, key: TileKey) -> Vec<TileKey> {
        let interiors = || set.tiles.keys().filter_map(|k| match k {
            TileKey::Interior(id) => Some(*id),
            _ => None,
        });
        match key {
            TileKey::Stage1(s) => interiors()
                .filter(|&i| Stage1Key::for_interior(i).contains(&s))
                .map(TileKey::Interior)
                .collect(),
            TileKey::Stage1Full(w) => interiors()
                .filter(|&i| Stage1Key::for_interior(i).iter().any(|k| k.wang_id() == w))
                .map(TileKey::Interior)
                .collect(),
            TileKey::Interior(i) => set
                .tiles
                .keys()
                .filter(|k| matches!(k, TileKey::Cross(c) if cross_neighbours(*c).contains(&i)))
                .copied()
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Every tile downstream of `key`, interiors before crosses.
    pub fn dependents(&self, set: &TileSet, key: TileKey) -> Vec<TileKey> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([key]);
        while let Some(k) = queue.pop_front() {
            for d in self.direct_dependents(set, k) {
                if seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Re-synthesizes every variant of `key` from its reassembled canvas with
    /// candidate seeds derived from `new_seed`. Dependent tiles are
    /// regenerated with their own seeds, or only flagged stale when `defer`
    /// is set.
    pub fn regenerate(&self, set: &mut TileSet, key: TileKey, new_seed: u64, defer: bool) -> Result<RegenerateReport> {
        if !set.contains(key) {
            return Err(Error::UnknownTile(key.to_string()));
        }
        let variants = if key.is_stage1() { 1 } else { set.variants(key) };
        let jobs: Vec<(TileKey, usize)> = (0..variants).map(|v| (key, v)).collect();
        let progress = Progress::default();
        self.run_stage(set, "regenerate", &jobs, |_, _| new_seed, None, None, &progress)?;
        let mut report = RegenerateReport {
            regenerated: vec![key],
            stale: Vec::new(),
        };
        let deps = self.dependents(set, key);
        if defer {
            for d in &deps {
                if let Some(list) = set.tiles.get_mut(d) {
                    list.iter_mut().for_each(|t| t.stale = true);
                }
            }
            report.stale = deps;
            return Ok(report);
        }
        for group in [
            deps.iter().filter(|k| matches!(k, TileKey::Interior(_))).copied().collect::<Vec<_>>(),
            deps.iter().filter(|k| matches!(k, TileKey::Cross(_))).copied().collect(),
        ] {
            let jobs: Vec<(TileKey, usize)> = group
                .iter()
                .flat_map(|&k| (0..set.variants(k)).map(move |v| (k, v)))
                .collect();
            let bases: std::collections::BTreeMap<(TileKey, usize), u64> =
                jobs.iter().map(|&(k, v)| ((k, v), set.get(k, v).unwrap().base_seed)).collect();
            self.run_stage(set, "regenerate", &jobs, |k, v| bases[&(k, v)], None, None, &progress)?;
            report.regenerated.extend(group);
        }
        Ok(report)
    }
}

/// Builds an engine for `config` and generates the whole set in memory.
pub fn generate_tileset(config: &ProjectConfig, exemplar: &Raster) -> Result<TileSet> {
    Engine::new(config.clone(), exemplar)?.generate(&Progress::default())
}

/// Regenerates one tile (and its dependents) of a set made by `engine`.
pub fn regenerate_tile(engine: &Engine, set: &mut TileSet, key: TileKey, new_seed: u64) -> Result<RegenerateReport> {
    engine.regenerate(set, key, new_seed, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ColorCount;

    struct Flat;
    impl Inpainter for Flat {
        fn inpaint(&self, req: &InpaintRequest) -> Result<Raster> {
            let v = (req.seed % 7) as f32 / 7.0;
            Ok(Raster::filled(req.image.width(), req.image.height(), [v; 3]))
        }
    }

    struct Failing;
    impl Inpainter for Failing {
        fn inpaint(&self, _: &InpaintRequest) -> Result<Raster> {
            Err(Error::Remote("down".into()))
        }
    }

    fn settings(scorer: Scorer) -> CandidateSettings {
        CandidateSettings {
            scorer,
            orientation: Orientation::LowerBetter,
            latent_margin: 0,
            prompt: String::new(),
            negative_prompt: None,
        }
    }

    fn canvas() -> BoundaryCanvas {
        let ex = Raster::from_fn(16, 16, |x, y| [x as f32 / 16.0, y as f32 / 16.0, 0.5]).quantized();
        let mut lib = PatchLibrary::new(8);
        lib.horizontal.push(crate::boundary::TemplatePatch {
            x: 0,
            y: 0,
            size: 8,
            axis: crate::boundary::PatchAxis::Horizontal,
            color: 0,
        });
        lib.vertical.push(crate::boundary::TemplatePatch {
            x: 4,
            y: 4,
            size: 8,
            axis: crate::boundary::PatchAxis::Vertical,
            color: 0,
        });
        assemble_wang(WangTileId::new(0, 0, 0, 0), &lib.prepare(&ex).unwrap()).unwrap()
    }

    #[test]
    fn constant_scorer_takes_lowest_seed() {
        let c = canvas();
        let best = generate_candidates(&[30, 9, 16], &c, &settings(Scorer::TotalVariation), &Flat).unwrap();
        assert_eq!(best.seed, 9);
        assert_eq!(best.calls, 3);
    }

    #[test]
    fn all_candidates_failing_is_an_error() {
        assert!(generate_candidates(&[1, 2], &canvas(), &settings(Scorer::SeamEnergy), &Failing).is_err());
        assert!(generate_candidates(&[], &canvas(), &settings(Scorer::SeamEnergy), &Flat).is_err());
    }

    #[test]
    fn downsample_guard() {
        let ex = Raster::new(64, 64);
        assert_eq!(downsample_exemplar(&ex, 1, 32).unwrap(), ex);
        assert!(downsample_exemplar(&ex, 4, 32).is_err());
    }

    #[test]
    fn dual_stage_sizes() {
        let ex = Raster::from_fn(64, 64, |x, y| [((x * y) % 13) as f32 / 13.0; 3]);
        let mut cfg = ProjectConfig {
            scheme: Scheme::Dual,
            colors: ColorCount::new(3).unwrap(),
            tile_size: 8,
            ..Default::default()
        };
        let e = Engine::with_backend(cfg.clone(), &ex, Arc::new(Flat), "flat").unwrap();
        let sizes: Vec<usize> = e.stages().iter().map(|s| s.1.len()).collect();
        assert_eq!(sizes, vec![36, 81, 81]);
        cfg.dual_full_stage1 = true;
        let e = Engine::with_backend(cfg, &ex, Arc::new(Flat), "flat").unwrap();
        assert_eq!(e.stages()[0].1.len(), 81);
    }
}
