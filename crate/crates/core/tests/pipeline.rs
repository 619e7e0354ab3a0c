mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dualtile::boundary::{assemble_interior, Stage1Key};
use dualtile::inpaint::{Backend, BackendDescriptor, BackendKind, InpaintRequest, Inpainter};
use dualtile::pipeline::{
    diversity, generate_tileset, seam_energy, Engine, PatchStrategy, Progress, Scheme, TileKey, TileSet,
};
use dualtile::{CrossTileId, Error, Raster, Result, WangTileId};

use common::{config, exemplar};

#[test]
fn wang_set_covers_every_id() {
    let ex = exemplar(96, 96);
    let set = generate_tileset(&config(Scheme::Wang, 2, 16), &ex).unwrap();
    assert_eq!(set.tile_count(), 16);
    assert!(set.is_complete());
    assert_eq!(set.counters.inpaints, 16);
    for list in set.tiles.values() {
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].pixels.dims(), (16, 16));
    }
}

#[test]
fn generation_is_reproducible() {
    let ex = exemplar(80, 80);
    let mut cfg = config(Scheme::Wang, 2, 16);
    cfg.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    cfg.candidates = 2;
    let a = generate_tileset(&cfg, &ex).unwrap();
    let b = generate_tileset(&cfg, &ex).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.counters.backend_calls, 32);
}

#[test]
fn best_candidate_has_lowest_seam_energy() {
    let ex = exemplar(80, 80);
    let mut cfg = config(Scheme::SelfTiling, 1, 16);
    cfg.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    cfg.backend.amplitude = 0.3;
    cfg.candidates = 4;
    let engine = Engine::new(cfg.clone(), &ex).unwrap();
    let set = engine.generate(&Progress::default()).unwrap();
    let chosen = set.get(TileKey::Single, 0).unwrap();
    let canvas = engine.canvas(&set, TileKey::Single, 0).unwrap();
    let backend = Backend::new(cfg.backend.clone(), None).unwrap();
    let mut energies = Vec::new();
    for k in 0..4 {
        let seed = dualtile::pipeline::candidate_seed(cfg.seed, cfg.scheme, TileKey::Single, 0, k);
        let out = backend
            .inpaint(&InpaintRequest::new(canvas.pixels.clone(), canvas.mask.clone(), seed))
            .unwrap()
            .quantized();
        energies.push((seam_energy(&canvas, &out), seed));
    }
    let best = energies.iter().cloned().fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    assert_eq!(chosen.seed, best.1);
    assert_eq!(chosen.score, Some(best.0));
    assert!(energies.iter().any(|e| e.0 != best.0));
}

#[test]
fn regeneration_is_independent_and_reversible() {
    let ex = exemplar(96, 96);
    let mut cfg = config(Scheme::Wang, 2, 16);
    cfg.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    let engine = Engine::new(cfg.clone(), &ex).unwrap();
    let original = engine.generate(&Progress::default()).unwrap();
    let key = TileKey::Wang(WangTileId::new(1, 0, 1, 1));
    let mut set = original.clone();
    let report = engine.regenerate(&mut set, key, 99, false).unwrap();
    assert_eq!(report.regenerated, vec![key]);
    for (k, list) in &set.tiles {
        if *k == key {
            assert_ne!(list[0].pixels, original.tiles[k][0].pixels);
        } else {
            assert_eq!(list, &original.tiles[k]);
        }
    }
    engine.regenerate(&mut set, key, cfg.seed, false).unwrap();
    assert_eq!(set.tiles, original.tiles);
    let missing = TileKey::Corner(dualtile::CornerTileId::new(0, 0, 0, 0));
    assert!(matches!(engine.regenerate(&mut set, missing, 1, false), Err(Error::UnknownTile(_))));
}

fn dual_engine(full: bool) -> (Engine, TileSet) {
    let ex = exemplar(96, 96);
    let mut cfg = config(Scheme::Dual, 2, 16);
    cfg.dual_full_stage1 = full;
    let engine = Engine::new(cfg, &ex).unwrap();
    let set = engine.generate(&Progress::default()).unwrap();
    (engine, set)
}

#[test]
fn dual_stage_counts() {
    let (_, set) = dual_engine(false);
    assert_eq!(set.stage1.len(), 16);
    assert_eq!(set.tile_count(), 32);
    assert_eq!(set.counters.inpaints, 16 + 16 + 16);
    let (_, full) = dual_engine(true);
    assert_eq!(full.stage1.len(), 16);
    assert_eq!(full.counters.inpaints, 48);
    assert!(full.stage1.keys().all(|k| matches!(k, TileKey::Stage1Full(_))));
}

#[test]
fn interior_corner_regions_come_from_stage1() {
    let (engine, set) = dual_engine(false);
    let r = 16;
    let id = WangTileId::new(1, 0, 1, 1);
    let canvas = engine.canvas(&set, TileKey::Interior(id), 0).unwrap();
    let [ne, se, sw, nw] = Stage1Key::for_interior(id);
    let quarters = [(ne, r, 0), (se, r, r), (sw, 0, r), (nw, 0, 0)];
    for (key, x0, y0) in quarters {
        let src = &set.stage1[&TileKey::Stage1(key)].pixels;
        for y in y0..y0 + r {
            for x in x0..x0 + r {
                if !canvas.mask.get(x, y) {
                    assert_eq!(canvas.pixels.get(x, y), src.get(x, y));
                }
            }
        }
    }
    let direct = assemble_interior(id, r, &set_stage1(&set)).unwrap();
    assert_eq!(direct, canvas);
}

fn set_stage1(set: &TileSet) -> std::collections::BTreeMap<Stage1Key, Raster> {
    set.stage1
        .iter()
        .filter_map(|(k, t)| match k {
            TileKey::Stage1(s) => Some((*s, t.pixels.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn interior_regeneration_marks_its_crosses() {
    let (engine, set) = dual_engine(false);
    let interior = WangTileId::new(0, 0, 0, 0);
    let expected: Vec<TileKey> = CrossTileId::all(set.colors)
        .filter(|&c| dualtile::boundary::cross_neighbours(c).contains(&interior))
        .map(TileKey::Cross)
        .collect();
    assert!(!expected.is_empty() && expected.len() < 16);

    let mut deferred = set.clone();
    let report = engine.regenerate(&mut deferred, TileKey::Interior(interior), 5, true).unwrap();
    assert_eq!(report.stale, expected);
    for (k, list) in &deferred.tiles {
        assert_eq!(list[0].stale, expected.contains(k), "{k}");
        if matches!(k, TileKey::Cross(_)) {
            assert_eq!(list[0].pixels, set.tiles[k][0].pixels);
        }
    }

    let mut eager = set.clone();
    let report = engine.regenerate(&mut eager, TileKey::Interior(interior), 5, false).unwrap();
    assert_eq!(report.regenerated[1..], expected[..]);
    assert!(eager.tiles.values().flatten().all(|t| !t.stale));
    let again = engine.regenerate(&mut eager, TileKey::Interior(interior), 1234, false).unwrap();
    assert_eq!(again.regenerated.len(), expected.len() + 1);
    assert_eq!(eager.tiles, set.tiles);
}

#[test]
fn stochastic_variants_differ() {
    let ex = exemplar(80, 80);
    let mut cfg = config(Scheme::Stochastic, 1, 16);
    cfg.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    cfg.backend.amplitude = 0.2;
    let set = generate_tileset(&cfg, &ex).unwrap();
    let variants = &set.tiles[&TileKey::Single];
    assert_eq!(variants.len(), 4);
    let images: Vec<_> = variants.iter().map(|t| t.image()).collect();
    assert!(diversity(&images[..2]).unwrap() < 1.0);
}

#[test]
fn corner_tiles_keep_copied_triangles() {
    let ex = exemplar(96, 96);
    let engine = Engine::new(config(Scheme::Corner, 2, 16), &ex).unwrap();
    let set = engine.generate(&Progress::default()).unwrap();
    assert_eq!(set.tile_count(), 16);
    let key = TileKey::Corner(dualtile::CornerTileId::new(0, 1, 1, 0));
    let canvas = engine.canvas(&set, key, 0).unwrap();
    let tile = &set.tiles[&key][0];
    let copies = canvas.retained_copies();
    let mut n = 0;
    for y in 0..32 {
        for x in 0..32 {
            if copies.get(x, y) {
                let (i, j) = canvas.tile_coords(x, y);
                assert_eq!(tile.pixels.get(i, j), canvas.pixels.get(x, y));
                n += 1;
            }
        }
    }
    assert_eq!(n, 16 * 16 / 2);
}

#[test]
fn persistence_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let ex = exemplar(96, 96);
    let engine = Engine::new(config(Scheme::Dual, 2, 16), &ex).unwrap();
    let a = engine.generate_into(dir.path(), &Progress::default()).unwrap();
    let loaded = TileSet::load(dir.path()).unwrap();
    assert_eq!(loaded.tiles, a.tiles);
    assert_eq!(loaded.stage1, a.stage1);
    let b = engine.generate_into(dir.path(), &Progress::default()).unwrap();
    assert_eq!(b.counters.inpaints, 0);
    assert_eq!(b.counters.resumed, 48);
    assert_eq!(b.tiles, a.tiles);
}

/// Fails every call after the first `ok` ones.
struct Flaky {
    inner: Backend,
    ok: usize,
    seen: AtomicUsize,
}

impl Inpainter for Flaky {
    fn inpaint(&self, req: &InpaintRequest) -> Result<Raster> {
        if self.seen.fetch_add(1, Ordering::SeqCst) >= self.ok {
            return Err(Error::Remote("backend went away".into()));
        }
        self.inner.inpaint(req)
    }
}

#[test]
fn backend_failure_leaves_resumable_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let ex = exemplar(96, 96);
    let cfg = config(Scheme::Wang, 2, 16);
    let flaky = Flaky {
        inner: Backend::new(BackendDescriptor::harmonic(), None).unwrap(),
        ok: 5,
        seen: AtomicUsize::new(0),
    };
    let engine = Engine::with_backend(cfg.clone(), &ex, Arc::new(flaky), "harmonic").unwrap();
    assert!(engine.generate_into(dir.path(), &Progress::default()).is_err());
    let partial = TileSet::load(dir.path()).unwrap();
    assert_eq!(partial.tile_count(), 5);

    let engine = Engine::new(cfg, &ex).unwrap();
    let done = engine.generate_into(dir.path(), &Progress::default()).unwrap();
    assert_eq!(done.counters.resumed, 5);
    assert_eq!(done.counters.inpaints, 11);
    assert_eq!(done.tiles, engine.generate(&Progress::default()).unwrap().tiles);
}

#[test]
fn manual_and_constrained_libraries_feed_the_canvas() {
    let ex = exemplar(96, 96);
    let mut cfg = config(Scheme::Wang, 2, 16);
    cfg.patches = PatchStrategy::Constrained;
    let engine = Engine::new(cfg.clone(), &ex).unwrap();
    let lib = engine.library().clone();
    assert!(lib.horizontal.iter().all(|p| p.y == lib.horizontal[0].y));

    let mut moved = lib.clone();
    moved.horizontal[0].x = (moved.horizontal[0].x + 7) % 80;
    cfg.patches = PatchStrategy::Manual { library: moved.clone() };
    let manual = Engine::new(cfg, &ex).unwrap();
    assert_eq!(manual.library(), &moved);
    let set = manual.empty_set();
    let key = TileKey::Wang(WangTileId::new(0, 0, 0, 0));
    assert_ne!(
        manual.canvas(&set, key, 0).unwrap().digest(),
        engine.canvas(&set, key, 0).unwrap().digest()
    );
}

#[test]
fn downsampled_exemplar_must_hold_a_tile() {
    let ex = exemplar(64, 64);
    let mut cfg = config(Scheme::SelfTiling, 1, 16);
    cfg.downsample = 4;
    assert!(Engine::new(cfg.clone(), &ex).is_ok());
    cfg.downsample = 5;
    assert!(Engine::new(cfg, &ex).is_err());
}
