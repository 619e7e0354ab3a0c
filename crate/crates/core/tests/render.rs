mod common;

use std::collections::BTreeMap;

use dualtile::inpaint::{BackendDescriptor, BackendKind};
use dualtile::packing::pack;
use dualtile::pipeline::{generate_tileset, Engine, Progress, Scheme, TileKey, TileSet};
use dualtile::render::{
    build_atlas, render_infinite, render_tiling, sample_atlas, seam_energy_map, tile_seams, PlaneRegion, Site,
    TileSource, TilingSpec, VariantPolicy,
};
use dualtile::{ColorCount, Raster};
use rand::seq::SliceRandom;
use rand::SeedableRng;

use common::{config, exemplar};

fn spec(w: usize, h: usize, seed: u64) -> TilingSpec {
    TilingSpec {
        width: w,
        height: h,
        seed,
        variants: VariantPolicy::Fixed,
    }
}

#[test]
fn single_tile_tiling_is_the_tile() {
    let set = generate_tileset(&config(Scheme::SelfTiling, 1, 16), &exemplar(64, 64)).unwrap();
    let out = render_tiling(&set, &spec(1, 1, 3)).unwrap();
    assert_eq!(out.image, set.tiles[&TileKey::Single][0].pixels);
}

#[test]
fn wang_placements_match_edges() {
    let set = generate_tileset(&config(Scheme::Wang, 2, 8), &exemplar(48, 48)).unwrap();
    let out = render_tiling(&set, &spec(7, 5, 11)).unwrap();
    let ids: BTreeMap<(i64, i64), _> = out
        .placements
        .iter()
        .map(|p| match p.key {
            TileKey::Wang(id) => ((p.x, p.y), id),
            _ => panic!("non-wang placement"),
        })
        .collect();
    assert_eq!(ids.len(), 35);
    for (&(x, y), id) in &ids {
        if let Some(r) = ids.get(&(x + 1, y)) {
            assert_eq!(id.e, r.w);
        }
        if let Some(b) = ids.get(&(x, y + 1)) {
            assert_eq!(id.s, b.n);
        }
    }
    for p in &out.placements {
        let t = &set.tiles[&p.key][0].pixels;
        assert_eq!(out.image.get(p.x as usize * 8 + 3, p.y as usize * 8 + 5), t.get(3, 5));
    }
}

#[test]
fn each_of_81_tiles_appears_about_3_5_times() {
    let set = generate_tileset(&config(Scheme::Wang, 3, 4), &exemplar(32, 32)).unwrap();
    let out = render_tiling(&set, &spec(28, 10, 8)).unwrap();
    let mut counts: BTreeMap<TileKey, usize> = BTreeMap::new();
    for p in &out.placements {
        *counts.entry(p.key).or_default() += 1;
    }
    let mean = out.placements.len() as f64 / 81.0;
    assert!((mean - 3.5).abs() < 0.1);
    assert!(counts.len() > 70);
}

fn dual_set(c: u32, r: usize) -> TileSet {
    generate_tileset(&config(Scheme::Dual, c, r), &exemplar(96, 96)).unwrap()
}

#[test]
fn dual_rendering_covers_each_texel_once() {
    let set = dual_set(2, 16);
    let out = render_tiling(&set, &spec(5, 4, 2)).unwrap();
    assert!(out.coverage.iter().all(|&c| c == 1));
    let odd = render_infinite(&TileSource::Set(&set), PlaneRegion::new(-23, 7, 61, 45), 2, VariantPolicy::Fixed).unwrap();
    assert!(odd.coverage.iter().all(|&c| c == 1));
    let crosses = out.placements.iter().filter(|p| p.site == Site::Corner).count();
    assert_eq!(crosses, 6 * 5);
}

#[test]
fn overlapping_windows_agree() {
    for scheme in [Scheme::Wang, Scheme::Corner, Scheme::Dual, Scheme::Escher, Scheme::Stochastic] {
        let colors = if scheme == Scheme::Escher || scheme == Scheme::Stochastic { 1 } else { 2 };
        let set = generate_tileset(&config(scheme, colors, 16), &exemplar(96, 96)).unwrap();
        let src = TileSource::Set(&set);
        let a = render_infinite(&src, PlaneRegion::new(-20, -9, 70, 50), 77, VariantPolicy::Random).unwrap();
        let b = render_infinite(&src, PlaneRegion::new(13, 5, 60, 60), 77, VariantPolicy::Random).unwrap();
        for v in 5..41 {
            for u in 13..50 {
                assert_eq!(
                    a.image.get((u + 20) as usize, (v + 9) as usize),
                    b.image.get((u - 13) as usize, (v - 5) as usize),
                    "{scheme} at ({u}, {v})"
                );
            }
        }
    }
}

#[test]
fn on_demand_tiles_share_boundary_strips() {
    let mut cfg = config(Scheme::Wang, 2, 16);
    cfg.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    cfg.backend.amplitude = 0.2;
    let engine = Engine::new(cfg, &exemplar(96, 96)).unwrap();
    let src = TileSource::OnDemand(&engine);
    let region = PlaneRegion::new(-32, 16, 96, 48);
    let a = render_infinite(&src, region, 5, VariantPolicy::Fixed).unwrap();
    let b = render_infinite(&src, PlaneRegion::new(0, 32, 16, 16), 5, VariantPolicy::Fixed).unwrap();
    assert_eq!(b.image, a.image.crop(32, 16, 16, 16).unwrap());

    let by_key: BTreeMap<TileKey, Vec<Raster>> = a.placements.iter().fold(BTreeMap::new(), |mut m, p| {
        let x = ((p.x * 16) - region.x) as usize;
        let y = ((p.y * 16) - region.y) as usize;
        m.entry(p.key).or_default().push(a.image.crop(x, y, 16, 16).unwrap());
        m
    });
    let repeated: Vec<_> = by_key.values().filter(|v| v.len() > 1).collect();
    assert!(!repeated.is_empty());
    assert!(repeated.iter().any(|v| v[0] != v[1]));

    let set = engine.empty_set();
    let canvases: Vec<_> = a
        .placements
        .iter()
        .map(|p| engine.canvas(&set, p.key, 0).unwrap())
        .collect();
    for (p, c) in a.placements.iter().zip(&canvases) {
        for q in a.placements.iter().zip(&canvases).filter(|(q, _)| q.key == p.key) {
            assert_eq!(c.pixels, q.1.pixels);
        }
    }
}

#[test]
fn atlas_round_trips_every_diamond() {
    let set = dual_set(2, 16);
    let grid = pack(ColorCount::new(2).unwrap()).unwrap();
    let atlas = build_atlas(&set, &grid, "atlas.png").unwrap();
    assert_eq!(atlas.image.dims(), (64, 64));
    assert!(atlas.coverage.iter().all(|&c| c == 1));
    assert_eq!(atlas.stored_texels(), 16 * 16 * 16);
    assert_eq!(atlas.layout.entries.len(), 32);
    for e in &atlas.layout.entries {
        let t = sample_atlas(&atlas.image, &atlas.layout, e.id).unwrap();
        assert_eq!(t.pixels, set.tiles[&e.id][0].pixels, "{}", e.id);
    }
    let text = serde_json::to_string(&atlas.layout).unwrap();
    assert!(text.contains("\"kind\":\"cross\"") && text.contains("\"atlas_file\":\"atlas.png\""));
    let unknown = TileKey::Wang(dualtile::WangTileId::new(0, 0, 0, 0));
    assert!(sample_atlas(&atlas.image, &atlas.layout, unknown).is_err());
}

#[test]
fn atlas_rejects_non_packings() {
    let set = dual_set(2, 8);
    let mut grid = pack(ColorCount::new(2).unwrap()).unwrap();
    let h = grid.lattice.h(0, 0).unwrap();
    grid.lattice.set_h(0, 0, 1 - h).unwrap();
    assert!(build_atlas(&set, &grid, "a.png").is_err());
}

#[test]
fn matched_tiling_has_far_less_seam_energy_than_shuffled() {
    let r = 32;
    let set = generate_tileset(&config(Scheme::Wang, 2, r), &exemplar(160, 160)).unwrap();
    let out = render_tiling(&set, &spec(10, 10, 21)).unwrap();
    let seams = tile_seams(10, 10, r);
    let matched = seam_energy_map(&out.image, &seams).aggregate;

    let mut keys: Vec<TileKey> = out.placements.iter().map(|p| p.key).collect();
    keys.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(4));
    let mut shuffled = Raster::new(10 * r, 10 * r);
    for (p, k) in out.placements.iter().zip(&keys) {
        let t = &set.tiles[k][0].pixels;
        for j in 0..r {
            for i in 0..r {
                shuffled.set(p.x as usize * r + i, p.y as usize * r + j, t.get(i, j));
            }
        }
    }
    let broken = seam_energy_map(&shuffled, &seams).aggregate;
    assert!(matched <= 0.1 * broken, "matched {matched} shuffled {broken}");
}

#[test]
fn atlas_seams_look_like_tile_interiors() {
    let set = dual_set(2, 32);
    let grid = pack(ColorCount::new(2).unwrap()).unwrap();
    let atlas = build_atlas(&set, &grid, "atlas.png").unwrap();
    let seams = tile_seams(4, 4, 32);
    let at_seams = seam_energy_map(&atlas.image, &seams).aggregate;
    let shifted: Vec<_> = seams
        .iter()
        .map(|s| dualtile::render::Seam { pos: s.pos - 16, ..*s })
        .collect();
    let inside = seam_energy_map(&atlas.image, &shifted).aggregate;
    assert!(at_seams < 2.0 * inside, "seams {at_seams} interior {inside}");
}

#[test]
fn rendering_is_deterministic() {
    let engine = Engine::new(config(Scheme::Dual, 2, 16), &exemplar(96, 96)).unwrap();
    let a = engine.generate(&Progress::default()).unwrap();
    let b = engine.generate(&Progress::default()).unwrap();
    let ra = render_tiling(&a, &spec(4, 4, 1)).unwrap().image.to_png_bytes();
    let rb = render_tiling(&b, &spec(4, 4, 1)).unwrap().image.to_png_bytes();
    assert_eq!(ra, rb);
}
