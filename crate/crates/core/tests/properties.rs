use dualtile::boundary::{cross_mask, interior_mask, owner, Owner};
use dualtile::packing::{is_complete_domino, pack, random_domino_string, validate_packing, PackingGrid};
use dualtile::pipeline::{Scheme, TileKey};
use dualtile::{ColorCount, Raster};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_preserves_completeness(c in 1u32..=7, seed: u64, k in 0usize..64) {
        let colors = ColorCount::new(c).unwrap();
        let s = random_domino_string(colors, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(is_complete_domino(&s));
        prop_assert!(is_complete_domino(&s.rotated(k)));
    }

    #[test]
    fn owners_tile_the_plane(half in 1usize..=16, x in -200i64..200, y in -200i64..200) {
        let r = 2 * half;
        let (cx, cy) = (x.div_euclid(r as i64), y.div_euclid(r as i64));
        match owner(x, y, r) {
            Owner::Interior(a, b) => prop_assert_eq!((a, b), (cx, cy)),
            Owner::Cross(a, b) => {
                prop_assert!(a == cx || a == cx + 1);
                prop_assert!(b == cy || b == cy + 1);
            }
        }
        // shifting by whole cells shifts the owner
        let shifted = match owner(x + r as i64, y - r as i64, r) {
            Owner::Interior(a, b) => Owner::Interior(a - 1, b + 1),
            Owner::Cross(a, b) => Owner::Cross(a - 1, b + 1),
        };
        prop_assert_eq!(shifted, owner(x, y, r));
    }

    #[test]
    fn png_round_trip_is_exact_after_quantizing(w in 1usize..24, h in 1usize..24, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Raster::from_fn(w, h, |_, _| {
            use rand::Rng;
            [rng.gen(), rng.gen(), rng.gen()]
        })
        .quantized();
        prop_assert_eq!(Raster::from_image_bytes(&r.to_png_bytes()).unwrap(), r.clone());
        prop_assert_eq!(r.clone().quantized(), r);
    }
}

#[test]
fn diamonds_split_each_cell_in_half() {
    for half in 1..=16 {
        let r = 2 * half;
        assert_eq!(interior_mask(r).count(), r * r / 2, "R={r}");
        assert_eq!(cross_mask(r).count(), r * r / 2, "R={r}");
    }
}

#[test]
fn tile_keys_round_trip() {
    for c in 1..=4 {
        let colors = ColorCount::new(c).unwrap();
        for scheme in Scheme::ALL {
            for key in TileKey::all(scheme, colors) {
                assert_eq!(key.to_string().parse::<TileKey>().unwrap(), key);
            }
        }
    }
}

#[test]
fn packings_survive_serialization() {
    for c in 1..=6 {
        let grid = pack(ColorCount::new(c).unwrap()).unwrap();
        let back = PackingGrid::from_json(&grid.to_json()).unwrap();
        assert_eq!(back, grid);
        assert!(validate_packing(&back).unwrap().valid, "C={c}");
    }
}
