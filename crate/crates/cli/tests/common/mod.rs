#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dualtile::inpaint::{BackendDescriptor, BackendKind};
use dualtile::pipeline::{ProjectConfig, Scheme};
use dualtile::project::ProjectFile;
use dualtile::{ColorCount, Raster};

pub fn exemplar(w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as f32, y as f32);
        let c = |p: f32| 0.5 + 0.22 * (x / 9.3 + p + 1.4 * (y / 17.0 + p).sin()).sin() + 0.18 * (y / 7.1 - 0.6 * p).cos();
        [c(0.0), c(1.7), c(3.1)]
    })
    .quantized()
}

/// Writes an exemplar and a project file into `dir` and returns the project
/// file's path.
pub fn project(dir: &Path, scheme: Scheme, colors: u32, tile_size: usize) -> PathBuf {
    exemplar(96, 96).save_png(dir.join("exemplar.png")).unwrap();
    let config = ProjectConfig {
        exemplar: "exemplar.png".into(),
        scheme,
        colors: ColorCount::new(colors).unwrap(),
        tile_size,
        candidates: 1,
        seed: 99,
        ..Default::default()
    };
    let path = dir.join("project.json");
    std::fs::write(&path, ProjectFile::new(config).to_canonical_json().unwrap()).unwrap();
    path
}

/// Switches a project to the seeded noisy backend so different seeds give
/// different tiles.
pub fn use_noisy_backend(path: &Path) {
    let mut file = ProjectFile::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    file.project.backend = BackendDescriptor::of_kind(BackendKind::Noisy);
    std::fs::write(path, file.to_canonical_json().unwrap()).unwrap();
}
