//! Versioned project files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::inpaint::BackendKind;
use crate::pipeline::{Engine, ProjectConfig, TileSet};
use crate::raster::Raster;

pub const PROJECT_VERSION: u32 = 1;

/// Overrides the remote backend URL of any loaded project.
pub const REMOTE_URL_ENV: &str = "DUALTILE_REMOTE_URL";

fn default_tileset_dir() -> PathBuf {
    PathBuf::from("tileset")
}

/// On-disk project: the generation config plus where its outputs go.
/// Relative paths resolve against the project file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectFile {
    pub version: u32,
    #[serde(default = "default_tileset_dir")]
    pub tileset_dir: PathBuf,
    pub project: ProjectConfig,
}

impl ProjectFile {
    pub fn new(project: ProjectConfig) -> Self {
        ProjectFile {
            version: PROJECT_VERSION,
            tileset_dir: default_tileset_dir(),
            project,
        }
    }

    /// Canonical JSON: keys sorted at every level, two-space indent and a
    /// trailing newline.
    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ProjectFile = serde_json::from_str(text)?;
        if f.version != PROJECT_VERSION {
            return Err(Error::Config(format!(
                "project schema version {} is not supported (expected {PROJECT_VERSION})",
                f.version
            )));
        }
        Ok(f)
    }
}

/// A project file together with its location.
#[derive(Clone, Debug)]
pub struct Project {
    pub path: PathBuf,
    pub file: ProjectFile,
}

impl Project {
    /// Loads, validates and checks that the exemplar exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Project> {
        let path = path.as_ref().to_path_buf();
        let text = fs::read_to_string(&path).at(&path)?;
        let mut file = ProjectFile::from_json(&text)?;
        apply_env(&mut file.project);
        file.project.validate()?;
        let p = Project { path, file };
        let ex = p.exemplar_path();
        if !ex.is_file() {
            return Err(Error::Missing(format!("exemplar {}", ex.display())));
        }
        Ok(p)
    }

    pub fn save(&self) -> Result<()> {
        let text = self.file.to_canonical_json()?;
        fs::write(&self.path, text).at(&self.path)
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.file.project
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir().join(p)
        }
    }

    pub fn exemplar_path(&self) -> PathBuf {
        self.resolve(&self.file.project.exemplar)
    }

    pub fn tileset_path(&self) -> PathBuf {
        self.resolve(&self.file.tileset_dir)
    }

    pub fn load_exemplar(&self) -> Result<Raster> {
        Raster::load(self.exemplar_path())
    }

    pub fn engine(&self) -> Result<Engine> {
        Engine::new(self.file.project.clone(), &self.load_exemplar()?)
    }

    pub fn load_tileset(&self) -> Result<TileSet> {
        TileSet::load(&self.tileset_path())
    }
}

fn apply_env(config: &mut ProjectConfig) {
    if let Ok(url) = std::env::var(REMOTE_URL_ENV) {
        if config.backend.kind == BackendKind::Remote && !url.is_empty() {
            config.backend.url = Some(url);
        }
    }
}
