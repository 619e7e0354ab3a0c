use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{check_tile_size, PatchAxis, PatchLibrary, TemplatePatch};
use crate::error::{Error, Result};
use crate::inpaint::BackendDescriptor;
use crate::lattice::ColorCount;
use crate::pipeline::score::{Orientation, Scorer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[serde(rename = "self")]
    SelfTiling,
    Stochastic,
    Escher,
    Wang,
    Corner,
    Dual,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::SelfTiling,
        Scheme::Stochastic,
        Scheme::Escher,
        Scheme::Wang,
        Scheme::Corner,
        Scheme::Dual,
    ];

    /// Self, stochastic and Escher tilings use a single tile id.
    pub fn is_single(self) -> bool {
        matches!(self, Scheme::SelfTiling | Scheme::Stochastic | Scheme::Escher)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SelfTiling => "self",
            Scheme::Stochastic => "stochastic",
            Scheme::Escher => "escher",
            Scheme::Wang => "wang",
            Scheme::Corner => "corner",
            Scheme::Dual => "dual",
        }
    }

    /// Number of (horizontal, vertical, diamond) patches the scheme needs.
    pub fn patch_counts(self, colors: ColorCount) -> (usize, usize, usize) {
        let c = colors.get() as usize;
        match self {
            Scheme::SelfTiling | Scheme::Stochastic | Scheme::Escher => (1, 1, 0),
            Scheme::Wang | Scheme::Dual => (c, c, 0),
            Scheme::Corner => (0, 0, c),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum PatchStrategy {
    Random,
    Constrained,
    Manual { library: PatchLibrary },
}

impl PatchStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            PatchStrategy::Random => "random",
            PatchStrategy::Constrained => "constrained",
            PatchStrategy::Manual { .. } => "manual",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub exemplar: PathBuf,
    pub prompt: String,
    pub negative_prompt: Option<String>,
    pub scheme: Scheme,
    pub colors: ColorCount,
    pub tile_size: usize,
    /// Texels of boundary continuation copied into the mask before
    /// inpainting.
    pub latent_margin: usize,
    /// Integer box-filter factor applied to the exemplar on load.
    pub downsample: usize,
    pub patches: PatchStrategy,
    /// Peak cut-path deviation for Escher tiles; `tile_size / 8` if unset.
    pub escher_amplitude: Option<usize>,
    /// Variants per tile id; 4 for stochastic tilings and 1 otherwise if
    /// unset.
    pub variants: Option<usize>,
    pub candidates: usize,
    pub scorer: Scorer,
    pub orientation: Option<Orientation>,
    pub backend: BackendDescriptor,
    pub seed: u64,
    pub dual_full_stage1: bool,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            exemplar: PathBuf::from("exemplar.png"),
            prompt: String::new(),
            negative_prompt: None,
            scheme: Scheme::Wang,
            colors: ColorCount::new(3).unwrap(),
            tile_size: 256,
            latent_margin: 0,
            downsample: 1,
            patches: PatchStrategy::Random,
            escher_amplitude: None,
            variants: None,
            candidates: 4,
            scorer: Scorer::SeamEnergy,
            orientation: None,
            backend: BackendDescriptor::default(),
            seed: 0,
            dual_full_stage1: false,
        }
    }
}

impl ProjectConfig {
    pub fn variants(&self) -> usize {
        self.variants
            .unwrap_or(if self.scheme == Scheme::Stochastic { 4 } else { 1 })
    }

    /// Color count of the generated set; single-tile schemes use one color.
    pub fn tileset_colors(&self) -> ColorCount {
        if self.scheme.is_single() {
            ColorCount::new(1).unwrap()
        } else {
            self.colors
        }
    }

    pub fn escher_amplitude(&self) -> usize {
        self.escher_amplitude.unwrap_or(self.tile_size / 8)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation.unwrap_or(Orientation::LowerBetter)
    }

    pub fn validate(&self) -> Result<()> {
        check_tile_size(self.tile_size)?;
        self.backend.validate()?;
        if self.candidates == 0 {
            return Err(Error::Config("candidates must be at least 1".into()));
        }
        if self.variants() == 0 {
            return Err(Error::Config("variants must be at least 1".into()));
        }
        if self.downsample == 0 {
            return Err(Error::Config("downsample factor must be at least 1".into()));
        }
        if self.latent_margin >= self.tile_size / 2 {
            return Err(Error::Config(format!(
                "latent margin {} must be below half the tile size",
                self.latent_margin
            )));
        }
        if self.scorer == Scorer::Diversity {
            return Err(Error::Config("diversity ranks tile lists, not candidates".into()));
        }
        if self.scheme == Scheme::Escher && self.escher_amplitude() > self.tile_size / 8 {
            return Err(Error::Config(format!(
                "escher amplitude {} exceeds tile_size / 8",
                self.escher_amplitude()
            )));
        }
        if self.dual_full_stage1 && self.scheme != Scheme::Dual {
            return Err(Error::Config("dual_full_stage1 only applies to the dual scheme".into()));
        }
        if let PatchStrategy::Manual { library } = &self.patches {
            check_library(library, self.scheme, self.tileset_colors(), self.tile_size)?;
        }
        Ok(())
    }
}

/// Checks that a library has one patch per needed (axis, color) and that
/// only Escher tiles use curved cuts.
pub fn check_library(library: &PatchLibrary, scheme: Scheme, colors: ColorCount, tile_size: usize) -> Result<()> {
    if library.tile_size != tile_size {
        return Err(Error::Config(format!(
            "patch library is for tile size {}, project uses {tile_size}",
            library.tile_size
        )));
    }
    let (nh, nv, nd) = scheme.patch_counts(colors);
    let check = |list: &[TemplatePatch], axis: PatchAxis, n: usize| -> Result<()> {
        if list.len() != n {
            return Err(Error::Config(format!(
                "{scheme} with {colors} colors needs {n} {axis:?} patches, got {}",
                list.len()
            )));
        }
        for (i, p) in list.iter().enumerate() {
            if p.axis != axis || p.color as usize != i {
                return Err(Error::Config(format!("{axis:?} patch {i} has axis {:?} and color {}", p.axis, p.color)));
            }
        }
        Ok(())
    };
    check(&library.horizontal, PatchAxis::Horizontal, nh)?;
    check(&library.vertical, PatchAxis::Vertical, nv)?;
    check(&library.diamonds, PatchAxis::Diamond, nd)?;
    if scheme != Scheme::Escher && !(library.h_path.is_straight() && library.v_path.is_straight()) {
        return Err(Error::Config(format!("curved cut paths are only valid for escher, not {scheme}")));
    }
    Ok(())
}
