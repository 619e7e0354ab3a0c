//! The inpainter contract and its backends.

pub mod harmonic;
pub mod noisy;
pub mod quilt;
pub mod remote;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Raster};

pub use harmonic::harmonic_inpaint;
pub use noisy::noisy_harmonic;
pub use quilt::{quilt_inpaint, QuiltParams};
pub use remote::RemoteClient;

/// One inpainting job.
#[derive(Clone, Debug, PartialEq)]
pub struct InpaintRequest {
    pub image: Raster,
    /// `true` where the backend must synthesize.
    pub mask: Mask,
    pub prompt: String,
    pub negative_prompt: Option<String>,
    pub seed: u64,
    pub steps: u32,
    pub guidance: f64,
}

pub const DEFAULT_STEPS: u32 = 40;
pub const DEFAULT_GUIDANCE: f64 = 7.5;

impl InpaintRequest {
    pub fn new(image: Raster, mask: Mask, seed: u64) -> Self {
        InpaintRequest {
            image,
            mask,
            prompt: String::new(),
            negative_prompt: None,
            seed,
            steps: DEFAULT_STEPS,
            guidance: DEFAULT_GUIDANCE,
        }
    }

    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt = prompt.into();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Harmonic,
    Noisy,
    Quilt,
    Remote,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BackendKind::Harmonic => "harmonic",
            BackendKind::Noisy => "noisy",
            BackendKind::Quilt => "quilt",
            BackendKind::Remote => "remote",
        };
        f.write_str(s)
    }
}

/// Backend choice and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Harmonic stopping threshold, relative to the boundary value range.
    pub tolerance: f64,
    /// Noise amplitude (noisy backend).
    pub amplitude: f64,
    /// Noise correlation length in texels; also the fade width.
    pub corr_len: f64,
    pub quilt: QuiltParams,
    pub url: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
    pub max_in_flight: usize,
}

impl Default for BackendDescriptor {
    fn default() -> Self {
        BackendDescriptor {
            kind: BackendKind::Harmonic,
            tolerance: 1e-5,
            amplitude: 0.08,
            corr_len: 8.0,
            quilt: QuiltParams::default(),
            url: None,
            timeout_secs: 300,
            retries: 3,
            max_in_flight: 2,
        }
    }
}

impl BackendDescriptor {
    pub fn harmonic() -> Self {
        Self::default()
    }

    pub fn of_kind(kind: BackendKind) -> Self {
        BackendDescriptor {
            kind,
            ..Self::default()
        }
    }

    pub fn remote(url: impl Into<String>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Remote,
            url: Some(url.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        match (self.kind, &self.url) {
            (BackendKind::Remote, None) => Err(Error::Config("remote backend needs a url".into())),
            (BackendKind::Remote, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(Error::Config(format!("{} backend takes no url", self.kind))),
        }
    }
}

/// Anything that can fill a masked raster.
pub trait Inpainter: Send + Sync {
    fn inpaint(&self, req: &InpaintRequest) -> Result<Raster>;
}

/// A configured backend. Counts the calls it serves.
pub struct Backend {
    desc: BackendDescriptor,
    exemplar: Option<Arc<Raster>>,
    remote: Option<RemoteClient>,
    calls: AtomicUsize,
}

impl Backend {
    /// `exemplar` is required by the quilting backend only.
    pub fn new(desc: BackendDescriptor, exemplar: Option<Arc<Raster>>) -> Result<Backend> {
        desc.validate()?;
        if desc.kind == BackendKind::Quilt && exemplar.is_none() {
            return Err(Error::Config("quilt backend needs the exemplar".into()));
        }
        let remote = desc.url.as_deref().map(|u| {
            RemoteClient::new(u, Duration::from_secs(desc.timeout_secs), desc.retries, desc.max_in_flight)
        });
        Ok(Backend {
            desc,
            exemplar,
            remote,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Inpainter for Backend {
    fn inpaint(&self, req: &InpaintRequest) -> Result<Raster> {
        if req.image.dims() != req.mask.dims() {
            return Err(Error::SizeMismatch {
                expected: req.image.dims(),
                actual: req.mask.dims(),
            });
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        if !req.mask.any() {
            return Ok(req.image.clone());
        }
        let d = &self.desc;
        let mut out = match d.kind {
            BackendKind::Harmonic => harmonic_inpaint(&req.image, &req.mask, d.tolerance)?,
            BackendKind::Noisy => noisy_harmonic(&req.image, &req.mask, req.seed, d.amplitude, d.corr_len, d.tolerance)?,
            BackendKind::Quilt => quilt_inpaint(
                &req.image,
                &req.mask,
                self.exemplar.as_deref().expect("checked in new"),
                req.seed,
                &d.quilt,
            )?,
            BackendKind::Remote => self.remote.as_ref().expect("checked in new").inpaint(req)?,
        };
        // boundary texels are never the backend's to change
        for (i, t) in out.data_mut().iter_mut().enumerate() {
            if !req.mask.bits()[i] {
                *t = req.image.data()[i];
            }
        }
        Ok(out)
    }
}

/// One-shot inpainting with a freshly built backend.
pub fn inpaint(desc: &BackendDescriptor, exemplar: Option<Arc<Raster>>, req: &InpaintRequest) -> Result<Raster> {
    Backend::new(desc.clone(), exemplar)?.inpaint(req)
}
