//! Content-aware tile sets built by exterior-boundary inpainting, and exact
//! constructions of Dual Wang tile packings.

pub mod boundary;
pub mod error;
pub mod hash;
pub mod inpaint;
pub mod lattice;
pub mod packing;
pub mod pipeline;
pub mod project;
pub mod raster;
pub mod render;

pub use error::{Error, Result};
pub use lattice::{
    ColorCount, CompletenessReport, CornerTileId, CrossTileId, EdgeColor, EdgeLattice, InteriorTileId, WangTileId,
};
pub use raster::{Mask, Raster};
