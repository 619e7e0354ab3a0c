//! Runs the Rust samples of the guide in `book/` as doc tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/packings.md")]
pub mod packings {}

#[doc = include_str!("../../../book/src/tilesets.md")]
pub mod tilesets {}

#[doc = include_str!("../../../book/src/rendering.md")]
pub mod rendering {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
