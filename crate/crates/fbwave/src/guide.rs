//! The narrative guide, compiled from `book/src` so that every code block
//! in the book runs under `cargo test --doc` and cannot drift from the
//! library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/existence.md")]
pub mod existence {}

#[doc = include_str!("../../../book/src/profiles.md")]
pub mod profiles {}

#[doc = include_str!("../../../book/src/viscosity.md")]
pub mod viscosity {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
