//! Malleable glyphs: static pictures driven by one parameter `x` in `[0, 100]`.
//!
//! This crate renders designs, packages them into exchange archives, runs the
//! adaptive pairwise-comparison protocol and turns its answers into
//! resolution scores.

pub mod clock;
pub mod exchange;
pub mod gallery;
pub mod glyph;
pub mod metrics;
pub mod observer;
pub mod staircase;
pub mod store;
