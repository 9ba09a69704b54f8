//! Structural property checks on rendered designs.

use serde::Serialize;

use super::design::{GlyphDesign, RenderError};
use super::param::GlyphParam;
use super::raster::RightAngle;

/// True when the design renders pixel-identically at both ends of the
/// parameter range, so the parameter behaves cyclically.
pub fn check_shepard(design: &GlyphDesign, ppi: u32) -> Result<bool, RenderError> {
    let start = design.render(GlyphParam::MIN, ppi)?;
    let end = design.render(GlyphParam::MAX, ppi)?;
    Ok(start == end)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSample {
    pub x: f64,
    pub max_deviation: u8,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationReport {
    pub angle_degrees: u32,
    pub tolerance: u8,
    pub samples: Vec<RotationSample>,
    pub max_deviation: u8,
    pub passed: bool,
}

/// Compares each sample's render with its own rotation by `angle`.
///
/// `tolerance` is the largest per-channel difference still counted as equal.
pub fn check_rotation_invariance(
    design: &GlyphDesign,
    angle: RightAngle,
    samples: &[GlyphParam],
    tolerance: u8,
    ppi: u32,
) -> Result<RotationReport, RenderError> {
    let mut out = Vec::with_capacity(samples.len());
    for &x in samples {
        let image = design.render(x, ppi)?;
        let deviation = image
            .max_abs_diff(&image.rotated(angle))
            .expect("rotation preserves size");
        out.push(RotationSample {
            x: x.value(),
            max_deviation: deviation,
            passed: deviation <= tolerance,
        });
    }
    let max_deviation = out.iter().map(|s| s.max_deviation).max().unwrap_or(0);
    Ok(RotationReport {
        angle_degrees: angle.degrees(),
        tolerance,
        passed: !out.is_empty() && out.iter().all(|s| s.passed),
        samples: out,
        max_deviation,
    })
}
