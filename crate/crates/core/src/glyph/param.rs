use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when a numeric argument falls outside its admissible domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("glyph parameter {0} is outside [0, 100]")]
    OutOfRange(f64),
    #[error("sequence base must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("sequence index must be at least 1")]
    InvalidIndex,
    #[error("bezier control points ({x1}, {y1}), ({x2}, {y2}) must lie in the unit box")]
    InvalidControlPoints { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("reference stimulus must be positive, got {0}")]
    InvalidReference(f64),
    #[error("remap exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),
    #[error("invalid parameter: {0}")]
    Other(String),
}

/// The scalar that drives a glyph, always within `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GlyphParam(f64);

impl GlyphParam {
    pub const MIN: GlyphParam = GlyphParam(0.0);
    pub const MAX: GlyphParam = GlyphParam(100.0);

    pub fn new(x: f64) -> Result<Self, ParamError> {
        if (0.0..=100.0).contains(&x) {
            Ok(GlyphParam(x))
        } else {
            Err(ParamError::OutOfRange(x))
        }
    }

    /// Clamps any finite value into range. NaN maps to zero.
    pub fn saturating(x: f64) -> Self {
        if x.is_nan() {
            GlyphParam(0.0)
        } else {
            GlyphParam(x.clamp(0.0, 100.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Position within the range as a fraction in `[0, 1]`.
    pub fn unit(self) -> f64 {
        self.0 / 100.0
    }

    /// Linear interpolation from `a` (at x = 0) to `b` (at x = 100).
    pub fn lerp(self, a: f64, b: f64) -> f64 {
        if self.0 == 100.0 {
            return b;
        }
        a + (self.0 / 100.0) * (b - a)
    }
}

impl TryFrom<f64> for GlyphParam {
    type Error = ParamError;

    fn try_from(x: f64) -> Result<Self, Self::Error> {
        GlyphParam::new(x)
    }
}

impl From<GlyphParam> for f64 {
    fn from(x: GlyphParam) -> f64 {
        x.0
    }
}

impl fmt::Display for GlyphParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `a + (x/100)(b - a)`, rejecting `x` outside `[0, 100]`.
pub fn lerp(x: f64, a: f64, b: f64) -> Result<f64, ParamError> {
    Ok(GlyphParam::new(x)?.lerp(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lerp_endpoints_and_midpoint() {
        assert_eq!(lerp(0.0, 0.01, -1.0).unwrap(), 0.01);
        assert_eq!(lerp(100.0, 0.01, -1.0).unwrap(), -1.0);
        assert_eq!(lerp(50.0, 0.0, 10.0).unwrap(), 5.0);
    }

    #[test]
    fn lerp_rejects_out_of_range() {
        assert_eq!(lerp(-0.5, 0.0, 1.0), Err(ParamError::OutOfRange(-0.5)));
        assert_eq!(lerp(100.01, 0.0, 1.0), Err(ParamError::OutOfRange(100.01)));
        assert!(lerp(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn lerp_is_affine_on_grid() {
        for i in 0..10_000 {
            let x = i as f64 / 100.0;
            let (a, b) = (0.01, -1.0);
            assert_eq!(lerp(x, a, b).unwrap(), a + (x / 100.0) * (b - a));
        }
    }

    #[test]
    fn param_serde_validates() {
        let p: GlyphParam = serde_json::from_str("12.5").unwrap();
        assert_eq!(p.value(), 12.5);
        assert!(serde_json::from_str::<GlyphParam>("101").is_err());
    }
}
