//! Perceptual calibration of the glyph parameter, an analog of display gamma.
//!
//! A design whose visual stimulus grows linearly with its (remapped) parameter
//! can use these curves to make equal parameter steps look equally large.

use serde::{Deserialize, Serialize};

use super::easing::CubicBezier;
use super::param::{GlyphParam, ParamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Remap {
    Identity,
    /// Exponential stimulus schedule: the stimulus `s0 + y` grows by a constant
    /// ratio per unit of input, so equal input steps are equal perceived steps
    /// under a logarithmic law. `k` is the Weber fraction of the stimulus.
    Logarithmic { k: f64, s0: f64 },
    /// `100 * (x/100)^exponent`.
    Power { exponent: f64 },
    Bezier(CubicBezier),
}

impl Remap {
    pub fn logarithmic(k: f64, s0: f64) -> Result<Self, ParamError> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(ParamError::InvalidReference(s0));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(ParamError::Other(format!("Weber fraction must be non-negative, got {k}")));
        }
        Ok(Remap::Logarithmic { k, s0 })
    }

    pub fn power(exponent: f64) -> Result<Self, ParamError> {
        if exponent > 0.0 && exponent.is_finite() {
            Ok(Remap::Power { exponent })
        } else {
            Err(ParamError::InvalidExponent(exponent))
        }
    }

    pub fn bezier(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ParamError> {
        CubicBezier::new(x1, y1, x2, y2).map(Remap::Bezier)
    }

    pub fn apply(&self, x: GlyphParam) -> GlyphParam {
        if x == GlyphParam::MIN || x == GlyphParam::MAX {
            return x;
        }
        let u = x.unit();
        let y = match *self {
            Remap::Identity => return x,
            Remap::Logarithmic { s0, .. } => s0 * (u * (100.0 / s0).ln_1p()).exp_m1(),
            Remap::Power { exponent } => 100.0 * u.powf(exponent),
            Remap::Bezier(c) => 100.0 * c.apply_unit(u),
        };
        GlyphParam::saturating(y)
    }

    /// Perceived intensity `k ln(s / s0)` of a stimulus of magnitude `s`.
    /// Only meaningful for the logarithmic kind; other kinds return `None`.
    pub fn perceived_intensity(&self, s: f64) -> Option<f64> {
        match *self {
            Remap::Logarithmic { k, s0 } if s > 0.0 => Some(k * (s / s0).ln()),
            _ => None,
        }
    }

    /// Just noticeable stimulus increment `k * s` at magnitude `s`.
    pub fn just_noticeable_increment(&self, s: f64) -> Option<f64> {
        match *self {
            Remap::Logarithmic { k, .. } => Some(k * s),
            _ => None,
        }
    }
}
