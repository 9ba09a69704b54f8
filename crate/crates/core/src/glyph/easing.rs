//! Monotone easing curves used to phase parts of composite glyphs.

use serde::{Deserialize, Serialize};

use super::param::{GlyphParam, ParamError};

/// CSS-style cubic Bezier timing curve through (0,0) and (1,1).
///
/// Both inner control points must lie in the unit box, which makes the x and
/// y polynomials non-decreasing and the resulting mapping a monotone bijection
/// of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl CubicBezier {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ParamError> {
        let in_box = |v: f64| (0.0..=1.0).contains(&v);
        if [x1, y1, x2, y2].into_iter().all(in_box) {
            Ok(CubicBezier { x1, y1, x2, y2 })
        } else {
            Err(ParamError::InvalidControlPoints { x1, y1, x2, y2 })
        }
    }

    pub fn control_points(&self) -> [(f64, f64); 2] {
        [(self.x1, self.y1), (self.x2, self.y2)]
    }

    fn component(s: f64, c1: f64, c2: f64) -> f64 {
        let r = 1.0 - s;
        3.0 * r * r * s * c1 + 3.0 * r * s * s * c2 + s * s * s
    }

    /// Maps `u` in `[0, 1]` through the curve. The curve parameter is found by
    /// bisection on the x polynomial until the bracket stops shrinking.
    pub fn apply_unit(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if Self::component(mid, self.x1, self.x2) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        Self::component(s, self.y1, self.y2).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Easing {
    Linear,
    CubicBezier(CubicBezier),
}

impl Easing {
    pub fn cubic_bezier(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ParamError> {
        CubicBezier::new(x1, y1, x2, y2).map(Easing::CubicBezier)
    }

    pub fn apply_unit(&self, u: f64) -> f64 {
        match self {
            Easing::Linear => u.clamp(0.0, 1.0),
            Easing::CubicBezier(c) => c.apply_unit(u),
        }
    }

    /// Eases a glyph parameter; `0` and `100` are fixed points.
    pub fn apply(&self, x: GlyphParam) -> GlyphParam {
        match self {
            Easing::Linear => x,
            Easing::CubicBezier(c) => {
                if x == GlyphParam::MIN || x == GlyphParam::MAX {
                    return x;
                }
                GlyphParam::saturating(100.0 * c.apply_unit(x.unit()))
            }
        }
    }
}
