//! Glyph parameter, canvas, rendering and the numeric helpers designs build on.

pub mod canvas;
pub mod checks;
pub mod color;
pub mod design;
pub mod easing;
pub mod halton;
pub mod param;
pub mod raster;
pub mod remap;

pub use canvas::{p, Canvas, DrawError, Point, Primitive, Shape, CANVAS_SIDE, CORNER_RADIUS};
pub use checks::{check_rotation_invariance, check_shepard, RotationReport, RotationSample};
pub use color::Color;
pub use design::{render, DesignInfo, GlyphDesign, RenderError, RotationClass};
pub use easing::{CubicBezier, Easing};
pub use halton::{halton, halton_2d};
pub use param::{lerp, GlyphParam, ParamError};
pub use raster::{png_dimensions, PngError, Raster, RightAngle};
pub use remap::Remap;
