use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::canvas::{Canvas, DrawError};
use super::param::GlyphParam;
use super::raster::Raster;

/// Which rotations leave a design unchanged (a claim made by its author).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationClass {
    None,
    HalfTurn,
    QuarterTurn,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignInfo {
    pub name: String,
    pub short_name: String,
    pub author: String,
    pub email: String,
    pub version: String,
    /// Author's declaration that the design uses no writing, numerals or
    /// positional orders. Not verified.
    pub illiterate_compliant: bool,
    pub rotation_class: RotationClass,
}

type DrawFn = dyn Fn(GlyphParam, &mut Canvas) -> Result<(), DrawError> + Send + Sync;

/// A named drawing procedure mapping the glyph parameter to a picture.
#[derive(Clone)]
pub struct GlyphDesign {
    info: DesignInfo,
    draw: Arc<DrawFn>,
}

impl fmt::Debug for GlyphDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GlyphDesign").field("info", &self.info).finish_non_exhaustive()
    }
}

#[derive(Debug, Error)]
#[error("rendering {design:?} at x = {x} failed: {source}")]
pub struct RenderError {
    pub design: String,
    pub x: f64,
    #[source]
    pub source: DrawError,
}

impl GlyphDesign {
    pub fn new<F>(name: impl Into<String>, short_name: impl Into<String>, draw: F) -> Self
    where
        F: Fn(GlyphParam, &mut Canvas) -> Result<(), DrawError> + Send + Sync + 'static,
    {
        GlyphDesign {
            info: DesignInfo {
                name: name.into(),
                short_name: short_name.into(),
                author: String::new(),
                email: String::new(),
                version: "0.1.0".into(),
                illiterate_compliant: true,
                rotation_class: RotationClass::None,
            },
            draw: Arc::new(draw),
        }
    }

    pub fn author(mut self, author: impl Into<String>, email: impl Into<String>) -> Self {
        self.info.author = author.into();
        self.info.email = email.into();
        self
    }

    pub fn version(mut self, version: impl Into<String>) -> Self {
        self.info.version = version.into();
        self
    }

    pub fn illiterate_compliant(mut self, compliant: bool) -> Self {
        self.info.illiterate_compliant = compliant;
        self
    }

    pub fn rotation_class(mut self, class: RotationClass) -> Self {
        self.info.rotation_class = class;
        self
    }

    pub fn info(&self) -> &DesignInfo {
        &self.info
    }

    pub fn name(&self) -> &str {
        &self.info.name
    }

    pub fn short_name(&self) -> &str {
        &self.info.short_name
    }

    /// Runs the drawing procedure on a fresh canvas without rasterizing.
    pub fn draw(&self, x: GlyphParam, resolution: u32) -> Result<Canvas, RenderError> {
        let mut canvas = Canvas::new(resolution);
        (self.draw)(x, &mut canvas).map_err(|source| RenderError {
            design: self.info.name.clone(),
            x: x.value(),
            source,
        })?;
        Ok(canvas)
    }

    /// Renders the 1x1 inch glyph at `ppi` pixels per inch, i.e. `ppi` pixels per side.
    pub fn render(&self, x: GlyphParam, ppi: u32) -> Result<Raster, RenderError> {
        if ppi == 0 {
            return Err(RenderError {
                design: self.info.name.clone(),
                x: x.value(),
                source: DrawError::Custom("resolution must be at least 1 pixel per inch".into()),
            });
        }
        Ok(self.draw(x, ppi)?.rasterize())
    }
}

/// Free-function form of [`GlyphDesign::render`].
pub fn render(design: &GlyphDesign, x: GlyphParam, ppi: u32) -> Result<Raster, RenderError> {
    design.render(x, ppi)
}
