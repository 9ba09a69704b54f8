use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized color {0:?}")]
pub struct ColorParseError(pub String);

/// Straight-alpha 8-bit RGBA color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Color { r, g, b, a: 255 }
    }

    pub const fn rgba(r: u8, g: u8, b: u8, a: u8) -> Self {
        Color { r, g, b, a }
    }

    pub fn with_alpha(self, a: u8) -> Self {
        Color { a, ..self }
    }

    /// Scales the alpha channel by `factor` (clamped to `[0, 1]`).
    pub fn fade(self, factor: f64) -> Self {
        let f = factor.clamp(0.0, 1.0);
        Color {
            a: (self.a as f64 * f).round() as u8,
            ..self
        }
    }

    pub const TRANSPARENT: Color = Color::rgba(0, 0, 0, 0);
    pub const BLACK: Color = Color::rgb(0, 0, 0);
    pub const WHITE: Color = Color::rgb(255, 255, 255);
    pub const MEDIUM_BLUE: Color = Color::rgb(0, 0, 205);
    pub const DARK_SLATE_GRAY: Color = Color::rgb(47, 79, 79);
    pub const CRIMSON: Color = Color::rgb(220, 20, 60);
    pub const DARK_ORANGE: Color = Color::rgb(255, 140, 0);
    pub const FOREST_GREEN: Color = Color::rgb(34, 139, 34);
    pub const GOLDENROD: Color = Color::rgb(218, 165, 32);
    pub const TEAL: Color = Color::rgb(0, 128, 128);
    pub const GRAY: Color = Color::rgb(128, 128, 128);
}

const NAMED: &[(&str, Color)] = &[
    ("transparent", Color::TRANSPARENT),
    ("black", Color::BLACK),
    ("white", Color::WHITE),
    ("mediumblue", Color::MEDIUM_BLUE),
    ("darkslategray", Color::DARK_SLATE_GRAY),
    ("crimson", Color::CRIMSON),
    ("darkorange", Color::DARK_ORANGE),
    ("forestgreen", Color::FOREST_GREEN),
    ("goldenrod", Color::GOLDENROD),
    ("teal", Color::TEAL),
    ("gray", Color::GRAY),
    ("red", Color::rgb(255, 0, 0)),
    ("green", Color::rgb(0, 128, 0)),
    ("blue", Color::rgb(0, 0, 255)),
];

impl FromStr for Color {
    type Err = ColorParseError;

    /// Accepts a small set of CSS color names, `#rrggbb` and `#rrggbbaa`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(hex) = lower.strip_prefix('#') {
            let channel = |i: usize| {
                hex.get(i..i + 2)
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| ColorParseError(s.to_string()))
            };
            return match hex.len() {
                6 => Ok(Color::rgb(channel(0)?, channel(2)?, channel(4)?)),
                8 => Ok(Color::rgba(channel(0)?, channel(2)?, channel(4)?, channel(6)?)),
                _ => Err(ColorParseError(s.to_string())),
            };
        }
        NAMED
            .iter()
            .find(|(name, _)| *name == lower)
            .map(|(_, c)| *c)
            .ok_or_else(|| ColorParseError(s.to_string()))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}{:02x}", self.r, self.g, self.b, self.a)
    }
}
