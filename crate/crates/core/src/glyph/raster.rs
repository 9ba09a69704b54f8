//! Square RGBA rasters and their PNG encoding.

use std::io::Cursor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PngError {
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout: {0}")]
    Unsupported(String),
}

/// Quarter-turn multiples supported by the lossless rotation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightAngle {
    Quarter,
    Half,
}

impl RightAngle {
    pub fn degrees(self) -> u32 {
        match self {
            RightAngle::Quarter => 90,
            RightAngle::Half => 180,
        }
    }
}

/// A square image in straight-alpha RGBA8, rows top to bottom.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    side: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster").field("side", &self.side).finish_non_exhaustive()
    }
}

impl Raster {
    pub fn transparent(side: u32) -> Self {
        Raster {
            side,
            pixels: vec![0; side as usize * side as usize * 4],
        }
    }

    /// Wraps an RGBA8 buffer. Returns `None` if its length is not `side * side * 4`.
    pub fn from_rgba(side: u32, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == side as usize * side as usize * 4).then_some(Raster { side, pixels })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, col: u32, row: u32) -> [u8; 4] {
        let i = (row as usize * self.side as usize + col as usize) * 4;
        [
            self.pixels[i],
            self.pixels[i + 1],
            self.pixels[i + 2],
            self.pixels[i + 3],
        ]
    }

    /// Number of pixels with non-zero alpha.
    pub fn opaque_count(&self) -> usize {
        self.pixels.chunks_exact(4).filter(|p| p[3] != 0).count()
    }

    /// Rotates counter-clockwise by the given angle. This is a pure pixel permutation.
    pub fn rotated(&self, angle: RightAngle) -> Raster {
        let n = self.side as usize;
        let mut out = vec![0u8; self.pixels.len()];
        for row in 0..n {
            for col in 0..n {
                let (dst_col, dst_row) = match angle {
                    RightAngle::Half => (n - 1 - col, n - 1 - row),
                    RightAngle::Quarter => (row, n - 1 - col),
                };
                let src = (row * n + col) * 4;
                let dst = (dst_row * n + dst_col) * 4;
                out[dst..dst + 4].copy_from_slice(&self.pixels[src..src + 4]);
            }
        }
        Raster {
            side: self.side,
            pixels: out,
        }
    }

    /// Largest absolute per-channel difference, or `None` when the sizes differ.
    pub fn max_abs_diff(&self, other: &Raster) -> Option<u8> {
        if self.side != other.side {
            return None;
        }
        Some(
            self.pixels
                .iter()
                .zip(&other.pixels)
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap_or(0),
        )
    }

    /// Encodes as an 8-bit RGBA, non-interlaced PNG.
    pub fn encode_png(&self) -> Result<Vec<u8>, PngError> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.side, self.side);
            encoder.set_color(png::ColorType::Rgba);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_compression(png::Compression::Fast);
            let mut writer = encoder.write_header()?;
            writer.write_image_data(&self.pixels)?;
            writer.finish()?;
        }
        Ok(out)
    }

    /// Decodes a PNG into RGBA8. Grayscale, RGB and palette images are expanded.
    pub fn decode_png(bytes: &[u8]) -> Result<Raster, PngError> {
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info()?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| PngError::Unsupported("image too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf)?;
        if info.width != info.height {
            return Err(PngError::Unsupported(format!(
                "{}x{} is not square",
                info.width, info.height
            )));
        }
        buf.truncate(info.buffer_size());
        let pixels = match info.color_type {
            png::ColorType::Rgba => buf,
            png::ColorType::Rgb => buf
                .chunks_exact(3)
                .flat_map(|p| [p[0], p[1], p[2], 255])
                .collect(),
            png::ColorType::GrayscaleAlpha => buf
                .chunks_exact(2)
                .flat_map(|p| [p[0], p[0], p[0], p[1]])
                .collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
            other => {
                return Err(PngError::Unsupported(format!("color type {other:?}")));
            }
        };
        Raster::from_rgba(info.width, pixels)
            .ok_or_else(|| PngError::Unsupported("unexpected buffer size".into()))
    }
}

/// Reads only the PNG header and returns `(width, height)`.
pub fn png_dimensions(bytes: &[u8]) -> Result<(u32, u32), PngError> {
    let reader = png::Decoder::new(Cursor::new(bytes)).read_info()?;
    let info = reader.info();
    Ok((info.width, info.height))
}
