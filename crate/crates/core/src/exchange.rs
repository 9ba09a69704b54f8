//! The glyph exchange archive: a ZIP holding `info.json` plus one PNG per
//! sampled parameter value.
//!
//! ```text
//! { "name": "Horiz. Line",
//!   "short-name": "line",
//!   "author": "...",
//!   "e-mail": "...",
//!   "version": "1.5.3",
//!   "creation-time": "2025-03-07 09:31:46.397244",
//!   "images": [ [0.00, "00000.png"], [0.01, "00001.png"], ... ] }
//! ```
//!
//! Archives are written deterministically: `info.json` first, then images in
//! manifest order, all with the fixed DOS timestamp 1980-01-01 00:00.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::clock::{format_timestamp, SystemClock, Clock};
use crate::glyph::{png_dimensions, GlyphDesign, GlyphParam, Raster, RenderError};

pub const MANIFEST_NAME: &str = "info.json";
pub const ARCHIVE_EXTENSION: &str = "mglyph";
/// Grid used for a thorough evaluation.
pub const DEFAULT_SAMPLES: usize = 10_001;
/// Smaller grid for quick experiments.
pub const FAST_SAMPLES: usize = 2_001;
/// Fractional decimal digits kept for x values in the manifest.
pub const X_DECIMALS: i32 = 6;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl From<zip::result::ZipError> for ExchangeError {
    fn from(e: zip::result::ZipError) -> Self {
        match e {
            zip::result::ZipError::Io(io) => ExchangeError::Io(io),
            other => ExchangeError::Format(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestImage {
    pub x: f64,
    pub filename: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveManifest {
    pub name: String,
    pub short_name: String,
    pub author: String,
    pub email: String,
    pub version: String,
    pub creation_time: String,
    pub images: Vec<ManifestImage>,
}

/// On-disk shape of `info.json`; exactly these keys, no others.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: String,
    #[serde(rename = "short-name")]
    short_name: String,
    author: String,
    #[serde(rename = "e-mail")]
    email: String,
    version: String,
    #[serde(rename = "creation-time")]
    creation_time: String,
    images: Vec<(f64, String)>,
}

/// The manifest's key set, in serialization order.
pub const MANIFEST_KEYS: [&str; 7] = [
    "name",
    "short-name",
    "author",
    "e-mail",
    "version",
    "creation-time",
    "images",
];

/// Rounds to the manifest precision.
pub fn quantize_x(x: f64) -> f64 {
    let scale = 10f64.powi(X_DECIMALS);
    (x * scale).round() / scale
}

/// Decimal text for a manifest x: six digits, trailing zeros trimmed, at least two kept.
pub fn format_x(x: f64) -> String {
    let mut s = format!("{:.*}", X_DECIMALS as usize, x);
    let min_len = s.find('.').map(|dot| dot + 3).unwrap_or(s.len());
    while s.len() > min_len && s.ends_with('0') {
        s.pop();
    }
    s
}

/// `00000.png`, `00001.png`, ...
pub fn sample_filename(index: usize) -> String {
    format!("{index:05}.png")
}

/// `n` evenly spaced values from 0 to 100 inclusive, each the double nearest its decimal value.
pub fn uniform_xvalues(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| quantize_x((i as f64 * 100.0) / (n - 1) as f64))
            .collect(),
    }
}

impl ArchiveManifest {
    pub fn to_json(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serialization");
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"name\": {},", q(&self.name));
        let _ = writeln!(out, "  \"short-name\": {},", q(&self.short_name));
        let _ = writeln!(out, "  \"author\": {},", q(&self.author));
        let _ = writeln!(out, "  \"e-mail\": {},", q(&self.email));
        let _ = writeln!(out, "  \"version\": {},", q(&self.version));
        let _ = writeln!(out, "  \"creation-time\": {},", q(&self.creation_time));
        out.push_str("  \"images\": [");
        for (i, img) in self.images.iter().enumerate() {
            out.push_str(if i == 0 { "\n    " } else { ",\n    " });
            let _ = write!(out, "[{}, {}]", format_x(img.x), q(&img.filename));
        }
        out.push_str(if self.images.is_empty() { "]\n" } else { "\n  ]\n" });
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ExchangeError> {
        let raw: RawManifest = serde_json::from_str(text)
            .map_err(|e| ExchangeError::Format(format!("{MANIFEST_NAME}: {e}")))?;
        Ok(ArchiveManifest {
            name: raw.name,
            short_name: raw.short_name,
            author: raw.author,
            email: raw.email,
            version: raw.version,
            creation_time: raw.creation_time,
            images: raw
                .images
                .into_iter()
                .map(|(x, filename)| ManifestImage { x, filename })
                .collect(),
        })
    }

    /// Checks the manifest-only invariants, failing on the first violation.
    pub fn validate(&self) -> Result<(), ExchangeError> {
        let fail = |m: String| Err(ExchangeError::Validation(m));
        if self.images.is_empty() {
            return fail("image list is empty".into());
        }
        for img in &self.images {
            if !(0.0..=100.0).contains(&img.x) {
                return fail(format!(
                    "x value {} of {:?} is outside [0, 100]",
                    img.x, img.filename
                ));
            }
        }
        for (i, pair) in self.images.windows(2).enumerate() {
            if pair[1].x <= pair[0].x {
                return fail(format!(
                    "x values must be strictly increasing: entry {} [{}, {:?}] follows [{}, {:?}]",
                    i + 1,
                    pair[1].x,
                    pair[1].filename,
                    pair[0].x,
                    pair[0].filename
                ));
            }
        }
        let mut seen = HashSet::new();
        for img in &self.images {
            if !seen.insert(img.filename.as_str()) {
                return fail(format!("duplicate filename {:?}", img.filename));
            }
            if img.filename == MANIFEST_NAME {
                return fail(format!("image may not be named {MANIFEST_NAME:?}"));
            }
        }
        Ok(())
    }
}

/// Descriptive metadata stamped into an exported manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMetadata {
    pub name: String,
    pub short_name: String,
    pub author: String,
    pub email: String,
    pub version: String,
    /// Defaults to the export time when absent.
    pub creation_time: Option<String>,
}

impl ArchiveMetadata {
    pub fn from_design(design: &GlyphDesign) -> Self {
        let info = design.info();
        ArchiveMetadata {
            name: info.name.clone(),
            short_name: info.short_name.clone(),
            author: info.author.clone(),
            email: info.email.clone(),
            version: info.version.clone(),
            creation_time: None,
        }
    }
}

/// A validated archive held in memory: manifest plus PNG blobs in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphArchive {
    manifest: ArchiveManifest,
    images: Vec<Vec<u8>>,
    resolution: u32,
}

impl GlyphArchive {
    /// Assembles an archive, checking every invariant.
    pub fn new(manifest: ArchiveManifest, images: Vec<Vec<u8>>) -> Result<Self, ExchangeError> {
        manifest.validate()?;
        if images.len() != manifest.images.len() {
            return Err(ExchangeError::Integrity(format!(
                "{} images for {} manifest entries",
                images.len(),
                manifest.images.len()
            )));
        }
        let mut resolution = None;
        for (entry, bytes) in manifest.images.iter().zip(&images) {
            let side = square_side(&entry.filename, bytes)?;
            match resolution {
                None => resolution = Some(side),
                Some(r) if r != side => {
                    return Err(ExchangeError::Integrity(format!(
                        "mixed resolutions: {:?} is {side}px, earlier images are {r}px",
                        entry.filename
                    )));
                }
                _ => {}
            }
        }
        Ok(GlyphArchive {
            manifest,
            images,
            resolution: resolution.expect("non-empty manifest"),
        })
    }

    pub fn manifest(&self) -> &ArchiveManifest {
        &self.manifest
    }

    /// Pixels per side shared by all images.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn xvalues(&self) -> Vec<f64> {
        self.manifest.images.iter().map(|i| i.x).collect()
    }

    /// `(x, filename, png bytes)` of the sample at `index`.
    pub fn sample(&self, index: usize) -> Option<(f64, &str, &[u8])> {
        let entry = self.manifest.images.get(index)?;
        Some((entry.x, entry.filename.as_str(), self.images[index].as_slice()))
    }

    /// Index of the sample closest to `x`; ties go to the lower x.
    pub fn nearest_index(&self, x: f64) -> usize {
        let imgs = &self.manifest.images;
        nearest_by(imgs.len(), |i| imgs[i].x, x)
    }

    /// The stored sample closest to `x`, as `(snapped x, png bytes)`.
    pub fn nearest_sample(&self, x: GlyphParam) -> (f64, &[u8]) {
        let i = self.nearest_index(x.value());
        (self.manifest.images[i].x, &self.images[i])
    }

    /// Serializes to ZIP bytes.
    pub fn to_zip_bytes(&self) -> Result<Vec<u8>, ExchangeError> {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let stamp = DateTime::default();
        let json_opts = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Deflated)
            .compression_level(Some(6))
            .last_modified_time(stamp)
            .unix_permissions(0o644);
        let png_opts = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Stored)
            .last_modified_time(stamp)
            .unix_permissions(0o644);
        zip.start_file(MANIFEST_NAME, json_opts)?;
        zip.write_all(self.manifest.to_json().as_bytes())?;
        for (entry, bytes) in self.manifest.images.iter().zip(&self.images) {
            zip.start_file(entry.filename.as_str(), png_opts)?;
            zip.write_all(bytes)?;
        }
        Ok(zip.finish()?.into_inner())
    }

    /// Parses and validates ZIP bytes. Image headers are checked; pixel data is
    /// not decoded (see [`validation_report`] for the exhaustive check).
    pub fn from_zip_bytes(bytes: &[u8]) -> Result<Self, ExchangeError> {
        let mut zip = ZipArchive::new(Cursor::new(bytes))
            .map_err(|e| ExchangeError::Format(format!("not a readable ZIP archive: {e}")))?;
        let manifest = read_manifest(&mut zip)?;
        manifest.validate()?;
        let mut images = Vec::with_capacity(manifest.images.len());
        for entry in &manifest.images {
            let mut file = zip.by_name(&entry.filename).map_err(|_| {
                ExchangeError::Integrity(format!(
                    "manifest references {:?}, which is not in the archive",
                    entry.filename
                ))
            })?;
            let mut buf = Vec::with_capacity(file.size() as usize);
            file.read_to_end(&mut buf)?;
            images.push(buf);
        }
        GlyphArchive::new(manifest, images)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), ExchangeError> {
        let bytes = self.to_zip_bytes()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self, ExchangeError> {
        GlyphArchive::from_zip_bytes(&std::fs::read(path)?)
    }
}

/// Index into ascending `grid` of the value closest to `x`; ties go to the lower value.
///
/// Panics on an empty grid.
pub fn nearest_on_grid(grid: &[f64], x: f64) -> usize {
    nearest_by(grid.len(), |i| grid[i], x)
}

fn nearest_by(len: usize, at: impl Fn(usize) -> f64, x: f64) -> usize {
    assert!(len > 0, "nearest sample of an empty grid");
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if at(mid) < x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo == 0 {
        return 0;
    }
    if lo == len {
        return len - 1;
    }
    if x - at(lo - 1) <= at(lo) - x {
        lo - 1
    } else {
        lo
    }
}

fn read_manifest<R: Read + std::io::Seek>(
    zip: &mut ZipArchive<R>,
) -> Result<ArchiveManifest, ExchangeError> {
    let mut file = zip
        .by_name(MANIFEST_NAME)
        .map_err(|_| ExchangeError::Format(format!("archive has no {MANIFEST_NAME}")))?;
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|e| ExchangeError::Format(format!("{MANIFEST_NAME} is not UTF-8 text: {e}")))?;
    ArchiveManifest::from_json(&text)
}

fn square_side(filename: &str, bytes: &[u8]) -> Result<u32, ExchangeError> {
    let (w, h) = png_dimensions(bytes).map_err(|e| {
        ExchangeError::Integrity(format!("{filename:?} is not a valid PNG: {e}"))
    })?;
    if w != h || w == 0 {
        return Err(ExchangeError::Integrity(format!(
            "{filename:?} is {w}x{h}, expected a square image"
        )));
    }
    Ok(w)
}

/// Renders `design` at each x and packages the result.
///
/// `xvalues` must be strictly increasing within `[0, 100]`; values are first
/// rounded to the manifest precision. Samples render in parallel.
pub fn build_archive(
    design: &GlyphDesign,
    xvalues: &[f64],
    ppi: u32,
    metadata: &ArchiveMetadata,
) -> Result<GlyphArchive, ExchangeError> {
    let xs: Vec<f64> = xvalues.iter().map(|&x| quantize_x(x)).collect();
    let manifest = ArchiveManifest {
        name: metadata.name.clone(),
        short_name: metadata.short_name.clone(),
        author: metadata.author.clone(),
        email: metadata.email.clone(),
        version: metadata.version.clone(),
        creation_time: metadata
            .creation_time
            .clone()
            .unwrap_or_else(|| format_timestamp(SystemClock.now())),
        images: xs
            .iter()
            .enumerate()
            .map(|(i, &x)| ManifestImage {
                x,
                filename: sample_filename(i),
            })
            .collect(),
    };
    if xs.iter().zip(xvalues).any(|(q, x)| !(0.0..=100.0).contains(x) || q.is_nan()) {
        let bad = xvalues.iter().find(|x| !(0.0..=100.0).contains(*x)).copied().unwrap_or(f64::NAN);
        return Err(ExchangeError::Validation(format!("x value {bad} is outside [0, 100]")));
    }
    manifest.validate()?;
    if ppi == 0 {
        return Err(ExchangeError::Validation("ppi must be at least 1".into()));
    }
    let images = xs
        .par_iter()
        .map(|&x| -> Result<Vec<u8>, ExchangeError> {
            let param = GlyphParam::new(x).expect("validated range");
            let raster: Raster = design.render(param, ppi)?;
            raster
                .encode_png()
                .map_err(|e| ExchangeError::Integrity(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    GlyphArchive::new(manifest, images)
}

/// Renders, packages and writes an archive to `destination`.
pub fn export_archive(
    design: &GlyphDesign,
    xvalues: &[f64],
    ppi: u32,
    metadata: &ArchiveMetadata,
    destination: &Path,
) -> Result<GlyphArchive, ExchangeError> {
    let archive = build_archive(design, xvalues, ppi, metadata)?;
    archive.write_to(destination)?;
    Ok(archive)
}

pub fn import_archive(source: &Path) -> Result<GlyphArchive, ExchangeError> {
    GlyphArchive::read_from(source)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of every archive check, run to completion instead of stopping at
/// the first failure. Images are fully decoded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, failures: Vec<String>, ok: impl Into<String>) {
        let passed = failures.is_empty();
        let detail = if passed {
            ok.into()
        } else {
            let more = failures.len().saturating_sub(3);
            let mut d = failures.into_iter().take(3).collect::<Vec<_>>().join("; ");
            if more > 0 {
                let _ = write!(d, "; and {more} more");
            }
            d
        };
        self.checks.push(CheckResult { name, passed, detail });
    }
}

pub fn validation_report(bytes: &[u8]) -> ValidationReport {
    let mut report = ValidationReport { checks: Vec::new() };
    let mut zip = match ZipArchive::new(Cursor::new(bytes)) {
        Ok(z) => {
            report.push("zip container", vec![], format!("{} entries", z.len()));
            z
        }
        Err(e) => {
            report.push("zip container", vec![e.to_string()], "");
            return report;
        }
    };
    let manifest = match read_manifest(&mut zip) {
        Ok(m) => {
            report.push("manifest", vec![], "info.json parsed with the exact key set");
            m
        }
        Err(e) => {
            report.push("manifest", vec![e.to_string()], "");
            return report;
        }
    };
    let imgs = &manifest.images;
    report.push(
        "non-empty image list",
        if imgs.is_empty() { vec!["no images listed".into()] } else { vec![] },
        format!("{} images", imgs.len()),
    );
    report.push(
        "x within [0, 100]",
        imgs.iter()
            .filter(|i| !(0.0..=100.0).contains(&i.x))
            .map(|i| format!("{} ({:?})", i.x, i.filename))
            .collect(),
        "all in range",
    );
    report.push(
        "x strictly increasing",
        imgs.windows(2)
            .filter(|w| w[1].x <= w[0].x)
            .map(|w| {
                if w[1].x == w[0].x {
                    format!("duplicate x {} at {:?} and {:?}", w[0].x, w[0].filename, w[1].filename)
                } else {
                    format!("[{}, {:?}] follows [{}, {:?}]", w[1].x, w[1].filename, w[0].x, w[0].filename)
                }
            })
            .collect(),
        "sorted without duplicates",
    );
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for i in imgs {
        *counts.entry(i.filename.as_str()).or_default() += 1;
    }
    let mut dups: Vec<String> = counts
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(f, n)| format!("{f:?} listed {n} times"))
        .collect();
    dups.sort();
    report.push("unique filenames", dups, "no duplicates");

    let mut missing = Vec::new();
    let mut undecodable = Vec::new();
    let mut non_square = Vec::new();
    let mut sides: Vec<(u32, &str)> = Vec::new();
    for entry in imgs {
        let mut buf = Vec::new();
        match zip.by_name(&entry.filename) {
            Ok(mut f) => {
                if let Err(e) = f.read_to_end(&mut buf) {
                    undecodable.push(format!("{:?}: {e}", entry.filename));
                    continue;
                }
            }
            Err(_) => {
                missing.push(format!("{:?} is missing", entry.filename));
                continue;
            }
        }
        match Raster::decode_png(&buf) {
            Ok(r) => sides.push((r.side(), entry.filename.as_str())),
            Err(crate::glyph::PngError::Unsupported(msg)) if msg.contains("not square") => {
                non_square.push(format!("{:?} is {msg}", entry.filename))
            }
            Err(e) => undecodable.push(format!("{:?}: {e}", entry.filename)),
        }
    }
    report.push("referenced files present", missing, "all present");
    report.push("images decode", undecodable, "all decode as PNG");
    report.push("images square", non_square, "all square");
    let mixed: Vec<String> = match sides.first() {
        Some(&(first, _)) => sides
            .iter()
            .filter(|(s, _)| *s != first)
            .map(|(s, f)| format!("{f:?} is {s}px, first image is {first}px"))
            .collect(),
        None => vec![],
    };
    let uniform = sides.first().map(|s| format!("{}px", s.0)).unwrap_or_default();
    report.push("uniform resolution", mixed, uniform);
    report
}
