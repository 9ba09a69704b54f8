//! Display-list canvas over the square `[-1, 1] x [-1, 1]`, origin at the
//! center, y pointing up.
//!
//! Drawing calls only record primitives. [`Canvas::rasterize`] turns the list
//! into pixels by supersampling each pixel on a regular 4x4 grid, then clips
//! the result to the rounded-square glyph boundary. Sample positions are
//! computed from integers, so the grid is exactly symmetric under negation
//! and under quarter turns: shapes with those symmetries rasterize to
//! symmetric pixels.
//!
//! There is intentionally no text primitive.

use thiserror::Error;

use super::color::Color;
use super::raster::Raster;

/// Samples per pixel along each axis.
const SUPERSAMPLE: usize = 4;
const SAMPLES_PER_PIXEL: usize = SUPERSAMPLE * SUPERSAMPLE;

/// Side length of the canvas in canvas units.
pub const CANVAS_SIDE: f64 = 2.0;
/// Corner radius of the glyph boundary: 10 % of the side.
pub const CORNER_RADIUS: f64 = 0.1 * CANVAS_SIDE;

/// Converts thousandths of the canvas side into canvas units (`p(30.0)` is 3 % of the side).
pub fn p(thousandths: f64) -> f64 {
    thousandths * CANVAS_SIDE / 1000.0
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DrawError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("negative {0}")]
    Negative(&'static str),
    #[error("{0} needs at least {1} points")]
    TooFewPoints(&'static str, usize),
    #[error("{0}")]
    Custom(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Point at `radius` from the origin, `angle` radians counter-clockwise from +x.
    pub fn polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Uniform-scale affine transform.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Transform {
    m: [f64; 6],
    scale: f64,
}

impl Transform {
    const IDENTITY: Transform = Transform {
        m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        scale: 1.0,
    };

    fn apply(&self, p: Point) -> Point {
        if *self == Transform::IDENTITY {
            return p;
        }
        let m = &self.m;
        Point::new(
            m[0] * p.x + m[1] * p.y + m[2],
            m[3] * p.x + m[4] * p.y + m[5],
        )
    }

    fn then(&self, inner: [f64; 6], scale: f64) -> Transform {
        let a = &self.m;
        let b = &inner;
        Transform {
            m: [
                a[0] * b[0] + a[1] * b[3],
                a[0] * b[1] + a[1] * b[4],
                a[0] * b[2] + a[1] * b[5] + a[2],
                a[3] * b[0] + a[4] * b[3],
                a[3] * b[1] + a[4] * b[4],
                a[3] * b[2] + a[4] * b[5] + a[5],
            ],
            scale: self.scale * scale,
        }
    }
}

/// Geometry of one recorded primitive, in canvas coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disc { center: Point, radius: f64 },
    /// Annulus centered on `radius` with the given stroke width.
    Ring { center: Point, radius: f64, width: f64 },
    /// Thick segment with butt caps.
    Segment { from: Point, to: Point, width: f64 },
    Rect { min: Point, max: Point },
    /// Filled polygon, non-zero winding rule.
    Polygon { points: Vec<Point> },
    Union(Vec<Shape>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PixelCover {
    Empty,
    Full,
    Partial,
}

impl Shape {
    fn contains(&self, u: f64, v: f64) -> bool {
        match self {
            Shape::Disc { center, radius } => {
                let (du, dv) = (u - center.x, v - center.y);
                du * du + dv * dv <= radius * radius
            }
            Shape::Ring {
                center,
                radius,
                width,
            } => {
                let (inner, outer) = ring_bounds(*radius, *width);
                let (du, dv) = (u - center.x, v - center.y);
                let d2 = du * du + dv * dv;
                inner * inner <= d2 && d2 <= outer * outer
            }
            Shape::Segment { from, to, width } => match segment_frame(*from, *to) {
                Some((mid, dir, half_len)) => {
                    let (qu, qv) = (u - mid.x, v - mid.y);
                    let along = qu * dir.x + qv * dir.y;
                    let across = qu * dir.y - qv * dir.x;
                    along.abs() <= half_len && across.abs() <= width / 2.0
                }
                None => false,
            },
            Shape::Rect { min, max } => min.x <= u && u <= max.x && min.y <= v && v <= max.y,
            Shape::Polygon { points } => winding_number(points, u, v) != 0,
            Shape::Union(parts) => parts.iter().any(|s| s.contains(u, v)),
        }
    }

    /// Conservative classification of the axis-aligned pixel square centered
    /// at `(cu, cv)` with half side `h`.
    fn classify(&self, cu: f64, cv: f64, h: f64) -> PixelCover {
        // Slightly enlarged radius of the pixel square so that floating-point
        // rounding can never turn a `Full` or `Empty` verdict wrong.
        let reach = h * std::f64::consts::SQRT_2 * (1.0 + 1e-9) + 1e-12;
        match self {
            Shape::Disc { center, radius } => {
                let d = (cu - center.x).hypot(cv - center.y);
                if d - reach > *radius {
                    PixelCover::Empty
                } else if d + reach < *radius {
                    PixelCover::Full
                } else {
                    PixelCover::Partial
                }
            }
            Shape::Ring {
                center,
                radius,
                width,
            } => {
                let (inner, outer) = ring_bounds(*radius, *width);
                let d = (cu - center.x).hypot(cv - center.y);
                if d - reach > outer || d + reach < inner {
                    PixelCover::Empty
                } else if d - reach > inner && d + reach < outer {
                    PixelCover::Full
                } else {
                    PixelCover::Partial
                }
            }
            Shape::Segment { from, to, width } => match segment_frame(*from, *to) {
                Some((mid, dir, half_len)) => {
                    let (qu, qv) = (cu - mid.x, cv - mid.y);
                    let along = (qu * dir.x + qv * dir.y).abs();
                    let across = (qu * dir.y - qv * dir.x).abs();
                    let half_w = width / 2.0;
                    if along - reach > half_len || across - reach > half_w {
                        PixelCover::Empty
                    } else if along + reach < half_len && across + reach < half_w {
                        PixelCover::Full
                    } else {
                        PixelCover::Partial
                    }
                }
                None => PixelCover::Empty,
            },
            Shape::Rect { min, max } => {
                let m = reach;
                if cu + m < min.x || cu - m > max.x || cv + m < min.y || cv - m > max.y {
                    PixelCover::Empty
                } else if cu - m > min.x && cu + m < max.x && cv - m > min.y && cv + m < max.y {
                    PixelCover::Full
                } else {
                    PixelCover::Partial
                }
            }
            Shape::Polygon { .. } => {
                let (lo, hi) = self.bounds();
                if cu + reach < lo.x || cu - reach > hi.x || cv + reach < lo.y || cv - reach > hi.y
                {
                    PixelCover::Empty
                } else {
                    PixelCover::Partial
                }
            }
            Shape::Union(parts) => {
                let mut all_empty = true;
                for part in parts {
                    match part.classify(cu, cv, h) {
                        PixelCover::Full => return PixelCover::Full,
                        PixelCover::Partial => all_empty = false,
                        PixelCover::Empty => {}
                    }
                }
                if all_empty {
                    PixelCover::Empty
                } else {
                    PixelCover::Partial
                }
            }
        }
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Point, Point) {
        match self {
            Shape::Disc { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
            Shape::Ring {
                center,
                radius,
                width,
            } => {
                let (_, outer) = ring_bounds(*radius, *width);
                (
                    Point::new(center.x - outer, center.y - outer),
                    Point::new(center.x + outer, center.y + outer),
                )
            }
            Shape::Segment { from, to, width } => {
                let w = width / 2.0;
                (
                    Point::new(from.x.min(to.x) - w, from.y.min(to.y) - w),
                    Point::new(from.x.max(to.x) + w, from.y.max(to.y) + w),
                )
            }
            Shape::Rect { min, max } => (*min, *max),
            Shape::Polygon { points } => points.iter().fold(
                (
                    Point::new(f64::INFINITY, f64::INFINITY),
                    Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                ),
                |(lo, hi), p| {
                    (
                        Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                        Point::new(hi.x.max(p.x), hi.y.max(p.y)),
                    )
                },
            ),
            Shape::Union(parts) => parts.iter().map(Shape::bounds).fold(
                (
                    Point::new(f64::INFINITY, f64::INFINITY),
                    Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                ),
                |(lo, hi), (a, b)| {
                    (
                        Point::new(lo.x.min(a.x), lo.y.min(a.y)),
                        Point::new(hi.x.max(b.x), hi.y.max(b.y)),
                    )
                },
            ),
        }
    }
}

fn ring_bounds(radius: f64, width: f64) -> (f64, f64) {
    ((radius - width / 2.0).max(0.0), radius + width / 2.0)
}

/// Midpoint, unit direction and half length. `None` for degenerate segments.
fn segment_frame(from: Point, to: Point) -> Option<(Point, Point, f64)> {
    let hx = (to.x - from.x) / 2.0;
    let hy = (to.y - from.y) / 2.0;
    let half_len = hx.hypot(hy);
    if half_len == 0.0 {
        return None;
    }
    let mid = Point::new(from.x + hx, from.y + hy);
    Some((mid, Point::new(hx / half_len, hy / half_len), half_len))
}

fn winding_number(points: &[Point], u: f64, v: f64) -> i32 {
    let mut wn = 0;
    let n = points.len();
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let cross = (b.x - a.x) * (v - a.y) - (u - a.x) * (b.y - a.y);
        if a.y <= v {
            if b.y > v && cross > 0.0 {
                wn += 1;
            }
        } else if b.y <= v && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// A shape together with the color it is filled with.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub color: Color,
}

/// Drawing surface handed to glyph procedures.
#[derive(Debug, Clone)]
pub struct Canvas {
    resolution: u32,
    transform: Transform,
    saved: Vec<Transform>,
    primitives: Vec<Primitive>,
}

impl Canvas {
    pub fn new(resolution: u32) -> Self {
        Canvas {
            resolution,
            transform: Transform::IDENTITY,
            saved: Vec::new(),
            primitives: Vec::new(),
        }
    }

    /// Pixels per side of the raster this canvas will be rendered to.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn save(&mut self) {
        self.saved.push(self.transform);
    }

    pub fn restore(&mut self) {
        if let Some(t) = self.saved.pop() {
            self.transform = t;
        }
    }

    pub fn translate(&mut self, dx: f64, dy: f64) {
        self.transform = self.transform.then([1.0, 0.0, dx, 0.0, 1.0, dy], 1.0);
    }

    /// Counter-clockwise rotation by `angle` radians about the current origin.
    pub fn rotate(&mut self, angle: f64) {
        let (s, c) = angle.sin_cos();
        self.transform = self.transform.then([c, -s, 0.0, s, c, 0.0], 1.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.transform = self
            .transform
            .then([factor, 0.0, 0.0, 0.0, factor, 0.0], factor.abs());
    }

    fn point(&self, p: impl Into<Point>) -> Result<Point, DrawError> {
        let p = self.transform.apply(p.into());
        if p.is_finite() {
            Ok(p)
        } else {
            Err(DrawError::NonFinite("coordinate"))
        }
    }

    fn length(&self, value: f64, what: &'static str) -> Result<f64, DrawError> {
        if !value.is_finite() {
            return Err(DrawError::NonFinite(what));
        }
        if value < 0.0 {
            return Err(DrawError::Negative(what));
        }
        Ok(value * self.transform.scale)
    }

    fn push(&mut self, shape: Shape, color: Color) {
        if color.a != 0 {
            self.primitives.push(Primitive { shape, color });
        }
    }

    /// Straight segment with butt caps.
    pub fn line(
        &mut self,
        from: impl Into<Point>,
        to: impl Into<Point>,
        color: Color,
        width: f64,
    ) -> Result<(), DrawError> {
        let from = self.point(from)?;
        let to = self.point(to)?;
        let width = self.length(width, "width")?;
        self.push(Shape::Segment { from, to, width }, color);
        Ok(())
    }

    /// Connected segments with round joins.
    pub fn polyline(
        &mut self,
        points: &[Point],
        closed: bool,
        color: Color,
        width: f64,
    ) -> Result<(), DrawError> {
        if points.len() < 2 {
            return Err(DrawError::TooFewPoints("polyline", 2));
        }
        let pts = points
            .iter()
            .map(|p| self.point(*p))
            .collect::<Result<Vec<_>, _>>()?;
        let width = self.length(width, "width")?;
        let n = pts.len();
        let seg_count = if closed { n } else { n - 1 };
        let mut parts = Vec::with_capacity(seg_count * 2);
        for i in 0..seg_count {
            parts.push(Shape::Segment {
                from: pts[i],
                to: pts[(i + 1) % n],
                width,
            });
        }
        let joins = if closed { 0..n } else { 1..n - 1 };
        for i in joins {
            parts.push(Shape::Disc {
                center: pts[i],
                radius: width / 2.0,
            });
        }
        self.push(Shape::Union(parts), color);
        Ok(())
    }

    /// Filled circle.
    pub fn circle(
        &mut self,
        center: impl Into<Point>,
        radius: f64,
        color: Color,
    ) -> Result<(), DrawError> {
        let center = self.point(center)?;
        let radius = self.length(radius, "radius")?;
        self.push(Shape::Disc { center, radius }, color);
        Ok(())
    }

    /// Circle outline of the given stroke width.
    pub fn ring(
        &mut self,
        center: impl Into<Point>,
        radius: f64,
        color: Color,
        width: f64,
    ) -> Result<(), DrawError> {
        let center = self.point(center)?;
        let radius = self.length(radius, "radius")?;
        let width = self.length(width, "width")?;
        self.push(
            Shape::Ring {
                center,
                radius,
                width,
            },
            color,
        );
        Ok(())
    }

    /// Filled axis-aligned rectangle spanned by two corners. Under a rotating
    /// transform the rectangle becomes a polygon.
    pub fn rect(
        &mut self,
        corner: impl Into<Point>,
        opposite: impl Into<Point>,
        color: Color,
    ) -> Result<(), DrawError> {
        let (a, b) = (corner.into(), opposite.into());
        let m = self.transform.m;
        if m[1] == 0.0 && m[3] == 0.0 {
            let a = self.point(a)?;
            let b = self.point(b)?;
            let min = Point::new(a.x.min(b.x), a.y.min(b.y));
            let max = Point::new(a.x.max(b.x), a.y.max(b.y));
            self.push(Shape::Rect { min, max }, color);
            Ok(())
        } else {
            let corners = [a, Point::new(b.x, a.y), b, Point::new(a.x, b.y)];
            self.polygon(&corners, color)
        }
    }

    /// Filled polygon (non-zero winding).
    pub fn polygon(&mut self, points: &[Point], color: Color) -> Result<(), DrawError> {
        if points.len() < 3 {
            return Err(DrawError::TooFewPoints("polygon", 3));
        }
        let points = points
            .iter()
            .map(|p| self.point(*p))
            .collect::<Result<Vec<_>, _>>()?;
        self.push(Shape::Polygon { points }, color);
        Ok(())
    }

    /// Rasterizes the recorded primitives at `self.resolution()` pixels per side
    /// and clips to the rounded-square boundary.
    pub fn rasterize(&self) -> Raster {
        let side = self.resolution as usize;
        if side == 0 {
            return Raster::transparent(0);
        }
        let grid = SampleGrid::new(side);
        let mut acc = vec![[0f32; 4]; side * side];
        for prim in &self.primitives {
            grid.paint(&mut acc, prim);
        }
        grid.clip_corners(&mut acc);
        let mut out = Vec::with_capacity(side * side * 4);
        for px in &acc {
            let a = px[3];
            if a <= 0.0 {
                out.extend_from_slice(&[0, 0, 0, 0]);
                continue;
            }
            let to_u8 = |c: f32| (c / a * 255.0).round().clamp(0.0, 255.0) as u8;
            out.extend_from_slice(&[
                to_u8(px[0]),
                to_u8(px[1]),
                to_u8(px[2]),
                (a * 255.0).round().clamp(0.0, 255.0) as u8,
            ]);
        }
        Raster::from_rgba(self.resolution, out).expect("buffer sized from resolution")
    }
}

/// Sample coordinates for one raster size.
struct SampleGrid {
    side: usize,
    /// Canvas x of each sample column, left to right.
    xs: Vec<f64>,
    /// Canvas y of each sample row, top to bottom.
    ys: Vec<f64>,
    /// Half the pixel side in canvas units.
    half_pixel: f64,
}

impl SampleGrid {
    fn new(side: usize) -> Self {
        let m = (side * SUPERSAMPLE) as i64;
        let xs = (0..m).map(|s| (2 * s + 1 - m) as f64 / m as f64).collect();
        let ys = (0..m).map(|s| (m - 1 - 2 * s) as f64 / m as f64).collect();
        SampleGrid {
            side,
            xs,
            ys,
            half_pixel: 1.0 / side as f64,
        }
    }

    fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        let n = self.side as i64;
        (
            (2 * col as i64 + 1 - n) as f64 / n as f64,
            (n - 1 - 2 * row as i64) as f64 / n as f64,
        )
    }

    /// Pixel index range covering the canvas interval `[lo, hi]` along x.
    fn col_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = self.side as f64;
        let a = (((lo + 1.0) / 2.0 * n).floor() - 1.0).max(0.0);
        let b = (((hi + 1.0) / 2.0 * n).ceil() + 1.0).min(n);
        if !(a < b) {
            return 0..0;
        }
        a as usize..b as usize
    }

    fn row_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        self.col_range(-hi, -lo)
    }

    fn coverage(&self, shape: &Shape, col: usize, row: usize) -> usize {
        let (cu, cv) = self.pixel_center(col, row);
        match shape.classify(cu, cv, self.half_pixel) {
            PixelCover::Empty => 0,
            PixelCover::Full => SAMPLES_PER_PIXEL,
            PixelCover::Partial => {
                let mut count = 0;
                for sy in 0..SUPERSAMPLE {
                    let v = self.ys[row * SUPERSAMPLE + sy];
                    for sx in 0..SUPERSAMPLE {
                        if shape.contains(self.xs[col * SUPERSAMPLE + sx], v) {
                            count += 1;
                        }
                    }
                }
                count
            }
        }
    }

    fn paint(&self, acc: &mut [[f32; 4]], prim: &Primitive) {
        let (lo, hi) = prim.shape.bounds();
        if !(lo.x <= hi.x && lo.y <= hi.y) {
            return;
        }
        let c = prim.color;
        let alpha = c.a as f32 / 255.0;
        let rgb = [c.r as f32 / 255.0, c.g as f32 / 255.0, c.b as f32 / 255.0];
        for row in self.row_range(lo.y, hi.y) {
            for col in self.col_range(lo.x, hi.x) {
                let cov = self.coverage(&prim.shape, col, row);
                if cov == 0 {
                    continue;
                }
                let a = alpha * cov as f32 / SAMPLES_PER_PIXEL as f32;
                let px = &mut acc[row * self.side + col];
                let keep = 1.0 - a;
                px[0] = rgb[0] * a + px[0] * keep;
                px[1] = rgb[1] * a + px[1] * keep;
                px[2] = rgb[2] * a + px[2] * keep;
                px[3] = a + px[3] * keep;
            }
        }
    }

    /// Multiplies every pixel near a corner by its coverage of the rounded square.
    fn clip_corners(&self, acc: &mut [[f32; 4]]) {
        let inset = 1.0 - CORNER_RADIUS;
        let boundary = Shape::Union(vec![
            Shape::Rect {
                min: Point::new(-1.0, -inset),
                max: Point::new(1.0, inset),
            },
            Shape::Rect {
                min: Point::new(-inset, -1.0),
                max: Point::new(inset, 1.0),
            },
            Shape::Disc {
                center: Point::new(inset, inset),
                radius: CORNER_RADIUS,
            },
            Shape::Disc {
                center: Point::new(-inset, inset),
                radius: CORNER_RADIUS,
            },
            Shape::Disc {
                center: Point::new(-inset, -inset),
                radius: CORNER_RADIUS,
            },
            Shape::Disc {
                center: Point::new(inset, -inset),
                radius: CORNER_RADIUS,
            },
        ]);
        let band = self.col_range(-1.0, -inset);
        let k = band.end.min(self.side);
        let edges: Vec<usize> = (0..k).chain(self.side.saturating_sub(k).max(k)..self.side).collect();
        for &row in &edges {
            for &col in &edges {
                let cov = self.coverage(&boundary, col, row);
                if cov == SAMPLES_PER_PIXEL {
                    continue;
                }
                let f = cov as f32 / SAMPLES_PER_PIXEL as f32;
                for ch in acc[row * self.side + col].iter_mut() {
                    *ch *= f;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyph::raster::RightAngle;

    fn disc_canvas(res: u32) -> Canvas {
        let mut c = Canvas::new(res);
        c.circle((0.0, 0.0), 0.5, Color::BLACK).unwrap();
        c
    }

    #[test]
    fn thousandths_unit() {
        assert!((p(30.0) - 0.06).abs() < 1e-15);
    }

    #[test]
    fn empty_canvas_is_transparent() {
        let r = Canvas::new(20).rasterize();
        assert_eq!(r.side(), 20);
        assert!(r.as_bytes().iter().all(|&b| b == 0));
    }

    #[test]
    fn centered_disc_is_symmetric_under_rotation() {
        for res in [31, 64, 100] {
            let r = disc_canvas(res).rasterize();
            assert_eq!(r.rotated(RightAngle::Half), r);
            assert_eq!(r.rotated(RightAngle::Quarter), r);
        }
    }

    #[test]
    fn disc_area_matches_geometry() {
        let r = disc_canvas(400).rasterize();
        let coverage: f64 = r
            .as_bytes()
            .chunks_exact(4)
            .map(|p| p[3] as f64 / 255.0)
            .sum();
        let expected = std::f64::consts::PI * 0.25 / 4.0 * 400.0 * 400.0;
        assert!((coverage - expected).abs() / expected < 0.005, "{coverage} vs {expected}");
    }

    #[test]
    fn full_rect_is_clipped_to_rounded_square() {
        let mut c = Canvas::new(100);
        c.rect((-1.0, -1.0), (1.0, 1.0), Color::BLACK).unwrap();
        let r = c.rasterize();
        assert_eq!(r.pixel(0, 0)[3], 0);
        assert_eq!(r.pixel(99, 99)[3], 0);
        assert_eq!(r.pixel(50, 0)[3], 255);
        assert_eq!(r.pixel(0, 50)[3], 255);
        // corner radius is 10 px, centered on pixel corner (10, 10)
        assert_eq!(r.pixel(1, 1)[3], 0);
        assert_eq!(r.pixel(2, 2)[3], 0);
        let partial = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .filter(|&(i, j)| (1..255).contains(&r.pixel(i, j)[3]))
            .count();
        assert!(partial > 0);
        assert_eq!(r.pixel(4, 4)[3], 255);
    }

    #[test]
    fn y_axis_points_up() {
        let mut c = Canvas::new(10);
        c.rect((-0.2, 0.6), (0.2, 1.0), Color::BLACK).unwrap();
        let r = c.rasterize();
        assert_eq!(r.pixel(5, 0)[3], 255);
        assert_eq!(r.pixel(5, 9)[3], 0);
    }

    #[test]
    fn compositing_is_source_over() {
        let mut c = Canvas::new(4);
        c.rect((-1.0, -1.0), (1.0, 1.0), Color::rgb(255, 0, 0)).unwrap();
        c.rect((-1.0, -1.0), (1.0, 1.0), Color::rgba(0, 0, 255, 128)).unwrap();
        let px = c.rasterize().pixel(1, 1);
        assert_eq!(px[3], 255);
        assert!((px[0] as i32 - 127).abs() <= 1 && (px[2] as i32 - 128).abs() <= 1, "{px:?}");
    }

    #[test]
    fn transforms_apply_to_points_and_lengths() {
        let mut c = Canvas::new(10);
        c.save();
        c.translate(0.5, 0.0);
        c.scale(0.5);
        c.circle((0.0, 0.0), 0.2, Color::BLACK).unwrap();
        c.restore();
        c.circle((0.0, 0.0), 0.2, Color::BLACK).unwrap();
        match &c.primitives()[0].shape {
            Shape::Disc { center, radius } => {
                assert_eq!(*center, Point::new(0.5, 0.0));
                assert_eq!(*radius, 0.1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            c.primitives()[1].shape,
            Shape::Disc {
                center: Point::ORIGIN,
                radius: 0.2
            }
        );
    }

    #[test]
    fn invalid_input_is_rejected() {
        let mut c = Canvas::new(10);
        assert_eq!(
            c.circle((f64::NAN, 0.0), 0.1, Color::BLACK),
            Err(DrawError::NonFinite("coordinate"))
        );
        assert_eq!(
            c.line((0.0, 0.0), (1.0, 0.0), Color::BLACK, -1.0),
            Err(DrawError::Negative("width"))
        );
        assert!(c.polygon(&[Point::ORIGIN, Point::ORIGIN], Color::BLACK).is_err());
        assert!(c.primitives().is_empty());
    }

    #[test]
    fn zero_length_segment_draws_nothing() {
        let mut c = Canvas::new(50);
        c.line((0.01, 0.0), (0.01, 0.0), Color::BLACK, 0.06).unwrap();
        assert_eq!(c.rasterize().opaque_count(), 0);
    }

    #[test]
    fn polygon_winding() {
        let square = [
            Point::new(-0.5, -0.5),
            Point::new(0.5, -0.5),
            Point::new(0.5, 0.5),
            Point::new(-0.5, 0.5),
        ];
        assert_eq!(winding_number(&square, 0.0, 0.0), 1);
        assert_eq!(winding_number(&square, 0.7, 0.0), 0);
    }

    #[test]
    fn rasterization_matches_brute_force_sampling() {
        let mut c = Canvas::new(24);
        c.ring((0.1, -0.2), 0.4, Color::BLACK, 0.1).unwrap();
        c.line((-0.9, -0.7), (0.6, 0.8), Color::BLACK, 0.07).unwrap();
        c.polyline(
            &[Point::new(-0.5, 0.5), Point::new(0.0, 0.9), Point::new(0.5, 0.5)],
            false,
            Color::BLACK,
            0.05,
        )
        .unwrap();
        let grid = SampleGrid::new(24);
        for prim in c.primitives() {
            for row in 0..24 {
                for col in 0..24 {
                    let mut brute = 0;
                    for sy in 0..SUPERSAMPLE {
                        for sx in 0..SUPERSAMPLE {
                            if prim.shape.contains(
                                grid.xs[col * SUPERSAMPLE + sx],
                                grid.ys[row * SUPERSAMPLE + sy],
                            ) {
                                brute += 1;
                            }
                        }
                    }
                    assert_eq!(grid.coverage(&prim.shape, col, row), brute);
                }
            }
        }
    }
}
