//! Built-in designs: the simple scaled shapes, clocks, a Halton dot cloud,
//! phased composite circles and a cyclic (Shepard) glyph.

use std::f64::consts::PI;

use crate::glyph::{
    halton_2d, p, Canvas, Color, DrawError, Easing, GlyphDesign, GlyphParam, Point, RotationClass,
};

const AUTHOR: &str = "mglyph gallery";
const EMAIL: &str = "gallery@mglyph.invalid";
const VERSION: &str = "1.0.0";

/// Default number of dots in the Halton glyph at `x = 100`.
pub const HALTON_MAX_DOTS: usize = 400;
/// Dot radius of the Halton glyph: 1.8 % of the canvas side.
pub const HALTON_DOT_RADIUS: f64 = 0.018 * 2.0;
/// Half extent of the square the Halton dots are scattered over.
const HALTON_SPREAD: f64 = 0.8;

/// Total sweep of a clock hand over `x` in `[0, 100]`, in degrees. One
/// graduation short of a full turn so that the two ends of the range stay
/// distinguishable.
pub const CLOCK_SWEEP_DEG: f64 = 354.0;

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub design: GlyphDesign,
    /// Which published example the design recreates.
    pub reference: &'static str,
    pub eligibility_note: &'static str,
}

const ELIGIBLE: &str = "eligible: conveys magnitude without writing, numerals or positional orders";

fn meta(design: GlyphDesign, rotation: RotationClass) -> GlyphDesign {
    design
        .author(AUTHOR, EMAIL)
        .version(VERSION)
        .rotation_class(rotation)
}

/// Every built-in design, in a stable order.
pub fn list_gallery() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            design: line(),
            reference: "scaled horizontal line",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: square(),
            reference: "scaled square",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: circle(),
            reference: "scaled circle",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: star(),
            reference: "scaled five-pointed star",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: one_handed_clock(false),
            reference: "one-handed clock, plain face",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: one_handed_clock(true),
            reference: "one-handed clock with minute graduations",
            eligibility_note: "eligible: graduations on the face are markers, not numerals",
        },
        GalleryEntry {
            design: halton_dots(HALTON_MAX_DOTS),
            reference: "pseudo-random dot cloud on the Halton sequence",
            eligibility_note: "eligible: scattered dots ask how much, not how many",
        },
        GalleryEntry {
            design: composite_circles(Phasing::Linear),
            reference: "four phased circles, linear phasing",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: composite_circles(Phasing::Bezier),
            reference: "four phased circles, cubic Bezier phasing",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: shepard_circle(),
            reference: "cyclic circle glyph with identical endpoints",
            eligibility_note: ELIGIBLE,
        },
        GalleryEntry {
            design: three_handed_clock(),
            reference: "three-handed clock",
            eligibility_note: "ineligible: violates the illiteracy rule, its hands read as \
                               digits of positional orders",
        },
    ]
}

/// Looks a design up by short name.
pub fn find(short_name: &str) -> Option<GlyphDesign> {
    list_gallery()
        .into_iter()
        .map(|e| e.design)
        .find(|d| d.short_name() == short_name)
}

pub fn short_names() -> Vec<String> {
    list_gallery()
        .iter()
        .map(|e| e.design.short_name().to_string())
        .collect()
}

/// Half-extent shared by the scaled shapes: tiny at 0, touching the edges at 100.
fn scaled_extent(x: GlyphParam) -> f64 {
    x.lerp(0.01, 1.0)
}

pub fn line() -> GlyphDesign {
    meta(
        GlyphDesign::new("Horiz. Line", "line", |x, c: &mut Canvas| {
            let half = scaled_extent(x);
            c.line((-half, 0.0), (half, 0.0), Color::MEDIUM_BLUE, p(30.0))
        }),
        RotationClass::HalfTurn,
    )
}

pub fn square() -> GlyphDesign {
    meta(
        GlyphDesign::new("Scaled Square", "square", |x, c: &mut Canvas| {
            let half = scaled_extent(x);
            c.rect((-half, -half), (half, half), Color::DARK_ORANGE)
        }),
        RotationClass::QuarterTurn,
    )
}

pub fn circle() -> GlyphDesign {
    meta(
        GlyphDesign::new("Scaled Circle", "circle", |x, c: &mut Canvas| {
            c.circle(Point::ORIGIN, scaled_extent(x), Color::CRIMSON)
        }),
        RotationClass::Full,
    )
}

/// Outline vertices of a five-pointed star, first tip pointing up.
pub fn star_vertices(outer: f64) -> Vec<Point> {
    (0..10)
        .map(|i| {
            let r = if i % 2 == 0 { outer } else { 0.4 * outer };
            Point::polar(r, PI / 2.0 + i as f64 * PI / 5.0)
        })
        .collect()
}

pub fn star() -> GlyphDesign {
    meta(
        GlyphDesign::new("Scaled Star", "star", |x, c: &mut Canvas| {
            let pts = star_vertices(scaled_extent(x));
            c.polyline(&pts, true, Color::FOREST_GREEN, p(30.0))
        }),
        RotationClass::None,
    )
}

/// Clock-hand angle in degrees, clockwise from twelve o'clock.
pub fn clock_hand_angle(x: GlyphParam) -> f64 {
    x.lerp(0.0, CLOCK_SWEEP_DEG)
}

/// End point of a hand of length `len` at `degrees` clockwise from twelve.
fn hand_tip(len: f64, degrees: f64) -> Point {
    let a = degrees.to_radians();
    Point::new(len * a.sin(), len * a.cos())
}

const CLOCK_FACE_RADIUS: f64 = 0.85;

fn clock_face(c: &mut Canvas, graduated: bool) -> Result<(), DrawError> {
    c.ring(Point::ORIGIN, CLOCK_FACE_RADIUS, Color::DARK_SLATE_GRAY, p(20.0))?;
    if graduated {
        for minute in 0..60 {
            let inner = if minute % 5 == 0 { 0.70 } else { 0.76 };
            let deg = minute as f64 * 6.0;
            c.line(
                hand_tip(inner, deg),
                hand_tip(CLOCK_FACE_RADIUS - p(5.0), deg),
                Color::DARK_SLATE_GRAY,
                if minute % 5 == 0 { p(12.0) } else { p(6.0) },
            )?;
        }
    }
    Ok(())
}

fn clock_hand(c: &mut Canvas, degrees: f64, len: f64, width: f64, color: Color) -> Result<(), DrawError> {
    c.line(Point::ORIGIN, hand_tip(len, degrees), color, width)
}

pub fn one_handed_clock(graduated: bool) -> GlyphDesign {
    let (name, short) = if graduated {
        ("One-Handed Clock (graduated)", "clock-graduated")
    } else {
        ("One-Handed Clock", "clock")
    };
    meta(
        GlyphDesign::new(name, short, move |x, c: &mut Canvas| {
            clock_face(c, graduated)?;
            clock_hand(c, clock_hand_angle(x), 0.74, p(30.0), Color::BLACK)?;
            c.circle(Point::ORIGIN, p(25.0), Color::BLACK)
        }),
        RotationClass::None,
    )
}

/// Hour, minute and second hand angles of the three-handed clock, in degrees.
///
/// The minute hand turns ten times and the second hand a thousand times per
/// full hour-hand sweep, so each hand reads one decimal order of `x`.
pub fn three_handed_clock_angles(x: GlyphParam) -> [f64; 3] {
    let v = x.value();
    [
        x.lerp(0.0, CLOCK_SWEEP_DEG),
        (v / 10.0).fract() * 360.0,
        (v * 10.0).fract() * 360.0,
    ]
}

pub fn three_handed_clock() -> GlyphDesign {
    meta(
        GlyphDesign::new("Three-Handed Clock", "three-handed-clock", |x, c: &mut Canvas| {
            clock_face(c, true)?;
            let [hour, minute, second] = three_handed_clock_angles(x);
            clock_hand(c, hour, 0.45, p(45.0), Color::BLACK)?;
            clock_hand(c, minute, 0.66, p(28.0), Color::BLACK)?;
            clock_hand(c, second, 0.80, p(10.0), Color::CRIMSON)?;
            c.circle(Point::ORIGIN, p(30.0), Color::BLACK)
        }),
        RotationClass::None,
    )
    .illiterate_compliant(false)
}

/// Number of dots drawn by the Halton glyph.
pub fn halton_dot_count(x: GlyphParam, max_dots: usize) -> usize {
    (x.unit() * max_dots as f64).round() as usize
}

/// Centers of the first `n` Halton dots (bases 2 and 3), in canvas coordinates.
pub fn halton_dot_positions(n: usize) -> Vec<Point> {
    (1..=n as u64)
        .map(|i| {
            let (h2, h3) = halton_2d(i);
            Point::new(
                (2.0 * h2 - 1.0) * HALTON_SPREAD,
                (2.0 * h3 - 1.0) * HALTON_SPREAD,
            )
        })
        .collect()
}

/// Draws the dot cloud for `x` with up to `max_dots` dots.
pub fn draw_halton_dots(x: GlyphParam, c: &mut Canvas, max_dots: usize) -> Result<(), DrawError> {
    for center in halton_dot_positions(halton_dot_count(x, max_dots)) {
        c.circle(center, HALTON_DOT_RADIUS, Color::TEAL)?;
    }
    Ok(())
}

pub fn halton_dots(max_dots: usize) -> GlyphDesign {
    meta(
        GlyphDesign::new("Halton Dots", "halton-dots", move |x, c: &mut Canvas| {
            draw_halton_dots(x, c, max_dots)
        }),
        RotationClass::None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phasing {
    Linear,
    Bezier,
}

pub const COMPOSITE_MIN_RADIUS: f64 = 0.03;
pub const COMPOSITE_MAX_RADIUS: f64 = 0.4;
const COMPOSITE_CENTERS: [(f64, f64); 4] = [(-0.45, 0.45), (0.45, 0.45), (0.45, -0.45), (-0.45, -0.45)];
/// Parameter window over which each circle grows.
const COMPOSITE_WINDOWS: [(f64, f64); 4] = [(0.0, 40.0), (20.0, 60.0), (40.0, 80.0), (60.0, 100.0)];

fn phase_easing(phasing: Phasing) -> Easing {
    match phasing {
        Phasing::Linear => Easing::Linear,
        Phasing::Bezier => Easing::cubic_bezier(0.42, 0.0, 0.58, 1.0).expect("control points in unit box"),
    }
}

/// Radii of the four circles, clockwise from the top-left one.
pub fn composite_circle_radii(x: GlyphParam, phasing: Phasing) -> [f64; 4] {
    let easing = phase_easing(phasing);
    let v = x.value();
    COMPOSITE_WINDOWS.map(|(lo, hi)| {
        let u = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        let eased = GlyphParam::saturating(100.0 * easing.apply_unit(u));
        eased.lerp(COMPOSITE_MIN_RADIUS, COMPOSITE_MAX_RADIUS)
    })
}

pub fn draw_composite_circles(x: GlyphParam, c: &mut Canvas, phasing: Phasing) -> Result<(), DrawError> {
    let colors = [Color::CRIMSON, Color::GOLDENROD, Color::TEAL, Color::MEDIUM_BLUE];
    for ((center, r), color) in COMPOSITE_CENTERS
        .iter()
        .zip(composite_circle_radii(x, phasing))
        .zip(colors)
    {
        c.circle(*center, r, color)?;
    }
    Ok(())
}

pub fn composite_circles(phasing: Phasing) -> GlyphDesign {
    let (name, short) = match phasing {
        Phasing::Linear => ("Four Circles (linear)", "four-circles-linear"),
        Phasing::Bezier => ("Four Circles (Bezier)", "four-circles-bezier"),
    };
    meta(
        GlyphDesign::new(name, short, move |x, c: &mut Canvas| {
            draw_composite_circles(x, c, phasing)
        }),
        RotationClass::None,
    )
}

const SHEPARD_RINGS: usize = 6;
const SHEPARD_MAX_RADIUS: f64 = 0.95;

/// Concentric rings drifting outward with `x`; every ring fades in at the
/// center and out at the rim, so `x = 0` and `x = 100` draw the same picture.
pub fn shepard_circle() -> GlyphDesign {
    meta(
        GlyphDesign::new("Shepard Circle", "shepard-circle", |x, c: &mut Canvas| {
            let phase = x.unit();
            let mut positions: Vec<f64> = (0..SHEPARD_RINGS)
                .map(|k| (k as f64 + phase) / SHEPARD_RINGS as f64)
                .collect();
            positions.sort_by(f64::total_cmp);
            for pos in positions {
                let color = Color::MEDIUM_BLUE.fade((PI * pos).sin());
                c.ring(Point::ORIGIN, pos * SHEPARD_MAX_RADIUS, color, p(45.0))?;
            }
            Ok(())
        }),
        RotationClass::Full,
    )
}
