//! Accuracy curves and the resolution score derived from them.
//!
//! The area `𝒜` is taken under the accuracy curve plotted against `log2 d`:
//! trapezoids between consecutive levels (a level without answers counts as
//! accuracy 0, and the series stops one level past the last answered one),
//! plus a full-accuracy tail from `d0` up to 100. Then `R = 2^𝒜` and
//! `D = 100/R`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::store::TrialRecord;

/// Accuracy at the JND crossing.
pub const JND_ACCURACY: f64 = 2.0 / 3.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// The staircase geometry a curve was measured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub d0: f64,
    pub gamma: f64,
}

impl Geometry {
    pub fn new(d0: f64, gamma: f64) -> Result<Self, MetricsError> {
        if !(d0 > 0.0 && d0 < 100.0) {
            return Err(MetricsError::Config(format!("d0 must lie in (0, 100), got {d0}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MetricsError::Config(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Geometry { d0, gamma })
    }

    pub fn distance(&self, t: u32) -> f64 {
        crate::staircase::distance(self.d0, self.gamma, t)
    }
}

impl From<&crate::staircase::StaircaseConfig> for Geometry {
    fn from(c: &crate::staircase::StaircaseConfig) -> Self {
        Geometry {
            d0: c.d0,
            gamma: c.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: u32,
    pub confidence: f64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Bootstrap {
            resamples: 1000,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub t: u32,
    pub d: f64,
    pub n_total: u64,
    pub n_correct: u64,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphScore {
    pub glyph_id: String,
    pub auc: f64,
    pub resolution: f64,
    pub jnd_distance: f64,
    pub jnd_crossing_d: Option<f64>,
    pub curve: Vec<AccuracyPoint>,
}

fn tally<'a>(records: impl Iterator<Item = &'a TrialRecord>) -> BTreeMap<u32, (u64, u64)> {
    let mut bins = BTreeMap::new();
    for r in records {
        let e = bins.entry(r.t).or_insert((0, 0));
        e.0 += 1;
        e.1 += r.correct as u64;
    }
    bins
}

/// Stable per-(glyph, level) seed so intervals do not depend on call order.
fn bootstrap_seed(glyph_id: &str, t: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(glyph_id.as_bytes());
    h.update([0]);
    h.update(t.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Percentile interval for `k` successes out of `n`, widened if needed to
/// contain `k/n`. Resampling Bernoulli outcomes with replacement draws the
/// resampled success count from Binomial(n, k/n), which is what is sampled.
pub fn bootstrap_interval(n: u64, k: u64, boot: Bootstrap, seed: u64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "bootstrap needs 0 <= k <= n, n > 0");
    let p = k as f64 / n as f64;
    if k == 0 || k == n {
        return (p, p);
    }
    let b = boot.resamples.max(1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Binomial::new(n, p).expect("valid binomial");
    let mut acc: Vec<f64> = (0..b).map(|_| dist.sample(&mut rng) as f64 / n as f64).collect();
    acc.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - boot.confidence).clamp(0.0, 1.0);
    let lo_idx = ((alpha / 2.0) * b as f64).floor() as usize;
    let hi_idx = (((1.0 - alpha / 2.0) * b as f64).ceil() as usize).clamp(1, b) - 1;
    let lo = acc[lo_idx.min(b - 1)];
    let hi = acc[hi_idx];
    (lo.min(p), hi.max(p))
}

/// Bootstrap interval of the accuracy at level `t`; `None` without records there.
pub fn bootstrap_ci(
    records: &[TrialRecord],
    glyph_id: &str,
    t: u32,
    boot: Bootstrap,
) -> Option<(f64, f64)> {
    let (n, k) = records
        .iter()
        .filter(|r| r.glyph_id == glyph_id && r.t == t)
        .fold((0, 0), |(n, k), r| (n + 1, k + r.correct as u64));
    (n > 0).then(|| bootstrap_interval(n, k, boot, bootstrap_seed(glyph_id, t)))
}

/// One point per level that has answers, in ascending `t`.
pub fn accuracy_curve(
    records: &[TrialRecord],
    glyph_id: &str,
    geometry: Geometry,
    boot: Bootstrap,
) -> Vec<AccuracyPoint> {
    tally(records.iter().filter(|r| r.glyph_id == glyph_id))
        .into_iter()
        .map(|(t, (n, k))| {
            let (ci_low, ci_high) = bootstrap_interval(n, k, boot, bootstrap_seed(glyph_id, t));
            AccuracyPoint {
                t,
                d: geometry.distance(t),
                n_total: n,
                n_correct: k,
                accuracy: k as f64 / n as f64,
                ci_low,
                ci_high,
            }
        })
        .collect()
}

/// Trapezoid area under the curve over `ln(d0/d)`, with missing levels and
/// the level after the last one counted as zero.
fn ln_area(curve: &[AccuracyPoint], gamma: f64) -> f64 {
    let Some(last) = curve.last() else {
        return 0.0;
    };
    let mut a = vec![0.0; last.t as usize + 2];
    for p in curve {
        a[p.t as usize] = p.accuracy;
    }
    let step = (1.0 / gamma).ln();
    a.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum()
}

/// `𝒜` for a curve sorted by ascending `t`.
pub fn auc(curve: &[AccuracyPoint], d0: f64, gamma: f64) -> Result<f64, MetricsError> {
    Geometry::new(d0, gamma)?;
    Ok((ln_area(curve, gamma) + (100.0 / d0).ln()) / std::f64::consts::LN_2)
}

/// Smallest `d` at which the curve, interpolated linearly in `(ln d, A)`,
/// falls through 2/3. `None` if it never does.
pub fn jnd_crossing(curve: &[AccuracyPoint]) -> Option<f64> {
    curve
        .windows(2)
        .filter(|w| w[0].accuracy >= JND_ACCURACY && w[1].accuracy < JND_ACCURACY)
        .map(|w| {
            let (a0, a1) = (w[0].accuracy, w[1].accuracy);
            let (l0, l1) = (w[0].d.ln(), w[1].d.ln());
            let f = (a0 - JND_ACCURACY) / (a0 - a1);
            (l0 + f * (l1 - l0)).exp()
        })
        .reduce(f64::min)
}

/// Builds the score of an already computed curve.
pub fn score_curve(
    glyph_id: impl Into<String>,
    curve: Vec<AccuracyPoint>,
    geometry: Geometry,
) -> Result<GlyphScore, MetricsError> {
    let auc = auc(&curve, geometry.d0, geometry.gamma)?;
    // 2^𝒜 without the round trip through log2, so an empty curve gives 100/d0 exactly
    let resolution = 100.0 / geometry.d0 * ln_area(&curve, geometry.gamma).exp();
    Ok(GlyphScore {
        glyph_id: glyph_id.into(),
        auc,
        resolution,
        jnd_distance: 100.0 / resolution,
        jnd_crossing_d: jnd_crossing(&curve),
        curve,
    })
}

pub fn score(
    records: &[TrialRecord],
    glyph_id: &str,
    geometry: Geometry,
    boot: Bootstrap,
) -> Result<GlyphScore, MetricsError> {
    Geometry::new(geometry.d0, geometry.gamma)?;
    score_curve(glyph_id, accuracy_curve(records, glyph_id, geometry, boot), geometry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Csv,
    Json,
}

impl std::str::FromStr for CurveFormat {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CurveFormat::Csv),
            "json" => Ok(CurveFormat::Json),
            other => Err(MetricsError::Config(format!("unknown format {other:?}; use csv or json"))),
        }
    }
}

pub const CURVE_CSV_HEADER: &str = "t,d,n,accuracy,ci_low,ci_high";
pub const SUMMARY_CSV_HEADER: &str = "auc,resolution,jnd_distance,jnd_crossing_d";

/// The curve table, a blank line, then a one-row summary table.
pub fn curve_csv(score: &GlyphScore) -> String {
    let mut out = String::new();
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for p in &score.curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.t, p.d, p.n_total, p.accuracy, p.ci_low, p.ci_high
        );
    }
    out.push('\n');
    out.push_str(SUMMARY_CSV_HEADER);
    out.push('\n');
    let crossing = score.jnd_crossing_d.map(|d| d.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{}",
        score.auc, score.resolution, score.jnd_distance, crossing
    );
    out
}

pub fn curve_json(score: &GlyphScore) -> String {
    let mut s = serde_json::to_string_pretty(score).expect("score serialization");
    s.push('\n');
    s
}

pub fn render_curve(score: &GlyphScore, format: CurveFormat) -> String {
    match format {
        CurveFormat::Csv => curve_csv(score),
        CurveFormat::Json => curve_json(score),
    }
}

pub fn export_curve(
    score: &GlyphScore,
    destination: &Path,
    format: CurveFormat,
) -> Result<(), MetricsError> {
    std::fs::write(destination, render_curve(score, format))?;
    Ok(())
}

pub fn parse_score_json(text: &str) -> Result<GlyphScore, MetricsError> {
    serde_json::from_str(text).map_err(|e| MetricsError::Parse(e.to_string()))
}
