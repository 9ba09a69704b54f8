//! Adaptive pairwise comparison.
//!
//! Each glyph in a session owns a level `t`; trials at level `t` compare two
//! samples `d = d0·γ^t` apart (or an identical pair, with probability
//! `p_equal`). Correct answers on different pairs move one level finer,
//! any mistake falls back `decrement` levels, and glyphs are interleaved in
//! random order until every quota is met.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::exchange::nearest_on_grid;
use crate::glyph::GlyphParam;
use crate::store::TrialRecord;

/// Spacing of the default 10 001-sample archive grid.
pub const DEFAULT_GRID_SPACING: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("d0 must lie in (0, 100), got {0}")]
    D0(f64),
    #[error("gamma must lie in (0, 1), got {0}")]
    Gamma(f64),
    #[error("p_equal must lie in [0, 1), got {0}")]
    PEqual(f64),
    #[error("decrement must be at least 1")]
    Decrement,
    #[error("trials_per_glyph must be at least 1")]
    Quota,
    #[error("t_max {t_max} gives d = {d} below twice the grid spacing {spacing}")]
    TooFine { t_max: u32, d: f64, spacing: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaircaseConfig {
    pub d0: f64,
    pub gamma: f64,
    pub p_equal: f64,
    pub decrement: u32,
    pub t_max: u32,
    pub trials_per_glyph: u32,
    pub rng_seed: u64,
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        StaircaseConfig {
            d0: 20.0,
            gamma: 0.7,
            p_equal: 1.0 / 3.0,
            decrement: 3,
            t_max: max_level_for_spacing(20.0, 0.7, DEFAULT_GRID_SPACING),
            trials_per_glyph: 177,
            rng_seed: 0,
        }
    }
}

/// Largest `t` with `d0·γ^t ≥ 2·spacing`, so that snapping to a grid of that
/// spacing can never collapse a different pair into an identical one.
pub fn max_level_for_spacing(d0: f64, gamma: f64, spacing: f64) -> u32 {
    let mut t = 0;
    while t < 10_000 && distance(d0, gamma, t + 1) >= 2.0 * spacing {
        t += 1;
    }
    t
}

/// `d0·γ^t`.
pub fn distance(d0: f64, gamma: f64, t: u32) -> f64 {
    d0 * gamma.powi(t as i32)
}

impl StaircaseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.d0 > 0.0 && self.d0 < 100.0) {
            return Err(ConfigError::D0(self.d0));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(self.p_equal >= 0.0 && self.p_equal < 1.0) {
            return Err(ConfigError::PEqual(self.p_equal));
        }
        if self.decrement == 0 {
            return Err(ConfigError::Decrement);
        }
        if self.trials_per_glyph == 0 {
            return Err(ConfigError::Quota);
        }
        Ok(())
    }

    /// Also checks that the finest level stays resolvable on a grid of `spacing`.
    pub fn validate_for_spacing(&self, spacing: f64) -> Result<(), ConfigError> {
        self.validate()?;
        let d = self.distance(self.t_max);
        if d < 2.0 * spacing {
            return Err(ConfigError::TooFine {
                t_max: self.t_max,
                d,
                spacing,
            });
        }
        Ok(())
    }

    pub fn distance(&self, t: u32) -> f64 {
        distance(self.d0, self.gamma, t)
    }
}

/// The observer's judgement of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    /// The left glyph has the larger parameter.
    #[serde(rename = "left")]
    LeftGreater,
    Equal,
    #[serde(rename = "right")]
    RightGreater,
}

impl Answer {
    pub const ALL: [Answer; 3] = [Answer::LeftGreater, Answer::Equal, Answer::RightGreater];

    pub fn as_str(self) -> &'static str {
        match self {
            Answer::LeftGreater => "left",
            Answer::Equal => "equal",
            Answer::RightGreater => "right",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown answer {0:?}; expected left, equal or right")]
pub struct ParseAnswerError(pub String);

impl FromStr for Answer {
    type Err = ParseAnswerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Answer::LeftGreater),
            "equal" => Ok(Answer::Equal),
            "right" => Ok(Answer::RightGreater),
            other => Err(ParseAnswerError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    pub glyph_id: String,
    pub t: u32,
    pub trials_done: u32,
}

impl StaircaseState {
    pub fn new(glyph_id: impl Into<String>) -> Self {
        StaircaseState {
            glyph_id: glyph_id.into(),
            t: 0,
            trials_done: 0,
        }
    }
}

/// One pair to present. `c` and `d` are the nominal centre and distance;
/// `x1`/`x2` are what is actually shown, which may be snapped to a sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub glyph_id: String,
    pub x1: GlyphParam,
    pub x2: GlyphParam,
    pub c: f64,
    pub d: f64,
    pub t: u32,
    pub is_equal: bool,
}

/// Draws the next pair for `state`. Consumes, in order: the equal-pair coin,
/// the centre, and (different pairs only) the side coin.
pub fn next_trial<R: Rng + ?Sized>(
    state: &StaircaseState,
    config: &StaircaseConfig,
    rng: &mut R,
) -> TrialSpec {
    let t = state.t.min(config.t_max);
    let d = config.distance(t);
    let half = (d / 2.0).min(50.0);
    let is_equal = rng.random_bool(config.p_equal);
    let c = rng.random_range(half..=100.0 - half);
    let (x1, x2) = if is_equal {
        (c, c)
    } else {
        let hi = (c + half).min(100.0);
        let lo = (c - half).max(0.0);
        if rng.random_bool(0.5) {
            (hi, lo)
        } else {
            (lo, hi)
        }
    };
    TrialSpec {
        glyph_id: state.glyph_id.clone(),
        x1: GlyphParam::saturating(x1),
        x2: GlyphParam::saturating(x2),
        c,
        d,
        t,
        is_equal,
    }
}

pub fn correct_answer(trial: &TrialSpec) -> Answer {
    let (a, b) = (trial.x1.value(), trial.x2.value());
    if a > b {
        Answer::LeftGreater
    } else if b > a {
        Answer::RightGreater
    } else {
        Answer::Equal
    }
}

/// The level after answering `trial`.
pub fn next_level(t: u32, trial: &TrialSpec, answer: Answer, config: &StaircaseConfig) -> u32 {
    if answer != correct_answer(trial) {
        t.saturating_sub(config.decrement)
    } else if trial.x1 == trial.x2 {
        t
    } else {
        (t + 1).min(config.t_max)
    }
}

pub fn apply_answer(
    state: &StaircaseState,
    trial: &TrialSpec,
    answer: Answer,
    config: &StaircaseConfig,
) -> StaircaseState {
    StaircaseState {
        glyph_id: state.glyph_id.clone(),
        t: next_level(state.t, trial, answer, config),
        trials_done: state.trials_done + 1,
    }
}

/// Uniform choice among glyphs with quota left; `None` once all are done.
pub fn pick_next_glyph<R: Rng + ?Sized>(
    states: &[StaircaseState],
    config: &StaircaseConfig,
    rng: &mut R,
) -> Option<usize> {
    let open: Vec<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.trials_done < config.trials_per_glyph)
        .map(|(i, _)| i)
        .collect();
    match open.len() {
        0 => None,
        1 => Some(open[0]),
        n => Some(open[rng.random_range(0..n)]),
    }
}

/// A glyph taking part in a session. `grid` holds the archive's ascending
/// sample positions; without one, the glyph is shown at continuous x.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionGlyph {
    pub id: String,
    pub grid: Option<Arc<[f64]>>,
}

impl SessionGlyph {
    pub fn continuous(id: impl Into<String>) -> Self {
        SessionGlyph {
            id: id.into(),
            grid: None,
        }
    }

    pub fn sampled(id: impl Into<String>, grid: Arc<[f64]>) -> Self {
        SessionGlyph {
            id: id.into(),
            grid: Some(grid),
        }
    }

    /// Index of the sample shown for `x`, if the glyph is sampled.
    pub fn sample_index(&self, x: f64) -> Option<usize> {
        self.grid.as_ref().map(|g| nearest_on_grid(g, x))
    }

    fn snap(&self, x: GlyphParam) -> GlyphParam {
        match &self.grid {
            Some(g) => GlyphParam::saturating(g[nearest_on_grid(g, x.value())]),
            None => x,
        }
    }

    /// Largest grid step, 0 for continuous glyphs.
    pub fn spacing(&self) -> f64 {
        self.grid
            .as_ref()
            .map(|g| g.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("a session needs at least one glyph")]
    NoGlyphs,
    #[error("glyph {0:?} appears twice in the session")]
    DuplicateGlyph(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no trial is pending")]
    NoPendingTrial,
    #[error("record {sequence} does not match the replayed trial")]
    ReplayMismatch { sequence: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingTrial {
    pub glyph_index: usize,
    pub trial: TrialSpec,
    pub presented_at: String,
}

/// The interleaved staircase of one session: a sequential state machine with
/// at most one outstanding trial.
#[derive(Debug, Clone)]
pub struct Session {
    session_id: String,
    config: StaircaseConfig,
    glyphs: Vec<SessionGlyph>,
    states: Vec<StaircaseState>,
    rng: ChaCha8Rng,
    pending: Option<PendingTrial>,
    answered: u64,
}

impl Session {
    pub fn new(
        session_id: impl Into<String>,
        glyphs: Vec<SessionGlyph>,
        config: StaircaseConfig,
    ) -> Result<Self, SessionError> {
        if glyphs.is_empty() {
            return Err(SessionError::NoGlyphs);
        }
        for (i, g) in glyphs.iter().enumerate() {
            if glyphs[..i].iter().any(|h| h.id == g.id) {
                return Err(SessionError::DuplicateGlyph(g.id.clone()));
            }
        }
        let spacing = glyphs.iter().map(SessionGlyph::spacing).fold(0.0, f64::max);
        if spacing > 0.0 {
            config.validate_for_spacing(spacing)?;
        } else {
            config.validate()?;
        }
        Ok(Session {
            session_id: session_id.into(),
            states: glyphs.iter().map(|g| StaircaseState::new(g.id.clone())).collect(),
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
            glyphs,
            pending: None,
            answered: 0,
        })
    }

    /// Rebuilds a session from its recorded answers, re-drawing every trial
    /// from the seed and checking it against the record.
    pub fn replay(
        session_id: impl Into<String>,
        glyphs: Vec<SessionGlyph>,
        config: StaircaseConfig,
        records: &[TrialRecord],
    ) -> Result<Self, SessionError> {
        let mut session = Session::new(session_id, glyphs, config)?;
        for rec in records {
            let mismatch = SessionError::ReplayMismatch {
                sequence: rec.sequence_number,
            };
            let stamp = rec.presented_at.clone();
            let pending = session.draw(|| stamp).ok_or(mismatch.clone())?;
            let t = &pending.trial;
            if t.glyph_id != rec.glyph_id
                || t.x1.value() != rec.x1
                || t.x2.value() != rec.x2
                || t.t != rec.t
                || t.is_equal != rec.is_equal
            {
                return Err(mismatch);
            }
            session.answer(rec.answer, rec.response_ms)?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.session_id
    }

    pub fn config(&self) -> &StaircaseConfig {
        &self.config
    }

    pub fn glyphs(&self) -> &[SessionGlyph] {
        &self.glyphs
    }

    pub fn states(&self) -> &[StaircaseState] {
        &self.states
    }

    pub fn answered(&self) -> u64 {
        self.answered
    }

    pub fn total(&self) -> u64 {
        self.glyphs.len() as u64 * self.config.trials_per_glyph as u64
    }

    pub fn is_finished(&self) -> bool {
        self.answered >= self.total()
    }

    pub fn pending(&self) -> Option<&PendingTrial> {
        self.pending.as_ref()
    }

    /// The outstanding trial, drawing a new one if none is pending. Reads the
    /// clock exactly once per newly drawn trial. `None` once all quotas are met.
    pub fn next_trial(&mut self, clock: &dyn Clock) -> Option<&PendingTrial> {
        self.draw(|| clock.timestamp())
    }

    fn draw(&mut self, stamp: impl FnOnce() -> String) -> Option<&PendingTrial> {
        if self.pending.is_none() {
            let idx = pick_next_glyph(&self.states, &self.config, &mut self.rng)?;
            let mut trial = next_trial(&self.states[idx], &self.config, &mut self.rng);
            let glyph = &self.glyphs[idx];
            trial.x1 = glyph.snap(trial.x1);
            trial.x2 = glyph.snap(trial.x2);
            self.pending = Some(PendingTrial {
                glyph_index: idx,
                trial,
                presented_at: stamp(),
            });
        }
        self.pending.as_ref()
    }

    /// Scores the pending trial, advances its glyph's staircase and returns
    /// the record to append.
    pub fn answer(
        &mut self,
        answer: Answer,
        response_ms: Option<u64>,
    ) -> Result<TrialRecord, SessionError> {
        let pending = self.pending.take().ok_or(SessionError::NoPendingTrial)?;
        let state = &mut self.states[pending.glyph_index];
        *state = apply_answer(state, &pending.trial, answer, &self.config);
        self.answered += 1;
        let trial = pending.trial;
        Ok(TrialRecord {
            session_id: self.session_id.clone(),
            sequence_number: self.answered,
            correct: answer == correct_answer(&trial),
            glyph_id: trial.glyph_id,
            t: trial.t,
            d: trial.d,
            c: trial.c,
            x1: trial.x1.value(),
            x2: trial.x2.value(),
            is_equal: trial.is_equal,
            presented_at: pending.presented_at,
            answer,
            response_ms,
        })
    }
}
