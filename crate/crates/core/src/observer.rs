//! Simulated observers and whole simulated sessions.
//!
//! Observers judge the numeric parameters of a pair, not its pixels. Each one
//! owns its random stream, separate from the session's.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::metrics::{self, Bootstrap, Geometry, GlyphScore, MetricsError};
use crate::staircase::{Answer, Session, SessionError, SessionGlyph, StaircaseConfig, TrialSpec};
use crate::store::{SessionMeta, SessionStatus, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverKind {
    Perfect,
    Random,
    Noisy,
    Weber,
}

impl std::str::FromStr for ObserverKind {
    type Err = ObserverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perfect" => Ok(ObserverKind::Perfect),
            "random" => Ok(ObserverKind::Random),
            "noisy" => Ok(ObserverKind::Noisy),
            "weber" => Ok(ObserverKind::Weber),
            other => Err(ObserverError::Kind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObserverError {
    #[error("unknown observer kind {0:?}; expected perfect, random, noisy or weber")]
    Kind(String),
    #[error("{name} must be finite and non-negative, got {value}")]
    Parameter { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverModel {
    pub kind: ObserverKind,
    /// Perceptual noise, in x units.
    pub sigma: f64,
    /// Differences at most this large are judged equal.
    pub tau: f64,
    /// Extra noise per unit of x (weber kind only).
    pub weber_k: f64,
    pub rng_seed: u64,
}

impl ObserverModel {
    pub fn perfect() -> Self {
        ObserverModel {
            kind: ObserverKind::Perfect,
            sigma: 0.0,
            tau: 0.0,
            weber_k: 0.0,
            rng_seed: 0,
        }
    }

    pub fn random(seed: u64) -> Self {
        ObserverModel {
            kind: ObserverKind::Random,
            rng_seed: seed,
            ..ObserverModel::perfect()
        }
    }

    pub fn noisy(sigma: f64, tau: f64, seed: u64) -> Self {
        ObserverModel {
            kind: ObserverKind::Noisy,
            sigma,
            tau,
            weber_k: 0.0,
            rng_seed: seed,
        }
    }

    pub fn weber(weber_k: f64, sigma: f64, tau: f64, seed: u64) -> Self {
        ObserverModel {
            kind: ObserverKind::Weber,
            sigma,
            tau,
            weber_k,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<(), ObserverError> {
        for (name, value) in [("sigma", self.sigma), ("tau", self.tau), ("weber_k", self.weber_k)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ObserverError::Parameter { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Observer {
    model: ObserverModel,
    rng: ChaCha8Rng,
}

impl Observer {
    pub fn new(model: ObserverModel) -> Result<Self, ObserverError> {
        model.validate()?;
        Ok(Observer {
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            model,
        })
    }

    pub fn model(&self) -> &ObserverModel {
        &self.model
    }

    fn perceive(&mut self, x: f64, std: f64) -> f64 {
        if std == 0.0 {
            return x;
        }
        x + Normal::new(0.0, std).expect("finite std").sample(&mut self.rng)
    }

    /// Judges a pair shown as `x1` (left) and `x2` (right).
    pub fn respond(&mut self, x1: f64, x2: f64) -> Answer {
        let (kind, sigma, tau, k) = (self.model.kind, self.model.sigma, self.model.tau, self.model.weber_k);
        let (p1, p2) = match kind {
            ObserverKind::Random => return Answer::ALL[self.rng.random_range(0..3)],
            ObserverKind::Perfect => (x1, x2),
            ObserverKind::Noisy => (self.perceive(x1, sigma), self.perceive(x2, sigma)),
            ObserverKind::Weber => (
                self.perceive(x1, k * x1 + sigma),
                self.perceive(x2, k * x2 + sigma),
            ),
        };
        let tau = if kind == ObserverKind::Perfect { 0.0 } else { tau };
        if (p1 - p2).abs() <= tau {
            Answer::Equal
        } else if p1 > p2 {
            Answer::LeftGreater
        } else {
            Answer::RightGreater
        }
    }

    pub fn respond_to(&mut self, trial: &TrialSpec) -> Answer {
        self.respond(trial.x1.value(), trial.x2.value())
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub meta: SessionMeta,
    pub records: Vec<TrialRecord>,
    pub scores: Vec<GlyphScore>,
}

impl SimulationResult {
    pub fn accuracy(&self) -> f64 {
        accuracy(&self.records)
    }
}

/// Fraction of correct records; 0 for none.
pub fn accuracy(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64
}

/// Runs a complete interleaved session against `observer`.
///
/// The clock is read once for the session's creation time and once per
/// presented trial, matching what the service does for a live session.
pub fn run_session(
    session_id: &str,
    glyphs: Vec<SessionGlyph>,
    observer: &mut Observer,
    config: StaircaseConfig,
    clock: &dyn Clock,
    boot: Bootstrap,
) -> Result<SimulationResult, SimulationError> {
    let created_at = clock.timestamp();
    let ids: Vec<String> = glyphs.iter().map(|g| g.id.clone()).collect();
    let mut session = Session::new(session_id, glyphs, config.clone())?;
    let mut records = Vec::with_capacity(session.total() as usize);
    while let Some(pending) = session.next_trial(clock) {
        let answer = observer.respond_to(&pending.trial);
        records.push(session.answer(answer, None)?);
    }
    let geometry = Geometry::from(&config);
    let scores = ids
        .iter()
        .map(|id| metrics::score(&records, id, geometry, boot))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationResult {
        meta: SessionMeta {
            session_id: session_id.to_string(),
            created_at,
            config,
            glyphs: ids,
            status: SessionStatus::Finished,
        },
        records,
        scores,
    })
}
