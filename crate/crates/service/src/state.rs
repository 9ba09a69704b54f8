//! Server-side state: the glyph registry, live sessions and the store behind them.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use mglyph_core::clock::Clock;
use mglyph_core::exchange::{validation_report, ExchangeError, GlyphArchive, ValidationReport};
use mglyph_core::metrics::{self, Bootstrap, CurveFormat, Geometry, GlyphScore};
use mglyph_core::staircase::{
    max_level_for_spacing, Answer, Session, SessionError, SessionGlyph, StaircaseConfig,
};
use mglyph_core::store::{Filter, SessionMeta, SessionStatus, Store, StoreError};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ApiError;

/// Knobs fixed at startup.
pub struct ServiceOptions {
    /// Seeds session ids, default session seeds and trial tokens.
    pub seed: u64,
    pub clock: Arc<dyn Clock>,
    pub bootstrap: Bootstrap,
}

impl ServiceOptions {
    pub fn new(seed: u64, clock: Arc<dyn Clock>) -> Self {
        ServiceOptions {
            seed,
            clock,
            bootstrap: Bootstrap::default(),
        }
    }
}

struct Registered {
    archive: Arc<GlyphArchive>,
    grid: Arc<[f64]>,
}

impl Registered {
    fn new(archive: GlyphArchive) -> Self {
        Registered {
            grid: archive.xvalues().into(),
            archive: Arc::new(archive),
        }
    }
}

struct Live {
    session: Session,
    token: Option<String>,
    images: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphSummary {
    pub id: String,
    pub name: String,
    pub short_name: String,
    pub author: String,
    pub version: String,
    pub samples: usize,
    pub resolution: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub answered: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CreateSession {
    pub glyphs: Vec<String>,
    #[serde(default)]
    pub config: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub created_at: String,
    pub status: SessionStatus,
    pub glyphs: Vec<String>,
    pub config: StaircaseConfig,
    pub progress: Progress,
}

/// What the client sees of a trial: opaque token and image locations only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextTrial {
    Trial {
        trial_token: String,
        left_image_url: String,
        right_image_url: String,
        progress: Progress,
    },
    Finished {
        results_url: String,
        progress: Progress,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SubmitAnswer {
    pub trial_token: String,
    pub answer: String,
    #[serde(default)]
    pub response_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub correct: bool,
    pub progress: Progress,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphResult {
    pub name: String,
    pub short_name: String,
    pub answered: usize,
    #[serde(flatten)]
    pub score: GlyphScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    pub session_id: String,
    pub status: SessionStatus,
    pub progress: Progress,
    pub config: StaircaseConfig,
    pub glyphs: Vec<GlyphResult>,
}

/// Content-derived glyph id: the first 128 bits of the archive's SHA-256.
pub fn glyph_id_for(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..16])
}

pub fn sample_url(glyph_id: &str, index: usize) -> String {
    format!("/glyphs/{glyph_id}/sample/{index}.png")
}

pub fn results_url(session_id: &str) -> String {
    format!("/sessions/{session_id}/results")
}

pub struct AppState {
    store: Arc<Store>,
    glyphs: RwLock<BTreeMap<String, Registered>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Live>>>>,
    clock: Arc<dyn Clock>,
    ids: Mutex<ChaCha8Rng>,
    tokens: Mutex<ChaCha8Rng>,
    bootstrap: Bootstrap,
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("stored glyph {id}: {source}")]
    Glyph { id: String, source: ExchangeError },
}

impl AppState {
    /// Loads stored archives and resumes every active session by replaying
    /// its records. Sessions whose glyphs are gone stay readable but inactive.
    pub fn new(store: Arc<Store>, options: ServiceOptions) -> Result<Self, StartupError> {
        let mut glyphs = BTreeMap::new();
        for (id, bytes) in store.load_glyphs()? {
            let archive = GlyphArchive::from_zip_bytes(&bytes)
                .map_err(|source| StartupError::Glyph { id: id.clone(), source })?;
            glyphs.insert(id, Registered::new(archive));
        }
        let mut tokens = ChaCha8Rng::seed_from_u64(options.seed);
        tokens.set_stream(1);
        let state = AppState {
            store,
            glyphs: RwLock::new(glyphs),
            sessions: RwLock::new(HashMap::new()),
            clock: options.clock,
            ids: Mutex::new(ChaCha8Rng::seed_from_u64(options.seed)),
            tokens: Mutex::new(tokens),
            bootstrap: options.bootstrap,
        };
        for meta in state.store.sessions() {
            if meta.status != SessionStatus::Active {
                continue;
            }
            let Ok(session_glyphs) = state.session_glyphs(&meta.glyphs) else {
                continue;
            };
            let records = state.store.snapshot(&Filter::session(&meta.session_id));
            if let Ok(session) =
                Session::replay(&meta.session_id, session_glyphs, meta.config.clone(), &records)
            {
                state.sessions.write().expect("sessions lock").insert(
                    meta.session_id.clone(),
                    Arc::new(Mutex::new(Live {
                        session,
                        token: None,
                        images: (0, 0),
                    })),
                );
            }
        }
        Ok(state)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn summary(id: &str, archive: &GlyphArchive) -> GlyphSummary {
        let m = archive.manifest();
        GlyphSummary {
            id: id.to_string(),
            name: m.name.clone(),
            short_name: m.short_name.clone(),
            author: m.author.clone(),
            version: m.version.clone(),
            samples: archive.len(),
            resolution: archive.resolution(),
        }
    }

    /// Validates and registers an archive. Returns whether it was new.
    pub fn upload_glyph(&self, bytes: &[u8]) -> Result<(GlyphSummary, bool), ApiError> {
        let id = glyph_id_for(bytes);
        if let Some(r) = self.glyphs.read().expect("glyph lock").get(&id) {
            return Ok((Self::summary(&id, &r.archive), false));
        }
        let archive = GlyphArchive::from_zip_bytes(bytes).map_err(|e| {
            let report: ValidationReport = validation_report(bytes);
            ApiError::archive(e, report)
        })?;
        self.store.save_glyph(&id, bytes).map_err(ApiError::store)?;
        let summary = Self::summary(&id, &archive);
        self.glyphs
            .write()
            .expect("glyph lock")
            .entry(id)
            .or_insert_with(|| Registered::new(archive));
        Ok((summary, true))
    }

    pub fn list_glyphs(&self) -> Vec<GlyphSummary> {
        self.glyphs
            .read()
            .expect("glyph lock")
            .iter()
            .map(|(id, r)| Self::summary(id, &r.archive))
            .collect()
    }

    pub fn sample_png(&self, glyph_id: &str, index: usize) -> Result<Vec<u8>, ApiError> {
        let glyphs = self.glyphs.read().expect("glyph lock");
        let r = glyphs
            .get(glyph_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown glyph {glyph_id:?}")))?;
        r.archive
            .sample(index)
            .map(|(_, _, png)| png.to_vec())
            .ok_or_else(|| ApiError::not_found(format!("glyph {glyph_id:?} has no sample {index}")))
    }

    fn session_glyphs(&self, ids: &[String]) -> Result<Vec<SessionGlyph>, ApiError> {
        let glyphs = self.glyphs.read().expect("glyph lock");
        ids.iter()
            .map(|id| {
                glyphs
                    .get(id)
                    .map(|r| SessionGlyph::sampled(id.clone(), r.grid.clone()))
                    .ok_or_else(|| ApiError::not_found(format!("unknown glyph {id:?}")))
            })
            .collect()
    }

    fn fresh_session_id(&self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let id = format!("s-{:016x}", rng.next_u64());
            if self.store.meta(&id).is_none() {
                return id;
            }
        }
    }

    /// Resolves overrides against the defaults. Without an explicit `t_max`
    /// the finest level is derived from the coarsest archive grid; without
    /// an explicit `rng_seed` one is drawn from the service seed.
    fn resolve_config(
        &self,
        overrides: &serde_json::Map<String, Value>,
        glyphs: &[SessionGlyph],
        rng: &mut ChaCha8Rng,
    ) -> Result<StaircaseConfig, ApiError> {
        let mut merged = match serde_json::to_value(StaircaseConfig::default()) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        };
        for (k, v) in overrides {
            merged.insert(k.clone(), v.clone());
        }
        let mut config: StaircaseConfig = serde_json::from_value(Value::Object(merged))
            .map_err(|e| ApiError::invalid(format!("invalid config: {e}")))?;
        if !overrides.contains_key("t_max") {
            let spacing = glyphs.iter().map(SessionGlyph::spacing).fold(0.0, f64::max);
            config.t_max = max_level_for_spacing(config.d0, config.gamma, spacing);
        }
        if !overrides.contains_key("rng_seed") {
            config.rng_seed = rng.next_u64();
        }
        Ok(config)
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionSummary, ApiError> {
        if req.glyphs.is_empty() {
            return Err(ApiError::invalid("a session needs at least one glyph"));
        }
        let glyphs = self.session_glyphs(&req.glyphs)?;
        if let Some(g) = glyphs.iter().find(|g| g.grid.as_ref().is_some_and(|x| x.len() < 2)) {
            return Err(ApiError::invalid(format!("glyph {:?} has a single sample", g.id)));
        }
        let (session_id, config) = {
            let mut rng = self.ids.lock().expect("id rng lock");
            let id = self.fresh_session_id(&mut rng);
            let config = self.resolve_config(&req.config, &glyphs, &mut rng)?;
            (id, config)
        };
        let session = Session::new(&session_id, glyphs, config.clone()).map_err(|e| match e {
            SessionError::DuplicateGlyph(_) | SessionError::Config(_) => ApiError::invalid(e.to_string()),
            other => ApiError::internal(other.to_string()),
        })?;
        let meta = SessionMeta {
            session_id: session_id.clone(),
            created_at: self.clock.timestamp(),
            config,
            glyphs: req.glyphs.clone(),
            status: SessionStatus::Active,
        };
        self.store.create_session(meta.clone()).map_err(ApiError::store)?;
        let total = session.total();
        self.sessions.write().expect("sessions lock").insert(
            session_id,
            Arc::new(Mutex::new(Live {
                session,
                token: None,
                images: (0, 0),
            })),
        );
        Ok(SessionSummary {
            session_id: meta.session_id,
            created_at: meta.created_at,
            status: meta.status,
            glyphs: meta.glyphs,
            config: meta.config,
            progress: Progress { answered: 0, total },
        })
    }

    fn meta(&self, session_id: &str) -> Result<SessionMeta, ApiError> {
        self.store
            .meta(session_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session {session_id:?}")))
    }

    fn answered(&self, session_id: &str) -> u64 {
        self.store.snapshot(&Filter::session(session_id)).len() as u64
    }

    pub fn list_sessions(&self) -> Vec<SessionSummary> {
        self.store
            .sessions()
            .into_iter()
            .map(|m| self.session_summary_of(m))
            .collect()
    }

    pub fn session_summary(&self, session_id: &str) -> Result<SessionSummary, ApiError> {
        Ok(self.session_summary_of(self.meta(session_id)?))
    }

    fn session_summary_of(&self, meta: SessionMeta) -> SessionSummary {
        let progress = Progress {
            answered: self.answered(&meta.session_id),
            total: meta.total_trials(),
        };
        SessionSummary {
            session_id: meta.session_id,
            created_at: meta.created_at,
            status: meta.status,
            glyphs: meta.glyphs,
            config: meta.config,
            progress,
        }
    }

    fn live(&self, session_id: &str) -> Option<Arc<Mutex<Live>>> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(session_id)
            .cloned()
    }

    fn new_token(&self) -> String {
        let mut rng = self.tokens.lock().expect("token rng lock");
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        hex::encode(bytes)
    }

    /// The pending trial, drawn on first request and re-served until answered.
    pub fn next(&self, session_id: &str) -> Result<NextTrial, ApiError> {
        let meta = self.meta(session_id)?;
        let finished = |answered| NextTrial::Finished {
            results_url: results_url(session_id),
            progress: Progress {
                answered,
                total: meta.total_trials(),
            },
        };
        let Some(live) = self.live(session_id) else {
            return Ok(finished(self.answered(session_id)));
        };
        let mut live = live.lock().expect("session lock");
        let progress = Progress {
            answered: live.session.answered(),
            total: live.session.total(),
        };
        if live.token.is_none() {
            let Some(pending) = live.session.next_trial(self.clock.as_ref()).cloned() else {
                return Ok(finished(progress.answered));
            };
            let glyph = &live.session.glyphs()[pending.glyph_index];
            let left = glyph.sample_index(pending.trial.x1.value()).unwrap_or(0);
            let right = glyph.sample_index(pending.trial.x2.value()).unwrap_or(0);
            live.images = (left, right);
            live.token = Some(self.new_token());
        }
        let pending = live.session.pending().expect("token implies a pending trial");
        let glyph_id = &pending.trial.glyph_id;
        Ok(NextTrial::Trial {
            trial_token: live.token.clone().expect("token set above"),
            left_image_url: sample_url(glyph_id, live.images.0),
            right_image_url: sample_url(glyph_id, live.images.1),
            progress,
        })
    }

    /// Applies an answer exactly once; any token but the pending one is stale.
    pub fn answer(&self, session_id: &str, req: &SubmitAnswer) -> Result<Feedback, ApiError> {
        let answer: Answer = req
            .answer
            .parse()
            .map_err(|e: mglyph_core::staircase::ParseAnswerError| ApiError::invalid(e.to_string()))?;
        self.meta(session_id)?;
        let live = self
            .live(session_id)
            .ok_or_else(|| ApiError::conflict("session is not accepting answers"))?;
        let mut live = live.lock().expect("session lock");
        if live.token.as_deref() != Some(req.trial_token.as_str()) {
            return Err(ApiError::conflict("stale or unknown trial token"));
        }
        let before = live.session.clone();
        let record = live
            .session
            .answer(answer, req.response_ms)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        if let Err(e) = self.store.append(&record) {
            live.session = before;
            return Err(ApiError::store(e));
        }
        live.token = None;
        let finished = live.session.is_finished();
        let progress = Progress {
            answered: live.session.answered(),
            total: live.session.total(),
        };
        drop(live);
        if finished {
            self.sessions.write().expect("sessions lock").remove(session_id);
        }
        Ok(Feedback {
            correct: record.correct,
            progress,
            finished,
        })
    }

    /// Scores from a snapshot of the store; valid while the session runs.
    pub fn results(&self, session_id: &str) -> Result<SessionResults, ApiError> {
        let meta = self.meta(session_id)?;
        let records = self.store.snapshot(&Filter::session(session_id));
        let geometry = Geometry::from(&meta.config);
        let glyphs = self.glyphs.read().expect("glyph lock");
        let scored = meta
            .glyphs
            .iter()
            .map(|id| {
                let score = metrics::score(&records, id, geometry, self.bootstrap)
                    .map_err(|e| ApiError::internal(e.to_string()))?;
                let (name, short_name) = glyphs
                    .get(id)
                    .map(|r| {
                        let m = r.archive.manifest();
                        (m.name.clone(), m.short_name.clone())
                    })
                    .unwrap_or_default();
                Ok(GlyphResult {
                    name,
                    short_name,
                    answered: records.iter().filter(|r| &r.glyph_id == id).count(),
                    score,
                })
            })
            .collect::<Result<Vec<_>, ApiError>>()?;
        Ok(SessionResults {
            session_id: meta.session_id.clone(),
            status: meta.status,
            progress: Progress {
                answered: records.len() as u64,
                total: meta.total_trials(),
            },
            config: meta.config,
            glyphs: scored,
        })
    }

    /// One glyph's curve in the export format.
    pub fn curve(&self, session_id: &str, glyph_id: &str, format: CurveFormat) -> Result<String, ApiError> {
        let results = self.results(session_id)?;
        let g = results
            .glyphs
            .into_iter()
            .find(|g| g.score.glyph_id == glyph_id)
            .ok_or_else(|| ApiError::not_found(format!("glyph {glyph_id:?} is not in session {session_id:?}")))?;
        Ok(metrics::render_curve(&g.score, format))
    }
}
