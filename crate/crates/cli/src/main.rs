//! `mglyph`: export, validate, simulate, score and serve.
//!
//! Exit codes: 0 success, 1 failed validation, 2 bad arguments, 3 I/O,
//! 4 could not bind the listen address.

use std::collections::HashSet;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mglyph_core::clock::{parse_timestamp, SteppingClock, SystemClock};
use mglyph_core::exchange::{
    self, uniform_xvalues, validation_report, ArchiveMetadata, ExchangeError, DEFAULT_SAMPLES,
};
use mglyph_core::gallery;
use mglyph_core::metrics::{self, Bootstrap, CurveFormat, Geometry, GlyphScore};
use mglyph_core::observer::{self, Observer, ObserverKind, ObserverModel};
use mglyph_core::staircase::{max_level_for_spacing, SessionGlyph, StaircaseConfig};
use mglyph_core::store::{records_from_jsonl, records_to_jsonl};
use mglyph_service::{router_with_static, AppState, ServiceOptions};

#[derive(Parser)]
#[command(name = "mglyph", version, about = "Malleable glyph workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a gallery design into an exchange archive.
    Export(ExportArgs),
    /// Check an archive against the exchange format.
    Validate { path: PathBuf },
    /// Run a simulated observer through a full session.
    Simulate(SimulateArgs),
    /// Accuracy curve and score for one glyph of a records file.
    Score(ScoreArgs),
    /// Host the comparison service.
    Serve(ServeArgs),
    /// List the built-in designs.
    Gallery,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    glyph: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 500)]
    ppi: u32,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    short_name: Option<String>,
    #[arg(long)]
    author: Option<String>,
    #[arg(long)]
    email: Option<String>,
    #[arg(long = "glyph-version")]
    glyph_version: Option<String>,
    /// `YYYY-MM-DD HH:MM:SS.ffffff`; defaults to now.
    #[arg(long)]
    creation_time: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated gallery names or archive paths.
    #[arg(long, value_delimiter = ',', required = true)]
    glyphs: Vec<String>,
    #[arg(long, default_value = "noisy")]
    observer: String,
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    weber_k: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per glyph.
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    p_equal: Option<f64>,
    #[arg(long)]
    decrement: Option<u32>,
    #[arg(long)]
    t_max: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    glyph: String,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Geometry; read from meta.json beside the records when omitted.
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "MGLYPH_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Seeds session ids, trial tokens and staircase seeds; random when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Web UI build to serve next to the API.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    fail(2, message)
}

fn io(message: impl Into<String>) -> Failure {
    fail(3, message)
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Export(a) => export(a),
        Command::Validate { path } => validate(&path),
        Command::Simulate(a) => simulate(a),
        Command::Score(a) => score(a),
        Command::Serve(a) => serve(a),
        Command::Gallery => {
            gallery_list();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("mglyph: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn unknown_glyph(name: &str) -> Failure {
    usage(format!(
        "unknown glyph {name:?}; available: {}",
        gallery::short_names().join(", ")
    ))
}

fn export(a: ExportArgs) -> Outcome {
    let design = gallery::find(&a.glyph).ok_or_else(|| unknown_glyph(&a.glyph))?;
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if let Some(t) = a.creation_time.as_deref().filter(|t| parse_timestamp(t).is_none()) {
        return Err(usage(format!("--creation-time {t:?} is not YYYY-MM-DD HH:MM:SS.ffffff")));
    }
    let defaults = ArchiveMetadata::from_design(&design);
    let meta = ArchiveMetadata {
        name: a.name.unwrap_or(defaults.name),
        short_name: a.short_name.unwrap_or(defaults.short_name),
        author: a.author.unwrap_or(defaults.author),
        email: a.email.unwrap_or(defaults.email),
        version: a.glyph_version.unwrap_or(defaults.version),
        creation_time: a.creation_time,
    };
    let archive = exchange::export_archive(&design, &uniform_xvalues(a.samples), a.ppi, &meta, &a.out)
        .map_err(|e| match e {
            ExchangeError::Io(e) => io(format!("{}: {e}", a.out.display())),
            e => usage(e.to_string()),
        })?;
    let side = archive.resolution();
    println!(
        "wrote {}: {} samples, {side}x{side} px",
        a.out.display(),
        archive.len()
    );
    Ok(())
}

fn validate(path: &Path) -> Outcome {
    let bytes = std::fs::read(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
    let report = validation_report(&bytes);
    for check in &report.checks {
        let mark = if check.passed { "PASS" } else { "FAIL" };
        if check.detail.is_empty() {
            println!("{mark} {}", check.name);
        } else {
            println!("{mark} {}: {}", check.name, check.detail);
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(fail(1, ""))
    }
}

fn session_glyph(spec: &str) -> Result<SessionGlyph, Failure> {
    if gallery::find(spec).is_some() {
        return Ok(SessionGlyph::continuous(spec));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(unknown_glyph(spec));
    }
    let archive = exchange::import_archive(path).map_err(|e| match e {
        ExchangeError::Io(e) => io(format!("{spec}: {e}")),
        e => usage(format!("{spec}: {e}")),
    })?;
    if archive.len() < 2 {
        return Err(usage(format!("{spec}: a session needs at least two samples")));
    }
    Ok(SessionGlyph::sampled(
        archive.manifest().short_name.clone(),
        archive.xvalues().into(),
    ))
}

fn observer_model(a: &SimulateArgs) -> Result<ObserverModel, Failure> {
    let kind: ObserverKind = a.observer.parse().map_err(|e| usage(format!("{e}")))?;
    // the staircase seed is `seed` itself, the observer gets a decorrelated one
    let seed = a.seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    let model = match kind {
        ObserverKind::Perfect => ObserverModel::perfect(),
        ObserverKind::Random => ObserverModel::random(seed),
        ObserverKind::Noisy => ObserverModel::noisy(a.sigma, a.tau, seed),
        ObserverKind::Weber => ObserverModel::weber(a.weber_k, a.sigma, a.tau, seed),
    };
    model.validate().map_err(|e| usage(e.to_string()))?;
    Ok(model)
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    std::fs::write(path, contents).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn simulate(a: SimulateArgs) -> Outcome {
    let glyphs = a.glyphs.iter().map(|g| session_glyph(g)).collect::<Result<Vec<_>, _>>()?;
    let mut seen = HashSet::new();
    if let Some(g) = glyphs.iter().find(|g| !seen.insert(g.id.clone())) {
        return Err(usage(format!("glyph {:?} listed twice", g.id)));
    }
    let defaults = StaircaseConfig::default();
    let mut config = StaircaseConfig {
        d0: a.d0.unwrap_or(defaults.d0),
        gamma: a.gamma.unwrap_or(defaults.gamma),
        p_equal: a.p_equal.unwrap_or(defaults.p_equal),
        decrement: a.decrement.unwrap_or(defaults.decrement),
        trials_per_glyph: a.trials.unwrap_or(defaults.trials_per_glyph),
        rng_seed: a.seed,
        ..defaults
    };
    config.t_max = match a.t_max {
        Some(t) => t,
        None => {
            let spacing = glyphs.iter().map(SessionGlyph::spacing).fold(0.0, f64::max);
            if spacing > 0.0 {
                max_level_for_spacing(config.d0, config.gamma, spacing)
            } else {
                config.t_max
            }
        }
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let model = observer_model(&a)?;
    let mut obs = Observer::new(model.clone()).map_err(|e| usage(e.to_string()))?;

    let session_id = format!("sim-{}", a.seed);
    let result = observer::run_session(
        &session_id,
        glyphs,
        &mut obs,
        config,
        &SteppingClock::epoch(),
        Bootstrap::default(),
    )
    .map_err(|e| usage(e.to_string()))?;

    std::fs::create_dir_all(&a.out).map_err(|e| io(format!("{}: {e}", a.out.display())))?;
    write_file(&a.out.join("records.jsonl"), &records_to_jsonl(&result.records))?;
    write_file(&a.out.join("scores.json"), &scores_json(&result.scores))?;
    let meta = serde_json::json!({ "session": result.meta, "observer": model });
    write_file(
        &a.out.join("meta.json"),
        &(serde_json::to_string_pretty(&meta).expect("plain data") + "\n"),
    )?;

    println!("trials: {}", result.records.len());
    println!("accuracy: {:.4}", result.accuracy());
    for s in &result.scores {
        println!(
            "{}: R = {:.3}, D = {:.4}, auc = {:.4}",
            s.glyph_id, s.resolution, s.jnd_distance, s.auc
        );
    }
    Ok(())
}

fn scores_json(scores: &[GlyphScore]) -> String {
    serde_json::to_string_pretty(scores).expect("plain data") + "\n"
}

/// Geometry recorded by `simulate` in `meta.json` beside the records.
fn stored_geometry(records: &Path) -> Option<(f64, f64)> {
    let meta = records.parent()?.join("meta.json");
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).ok()?).ok()?;
    let config = value.get("session")?.get("config")?;
    Some((config.get("d0")?.as_f64()?, config.get("gamma")?.as_f64()?))
}

fn score(a: ScoreArgs) -> Outcome {
    let format: CurveFormat = a.format.parse().map_err(|e| usage(format!("{e}")))?;
    let text = std::fs::read_to_string(&a.records).map_err(|e| io(format!("{}: {e}", a.records.display())))?;
    let records = records_from_jsonl(&text).map_err(|e| io(format!("{}: {e}", a.records.display())))?;
    let defaults = StaircaseConfig::default();
    let (d0, gamma) = match (a.d0, a.gamma, stored_geometry(&a.records)) {
        (Some(d0), Some(g), _) => (d0, g),
        (d0, g, Some((sd, sg))) => (d0.unwrap_or(sd), g.unwrap_or(sg)),
        (d0, g, None) => (d0.unwrap_or(defaults.d0), g.unwrap_or(defaults.gamma)),
    };
    let geometry = Geometry::new(d0, gamma).map_err(|e| usage(e.to_string()))?;
    let score = metrics::score(&records, &a.glyph, geometry, Bootstrap::default())
        .map_err(|e| usage(e.to_string()))?;
    match &a.out {
        Some(path) => metrics::export_curve(&score, path, format)
            .map_err(|e| io(format!("{}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(metrics::render_curve(&score, format).as_bytes())
                .map_err(|e| io(e.to_string()))?;
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Outcome {
    let store = mglyph_core::store::Store::open(&a.data_dir)
        .map_err(|e| io(format!("{}: {e}", a.data_dir.display())))?;
    let seed = a.seed.unwrap_or_else(|| {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap_or_default();
        now.as_nanos() as u64 ^ u64::from(std::process::id()).rotate_left(40)
    });
    let app = AppState::new(Arc::new(store), ServiceOptions::new(seed, Arc::new(SystemClock)))
        .map_err(|e| io(e.to_string()))?;
    let (routes, warning) = router_with_static(Arc::new(app), a.static_dir);
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.listen)
            .await
            .map_err(|e| fail(4, format!("cannot listen on {}: {e}", a.listen)))?;
        let addr = listener.local_addr().map_err(|e| fail(4, e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        mglyph_service::serve(listener, routes)
            .await
            .map_err(|e| io(e.to_string()))
    })
}

fn gallery_list() {
    for entry in gallery::list_gallery() {
        let info = entry.design.info();
        println!("{:<20} {}", info.short_name, info.name);
        println!("{:<20} after {}", "", entry.reference);
        if !entry.eligibility_note.is_empty() {
            println!("{:<20} {}", "", entry.eligibility_note);
        }
    }
}
