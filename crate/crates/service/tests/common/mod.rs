#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use mglyph_core::clock::SteppingClock;
use mglyph_core::exchange::{build_archive, uniform_xvalues, ArchiveMetadata, GlyphArchive};
use mglyph_core::gallery;
use mglyph_core::store::Store;
use mglyph_service::{router, AppState, ServiceOptions};

pub struct Server {
    pub base: String,
    pub app: Arc<AppState>,
    task: tokio::task::JoinHandle<()>,
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub async fn start(data_dir: &Path, seed: u64) -> Server {
    let store = Arc::new(Store::open(data_dir).unwrap());
    let app = Arc::new(AppState::new(store, ServiceOptions::new(seed, Arc::new(SteppingClock::epoch()))).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    let routes = router(app.clone());
    let task = tokio::spawn(async move {
        mglyph_service::serve(listener, routes).await.unwrap();
    });
    Server {
        base: format!("http://{addr}"),
        app,
        task,
    }
}

/// A coarse archive of a gallery design: `n` samples at a tiny resolution.
pub fn archive(short_name: &str, n: usize) -> GlyphArchive {
    let design = gallery::find(short_name).unwrap();
    let meta = ArchiveMetadata {
        creation_time: Some("2025-01-01 00:00:00.000000".into()),
        ..ArchiveMetadata::from_design(&design)
    };
    build_archive(&design, &uniform_xvalues(n), 12, &meta).unwrap()
}

pub fn client() -> reqwest::Client {
    reqwest::Client::new()
}

/// Parses `/glyphs/{id}/sample/{index}.png`.
pub fn sample_index(url: &str) -> (String, usize) {
    let rest = url.strip_prefix("/glyphs/").unwrap();
    let (id, file) = rest.split_once("/sample/").unwrap();
    (id.to_string(), file.strip_suffix(".png").unwrap().parse().unwrap())
}
