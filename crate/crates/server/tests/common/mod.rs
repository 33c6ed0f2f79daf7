#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;

use concept_lens::store::write_store;
use concept_lens::synthetic::{generate_planted, PlantedTruth, SyntheticConfig};
use concept_lens_server::placeholder::write_placeholders;
use concept_lens_server::{router, AppState, ServeConfig, Session};

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub cfg: ServeConfig,
    pub truth: PlantedTruth,
}

impl Fixture {
    pub fn new(cfg: &SyntheticConfig) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let (store, truth) = generate_planted::<f32>(cfg).unwrap();
        let store_path = dir.path().join("store.clns");
        write_store(&store, &store_path).unwrap();
        let images = dir.path().join("img");
        let manifest = write_placeholders(&images, cfg.num_codes, cfg.num_directions).unwrap();
        let manifest_path = images.join("manifest.json");
        manifest.write(&manifest_path).unwrap();
        let cfg = ServeConfig { store: store_path, manifest: manifest_path, images, gap_max: 0.1, depth: 4 };
        Fixture { dir, cfg, truth }
    }

    pub fn small() -> Fixture {
        let mut cfg = SyntheticConfig::new(24, 16, 16, 8, 7);
        cfg.noise = 0.0;
        Fixture::new(&cfg)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub async fn spawn(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    format!("http://{addr}")
}

pub async fn spawn_ready(fx: &Fixture) -> String {
    let cfg = fx.cfg.clone();
    let session = tokio::task::spawn_blocking(move || Session::open(&cfg)).await.unwrap().unwrap();
    spawn(AppState::ready(session)).await
}
