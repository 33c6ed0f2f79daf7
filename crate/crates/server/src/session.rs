//! Session state: one immutable store plus versioned hierarchy snapshots.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use concept_lens::cluster::{build_with_centered, center_features, CenteredFeatures, Hierarchy, HierarchyKind};
use concept_lens::consistency::{ColorDomain, EditGrid};
use concept_lens::store::{load_store, FeatureStore, ImageManifest};
use concept_lens::{Error, Result};
use serde::Serialize;

use crate::report::{hierarchy_payload, HierarchyPayload};

/// Re-clustering runs as a background job above this many leaves on either side.
pub const ASYNC_THRESHOLD: usize = 200;

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub store: PathBuf,
    pub manifest: PathBuf,
    pub images: PathBuf,
    pub gap_max: f64,
    pub depth: usize,
}

/// A registered hierarchy and its serialized payload, fixed at registration.
pub struct Snapshot {
    pub hierarchy: Hierarchy<f64>,
    pub payload: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobState {
    Running,
    Done { snapshot_id: String },
    Failed { error: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Job {
    pub job_id: String,
    pub target: HierarchyKind,
    #[serde(flatten)]
    pub state: JobState,
}

fn slot(kind: HierarchyKind) -> usize {
    match kind {
        HierarchyKind::Concept => 0,
        HierarchyKind::Code => 1,
    }
}

pub struct Session {
    pub store: FeatureStore<f64>,
    pub centered: CenteredFeatures<f64>,
    pub grid: EditGrid<f64>,
    pub domain: ColorDomain<f64>,
    pub manifest: ImageManifest,
    pub images: PathBuf,
    pub gap_max: f64,
    pub depth: usize,
    snapshots: RwLock<HashMap<String, Arc<Snapshot>>>,
    active: RwLock<[String; 2]>,
    jobs: Mutex<HashMap<String, Job>>,
    /// One build at a time per target kind; later requests wait their turn.
    build_locks: [tokio::sync::Mutex<()>; 2],
}

impl Session {
    pub fn open(cfg: &ServeConfig) -> Result<Self> {
        let store = load_store::<f32>(&cfg.store)?.cast::<f64>();
        let manifest = ImageManifest::load(&cfg.manifest)?;
        if !cfg.images.is_dir() {
            return Err(Error::Config(format!("image directory {} does not exist", cfg.images.display())));
        }
        Self::from_parts(store, manifest, cfg.images.clone(), cfg.gap_max, cfg.depth)
    }

    /// Builds both unconditioned hierarchies and makes them active.
    pub fn from_parts(store: FeatureStore<f64>, manifest: ImageManifest, images: PathBuf, gap_max: f64, depth: usize) -> Result<Self> {
        manifest.validate(store.num_codes(), store.num_directions())?;
        if !(0.0..=0.2).contains(&gap_max) {
            return Err(Error::Config(format!("gap_max {gap_max} outside [0, 0.2]")));
        }
        if depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        let centered = center_features(&store);
        let grid = EditGrid::new(&store);
        let domain = ColorDomain::from_grid(&grid)?;
        let session = Session {
            store,
            centered,
            grid,
            domain,
            manifest,
            images,
            gap_max,
            depth,
            snapshots: RwLock::new(HashMap::new()),
            active: RwLock::new([String::new(), String::new()]),
            jobs: Mutex::new(HashMap::new()),
            build_locks: [tokio::sync::Mutex::new(()), tokio::sync::Mutex::new(())],
        };
        for kind in [HierarchyKind::Concept, HierarchyKind::Code] {
            let h = session.build(kind, None)?;
            session.activate(h)?;
        }
        Ok(session)
    }

    pub fn build(&self, kind: HierarchyKind, conditioning: Option<&[usize]>) -> Result<Hierarchy<f64>> {
        build_with_centered(&self.store, &self.centered, kind, conditioning)
    }

    pub fn payload(&self, h: &Hierarchy<f64>) -> Result<HierarchyPayload> {
        hierarchy_payload(&self.grid, &self.domain, h)
    }

    /// Registers `h`, then points the active slot at it. Readers resolve the
    /// active id before looking it up, so they only ever see registered snapshots.
    pub fn activate(&self, h: Hierarchy<f64>) -> Result<String> {
        let payload = serde_json::to_string(&self.payload(&h)?).map_err(|e| Error::Format(e.to_string()))?;
        let id = h.snapshot_id.clone();
        let kind = h.kind;
        self.snapshots.write().unwrap().insert(id.clone(), Arc::new(Snapshot { hierarchy: h, payload }));
        self.active.write().unwrap()[slot(kind)] = id.clone();
        Ok(id)
    }

    pub fn active_id(&self, kind: HierarchyKind) -> String {
        self.active.read().unwrap()[slot(kind)].clone()
    }

    pub fn active(&self, kind: HierarchyKind) -> Arc<Snapshot> {
        let id = self.active_id(kind);
        self.snapshot(&id).expect("active snapshot is registered")
    }

    pub fn snapshot(&self, id: &str) -> Option<Arc<Snapshot>> {
        self.snapshots.read().unwrap().get(id).cloned()
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.read().unwrap().len()
    }

    pub fn needs_async(&self) -> bool {
        self.store.num_codes() > ASYNC_THRESHOLD || self.store.num_directions() > ASYNC_THRESHOLD
    }

    pub fn build_lock(&self, kind: HierarchyKind) -> &tokio::sync::Mutex<()> {
        &self.build_locks[slot(kind)]
    }

    pub fn set_job(&self, job: Job) {
        self.jobs.lock().unwrap().insert(job.job_id.clone(), job);
    }

    pub fn job(&self, id: &str) -> Option<Job> {
        self.jobs.lock().unwrap().get(id).cloned()
    }
}
