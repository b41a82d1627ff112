//! The decision service: telemetry store, depletion model, per-crop
//! policies and pending operator overrides.
//!
//! All mutation goes through one [`DecisionService`] behind a lock, so
//! ingest from many connections is serialized and readers always see the
//! state as of the last completed write.

mod http;
mod ingest;
pub mod model;
pub mod persist;
pub mod recommend;
mod server;
pub mod store;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::edge::{ConfigError, IrrigationPolicy, NodeHardware};
use crate::telemetry::{Downlink, OverrideState, TelemetryRecord};

pub use http::router;
pub use ingest::serve_ingest;
pub use model::{update_model, FeatureVector, ModelCoefficients, ModelError, NLMS_EPSILON};
pub use persist::StoreFile;
pub use recommend::{recommend_policy, PlotParams, PolicyRecommendation, RecommendError};
pub use server::{ServeError, ServeOptions, Server};
pub use store::{StaleRecord, TelemetryStore};

/// Longest override an operator may request.
pub const MAX_OVERRIDE_TTL_S: u64 = 86_400;

/// Where "now" comes from when judging staleness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    Wall,
    /// The newest ingested timestamp; useful when serving a recorded log.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub learning_rate: f64,
    pub staleness_s: f64,
    pub clock: Clock,
    pub hardware: NodeHardware,
    pub plot: PlotParams,
    pub fsync_every: u32,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            learning_rate: 0.05,
            staleness_s: 300.0,
            clock: Clock::Wall,
            hardware: NodeHardware::default(),
            plot: PlotParams::default(),
            fsync_every: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Stale(#[from] StaleRecord),
    #[error("store: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Invalid(#[from] ConfigError),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("no policy for crop {0}")]
    UnknownCrop(String),
    #[error("no telemetry yet")]
    NoTelemetry,
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}

pub struct DecisionService {
    cfg: ServiceConfig,
    store: TelemetryStore,
    model: ModelCoefficients,
    policies: BTreeMap<String, IrrigationPolicy>,
    pending: BTreeMap<String, Downlink>,
    file: Option<StoreFile>,
    dir: Option<PathBuf>,
}

pub type SharedService = Arc<RwLock<DecisionService>>;

impl DecisionService {
    /// A service with nothing on disk.
    pub fn in_memory(cfg: ServiceConfig) -> Self {
        DecisionService {
            model: ModelCoefficients::new(cfg.learning_rate),
            cfg,
            store: TelemetryStore::new(),
            policies: BTreeMap::new(),
            pending: BTreeMap::new(),
            file: None,
            dir: None,
        }
    }

    /// Opens (or creates) a store directory and rebuilds state from it.
    pub fn open(dir: &Path, cfg: ServiceConfig) -> Result<Self, ServiceError> {
        let (file, records) = StoreFile::open(dir, cfg.fsync_every)?;
        let policies = persist::load_policies(dir)?;
        let mut svc = DecisionService::in_memory(cfg);
        for rec in records {
            svc.absorb(rec)?;
        }
        svc.policies = policies;
        svc.file = Some(file);
        svc.dir = Some(dir.to_path_buf());
        Ok(svc)
    }

    pub fn shared(self) -> SharedService {
        Arc::new(RwLock::new(self))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn ingest(&mut self, rec: TelemetryRecord) -> Result<(), ServiceError> {
        self.store.check(&rec)?;
        if let Some(f) = &mut self.file {
            f.append(&rec)?;
        }
        self.absorb(rec)
    }

    /// Ingests a recorded log, skipping records the store already holds.
    ///
    /// Returns how many were taken.
    pub fn replay(&mut self, records: impl IntoIterator<Item = TelemetryRecord>) -> Result<u64, ServiceError> {
        let mut taken = 0;
        for rec in records {
            match self.ingest(rec) {
                Ok(()) => taken += 1,
                Err(ServiceError::Stale(e)) => tracing::warn!("replay: {e}"),
                Err(e) => return Err(e),
            }
        }
        Ok(taken)
    }

    fn absorb(&mut self, rec: TelemetryRecord) -> Result<(), ServiceError> {
        if let Some(prev) = self.store.latest(&rec.node) {
            self.model =
                update_model(&self.model, prev, &rec, &self.cfg.hardware).expect("store ordering already checked");
        }
        self.store.ingest(rec)?;
        Ok(())
    }

    pub fn store(&self) -> &TelemetryStore {
        &self.store
    }

    pub fn latest(&self, node: &str) -> Option<&TelemetryRecord> {
        self.store.latest(node)
    }

    pub fn history(&self, node: &str, from: Option<u64>, to: Option<u64>) -> &[TelemetryRecord] {
        self.store.history(node, from, to)
    }

    pub fn model(&self) -> &ModelCoefficients {
        &self.model
    }

    pub fn policy(&self, crop: &str) -> Option<IrrigationPolicy> {
        match self.policies.get(crop) {
            Some(p) => Some(p.clone()),
            None if crop == "default" => Some(IrrigationPolicy::default()),
            None => None,
        }
    }

    /// Stores a policy under `crop`; the path name wins over any `crop_id`.
    pub fn put_policy(&mut self, crop: &str, mut pol: IrrigationPolicy) -> Result<IrrigationPolicy, ServiceError> {
        pol.crop_id = crop.to_string();
        pol.validate()?;
        let old = self.policies.insert(crop.to_string(), pol.clone());
        if let Some(dir) = &self.dir {
            if let Err(e) = persist::save_policies(dir, &self.policies) {
                match old {
                    Some(p) => self.policies.insert(crop.to_string(), p),
                    None => self.policies.remove(crop),
                };
                return Err(e.into());
            }
        }
        Ok(pol)
    }

    /// Queues an override for delivery with the node's next record.
    pub fn apply_override(&mut self, node: &str, state: OverrideState, ttl_s: u64) -> Result<Downlink, ServiceError> {
        if state != OverrideState::Clear && !(1..=MAX_OVERRIDE_TTL_S).contains(&ttl_s) {
            return Err(ConfigError::new("ttl_s", format!("must be within 1..={MAX_OVERRIDE_TTL_S}")).into());
        }
        if !self.store.contains_node(node) {
            return Err(ServiceError::UnknownNode(node.to_string()));
        }
        let d = Downlink::override_cmd(state, if state == OverrideState::Clear { 0 } else { ttl_s });
        self.pending.insert(node.to_string(), d.clone());
        Ok(d)
    }

    pub fn take_override(&mut self, node: &str) -> Option<Downlink> {
        self.pending.remove(node)
    }

    pub fn now_ms(&self) -> u64 {
        match self.cfg.clock {
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis() as u64),
            Clock::Log => self.store.newest().map_or(0, |r| r.ts_ms),
        }
    }

    /// Recommendation for `crop` from `node`, or the most recently heard node.
    pub fn recommendation(&self, crop: &str, node: Option<&str>) -> Result<PolicyRecommendation, ServiceError> {
        let pol = self
            .policy(crop)
            .ok_or_else(|| ServiceError::UnknownCrop(crop.to_string()))?;
        let latest = match node {
            Some(n) => self
                .store
                .latest(n)
                .ok_or_else(|| ServiceError::UnknownNode(n.to_string()))?,
            None => self.store.newest().ok_or(ServiceError::NoTelemetry)?,
        };
        Ok(recommend_policy(
            &self.model,
            latest,
            &pol,
            &self.cfg.plot,
            &self.cfg.hardware,
            self.now_ms(),
            self.cfg.staleness_s,
        )?)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        match &mut self.file {
            Some(f) => f.flush(),
            None => Ok(()),
        }
    }
}
