//! HTTP API over a loaded dependency graph.
//!
//! The graph is fixed for the lifetime of a server; only review metadata
//! changes. Metadata writes go through a single writer that persists the
//! whole sidecar atomically before answering, then publishes a new snapshot
//! that readers pick up without waiting on the writer.

mod persist;
mod routes;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

use revcone_core::ingest::{MetadataPatch, MetadataSidecar};
use revcone_core::{parse_graph, CompassOptions, DependencyGraph, IngestError, NodeMetadata};
use thiserror::Error;

pub use persist::write_atomic;
pub use routes::router;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub graph_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub options: CompassOptions,
}

impl ServiceConfig {
    pub fn new(graph_path: impl Into<PathBuf>, sidecar_path: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            graph_path: graph_path.into(),
            sidecar_path: sidecar_path.into(),
            options: CompassOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Ingest { path: PathBuf, source: IngestError },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

/// What readers see: the graph with sidecar metadata merged in, plus the
/// sidecar itself for timestamps.
#[derive(Debug)]
pub struct Snapshot {
    pub graph: DependencyGraph,
    pub sidecar: MetadataSidecar,
}

struct Writer {
    sidecar: MetadataSidecar,
}

pub struct LoadedState {
    base: DependencyGraph,
    graph_path: PathBuf,
    sidecar_path: PathBuf,
    options: CompassOptions,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<Writer>,
}

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("failed to persist metadata: {0}")]
    Persist(std::io::Error),
}

impl LoadedState {
    /// Reads the graph document and the sidecar. A missing sidecar starts
    /// empty; a malformed one is an error rather than something to overwrite.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let bytes = std::fs::read(&config.graph_path).map_err(|source| ServiceError::Read {
            path: config.graph_path.clone(),
            source,
        })?;
        let base = parse_graph(&bytes).map_err(|source| ServiceError::Ingest {
            path: config.graph_path.clone(),
            source,
        })?;
        let sidecar = match std::fs::read(&config.sidecar_path) {
            Ok(bytes) => MetadataSidecar::parse(&bytes).map_err(|source| ServiceError::Ingest {
                path: config.sidecar_path.clone(),
                source,
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => MetadataSidecar::default(),
            Err(source) => {
                return Err(ServiceError::Read {
                    path: config.sidecar_path.clone(),
                    source,
                })
            }
        };
        Ok(Self::from_parts(base, sidecar, config))
    }

    pub fn from_parts(
        base: DependencyGraph,
        sidecar: MetadataSidecar,
        config: &ServiceConfig,
    ) -> Self {
        let load = sidecar.apply(&base);
        if !load.stale.is_empty() {
            tracing::warn!(
                count = load.stale.len(),
                "sidecar entries name declarations not in the graph"
            );
        }
        LoadedState {
            base,
            graph_path: config.graph_path.clone(),
            sidecar_path: config.sidecar_path.clone(),
            options: config.options,
            snapshot: RwLock::new(Arc::new(Snapshot {
                graph: load.graph,
                sidecar: sidecar.clone(),
            })),
            writer: tokio::sync::Mutex::new(Writer { sidecar }),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot
            .read()
            .expect("snapshot lock poisoned")
            .clone()
    }

    pub fn options(&self) -> CompassOptions {
        self.options
    }

    pub fn graph_path(&self) -> &Path {
        &self.graph_path
    }

    pub fn sidecar_path(&self) -> &Path {
        &self.sidecar_path
    }

    /// Applies `patch` to `name`, persists the sidecar, and only then makes
    /// the change visible. On a persistence failure nothing changes.
    pub async fn patch(
        &self,
        name: &str,
        patch: &MetadataPatch,
    ) -> Result<(NodeMetadata, Arc<Snapshot>), PatchError> {
        let base = self
            .base
            .get(name)
            .ok_or_else(|| PatchError::UnknownNode(name.to_string()))?
            .metadata;
        let mut writer = self.writer.lock().await;
        let mut next = writer.sidecar.clone();
        let entry = next.update(name, base, patch, MetadataSidecar::now());
        let bytes = next.to_bytes();
        let path = self.sidecar_path.clone();
        tokio::task::spawn_blocking(move || write_atomic(&path, &bytes))
            .await
            .expect("persist task panicked")
            .map_err(PatchError::Persist)?;

        let merged = entry.overlay(base);
        let current = self.snapshot();
        let (graph, _) = current.graph.with_metadata([(name, merged)]);
        let snapshot = Arc::new(Snapshot {
            graph,
            sidecar: next.clone(),
        });
        *self.snapshot.write().expect("snapshot lock poisoned") = snapshot.clone();
        writer.sidecar = next;
        Ok((merged, snapshot))
    }
}

/// Shared handler state. Empty until a graph has been installed, during which
/// the health endpoint answers 503 and everything else is unavailable.
#[derive(Default)]
pub struct ServiceState {
    loaded: OnceLock<LoadedState>,
}

impl ServiceState {
    pub fn uninitialized() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn with(loaded: LoadedState) -> Arc<Self> {
        let state = Self::default();
        let _ = state.loaded.set(loaded);
        Arc::new(state)
    }

    /// Installs the loaded graph; false if one was already present.
    pub fn install(&self, loaded: LoadedState) -> bool {
        self.loaded.set(loaded).is_ok()
    }

    pub fn loaded(&self) -> Option<&LoadedState> {
        self.loaded.get()
    }
}

/// Binds the configured address. Kept separate from [`serve`] so callers can
/// report the real address when port 0 was requested.
pub async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener, ServiceError> {
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}

pub async fn serve<F>(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
    shutdown: F,
) -> Result<(), ServiceError>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServiceError::Serve)
}
