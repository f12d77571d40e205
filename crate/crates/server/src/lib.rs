//! Multi-client plan server: a versioned document store for scenarios,
//! plans, run results and analytics inputs; asynchronous simulation runs on
//! a bounded FIFO worker pool; and the assessment pipelines, all over
//! HTTP/JSON. See [`api`] for the routes and [`config`] for the
//! environment variables.

pub mod api;
pub mod config;
pub mod runs;
pub mod store;
pub mod wire;

pub use api::{router, AppState};
pub use config::ServerConfig;
pub use store::{Store, StoreError};

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use thiserror::Error;
use tokio::net::TcpListener;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot open store: {0}")]
    Store(#[from] StoreError),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

/// A server bound to its listen address but not yet serving.
pub struct Server {
    listener: TcpListener,
    state: Arc<AppState>,
}

/// Open the store, start the run workers and bind the listener. Must be
/// called inside a Tokio runtime.
pub async fn bind(config: &ServerConfig) -> Result<Server, ServeError> {
    let dir = config.data_dir.clone();
    let store = tokio::task::spawn_blocking(move || Store::open(dir))
        .await
        .map_err(|e| std::io::Error::other(e.to_string()))??;
    let store = Arc::new(store);
    let queue = runs::RunQueue::start(store.clone(), config.workers, config.queue_capacity);
    let state = Arc::new(AppState { store, queue, sessions: Mutex::new(BTreeMap::new()) });
    let listener = TcpListener::bind(config.listen).await?;
    Ok(Server { listener, state })
}

impl Server {
    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    /// Serve until `shutdown` resolves, then finish in-flight requests.
    pub async fn run_until(self, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
        tracing::info!("listening on {}", self.listener.local_addr()?);
        axum::serve(self.listener, router(self.state)).with_graceful_shutdown(shutdown).await
    }

    pub async fn run(self) -> std::io::Result<()> {
        self.run_until(std::future::pending()).await
    }
}
