//! HTTP service for the coordinator workflow: upload an instance, solve and
//! hand-edit the board, then solve and inspect the agenda. Workspaces are
//! kept as one JSON file each in a data directory.

pub mod api;
pub mod gantt;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tokio::sync::Semaphore;

pub use api::{router, AgendaView, AppState, BoardView, Reassignment};
pub use store::{JobState, JobStatus, Phase, Store, Workspace};

#[derive(Debug, Clone)]
pub struct Config {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Cutoff in seconds for solve requests that do not name one.
    pub default_cutoff: f64,
    /// Solve jobs allowed to run at once; further jobs queue.
    pub workers: usize,
}

impl AppState {
    pub fn new(store: Store, default_cutoff: f64, workers: usize) -> Self {
        Self {
            store: Arc::new(store),
            default_cutoff,
            pool: Arc::new(Semaphore::new(workers.max(1))),
        }
    }
}

/// Opens the data directory and serves until the process is stopped.
pub async fn serve(cfg: Config) -> std::io::Result<()> {
    let store = Store::open(&cfg.data_dir)?;
    let app = router(AppState::new(store, cfg.default_cutoff, cfg.workers));
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
