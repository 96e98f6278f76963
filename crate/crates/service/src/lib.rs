//! Session-oriented HTTP front end for the weighted state transition engine.
//!
//! Sessions hold a scenario document, its live world state and the pathway
//! instances selected for it. They are kept in memory and mirrored to one
//! JSON file each in a data directory, so a restarted service picks up where
//! it stopped.

pub mod error;
pub mod routes;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use error::ServiceError;
pub use routes::router;
pub use session::{replay, Session};
pub use store::Store;

/// Environment variable that overrides the data directory.
pub const DATA_DIR_ENV: &str = "WST_DATA_DIR";

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    store: Arc<Store>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store)).with_graceful_shutdown(shutdown).await
}

/// A service running in the background of the current runtime.
pub struct RunningService {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningService {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Binds `addr` (port 0 picks a free port) and serves sessions stored in
/// `data_dir`.
pub async fn start(addr: SocketAddr, data_dir: impl Into<PathBuf>) -> Result<RunningService, ServiceError> {
    let store = Arc::new(Store::open(data_dir)?);
    let listener = TcpListener::bind(addr).await.map_err(|e| ServiceError::Storage(format!("binding {addr}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Storage(e.to_string()))?;
    let (stop, stopped) = oneshot::channel::<()>();
    let task = tokio::spawn(serve(listener, store, async move {
        let _ = stopped.await;
    }));
    Ok(RunningService { addr, stop: Some(stop), task })
}
