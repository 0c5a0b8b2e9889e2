//! REST service over the published versions of an embedding store.
//!
//! Every response that depends on vectors names the version it was computed
//! from, both in the body and in the `x-ontovec-version` header.

pub mod error;
pub mod routes;
pub mod state;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use ontovec_core::{AppConfig, Store};

pub use error::{ApiError, ErrorBody};
pub use routes::{api_router, MAX_K, VERSION_HEADER};
pub use state::{AppState, Catalog, LoadedModel};

pub fn state_from_config(config: &AppConfig) -> Arc<AppState> {
    Arc::new(
        AppState::new(Store::new(&config.store_path), config.api.max_loaded).with_ui_dir(config.api.ui_dir.clone()),
    )
}

/// Binds `host:port` and serves until `shutdown` resolves.
pub async fn serve(
    state: Arc<AppState>,
    addr: SocketAddr,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, api_router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
