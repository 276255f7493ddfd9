//! HTTP service for designing simplex measures and fitting principal moments
//! on uploaded datasets.
//!
//! Fits run through the same pipeline as the `pma` command line tool, so a
//! model fitted here exports the same bytes as the CLI on the same inputs.

pub mod api;
pub mod store;

use axum::http::HeaderValue;
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use api::{router, ApiError, AppState, DatasetSummary, ModelRequest, ModelSummary};
pub use store::{SessionStore, StoredModel};

/// Service options that shape the router.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub upload_limit: usize,
    pub cors_origins: Vec<String>,
    pub static_dir: Option<std::path::PathBuf>,
}

/// The API router plus CORS and an optional static file fallback.
pub fn app(state: AppState, config: &ServiceConfig) -> Router {
    let mut app = router(state, config.upload_limit);
    if let Some(dir) = &config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    if !config.cors_origins.is_empty() {
        let cors = if config.cors_origins.iter().any(|o| o == "*") {
            CorsLayer::new().allow_origin(Any)
        } else {
            let origins: Vec<HeaderValue> = config
                .cors_origins
                .iter()
                .filter_map(|o| HeaderValue::from_str(o).ok())
                .collect();
            CorsLayer::new().allow_origin(origins)
        };
        app = app.layer(cors.allow_methods(Any).allow_headers(Any));
    }
    app
}
