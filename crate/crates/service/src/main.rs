use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pma_explorer::{app, AppState, ServiceConfig, SessionStore};

/// Serve the explorer API.
#[derive(Debug, Parser)]
#[command(name = "pma-explorer", version)]
struct Args {
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Port to listen on.
    #[arg(long, env = "PMA_PORT", default_value_t = 8787)]
    port: u16,
    /// Maximum upload size in MiB.
    #[arg(long, default_value_t = 256)]
    max_upload_mb: usize,
    /// Datasets kept in memory before the least recently used is evicted.
    #[arg(long, default_value_t = pma_explorer::store::DEFAULT_MAX_DATASETS)]
    max_datasets: usize,
    /// Models kept in memory before the least recently used is evicted.
    #[arg(long, default_value_t = pma_explorer::store::DEFAULT_MAX_MODELS)]
    max_models: usize,
    /// Allowed CORS origin; repeat for several, `*` for any.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    /// Directory of static UI assets served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let addr: SocketAddr = match format!("{}:{}", args.bind, args.port).parse() {
        Ok(addr) => addr,
        Err(e) => {
            eprintln!("error: invalid bind address `{}`: {e}", args.bind);
            return ExitCode::from(2);
        }
    };
    let config = ServiceConfig {
        upload_limit: args.max_upload_mb.saturating_mul(1024 * 1024),
        cors_origins: args.cors_origins,
        static_dir: args.static_dir,
    };
    let state = AppState::new(SessionStore::new(args.max_datasets, args.max_models));
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(listener) => listener,
        Err(e) => {
            eprintln!("error: cannot bind {addr}: {e}");
            return ExitCode::from(1);
        }
    };
    log::info!("listening on http://{addr}");
    let served = axum::serve(listener, app(state, &config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
