use std::fmt;
use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;

use tokio::net::TcpListener;
use tracing::info;

use crate::telemetry::parse_log;

use super::{router, serve_ingest, DecisionService, ServiceConfig, SharedService};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    /// Defaults to the port after `port`, or an ephemeral one when `port` is 0.
    pub ingest_port: Option<u16>,
    pub store: PathBuf,
    pub replay: Option<PathBuf>,
    pub config: ServiceConfig,
}

impl ServeOptions {
    pub fn new(port: u16, store: impl Into<PathBuf>) -> Self {
        ServeOptions {
            host: "127.0.0.1".into(),
            port,
            ingest_port: None,
            store: store.into(),
            replay: None,
            config: ServiceConfig::default(),
        }
    }
}

/// Startup failure, with the field to blame and the process exit code.
#[derive(Debug)]
pub struct ServeError {
    pub field: &'static str,
    pub message: String,
    pub exit_code: u8,
}

impl fmt::Display for ServeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ServeError {}

fn fail(field: &'static str, exit_code: u8, e: impl fmt::Display) -> ServeError {
    ServeError {
        field,
        message: e.to_string(),
        exit_code,
    }
}

pub struct Server {
    svc: SharedService,
    http: TcpListener,
    ingest: TcpListener,
}

impl Server {
    /// Opens the store, preloads any replay log and binds both listeners.
    pub async fn bind(opts: ServeOptions) -> Result<Server, ServeError> {
        let mut svc = DecisionService::open(&opts.store, opts.config).map_err(|e| fail("store", 2, e))?;
        if let Some(path) = &opts.replay {
            let text = std::fs::read_to_string(path).map_err(|e| fail("replay", 2, e))?;
            let records = parse_log(&text).map_err(|e| fail("replay", 2, e))?;
            let n = svc.replay(records).map_err(|e| fail("store", 1, e))?;
            info!("replayed {n} records from {}", path.display());
        }
        let http = TcpListener::bind((opts.host.as_str(), opts.port))
            .await
            .map_err(|e| fail("port", 1, e))?;
        let ingest_port = opts
            .ingest_port
            .unwrap_or(if opts.port == 0 { 0 } else { opts.port.saturating_add(1) });
        let ingest = TcpListener::bind((opts.host.as_str(), ingest_port))
            .await
            .map_err(|e| fail("ingest-port", 1, e))?;
        Ok(Server {
            svc: svc.shared(),
            http,
            ingest,
        })
    }

    pub fn http_addr(&self) -> io::Result<SocketAddr> {
        self.http.local_addr()
    }

    pub fn ingest_addr(&self) -> io::Result<SocketAddr> {
        self.ingest.local_addr()
    }

    pub fn service(&self) -> SharedService {
        self.svc.clone()
    }

    /// Serves until `shutdown` resolves, then flushes the store file.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> io::Result<()> {
        let ingest = tokio::spawn(serve_ingest(self.ingest, self.svc.clone()));
        let result = axum::serve(self.http, router(self.svc.clone()))
            .with_graceful_shutdown(shutdown)
            .await;
        ingest.abort();
        self.svc.write().unwrap().flush()?;
        result
    }
}
