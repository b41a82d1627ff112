//! TCP line ingest. Each connection streams records; a queued override
//! for that node is written back after the record that follows it.

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tracing::{debug, warn};

use crate::telemetry::TelemetryRecord;

use super::SharedService;

pub async fn serve_ingest(listener: TcpListener, svc: SharedService) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                debug!("ingest connection from {peer}");
                tokio::spawn(handle(stream, svc.clone()));
            }
            Err(e) => warn!("ingest accept: {e}"),
        }
    }
}

async fn handle(stream: TcpStream, svc: SharedService) {
    let (rd, mut wr) = stream.into_split();
    let mut lines = BufReader::new(rd).lines();
    loop {
        let line = match lines.next_line().await {
            Ok(Some(l)) => l,
            Ok(None) => break,
            Err(e) => {
                warn!("ingest read: {e}");
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let rec = match TelemetryRecord::parse_line(&line) {
            Ok(r) => r,
            Err(e) => {
                warn!("rejected line: {e}");
                continue;
            }
        };
        let node = rec.node.clone();
        let downlink = {
            let mut svc = svc.write().unwrap();
            match svc.ingest(rec) {
                Ok(()) => svc.take_override(&node),
                Err(e) => {
                    warn!("rejected record: {e}");
                    None
                }
            }
        };
        if let Some(d) = downlink {
            let mut out = d.to_line();
            out.push('\n');
            if let Err(e) = wr.write_all(out.as_bytes()).await {
                warn!("downlink to {node}: {e}");
                break;
            }
        }
    }
}
