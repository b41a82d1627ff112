//! Live connection from a node to the decision service.
//!
//! Records go up the ingest socket one line each. The service may answer
//! on the same socket with override lines, which are applied at the next
//! tick.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use thiserror::Error;
use tracing::warn;

use crate::telemetry::{Downlink, TelemetryRecord};

use super::{ConfigError, ScenarioConfig, ScenarioRunner};

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("connection: {0}")]
    Io(#[from] io::Error),
}

pub struct NodeLink {
    stream: TcpStream,
    downlinks: mpsc::Receiver<Downlink>,
}

impl NodeLink {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let (tx, downlinks) = mpsc::channel();
        thread::spawn(move || {
            for line in reader.lines() {
                let Ok(line) = line else { break };
                match Downlink::parse_line(&line) {
                    Ok(d) => {
                        if tx.send(d).is_err() {
                            break;
                        }
                    }
                    Err(e) => warn!("ignoring downlink line: {e}"),
                }
            }
        });
        Ok(NodeLink { stream, downlinks })
    }

    pub fn send(&mut self, rec: &TelemetryRecord) -> io::Result<()> {
        let mut line = rec.to_line();
        line.push('\n');
        self.stream.write_all(line.as_bytes())
    }

    /// Downlinks received since the last call.
    pub fn drain(&self) -> Vec<Downlink> {
        self.downlinks.try_iter().collect()
    }
}

/// Runs a scenario against a live service, one tick every `pace`.
///
/// Returns the number of records sent.
pub fn run_live(cfg: ScenarioConfig, addr: impl ToSocketAddrs, pace: Duration) -> Result<u64, LiveError> {
    let mut runner = ScenarioRunner::new(cfg)?;
    let mut link = NodeLink::connect(addr)?;
    let mut sent = 0;
    loop {
        for d in link.drain() {
            runner.apply_override(d.state, d.ttl_s);
        }
        let Some(tick) = runner.step() else { break };
        link.send(&tick.record)?;
        sent += 1;
        if !pace.is_zero() {
            thread::sleep(pace);
        }
    }
    Ok(sent)
}
