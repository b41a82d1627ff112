//! On-disk store: an append-only record log in the wire line format, and a
//! small JSON file of per-crop policies.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tracing::warn;

use crate::edge::IrrigationPolicy;
use crate::telemetry::TelemetryRecord;

pub const LOG_FILE: &str = "telemetry.log";
pub const POLICY_FILE: &str = "policies.json";

#[derive(Debug)]
pub struct StoreFile {
    file: File,
    path: PathBuf,
    /// Sync to disk after this many appends; 0 syncs only on flush.
    fsync_every: u32,
    unsynced: u32,
}

impl StoreFile {
    /// Opens the log under `dir`, returning the records already in it.
    ///
    /// A torn final line from an interrupted write is cut off so that new
    /// appends start on a clean line.
    pub fn open(dir: &Path, fsync_every: u32) -> io::Result<(StoreFile, Vec<TelemetryRecord>)> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e),
        };
        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            warn!("dropping torn final line in {}", path.display());
            OpenOptions::new().write(true).open(&path)?.set_len(complete as u64)?;
        }
        let mut records = Vec::new();
        for (n, line) in text[..complete].lines().enumerate() {
            match TelemetryRecord::parse_line(line) {
                Ok(r) => records.push(r),
                Err(e) => warn!("{}:{}: skipping unreadable record: {e}", path.display(), n + 1),
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((
            StoreFile {
                file,
                path,
                fsync_every,
                unsynced: 0,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, rec: &TelemetryRecord) -> io::Result<()> {
        let mut line = rec.to_line();
        line.push('\n');
        // a single write keeps each line whole
        self.file.write_all(line.as_bytes())?;
        self.unsynced += 1;
        if self.fsync_every > 0 && self.unsynced >= self.fsync_every {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.file.flush()?;
        self.file.sync_data()?;
        self.unsynced = 0;
        Ok(())
    }
}

pub fn load_policies(dir: &Path) -> io::Result<BTreeMap<String, IrrigationPolicy>> {
    match fs::read_to_string(dir.join(POLICY_FILE)) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(e),
    }
}

/// Replaces the policy file atomically.
pub fn save_policies(dir: &Path, policies: &BTreeMap<String, IrrigationPolicy>) -> io::Result<()> {
    let tmp = dir.join(format!("{POLICY_FILE}.tmp"));
    let text = serde_json::to_string(policies).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    fs::write(&tmp, text)?;
    fs::rename(tmp, dir.join(POLICY_FILE))
}
