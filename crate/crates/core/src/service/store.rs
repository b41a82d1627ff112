use std::collections::BTreeMap;

use thiserror::Error;

use crate::telemetry::TelemetryRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stale record for {node}: ts {ts_ms} is not after {latest_ms}")]
pub struct StaleRecord {
    pub node: String,
    pub ts_ms: u64,
    pub latest_ms: u64,
}

/// Append-only, per-node time-ordered record store.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryStore {
    nodes: BTreeMap<String, Vec<TelemetryRecord>>,
    ingested: u64,
}

impl TelemetryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if `rec` would not extend its node's history.
    pub fn check(&self, rec: &TelemetryRecord) -> Result<(), StaleRecord> {
        match self.latest(&rec.node) {
            Some(last) if rec.ts_ms <= last.ts_ms => Err(StaleRecord {
                node: rec.node.clone(),
                ts_ms: rec.ts_ms,
                latest_ms: last.ts_ms,
            }),
            _ => Ok(()),
        }
    }

    pub fn ingest(&mut self, rec: TelemetryRecord) -> Result<(), StaleRecord> {
        self.check(&rec)?;
        self.nodes.entry(rec.node.clone()).or_default().push(rec);
        self.ingested += 1;
        Ok(())
    }

    pub fn latest(&self, node: &str) -> Option<&TelemetryRecord> {
        self.nodes.get(node).and_then(|v| v.last())
    }

    /// Most recent record across all nodes.
    pub fn newest(&self) -> Option<&TelemetryRecord> {
        self.nodes.values().filter_map(|v| v.last()).max_by_key(|r| r.ts_ms)
    }

    pub fn contains_node(&self, node: &str) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    /// Records with `from <= ts_ms <= to`.
    pub fn history(&self, node: &str, from: Option<u64>, to: Option<u64>) -> &[TelemetryRecord] {
        let Some(recs) = self.nodes.get(node) else {
            return &[];
        };
        let lo = from.map_or(0, |f| recs.partition_point(|r| r.ts_ms < f));
        let hi = to.map_or(recs.len(), |t| recs.partition_point(|r| r.ts_ms <= t));
        &recs[lo..hi.max(lo)]
    }

    pub fn ingested(&self) -> u64 {
        self.ingested
    }
}
