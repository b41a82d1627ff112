//! Deterministic smart-irrigation stack.
//!
//! - [`sensors`]: transfer functions from simulated ground truth to signals
//! - [`dht11`]: bit-exact DHT11 frame and waveform codec
//! - [`flow`]: hall-effect flow meter arithmetic
//! - [`edge`]: rain-gated hysteresis controller and the scenario loop
//! - [`telemetry`]: the record line format shared by edge and service
//! - [`service`]: ingest, persistence, depletion learning and the HTTP API
//! - [`power`]: linear supply chain arithmetic
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` is how NaN gets rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dht11;
pub mod edge;
pub mod flow;
pub mod power;
pub mod sensors;
pub mod service;
pub mod telemetry;

pub use telemetry::TelemetryRecord;
