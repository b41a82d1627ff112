//! The edge node: sensor sampling, the rain-gated hysteresis pump rule,
//! LCD pages and the deterministic scenario loop.

mod decide;
mod lcd;
pub mod link;
mod node;
mod scenario;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use decide::{decide_pump, Override, OverrideKind, PumpCommand, PumpReason, PumpState};
pub use lcd::{format_lcd, LcdPage, LCD_WIDTH};
pub use node::{step_node, NodeHardware, NodeState, StepInputs, StepOutput};
pub use scenario::{
    run_scenario, Climate, LightProfile, RainInterval, ScenarioConfig, ScenarioRun, ScenarioRunner, ScenarioSummary,
    TickOutput,
};

/// A configuration problem, tagged with the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn default_min_on_s() -> f64 {
    30.0
}

fn one() -> f64 {
    1.0
}

/// Per-crop watering thresholds and node cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrigationPolicy {
    #[serde(default)]
    pub crop_id: String,
    /// Watering starts at or below this moisture.
    pub m_on_pct: f64,
    /// Watering stops at or above this moisture.
    pub m_off_pct: f64,
    #[serde(default = "default_min_on_s")]
    pub min_on_s: f64,
    #[serde(default = "one")]
    pub dht_period_s: f64,
    #[serde(default = "one")]
    pub tick_s: f64,
}

impl Default for IrrigationPolicy {
    fn default() -> Self {
        IrrigationPolicy {
            crop_id: "default".into(),
            m_on_pct: 35.0,
            m_off_pct: 60.0,
            min_on_s: default_min_on_s(),
            dht_period_s: 1.0,
            tick_s: 1.0,
        }
    }
}

impl IrrigationPolicy {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=100.0).contains(&self.m_on_pct) {
            return Err(ConfigError::new("m_on_pct", "must be within 0..=100"));
        }
        if !(self.m_off_pct <= 100.0) {
            return Err(ConfigError::new("m_off_pct", "must be within 0..=100"));
        }
        if !(self.m_on_pct < self.m_off_pct) {
            return Err(ConfigError::new("m_on_pct", "must be below m_off_pct"));
        }
        if !(self.min_on_s >= 0.0) {
            return Err(ConfigError::new("min_on_s", "must be non-negative"));
        }
        if !(self.dht_period_s >= 1.0) {
            return Err(ConfigError::new("dht_period_s", "must be at least 1 s"));
        }
        if !(self.tick_s >= 0.001) || !self.tick_s.is_finite() {
            return Err(ConfigError::new("tick_s", "must be at least 1 ms"));
        }
        Ok(())
    }

    pub(crate) fn min_on_ms(&self) -> u64 {
        (self.min_on_s * 1000.0).round() as u64
    }

    pub(crate) fn dht_period_ms(&self) -> u64 {
        (self.dht_period_s * 1000.0).round() as u64
    }

    pub(crate) fn tick_ms(&self) -> u64 {
        (self.tick_s * 1000.0).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_validation_names_field() {
        assert!(IrrigationPolicy::default().validate().is_ok());
        let bad = IrrigationPolicy {
            m_on_pct: 60.0,
            m_off_pct: 35.0,
            ..IrrigationPolicy::default()
        };
        assert_eq!(bad.validate().unwrap_err().field, "m_on_pct");
        let fast = IrrigationPolicy {
            dht_period_s: 0.5,
            ..IrrigationPolicy::default()
        };
        assert_eq!(fast.validate().unwrap_err().field, "dht_period_s");
    }

    #[test]
    fn policy_json_defaults() {
        let p: IrrigationPolicy = serde_json::from_str(r#"{"m_on_pct":35,"m_off_pct":60}"#).unwrap();
        assert_eq!(p.min_on_s, 30.0);
        assert_eq!(p.dht_period_s, 1.0);
    }
}
