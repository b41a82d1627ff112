//! Online depletion model.
//!
//! Free depletion (pump off, no rain) is modeled as a linear function of
//! `(1, temp_c, 1 - rh/100, lux / full sun)` and fitted one record pair at
//! a time with a normalized LMS step.

use serde::Serialize;
use thiserror::Error;

use crate::edge::NodeHardware;
use crate::sensors::FULL_SUN_LUX;
use crate::telemetry::TelemetryRecord;

/// Regularizer in the NLMS denominator.
pub const NLMS_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("timestamps must increase: {prev} then {cur}")]
    NonMonotone { prev: u64, cur: u64 },
    #[error("record pair spans nodes {0} and {1}")]
    NodeMismatch(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; 4]);

impl FeatureVector {
    pub fn new(temp_c: f64, rh_pct: f64, lux: f64) -> Self {
        FeatureVector([1.0, temp_c, 1.0 - rh_pct / 100.0, lux / FULL_SUN_LUX])
    }

    /// Features as seen through the wire: light comes back from raw counts.
    pub fn from_record(rec: &TelemetryRecord, hw: &NodeHardware) -> Self {
        FeatureVector::new(rec.t_c.to_f64(), rec.rh_pct.to_f64(), hw.lux_estimate(rec.lux_raw))
    }

    pub fn dot(&self, w: &[f64; 4]) -> f64 {
        self.0.iter().zip(w).map(|(x, w)| x * w).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelCoefficients {
    /// Moisture fraction per second, per unit of each feature.
    pub w: [f64; 4],
    pub n_samples: u64,
    pub learning_rate: f64,
}

impl ModelCoefficients {
    pub fn new(learning_rate: f64) -> Self {
        ModelCoefficients {
            w: [0.0; 4],
            n_samples: 0,
            learning_rate,
        }
    }

    /// Predicted depletion rate in moisture fraction per second.
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.w)
    }

    /// One normalized LMS step toward target `y`.
    pub fn nlms_step(&self, x: &FeatureVector, y: f64) -> ModelCoefficients {
        let err = y - self.predict(x);
        let gain = self.learning_rate * err / (NLMS_EPSILON + x.norm_sq());
        let mut w = self.w;
        for (w, x) in w.iter_mut().zip(x.0) {
            *w += gain * x;
        }
        ModelCoefficients {
            w,
            n_samples: self.n_samples + 1,
            learning_rate: self.learning_rate,
        }
    }
}

/// Only intervals without pump or rain at either end train the model.
pub fn is_free_depletion(prev: &TelemetryRecord, cur: &TelemetryRecord) -> bool {
    !(prev.pump || prev.rain || cur.pump || cur.rain)
}

/// Observed depletion between two records, moisture fraction per second.
pub fn observed_depletion(prev: &TelemetryRecord, cur: &TelemetryRecord) -> f64 {
    let dt_s = (cur.ts_ms - prev.ts_ms) as f64 / 1000.0;
    (prev.m_pct as f64 - cur.m_pct as f64) / 100.0 / dt_s
}

pub fn update_model(
    m: &ModelCoefficients,
    prev: &TelemetryRecord,
    cur: &TelemetryRecord,
    hw: &NodeHardware,
) -> Result<ModelCoefficients, ModelError> {
    if prev.node != cur.node {
        return Err(ModelError::NodeMismatch(prev.node.clone(), cur.node.clone()));
    }
    if cur.ts_ms <= prev.ts_ms {
        return Err(ModelError::NonMonotone {
            prev: prev.ts_ms,
            cur: cur.ts_ms,
        });
    }
    if !is_free_depletion(prev, cur) {
        return Ok(*m);
    }
    let x = FeatureVector::from_record(prev, hw);
    Ok(m.nlms_step(&x, observed_depletion(prev, cur)))
}
