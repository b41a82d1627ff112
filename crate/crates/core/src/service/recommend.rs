use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edge::{IrrigationPolicy, NodeHardware};
use crate::telemetry::TelemetryRecord;

use super::model::{FeatureVector, ModelCoefficients};

/// How fast the pump wets a plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotParams {
    pub pump_rate_ml_per_min: f64,
    /// Water needed to raise the plot by one moisture point.
    pub plot_capacity_ml_per_moisture_pct: f64,
}

impl Default for PlotParams {
    fn default() -> Self {
        PlotParams {
            pump_rate_ml_per_min: 135.0,
            plot_capacity_ml_per_moisture_pct: 22.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRecommendation {
    pub crop_id: String,
    pub next_irrigation_eta_s: Option<f64>,
    pub suggested_duration_s: f64,
    pub predicted_depletion_frac_per_hr: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("latest telemetry is {age_s:.0} s old")]
    StaleTelemetry { age_s: f64 },
    #[error("{0} must be positive")]
    InvalidPlot(&'static str),
}

pub fn recommend_policy(
    model: &ModelCoefficients,
    latest: &TelemetryRecord,
    pol: &IrrigationPolicy,
    plot: &PlotParams,
    hw: &NodeHardware,
    now_ms: u64,
    staleness_s: f64,
) -> Result<PolicyRecommendation, RecommendError> {
    let age_s = now_ms.saturating_sub(latest.ts_ms) as f64 / 1000.0;
    if age_s > staleness_s {
        return Err(RecommendError::StaleTelemetry { age_s });
    }
    if !(plot.pump_rate_ml_per_min > 0.0) {
        return Err(RecommendError::InvalidPlot("pump_rate_ml_per_min"));
    }
    if !(plot.plot_capacity_ml_per_moisture_pct > 0.0) {
        return Err(RecommendError::InvalidPlot("plot_capacity_ml_per_moisture_pct"));
    }

    let depletion = model.predict(&FeatureVector::from_record(latest, hw)).max(0.0);
    let m_pct = latest.m_pct as f64;
    let eta = if depletion == 0.0 {
        None
    } else if m_pct <= pol.m_on_pct {
        Some(0.0)
    } else {
        Some((m_pct - pol.m_on_pct) / 100.0 / depletion)
    };
    let pct_per_s = plot.pump_rate_ml_per_min / 60.0 / plot.plot_capacity_ml_per_moisture_pct;
    Ok(PolicyRecommendation {
        crop_id: pol.crop_id.clone(),
        next_irrigation_eta_s: eta,
        suggested_duration_s: (pol.m_off_pct - pol.m_on_pct) / pct_per_s,
        predicted_depletion_frac_per_hr: depletion * 3600.0,
    })
}
