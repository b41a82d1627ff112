//! Deterministic scenario loop: weather, ground truth and one edge node.
//!
//! All randomness comes from a ChaCha stream seeded by the config, so a
//! config fully determines the telemetry log.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sensors::{env_step, EnvDynamics, EnvState, SensorError, Weather};
use crate::telemetry::{write_log, OverrideState, TelemetryRecord};

use super::{step_node, ConfigError, IrrigationPolicy, NodeHardware, NodeState, PumpCommand};

const DAY_S: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub wetness: f64,
}

/// Half-sine daylight curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LightProfile {
    pub peak_lux: f64,
    pub day_length_s: f64,
    /// Seconds after scenario start at which the first day begins.
    pub sunrise_s: f64,
}

impl Default for LightProfile {
    fn default() -> Self {
        LightProfile {
            peak_lux: 60_000.0,
            day_length_s: 12.0 * 3600.0,
            sunrise_s: 6.0 * 3600.0,
        }
    }
}

impl LightProfile {
    pub fn lux_at(&self, t_s: f64) -> f64 {
        let tod = (t_s - self.sunrise_s).rem_euclid(DAY_S);
        if tod < self.day_length_s {
            self.peak_lux * (PI * tod / self.day_length_s).sin().max(0.0)
        } else {
            0.0
        }
    }
}

/// Optional daily swing of temperature and humidity around the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Climate {
    pub temp_amp_c: f64,
    pub rh_amp_pct: f64,
}

fn default_node() -> String {
    "n1".into()
}

fn default_start_ts() -> u64 {
    1_700_000_000_000
}

fn default_pump_rate() -> f64 {
    135.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_node")]
    pub node: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_start_ts")]
    pub start_ts_ms: u64,
    pub policy: IrrigationPolicy,
    #[serde(default)]
    pub dynamics: EnvDynamics,
    #[serde(default)]
    pub initial: EnvState,
    #[serde(default)]
    pub rain_intervals: Vec<RainInterval>,
    #[serde(default)]
    pub light_profile: LightProfile,
    #[serde(default)]
    pub climate: Climate,
    #[serde(default = "default_pump_rate")]
    pub pump_rate_ml_per_min: f64,
    /// Uniform +-10 % error on delivered flow.
    #[serde(default)]
    pub noise: bool,
    /// Per-read DHT11 time-scale error, uniform in +-this fraction.
    #[serde(default)]
    pub dht_jitter: f64,
    #[serde(default)]
    pub hardware: NodeHardware,
}

impl ScenarioConfig {
    pub fn new(duration_s: f64, policy: IrrigationPolicy) -> Self {
        ScenarioConfig {
            node: default_node(),
            seed: 0,
            duration_s,
            start_ts_ms: default_start_ts(),
            policy,
            dynamics: EnvDynamics::default(),
            initial: EnvState::default(),
            rain_intervals: Vec::new(),
            light_profile: LightProfile::default(),
            climate: Climate::default(),
            pump_rate_ml_per_min: default_pump_rate(),
            noise: false,
            dht_jitter: 0.0,
            hardware: NodeHardware::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde names missing fields in backticks
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("missing field"))
                .unwrap_or("scenario");
            ConfigError::new(field, msg.clone())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node.is_empty() {
            return Err(ConfigError::new("node", "must not be empty"));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(ConfigError::new("duration_s", "must be positive"));
        }
        self.policy.validate()?;
        if self.policy.tick_s > self.duration_s {
            return Err(ConfigError::new("tick_s", "longer than duration_s"));
        }
        let sensor = |e: SensorError| match &e {
            SensorError::OutOfRange { field, .. } | SensorError::Invalid { field, .. } => {
                ConfigError::new(*field, e.to_string())
            }
        };
        self.dynamics.validate().map_err(sensor)?;
        self.initial.validate().map_err(sensor)?;
        self.hardware.validate()?;
        for (i, r) in self.rain_intervals.iter().enumerate() {
            let field = format!("rain_intervals[{i}]");
            if !(0.0 <= r.start_s && r.start_s < r.end_s && r.end_s <= self.duration_s) {
                return Err(ConfigError::new(
                    field,
                    "interval must satisfy 0 <= start_s < end_s <= duration_s",
                ));
            }
            if !(0.0..=1.0).contains(&r.wetness) {
                return Err(ConfigError::new(field, "wetness must be within 0..=1"));
            }
        }
        if !(self.light_profile.peak_lux >= 0.0) {
            return Err(ConfigError::new("peak_lux", "must be non-negative"));
        }
        if !(self.light_profile.day_length_s > 0.0 && self.light_profile.day_length_s <= DAY_S) {
            return Err(ConfigError::new("day_length_s", "must be within (0, 86400]"));
        }
        if !(self.pump_rate_ml_per_min >= 0.0) {
            return Err(ConfigError::new("pump_rate_ml_per_min", "must be non-negative"));
        }
        if !(0.0..0.5).contains(&self.dht_jitter) {
            return Err(ConfigError::new("dht_jitter", "must be within [0, 0.5)"));
        }
        Ok(())
    }

    fn weather_at(&self, t_s: f64) -> Weather {
        let rain = self
            .rain_intervals
            .iter()
            .filter(|r| r.start_s <= t_s && t_s < r.end_s)
            .map(|r| r.wetness)
            .fold(0.0, f64::max);
        Weather {
            rain,
            light_lux: self.light_profile.lux_at(t_s),
        }
    }

    fn climate_at(&self, t_s: f64) -> (f64, f64) {
        // warmest and driest mid-afternoon
        let phase = (2.0 * PI * (t_s - 15.0 * 3600.0) / DAY_S).cos();
        (
            self.initial.temp_c + self.climate.temp_amp_c * phase,
            (self.initial.rh_pct - self.climate.rh_amp_pct * phase).clamp(0.0, 100.0),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub record: TelemetryRecord,
    pub command: PumpCommand,
    pub env: EnvState,
    pub dht_read: bool,
    pub dht_fault: bool,
}

/// Steps a scenario one tick at a time.
#[derive(Debug, Clone)]
pub struct ScenarioRunner {
    cfg: ScenarioConfig,
    rng: ChaCha8Rng,
    env: EnvState,
    node: NodeState,
    tick: u64,
    ticks: u64,
    tick_ms: u64,
}

impl ScenarioRunner {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let tick_ms = cfg.policy.tick_ms();
        let ticks = ((cfg.duration_s * 1000.0).round() as u64) / tick_ms;
        let mut env = cfg.initial;
        env.soil_pressure_kpa = cfg.dynamics.pressure_base_kpa + cfg.dynamics.pressure_per_moisture_kpa * env.moisture;
        Ok(ScenarioRunner {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            node: NodeState::new(cfg.node.clone(), &cfg.hardware),
            env,
            tick: 0,
            ticks,
            tick_ms,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn node_state(&self) -> &NodeState {
        &self.node
    }

    pub fn total_ticks(&self) -> u64 {
        self.ticks
    }

    /// Timestamp the next tick's record will carry.
    pub fn next_ts_ms(&self) -> u64 {
        self.cfg.start_ts_ms + (self.tick + 1) * self.tick_ms
    }

    /// Installs an operator override, effective from the next tick.
    pub fn apply_override(&mut self, state: OverrideState, ttl_s: u64) {
        let now = self.cfg.start_ts_ms + self.tick * self.tick_ms;
        self.node.apply_override(state, ttl_s, now);
    }

    pub fn step(&mut self) -> Option<TickOutput> {
        if self.tick >= self.ticks {
            return None;
        }
        let dt_s = self.tick_ms as f64 / 1000.0;
        let t_prev_s = (self.tick * self.tick_ms) as f64 / 1000.0;
        self.tick += 1;
        let ts_ms = self.cfg.start_ts_ms + self.tick * self.tick_ms;

        let (temp_c, rh_pct) = self.cfg.climate_at(t_prev_s);
        self.env.temp_c = temp_c;
        self.env.rh_pct = rh_pct;
        let weather = self.cfg.weather_at(t_prev_s);
        self.env = env_step(&self.env, &self.cfg.dynamics, dt_s, self.node.pump.on, weather)
            .expect("validated scenario yields admissible weather");

        // both draws happen every tick so the stream never depends on state
        let flow_u: f64 = self.rng.random_range(-1.0..=1.0);
        let dht_u: f64 = self.rng.random_range(-1.0..=1.0);
        let flow_factor = if self.cfg.noise { 1.0 + 0.1 * flow_u } else { 1.0 };

        let out = step_node(
            super::StepInputs {
                ts_ms,
                dt_s,
                env: &self.env,
                pump_rate_ml_per_min: self.cfg.pump_rate_ml_per_min * flow_factor,
                dht_time_scale: 1.0 + self.cfg.dht_jitter * dht_u,
            },
            &self.node,
            &self.cfg.policy,
            &self.cfg.hardware,
        )
        .expect("validated scenario yields in-range sensor inputs");
        self.node = out.state;
        Some(TickOutput {
            record: out.record,
            command: out.command,
            env: self.env,
            dht_read: out.dht_read,
            dht_fault: out.dht_fault.is_some(),
        })
    }
}

impl Iterator for ScenarioRunner {
    type Item = TickOutput;

    fn next(&mut self) -> Option<TickOutput> {
        self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSummary {
    pub records: usize,
    pub total_volume_ml: f64,
    pub pump_duty: f64,
    pub pump_transitions: usize,
    pub dht_faults: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub ticks: Vec<TickOutput>,
}

impl ScenarioRun {
    pub fn records(&self) -> impl Iterator<Item = &TelemetryRecord> {
        self.ticks.iter().map(|t| &t.record)
    }

    pub fn log(&self) -> String {
        write_log(self.records())
    }

    pub fn summary(&self) -> ScenarioSummary {
        let records = self.ticks.len();
        let on = self.ticks.iter().filter(|t| t.record.pump).count();
        let pump_transitions = self
            .ticks
            .windows(2)
            .filter(|w| w[0].record.pump != w[1].record.pump)
            .count();
        ScenarioSummary {
            records,
            total_volume_ml: self.ticks.last().map_or(0.0, |t| t.record.vol_ml.to_f64()),
            pump_duty: if records == 0 { 0.0 } else { on as f64 / records as f64 },
            pump_transitions,
            dht_faults: self.ticks.iter().filter(|t| t.dht_fault).count(),
        }
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, ConfigError> {
    let runner = ScenarioRunner::new(cfg.clone())?;
    Ok(ScenarioRun {
        ticks: runner.collect(),
    })
}
