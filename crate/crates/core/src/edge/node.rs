use serde::{Deserialize, Serialize};

use crate::dht11::{read_through_wire, Dht11Error, Dht11Reading, Dht11Timing};
use crate::flow::{flow_to_pulses, FlowCalib, FlowError, FlowMeter, PulseAccumulator};
use crate::sensors::{
    adc_quantize, adc_to_voltage, divider_top_resistance, divider_voltage, ldr_lux, ldr_resistance, pressure_counts,
    pressure_from_counts, rain_signals, soil_moisture_voltage, AdcSpec, EnvState, LdrParams, PressureSpec,
    RainBoardModel, SensorError, VCC,
};
use crate::telemetry::{Centi, Fixed, OverrideState, TelemetryRecord};

use super::{decide_pump, IrrigationPolicy, Override, OverrideKind, PumpCommand, PumpState};

/// Electrical configuration of one node's sensor boards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeHardware {
    pub adc: AdcSpec,
    pub ldr: LdrParams,
    /// Bottom leg of the LDR divider.
    pub ldr_r_fixed: f64,
    pub rain_board: RainBoardModel,
    pub pressure: PressureSpec,
    pub flow: FlowCalib,
    #[serde(skip)]
    pub dht_timing: Dht11Timing,
}

impl Default for NodeHardware {
    fn default() -> Self {
        NodeHardware {
            adc: AdcSpec::default(),
            ldr: LdrParams::default(),
            ldr_r_fixed: 100.0,
            rain_board: RainBoardModel::default(),
            pressure: PressureSpec::default(),
            flow: FlowCalib::default(),
            dht_timing: Dht11Timing::default(),
        }
    }
}

impl NodeHardware {
    pub fn validate(&self) -> Result<(), super::ConfigError> {
        use super::ConfigError;
        let wrap = |e: SensorError| match e {
            SensorError::OutOfRange { field, .. } | SensorError::Invalid { field, .. } => {
                ConfigError::new(field, e.to_string())
            }
        };
        self.adc.validate().map_err(wrap)?;
        self.ldr.validate().map_err(wrap)?;
        self.rain_board.validate(VCC).map_err(wrap)?;
        if !(self.ldr_r_fixed > 0.0) {
            return Err(ConfigError::new("ldr_r_fixed", "must be positive"));
        }
        self.flow
            .validate()
            .map_err(|e| ConfigError::new("ml_per_pulse", e.to_string()))
    }

    pub fn moisture_counts(&self, moisture: f64) -> Result<u16, SensorError> {
        Ok(adc_quantize(soil_moisture_voltage(moisture)?, &self.adc) as u16)
    }

    /// Moisture percentage as the node reports it: 0 at full-scale voltage.
    pub fn moisture_pct(&self, counts: u16) -> u8 {
        let max = self.adc.max_count() as f64;
        ((max - counts as f64) * 100.0 / max).round().clamp(0.0, 100.0) as u8
    }

    pub fn light_counts(&self, lux: f64) -> Result<u16, SensorError> {
        let r = ldr_resistance(lux, &self.ldr)?;
        Ok(adc_quantize(divider_voltage(r, self.ldr_r_fixed, VCC)?, &self.adc) as u16)
    }

    /// Best lux estimate for an ADC reading of the LDR divider.
    pub fn lux_estimate(&self, counts: u16) -> f64 {
        if counts == 0 {
            return 0.0;
        }
        let v = adc_to_voltage(counts as u32, &self.adc).min(VCC);
        ldr_lux(divider_top_resistance(v, self.ldr_r_fixed, VCC), &self.ldr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node: String,
    pub pump: PumpState,
    pub last_dht: Dht11Reading,
    pub last_dht_attempt_ms: Option<u64>,
    pub flow_acc: PulseAccumulator,
    pub meter: FlowMeter,
}

impl NodeState {
    pub fn new(node: impl Into<String>, hw: &NodeHardware) -> Self {
        NodeState {
            node: node.into(),
            pump: PumpState::default(),
            last_dht: Dht11Reading::default(),
            last_dht_attempt_ms: None,
            flow_acc: PulseAccumulator::default(),
            meter: FlowMeter::new(hw.flow),
        }
    }

    pub fn apply_override(&mut self, state: OverrideState, ttl_s: u64, now_ms: u64) {
        self.pump.override_ = match state {
            OverrideState::On => Some(Override::new(OverrideKind::ForcedOn, now_ms, ttl_s)),
            OverrideState::Off => Some(Override::new(OverrideKind::ForcedOff, now_ms, ttl_s)),
            OverrideState::Clear => None,
        };
    }
}

/// Everything outside the node that one tick depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInputs<'a> {
    pub ts_ms: u64,
    /// Length of the tick that just ended.
    pub dt_s: f64,
    pub env: &'a EnvState,
    /// Flow delivered while the pump was on during the tick.
    pub pump_rate_ml_per_min: f64,
    /// Time scale applied to the DHT11 waveform on the wire.
    pub dht_time_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub record: TelemetryRecord,
    pub command: PumpCommand,
    pub state: NodeState,
    pub dht_read: bool,
    /// Set when the DHT11 exchange failed and the last good values were reused.
    pub dht_fault: Option<Dht11Error>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn dht_sample(env: &EnvState, timing: &Dht11Timing, scale: f64) -> Result<Dht11Reading, Dht11Error> {
    let tenths = |v: f64, field| {
        let t = (v * 10.0).round();
        if (0.0..=u16::MAX as f64).contains(&t) {
            Ok(t as u16)
        } else {
            Err(Dht11Error::Range { field, value: 0 })
        }
    };
    let r = Dht11Reading::from_tenths(tenths(env.rh_pct, "rh_int")?, tenths(env.temp_c, "t_int")?)?;
    read_through_wire(&r, timing, scale)
}

/// One tick of the node: sample, decide, account for flow, emit a record.
pub fn step_node(
    input: StepInputs<'_>,
    state: &NodeState,
    pol: &IrrigationPolicy,
    hw: &NodeHardware,
) -> Result<StepOutput, NodeError> {
    let mut next = state.clone();
    let env = input.env;

    let due = match state.last_dht_attempt_ms {
        None => true,
        Some(last) => input.ts_ms.saturating_sub(last) >= pol.dht_period_ms(),
    };
    let mut dht_fault = None;
    if due {
        next.last_dht_attempt_ms = Some(input.ts_ms);
        match dht_sample(env, &hw.dht_timing, input.dht_time_scale) {
            Ok(r) => next.last_dht = r,
            Err(e) => dht_fault = Some(e),
        }
    }

    let m_raw = hw.moisture_counts(env.moisture)?;
    let m_pct = hw.moisture_pct(m_raw);
    let rain = rain_signals(env.rain_wetness, &hw.rain_board, VCC)?.rain_detected;
    let lux_raw = hw.light_counts(env.light_lux)?;
    let p_counts = pressure_counts(env.soil_pressure_kpa, &hw.pressure)?;
    let p_kpa = pressure_from_counts(p_counts, &hw.pressure);

    // flow over the tick that just ended follows the pump state it ran under
    let pulses = if state.pump.on {
        let (n, acc) = flow_to_pulses(input.pump_rate_ml_per_min, input.dt_s, state.flow_acc, &hw.flow)?;
        next.flow_acc = acc;
        n
    } else {
        0
    };
    let sample = next.meter.sample(pulses, input.dt_s)?;

    let command = decide_pump(m_pct as f64, rain, &state.pump, pol, input.ts_ms);
    next.pump = state.pump.apply(command, input.ts_ms);

    let record = TelemetryRecord {
        node: state.node.clone(),
        ts_ms: input.ts_ms,
        t_c: Fixed(next.last_dht.temperature_tenths() as i64),
        rh_pct: Fixed(next.last_dht.humidity_tenths() as i64),
        m_pct,
        m_raw,
        rain,
        lux_raw,
        p_kpa: Centi::from_f64(p_kpa),
        f_mlmin: Centi::from_f64(sample.rate_ml_per_min),
        vol_ml: Centi::from_f64(sample.cumulative_ml),
        pump: command.on,
    };
    Ok(StepOutput {
        record,
        command,
        state: next,
        dht_read: due,
        dht_fault,
    })
}
