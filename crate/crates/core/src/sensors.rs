//! Transfer functions from simulated ground truth to sensor signals.
//!
//! Every function here is pure. The environment itself evolves through
//! [`env_step`], which is the only place where time enters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Supply rail used by every board in the node.
pub const VCC: f64 = 5.0;

/// Full sunlight, used to normalize light in the depletion model.
pub const FULL_SUN_LUX: f64 = 100_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("{field} out of range: {value}")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn out_of_range(field: &'static str, value: f64) -> SensorError {
    SensorError::OutOfRange { field, value }
}

fn check_fraction(field: &'static str, value: f64) -> Result<(), SensorError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(out_of_range(field, value))
    }
}

/// Ground truth for one plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvState {
    /// 0 = bone dry, 1 = saturated.
    pub moisture: f64,
    pub rain_wetness: f64,
    pub light_lux: f64,
    pub temp_c: f64,
    pub rh_pct: f64,
    pub soil_pressure_kpa: f64,
}

impl Default for EnvState {
    fn default() -> Self {
        EnvState {
            moisture: 0.5,
            rain_wetness: 0.0,
            light_lux: 0.0,
            temp_c: 25.0,
            rh_pct: 50.0,
            soil_pressure_kpa: 20.0,
        }
    }
}

impl EnvState {
    pub fn validate(&self) -> Result<(), SensorError> {
        check_fraction("moisture", self.moisture)?;
        check_fraction("rain_wetness", self.rain_wetness)?;
        if !(self.light_lux >= 0.0) {
            return Err(out_of_range("light_lux", self.light_lux));
        }
        if !(0.0..=40.0).contains(&self.soil_pressure_kpa) {
            return Err(out_of_range("soil_pressure_kpa", self.soil_pressure_kpa));
        }
        if !self.temp_c.is_finite() {
            return Err(out_of_range("temp_c", self.temp_c));
        }
        if !(0.0..=100.0).contains(&self.rh_pct) {
            return Err(out_of_range("rh_pct", self.rh_pct));
        }
        Ok(())
    }
}

/// Photoresistor power-law parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdrParams {
    pub r_dark: f64,
    pub r_at_10lux: f64,
    pub gamma: f64,
}

impl Default for LdrParams {
    fn default() -> Self {
        LdrParams {
            r_dark: 1e12,
            r_at_10lux: 10_000.0,
            gamma: 0.8,
        }
    }
}

impl LdrParams {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.r_at_10lux > 0.0 && self.r_dark > self.r_at_10lux) {
            return Err(SensorError::Invalid {
                field: "r_dark",
                reason: "need r_dark > r_at_10lux > 0".into(),
            });
        }
        if !(self.gamma > 0.0) {
            return Err(out_of_range("gamma", self.gamma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdcSpec {
    pub vref: f64,
    pub bits: u32,
}

impl Default for AdcSpec {
    fn default() -> Self {
        AdcSpec { vref: 5.0, bits: 10 }
    }
}

impl AdcSpec {
    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn max_count(&self) -> u32 {
        self.levels() - 1
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        if !(1..=24).contains(&self.bits) {
            return Err(out_of_range("bits", self.bits as f64));
        }
        if !(self.vref > 0.0) {
            return Err(out_of_range("vref", self.vref));
        }
        Ok(())
    }
}

/// Rain board as a resistive divider feeding a comparator.
///
/// The board sits on the bottom leg, so a dry board reads close to `vcc`
/// and a soaked one pulls the output down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RainBoardModel {
    pub r_dry: f64,
    pub r_wet: f64,
    pub r_fixed: f64,
    pub v_threshold: f64,
}

impl Default for RainBoardModel {
    fn default() -> Self {
        RainBoardModel {
            r_dry: 100_000.0,
            r_wet: 2_000.0,
            r_fixed: 10_000.0,
            v_threshold: 4.0,
        }
    }
}

impl RainBoardModel {
    pub fn validate(&self, vcc: f64) -> Result<(), SensorError> {
        if !(self.r_wet > 0.0 && self.r_dry > self.r_wet) {
            return Err(SensorError::Invalid {
                field: "r_dry",
                reason: "need r_dry > r_wet > 0".into(),
            });
        }
        if !(self.r_fixed > 0.0) {
            return Err(out_of_range("r_fixed", self.r_fixed));
        }
        if !(self.v_threshold > 0.0 && self.v_threshold < vcc) {
            return Err(out_of_range("v_threshold", self.v_threshold));
        }
        Ok(())
    }
}

/// Programmable gain of the bridge ADC front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum PgaGain {
    X32,
    X64,
    X128,
}

impl PgaGain {
    pub fn factor(self) -> f64 {
        match self {
            PgaGain::X32 => 32.0,
            PgaGain::X64 => 64.0,
            PgaGain::X128 => 128.0,
        }
    }
}

impl TryFrom<u32> for PgaGain {
    type Error = SensorError;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            32 => Ok(PgaGain::X32),
            64 => Ok(PgaGain::X64),
            128 => Ok(PgaGain::X128),
            other => Err(out_of_range("gain", other as f64)),
        }
    }
}

impl From<PgaGain> for u32 {
    fn from(g: PgaGain) -> u32 {
        g.factor() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum DataRate {
    Sps10,
    Sps80,
}

impl TryFrom<u32> for DataRate {
    type Error = SensorError;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            10 => Ok(DataRate::Sps10),
            80 => Ok(DataRate::Sps80),
            other => Err(out_of_range("rate_sps", other as f64)),
        }
    }
}

impl From<DataRate> for u32 {
    fn from(r: DataRate) -> u32 {
        match r {
            DataRate::Sps10 => 10,
            DataRate::Sps80 => 80,
        }
    }
}

/// 0-40 kPa bridge sensor behind a 24-bit ADC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PressureSpec {
    pub gain: PgaGain,
    pub rate_sps: DataRate,
}

impl PressureSpec {
    pub const FULL_SCALE_KPA: f64 = 40.0;
}

impl Default for PressureSpec {
    fn default() -> Self {
        PressureSpec {
            gain: PgaGain::X128,
            rate_sps: DataRate::Sps10,
        }
    }
}

/// Ground-truth evolution of soil moisture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvDynamics {
    pub k_pump: f64,
    pub k_rain: f64,
    /// Depletion coefficients for (1, temp_c, 1 - rh/100, lux / full sun).
    pub w_true: [f64; 4],
    pub pressure_base_kpa: f64,
    pub pressure_per_moisture_kpa: f64,
}

impl Default for EnvDynamics {
    fn default() -> Self {
        EnvDynamics {
            k_pump: 1e-3,
            k_rain: 5e-4,
            w_true: [1e-6, 1e-7, 5e-6, 5e-6],
            pressure_base_kpa: 5.0,
            pressure_per_moisture_kpa: 30.0,
        }
    }
}

impl EnvDynamics {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.k_pump > 0.0) {
            return Err(out_of_range("k_pump", self.k_pump));
        }
        if !(self.k_rain >= 0.0) {
            return Err(out_of_range("k_rain", self.k_rain));
        }
        if let Some(w) = self.w_true.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(out_of_range("w_true", *w));
        }
        let lo = self.pressure_base_kpa;
        let hi = self.pressure_base_kpa + self.pressure_per_moisture_kpa;
        for p in [lo, hi] {
            if !(0.0..=PressureSpec::FULL_SCALE_KPA).contains(&p) {
                return Err(out_of_range("pressure_base_kpa", p));
            }
        }
        Ok(())
    }

    /// Free depletion rate in moisture fraction per second.
    pub fn depletion(&self, temp_c: f64, rh_pct: f64, light_lux: f64) -> f64 {
        let x = [1.0, temp_c, 1.0 - rh_pct / 100.0, light_lux / FULL_SUN_LUX];
        self.w_true.iter().zip(x).map(|(w, x)| w * x).sum()
    }
}

pub fn ldr_resistance(lux: f64, p: &LdrParams) -> Result<f64, SensorError> {
    if !(lux >= 0.0) {
        return Err(out_of_range("lux", lux));
    }
    if lux == 0.0 {
        return Ok(p.r_dark);
    }
    let r = p.r_at_10lux * (lux / 10.0).powf(-p.gamma);
    Ok(r.min(p.r_dark))
}

/// Inverse of [`ldr_resistance`] on its unclamped branch.
pub fn ldr_lux(r_sensor: f64, p: &LdrParams) -> f64 {
    if !(r_sensor > 0.0) || r_sensor >= p.r_dark {
        return 0.0;
    }
    10.0 * (r_sensor / p.r_at_10lux).powf(-1.0 / p.gamma)
}

/// Sensor on the top leg, output taken across `r_fixed`.
pub fn divider_voltage(r_sensor: f64, r_fixed: f64, vcc: f64) -> Result<f64, SensorError> {
    if !(r_fixed > 0.0) {
        return Err(out_of_range("r_fixed", r_fixed));
    }
    if !(r_sensor >= 0.0) {
        return Err(out_of_range("r_sensor", r_sensor));
    }
    if !(vcc > 0.0) {
        return Err(out_of_range("vcc", vcc));
    }
    Ok(vcc * r_fixed / (r_sensor + r_fixed))
}

/// Recovers the top-leg resistance from a divider reading.
pub fn divider_top_resistance(v_out: f64, r_fixed: f64, vcc: f64) -> f64 {
    if v_out <= 0.0 {
        return f64::INFINITY;
    }
    r_fixed * (vcc - v_out).max(0.0) / v_out
}

/// Ideal ADC: floor of the scaled input, clamped to the code range.
pub fn adc_quantize(v: f64, spec: &AdcSpec) -> u32 {
    let scaled = (v / spec.vref * spec.levels() as f64).floor();
    if !(scaled > 0.0) {
        0
    } else if scaled >= spec.max_count() as f64 {
        spec.max_count()
    } else {
        scaled as u32
    }
}

/// Midpoint voltage of an ADC code bin.
pub fn adc_to_voltage(counts: u32, spec: &AdcSpec) -> f64 {
    (counts as f64 + 0.5) * spec.vref / spec.levels() as f64
}

pub fn soil_moisture_voltage(moisture: f64) -> Result<f64, SensorError> {
    check_fraction("moisture", moisture)?;
    Ok(VCC * (1.0 - moisture))
}

/// Digital pin of the soil moisture board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoilDigital {
    /// Soil moisture is sufficient.
    Low,
    /// Soil is dry.
    High,
}

pub fn soil_digital(analog_v: f64, set_point_v: f64) -> SoilDigital {
    if analog_v < set_point_v {
        SoilDigital::Low
    } else {
        SoilDigital::High
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainSignals {
    pub analog: f64,
    pub rain_detected: bool,
}

pub fn rain_signals(wetness: f64, m: &RainBoardModel, vcc: f64) -> Result<RainSignals, SensorError> {
    check_fraction("wetness", wetness)?;
    let board = m.r_dry + wetness * (m.r_wet - m.r_dry);
    // fixed resistor on top, board below
    let analog = divider_voltage(m.r_fixed, board, vcc)?;
    Ok(RainSignals {
        analog,
        rain_detected: analog < m.v_threshold,
    })
}

const PRESSURE_FULL_COUNTS: f64 = ((1 << 23) - 1) as f64;

pub fn pressure_counts(p_kpa: f64, spec: &PressureSpec) -> Result<i32, SensorError> {
    if !(0.0..=PressureSpec::FULL_SCALE_KPA).contains(&p_kpa) {
        return Err(out_of_range("p_kpa", p_kpa));
    }
    let raw = (p_kpa / PressureSpec::FULL_SCALE_KPA * PRESSURE_FULL_COUNTS * spec.gain.factor() / 128.0).round();
    Ok(raw.clamp(-(1 << 23) as f64, PRESSURE_FULL_COUNTS) as i32)
}

pub fn pressure_from_counts(counts: i32, spec: &PressureSpec) -> f64 {
    counts as f64 / PRESSURE_FULL_COUNTS * PressureSpec::FULL_SCALE_KPA * 128.0 / spec.gain.factor()
}

/// Weather driving one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Weather {
    pub rain: f64,
    pub light_lux: f64,
}

pub fn env_step(
    env: &EnvState,
    dynamics: &EnvDynamics,
    dt_s: f64,
    pump_on: bool,
    weather: Weather,
) -> Result<EnvState, SensorError> {
    if !(dt_s > 0.0) {
        return Err(out_of_range("dt", dt_s));
    }
    check_fraction("weather_rain", weather.rain)?;
    if !(weather.light_lux >= 0.0) {
        return Err(out_of_range("weather_light", weather.light_lux));
    }
    let inflow = if pump_on { dynamics.k_pump } else { 0.0 } + dynamics.k_rain * weather.rain;
    let depletion = dynamics.depletion(env.temp_c, env.rh_pct, weather.light_lux);
    let moisture = (env.moisture + (inflow - depletion) * dt_s).clamp(0.0, 1.0);
    Ok(EnvState {
        moisture,
        rain_wetness: weather.rain,
        light_lux: weather.light_lux,
        temp_c: env.temp_c,
        rh_pct: env.rh_pct,
        soil_pressure_kpa: dynamics.pressure_base_kpa + dynamics.pressure_per_moisture_kpa * moisture,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ldr_dark_and_inverse_law() {
        let p = LdrParams::default();
        assert_eq!(ldr_resistance(0.0, &p).unwrap(), 1e12);

        let lin = LdrParams {
            gamma: 1.0,
            ..LdrParams::default()
        };
        assert!(close(ldr_resistance(10.0, &lin).unwrap(), 10_000.0, 1e-9));
        assert!(close(ldr_resistance(20.0, &lin).unwrap(), 5_000.0, 1e-9));

        // 10k * 10^-0.8, evaluated independently
        assert!(close(ldr_resistance(100.0, &p).unwrap(), 1584.893192, 1e-5));
        assert!(matches!(
            ldr_resistance(-1.0, &p),
            Err(SensorError::OutOfRange { field: "lux", .. })
        ));
    }

    #[test]
    fn divider_examples() {
        assert_eq!(divider_voltage(10e3, 10e3, 5.0).unwrap(), 2.5);
        assert_eq!(divider_voltage(0.0, 10e3, 5.0).unwrap(), 5.0);
        assert_eq!(divider_voltage(30e3, 10e3, 5.0).unwrap(), 1.25);
        assert!(divider_voltage(1.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn adc_examples() {
        let spec = AdcSpec::default();
        assert_eq!(adc_quantize(0.0, &spec), 0);
        assert_eq!(adc_quantize(5.0, &spec), 1023);
        assert_eq!(adc_quantize(2.5, &spec), 512);
        assert_eq!(adc_quantize(-1.0, &spec), 0);
        assert_eq!(adc_quantize(f64::NAN, &spec), 0);
    }

    #[test]
    fn soil_voltage_endpoints() {
        assert_eq!(soil_moisture_voltage(0.0).unwrap(), 5.0);
        assert_eq!(soil_moisture_voltage(1.0).unwrap(), 0.0);
        assert_eq!(soil_moisture_voltage(0.5).unwrap(), 2.5);
        assert!(soil_moisture_voltage(1.01).is_err());
        assert_eq!(soil_digital(1.0, 2.5), SoilDigital::Low);
        assert_eq!(soil_digital(4.0, 2.5), SoilDigital::High);
    }

    #[test]
    fn rain_board_orientation() {
        let m = RainBoardModel {
            r_dry: 1e6,
            r_wet: 10e3,
            r_fixed: 10e3,
            v_threshold: 2.5,
        };
        let dry = rain_signals(0.0, &m, 5.0).unwrap();
        assert!(close(dry.analog, 5.0 * 1e6 / 1.01e6, 1e-12));
        assert!(!dry.rain_detected);

        let m26 = RainBoardModel { v_threshold: 2.6, ..m };
        let wet = rain_signals(1.0, &m26, 5.0).unwrap();
        assert_eq!(wet.analog, 2.5);
        assert!(wet.rain_detected);

        // equal to the set point is not rain
        let tie = rain_signals(1.0, &m, 5.0).unwrap();
        assert_eq!(tie.analog, 2.5);
        assert!(!tie.rain_detected);

        assert!(rain_signals(-0.1, &m, 5.0).is_err());
    }

    #[test]
    fn pressure_examples() {
        let g128 = PressureSpec::default();
        let g64 = PressureSpec {
            gain: PgaGain::X64,
            ..g128
        };
        assert_eq!(pressure_counts(0.0, &g128).unwrap(), 0);
        assert_eq!(pressure_counts(40.0, &g128).unwrap(), 8_388_607);
        assert_eq!(pressure_counts(20.0, &g64).unwrap(), 2_097_152);
        assert!(pressure_counts(40.5, &g128).is_err());
        assert!(PgaGain::try_from(16).is_err());
        assert!(DataRate::try_from(20).is_err());
    }

    #[test]
    fn env_step_examples() {
        let env = EnvState {
            moisture: 0.4,
            ..EnvState::default()
        };
        let pump_only = EnvDynamics {
            k_pump: 0.001,
            w_true: [0.0; 4],
            ..EnvDynamics::default()
        };
        let next = env_step(&env, &pump_only, 10.0, true, Weather::default()).unwrap();
        assert!(close(next.moisture - 0.4, 0.01, 1e-15));

        let full = EnvState { moisture: 0.999, ..env };
        let flood = EnvDynamics {
            k_pump: 1.0,
            ..pump_only
        };
        assert_eq!(
            env_step(&full, &flood, 1.0, true, Weather::default()).unwrap().moisture,
            1.0
        );

        let dry = EnvDynamics {
            w_true: [1e-5, 2e-6, 3e-5, 1e-5],
            ..EnvDynamics::default()
        };
        let hot = EnvState {
            moisture: 0.5,
            temp_c: 30.0,
            rh_pct: 40.0,
            ..EnvState::default()
        };
        let w = Weather {
            rain: 0.0,
            light_lux: 50_000.0,
        };
        let next = env_step(&hot, &dry, 60.0, false, w).unwrap();
        assert!(close(0.5 - next.moisture, 5.58e-3, 1e-12));
        assert_eq!(next.light_lux, 50_000.0);

        assert!(env_step(&env, &dry, 0.0, false, w).is_err());
    }

    proptest! {
        #[test]
        fn ldr_decreasing(r10 in 1e3f64..1e5, gamma in 0.3f64..1.5, lux in 1e-2f64..1e5, bump in 1.001f64..10.0) {
            let p = LdrParams { r_dark: 1e12, r_at_10lux: r10, gamma };
            let a = ldr_resistance(lux, &p).unwrap();
            let b = ldr_resistance(lux * bump, &p).unwrap();
            prop_assert!(b < a);
            prop_assert!(a <= p.r_dark);
        }

        #[test]
        fn divider_bounded_and_decreasing(r in 0f64..1e7, dr in 1.0f64..1e6, rf in 1.0f64..1e6, vcc in 0.1f64..24.0) {
            let a = divider_voltage(r, rf, vcc).unwrap();
            let b = divider_voltage(r + dr, rf, vcc).unwrap();
            prop_assert!(a > 0.0 && a <= vcc);
            prop_assert!(b < a);
        }

        #[test]
        fn adc_monotone(v in -1f64..6.0, dv in 0f64..1.0, bits in 1u32..16) {
            let spec = AdcSpec { vref: 5.0, bits };
            prop_assert!(adc_quantize(v, &spec) <= adc_quantize(v + dv, &spec));
            prop_assert!(adc_quantize(v, &spec) <= spec.max_count());
        }

        #[test]
        fn pressure_round_trip(p in 0f64..=40.0, g in prop::sample::select(vec![32u32, 64, 128])) {
            let spec = PressureSpec { gain: PgaGain::try_from(g).unwrap(), rate_sps: DataRate::Sps80 };
            let c = pressure_counts(p, &spec).unwrap();
            let back = pressure_from_counts(c, &spec);
            prop_assert!((back - p).abs() <= 40.0 / 8_388_607.0 * 128.0 / g as f64);
        }

        #[test]
        fn env_step_stays_admissible(
            m in 0f64..=1.0, rain in 0f64..=1.0, light in 0f64..120_000.0,
            t in -10f64..50.0, rh in 0f64..=100.0, pump: bool, dt in 0.1f64..3600.0,
        ) {
            let env = EnvState { moisture: m, temp_c: t, rh_pct: rh, ..EnvState::default() };
            let next = env_step(&env, &EnvDynamics::default(), dt, pump, Weather { rain, light_lux: light }).unwrap();
            prop_assert!((0.0..=1.0).contains(&next.moisture));
            prop_assert!((0.0..=40.0).contains(&next.soil_pressure_kpa));
        }
    }

    #[test]
    fn adc_surjective() {
        let spec = AdcSpec { vref: 5.0, bits: 10 };
        let mut seen = vec![false; 1024];
        for i in 0..=4096 {
            let v = i as f64 * 5.0 / 4096.0;
            seen[adc_quantize(v, &spec) as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }
}
