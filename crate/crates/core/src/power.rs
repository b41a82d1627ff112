//! Linear power-supply chain arithmetic: transformer, rectifier, 78xx regulator.
//!
//! The transformer stage multiplies the line voltage by the turns ratio and
//! labels the product peak-to-peak, even though a line voltage is normally
//! quoted as RMS.

use std::fmt;

use thiserror::Error;

pub const REGULATOR_HEADROOM_V: f64 = 3.0;
pub const KNOWN_REGULATORS: [u16; 9] = [7805, 7806, 7808, 7809, 7810, 7812, 7815, 7818, 7824];
/// Typical filtered output of the 115 V x 3 chain.
pub const TYPICAL_FILTER_DC_V: f64 = 110.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("unknown regulator code {0}")]
    UnknownRegulator(u16),
}

fn positive(field: &'static str, value: f64) -> Result<f64, PowerError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PowerError::NonPositive { field, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegulatorCode(u16);

impl RegulatorCode {
    pub fn new(code: u16) -> Result<Self, PowerError> {
        if KNOWN_REGULATORS.contains(&code) {
            Ok(RegulatorCode(code))
        } else {
            Err(PowerError::UnknownRegulator(code))
        }
    }

    pub fn code(self) -> u16 {
        self.0
    }

    /// The last two digits of the part number.
    pub fn output_v(self) -> f64 {
        (self.0 % 100) as f64
    }
}

impl fmt::Display for RegulatorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegulatorStatus {
    Ok { v_out: f64 },
    InsufficientHeadroom { v_out: f64, required_v: f64 },
}

impl RegulatorStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RegulatorStatus::Ok { .. })
    }

    pub fn v_out(&self) -> f64 {
        match *self {
            RegulatorStatus::Ok { v_out } | RegulatorStatus::InsufficientHeadroom { v_out, .. } => v_out,
        }
    }
}

pub fn transformer_output_pp(line_v: f64, ratio: f64) -> Result<f64, PowerError> {
    Ok(positive("line_v", line_v)? * positive("turns_ratio", ratio)?)
}

pub fn rectifier_output(v_pp: f64) -> Result<f64, PowerError> {
    Ok(positive("v_pp", v_pp)? / 2.0)
}

pub fn regulator_check(v_in: f64, code: RegulatorCode) -> RegulatorStatus {
    let v_out = code.output_v();
    let required_v = v_out + REGULATOR_HEADROOM_V;
    if v_in >= required_v {
        RegulatorStatus::Ok { v_out }
    } else {
        RegulatorStatus::InsufficientHeadroom { v_out, required_v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerChainSpec {
    pub line_v: f64,
    pub turns_ratio: f64,
    pub regulator: RegulatorCode,
    /// Regulator input; defaults to the rectifier output when absent.
    pub regulator_in_v: Option<f64>,
    pub output_current_ma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    pub spec: PowerChainSpec,
    pub transformer_pp: f64,
    pub rectified: f64,
    pub regulator_in_v: f64,
    pub regulator: RegulatorStatus,
}

pub fn evaluate_chain(spec: PowerChainSpec) -> Result<ChainReport, PowerError> {
    let transformer_pp = transformer_output_pp(spec.line_v, spec.turns_ratio)?;
    let rectified = rectifier_output(transformer_pp)?;
    let regulator_in_v = match spec.regulator_in_v {
        Some(v) => positive("regulator_in_v", v)?,
        None => rectified,
    };
    Ok(ChainReport {
        spec,
        transformer_pp,
        rectified,
        regulator_in_v,
        regulator: regulator_check(regulator_in_v, spec.regulator),
    })
}

impl fmt::Display for ChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "transformer: {:.1} V x {} = {:.1} V p-p",
            self.spec.line_v, self.spec.turns_ratio, self.transformer_pp
        )?;
        writeln!(f, "rectifier:   {:.1} V pulsing DC", self.rectified)?;
        writeln!(
            f,
            "filter:      not modeled (a 115 V x 3 chain gives about {TYPICAL_FILTER_DC_V:.0} V DC with ripple)"
        )?;
        let reg = self.spec.regulator;
        match self.regulator {
            RegulatorStatus::Ok { v_out } => writeln!(
                f,
                "regulator:   {reg} in {:.1} V -> {v_out:.0} V out, ok",
                self.regulator_in_v
            ),
            RegulatorStatus::InsufficientHeadroom { v_out, required_v } => writeln!(
                f,
                "regulator:   {reg} in {:.1} V -> {v_out:.0} V out, insufficient headroom (needs >= {required_v:.1} V)",
                self.regulator_in_v
            ),
        }?;
        write!(f, "load:        {:.0} mA", self.spec.output_current_ma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transformer_and_rectifier() {
        assert_eq!(transformer_output_pp(115.0, 3.0).unwrap(), 345.0);
        assert_eq!(transformer_output_pp(115.0, 1.0).unwrap(), 115.0);
        assert_eq!(transformer_output_pp(10.0, 0.5).unwrap(), 5.0);
        assert!(transformer_output_pp(0.0, 3.0).is_err());
        assert!(transformer_output_pp(115.0, -1.0).is_err());

        assert_eq!(rectifier_output(345.0).unwrap(), 172.5);
        assert_eq!(rectifier_output(10.0).unwrap(), 5.0);
        assert_eq!(
            rectifier_output(transformer_output_pp(115.0, 3.0).unwrap()).unwrap(),
            172.5
        );
        assert!(rectifier_output(0.0).is_err());
    }

    #[test]
    fn regulator_rules() {
        let r05 = RegulatorCode::new(7805).unwrap();
        assert_eq!(regulator_check(8.0, r05), RegulatorStatus::Ok { v_out: 5.0 });
        assert!(!regulator_check(7.5, r05).is_ok());
        assert!(!regulator_check(7.999, r05).is_ok());
        assert_eq!(RegulatorCode::new(7812).unwrap().output_v(), 12.0);
        assert_eq!(RegulatorCode::new(7800), Err(PowerError::UnknownRegulator(7800)));
    }

    #[test]
    fn headroom_boundary_every_code() {
        for code in KNOWN_REGULATORS {
            let c = RegulatorCode::new(code).unwrap();
            let edge = c.output_v() + 3.0;
            assert!(regulator_check(edge, c).is_ok(), "{code}");
            for delta in [1e-9, 1e-3, 0.5, 3.0] {
                assert!(!regulator_check(edge - delta, c).is_ok(), "{code} {delta}");
            }
        }
    }

    #[test]
    fn report_text() {
        let report = evaluate_chain(PowerChainSpec {
            line_v: 115.0,
            turns_ratio: 3.0,
            regulator: RegulatorCode::new(7805).unwrap(),
            regulator_in_v: Some(9.0),
            output_current_ma: 100.0,
        })
        .unwrap();
        let text = report.to_string();
        assert!(text.contains("345.0"));
        assert!(text.contains("172.5"));
        assert!(text.contains("5 V out, ok"));
    }
}
