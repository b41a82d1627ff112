//! Telemetry records and their line format.
//!
//! One record per LF-terminated line, a flat JSON object with a fixed key
//! order and no whitespace:
//!
//! ```text
//! {"v":1,"node":"n1","ts_ms":1700000000000,"t_c":25.0,"rh_pct":65.0,"m_pct":45,"m_raw":563,"rain":0,"lux_raw":812,"p_kpa":18.50,"f_mlmin":0.00,"vol_ml":0.00,"pump":0}
//! ```
//!
//! Decimal fields are stored as fixed-point integers so that parsing a
//! serialized record gives back exactly the same value.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const WIRE_VERSION: u64 = 1;

pub const KEYS: [&str; 13] = [
    "v", "node", "ts_ms", "t_c", "rh_pct", "m_pct", "m_raw", "rain", "lux_raw", "p_kpa", "f_mlmin", "vol_ml", "pump",
];

/// Signed decimal with a fixed number of fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed<const DIGITS: u32>(pub i64);

/// One decimal place.
pub type Deci = Fixed<1>;
/// Two decimal places.
pub type Centi = Fixed<2>;

impl<const DIGITS: u32> Fixed<DIGITS> {
    const SCALE: i64 = 10i64.pow(DIGITS);

    pub fn from_f64(v: f64) -> Self {
        Fixed((v * Self::SCALE as f64).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn units(self) -> i64 {
        self.0
    }

    /// Accepts a JSON number carrying at most `DIGITS` decimals.
    fn from_json(v: &Value) -> Option<Self> {
        if let Some(i) = v.as_i64() {
            return i.checked_mul(Self::SCALE).map(Fixed);
        }
        let x = v.as_f64()?;
        let scaled = x * Self::SCALE as f64;
        let rounded = scaled.round();
        if !rounded.is_finite() || rounded.abs() > 9.0e15 || (scaled - rounded).abs() > 1e-6 * rounded.abs().max(1.0) {
            return None;
        }
        Some(Fixed(rounded as i64))
    }
}

impl<const DIGITS: u32> fmt::Display for Fixed<DIGITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = Self::SCALE as u64;
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / scale,
            abs % scale,
            width = DIGITS as usize
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TelemetryRecord {
    pub node: String,
    pub ts_ms: u64,
    pub t_c: Deci,
    pub rh_pct: Deci,
    pub m_pct: u8,
    pub m_raw: u16,
    pub rain: bool,
    pub lux_raw: u16,
    pub p_kpa: Centi,
    pub f_mlmin: Centi,
    pub vol_ml: Centi,
    pub pump: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed line: {0}")]
    Syntax(String),
    #[error("unknown version {0}")]
    UnknownVersion(String),
    #[error("missing key {0}")]
    MissingKey(&'static str),
    #[error("wrong type for {0}")]
    TypeError(&'static str),
    #[error("{0} out of range")]
    RangeError(&'static str),
    #[error("unexpected key {0}")]
    UnknownKey(String),
}

impl TelemetryRecord {
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(200);
        self.write_json(&mut s);
        s
    }

    /// The JSON object without a trailing newline.
    pub fn write_json(&self, out: &mut String) {
        use fmt::Write;
        let node = serde_json::to_string(&self.node).expect("string serializes");
        let _ = write!(
            out,
            "{{\"v\":{WIRE_VERSION},\"node\":{node},\"ts_ms\":{},\"t_c\":{},\"rh_pct\":{},\"m_pct\":{},\"m_raw\":{},\"rain\":{},\"lux_raw\":{},\"p_kpa\":{},\"f_mlmin\":{},\"vol_ml\":{},\"pump\":{}}}",
            self.ts_ms,
            self.t_c,
            self.rh_pct,
            self.m_pct,
            self.m_raw,
            self.rain as u8,
            self.lux_raw,
            self.p_kpa,
            self.f_mlmin,
            self.vol_ml,
            self.pump as u8,
        );
    }

    pub fn parse_line(line: &str) -> Result<Self, WireError> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let value: Value = serde_json::from_str(line).map_err(|e| WireError::Syntax(e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(WireError::Syntax("expected an object".into()));
        };
        Self::from_object(&obj)
    }

    pub fn from_object(obj: &Map<String, Value>) -> Result<Self, WireError> {
        let get = |k: &'static str| obj.get(k).ok_or(WireError::MissingKey(k));
        match get("v")? {
            Value::Number(n) if n.as_u64() == Some(WIRE_VERSION) => {}
            Value::Number(n) => return Err(WireError::UnknownVersion(n.to_string())),
            _ => return Err(WireError::TypeError("v")),
        }
        let uint = |k: &'static str, max: u64| -> Result<u64, WireError> {
            let n = get(k)?.as_u64().ok_or(WireError::TypeError(k))?;
            if n > max {
                return Err(WireError::RangeError(k));
            }
            Ok(n)
        };
        let flag = |k: &'static str| -> Result<bool, WireError> {
            match get(k)?.as_u64() {
                Some(0) => Ok(false),
                Some(1) => Ok(true),
                Some(_) => Err(WireError::RangeError(k)),
                None => Err(WireError::TypeError(k)),
            }
        };
        let node = match get("node")? {
            Value::String(s) if !s.is_empty() => s.clone(),
            Value::String(_) => return Err(WireError::RangeError("node")),
            _ => return Err(WireError::TypeError("node")),
        };
        let rec = TelemetryRecord {
            node,
            ts_ms: uint("ts_ms", u64::MAX)?,
            t_c: fixed(obj, "t_c", false)?,
            rh_pct: fixed(obj, "rh_pct", true)?,
            m_pct: uint("m_pct", 100)? as u8,
            m_raw: uint("m_raw", 1023)? as u16,
            rain: flag("rain")?,
            lux_raw: uint("lux_raw", 1023)? as u16,
            p_kpa: fixed(obj, "p_kpa", false)?,
            f_mlmin: fixed(obj, "f_mlmin", true)?,
            vol_ml: fixed(obj, "vol_ml", true)?,
            pump: flag("pump")?,
        };
        if let Some(extra) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(WireError::UnknownKey(extra.clone()));
        }
        Ok(rec)
    }
}

fn fixed<const D: u32>(obj: &Map<String, Value>, k: &'static str, non_negative: bool) -> Result<Fixed<D>, WireError> {
    let v = obj.get(k).ok_or(WireError::MissingKey(k))?;
    let f = Fixed::<D>::from_json(v).ok_or(WireError::TypeError(k))?;
    if non_negative && f.0 < 0 {
        return Err(WireError::RangeError(k));
    }
    Ok(f)
}

impl fmt::Display for TelemetryRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Renders records as a log: one line each, every line LF-terminated.
pub fn write_log<'a>(records: impl IntoIterator<Item = &'a TelemetryRecord>) -> String {
    let mut out = String::new();
    for r in records {
        r.write_json(&mut out);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {error}")]
pub struct LogError {
    pub line: usize,
    pub error: WireError,
}

pub fn parse_log(text: &str) -> Result<Vec<TelemetryRecord>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| TelemetryRecord::parse_line(l).map_err(|error| LogError { line: n + 1, error }))
        .collect()
}

/// Operator override as carried to the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverrideState {
    On,
    Off,
    Clear,
}

/// Service-to-node line sent back on the ingest connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Downlink {
    pub v: u64,
    pub cmd: String,
    pub state: OverrideState,
    pub ttl_s: u64,
}

impl Downlink {
    pub fn override_cmd(state: OverrideState, ttl_s: u64) -> Self {
        Downlink {
            v: WIRE_VERSION,
            cmd: "override".into(),
            state,
            ttl_s,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("downlink serializes")
    }

    pub fn parse_line(line: &str) -> Result<Self, WireError> {
        let d: Downlink = serde_json::from_str(line.trim_end()).map_err(|e| WireError::Syntax(e.to_string()))?;
        if d.v != WIRE_VERSION {
            return Err(WireError::UnknownVersion(d.v.to_string()));
        }
        if d.cmd != "override" {
            return Err(WireError::RangeError("cmd"));
        }
        Ok(d)
    }
}

#[cfg(test)]
pub(crate) fn sample_record() -> TelemetryRecord {
    TelemetryRecord {
        node: "n1".into(),
        ts_ms: 1_700_000_000_000,
        t_c: Fixed(250),
        rh_pct: Fixed(650),
        m_pct: 45,
        m_raw: 563,
        rain: false,
        lux_raw: 812,
        p_kpa: Fixed(1850),
        f_mlmin: Fixed(0),
        vol_ml: Fixed(0),
        pump: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_text() {
        assert_eq!(
            sample_record().to_line(),
            r#"{"v":1,"node":"n1","ts_ms":1700000000000,"t_c":25.0,"rh_pct":65.0,"m_pct":45,"m_raw":563,"rain":0,"lux_raw":812,"p_kpa":18.50,"f_mlmin":0.00,"vol_ml":0.00,"pump":0}"#
        );
        assert_eq!(Deci::from_f64(-0.5).to_string(), "-0.5");
        assert_eq!(Fixed::<2>(5).to_string(), "0.05");
    }

    #[test]
    fn parse_round_trip() {
        let r = sample_record();
        assert_eq!(TelemetryRecord::parse_line(&r.to_line()), Ok(r));
    }

    #[test]
    fn version_gate() {
        let line = sample_record().to_line().replacen("\"v\":1", "\"v\":2", 1);
        assert_eq!(
            TelemetryRecord::parse_line(&line),
            Err(WireError::UnknownVersion("2".into()))
        );
        let line = sample_record().to_line().replacen("\"v\":1,", "", 1);
        assert_eq!(TelemetryRecord::parse_line(&line), Err(WireError::MissingKey("v")));
    }

    #[test]
    fn key_errors_name_the_key() {
        let line = sample_record().to_line().replace("\"m_pct\":45,", "");
        assert_eq!(TelemetryRecord::parse_line(&line), Err(WireError::MissingKey("m_pct")));

        let line = sample_record().to_line().replace("\"t_c\":25.0", "\"t_c\":\"25\"");
        assert_eq!(TelemetryRecord::parse_line(&line), Err(WireError::TypeError("t_c")));

        let line = sample_record().to_line().replace("\"p_kpa\":18.50", "\"p_kpa\":18.505");
        assert_eq!(TelemetryRecord::parse_line(&line), Err(WireError::TypeError("p_kpa")));

        let line = sample_record().to_line().replace("\"rain\":0", "\"rain\":2");
        assert_eq!(TelemetryRecord::parse_line(&line), Err(WireError::RangeError("rain")));

        let line = sample_record().to_line().replace("\"pump\":0}", "\"pump\":0,\"x\":1}");
        assert_eq!(
            TelemetryRecord::parse_line(&line),
            Err(WireError::UnknownKey("x".into()))
        );

        assert!(matches!(TelemetryRecord::parse_line("{"), Err(WireError::Syntax(_))));
        assert!(matches!(TelemetryRecord::parse_line("[]"), Err(WireError::Syntax(_))));
    }

    #[test]
    fn log_lines() {
        let mut b = sample_record();
        b.ts_ms += 1000;
        let text = write_log([&sample_record(), &b]);
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_log(&text).unwrap(), vec![sample_record(), b]);
        let err = parse_log("{}\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn downlink_line() {
        let d = Downlink::override_cmd(OverrideState::Off, 600);
        assert_eq!(d.to_line(), r#"{"v":1,"cmd":"override","state":"off","ttl_s":600}"#);
        assert_eq!(Downlink::parse_line(&d.to_line()), Ok(d));
    }

    fn any_record() -> impl Strategy<Value = TelemetryRecord> {
        (
            "[a-z0-9_\"\\\\-]{1,12}",
            any::<u64>(),
            -500i64..600,
            0i64..1000,
            0u8..=100,
            0u16..=1023,
            any::<bool>(),
            0u16..=1023,
            (-100i64..5000, 0i64..10_000_000, 0i64..1_000_000_000, any::<bool>()),
        )
            .prop_map(
                |(node, ts_ms, t, rh, m_pct, m_raw, rain, lux_raw, (p, f, v, pump))| TelemetryRecord {
                    node,
                    ts_ms,
                    t_c: Fixed(t),
                    rh_pct: Fixed(rh),
                    m_pct,
                    m_raw,
                    rain,
                    lux_raw,
                    p_kpa: Fixed(p),
                    f_mlmin: Fixed(f),
                    vol_ml: Fixed(v),
                    pump,
                },
            )
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(r in any_record()) {
            let line = r.to_line();
            prop_assert_eq!(TelemetryRecord::parse_line(&line).unwrap(), r.clone());
            prop_assert_eq!(TelemetryRecord::parse_line(&line).unwrap().to_line(), line);
        }
    }
}
