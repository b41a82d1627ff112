//! DHT11 single-wire codec.
//!
//! Readings become 5-byte frames, frames become timed line segments, and
//! the decoder classifies the HIGH part of each bit cell by duration. The
//! decoder never hands back a frame whose checksum does not hold.

pub mod dump;

use std::fmt;

use thiserror::Error;

pub use dump::{parse_waveform, write_waveform, DumpError};

pub const RH_RANGE: std::ops::RangeInclusive<u8> = 20..=90;
pub const T_RANGE: std::ops::RangeInclusive<u8> = 0..=50;
pub const FRAC_MAX: u8 = 9;
pub const BITS_PER_FRAME: usize = 40;
/// Response pair + 40 bit cells + end-of-frame low.
pub const SEGMENTS_PER_FRAME: usize = 2 + 2 * BITS_PER_FRAME + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Dht11Error {
    #[error("{field} out of range: {value}")]
    Range { field: &'static str, value: u8 },
    #[error("checksum mismatch: expected {expected}, found {found}")]
    Checksum { expected: u8, found: u8 },
    #[error("frame must be 5 octets, got {0}")]
    FrameSize(usize),
    #[error("no response pulse from sensor")]
    NoResponse,
    #[error("expected 40 bit cells, got {0}")]
    BitCount(usize),
    #[error("bit {bit}: high of {duration_us} us is too close to the classification threshold")]
    AmbiguousDuration { bit: usize, duration_us: u32 },
    #[error("host start pulse of {0} us is shorter than required")]
    StartPulseTooShort(u32),
    #[error("segment {0} does not alternate level")]
    NonAlternating(usize),
    #[error("segment {0} has zero duration")]
    ZeroDuration(usize),
    #[error("waveform ends without the end-of-frame low")]
    MissingEndOfFrame,
}

/// Raw integer and tenths bytes, exactly as they travel in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dht11Reading {
    pub rh_int: u8,
    pub rh_frac: u8,
    pub t_int: u8,
    pub t_frac: u8,
}

impl Dht11Reading {
    /// Builds a reading from tenths of a percent and tenths of a degree.
    pub fn from_tenths(rh_tenths: u16, t_tenths: u16) -> Result<Self, Dht11Error> {
        let split = |v: u16, field| -> Result<(u8, u8), Dht11Error> {
            let int = u8::try_from(v / 10).map_err(|_| Dht11Error::Range { field, value: u8::MAX })?;
            Ok((int, (v % 10) as u8))
        };
        let (rh_int, rh_frac) = split(rh_tenths, "rh_int")?;
        let (t_int, t_frac) = split(t_tenths, "t_int")?;
        let r = Dht11Reading {
            rh_int,
            rh_frac,
            t_int,
            t_frac,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), Dht11Error> {
        if !RH_RANGE.contains(&self.rh_int) {
            return Err(Dht11Error::Range {
                field: "rh_int",
                value: self.rh_int,
            });
        }
        if self.rh_frac > FRAC_MAX {
            return Err(Dht11Error::Range {
                field: "rh_frac",
                value: self.rh_frac,
            });
        }
        if !T_RANGE.contains(&self.t_int) {
            return Err(Dht11Error::Range {
                field: "t_int",
                value: self.t_int,
            });
        }
        if self.t_frac > FRAC_MAX {
            return Err(Dht11Error::Range {
                field: "t_frac",
                value: self.t_frac,
            });
        }
        Ok(())
    }

    pub fn humidity_tenths(&self) -> u16 {
        self.rh_int as u16 * 10 + self.rh_frac as u16
    }

    pub fn temperature_tenths(&self) -> u16 {
        self.t_int as u16 * 10 + self.t_frac as u16
    }

    pub fn humidity(&self) -> f64 {
        self.humidity_tenths() as f64 / 10.0
    }

    pub fn temperature(&self) -> f64 {
        self.temperature_tenths() as f64 / 10.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dht11Frame(pub [u8; 5]);

impl Dht11Frame {
    pub fn checksum_of(payload: &[u8]) -> u8 {
        payload.iter().fold(0u8, |acc, b| acc.wrapping_add(*b))
    }

    pub fn bytes(&self) -> [u8; 5] {
        self.0
    }

    pub fn verify(&self) -> Result<(), Dht11Error> {
        verify_checksum(&self.0)
    }
}

impl fmt::Display for Dht11Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dht11Timing {
    pub start_low_min_us: u32,
    pub resp_low_us: u32,
    pub resp_high_us: u32,
    pub bit_preamble_low_us: u32,
    pub bit0_high_us: u32,
    pub bit1_high_us: u32,
    pub eof_low_us: u32,
    pub classify_threshold_us: u32,
    pub tolerance_frac: f64,
    /// Half-width of the refusal band around the threshold.
    pub guard_us: u32,
}

impl Default for Dht11Timing {
    fn default() -> Self {
        Dht11Timing {
            start_low_min_us: 18_000,
            resp_low_us: 54,
            resp_high_us: 80,
            bit_preamble_low_us: 50,
            bit0_high_us: 26,
            bit1_high_us: 70,
            eof_low_us: 54,
            classify_threshold_us: 50,
            tolerance_frac: 0.20,
            guard_us: 2,
        }
    }
}

impl Dht11Timing {
    fn within(&self, actual: u32, nominal: u32) -> bool {
        let nominal = nominal as f64;
        (actual as f64 - nominal).abs() <= nominal * self.tolerance_frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineSegment {
    pub level: Level,
    pub duration_us: u32,
}

impl LineSegment {
    pub fn low(duration_us: u32) -> Self {
        LineSegment {
            level: Level::Low,
            duration_us,
        }
    }

    pub fn high(duration_us: u32) -> Self {
        LineSegment {
            level: Level::High,
            duration_us,
        }
    }
}

pub fn encode_reading(r: &Dht11Reading) -> Result<Dht11Frame, Dht11Error> {
    r.validate()?;
    let payload = [r.rh_int, r.rh_frac, r.t_int, r.t_frac];
    let sum = Dht11Frame::checksum_of(&payload);
    Ok(Dht11Frame([payload[0], payload[1], payload[2], payload[3], sum]))
}

pub fn verify_checksum(bytes: &[u8]) -> Result<(), Dht11Error> {
    if bytes.len() != 5 {
        return Err(Dht11Error::FrameSize(bytes.len()));
    }
    let expected = Dht11Frame::checksum_of(&bytes[..4]);
    if expected == bytes[4] {
        Ok(())
    } else {
        Err(Dht11Error::Checksum {
            expected,
            found: bytes[4],
        })
    }
}

pub fn frame_to_reading(f: &Dht11Frame) -> Result<Dht11Reading, Dht11Error> {
    f.verify()?;
    let [rh_int, rh_frac, t_int, t_frac, _] = f.0;
    let r = Dht11Reading {
        rh_int,
        rh_frac,
        t_int,
        t_frac,
    };
    r.validate()?;
    Ok(r)
}

/// Host side of the exchange: hold the line low, then release it.
pub fn start_pulse(t: &Dht11Timing) -> [LineSegment; 2] {
    [LineSegment::low(t.start_low_min_us), LineSegment::high(30)]
}

pub fn frame_to_waveform(f: &Dht11Frame, t: &Dht11Timing) -> Result<Vec<LineSegment>, Dht11Error> {
    f.verify()?;
    let mut segs = Vec::with_capacity(SEGMENTS_PER_FRAME);
    segs.push(LineSegment::low(t.resp_low_us));
    segs.push(LineSegment::high(t.resp_high_us));
    for byte in f.0 {
        for bit in (0..8).rev() {
            let one = byte >> bit & 1 == 1;
            segs.push(LineSegment::low(t.bit_preamble_low_us));
            segs.push(LineSegment::high(if one { t.bit1_high_us } else { t.bit0_high_us }));
        }
    }
    segs.push(LineSegment::low(t.eof_low_us));
    Ok(segs)
}

/// Multiplies every duration by `factor`, rounding to whole microseconds.
pub fn scale_waveform(segs: &[LineSegment], factor: f64) -> Vec<LineSegment> {
    segs.iter()
        .map(|s| LineSegment {
            level: s.level,
            duration_us: ((s.duration_us as f64 * factor).round() as u32).max(1),
        })
        .collect()
}

pub fn decode_waveform(segs: &[LineSegment], t: &Dht11Timing) -> Result<Dht11Frame, Dht11Error> {
    for (i, s) in segs.iter().enumerate() {
        if s.duration_us == 0 {
            return Err(Dht11Error::ZeroDuration(i));
        }
        if i > 0 && segs[i - 1].level == s.level {
            return Err(Dht11Error::NonAlternating(i));
        }
    }

    let mut i = 0;
    let resp_low_max = t.resp_low_us as f64 * (1.0 + t.tolerance_frac);
    if let Some(first) = segs.first() {
        if first.level == Level::Low && first.duration_us as f64 > resp_low_max {
            if first.duration_us < t.start_low_min_us {
                return Err(Dht11Error::StartPulseTooShort(first.duration_us));
            }
            // host start low, then the host release high
            i = 2;
        }
    }

    match (segs.get(i), segs.get(i + 1)) {
        (Some(low), Some(high))
            if low.level == Level::Low
                && t.within(low.duration_us, t.resp_low_us)
                && t.within(high.duration_us, t.resp_high_us) => {}
        _ => return Err(Dht11Error::NoResponse),
    }
    i += 2;

    let mut bits = Vec::with_capacity(BITS_PER_FRAME);
    let mut saw_eof = false;
    while i < segs.len() {
        let Some(high) = segs.get(i + 1) else {
            saw_eof = true;
            break;
        };
        let d = high.duration_us;
        if d.abs_diff(t.classify_threshold_us) <= t.guard_us {
            return Err(Dht11Error::AmbiguousDuration {
                bit: bits.len(),
                duration_us: d,
            });
        }
        bits.push(d >= t.classify_threshold_us);
        i += 2;
    }
    if bits.len() != BITS_PER_FRAME {
        return Err(Dht11Error::BitCount(bits.len()));
    }
    if !saw_eof {
        return Err(Dht11Error::MissingEndOfFrame);
    }

    let mut bytes = [0u8; 5];
    for (n, chunk) in bits.chunks(8).enumerate() {
        bytes[n] = chunk.iter().fold(0u8, |acc, b| acc << 1 | *b as u8);
    }
    verify_checksum(&bytes)?;
    Ok(Dht11Frame(bytes))
}

/// Full sensor path: reading to frame to wire and back.
pub fn read_through_wire(r: &Dht11Reading, t: &Dht11Timing, time_scale: f64) -> Result<Dht11Reading, Dht11Error> {
    let frame = encode_reading(r)?;
    let wave = frame_to_waveform(&frame, t)?;
    let wave = if time_scale == 1.0 {
        wave
    } else {
        scale_waveform(&wave, time_scale)
    };
    frame_to_reading(&decode_waveform(&wave, t)?)
}
