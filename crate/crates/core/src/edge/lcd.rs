//! 16x2 character LCD pages.

use chrono::DateTime;

use crate::telemetry::TelemetryRecord;

pub const LCD_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcdPage {
    pub line1: String,
    pub line2: String,
}

fn pad(mut s: String) -> String {
    s.truncate(LCD_WIDTH);
    while s.len() < LCD_WIDTH {
        s.push(' ');
    }
    s
}

/// Rounds and saturates into `0..=max`.
fn sat(v: f64, max: u64) -> u64 {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        (v.round() as u64).min(max)
    }
}

/// Page 0 shows climate, moisture and pump; page 1 the date and water use.
pub fn format_lcd(rec: &TelemetryRecord, page: u8) -> LcdPage {
    let ts = DateTime::from_timestamp_millis(rec.ts_ms.min(i64::MAX as u64) as i64).unwrap_or_default();
    let (line1, line2) = if page == 0 {
        (
            format!(
                "T:{:02}C H:{:02}% R:{}",
                sat(rec.t_c.to_f64(), 99),
                sat(rec.rh_pct.to_f64(), 99),
                rec.rain as u8
            ),
            format!(
                "M:{:02}% P:{} {}",
                rec.m_pct.min(99),
                rec.pump as u8,
                ts.format("%H:%M")
            ),
        )
    } else {
        (
            format!("D:{}", ts.format("%Y-%m-%d")),
            format!(
                "F:{:04} V:{:06}",
                sat(rec.f_mlmin.to_f64(), 9_999),
                sat(rec.vol_ml.to_f64(), 999_999)
            ),
        )
    };
    LcdPage {
        line1: pad(line1),
        line2: pad(line2),
    }
}
