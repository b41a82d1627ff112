//! Plain-text waveform dumps: one `H <us>` or `L <us>` per LF-terminated line.

use thiserror::Error;

use super::{Level, LineSegment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct DumpError {
    pub line: usize,
    pub reason: &'static str,
}

pub fn write_waveform(segs: &[LineSegment]) -> String {
    let mut out = String::with_capacity(segs.len() * 5);
    for s in segs {
        out.push(match s.level {
            Level::High => 'H',
            Level::Low => 'L',
        });
        out.push(' ');
        out.push_str(&s.duration_us.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_waveform(text: &str) -> Result<Vec<LineSegment>, DumpError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let Some(body) = text.strip_suffix('\n') else {
        return Err(DumpError {
            line: text.split('\n').count(),
            reason: "missing final LF",
        });
    };
    body.split('\n')
        .enumerate()
        .map(|(n, line)| parse_line(line).map_err(|reason| DumpError { line: n + 1, reason }))
        .collect()
}

fn parse_line(line: &str) -> Result<LineSegment, &'static str> {
    let (tag, num) = line.split_once(' ').ok_or("expected `<H|L> <us>`")?;
    let level = match tag {
        "H" => Level::High,
        "L" => Level::Low,
        _ => return Err("level must be H or L"),
    };
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
        return Err("duration must be decimal digits");
    }
    let duration_us: u32 = num.parse().map_err(|_| "duration overflows")?;
    if duration_us == 0 {
        return Err("duration must be positive");
    }
    Ok(LineSegment { level, duration_us })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dht11::{frame_to_waveform, Dht11Frame, Dht11Timing};
    use proptest::prelude::*;

    #[test]
    fn exact_text() {
        let segs = [LineSegment::low(54), LineSegment::high(80)];
        assert_eq!(write_waveform(&segs), "L 54\nH 80\n");
        assert_eq!(parse_waveform("L 54\nH 80\n").unwrap(), segs);
        assert_eq!(parse_waveform("").unwrap(), vec![]);
    }

    #[test]
    fn rejects_sloppy_input() {
        assert_eq!(parse_waveform("L 54").unwrap_err().reason, "missing final LF");
        assert_eq!(parse_waveform("L 54\r\n").unwrap_err().line, 1);
        assert_eq!(parse_waveform("L 54\nX 3\n").unwrap_err().line, 2);
        assert!(parse_waveform("L  54\n").is_err());
        assert!(parse_waveform("L +54\n").is_err());
        assert!(parse_waveform("L 0\n").is_err());
        assert!(parse_waveform("L 54\n\n").is_err());
    }

    #[test]
    fn frame_dump_is_83_lines() {
        let w = frame_to_waveform(&Dht11Frame([65, 0, 27, 0, 92]), &Dht11Timing::default()).unwrap();
        let text = write_waveform(&w);
        assert_eq!(text.lines().count(), 83);
        assert!(text.starts_with("L 54\nH 80\nL 50\nH 26\n"));
    }

    proptest! {
        #[test]
        fn round_trip(segs in prop::collection::vec((any::<bool>(), 1u32..), 0..100)) {
            let segs: Vec<_> = segs.into_iter()
                .map(|(h, d)| if h { LineSegment::high(d) } else { LineSegment::low(d) })
                .collect();
            prop_assert_eq!(parse_waveform(&write_waveform(&segs)).unwrap(), segs);
        }
    }
}
