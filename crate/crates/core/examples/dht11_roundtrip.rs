//! Encode a DHT11 reading, dump the line waveform, read it back and decode.
//!
//! Pass a path to keep the dump file; otherwise a temp file is used.
//! A stretched and a squeezed read show the timing tolerance.

use std::env;
use std::fs;

use agrisim::dht11::{
    decode_waveform, encode_reading, frame_to_reading, frame_to_waveform, parse_waveform, scale_waveform, start_pulse,
    write_waveform, Dht11Reading, Dht11Timing,
};

fn main() {
    let t = Dht11Timing::default();
    let reading = Dht11Reading::from_tenths(655, 272).unwrap();
    let frame = encode_reading(&reading).unwrap();
    println!(
        "reading {:.1} %RH {:.1} C -> frame {:?}",
        reading.humidity(),
        reading.temperature(),
        frame.0
    );

    let mut wave = start_pulse(&t).to_vec();
    wave.extend(frame_to_waveform(&frame, &t).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| dir.path().join("frame.wave"));
    fs::write(&path, write_waveform(&wave)).unwrap();
    println!("wrote {} segments to {}", wave.len(), path.display());

    let back = parse_waveform(&fs::read_to_string(&path).unwrap()).unwrap();
    let decoded = decode_waveform(&back, &t).unwrap();
    let r = frame_to_reading(&decoded).unwrap();
    println!("decoded {:.1} %RH {:.1} C", r.humidity(), r.temperature());

    // the sensor's clock drifts, the host's start pulse does not
    for scale in [0.85, 1.15, 1.6] {
        let mut drifted = back[..2].to_vec();
        drifted.extend(scale_waveform(&back[2..], scale));
        match decode_waveform(&drifted, &t) {
            Ok(f) => println!("x{scale}: ok {:?}", f.0),
            Err(e) => println!("x{scale}: {e}"),
        }
    }
}
