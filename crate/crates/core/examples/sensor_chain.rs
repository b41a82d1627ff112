//! Ground truth to ADC counts for every analog channel on the node.

use agrisim::edge::NodeHardware;
use agrisim::sensors::{
    adc_quantize, pressure_counts, pressure_from_counts, rain_signals, soil_digital, soil_moisture_voltage, AdcSpec,
    PressureSpec, RainBoardModel, VCC,
};

fn main() {
    let adc = AdcSpec::default();
    let hw = NodeHardware::default();

    println!("soil moisture   volts  counts  pct  digital(2.5 V)");
    for m in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let v = soil_moisture_voltage(m).unwrap();
        let counts = adc_quantize(v, &adc);
        println!(
            "{m:>13.2} {v:>7.3} {counts:>7} {:>4} {:?}",
            hw.moisture_pct(counts as u16),
            soil_digital(v, 2.5)
        );
    }

    println!("\nlux        counts  estimate");
    for lux in [0.0, 10.0, 500.0, 10_000.0, 60_000.0, 100_000.0] {
        let counts = hw.light_counts(lux).unwrap();
        println!("{lux:>9.0} {counts:>7} {:>9.0}", hw.lux_estimate(counts));
    }

    let board = RainBoardModel::default();
    println!("\nwetness  analog V  rain");
    for w in [0.0, 0.1, 0.5, 1.0] {
        let s = rain_signals(w, &board, VCC).unwrap();
        println!("{w:>7.1} {:>9.3}  {}", s.analog, s.rain_detected);
    }

    let spec = PressureSpec::default();
    println!("\nkPa   counts     back");
    for p in [0.0, 17.5, 25.0, 40.0] {
        let c = pressure_counts(p, &spec).unwrap();
        println!("{p:>4.1} {c:>9} {:>7.3}", pressure_from_counts(c, &spec));
    }
}
