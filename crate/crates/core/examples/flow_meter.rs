//! Pump flow to hall pulses and back, with the sub-pulse remainder carried.

use agrisim::flow::{flow_to_pulses, pulses_to_volume, FlowCalib, FlowMeter, PulseAccumulator};

fn main() {
    let calib = FlowCalib::default();
    println!("1000 pulses = {:.1} mL", pulses_to_volume(1000, &calib));

    let mut meter = FlowMeter::new(calib);
    let mut acc = PulseAccumulator::default();
    let rate = 100.0;
    println!("\ns  pulses  mL/min  total mL  carried");
    for s in 1..=10 {
        let (n, next) = flow_to_pulses(rate, 1.0, acc, &calib).unwrap();
        acc = next;
        let sample = meter.sample(n, 1.0).unwrap();
        println!(
            "{s:>2} {n:>6} {:>7.2} {:>9.2} {:>8.3}",
            sample.rate_ml_per_min, sample.cumulative_ml, acc.residual_ml
        );
    }
    let delivered = rate * 10.0 / 60.0;
    println!(
        "\ndelivered {delivered:.3} mL, counted {:.3} + carried {:.3}",
        meter.cumulative_ml, acc.residual_ml
    );
}
