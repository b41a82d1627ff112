//! Walk the pump rule through a falling and rising moisture trace, with a
//! shower in the middle and an operator override at the end.

use agrisim::edge::{decide_pump, IrrigationPolicy, Override, OverrideKind, PumpState};

fn main() {
    let pol = IrrigationPolicy::default();
    let mut state = PumpState::default();
    let trace: &[(f64, bool)] = &[
        (50.0, false),
        (40.0, false),
        (35.0, false),
        (34.0, true),
        (34.0, false),
        (45.0, false),
        (59.0, false),
        (60.0, false),
        (48.0, false),
    ];
    println!("  t    m  rain  pump  reason");
    let mut now = 0;
    for &(m, rain) in trace {
        let cmd = decide_pump(m, rain, &state, &pol, now);
        state = state.apply(cmd, now);
        println!("{:>4} {m:>4} {:>5} {:>5}  {:?}", now / 1000, rain, cmd.on, cmd.reason);
        now += 60_000;
    }

    state.override_ = Some(Override::new(OverrideKind::ForcedOn, now, 120));
    for (dt, rain) in [(0, false), (60_000, true), (180_000, false)] {
        let t = now + dt;
        let cmd = decide_pump(48.0, rain, &state, &pol, t);
        state = state.apply(cmd, t);
        println!("{:>4} 48.0 {:>5} {:>5}  {:?}", t / 1000, rain, cmd.on, cmd.reason);
    }
}
