//! Both 16x2 LCD pages for a few records.

use agrisim::edge::{format_lcd, run_scenario, IrrigationPolicy, ScenarioConfig};

fn main() {
    let mut cfg = ScenarioConfig::new(90.0, IrrigationPolicy::default());
    cfg.initial.moisture = 0.3;
    let run = run_scenario(&cfg).unwrap();
    for tick in run.ticks.iter().step_by(30) {
        for page in 0..2 {
            let p = format_lcd(&tick.record, page);
            println!("+----------------+\n|{}|\n|{}|", p.line1, p.line2);
        }
        println!("+----------------+\n");
    }
}
