//! Run a scenario file (default: a dry day) and summarize the log.

use std::env;
use std::fs;

use agrisim::edge::{format_lcd, run_scenario, ScenarioConfig};

fn main() {
    let path = env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/dry_day.json").into());
    let cfg = ScenarioConfig::from_json(&fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path}: {e}"));
    let run = run_scenario(&cfg).unwrap();
    let s = run.summary();
    println!(
        "{}: {} records, {:.1} mL, duty {:.3}, {} transitions, {} DHT faults",
        cfg.node, s.records, s.total_volume_ml, s.pump_duty, s.pump_transitions, s.dht_faults
    );

    println!("\nhourly snapshot");
    for tick in run.ticks.iter().step_by(3600) {
        let p = format_lcd(&tick.record, 0);
        println!("|{}|{}|  {:?}", p.line1, p.line2, tick.command.reason);
    }
}
