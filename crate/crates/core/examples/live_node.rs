//! Stream a scenario to a running service and obey its overrides.
//!
//!     agrisim serve --port 8080 --store ./data
//!     cargo run --example live_node -- 127.0.0.1:8081 [scenario.json] [pace_ms]

use std::env;
use std::fs;
use std::time::Duration;

use agrisim::edge::link::run_live;
use agrisim::edge::ScenarioConfig;

fn main() {
    let mut args = env::args().skip(1);
    let addr = args.next().unwrap_or_else(|| "127.0.0.1:8081".into());
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/dry_day.json").into());
    let pace: u64 = args.next().map_or(1000, |s| s.parse().expect("pace_ms"));
    let cfg = ScenarioConfig::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    match run_live(cfg, addr.as_str(), Duration::from_millis(pace)) {
        Ok(n) => println!("sent {n} records"),
        Err(e) => eprintln!("{addr}: {e}"),
    }
}
