//! Recover known depletion coefficients from synthetic record pairs.
//!
//! Each pair drops moisture from 60 % to 50 % over the time the true model
//! needs for it. Conditions cycle through four independent settings.

use agrisim::edge::NodeHardware;
use agrisim::sensors::{env_step, EnvDynamics, EnvState, Weather};
use agrisim::service::{update_model, ModelCoefficients};
use agrisim::telemetry::Fixed;
use agrisim::TelemetryRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SETTINGS: [(f64, f64, f64); 4] = [
    (0.0, 20.0, 0.0),
    (2.0, 20.0, 0.0),
    (0.0, 90.0, 0.0),
    (0.0, 20.0, 100_000.0),
];

fn record(ts_ms: u64, m_pct: u8, t_c: f64, rh: f64, lux_raw: u16) -> TelemetryRecord {
    TelemetryRecord {
        node: "n1".into(),
        ts_ms,
        t_c: Fixed::from_f64(t_c),
        rh_pct: Fixed::from_f64(rh),
        m_pct,
        m_raw: 0,
        rain: false,
        lux_raw,
        p_kpa: Fixed(0),
        f_mlmin: Fixed(0),
        vol_ml: Fixed(0),
        pump: false,
    }
}

fn train(truth: &EnvDynamics, updates: usize, noise: f64, seed: u64) -> ModelCoefficients {
    let hw = NodeHardware::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ModelCoefficients::new(0.05);
    let mut ts = 1_700_000_000_000u64;
    for i in 0..updates {
        let (t_c, rh, lux) = SETTINGS[i % 4];
        let lux_raw = hw.light_counts(lux).unwrap();
        let lux_seen = hw.lux_estimate(lux_raw);
        // one-second probe of the true dynamics gives the rate
        let env = EnvState {
            moisture: 0.6,
            temp_c: t_c,
            rh_pct: rh,
            ..EnvState::default()
        };
        let next = env_step(
            &env,
            truth,
            1.0,
            false,
            Weather {
                rain: 0.0,
                light_lux: lux_seen,
            },
        )
        .unwrap();
        let rate = (env.moisture - next.moisture) * (1.0 + rng.random_range(-noise..=noise));
        let dt_ms = (0.1 / rate * 1000.0).round() as u64;
        let prev = record(ts, 60, t_c, rh, lux_raw);
        let cur = record(ts + dt_ms, 50, t_c, rh, lux_raw);
        m = update_model(&m, &prev, &cur, &hw).unwrap();
        ts += dt_ms + 1000;
    }
    m
}

fn main() {
    let truth = EnvDynamics {
        w_true: [1e-5, 2e-6, 3e-5, 1e-5],
        ..EnvDynamics::default()
    };
    for (updates, noise) in [(500, 0.0), (5_000, 0.0), (20_000, 0.05)] {
        let m = train(&truth, updates, noise, 11);
        let worst =
            m.w.iter()
                .zip(truth.w_true)
                .map(|(w, t)| ((w - t) / t).abs())
                .fold(0.0, f64::max);
        let w: Vec<String> = m.w.iter().map(|w| format!("{w:.3e}")).collect();
        println!(
            "{updates:>6} updates, noise {noise:.2}: w = [{}]  worst error {:.2} %",
            w.join(", "),
            worst * 100.0
        );
    }
}
