use serde::Serialize;

use super::IrrigationPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OverrideKind {
    ForcedOn,
    ForcedOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Override {
    pub kind: OverrideKind,
    pub expires_at_ms: u64,
}

impl Override {
    pub fn new(kind: OverrideKind, now_ms: u64, ttl_s: u64) -> Self {
        Override {
            kind,
            expires_at_ms: now_ms.saturating_add(ttl_s.saturating_mul(1000)),
        }
    }

    pub fn is_active(&self, now_ms: u64) -> bool {
        now_ms < self.expires_at_ms
    }

    pub fn ttl_remaining_s(&self, now_ms: u64) -> f64 {
        self.expires_at_ms.saturating_sub(now_ms) as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PumpState {
    pub on: bool,
    /// When the pump last changed state.
    pub since_ms: u64,
    pub override_: Option<Override>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PumpReason {
    RainGate,
    BelowOnThreshold,
    AboveOffThreshold,
    HysteresisHold,
    Override,
    MinOnHold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PumpCommand {
    pub on: bool,
    pub reason: PumpReason,
}

impl PumpState {
    /// Pump state after carrying out `cmd` at `now_ms`.
    pub fn apply(&self, cmd: PumpCommand, now_ms: u64) -> PumpState {
        PumpState {
            on: cmd.on,
            since_ms: if cmd.on != self.on { now_ms } else { self.since_ms },
            override_: self.override_.filter(|o| o.is_active(now_ms)),
        }
    }
}

/// Rain-gated hysteresis rule. Earlier arms win.
pub fn decide_pump(m_pct: f64, rain: bool, state: &PumpState, pol: &IrrigationPolicy, now_ms: u64) -> PumpCommand {
    use PumpReason::*;
    let cmd = |on, reason| PumpCommand { on, reason };

    if rain {
        return cmd(false, RainGate);
    }
    if let Some(o) = state.override_.filter(|o| o.is_active(now_ms)) {
        return cmd(o.kind == OverrideKind::ForcedOn, Override);
    }
    if state.on && now_ms.saturating_sub(state.since_ms) < pol.min_on_ms() {
        return cmd(true, MinOnHold);
    }
    if m_pct <= pol.m_on_pct {
        cmd(true, BelowOnThreshold)
    } else if m_pct >= pol.m_off_pct {
        cmd(false, AboveOffThreshold)
    } else {
        cmd(state.on, HysteresisHold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pol() -> IrrigationPolicy {
        IrrigationPolicy {
            m_on_pct: 35.0,
            m_off_pct: 60.0,
            min_on_s: 30.0,
            ..IrrigationPolicy::default()
        }
    }

    const NOW: u64 = 1_000_000;

    #[test]
    fn examples() {
        let off = PumpState::default();
        assert_eq!(
            decide_pump(30.0, false, &off, &pol(), NOW),
            PumpCommand {
                on: true,
                reason: PumpReason::BelowOnThreshold
            }
        );
        for m in [0.0, 50.0, 100.0] {
            assert_eq!(decide_pump(m, true, &off, &pol(), NOW).reason, PumpReason::RainGate);
        }
        let on_long = PumpState {
            on: true,
            since_ms: 0,
            override_: None,
        };
        assert_eq!(
            decide_pump(50.0, false, &on_long, &pol(), NOW),
            PumpCommand {
                on: true,
                reason: PumpReason::HysteresisHold
            }
        );
        assert_eq!(
            decide_pump(50.0, false, &off, &pol(), NOW),
            PumpCommand {
                on: false,
                reason: PumpReason::HysteresisHold
            }
        );
    }

    #[test]
    fn thresholds_are_inclusive() {
        let on_long = PumpState {
            on: true,
            since_ms: 0,
            override_: None,
        };
        assert!(decide_pump(35.0, false, &PumpState::default(), &pol(), NOW).on);
        assert!(!decide_pump(60.0, false, &on_long, &pol(), NOW).on);
    }

    #[test]
    fn min_on_hold_then_release() {
        let just_on = PumpState {
            on: true,
            since_ms: NOW - 10_000,
            override_: None,
        };
        assert_eq!(
            decide_pump(80.0, false, &just_on, &pol(), NOW).reason,
            PumpReason::MinOnHold
        );
        let later = NOW + 20_000;
        assert_eq!(
            decide_pump(80.0, false, &just_on, &pol(), later).reason,
            PumpReason::AboveOffThreshold
        );
    }

    #[test]
    fn override_expires() {
        let st = PumpState {
            on: false,
            since_ms: 0,
            override_: Some(Override::new(OverrideKind::ForcedOff, NOW, 600)),
        };
        assert_eq!(
            decide_pump(10.0, false, &st, &pol(), NOW + 599_999),
            PumpCommand {
                on: false,
                reason: PumpReason::Override
            }
        );
        assert_eq!(
            decide_pump(10.0, false, &st, &pol(), NOW + 600_000).reason,
            PumpReason::BelowOnThreshold
        );
        let forced_on = PumpState {
            override_: Some(Override::new(OverrideKind::ForcedOn, NOW, 600)),
            ..st
        };
        assert_eq!(
            decide_pump(90.0, true, &forced_on, &pol(), NOW).reason,
            PumpReason::RainGate
        );
    }

    #[test]
    fn apply_tracks_transitions() {
        let st = PumpState::default();
        let on = st.apply(
            PumpCommand {
                on: true,
                reason: PumpReason::BelowOnThreshold,
            },
            5000,
        );
        assert_eq!(on.since_ms, 5000);
        let still = on.apply(
            PumpCommand {
                on: true,
                reason: PumpReason::HysteresisHold,
            },
            9000,
        );
        assert_eq!(still.since_ms, 5000);
    }

    /// Decision table written out case by case, independent of the
    /// early-return chain above.
    fn table(m: u8, rain: bool, on: bool, within_min_on: bool, ov: Option<bool>) -> (bool, PumpReason) {
        use PumpReason::*;
        let m = m as f64;
        match (rain, ov, on && within_min_on) {
            (true, _, _) => (false, RainGate),
            (false, Some(forced), _) => (forced, Override),
            (false, None, true) => (true, MinOnHold),
            (false, None, false) if m <= 35.0 => (true, BelowOnThreshold),
            (false, None, false) if m >= 60.0 => (false, AboveOffThreshold),
            (false, None, false) => (on, HysteresisHold),
        }
    }

    #[test]
    fn exhaustive_against_table() {
        let mut cases = 0;
        for m in 0..=100u8 {
            for rain in [false, true] {
                for on in [false, true] {
                    for within_min_on in [false, true] {
                        for ov in [None, Some(true), Some(false)] {
                            let since_ms = if within_min_on { NOW - 1_000 } else { 0 };
                            let override_ = ov.map(|forced| {
                                let kind = if forced {
                                    OverrideKind::ForcedOn
                                } else {
                                    OverrideKind::ForcedOff
                                };
                                Override::new(kind, NOW, 60)
                            });
                            let st = PumpState {
                                on,
                                since_ms,
                                override_,
                            };
                            let got = decide_pump(m as f64, rain, &st, &pol(), NOW);
                            assert_eq!((got.on, got.reason), table(m, rain, on, within_min_on, ov));
                            if rain {
                                assert!(!got.on);
                            }
                            cases += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(cases, 101 * 2 * 2 * 2 * 3);
    }

    proptest! {
        #[test]
        fn no_chatter_inside_band(ms in prop::collection::vec(35.01f64..59.99, 1..200), start_on: bool) {
            let mut st = PumpState { on: start_on, since_ms: 0, override_: None };
            let mut now = 100_000u64;
            for m in ms {
                let cmd = decide_pump(m, false, &st, &pol(), now);
                prop_assert_eq!(cmd.on, start_on);
                st = st.apply(cmd, now);
                now += 1000;
            }
        }
    }
}
