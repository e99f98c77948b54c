//! Handover triggering, scheduling and outcome classification.
//!
//! A neighbor must out-measure the serving cell by a hysteresis margin
//! continuously for the time-to-trigger before a handover is decided
//! (the classic A3 rule). The switch itself lands one preparation delay
//! later, silences traffic for the execution interruption, and is graded
//! afterwards: a failure when the source had already dropped below the
//! survival threshold, a ping-pong when the UE bounces straight back to
//! the cell it just left, a success otherwise.

use crate::config::HandoverConfig;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverOutcome {
    Success,
    Pingpong,
    Failure,
}

impl fmt::Display for HandoverOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandoverOutcome::Success => "success",
            HandoverOutcome::Pingpong => "pingpong",
            HandoverOutcome::Failure => "failure",
        })
    }
}

/// One completed handover; `time` is the execution instant.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverEvent {
    pub time: f64,
    pub ue_id: usize,
    pub source_cell: usize,
    pub target_cell: usize,
    pub outcome: HandoverOutcome,
}

/// A decided handover waiting out its preparation delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingHandover {
    pub target_cell: usize,
    pub decided_at: f64,
    pub execute_at: f64,
}

impl PendingHandover {
    pub fn schedule(target_cell: usize, decided_at: f64, cfg: &HandoverConfig) -> PendingHandover {
        PendingHandover {
            target_cell,
            decided_at,
            execute_at: decided_at + cfg.prep_delay,
        }
    }
}

/// Per-UE trigger bookkeeping: when each neighbor's entry condition was
/// first satisfied without interruption.
#[derive(Debug, Clone, Default)]
pub struct TriggerState {
    entered_at: BTreeMap<usize, f64>,
}

impl TriggerState {
    pub fn new() -> TriggerState {
        TriggerState::default()
    }

    /// Drop all running condition timers (after a handover executes).
    pub fn reset(&mut self) {
        self.entered_at.clear();
    }

    /// Update every neighbor's condition timer at time `now` and return the
    /// neighbor that has held `neighbor > serving + hysteresis` for the full
    /// time-to-trigger, if any. The strongest such neighbor wins; equal
    /// measurements go to the lower cell id. A neighbor whose condition
    /// lapses loses its timer and starts over.
    pub fn evaluate(
        &mut self,
        serving_l3_dbm: f64,
        neighbors: &[(usize, f64)],
        cfg: &HandoverConfig,
        now: f64,
    ) -> Option<usize> {
        let bar = serving_l3_dbm + cfg.hysteresis;
        let mut held: BTreeMap<usize, f64> = BTreeMap::new();
        let mut best: Option<(usize, f64)> = None;
        for &(cell, l3) in neighbors {
            if !(l3 > bar) {
                continue;
            }
            let entered = *self.entered_at.entry(cell).or_insert(now);
            held.insert(cell, entered);
            if now - entered >= cfg.time_to_trigger - 1e-9 {
                let better = match best {
                    None => true,
                    Some((best_cell, best_l3)) => {
                        l3 > best_l3 || (l3 == best_l3 && cell < best_cell)
                    }
                };
                if better {
                    best = Some((cell, l3));
                }
            }
        }
        // Timers of neighbors that vanished or dipped back under the bar.
        self.entered_at = held;
        best.map(|(cell, _)| cell)
    }
}

/// Grade a handover at its execution instant. The source-side quality
/// decides failure; otherwise bouncing back to a cell successfully left
/// within the ping-pong window marks a ping-pong.
pub fn classify_outcome(
    source_l3_at_exec_dbm: f64,
    ue_history: &[HandoverEvent],
    source_cell: usize,
    target_cell: usize,
    exec_time: f64,
    cfg: &HandoverConfig,
) -> HandoverOutcome {
    if source_l3_at_exec_dbm < cfg.fail_rsrp_threshold {
        return HandoverOutcome::Failure;
    }
    let bounced = ue_history.iter().rev().any(|e| {
        e.outcome == HandoverOutcome::Success
            && e.source_cell == target_cell
            && e.target_cell == source_cell
            && exec_time - e.time <= cfg.pingpong_window + 1e-9
    });
    if bounced {
        HandoverOutcome::Pingpong
    } else {
        HandoverOutcome::Success
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HandoverConfig {
        HandoverConfig::default()
    }

    fn instant_cfg() -> HandoverConfig {
        HandoverConfig {
            time_to_trigger: 0.0,
            ..cfg()
        }
    }

    #[test]
    fn entry_condition_is_a_strict_margin_comparison() {
        let mut st = TriggerState::new();
        // -80 > -84 + 3: enters and, with no dwell required, triggers.
        assert_eq!(
            st.evaluate(-84.0, &[(1, -80.0)], &instant_cfg(), 0.0),
            Some(1)
        );
        // -80 > -84 + 5 fails.
        let tight = HandoverConfig {
            hysteresis: 5.0,
            ..instant_cfg()
        };
        let mut st = TriggerState::new();
        assert_eq!(st.evaluate(-84.0, &[(1, -80.0)], &tight, 0.0), None);
        // Equality is not enough.
        let mut st = TriggerState::new();
        assert_eq!(st.evaluate(-83.0, &[(1, -80.0)], &instant_cfg(), 0.0), None);
    }

    #[test]
    fn infinite_hysteresis_never_triggers() {
        let wall = HandoverConfig {
            hysteresis: f64::INFINITY,
            time_to_trigger: 0.0,
            ..cfg()
        };
        let mut st = TriggerState::new();
        for step in 0..100 {
            assert_eq!(
                st.evaluate(-120.0, &[(1, -30.0)], &wall, step as f64 * 0.1),
                None
            );
        }
    }

    #[test]
    fn condition_must_hold_for_the_full_dwell() {
        let ho = HandoverConfig {
            time_to_trigger: 0.1,
            ..cfg()
        };
        let mut st = TriggerState::new();
        let strong = [(1, -75.0)];
        let weak = [(1, -90.0)];
        // Held for 90 ms — one step short.
        for k in 0..10 {
            assert_eq!(st.evaluate(-84.0, &strong, &ho, k as f64 * 0.01), None);
        }
        // Lapses for one step: timer resets.
        assert_eq!(st.evaluate(-84.0, &weak, &ho, 0.10), None);
        // Needs another full dwell from re-entry at 0.11.
        for k in 11..21 {
            let got = st.evaluate(-84.0, &strong, &ho, k as f64 * 0.01);
            assert_eq!(got, None, "triggered early at step {k}");
        }
        assert_eq!(st.evaluate(-84.0, &strong, &ho, 0.21), Some(1));
    }

    #[test]
    fn strongest_qualified_neighbor_wins_and_ties_go_low() {
        let mut st = TriggerState::new();
        let neighbors = [(5, -78.0), (2, -76.0), (9, -76.0)];
        assert_eq!(st.evaluate(-84.0, &neighbors, &instant_cfg(), 0.0), Some(2));
    }

    #[test]
    fn a_young_strong_neighbor_does_not_preempt_a_qualified_one() {
        let ho = HandoverConfig {
            time_to_trigger: 0.1,
            ..cfg()
        };
        let mut st = TriggerState::new();
        for k in 0..=10 {
            let now = k as f64 * 0.01;
            // Neighbor 7 appears late but stronger.
            let field: Vec<(usize, f64)> = if k < 10 {
                vec![(3, -78.0)]
            } else {
                vec![(3, -78.0), (7, -60.0)]
            };
            let got = st.evaluate(-84.0, &field, &ho, now);
            if k < 10 {
                assert_eq!(got, None);
            } else {
                assert_eq!(got, Some(3));
            }
        }
    }

    #[test]
    fn preparation_delay_shifts_the_execution_instant() {
        let p = PendingHandover::schedule(4, 5.0, &cfg());
        assert!((p.execute_at - 5.05).abs() < 1e-12);
        assert_eq!(p.target_cell, 4);
    }

    #[test]
    fn deep_fade_at_execution_is_a_failure() {
        let got = classify_outcome(-130.0, &[], 0, 1, 10.0, &cfg());
        assert_eq!(got, HandoverOutcome::Failure);
        // Even a would-be ping-pong grades as failure first.
        let history = [HandoverEvent {
            time: 9.8,
            ue_id: 0,
            source_cell: 1,
            target_cell: 0,
            outcome: HandoverOutcome::Success,
        }];
        let got = classify_outcome(-130.0, &history, 0, 1, 10.0, &cfg());
        assert_eq!(got, HandoverOutcome::Failure);
    }

    #[test]
    fn quick_return_to_the_previous_cell_is_a_pingpong() {
        let history = [HandoverEvent {
            time: 10.0,
            ue_id: 3,
            source_cell: 0,
            target_cell: 1,
            outcome: HandoverOutcome::Success,
        }];
        // Bounce back 0.8 s later: inside the 1 s window.
        let got = classify_outcome(-90.0, &history, 1, 0, 10.8, &cfg());
        assert_eq!(got, HandoverOutcome::Pingpong);
        // The same bounce 1.3 s later has aged out.
        let got = classify_outcome(-90.0, &history, 1, 0, 11.3, &cfg());
        assert_eq!(got, HandoverOutcome::Success);
        // A different target is no bounce at all.
        let got = classify_outcome(-90.0, &history, 1, 2, 10.8, &cfg());
        assert_eq!(got, HandoverOutcome::Success);
    }

    #[test]
    fn failed_departures_do_not_anchor_pingpongs() {
        let history = [HandoverEvent {
            time: 10.0,
            ue_id: 3,
            source_cell: 0,
            target_cell: 1,
            outcome: HandoverOutcome::Failure,
        }];
        let got = classify_outcome(-90.0, &history, 1, 0, 10.5, &cfg());
        assert_eq!(got, HandoverOutcome::Success);
    }
}
