//! Post-run evaluation: steady-state RMSE, transmission percentage,
//! inter-event statistics and Lyapunov diagnostics.
//!
//! The average release period is reported under two readings: the mean
//! inter-event time, and the mean of the event instants themselves. The two
//! definitions disagree in general; both are computed and neither is folded
//! into the other.

use crate::sim::{RunOutput, Telemetry};
use crate::trigger::Event;
use crate::{Error, JointVector, Result};

pub const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Per-joint steady-state position RMSE, degrees.
    pub rmse_q_deg: JointVector,
    /// Per-joint steady-state velocity RMSE, degrees per second.
    pub rmse_qdot_deg: JointVector,
    pub transmission_pct: f64,
    pub n_events: usize,
    pub iet_min: f64,
    pub iet_max: f64,
    /// Mean inter-event time.
    pub iet_mean: f64,
    /// Mean of the event instants (the footnote reading of "average release
    /// period").
    pub mean_event_instant: f64,
    pub max_norm_xi: f64,
    /// eps_bound minus the worst tracking norm past the prescribed time.
    pub bound_margin: f64,
}

/// Per-joint RMS of e (deg) and e_dot (deg/s) over recorded rows with t >= T.
pub fn steady_state_rmse(telemetry: &Telemetry, prescribed_time: f64) -> Result<(JointVector, JointVector)> {
    let rows: Vec<_> = telemetry
        .rows
        .iter()
        .filter(|r| r.t >= prescribed_time)
        .collect();
    if rows.is_empty() {
        return Err(Error::config(format!(
            "steady_state_rmse: no telemetry rows at or past t = {prescribed_time}"
        )));
    }
    let n = rows[0].q.len();
    let mut sq_q = JointVector::zeros(n);
    let mut sq_v = JointVector::zeros(n);
    for row in &rows {
        for i in 0..n {
            let eq = row.q[i] - row.q_r[i];
            let ev = row.q_dot[i] - row.qd_r[i];
            sq_q[i] += eq * eq;
            sq_v[i] += ev * ev;
        }
    }
    let count = rows.len() as f64;
    for i in 0..n {
        sq_q[i] = (sq_q[i] / count).sqrt() * RAD_TO_DEG;
        sq_v[i] = (sq_v[i] / count).sqrt() * RAD_TO_DEG;
    }
    Ok((sq_q, sq_v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventStats {
    pub transmission_pct: f64,
    pub n_events: usize,
    pub iet_min: f64,
    pub iet_max: f64,
    pub iet_mean: f64,
    pub mean_event_instant: f64,
}

/// Transmission percentage and inter-event statistics.
///
/// `n_samples` is the total number of control-evaluation instants of the run.
pub fn event_stats(events: &[Event], n_samples: usize) -> Result<EventStats> {
    if events.is_empty() {
        return Err(Error::config("event_stats: empty event log"));
    }
    let n_events = events.len();
    let transmission_pct = 100.0 * n_events as f64 / n_samples as f64;
    let mean_event_instant = events.iter().map(|e| e.t).sum::<f64>() / n_events as f64;

    let (iet_min, iet_max, iet_mean) = if n_events >= 2 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for w in events.windows(2) {
            let iet = w[1].t - w[0].t;
            lo = lo.min(iet);
            hi = hi.max(iet);
        }
        let mean = (events[n_events - 1].t - events[0].t) / (n_events - 1) as f64;
        (lo, hi, mean)
    } else {
        (0.0, 0.0, 0.0)
    };

    Ok(EventStats {
        transmission_pct,
        n_events,
        iet_min,
        iet_max,
        iet_mean,
        mean_event_instant,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub max_v: f64,
    /// Intervals (t_start, t_end) where V increased while ||xi|| exceeded the
    /// residual threshold.
    pub flagged: Vec<(f64, f64)>,
}

/// Scans the telemetry for Lyapunov increases above the residual level.
pub fn lyapunov_trace(telemetry: &Telemetry, residual_threshold: f64) -> LyapunovReport {
    let mut max_v: f64 = 0.0;
    let mut flagged: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for w in telemetry.rows.windows(2) {
        max_v = max_v.max(w[0].lyapunov).max(w[1].lyapunov);
        let violating = w[1].lyapunov > w[0].lyapunov && w[0].norm_xi > residual_threshold;
        match (violating, open) {
            (true, None) => open = Some(w[0].t),
            (false, Some(start)) => {
                flagged.push((start, w[0].t));
                open = None;
            }
            _ => {}
        }
    }
    if let (Some(start), Some(last)) = (open, telemetry.rows.last()) {
        flagged.push((start, last.t));
    }
    LyapunovReport { max_v, flagged }
}

/// Assembles the full metrics record for one run.
pub fn compute(output: &RunOutput, prescribed_time: f64, _dt: f64, eps_bound: f64) -> Result<RunMetrics> {
    let (rmse_q_deg, rmse_qdot_deg) = steady_state_rmse(&output.telemetry, prescribed_time)?;
    let stats = event_stats(&output.events, output.summary.n_samples)?;
    Ok(RunMetrics {
        rmse_q_deg,
        rmse_qdot_deg,
        transmission_pct: stats.transmission_pct,
        n_events: stats.n_events,
        iet_min: stats.iet_min,
        iet_max: stats.iet_max,
        iet_mean: stats.iet_mean,
        mean_event_instant: stats.mean_event_instant,
        max_norm_xi: output.summary.max_norm_xi,
        bound_margin: eps_bound - output.summary.max_tracking_norm_after_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TelemetryRow;
    use crate::trigger::EventReason;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v2(a: f64, b: f64) -> JointVector {
        JointVector::from_vec(vec![a, b])
    }

    fn row(t: f64, q: JointVector, qd: JointVector, q_r: JointVector, qd_r: JointVector, v: f64, norm_xi: f64) -> TelemetryRow {
        TelemetryRow {
            t,
            q,
            q_dot: qd,
            q_r,
            qd_r,
            u: v2(0.0, 0.0),
            norm_xi,
            norm_eps: 0.0,
            pi: 0.0,
            norm_chi: 0.0,
            beta: 0.0,
            fired: false,
            env_feasible: true,
            lyapunov: v,
            state_in_box: true,
        }
    }

    fn event(t: f64) -> Event {
        Event {
            index: 0,
            t,
            norm_ue: 0.0,
            norm_u_held: 0.0,
            beta: 0.0,
            reason: EventReason::Threshold,
        }
    }

    #[test]
    fn rmse_of_perfect_tracking_is_zero() {
        let telemetry = Telemetry {
            rows: (0..100)
                .map(|i| {
                    let q = v2(0.1 * i as f64, -0.2);
                    row(4.0 + i as f64 * 0.01, q.clone(), v2(0.1, 0.0), q, v2(0.1, 0.0), 0.0, 0.0)
                })
                .collect(),
        };
        let (rq, rv) = steady_state_rmse(&telemetry, 4.0).unwrap();
        assert_eq!(rq, v2(0.0, 0.0));
        assert_eq!(rv, v2(0.0, 0.0));
    }

    #[test]
    fn rmse_of_constant_offset_is_that_offset() {
        // Constant 1 degree error in joint 1 past T.
        let one_deg = 1.0 / RAD_TO_DEG;
        let telemetry = Telemetry {
            rows: (0..100)
                .map(|i| {
                    row(
                        4.0 + i as f64 * 0.01,
                        v2(one_deg, 0.0),
                        v2(0.0, 0.0),
                        v2(0.0, 0.0),
                        v2(0.0, 0.0),
                        0.0,
                        0.0,
                    )
                })
                .collect(),
        };
        let (rq, _) = steady_state_rmse(&telemetry, 4.0).unwrap();
        assert_relative_eq!(rq[0], 1.0, max_relative = 1e-12);
        assert_eq!(rq[1], 0.0);
    }

    #[test]
    fn rmse_of_sinusoid_is_amplitude_over_sqrt2() {
        // e1(t) = A sin(w t) sampled over an integer number of periods.
        let amp = 0.02;
        let w = std::f64::consts::TAU; // period 1 s
        let n = 100_000usize;
        let telemetry = Telemetry {
            rows: (0..n)
                .map(|i| {
                    let t = 4.0 + 2.0 * i as f64 / n as f64; // two full periods
                    row(t, v2(amp * (w * (t - 4.0)).sin(), 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 0.0, 0.0)
                })
                .collect(),
        };
        let (rq, _) = steady_state_rmse(&telemetry, 4.0).unwrap();
        assert_relative_eq!(rq[0], amp / 2f64.sqrt() * RAD_TO_DEG, max_relative = 1e-4);
    }

    #[test]
    fn rmse_requires_rows_past_t() {
        let telemetry = Telemetry {
            rows: vec![row(1.0, v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 0.0, 0.0)],
        };
        assert!(steady_state_rmse(&telemetry, 4.0).is_err());
    }

    #[test]
    fn event_stats_examples() {
        // 62 events over 1000 samples -> 6.2%.
        let events: Vec<Event> = (0..62).map(|i| event(i as f64)).collect();
        let stats = event_stats(&events, 1000).unwrap();
        assert_relative_eq!(stats.transmission_pct, 6.2, max_relative = 1e-12);

        // Events at {0, 1, 2, 3}: mean instant 1.5 s, mean IET 1.0 s.
        let events: Vec<Event> = [0.0, 1.0, 2.0, 3.0].iter().map(|&t| event(t)).collect();
        let stats = event_stats(&events, 100).unwrap();
        assert_relative_eq!(stats.mean_event_instant, 1.5, max_relative = 1e-12);
        assert_relative_eq!(stats.iet_mean, 1.0, max_relative = 1e-12);
        assert_eq!(stats.iet_min, 1.0);
        assert_eq!(stats.iet_max, 1.0);
    }

    #[test]
    fn iet_ordering_invariant() {
        let events: Vec<Event> = [0.0, 0.1, 0.4, 0.5, 1.5].iter().map(|&t| event(t)).collect();
        let stats = event_stats(&events, 1000).unwrap();
        assert!(stats.iet_min <= stats.iet_mean);
        assert!(stats.iet_mean <= stats.iet_max);
    }

    #[test]
    fn lyapunov_flags_increase_above_threshold() {
        // V rises between t = 1 and t = 2 while ||xi|| = 0.5 > 0.2.
        let telemetry = Telemetry {
            rows: vec![
                row(0.0, v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 1.0, 0.1),
                row(1.0, v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 0.5, 0.5),
                row(2.0, v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 0.8, 0.5),
                row(3.0, v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), v2(0.0, 0.0), 0.1, 0.1),
            ],
        };
        let report = lyapunov_trace(&telemetry, 0.2);
        assert_eq!(report.flagged, vec![(1.0, 2.0)]);
        assert_relative_eq!(report.max_v, 1.0);

        // Same trace with a higher threshold: nothing flagged.
        let report = lyapunov_trace(&telemetry, 0.9);
        assert!(report.flagged.is_empty());
    }

    proptest! {
        // Unit conversion round-trips.
        #[test]
        fn rad_deg_round_trip(x in -1000.0..1000.0f64) {
            let back = x * RAD_TO_DEG / RAD_TO_DEG;
            prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}
