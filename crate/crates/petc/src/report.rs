//! Run artifacts: telemetry/event/metrics CSV, key-value summary, sweep
//! table and a gnuplot script. Floats are serialized with 17 significant
//! digits so round-tripping is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bounds::{BoundSet, MonitoringClass};
use crate::metrics::RunMetrics;
use crate::sim::{RunOutput, Scenario, SweepRow, Telemetry};
use crate::trigger::Event;
use crate::Result;

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn joint_cols(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
}

/// Telemetry CSV: header row, fixed column order, per-joint vector columns.
pub fn telemetry_csv(telemetry: &Telemetry) -> String {
    let n = telemetry.rows.first().map_or(0, |r| r.q.len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "t,{},{},{},{},{},norm_xi,norm_eps,pi,norm_chi,beta,fired,env_feasible,lyapunov,state_in_box",
        joint_cols("q", n),
        joint_cols("qdot", n),
        joint_cols("qr", n),
        joint_cols("qdotr", n),
        joint_cols("u", n),
    );
    for r in &telemetry.rows {
        let vecs = [&r.q, &r.q_dot, &r.q_r, &r.qd_r, &r.u];
        let mut line = fmt_f64(r.t);
        for v in vecs {
            for x in v.iter() {
                line.push(',');
                line.push_str(&fmt_f64(*x));
            }
        }
        let _ = writeln!(
            out,
            "{line},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.norm_xi),
            fmt_f64(r.norm_eps),
            fmt_f64(r.pi),
            fmt_f64(r.norm_chi),
            fmt_f64(r.beta),
            r.fired as u8,
            r.env_feasible as u8,
            fmt_f64(r.lyapunov),
            r.state_in_box as u8,
        );
    }
    out
}

/// Event-log CSV: k, t_k (s), norm_ue (N.m), norm_u_held (N.m), beta (N.m).
pub fn events_csv(events: &[Event]) -> String {
    let mut out = String::from("k,t_k_s,norm_ue_nm,norm_u_held_nm,beta_nm,reason\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.index,
            fmt_f64(e.t),
            fmt_f64(e.norm_ue),
            fmt_f64(e.norm_u_held),
            fmt_f64(e.beta),
            e.reason,
        );
    }
    out
}

fn metrics_header(n: usize) -> String {
    format!(
        "{},{},transmission_pct,n_events,iet_min_s,iet_max_s,iet_mean_s,mean_event_instant_s,max_norm_xi,bound_margin",
        joint_cols("rmse_q_deg_", n),
        joint_cols("rmse_qdot_degs_", n),
    )
}

fn metrics_row(m: &RunMetrics) -> String {
    let mut cols: Vec<String> = m.rmse_q_deg.iter().map(|x| fmt_f64(*x)).collect();
    cols.extend(m.rmse_qdot_deg.iter().map(|x| fmt_f64(*x)));
    cols.push(fmt_f64(m.transmission_pct));
    cols.push(m.n_events.to_string());
    cols.push(fmt_f64(m.iet_min));
    cols.push(fmt_f64(m.iet_max));
    cols.push(fmt_f64(m.iet_mean));
    cols.push(fmt_f64(m.mean_event_instant));
    cols.push(fmt_f64(m.max_norm_xi));
    cols.push(fmt_f64(m.bound_margin));
    cols.join(",")
}

/// Metrics CSV: one row per run.
pub fn metrics_csv(metrics: &RunMetrics) -> String {
    format!("{}\n{}\n", metrics_header(metrics.rmse_q_deg.len()), metrics_row(metrics))
}

/// Aligned key-value text block: run summary, metrics and derived bounds.
pub fn summary_text(
    output: &RunOutput,
    metrics: &RunMetrics,
    set: &BoundSet,
    h_class: MonitoringClass,
) -> String {
    let s = &output.summary;
    let mut rows: Vec<(String, String)> = vec![
        ("n_steps".into(), s.n_steps.to_string()),
        ("n_samples".into(), s.n_samples.to_string()),
        ("n_events".into(), s.n_events.to_string()),
        ("clamp_count".into(), s.clamp_count.to_string()),
        ("state_violation_count".into(), s.state_violation_count.to_string()),
        ("env_infeasible_count".into(), s.env_infeasible_count.to_string()),
        ("max_norm_xi".into(), fmt_f64(s.max_norm_xi)),
        ("max_lyapunov".into(), fmt_f64(s.max_lyapunov)),
        ("max_tracking_norm_after_t".into(), fmt_f64(s.max_tracking_norm_after_t)),
        ("transmission_pct".into(), fmt_f64(metrics.transmission_pct)),
        ("iet_min_s".into(), fmt_f64(metrics.iet_min)),
        ("iet_max_s".into(), fmt_f64(metrics.iet_max)),
        ("iet_mean_s".into(), fmt_f64(metrics.iet_mean)),
        ("mean_event_instant_s".into(), fmt_f64(metrics.mean_event_instant)),
        ("bound_margin".into(), fmt_f64(metrics.bound_margin)),
        ("eps_bound".into(), fmt_f64(set.eps_bound)),
        ("nu_s".into(), fmt_f64(set.nu)),
        ("h_star_s".into(), fmt_f64(set.h_star)),
        ("h_classification".into(), h_class.to_string()),
    ];
    for (i, x) in metrics.rmse_q_deg.iter().enumerate() {
        rows.push((format!("rmse_q{}_deg", i + 1), fmt_f64(*x)));
    }
    for (i, x) in metrics.rmse_qdot_deg.iter().enumerate() {
        rows.push((format!("rmse_qdot{}_degs", i + 1), fmt_f64(*x)));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$} = {v}");
    }
    out
}

/// Bound table: eleven derived constants plus the classification of h.
pub fn bounds_text(set: &BoundSet, h: f64, h_class: MonitoringClass) -> String {
    let rows = [
        ("delta_bar", set.delta_bar),
        ("kappa", set.kappa),
        ("a", set.a),
        ("eps_bound", set.eps_bound),
        ("l1", set.l1),
        ("l2", set.l2),
        ("l3", set.l3),
        ("l4", set.l4),
        ("l_m", set.l_m),
        ("nu", set.nu),
        ("h_star", set.h_star),
    ];
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<9} = {}", fmt_f64(v));
    }
    let _ = writeln!(out, "h         = {}", fmt_f64(h));
    let _ = writeln!(out, "h_class   = {h_class}");
    out
}

/// Sweep CSV: one metrics row per parameter value; failed rows carry the
/// error text in the last column and empty metric cells.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let n = rows
        .iter()
        .find_map(|r| r.outcome.as_ref().ok().map(|(_, m)| m.rmse_q_deg.len()))
        .unwrap_or(0);
    let header = metrics_header(n);
    let n_cols = header.split(',').count();
    let mut out = format!("param,value,status,{header},error\n");
    for row in rows {
        match &row.outcome {
            Ok((_, m)) => {
                let _ = writeln!(out, "{},{},ok,{},", row.param, fmt_f64(row.value), metrics_row(m));
            }
            Err(e) => {
                let blanks = ",".repeat(n_cols);
                let msg = e.to_string().replace(',', ";").replace('\n', " ");
                let _ = writeln!(out, "{},{},failed{blanks},{msg}", row.param, fmt_f64(row.value));
            }
        }
    }
    out
}

/// Gnuplot script rendering joint positions, velocities and torques from
/// telemetry.csv against the scenario's constraint lines.
pub fn plot_script(scenario: &Scenario) -> String {
    let n = scenario.plant.dof();
    let mut out = String::new();
    let _ = writeln!(out, "# gnuplot script; expects telemetry.csv in the working directory");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key outside");
    let _ = writeln!(out, "set xlabel 't [s]'");
    let _ = writeln!(out, "set terminal pngcairo size 1200,900");
    let _ = writeln!(out, "set output 'run.png'");
    let _ = writeln!(out, "set multiplot layout 3,1");
    // Columns: t=1, q starts at 2, qdot at 2+n, qr at 2+2n, qdotr at 2+3n, u at 2+4n.
    let series = |label: &str, base: usize| {
        (0..n)
            .map(|i| format!("'telemetry.csv' using 1:{} with lines title '{label}{}'", base + i, i + 1))
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let _ = writeln!(out, "set ylabel 'q [rad]'");
    let mut q_lines: Vec<String> = vec![series("q", 2)];
    for i in 0..n {
        q_lines.push(format!("{} with lines dt 2 lc 'gray' title 'q{} bounds'", scenario.cbox.q_lo[i], i + 1));
        q_lines.push(format!("{} with lines dt 2 lc 'gray' notitle", scenario.cbox.q_hi[i]));
    }
    let _ = writeln!(out, "plot {}", q_lines.join(", \\\n     "));
    let _ = writeln!(out, "set ylabel 'qdot [rad/s]'");
    let mut v_lines: Vec<String> = vec![series("qdot", 2 + n)];
    for i in 0..n {
        v_lines.push(format!("{} with lines dt 2 lc 'gray' title 'v{} bounds'", scenario.cbox.v_lo[i], i + 1));
        v_lines.push(format!("{} with lines dt 2 lc 'gray' notitle", scenario.cbox.v_hi[i]));
    }
    let _ = writeln!(out, "plot {}", v_lines.join(", \\\n     "));
    let _ = writeln!(out, "set ylabel 'u [N.m]'");
    let mut u_lines: Vec<String> = vec![series("u", 2 + 4 * n)];
    for i in 0..n {
        u_lines.push(format!("{} with lines dt 2 lc 'gray' title 'u{} bounds'", scenario.cbox.u_lo[i], i + 1));
        u_lines.push(format!("{} with lines dt 2 lc 'gray' notitle", scenario.cbox.u_hi[i]));
    }
    let _ = writeln!(out, "plot {}", u_lines.join(", \\\n     "));
    let _ = writeln!(out, "unset multiplot");
    out
}

/// Writes the five run artifacts into `dir` (created if missing).
pub fn write_run_artifacts(
    dir: &Path,
    scenario: &Scenario,
    output: &RunOutput,
    metrics: &RunMetrics,
    set: &BoundSet,
    h_class: MonitoringClass,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("telemetry.csv"), telemetry_csv(&output.telemetry))?;
    fs::write(dir.join("events.csv"), events_csv(&output.events))?;
    fs::write(dir.join("metrics.csv"), metrics_csv(metrics))?;
    fs::write(dir.join("summary.txt"), summary_text(output, metrics, set, h_class))?;
    fs::write(dir.join("plot.gp"), plot_script(scenario))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigger::EventReason;
    use crate::JointVector;

    #[test]
    fn fmt_round_trips_exactly() {
        for &x in &[0.0, 1.0, -2.5, std::f64::consts::PI, 6.2e-5, 1e300, -1e-300] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn events_csv_round_trips() {
        let events = vec![Event {
            index: 3,
            t: 0.0006,
            norm_ue: 1.25,
            norm_u_held: 1.0,
            beta: 0.0964,
            reason: EventReason::Threshold,
        }];
        let text = events_csv(&events);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header, ["k", "t_k_s", "norm_ue_nm", "norm_u_held_nm", "beta_nm", "reason"]);
        let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cols[0], "3");
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0006);
        assert_eq!(cols[4].parse::<f64>().unwrap(), 0.0964);
        assert_eq!(cols[5], "threshold");
    }

    #[test]
    fn metrics_csv_round_trips() {
        let m = RunMetrics {
            rmse_q_deg: JointVector::from_vec(vec![0.1, 0.2]),
            rmse_qdot_deg: JointVector::from_vec(vec![0.3, 0.4]),
            transmission_pct: 6.2,
            n_events: 62,
            iet_min: 2e-4,
            iet_max: 9.8e-3,
            iet_mean: 1e-3,
            mean_event_instant: 1.5,
            max_norm_xi: 1.9,
            bound_margin: 0.5,
        };
        let text = metrics_csv(&m);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), row.len());
        let get = |name: &str| -> f64 {
            let i = header.iter().position(|h| *h == name).unwrap();
            row[i].parse().unwrap()
        };
        assert_eq!(get("transmission_pct"), 6.2);
        assert_eq!(get("rmse_q_deg_2"), 0.2);
        assert_eq!(get("n_events"), 62.0);
    }

    #[test]
    fn telemetry_csv_header_matches_row_width() {
        let scenario = crate::config::default_scenario();
        let row = crate::sim::TelemetryRow {
            t: 0.0,
            q: scenario.sim.q0.clone(),
            q_dot: scenario.sim.v0.clone(),
            q_r: scenario.sim.q0.clone(),
            qd_r: scenario.sim.v0.clone(),
            u: JointVector::zeros(2),
            norm_xi: 0.0,
            norm_eps: 0.0,
            pi: 0.0,
            norm_chi: 0.0,
            beta: 0.0964,
            fired: true,
            env_feasible: true,
            lyapunov: 0.0,
            state_in_box: true,
        };
        let text = telemetry_csv(&Telemetry { rows: vec![row] });
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').count();
        let row_width = lines.next().unwrap().split(',').count();
        assert_eq!(header, row_width);
        assert_eq!(header, 1 + 5 * 2 + 9);
    }

    #[test]
    fn plot_script_mentions_all_panels() {
        let scenario = crate::config::default_scenario();
        let script = plot_script(&scenario);
        assert!(script.contains("telemetry.csv"));
        assert!(script.contains("q [rad]"));
        assert!(script.contains("qdot [rad/s]"));
        assert!(script.contains("u [N.m]"));
        assert!(script.contains("multiplot"));
    }
}
