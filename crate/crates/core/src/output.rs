//! CSV rendering. Floats use the shortest representation that parses back to
//! the same value, so files are stable across runs and platforms.

use std::fmt::Write as _;

use crate::engine::{EventLog, Snapshot};
use crate::pde::MeanFieldSolution;

pub fn snapshots_csv(snapshots: &[Snapshot]) -> String {
    let mut out = String::from("t,M,age_min,age_q25,age_median,age_q75,age_max,mean_rate,mean_rate_sq\n");
    for s in snapshots {
        let q = &s.age_quantiles;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.t, s.activity, q[0], q[1], q[2], q[3], q[4], s.mean_rate, s.mean_rate_sq
        );
    }
    out
}

pub fn events_csv(log: &EventLog) -> String {
    let mut out = String::from("t,kind,id\n");
    for e in &log.events {
        let _ = writeln!(out, "{},{},{}", e.time, e.kind.as_str(), e.neuron);
    }
    out
}

/// One row per time node: activity and spike flux.
pub fn activity_csv(sol: &MeanFieldSolution) -> String {
    let mut out = String::from("t,M,N\n");
    for ((t, m), n) in sol.t_grid.iter().zip(&sol.activity).zip(&sol.boundary_flux) {
        let _ = writeln!(out, "{t},{m},{n}");
    }
    out
}

/// Stored density rows; the header carries the cell centers.
pub fn density_csv(sol: &MeanFieldSolution) -> String {
    let mut out = String::from("t");
    for x in sol.x_grid() {
        let _ = write!(out, ",{x}");
    }
    out.push('\n');
    for (row, &n) in sol.density.iter().zip(&sol.density_steps) {
        let _ = write!(out, "{}", sol.t_grid[n]);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
