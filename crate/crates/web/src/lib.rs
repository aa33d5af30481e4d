//! Browser bindings: each export takes plain numbers and returns a JSON string
//! for the page to plot.

use agenet::chaos::{run_with_meanfield, StudySpec};
use agenet::delays::DelayModel;
use agenet::engine::{simulate, EventKind, NetworkConfig, SimOptions};
use agenet::intensity::IntensityModel;
use agenet::laws::InitialLaw;
use agenet::pde::{picard_solve, GridParams, MeanFieldParams, MeanFieldSolution};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Neurons shown in the raster plot.
const RASTER_ROWS: usize = 100;

fn config(n: usize, epsilon: f64, tau: f64, horizon: f64, seed: u64) -> agenet::Result<NetworkConfig> {
    let cfg = NetworkConfig {
        n_neurons: n,
        alpha: 1.0,
        epsilon,
        horizon,
        g0: InitialLaw::Uniform { lo: 0.0, hi: 1.0 },
        m0: InitialLaw::Dirac { value: 1.0 },
        intensity: IntensityModel::power_threshold(1.0, 0.3, 0.5, 0.2)?,
        delay: DelayModel::Dirac { tau },
        seed,
        options: SimOptions {
            snapshot_points: 201,
            keep_ages: false,
            ..SimOptions::default()
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn grid() -> GridParams {
    GridParams {
        dx: 5e-3,
        dt: 5e-3,
        ..GridParams::default()
    }
}

fn solve(cfg: &NetworkConfig) -> agenet::Result<MeanFieldSolution> {
    picard_solve(&MeanFieldParams::from_network(cfg)?, &grid())
}

pub fn network_json(n: usize, epsilon: f64, tau: f64, horizon: f64, seed: u64) -> agenet::Result<Value> {
    let cfg = config(n, epsilon, tau, horizon, seed)?;
    let traj = simulate(&cfg)?;
    let mf = solve(&cfg)?.activity_path();
    let raster: Vec<(f64, usize)> = traj
        .log
        .of_kind(EventKind::Spike)
        .filter(|e| e.neuron < RASTER_ROWS)
        .map(|e| (e.time, e.neuron))
        .collect();
    Ok(json!({
        "t": traj.snapshots.iter().map(|s| s.t).collect::<Vec<_>>(),
        "activity": traj.snapshots.iter().map(|s| s.activity).collect::<Vec<_>>(),
        "meanfield": traj.snapshots.iter().map(|s| mf.at(s.t)).collect::<Vec<_>>(),
        "raster": raster,
        "raster_rows": RASTER_ROWS.min(n),
        "spikes": traj.stats.spikes,
        "dropped": traj.stats.dropped_arrivals,
    }))
}

pub fn meanfield_json(epsilon: f64, tau: f64, horizon: f64) -> agenet::Result<Value> {
    let sol = solve(&config(1, epsilon, tau, horizon, 0)?)?;
    let x = sol.x_grid();
    let rows: Vec<Value> = sol
        .density_steps
        .iter()
        .zip(&sol.density)
        .step_by(20)
        .map(|(&n, row)| json!({ "t": sol.t_grid[n], "f": row }))
        .collect();
    Ok(json!({
        "t": sol.t_grid,
        "activity": sol.activity,
        "flux": sol.boundary_flux,
        "x": x,
        "density": rows,
        "iterations": sol.iterations,
        "residuals": sol.picard_residuals,
    }))
}

pub fn coupling_json(epsilon: f64, replicas: usize, seed: u64) -> agenet::Result<Value> {
    let base = config(1, epsilon, 0.0, 1.0, seed)?;
    let mf = solve(&base)?;
    let mut study = StudySpec::new(vec![25, 100, 400], seed);
    study.replicas = Some(replicas);
    let report = run_with_meanfield(&base, &mf, &study)?;
    Ok(json!({
        "rows": report.rows,
        "slope": report.fit.as_ref().map(|f| f.slope),
        "slope_se": report.fit.as_ref().map(|f| f.slope_se),
    }))
}

fn to_js(result: agenet::Result<Value>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Network run with its mean-field activity for comparison.
#[wasm_bindgen(js_name = simulateNetwork)]
pub fn simulate_network(n: usize, epsilon: f64, tau: f64, horizon: f64, seed: u32) -> Result<String, JsError> {
    to_js(network_json(n, epsilon, tau, horizon, seed.into()))
}

/// Mean-field activity, spike flux and a few density profiles.
#[wasm_bindgen(js_name = solveMeanField)]
pub fn solve_mean_field(epsilon: f64, tau: f64, horizon: f64) -> Result<String, JsError> {
    to_js(meanfield_json(epsilon, tau, horizon))
}

/// Small convergence study over N = 25, 100, 400.
#[wasm_bindgen(js_name = couplingStudy)]
pub fn coupling_study(epsilon: f64, replicas: usize, seed: u32) -> Result<String, JsError> {
    to_js(coupling_json(epsilon, replicas, seed.into()))
}
