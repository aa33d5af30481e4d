//! Command-line front end.
//!
//! Exit codes: 0 success, 1 the run failed or the validator found a violation,
//! 2 configuration or usage error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::chaos::run_convergence_study;
use crate::config::RunConfig;
use crate::engine::simulate;
use crate::error::Error;
use crate::intensity::check_hypotheses;
use crate::output;
use crate::pde::picard_solve;
use crate::rng;

#[derive(Debug, Parser)]
#[command(name = "agenet", version, about = "Age-structured spiking network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the N-neuron network.
    Simulate(Flags),
    /// Solve the mean-field equations.
    Meanfield(Flags),
    /// Run a convergence study over system sizes.
    Chaos(Flags),
    /// Check the intensity hypotheses on a grid.
    Validate(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `network.seed`, which is also the master seed of a study.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Number of snapshot times.
    #[arg(long)]
    snapshot_grid: Option<usize>,
    #[arg(long)]
    emit_density: Option<bool>,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
    bytes: usize,
}

struct Outputs {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self, Error> {
        std::fs::create_dir_all(&dir)?;
        Ok(Outputs { dir, entries: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<PathBuf, Error> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(content.as_bytes())),
            bytes: content.len(),
        });
        Ok(path)
    }

    fn finish(mut self, subcommand: &str, cfg: &RunConfig, stats: serde_json::Value, started: Instant) -> Result<(), Error> {
        let manifest = json!({
            "tool": "agenet",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "master_seed": cfg.network.seed,
            "seed_scheme": rng::SCHEME,
            "config": cfg.resolved_toml(),
            "outputs": self.entries,
            "stats": stats,
            "wall_clock_seconds": started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        std::fs::write(self.dir.join("manifest.json"), text)?;
        self.entries.clear();
        Ok(())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Cfl { .. } | Error::Domain(_) => 2,
        _ => 1,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(f) => cmd_simulate(&f),
        Command::Meanfield(f) => cmd_meanfield(&f),
        Command::Chaos(f) => cmd_chaos(&f),
        Command::Validate(f) => cmd_validate(&f),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(f: &Flags) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&f.config)?;
    if let Some(seed) = f.seed {
        cfg.network.seed = seed;
    }
    if let Some(n_list) = &f.n_list {
        cfg.chaos.n_list = n_list.clone();
    }
    if let Some(r) = f.replicas {
        cfg.chaos.replicas = Some(r);
    }
    if let Some(points) = f.snapshot_grid {
        cfg.simulation.snapshot_points = points;
    }
    if let Some(emit) = f.emit_density {
        cfg.meanfield.emit_density = emit;
    }
    Ok(cfg)
}

fn out_dir(f: &Flags) -> PathBuf {
    f.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_simulate(f: &Flags) -> Result<i32, Error> {
    let started = Instant::now();
    let cfg = load(f)?;
    let net = cfg.network()?;
    let traj = simulate(&net)?;
    let mut out = Outputs::new(out_dir(f))?;
    out.write("snapshots.csv", &output::snapshots_csv(&traj.snapshots))?;
    out.write("events.csv", &output::events_csv(&traj.log))?;
    let s = &traj.stats;
    println!(
        "simulated N = {} to T = {}: {} spikes, {} arrivals, {} dropped",
        net.n_neurons, net.horizon, s.spikes, s.arrivals, s.dropped_arrivals
    );
    if s.moment_cap_exceeded {
        println!("note: the monitored second moment of the rate exceeded the declared cap");
    }
    let stats = json!({
        "initial_activity": traj.final_state.initial_activity(),
        "run": s,
    });
    out.finish("simulate", &cfg, stats, started)?;
    Ok(0)
}

fn cmd_meanfield(f: &Flags) -> Result<i32, Error> {
    let started = Instant::now();
    let cfg = load(f)?;
    let params = cfg.meanfield_params()?;
    let grid = cfg.grid();
    let mut out = Outputs::new(out_dir(f))?;
    let sol = match picard_solve(&params, &grid) {
        Ok(sol) => sol,
        Err(Error::PicardNotConverged {
            iterations,
            last,
            residuals,
        }) => {
            let path = write_residuals(&out.dir, &residuals)?;
            eprintln!(
                "error: Picard iteration did not converge within {iterations} iterations (last residual {last:e}); residual history in {}",
                path.display()
            );
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    out.write("activity.csv", &output::activity_csv(&sol))?;
    if cfg.meanfield.emit_density {
        out.write("density.csv", &output::density_csv(&sol))?;
    }
    println!(
        "mean-field solve converged in {} iterations (residual {:e}), expected spikes per neuron {}",
        sol.iterations,
        sol.picard_residuals.last().unwrap(),
        sol.expected_spikes()
    );
    let stats = json!({
        "grid": { "dx": sol.dx, "dt": sol.dt, "x_max": sol.x_max, "cells": sol.density[0].len(), "steps": sol.steps() },
        "picard_residuals": sol.picard_residuals,
        "iterations": sol.iterations,
        "max_mass_error": sol.max_mass_error,
        "outflow": sol.outflow,
        "expected_spikes": sol.expected_spikes(),
    });
    out.finish("meanfield", &cfg, stats, started)?;
    Ok(0)
}

fn write_residuals(dir: &Path, residuals: &[f64]) -> Result<PathBuf, Error> {
    let path = dir.join("residuals.json");
    let text = serde_json::to_string_pretty(&json!({ "picard_residuals": residuals })).expect("serializes");
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn cmd_chaos(f: &Flags) -> Result<i32, Error> {
    let started = Instant::now();
    let cfg = load(f)?;
    let study = cfg.study();
    study.validate()?;
    let report = run_convergence_study(&cfg.network()?, &cfg.grid(), &study)?;
    let mut out = Outputs::new(out_dir(f))?;
    out.write("report.json", &(report.to_json() + "\n"))?;
    out.write("report.csv", &report.to_csv())?;
    if let Some(csv) = report.replicas_csv() {
        out.write("replicas.csv", &csv)?;
    }
    println!("{:>6} {:>6} {:>9} {:>12} {:>12} {:>12} {:>12}", "N", "t", "replicas", "mean_D", "se_D", "mean_W1", "se_W1");
    for r in &report.rows {
        println!(
            "{:>6} {:>6.3} {:>9} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            r.n, r.t, r.replicas, r.mean_d, r.se_d, r.mean_w1, r.se_w1
        );
    }
    match &report.fit {
        Some(fit) => println!(
            "fit on {}: slope {:.4} ± {:.4}, scaled c = {:.4} (relative residual {:.3})",
            fit.column, fit.slope, fit.slope_se, fit.scaled_c, fit.scaled_residual
        ),
        None => println!("no rate fit: {}", report.fit_note.as_deref().unwrap_or("")),
    }
    out.finish("chaos", &cfg, json!({ "rows": report.rows.len() }), started)?;
    Ok(0)
}

fn cmd_validate(f: &Flags) -> Result<i32, Error> {
    let cfg = load(f)?;
    let model = cfg.intensity_model()?;
    let report = check_hypotheses(&model, &cfg.validation_grid(), &cfg.validate.deltas)?;
    println!("{report}");
    if let Some(dir) = &f.out {
        let started = Instant::now();
        let mut out = Outputs::new(dir.clone())?;
        out.write(
            "hypotheses.json",
            &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
        )?;
        out.finish("validate", &cfg, json!({ "passed": report.mandatory_passed() }), started)?;
    }
    if report.mandatory_passed() {
        Ok(0)
    } else {
        for failure in report.failures() {
            eprintln!("violation: {failure}");
        }
        Ok(1)
    }
}
