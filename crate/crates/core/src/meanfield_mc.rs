//! Coupled mean-field copies.
//!
//! Copy `Y^i` starts from the same age as neuron `i` and is driven by the
//! same proposal points. Its rate uses the deterministic mean-field activity
//! instead of the network activity. Both processes are thinned against the
//! larger of their envelopes with one shared acceptance level, so a proposal
//! fires both when it lies under both rates.

use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::{Network, NetworkConfig, RunStats, Shadow};
use crate::error::{Error, Result};
use crate::pde::MeanFieldSolution;
use crate::transport::exact_sum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingStat {
    pub t: f64,
    pub distance: f64,
    pub activity_gap: f64,
    /// `(1/N) sum |X^i - Y^i|`.
    pub mean_age_gap: f64,
    pub m_network: f64,
    pub m_meanfield: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub n: usize,
    pub seed: u64,
    pub stats: Vec<CouplingStat>,
    /// Network ages at each statistic time, when ages are kept.
    pub network_ages: Vec<Vec<f64>>,
    pub copy_ages: Vec<Vec<f64>>,
    pub initial_ages: Vec<f64>,
    pub network: RunStats,
    pub copy_spikes: u64,
}

fn mismatch(what: &str) -> Error {
    Error::Config(format!("network and mean-field solution disagree on {what}"))
}

fn check_compatible(config: &NetworkConfig, mf: &MeanFieldSolution) -> Result<f64> {
    let p = &mf.params;
    if p.instantaneous {
        return Err(mismatch("the decay regime (instantaneous solution)"));
    }
    if p.alpha != config.alpha {
        return Err(mismatch("alpha"));
    }
    if p.epsilon != config.epsilon {
        return Err(mismatch("epsilon"));
    }
    if p.intensity != config.intensity {
        return Err(mismatch("the intensity"));
    }
    if p.delay != config.delay {
        return Err(mismatch("the delay law"));
    }
    if p.g0 != config.g0 {
        return Err(mismatch("the initial age law"));
    }
    if p.horizon < config.horizon {
        return Err(mismatch("the horizon (solution too short)"));
    }
    let m0 = config.options.pinned_m0.or_else(|| config.m0.as_dirac());
    match m0 {
        Some(m) if m == p.m0 => Ok(m),
        Some(_) => Err(mismatch("the initial activity")),
        None => Err(Error::Config(
            "coupled runs need a deterministic initial activity; pin it or use a Dirac law".into(),
        )),
    }
}

/// `(1/N) sum |x_i - y_i| + |m - m_mf|`. The sum is correctly rounded, so
/// relabelling neurons leaves the value unchanged bit for bit.
pub fn coupling_distance_of(x: &[f64], y: &[f64], m: f64, m_mf: f64) -> Result<f64> {
    Ok(mean_gap(x, y)? + (m - m_mf).abs())
}

fn mean_gap(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Domain(format!("age vectors of sizes {} and {}", x.len(), y.len())));
    }
    Ok(exact_sum(x.iter().zip(y).map(|(a, b)| (a - b).abs())) / x.len() as f64)
}

/// Runs the network and its copies side by side, recording statistics on the
/// snapshot grid of `config`.
pub fn simulate_coupled(config: &NetworkConfig, mf: &MeanFieldSolution) -> Result<CoupledRun> {
    let m0 = check_compatible(config, mf)?;
    let mut pinned = config.clone();
    pinned.options.pinned_m0 = Some(m0);
    let path = mf.activity_path();
    let mut net = Network::new(&pinned)?;
    let mut shadow = Shadow {
        last_reset: net.state.initial_ages().iter().map(|x| -x).collect(),
        path: &path,
        spikes: 0,
    };
    let keep = pinned.options.keep_ages;
    let mut stats = Vec::new();
    let (mut network_ages, mut copy_ages) = (Vec::new(), Vec::new());
    for target in pinned.snapshot_times() {
        if target > net.state.t() {
            net.run_until(target, Some(&mut shadow), &mut |_| {})?;
        }
        let t = net.state.t();
        let x = net.state.ages();
        let y: Vec<f64> = (0..x.len()).map(|i| shadow.age(t, i)).collect();
        let m = net.state.activity();
        let m_mf = path.at(t);
        let mean_age_gap = mean_gap(&x, &y)?;
        let activity_gap = (m - m_mf).abs();
        stats.push(CouplingStat {
            t,
            distance: mean_age_gap + activity_gap,
            activity_gap,
            mean_age_gap,
            m_network: m,
            m_meanfield: m_mf,
        });
        if keep {
            network_ages.push(x);
            copy_ages.push(y);
        }
    }
    Ok(CoupledRun {
        n: pinned.n_neurons,
        seed: pinned.seed,
        stats,
        network_ages,
        copy_ages,
        initial_ages: net.state.initial_ages().to_vec(),
        network: net.stats,
        copy_spikes: shadow.spikes,
    })
}

/// Coupling distance at the latest recorded time not after `t`.
pub fn coupling_distance(run: &CoupledRun, t: f64) -> Result<f64> {
    let horizon = run.stats.last().map_or(0.0, |s| s.t);
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::Domain(format!("time {t} outside [0, {horizon}]")));
    }
    let idx = run.stats.partition_point(|s| s.t <= t) - 1;
    Ok(run.stats[idx].distance)
}

pub fn coupled_csv(run: &CoupledRun) -> String {
    let mut out = String::from("t,distance,activity_gap,mean_age_gap,m_network,m_meanfield\n");
    for s in &run.stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.t, s.distance, s.activity_gap, s.mean_age_gap, s.m_network, s.m_meanfield
        );
    }
    out
}
