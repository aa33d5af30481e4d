//! Convergence studies over system sizes.
//!
//! Every (N, replica) pair runs a coupled simulation with its own seed. At
//! each evaluation time it records the coupling distance, the W1 distance
//! between the network and copy empirical measures, and the W1 distance
//! between the network and an i.i.d. sample of the mean-field law. Results are
//! reduced in (N, replica) order, so the report does not depend on scheduling.

use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::NetworkConfig;
use crate::error::{Error, Result};
use crate::meanfield_mc::simulate_coupled;
use crate::pde::{picard_solve, GridParams, MeanFieldParams, MeanFieldSolution};
use crate::rng::{self, Stream};
use crate::transport::{w1, EmpiricalMeasure};

/// How replica seeds are formed from the master seed.
pub const REPLICA_INDEX: &str = "replica seed = replica_seed(master, (N << 32) | r)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySpec {
    pub n_list: Vec<usize>,
    /// Replicas per size; `None` uses 20 up to N = 800 and 10 above.
    pub replicas: Option<usize>,
    /// Evaluate at T/3, 2T/3 and T instead of T only.
    pub three_times: bool,
    pub master_seed: u64,
    pub keep_replicas: bool,
}

impl StudySpec {
    pub fn new(n_list: Vec<usize>, master_seed: u64) -> Self {
        StudySpec {
            n_list,
            replicas: None,
            three_times: false,
            master_seed,
            keep_replicas: false,
        }
    }

    pub fn replicas_for(&self, n: usize) -> usize {
        self.replicas.unwrap_or(if n <= 800 { 20 } else { 10 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.len() < 2 {
            return Err(Error::Config("n_list needs at least 2 sizes".into()));
        }
        if self.n_list[0] < 1 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "n_list must be strictly increasing positive sizes, got {:?}",
                self.n_list
            )));
        }
        if let Some(r) = self.replicas {
            if r < 2 {
                return Err(Error::Config(format!(
                    "at least 2 replicas per size are needed for a standard error, got {r}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaResult {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub t: Vec<f64>,
    pub distance: Vec<f64>,
    pub activity_gap: Vec<f64>,
    pub w1_copies: Vec<f64>,
    pub w1_meanfield: Vec<f64>,
    pub spikes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub t: f64,
    pub replicas: usize,
    pub mean_d: f64,
    pub se_d: f64,
    pub mean_w1: f64,
    pub se_w1: f64,
    pub mean_w1_copies: f64,
    pub se_w1_copies: f64,
    pub mean_activity_gap: f64,
    pub mean_spikes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModels {
    /// Which column was fitted: `coupling` or `w1_meanfield`.
    pub column: String,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub loglog_rms_residual: f64,
    /// `c` in `D(N) ≈ c log(1 + N) / sqrt(N)`.
    pub scaled_c: f64,
    /// Relative L2 residual of the scaled fit.
    pub scaled_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSummary {
    pub dx: f64,
    pub dt: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub max_mass_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_list: Vec<usize>,
    pub eval_times: Vec<f64>,
    pub master_seed: u64,
    pub seed_scheme: String,
    pub meanfield: MeanFieldSummary,
    pub rows: Vec<ReportRow>,
    pub fit: Option<FittedModels>,
    pub fit_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<Vec<ReplicaResult>>,
}

impl ConvergenceReport {
    /// Rows at the final evaluation time, in size order.
    pub fn final_rows(&self) -> Vec<&ReportRow> {
        let t_end = *self.eval_times.last().unwrap();
        self.rows.iter().filter(|r| r.t == t_end).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,t,replicas,mean_D,se_D,mean_W1,se_W1,mean_W1_copies,se_W1_copies\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n, r.t, r.replicas, r.mean_d, r.se_d, r.mean_w1, r.se_w1, r.mean_w1_copies, r.se_w1_copies
            );
        }
        out
    }

    pub fn replicas_csv(&self) -> Option<String> {
        let reps = self.replicas.as_ref()?;
        let mut out = String::from("N,replica,seed,t,distance,activity_gap,w1_copies,w1_meanfield,spikes\n");
        for r in reps {
            for k in 0..r.t.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.n, r.replica, r.seed, r.t[k], r.distance[k], r.activity_gap[k], r.w1_copies[k], r.w1_meanfield[k], r.spikes
                );
            }
        }
        Some(out)
    }
}

fn eval_times(horizon: f64, three: bool) -> Vec<f64> {
    if three {
        vec![horizon / 3.0, 2.0 * horizon / 3.0, horizon]
    } else {
        vec![horizon]
    }
}

/// Solves the mean-field limit for `base` and runs the study against it.
pub fn run_convergence_study(base: &NetworkConfig, grid: &GridParams, study: &StudySpec) -> Result<ConvergenceReport> {
    study.validate()?;
    let mf = picard_solve(&MeanFieldParams::from_network(base)?, grid)?;
    run_with_meanfield(base, &mf, study)
}

pub fn run_with_meanfield(base: &NetworkConfig, mf: &MeanFieldSolution, study: &StudySpec) -> Result<ConvergenceReport> {
    study.validate()?;
    let times = eval_times(base.horizon, study.three_times);
    let mut jobs = Vec::new();
    for &n in &study.n_list {
        for r in 0..study.replicas_for(n) {
            let seed = rng::replica_seed(study.master_seed, ((n as u64) << 32) | r as u64);
            jobs.push((n, r, seed));
        }
    }
    let run = |&(n, r, seed): &(usize, usize, u64)| {
        run_replica(base, mf, &times, n, r, seed).map_err(|e| Error::Replica {
            n,
            seed,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<ReplicaResult>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ReplicaResult>> = jobs.iter().map(run).collect();
    let results: Vec<ReplicaResult> = results.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &n in &study.n_list {
        let group: Vec<&ReplicaResult> = results.iter().filter(|r| r.n == n).collect();
        for (k, &t) in times.iter().enumerate() {
            let column = |f: &dyn Fn(&ReplicaResult) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_d, se_d) = mean_se(&column(&|r| r.distance[k]));
            let (mean_w1, se_w1) = mean_se(&column(&|r| r.w1_meanfield[k]));
            let (mean_w1_copies, se_w1_copies) = mean_se(&column(&|r| r.w1_copies[k]));
            let (mean_activity_gap, _) = mean_se(&column(&|r| r.activity_gap[k]));
            let (mean_spikes, _) = mean_se(&column(&|r| r.spikes as f64));
            rows.push(ReportRow {
                n,
                t,
                replicas: group.len(),
                mean_d,
                se_d,
                mean_w1,
                se_w1,
                mean_w1_copies,
                se_w1_copies,
                mean_activity_gap,
                mean_spikes,
            });
        }
    }
    let mut report = ConvergenceReport {
        n_list: study.n_list.clone(),
        eval_times: times,
        master_seed: study.master_seed,
        seed_scheme: format!("{}; {}", rng::SCHEME, REPLICA_INDEX),
        meanfield: MeanFieldSummary {
            dx: mf.dx,
            dt: mf.dt,
            iterations: mf.iterations,
            final_residual: *mf.picard_residuals.last().unwrap(),
            max_mass_error: mf.max_mass_error,
        },
        rows,
        fit: None,
        fit_note: None,
        replicas: study.keep_replicas.then_some(results),
    };
    match fit_rate(&report) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_note = Some(e.to_string()),
    }
    Ok(report)
}

fn run_replica(
    base: &NetworkConfig,
    mf: &MeanFieldSolution,
    times: &[f64],
    n: usize,
    replica: usize,
    seed: u64,
) -> Result<ReplicaResult> {
    let mut config = base.clone();
    config.n_neurons = n;
    config.seed = seed;
    config.options.keep_ages = true;
    config.options.snapshot_every_event = false;
    config.options.snapshot_points = if times.len() == 3 { 4 } else { 2 };
    let run = simulate_coupled(&config, mf)?;
    let mut sampler = rng::stream(seed, Stream::MeanFieldSample);
    let mut out = ReplicaResult {
        n,
        replica,
        seed,
        t: Vec::new(),
        distance: Vec::new(),
        activity_gap: Vec::new(),
        w1_copies: Vec::new(),
        w1_meanfield: Vec::new(),
        spikes: run.network.spikes,
    };
    for k in 1..run.stats.len() {
        let s = &run.stats[k];
        let network = EmpiricalMeasure::from_ages(&run.network_ages[k], s.m_network)?;
        let copies = EmpiricalMeasure::from_ages(&run.copy_ages[k], s.m_meanfield)?;
        let sample = EmpiricalMeasure::from_ages(&mf.sample_ages(s.t, n, &mut sampler), s.m_meanfield)?;
        out.t.push(s.t);
        out.distance.push(s.distance);
        out.activity_gap.push(s.activity_gap);
        out.w1_copies.push(w1(&network, &copies)?);
        out.w1_meanfield.push(w1(&network, &sample)?);
    }
    Ok(out)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares fits on the final-time rows: a power law in N and the
/// `c log(1 + N) / sqrt(N)` profile. Uses the coupling distance, or the W1
/// distance to the mean-field sample when some mean coupling distance is zero.
pub fn fit_rate(report: &ConvergenceReport) -> Result<FittedModels> {
    let rows = report.final_rows();
    if rows.len() < 3 {
        return Err(Error::Config(format!("a rate fit needs at least 3 sizes, got {}", rows.len())));
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let coupling: Vec<f64> = rows.iter().map(|r| r.mean_d).collect();
    if coupling.iter().all(|d| *d > 0.0) {
        return fit_series(&ns, &coupling, "coupling");
    }
    let w1: Vec<f64> = rows.iter().map(|r| r.mean_w1).collect();
    if w1.iter().all(|d| *d > 0.0) {
        return fit_series(&ns, &w1, "w1_meanfield");
    }
    Err(Error::Model("no column with positive means to fit".into()))
}

pub fn fit_series(ns: &[f64], values: &[f64], column: &str) -> Result<FittedModels> {
    if ns.len() != values.len() || ns.len() < 3 {
        return Err(Error::Config("a rate fit needs at least 3 matching points".into()));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("rate fit needs positive values".into()));
    }
    let k = ns.len() as f64;
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let xm = x.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (ssr / (k - 2.0) / sxx).sqrt();

    let g: Vec<f64> = ns.iter().map(|n| (1.0 + n).ln() / n.sqrt()).collect();
    let scaled_c = values.iter().zip(&g).map(|(d, g)| d * g).sum::<f64>() / g.iter().map(|g| g * g).sum::<f64>();
    let res: f64 = values.iter().zip(&g).map(|(d, g)| (d - scaled_c * g).powi(2)).sum();
    let norm: f64 = values.iter().map(|d| d * d).sum();
    Ok(FittedModels {
        column: column.to_string(),
        slope,
        slope_se,
        intercept,
        loglog_rms_residual: (ssr / k).sqrt(),
        scaled_c,
        scaled_residual: (res / norm).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delays::DelayModel;
    use crate::engine::SimOptions;
    use crate::intensity::IntensityModel;
    use crate::laws::InitialLaw;

    const GRID: [f64; 4] = [50.0, 200.0, 800.0, 3200.0];

    #[test]
    fn exact_power_law() {
        let d: Vec<f64> = GRID.iter().map(|n| n.powf(-0.5)).collect();
        let fit = fit_series(&GRID, &d, "coupling").unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn log_corrected_rate() {
        let d: Vec<f64> = GRID.iter().map(|n| (1.0 + n).ln() / n.sqrt()).collect();
        let fit = fit_series(&GRID, &d, "coupling").unwrap();
        assert!(fit.scaled_residual < 1e-12);
        assert!((fit.scaled_c - 1.0).abs() < 1e-12);
        // the log factor flattens the slope well above -1/2 on this range
        assert!((fit.slope - SYNTHETIC_LOG_SLOPE).abs() < 1e-12, "{}", fit.slope);
    }

    /// Least-squares slope of log(log(1 + N) / sqrt(N)) against log N on
    /// N = 50, 200, 800, 3200, computed independently in extended precision.
    const SYNTHETIC_LOG_SLOPE: f64 = -0.327_650_844_001_564_5;

    #[test]
    fn constant_series() {
        let fit = fit_series(&GRID, &[0.3; 4], "coupling").unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn fit_refuses_short_or_nonpositive_input() {
        assert!(fit_series(&GRID[..2], &[1.0, 0.5], "coupling").is_err());
        assert!(fit_series(&GRID, &[1.0, 0.0, 0.5, 0.2], "coupling").is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = StudySpec::new(vec![50], 1);
        assert!(s.validate().is_err());
        s.n_list = vec![100, 50];
        assert!(s.validate().is_err());
        s.n_list = vec![50, 100];
        s.replicas = Some(1);
        assert!(s.validate().is_err());
        s.replicas = None;
        assert_eq!(s.replicas_for(800), 20);
        assert_eq!(s.replicas_for(3200), 10);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    fn base(eps: f64) -> NetworkConfig {
        NetworkConfig {
            n_neurons: 1,
            alpha: 1.0,
            epsilon: eps,
            horizon: 1.0,
            g0: InitialLaw::Uniform { lo: 0.0, hi: 1.0 },
            m0: InitialLaw::Dirac { value: 1.0 },
            intensity: IntensityModel::power_threshold(1.0, 0.2, 0.5, 0.0).unwrap(),
            delay: DelayModel::no_delay(),
            seed: 0,
            options: SimOptions::default(),
        }
    }

    fn grid() -> GridParams {
        GridParams { dx: 5e-3, dt: 5e-3, ..GridParams::default() }
    }

    #[test]
    fn two_size_study_structure() {
        let mut spec = StudySpec::new(vec![50, 100], 7);
        spec.replicas = Some(3);
        spec.keep_replicas = true;
        let report = run_convergence_study(&base(0.2), &grid(), &spec).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|r| r.se_d > 0.0 && r.se_w1 > 0.0 && r.replicas == 3));
        assert!(report.fit.is_none() && report.fit_note.is_some());
        assert_eq!(report.replicas_csv().unwrap().lines().count(), 7);
        assert_eq!(report.to_csv().lines().count(), 3);
    }

    #[test]
    fn three_time_evaluation() {
        let mut spec = StudySpec::new(vec![20, 40, 80], 3);
        spec.replicas = Some(2);
        spec.three_times = true;
        let report = run_convergence_study(&base(0.2), &grid(), &spec).unwrap();
        assert_eq!(report.rows.len(), 9);
        assert_eq!(report.final_rows().len(), 3);
        assert!(report.fit.is_some());
    }

    #[test]
    fn decoupled_study_falls_back_to_sampling_distance() {
        let mut spec = StudySpec::new(vec![25, 100, 400], 11);
        spec.replicas = Some(8);
        let report = run_convergence_study(&base(0.0), &grid(), &spec).unwrap();
        assert!(report.rows.iter().all(|r| r.mean_d == 0.0 && r.mean_w1_copies == 0.0));
        let w: Vec<f64> = report.rows.iter().map(|r| r.mean_w1).collect();
        assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
        let fit = report.fit.unwrap();
        assert_eq!(fit.column, "w1_meanfield");
        assert!(fit.slope < -0.3 && fit.slope > -0.7, "{}", fit.slope);
    }

    #[test]
    fn study_is_reproducible() {
        let mut spec = StudySpec::new(vec![30, 60], 5);
        spec.replicas = Some(4);
        let a = run_convergence_study(&base(0.3), &grid(), &spec).unwrap();
        let b = run_convergence_study(&base(0.3), &grid(), &spec).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
