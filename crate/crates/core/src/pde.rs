//! Mean-field limit as an age-structured renewal equation
//!
//! ```text
//! d/dt f + d/dx f + a(x, M(t)) f = 0,     f(t, 0) = N(t) = ∫ a(x, M(t)) f(t, x) dx
//! dM/dt = -alpha M + alpha eps (b * N)(t)
//! ```
//!
//! Cells are `[j dx, (j+1) dx)` and the density is read as uniform inside a
//! cell. A step absorbs `f_j (1 - e^{-a dt})` with the rate taken at the mean
//! age over the step, shifts by upwinding, and puts the absorbed mass back
//! into the first cell. `N` on step `n` is that absorbed mass divided by `dt`,
//! so mass is conserved to rounding and `dt * sum(N)` is the expected spike count.
//!
//! The activity is kept as `M0 e^{-alpha t} + I(t)` and `I` is advanced with
//! an exponential integrator, so with `eps = 0` the path is the closed form.

use rand::Rng;
use serde::Serialize;

use crate::delays::DelayModel;
use crate::engine::NetworkConfig;
use crate::error::{Error, Result};
use crate::intensity::IntensityModel;
use crate::laws::InitialLaw;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub g0: InitialLaw,
    /// Deterministic initial activity.
    pub m0: f64,
    #[serde(serialize_with = "describe_model")]
    pub intensity: IntensityModel,
    pub delay: DelayModel,
    /// Infinite decay rate limit: `M = eps (b * N)`.
    pub instantaneous: bool,
}

fn describe_model<S: serde::Serializer>(m: &IntensityModel, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&m.describe())
}

impl MeanFieldParams {
    /// Limit parameters of a network config; its initial activity must be deterministic
    /// (a Dirac law or the pinned value).
    pub fn from_network(config: &NetworkConfig) -> Result<Self> {
        let m0 = match (config.options.pinned_m0, config.m0.as_dirac()) {
            (Some(m), _) | (None, Some(m)) => m,
            (None, None) => {
                return Err(Error::Config(
                    "the mean-field solve needs a deterministic initial activity; pin it or use a Dirac law"
                        .into(),
                ))
            }
        };
        Ok(MeanFieldParams {
            alpha: config.alpha,
            epsilon: config.epsilon,
            horizon: config.horizon,
            g0: config.g0.clone(),
            m0,
            intensity: config.intensity.clone(),
            delay: config.delay,
            instantaneous: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.instantaneous && !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.m0.is_finite() && self.m0 >= 0.0) {
            return Err(Error::Config(format!("initial activity must be >= 0, got {}", self.m0)));
        }
        self.g0.validate()?;
        self.delay.validate()?;
        self.intensity.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridParams {
    pub dx: f64,
    pub dt: f64,
    /// Defaults to `max(supp g0) + T + 5`.
    pub x_max: Option<f64>,
    pub picard_tol: f64,
    pub max_iters: usize,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
    /// Number of stored density rows, spread evenly over the time grid.
    pub density_rows: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            dx: 1e-3,
            dt: 1e-3,
            x_max: None,
            picard_tol: 1e-9,
            max_iters: 100,
            damping: 1.0,
            density_rows: 101,
        }
    }
}

fn check_cfl(dt: f64, dx: f64) -> Result<()> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::Config(format!("dx must be > 0, got {dx}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if dt > dx {
        return Err(Error::Cfl { dt, dx });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub density: Vec<f64>,
    /// Re-injected boundary value, i.e. absorbed mass per unit time.
    pub boundary_flux: f64,
    pub absorbed: f64,
    /// Mass pushed past the right edge of the grid.
    pub outflow: f64,
}

/// One upwind step of the transport equation with frozen activity `m`.
pub fn transport_step(f: &[f64], m: f64, dt: f64, dx: f64, model: &IntensityModel) -> Result<StepResult> {
    check_cfl(dt, dx)?;
    if f.is_empty() {
        return Err(Error::Domain("empty density row".into()));
    }
    let decay: Vec<f64> = (0..f.len())
        .map(|j| (-model.rate(cell_center(j, dx) + 0.5 * dt, m) * dt).exp())
        .collect();
    let mut out = vec![0.0; f.len()];
    let (absorbed, outflow) = step_into(f, &decay, dt / dx, dx, f.len(), &mut out);
    Ok(StepResult {
        density: out,
        boundary_flux: absorbed / dt,
        absorbed,
        outflow,
    })
}

#[inline]
fn cell_center(j: usize, dx: f64) -> f64 {
    (j as f64 + 0.5) * dx
}

/// Core of a step over cells `[0, active)`; cells at and beyond `active` are zero on input.
/// Returns (absorbed mass, outflow mass).
fn step_into(f: &[f64], decay: &[f64], c: f64, dx: f64, active: usize, out: &mut [f64]) -> (f64, f64) {
    let n = f.len();
    let mut absorbed = 0.0;
    let mut prev = 0.0;
    let upper = (active + 1).min(n);
    for j in 0..upper {
        let g = if j < active { f[j] * decay[j] } else { 0.0 };
        if j < active {
            absorbed += f[j] - g;
        }
        out[j] = (1.0 - c) * g + c * prev;
        prev = g;
    }
    for o in out.iter_mut().skip(upper) {
        *o = 0.0;
    }
    let outflow = if upper == n { c * prev * dx } else { 0.0 };
    // boundary value absorbed * dx / dt enters with weight c = dt / dx
    out[0] += absorbed;
    (absorbed * dx, outflow)
}

/// Stationary density `f*(x) ∝ exp(-∫_0^x a)` of an activity-independent rate, on cell centers.
pub fn stationary_profile(model: &IntensityModel, x_max: f64, dx: f64) -> Result<Vec<f64>> {
    if model.ignores_activity() != Some(true) {
        return Err(Error::Config("stationary profile needs an activity-independent rate".into()));
    }
    if !(dx > 0.0 && x_max > dx) {
        return Err(Error::Config(format!("bad grid: x_max = {x_max}, dx = {dx}")));
    }
    let nx = (x_max / dx).round() as usize;
    let a = |x: f64| model.rate(x, 0.0);
    let mut hazard = 0.0;
    let mut f = Vec::with_capacity(nx);
    for j in 0..nx {
        let left = j as f64 * dx;
        f.push((-(hazard + a(left + 0.25 * dx) * 0.5 * dx)).exp());
        hazard += a(left + 0.5 * dx) * dx;
    }
    let z: f64 = f.iter().sum::<f64>() * dx;
    let end_rate = a(nx as f64 * dx);
    let tail = if end_rate > 0.0 {
        (-hazard).exp() / end_rate / z
    } else {
        f64::INFINITY
    };
    if tail > 1e-6 {
        return Err(Error::GridTooShort { x_max, tail_mass: tail });
    }
    Ok(f.into_iter().map(|v| v / z).collect())
}

/// Piecewise-linear activity path on a uniform time grid, stored as
/// `m0 e^{-alpha t} + I(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityPath {
    m0: f64,
    alpha: f64,
    dt: f64,
    jump: Vec<f64>,
}

impl ActivityPath {
    pub fn at(&self, t: f64) -> f64 {
        let (k, frac) = self.locate(t);
        let j = if frac > 0.0 {
            self.jump[k] * (1.0 - frac) + self.jump[k + 1] * frac
        } else {
            self.jump[k]
        };
        self.m0 * (-self.alpha * t).exp() + j
    }

    /// Upper bound of the path over `[t0, t1]`.
    pub fn upper_bound(&self, t0: f64, t1: f64) -> f64 {
        let (k0, _) = self.locate(t0);
        let (k1, f1) = self.locate(t1);
        let k1 = if f1 > 0.0 { k1 + 1 } else { k1 };
        let top = self.jump[k0..=k1].iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        self.m0 * (-self.alpha * t0).exp() + top
    }

    pub fn horizon(&self) -> f64 {
        (self.jump.len() - 1) as f64 * self.dt
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.jump.len() - 1;
        let pos = (t / self.dt).max(0.0);
        let k = (pos.floor() as usize).min(last);
        if k == last {
            (last, 0.0)
        } else {
            (k, pos - k as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub params: MeanFieldParams,
    pub dx: f64,
    pub dt: f64,
    pub x_max: f64,
    pub t_grid: Vec<f64>,
    pub activity: Vec<f64>,
    /// Spike flux: step averages for `n < nt`, quadrature at the last node.
    pub boundary_flux: Vec<f64>,
    pub density_steps: Vec<usize>,
    #[serde(skip)]
    pub density: Vec<Vec<f64>>,
    pub picard_residuals: Vec<f64>,
    pub iterations: usize,
    pub max_mass_error: f64,
    pub outflow: f64,
    #[serde(skip)]
    jump_part: Vec<f64>,
}

impl MeanFieldSolution {
    /// Cell centers.
    pub fn x_grid(&self) -> Vec<f64> {
        (0..self.density[0].len()).map(|j| cell_center(j, self.dx)).collect()
    }

    pub fn steps(&self) -> usize {
        self.t_grid.len() - 1
    }

    pub fn activity_path(&self) -> ActivityPath {
        if self.params.instantaneous {
            ActivityPath {
                m0: 0.0,
                alpha: 0.0,
                dt: self.dt,
                jump: self.activity.clone(),
            }
        } else {
            ActivityPath {
                m0: self.params.m0,
                alpha: self.params.alpha,
                dt: self.dt,
                jump: self.jump_part.clone(),
            }
        }
    }

    /// Stored density row closest to `t`, with its time.
    pub fn density_at(&self, t: f64) -> (f64, &[f64]) {
        let target = t / self.dt;
        let idx = self
            .density_steps
            .iter()
            .enumerate()
            .min_by(|a, b| ((*a.1 as f64) - target).abs().total_cmp(&((*b.1 as f64) - target).abs()))
            .map(|(i, _)| i)
            .unwrap();
        (self.t_grid[self.density_steps[idx]], &self.density[idx])
    }

    pub fn final_density(&self) -> &[f64] {
        self.density.last().unwrap()
    }

    /// Expected number of spikes per neuron over `[0, T]`.
    pub fn expected_spikes(&self) -> f64 {
        let n = self.steps();
        self.boundary_flux[..n].iter().sum::<f64>() * self.dt
    }

    /// i.i.d. ages from the stored density nearest `t`, by inverse CDF with uniform mass inside cells.
    pub fn sample_ages<R: Rng + ?Sized>(&self, t: f64, n: usize, rng: &mut R) -> Vec<f64> {
        let (_, row) = self.density_at(t);
        let mut cdf = Vec::with_capacity(row.len());
        let mut acc = 0.0;
        for v in row {
            acc += v * self.dx;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let j = cdf.partition_point(|c| *c <= u).min(row.len() - 1);
                let lo = if j == 0 { 0.0 } else { cdf[j - 1] };
                let w = if row[j] > 0.0 { ((u - lo) / (row[j] * self.dx)).clamp(0.0, 1.0) } else { 0.5 };
                (j as f64 + w) * self.dx
            })
            .collect()
    }
}

struct TransportRun {
    flux: Vec<f64>,
    rows: Vec<Vec<f64>>,
    max_mass_error: f64,
    outflow: f64,
}

struct Solver<'a> {
    params: &'a MeanFieldParams,
    dx: f64,
    dt: f64,
    nx: usize,
    nt: usize,
    f0: Vec<f64>,
    active0: usize,
    row_steps: Vec<usize>,
    static_decay: Option<Vec<f64>>,
}

impl Solver<'_> {
    fn transport(&self, activity: &[f64], keep_rows: bool) -> TransportRun {
        let model = &self.params.intensity;
        let c = self.dt / self.dx;
        let mut f = self.f0.clone();
        let mut next = vec![0.0; self.nx];
        let mut decay = vec![0.0; self.nx];
        let mut active = self.active0;
        let mut flux = Vec::with_capacity(self.nt + 1);
        let mut rows = Vec::new();
        let mut row_iter = self.row_steps.iter().peekable();
        let mut max_mass_error: f64 = 0.0;
        let mut outflow = 0.0;
        for n in 0..self.nt {
            if keep_rows && row_iter.peek() == Some(&&n) {
                rows.push(f.clone());
                row_iter.next();
            }
            let d: &[f64] = match &self.static_decay {
                Some(d) => d,
                None => {
                    let m = activity[n];
                    for j in 0..active {
                        decay[j] = if f[j] == 0.0 {
                            1.0
                        } else {
                            (-model.rate(cell_center(j, self.dx) + 0.5 * self.dt, m) * self.dt).exp()
                        };
                    }
                    &decay
                }
            };
            let (absorbed, out) = step_into(&f, d, c, self.dx, active, &mut next);
            outflow += out;
            flux.push(absorbed / self.dt);
            std::mem::swap(&mut f, &mut next);
            active = (active + 1).min(self.nx);
            let mass: f64 = f[..active].iter().sum::<f64>() * self.dx;
            max_mass_error = max_mass_error.max((mass + outflow - 1.0).abs());
        }
        let m_end = activity[self.nt];
        let end_flux: f64 = (0..active)
            .map(|j| model.rate(cell_center(j, self.dx), m_end) * f[j])
            .sum::<f64>()
            * self.dx;
        flux.push(end_flux);
        if keep_rows {
            rows.push(f);
        }
        TransportRun {
            flux,
            rows,
            max_mass_error,
            outflow,
        }
    }
}

/// Fixed-point solve of the coupled transport and activity equations.
pub fn picard_solve(params: &MeanFieldParams, grid: &GridParams) -> Result<MeanFieldSolution> {
    params.validate()?;
    check_cfl(grid.dt, grid.dx)?;
    if !(grid.damping > 0.0 && grid.damping <= 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1], got {}", grid.damping)));
    }
    if grid.max_iters < 1 || !(grid.picard_tol > 0.0) {
        return Err(Error::Config("max_iters must be >= 1 and picard_tol > 0".into()));
    }
    if grid.density_rows < 2 {
        return Err(Error::Config("density_rows must be >= 2".into()));
    }
    let horizon = params.horizon;
    let x_max = grid.x_max.unwrap_or(params.g0.support_max() + horizon + 5.0);
    let dx = grid.dx;
    let nx = (x_max / dx).ceil() as usize;
    let nt = (horizon / grid.dt).ceil() as usize;
    let dt = horizon / nt as f64;
    if nx < 2 {
        return Err(Error::Config(format!("age grid has {nx} cells")));
    }
    let x_max = nx as f64 * dx;
    if params.g0.support_max() >= x_max {
        return Err(Error::GridTooShort {
            x_max,
            tail_mass: params.g0.mass(x_max, f64::INFINITY),
        });
    }
    let f0: Vec<f64> = (0..nx)
        .map(|j| params.g0.mass(j as f64 * dx, (j + 1) as f64 * dx) / dx)
        .collect();
    let active0 = f0.iter().rposition(|v| *v > 0.0).map_or(1, |j| j + 1);
    let rows = grid.density_rows.min(nt + 1);
    let mut row_steps: Vec<usize> = (0..rows)
        .map(|i| ((i as f64) * nt as f64 / (rows - 1) as f64).round() as usize)
        .collect();
    row_steps.dedup();
    let static_decay = (params.intensity.ignores_activity() == Some(true)).then(|| {
        (0..nx)
            .map(|j| (-params.intensity.rate(cell_center(j, dx) + 0.5 * dt, 0.0) * dt).exp())
            .collect()
    });
    let solver = Solver {
        params,
        dx,
        dt,
        nx,
        nt,
        f0,
        active0,
        row_steps: row_steps.clone(),
        static_decay,
    };

    let t_grid: Vec<f64> = (0..=nt).map(|n| if n == nt { horizon } else { n as f64 * dt }).collect();
    let weights = params.delay.lag_weights(dt);
    let alpha = params.alpha;
    let decay_m: Vec<f64> = t_grid.iter().map(|t| params.m0 * (-alpha * t).exp()).collect();
    let e = (-alpha * dt).exp();
    let one_minus_e = -(-alpha * dt).exp_m1();
    let eps = params.epsilon;
    let theta = grid.damping;

    let compose = |jump: &[f64]| -> Vec<f64> {
        if params.instantaneous {
            jump.to_vec()
        } else {
            decay_m.iter().zip(jump).map(|(a, b)| a + b).collect()
        }
    };
    // For the instantaneous mode `jump` holds the whole activity.
    let mut jump = if params.instantaneous {
        vec![params.m0; nt + 1]
    } else {
        vec![0.0; nt + 1]
    };
    let mut residuals = Vec::new();
    for iteration in 1..=grid.max_iters {
        let activity = compose(&jump);
        let last = iteration == grid.max_iters;
        let run = solver.transport(&activity, true);
        let forcing: Vec<f64> = (0..=nt)
            .map(|n| {
                weights
                    .iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(k, w)| w * run.flux[n - k])
                    .sum::<f64>()
            })
            .collect();
        let mut fresh = vec![0.0; nt + 1];
        if params.instantaneous {
            for n in 0..=nt {
                fresh[n] = eps * forcing[n];
            }
        } else {
            for n in 0..nt {
                fresh[n + 1] = fresh[n] * e + eps * forcing[n] * one_minus_e;
            }
        }
        let mut residual: f64 = 0.0;
        for n in 0..=nt {
            let updated = (1.0 - theta) * jump[n] + theta * fresh[n];
            residual = residual.max((updated - jump[n]).abs());
            jump[n] = updated;
        }
        residuals.push(residual);
        if residual < grid.picard_tol {
            if run.outflow > 1e-6 {
                return Err(Error::GridTooShort {
                    x_max,
                    tail_mass: run.outflow,
                });
            }
            return Ok(MeanFieldSolution {
                params: params.clone(),
                dx,
                dt,
                x_max,
                activity: compose(&jump),
                t_grid,
                boundary_flux: run.flux,
                density_steps: row_steps,
                density: run.rows,
                picard_residuals: residuals,
                iterations: iteration,
                max_mass_error: run.max_mass_error,
                outflow: run.outflow,
                jump_part: jump,
            });
        }
        if last {
            break;
        }
    }
    Err(Error::PicardNotConverged {
        iterations: grid.max_iters,
        last: *residuals.last().unwrap(),
        residuals,
    })
}

/// Solves once per atom of a finitely supported initial activity law; the
/// mean-field law is the weighted mixture of the returned solutions.
pub fn solve_mixture(
    params: &MeanFieldParams,
    m0: &InitialLaw,
    grid: &GridParams,
) -> Result<Vec<(f64, MeanFieldSolution)>> {
    let atoms: Vec<(f64, f64)> = match m0 {
        InitialLaw::Dirac { value } => vec![(*value, 1.0)],
        InitialLaw::Atoms { values, weights } => {
            let total: f64 = weights.iter().sum();
            values.iter().zip(weights).map(|(v, w)| (*v, w / total)).collect()
        }
        other => {
            return Err(Error::Config(format!(
                "only finitely supported initial activity laws can be solved, got {other:?}"
            )))
        }
    };
    let solve = |(value, weight): &(f64, f64)| -> Result<(f64, MeanFieldSolution)> {
        let p = MeanFieldParams {
            m0: *value,
            ..params.clone()
        };
        Ok((*weight, picard_solve(&p, grid)?))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        atoms.par_iter().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        atoms.iter().map(solve).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::CustomRate;

    fn params(eps: f64) -> MeanFieldParams {
        MeanFieldParams {
            alpha: 1.0,
            epsilon: eps,
            horizon: 2.0,
            g0: InitialLaw::Dirac { value: 0.0 },
            m0: 1.0,
            intensity: IntensityModel::pure_power(1.0).unwrap(),
            delay: DelayModel::no_delay(),
            instantaneous: false,
        }
    }

    fn coarse() -> GridParams {
        GridParams {
            dx: 1e-2,
            dt: 1e-2,
            ..GridParams::default()
        }
    }

    #[test]
    fn free_transport_moves_bump() {
        let zero = IntensityModel::custom(CustomRate::zero()).unwrap();
        let dx = 0.01;
        let mut f = vec![0.0; 100];
        f[20] = 1.0 / dx;
        for _ in 0..30 {
            f = transport_step(&f, 0.0, dx, dx, &zero).unwrap().density;
        }
        let peak = f.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, 50);
        assert_eq!(f[50], 1.0 / dx);
    }

    #[test]
    fn step_conserves_mass() {
        let model = IntensityModel::pure_power(2.0).unwrap();
        let dx = 0.01;
        let f: Vec<f64> = (0..300).map(|j| (-(j as f64) * dx).exp()).collect();
        let before: f64 = f.iter().sum::<f64>() * dx;
        for dt in [dx, 0.5 * dx, 0.37 * dx] {
            let s = transport_step(&f, 0.0, dt, dx, &model).unwrap();
            let after: f64 = s.density.iter().sum::<f64>() * dx + s.outflow;
            assert!((after - before).abs() < 1e-12, "{after} vs {before}");
            assert!(s.density.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn cfl_is_enforced() {
        let model = IntensityModel::pure_power(1.0).unwrap();
        assert!(matches!(
            transport_step(&[1.0, 0.0], 0.0, 0.02, 0.01, &model),
            Err(Error::Cfl { .. })
        ));
        let grid = GridParams { dt: 2e-3, ..GridParams::default() };
        assert!(matches!(picard_solve(&params(0.1), &grid), Err(Error::Cfl { .. })));
    }

    #[test]
    fn stationary_profiles() {
        let dx = 1e-3;
        let f = stationary_profile(&IntensityModel::pure_power(1.0).unwrap(), 10.0, dx).unwrap();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let err = f
            .iter()
            .enumerate()
            .map(|(j, v)| (v - c * (-cell_center(j, dx).powi(2) / 2.0).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");

        let step = IntensityModel::custom(CustomRate::step(1.0, 1.0)).unwrap();
        let f = stationary_profile(&step, 20.0, dx).unwrap();
        // uniform 1/2 on [0, 1], then e^{-(x-1)}/2
        assert!((f[100] - 0.5).abs() < 1e-3, "{}", f[100]);
        assert!((f[1999] - 0.5 * (-(cell_center(1999, dx) - 1.0)).exp()).abs() < 1e-3);

        let zero = IntensityModel::custom(CustomRate::zero()).unwrap();
        assert!(matches!(stationary_profile(&zero, 10.0, dx), Err(Error::GridTooShort { .. })));
        let m_dep = IntensityModel::power_threshold(1.0, 0.5, 1.0, 0.0).unwrap();
        assert!(stationary_profile(&m_dep, 10.0, dx).is_err());
    }

    #[test]
    fn decoupled_activity_is_closed_form() {
        let mut p = params(0.0);
        p.alpha = 1.3;
        p.m0 = 2.0;
        let sol = picard_solve(&p, &coarse()).unwrap();
        assert_eq!(sol.iterations, 1);
        for (t, m) in sol.t_grid.iter().zip(&sol.activity) {
            assert_eq!(*m, 2.0 * (-1.3 * t).exp());
        }
    }

    #[test]
    fn dirac_delay_shifts_forcing() {
        let mut p = params(0.5);
        p.delay = DelayModel::Dirac { tau: 0.5 };
        p.m0 = 0.0;
        let sol = picard_solve(&p, &coarse()).unwrap();
        for (t, m) in sol.t_grid.iter().zip(&sol.activity) {
            if *t <= 0.5 + 1e-9 {
                assert_eq!(*m, 0.0, "t = {t}");
            }
        }
        assert!(*sol.activity.last().unwrap() > 0.0);
    }

    #[test]
    fn solution_invariants() {
        let mut p = params(0.5);
        p.intensity = IntensityModel::power_threshold(1.0, 0.2, 0.5, 0.1).unwrap();
        p.g0 = InitialLaw::Uniform { lo: 0.0, hi: 1.0 };
        p.delay = DelayModel::TruncatedExponential { c: 2.0, tau_max: 0.5 };
        let sol = picard_solve(&p, &coarse()).unwrap();
        assert!(sol.max_mass_error < 1e-12);
        assert!(sol.density.iter().flatten().all(|v| *v >= 0.0));
        assert!(*sol.picard_residuals.last().unwrap() < 1e-9);
        for w in sol.picard_residuals.windows(2).skip(1) {
            assert!(w[1] <= w[0]);
        }
        // boundary flux against the quadrature of a f at stored rows
        let x = sol.x_grid();
        for (row, &n) in sol.density.iter().zip(&sol.density_steps) {
            let m = sol.activity[n];
            let quad: f64 = x.iter().zip(row).map(|(x, f)| p.intensity.rate(*x, m) * f).sum::<f64>() * sol.dx;
            assert!((quad - sol.boundary_flux[n]).abs() < 0.02 * (1.0 + quad), "{quad} {}", sol.boundary_flux[n]);
        }
        // activity bound from the integrator
        let mut integral = 0.0;
        for n in 0..sol.t_grid.len() {
            assert!(sol.activity[n] <= p.m0 + p.alpha * p.epsilon * integral + 1e-8);
            if n < sol.steps() {
                integral += sol.boundary_flux[n] * sol.dt;
            }
        }
    }

    #[test]
    fn non_convergence_carries_history() {
        let mut p = params(5.0);
        p.intensity = IntensityModel::power_threshold(1.0, 0.1, 1.0, 0.0).unwrap();
        let grid = GridParams { max_iters: 2, ..coarse() };
        match picard_solve(&p, &grid) {
            Err(Error::PicardNotConverged { iterations, residuals, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(residuals.len(), 2);
            }
            other => panic!("{:?}", other.map(|s| s.iterations)),
        }
    }

    #[test]
    fn activity_path_interpolates_and_bounds() {
        let mut p = params(0.8);
        p.intensity = IntensityModel::power_threshold(1.0, 0.2, 0.5, 0.1).unwrap();
        let sol = picard_solve(&p, &coarse()).unwrap();
        let path = sol.activity_path();
        for (t, m) in sol.t_grid.iter().zip(&sol.activity) {
            assert!((path.at(*t) - m).abs() < 1e-12);
        }
        for k in 0..400 {
            let t0 = k as f64 * 0.005;
            let t1 = (t0 + 0.0137).min(2.0);
            let ub = path.upper_bound(t0, t1);
            for s in 0..=10 {
                let t = t0 + (t1 - t0) * s as f64 / 10.0;
                assert!(path.at(t) <= ub, "{t}");
            }
        }
    }

    #[test]
    fn instantaneous_matches_fast_decay() {
        let mut p = params(0.5);
        p.horizon = 1.0;
        p.m0 = 0.0;
        p.intensity = IntensityModel::power_threshold(1.0, 0.2, 1.0, 0.0).unwrap();
        p.delay = DelayModel::Dirac { tau: 0.1 };
        let mut fast = p.clone();
        fast.alpha = 1e3;
        let mut inst = p.clone();
        inst.instantaneous = true;
        let a = picard_solve(&fast, &coarse()).unwrap();
        let b = picard_solve(&inst, &coarse()).unwrap();
        let diff = a.activity.iter().zip(&b.activity).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 5e-2, "{diff}");
        let path = b.activity_path();
        assert!((path.at(0.5) - b.activity[50]).abs() < 1e-12);
    }

    #[test]
    fn mixture_over_atoms() {
        let m0 = InitialLaw::Atoms { values: vec![0.5, 2.0], weights: vec![1.0, 3.0] };
        let mut p = params(0.3);
        p.intensity = IntensityModel::power_threshold(1.0, 0.5, 1.0, 0.0).unwrap();
        let parts = solve_mixture(&p, &m0, &coarse()).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, 0.25);
        assert_eq!(parts[1].1.activity[0], 2.0);
        assert!(solve_mixture(&p, &InitialLaw::Uniform { lo: 0.0, hi: 1.0 }, &coarse()).is_err());
    }

    #[test]
    fn samples_follow_density() {
        use rand::SeedableRng;
        let mut p = params(0.0);
        p.g0 = InitialLaw::Uniform { lo: 0.0, hi: 1.0 };
        p.horizon = 0.5;
        let sol = picard_solve(&p, &coarse()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = sol.sample_ages(0.5, 200_000, &mut rng);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let (_, row) = sol.density_at(0.5);
        let exact: f64 = row.iter().enumerate().map(|(j, f)| cell_center(j, sol.dx) * f).sum::<f64>() * sol.dx;
        assert!((mean - exact).abs() < 5e-3, "{mean} {exact}");
    }
}
