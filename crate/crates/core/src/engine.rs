//! Exact event-driven simulation of the N-neuron network.
//!
//! Between events every age grows at unit speed and the activity decays as
//! `e^{-alpha t}`. Spikes are drawn by thinning a dominating homogeneous
//! Poisson process inside windows that contain no pending arrival; in such a
//! window the activity only decreases and ages are bounded by their value at
//! the window end, so `a(age_i(end), M(start))` dominates neuron `i`.
//!
//! The activity is stored as `M0 e^{-alpha t} + J(t)` where `J` collects the
//! decayed arrival increments. With `epsilon = 0` the second part stays
//! exactly zero and the trace is the closed-form decay.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::delays::DelayModel;
use crate::error::{Error, Result};
use crate::intensity::IntensityModel;
use crate::laws::InitialLaw;
use crate::pde::ActivityPath;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOptions {
    /// Number of uniformly spaced snapshot times in `[0, T]`, both ends included.
    pub snapshot_points: usize,
    pub snapshot_every_event: bool,
    pub max_events: u64,
    pub log_rejections: bool,
    /// Keep the full age vector in every snapshot.
    pub keep_ages: bool,
    /// Declared cap for the monitored second moment of the rate; exceeding it is reported only.
    pub moment_cap: Option<f64>,
    /// Overrides the sampled initial activity.
    pub pinned_m0: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            snapshot_points: 100,
            snapshot_every_event: false,
            max_events: 10_000_000,
            log_rejections: false,
            keep_ages: true,
            moment_cap: None,
            pinned_m0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub g0: InitialLaw,
    pub m0: InitialLaw,
    pub intensity: IntensityModel,
    pub delay: DelayModel,
    pub seed: u64,
    pub options: SimOptions,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neurons < 1 {
            return Err(Error::Config("n_neurons must be >= 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.options.snapshot_points < 2 {
            return Err(Error::Config("snapshot_points must be >= 2".into()));
        }
        self.g0.validate()?;
        self.m0.validate()?;
        self.delay.validate()?;
        if let Some(m) = self.options.pinned_m0 {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Config(format!("pinned initial activity must be >= 0, got {m}")));
            }
        }
        let x_bound = self.g0.support_max() + self.horizon;
        let m_bound = self.m0.support_max() + 10.0 * (1.0 + self.alpha * self.epsilon);
        self.intensity.ensure_simulable(x_bound, m_bound)
    }

    /// Activity increment carried by one arrival.
    pub fn jump_size(&self) -> f64 {
        self.alpha * self.epsilon / self.n_neurons as f64
    }

    fn window_cap(&self) -> f64 {
        (0.1 / self.alpha).min(1.0)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        uniform_times(self.horizon, self.options.snapshot_points)
    }
}

pub(crate) fn uniform_times(horizon: f64, points: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..points)
        .map(|k| horizon * k as f64 / (points - 1) as f64)
        .collect();
    *times.last_mut().unwrap() = horizon;
    times
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival {
    time: f64,
    source: usize,
}

impl Eq for Arrival {}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.source.cmp(&other.source))
    }
}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Live state of one replica.
#[derive(Debug, Clone)]
pub struct NetworkState {
    t: f64,
    /// `age_i(t) = t - last_reset[i]`; before the first spike `last_reset[i] = -X_0^i`.
    last_reset: Vec<f64>,
    initial_ages: Vec<f64>,
    delays: Vec<f64>,
    alpha: f64,
    m0: f64,
    jump_part: f64,
    pending: BinaryHeap<Reverse<Arrival>>,
}

impl NetworkState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.last_reset.len()
    }

    #[inline]
    pub fn age(&self, i: usize) -> f64 {
        self.t - self.last_reset[i]
    }

    pub fn ages(&self) -> Vec<f64> {
        self.last_reset.iter().map(|r| self.t - r).collect()
    }

    pub fn initial_ages(&self) -> &[f64] {
        &self.initial_ages
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn initial_activity(&self) -> f64 {
        self.m0
    }

    pub fn activity(&self) -> f64 {
        self.m0 * (-self.alpha * self.t).exp() + self.jump_part
    }

    /// Activity at `s >= t` assuming no arrival in `(t, s]`.
    #[inline]
    fn activity_ahead(&self, s: f64) -> f64 {
        self.m0 * (-self.alpha * s).exp() + self.jump_part * (-self.alpha * (s - self.t)).exp()
    }

    /// Scheduled arrival times, in processing order.
    pub fn pending(&self) -> Vec<(f64, usize)> {
        let mut v: Vec<_> = self.pending.iter().map(|Reverse(a)| (a.time, a.source)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }

    pub fn next_arrival(&self) -> Option<f64> {
        self.pending.peek().map(|Reverse(a)| a.time)
    }

    fn advance_to(&mut self, t_new: f64) {
        debug_assert!(t_new >= self.t);
        if t_new > self.t {
            self.jump_part *= (-self.alpha * (t_new - self.t)).exp();
            self.t = t_new;
        }
    }

    /// Deterministic flow between events: ages grow by `dt`, the activity decays.
    pub fn flow(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::Domain(format!("flow duration must be >= 0, got {dt}")));
        }
        self.advance_to(self.t + dt);
        Ok(())
    }
}

/// Draws the initial state: ages i.i.d. from `g0`, activity from `m0`, delays from `b`,
/// each on its own substream.
pub fn init(config: &NetworkConfig) -> Result<NetworkState> {
    config.validate()?;
    let n = config.n_neurons;
    let mut age_rng = rng::stream(config.seed, Stream::InitialAges);
    let initial_ages: Vec<f64> = (0..n).map(|_| config.g0.sample(&mut age_rng)).collect();
    if let Some(bad) = initial_ages.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Model(format!("initial age law produced {bad}")));
    }
    let m0 = match config.options.pinned_m0 {
        Some(m) => m,
        None => config.m0.sample(&mut rng::stream(config.seed, Stream::InitialActivity)),
    };
    if !(m0 >= 0.0 && m0.is_finite()) {
        return Err(Error::Model(format!("initial activity law produced {m0}")));
    }
    let delays = config
        .delay
        .sample_delays(n, &mut rng::stream(config.seed, Stream::Delays));
    Ok(NetworkState {
        t: 0.0,
        last_reset: initial_ages.iter().map(|x| -x).collect(),
        initial_ages,
        delays,
        alpha: config.alpha,
        m0,
        jump_part: 0.0,
        pending: BinaryHeap::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Spike,
    Arrival,
    /// Arrival scheduled beyond the horizon; logged at the spike time.
    DroppedArrival,
    Rejection,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Spike => "spike",
            EventKind::Arrival => "arrival",
            EventKind::DroppedArrival => "dropped",
            EventKind::Rejection => "rejection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub neuron: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    fn push(&mut self, time: f64, kind: EventKind, neuron: usize) {
        self.events.push(Event { time, kind, neuron });
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Checks that every arrival has a matching spike `tau_j` earlier and that the
    /// counts balance once dropped arrivals are accounted for.
    pub fn check_consistency(&self, delays: &[f64]) -> std::result::Result<(), String> {
        let n = delays.len();
        let mut spikes: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut dropped = vec![0usize; n];
        let mut arrivals = vec![0usize; n];
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if e.time < last {
                return Err(format!("event times decrease at t = {}", e.time));
            }
            last = e.time;
            match e.kind {
                EventKind::Spike => spikes[e.neuron].push(e.time),
                EventKind::DroppedArrival => dropped[e.neuron] += 1,
                EventKind::Arrival => {
                    let j = e.neuron;
                    let k = arrivals[j];
                    match spikes[j].get(k) {
                        Some(s) if s + delays[j] == e.time => arrivals[j] += 1,
                        Some(s) => {
                            return Err(format!(
                                "arrival of neuron {j} at {} does not match spike at {s} + {}",
                                e.time, delays[j]
                            ))
                        }
                        None => return Err(format!("arrival of neuron {j} at {} without a spike", e.time)),
                    }
                }
                EventKind::Rejection => {}
            }
        }
        for j in 0..n {
            if arrivals[j] + dropped[j] != spikes[j].len() {
                return Err(format!(
                    "neuron {j}: {} spikes but {} arrivals and {} dropped",
                    spikes[j].len(),
                    arrivals[j],
                    dropped[j]
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub activity: f64,
    /// min, first quartile, median, third quartile, max.
    pub age_quantiles: [f64; 5],
    /// Mean of `a(age_i, M)` over neurons.
    pub mean_rate: f64,
    /// Mean of `a(age_i, M)^2` over neurons.
    pub mean_rate_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ages: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub spikes: u64,
    pub arrivals: u64,
    pub dropped_arrivals: u64,
    pub proposals: u64,
    pub rejections: u64,
    /// Proposals whose acceptance ratio exceeded one. Zero unless the rate is not monotone.
    pub envelope_violations: u64,
    pub windows: u64,
    pub max_mean_rate_sq: f64,
    pub moment_cap_exceeded: bool,
    /// Running floating-point sum of all applied activity increments.
    pub applied_increments: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub log: EventLog,
    pub final_state: NetworkState,
    pub stats: RunStats,
}

/// Shadow process driven by the same proposals: a copy whose rate uses a
/// prescribed activity path instead of the network activity.
#[derive(Debug, Clone)]
pub(crate) struct Shadow<'p> {
    pub last_reset: Vec<f64>,
    pub path: &'p ActivityPath,
    pub spikes: u64,
}

impl Shadow<'_> {
    #[inline]
    pub fn age(&self, t: f64, i: usize) -> f64 {
        t - self.last_reset[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Accepted {
    pub time: f64,
    pub neuron: usize,
    pub network: bool,
    pub shadow: bool,
}

/// One replica: state, event log and the thinning stream.
pub struct Network<'c> {
    pub config: &'c NetworkConfig,
    pub state: NetworkState,
    pub log: EventLog,
    pub stats: RunStats,
    rng: ChaCha8Rng,
    envelopes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'c> Network<'c> {
    pub fn new(config: &'c NetworkConfig) -> Result<Self> {
        let state = init(config)?;
        Ok(Network {
            config,
            state,
            log: EventLog::default(),
            stats: RunStats::default(),
            rng: rng::stream(config.seed, Stream::Thinning),
            envelopes: Vec::with_capacity(config.n_neurons),
            cumulative: Vec::with_capacity(config.n_neurons),
        })
    }

    pub fn flow(&mut self, dt: f64) -> Result<()> {
        self.state.flow(dt)
    }

    /// First accepted spike in `(t, t + window]`, or `None` when the window passes
    /// without one. The caller guarantees that no arrival is pending inside the window.
    /// Does not modify the state.
    pub fn next_spike_candidate(&mut self, window: f64) -> Option<(f64, usize)> {
        let end = self.state.t + window;
        self.propose(None, end).map(|a| (a.time, a.neuron))
    }

    pub(crate) fn propose(&mut self, shadow: Option<&Shadow<'_>>, end: f64) -> Option<Accepted> {
        let state = &self.state;
        let t0 = state.t;
        if !(end > t0) {
            return None;
        }
        let model = &self.config.intensity;
        let m_bar = state.activity();
        let mf_bar = shadow.map(|s| s.path.upper_bound(t0, end));
        self.envelopes.clear();
        self.cumulative.clear();
        let mut total = 0.0;
        for i in 0..state.n() {
            let mut env = model.rate(end - state.last_reset[i], m_bar);
            if let (Some(s), Some(mb)) = (shadow, mf_bar) {
                env = env.max(model.rate(s.age(end, i), mb));
            }
            total += env;
            self.envelopes.push(env);
            self.cumulative.push(total);
        }
        self.stats.windows += 1;
        if !(total > 0.0) {
            return None;
        }
        let mut s = t0;
        loop {
            let u: f64 = self.rng.random();
            s -= (-u).ln_1p() / total;
            if s > end {
                return None;
            }
            let pick = self.rng.random::<f64>() * total;
            let i = self
                .cumulative
                .partition_point(|c| *c <= pick)
                .min(state.n() - 1);
            let env = self.envelopes[i];
            let level = self.rng.random::<f64>() * env;
            self.stats.proposals += 1;

            let m_s = state.activity_ahead(s).min(m_bar);
            let rate_x = model.rate(s - state.last_reset[i], m_s);
            let fire_x = level < rate_x;
            let mut fire_y = false;
            if rate_x > env {
                self.stats.envelope_violations += 1;
            }
            if let (Some(sh), Some(mb)) = (shadow, mf_bar) {
                let rate_y = model.rate(sh.age(s, i), sh.path.at(s).min(mb));
                if rate_y > env {
                    self.stats.envelope_violations += 1;
                }
                fire_y = level < rate_y;
            }
            if fire_x || fire_y {
                return Some(Accepted {
                    time: s,
                    neuron: i,
                    network: fire_x,
                    shadow: fire_y,
                });
            }
            self.stats.rejections += 1;
            if self.config.options.log_rejections {
                self.log.push(s, EventKind::Rejection, i);
            }
        }
    }

    /// Resets neuron `i` at the current time and schedules its arrival.
    /// With a zero delay the activity increment is applied in the same event.
    pub fn apply_spike(&mut self, i: usize) -> Result<()> {
        let s = self.state.t;
        self.state.last_reset[i] = s;
        self.log.push(s, EventKind::Spike, i);
        self.stats.spikes += 1;
        let tau = self.state.delays[i];
        if tau == 0.0 {
            self.increment_activity(i);
        } else {
            let at = s + tau;
            if at > self.config.horizon {
                self.stats.dropped_arrivals += 1;
                self.log.push(s, EventKind::DroppedArrival, i);
            } else {
                self.state.pending.push(Reverse(Arrival { time: at, source: i }));
            }
        }
        self.check_cap()
    }

    /// Applies the head of the pending queue, which must be `(t, j)`.
    pub fn apply_arrival(&mut self, j: usize) -> Result<()> {
        match self.state.pending.peek() {
            Some(Reverse(a)) if a.time == self.state.t && a.source == j => {
                self.state.pending.pop();
            }
            Some(Reverse(a)) => {
                return Err(Error::Domain(format!(
                    "arrival ({}, {j}) applied out of order; queue head is ({}, {}) at t = {}",
                    self.state.t, a.time, a.source, self.state.t
                )))
            }
            None => return Err(Error::Domain(format!("no pending arrival for neuron {j}"))),
        }
        self.increment_activity(j);
        self.check_cap()
    }

    fn increment_activity(&mut self, j: usize) {
        let jump = self.config.jump_size();
        self.state.jump_part += jump;
        self.stats.applied_increments += jump;
        self.stats.arrivals += 1;
        self.log.push(self.state.t, EventKind::Arrival, j);
    }

    fn check_cap(&self) -> Result<()> {
        let events = self.stats.spikes + self.stats.arrivals;
        if events > self.config.options.max_events {
            Err(Error::EventCapExceeded {
                cap: self.config.options.max_events,
                time: self.state.t,
            })
        } else {
            Ok(())
        }
    }

    /// Runs the event loop up to `target`, applying arrivals due at `target` too.
    pub(crate) fn run_until(
        &mut self,
        target: f64,
        mut shadow: Option<&mut Shadow<'_>>,
        on_event: &mut dyn FnMut(&Network<'_>),
    ) -> Result<()> {
        let cap = self.config.window_cap();
        loop {
            let next_arrival = self.state.next_arrival().filter(|a| *a <= target);
            let segment_end = next_arrival.unwrap_or(target);
            let window_end = segment_end.min(self.state.t + cap);
            match self.propose(shadow.as_deref(), window_end) {
                Some(acc) => {
                    self.state.advance_to(acc.time);
                    if acc.network {
                        self.apply_spike(acc.neuron)?;
                    }
                    if acc.shadow {
                        if let Some(sh) = shadow.as_deref_mut() {
                            sh.last_reset[acc.neuron] = acc.time;
                            sh.spikes += 1;
                        }
                    }
                    on_event(self);
                    continue;
                }
                None => self.state.advance_to(window_end),
            }
            if Some(self.state.t) == next_arrival {
                while let Some(Reverse(a)) = self.state.pending.peek().copied() {
                    if a.time != self.state.t {
                        break;
                    }
                    self.apply_arrival(a.source)?;
                    on_event(self);
                }
            }
            if self.state.t >= target {
                return Ok(());
            }
        }
    }

    pub fn snapshot(&mut self) -> Snapshot {
        let snap = snapshot_of(&self.state, &self.config.intensity, self.config.options.keep_ages);
        self.stats.max_mean_rate_sq = self.stats.max_mean_rate_sq.max(snap.mean_rate_sq);
        if let Some(cap) = self.config.options.moment_cap {
            if snap.mean_rate_sq > cap {
                self.stats.moment_cap_exceeded = true;
            }
        }
        snap
    }
}

pub(crate) fn snapshot_of(state: &NetworkState, model: &IntensityModel, keep_ages: bool) -> Snapshot {
    let ages = state.ages();
    let m = state.activity();
    let n = ages.len() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in &ages {
        let a = model.rate(x, m);
        s1 += a;
        s2 += a * a;
    }
    Snapshot {
        t: state.t,
        activity: m,
        age_quantiles: quantiles(&ages),
        mean_rate: s1 / n,
        mean_rate_sq: s2 / n,
        ages: keep_ages.then_some(ages),
    }
}

pub(crate) fn quantiles(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).floor() as usize];
    [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)]
}

/// Simulates one replica on `[0, T]`, recording snapshots on the configured grid.
pub fn simulate(config: &NetworkConfig) -> Result<Trajectory> {
    let mut net = Network::new(config)?;
    let times = config.snapshot_times();
    let mut snapshots = Vec::with_capacity(times.len());
    let every_event = config.options.snapshot_every_event;
    let mut event_snaps: Vec<Snapshot> = Vec::new();
    for &target in &times {
        if target > net.state.t {
            let mut hook = |n: &Network<'_>| {
                if every_event {
                    event_snaps.push(snapshot_of(&n.state, &n.config.intensity, n.config.options.keep_ages));
                }
            };
            net.run_until(target, None, &mut hook)?;
        }
        snapshots.append(&mut event_snaps);
        snapshots.push(net.snapshot());
    }
    Ok(Trajectory {
        snapshots,
        log: net.log,
        final_state: net.state,
        stats: net.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize) -> NetworkConfig {
        NetworkConfig {
            n_neurons: n,
            alpha: 1.0,
            epsilon: 0.3,
            horizon: 2.0,
            g0: InitialLaw::Dirac { value: 0.0 },
            m0: InitialLaw::Dirac { value: 1.0 },
            intensity: IntensityModel::pure_power(1.0).unwrap(),
            delay: DelayModel::Dirac { tau: 0.1 },
            seed: 11,
            options: SimOptions::default(),
        }
    }

    #[test]
    fn init_point_masses() {
        let s = init(&base(3)).unwrap();
        assert_eq!(s.ages(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.activity(), 1.0);
        assert_eq!(s.t(), 0.0);
        assert!(s.pending().is_empty());
    }

    #[test]
    fn init_is_reproducible() {
        let mut c = base(50);
        c.g0 = InitialLaw::Uniform { lo: 0.0, hi: 1.0 };
        c.m0 = InitialLaw::Uniform { lo: 0.0, hi: 3.0 };
        c.delay = DelayModel::TruncatedExponential { c: 1.0, tau_max: 1.0 };
        let (a, b) = (init(&c).unwrap(), init(&c).unwrap());
        assert_eq!(a.ages(), b.ages());
        assert_eq!(a.activity(), b.activity());
        assert_eq!(a.delays(), b.delays());
    }

    #[test]
    fn init_uniform_mean() {
        let mut c = base(100_000);
        c.g0 = InitialLaw::Uniform { lo: 0.0, hi: 1.0 };
        let s = init(&c).unwrap();
        let mean = s.ages().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn flow_examples() {
        let mut c = base(1);
        c.m0 = InitialLaw::Dirac { value: 2.0 };
        c.g0 = InitialLaw::Dirac { value: 0.3 };
        let mut s = init(&c).unwrap();
        let before = s.clone();
        s.flow(0.0).unwrap();
        assert_eq!(s.ages(), before.ages());
        assert_eq!(s.activity(), before.activity());
        s.flow(std::f64::consts::LN_2).unwrap();
        assert!((s.activity() - 1.0).abs() < 1e-15);
        let mut s = init(&c).unwrap();
        s.flow(0.7).unwrap();
        assert!((s.ages()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(s.flow(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn spike_resets_and_schedules() {
        let mut c = base(3);
        c.g0 = InitialLaw::Dirac { value: 2.5 };
        c.delay = DelayModel::Dirac { tau: 0.3 };
        let mut net = Network::new(&c).unwrap();
        net.flow(1.0).unwrap();
        net.apply_spike(0).unwrap();
        assert_eq!(net.state.ages(), vec![0.0, 3.5, 3.5]);
        assert_eq!(net.state.pending(), vec![(1.3, 0)]);
        assert_eq!(net.state.activity(), (-1.0f64).exp());
    }

    #[test]
    fn zero_delay_spike_is_atomic() {
        let mut c = base(10);
        c.delay = DelayModel::no_delay();
        c.alpha = 2.0;
        c.epsilon = 0.5;
        let mut net = Network::new(&c).unwrap();
        net.apply_spike(4).unwrap();
        assert!((net.state.activity() - 1.1).abs() < 1e-15);
        assert!(net.state.pending().is_empty());
        let kinds: Vec<_> = net.log.events.iter().map(|e| (e.kind, e.time)).collect();
        assert_eq!(kinds, vec![(EventKind::Spike, 0.0), (EventKind::Arrival, 0.0)]);
    }

    #[test]
    fn arrivals_increment_activity() {
        let mut c = base(10);
        c.alpha = 2.0;
        c.epsilon = 0.5;
        c.delay = DelayModel::Dirac { tau: 0.5 };
        c.m0 = InitialLaw::Dirac { value: 0.0 };
        let mut net = Network::new(&c).unwrap();
        net.apply_spike(3).unwrap();
        net.apply_spike(1).unwrap();
        net.flow(0.5).unwrap();
        // both arrivals due now; lower id first
        assert!(net.apply_arrival(3).is_err());
        net.apply_arrival(1).unwrap();
        assert!((net.state.activity() - 0.1).abs() < 1e-15);
        net.apply_arrival(3).unwrap();
        assert!((net.state.activity() - 0.2).abs() < 1e-15);

        c.epsilon = 0.0;
        let mut net = Network::new(&c).unwrap();
        net.apply_spike(0).unwrap();
        net.flow(0.5).unwrap();
        net.apply_arrival(0).unwrap();
        assert_eq!(net.state.activity(), 0.0);
    }

    #[test]
    fn arrival_beyond_horizon_is_dropped() {
        let mut c = base(2);
        c.horizon = 1.0;
        c.delay = DelayModel::Dirac { tau: 0.5 };
        let mut net = Network::new(&c).unwrap();
        net.flow(0.75).unwrap();
        net.apply_spike(1).unwrap();
        assert!(net.state.pending().is_empty());
        assert_eq!(net.stats.dropped_arrivals, 1);
    }

    #[test]
    fn decoupled_activity_is_analytic() {
        let mut c = base(20);
        c.epsilon = 0.0;
        c.alpha = 1.7;
        c.m0 = InitialLaw::Dirac { value: 2.0 };
        let traj = simulate(&c).unwrap();
        assert!(traj.stats.spikes > 0);
        for s in &traj.snapshots {
            assert_eq!(s.activity, 2.0 * (-1.7 * s.t).exp());
        }
    }

    #[test]
    fn acceptance_ratio_never_exceeds_one() {
        let mut c = base(30);
        c.intensity = IntensityModel::power_threshold(2.0, 0.3, 1.0, 0.5).unwrap();
        c.delay = DelayModel::TruncatedExponential { c: 2.0, tau_max: 0.5 };
        c.g0 = InitialLaw::Uniform { lo: 0.0, hi: 2.0 };
        let traj = simulate(&c).unwrap();
        assert!(traj.stats.proposals > 50, "{:?}", traj.stats);
        assert_eq!(traj.stats.envelope_violations, 0);
    }

    #[test]
    fn event_cap_is_enforced() {
        let mut c = base(100);
        c.intensity = IntensityModel::pure_power(3.0).unwrap();
        c.g0 = InitialLaw::Dirac { value: 5.0 };
        c.options.max_events = 50;
        match simulate(&c) {
            Err(Error::EventCapExceeded { cap, .. }) => assert_eq!(cap, 50),
            other => panic!("expected cap error, got {:?}", other.map(|t| t.stats)),
        }
    }

    #[test]
    fn every_event_snapshots() {
        let mut c = base(5);
        c.options.snapshot_every_event = true;
        c.options.snapshot_points = 3;
        let traj = simulate(&c).unwrap();
        let events = (traj.stats.spikes + traj.stats.arrivals) as usize;
        assert_eq!(traj.snapshots.len(), 3 + events);
        assert!(traj.snapshots.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn rejections_are_logged_on_request() {
        let mut c = base(5);
        c.options.log_rejections = true;
        let traj = simulate(&c).unwrap();
        let logged = traj.log.of_kind(EventKind::Rejection).count() as u64;
        assert_eq!(logged, traj.stats.rejections);
        traj.log.check_consistency(traj.final_state.delays()).unwrap();
    }

    #[test]
    fn moment_cap_is_reported() {
        let mut c = base(50);
        c.g0 = InitialLaw::Uniform { lo: 0.0, hi: 1.0 };
        c.options.moment_cap = Some(1e-3);
        let traj = simulate(&c).unwrap();
        assert!(traj.stats.moment_cap_exceeded);
        assert!(traj.stats.max_mean_rate_sq > 1e-3);
    }
}
