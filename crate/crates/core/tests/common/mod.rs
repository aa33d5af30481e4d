#![allow(dead_code)]

use agenet::delays::DelayModel;
use agenet::engine::{NetworkConfig, SimOptions};
use agenet::intensity::IntensityModel;
use agenet::laws::InitialLaw;
use agenet::pde::GridParams;

/// Activity-dependent rate used by the coupling study: `x + 1{x > 0.3} (0.5 m + 0.2)`.
pub fn threshold_rate() -> IntensityModel {
    IntensityModel::power_threshold(1.0, 0.3, 0.5, 0.2).unwrap()
}

/// Compact initial ages, unit initial activity, no delay, eps = 0.2, alpha = 1, T = 1.
pub fn reference_config(n: usize, seed: u64) -> NetworkConfig {
    NetworkConfig {
        n_neurons: n,
        alpha: 1.0,
        epsilon: 0.2,
        horizon: 1.0,
        g0: InitialLaw::Uniform { lo: 0.0, hi: 1.0 },
        m0: InitialLaw::Dirac { value: 1.0 },
        intensity: threshold_rate(),
        delay: DelayModel::no_delay(),
        seed,
        options: SimOptions::default(),
    }
}

pub fn reference_grid() -> GridParams {
    GridParams {
        dx: 1e-3,
        dt: 1e-3,
        ..GridParams::default()
    }
}

/// Kolmogorov distance between the sample and a continuous CDF; infinite
/// entries stand for censored observations.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &t) in sample.iter().enumerate() {
        if !t.is_finite() {
            break;
        }
        let f = cdf(t);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}
