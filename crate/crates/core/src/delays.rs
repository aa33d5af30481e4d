//! Transmission delays, drawn once per neuron at initialization.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Law of the per-neuron delay. Both variants have compact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayModel {
    /// Point mass at `tau`; `tau = 0` is the no-delay regime.
    Dirac { tau: f64 },
    /// Density proportional to `c e^{-c s}` on `[0, tau_max]`.
    TruncatedExponential { c: f64, tau_max: f64 },
}

impl DelayModel {
    pub fn no_delay() -> Self {
        DelayModel::Dirac { tau: 0.0 }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            DelayModel::Dirac { tau } => tau.is_finite() && tau >= 0.0,
            DelayModel::TruncatedExponential { c, tau_max } => {
                c.is_finite() && c > 0.0 && tau_max.is_finite() && tau_max > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid delay law {self:?}")))
        }
    }

    pub fn support_bound(&self) -> f64 {
        match *self {
            DelayModel::Dirac { tau } => tau,
            DelayModel::TruncatedExponential { tau_max, .. } => tau_max,
        }
    }

    /// Inverse CDF of the law at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            DelayModel::Dirac { tau } => tau,
            DelayModel::TruncatedExponential { c, tau_max } => {
                // F(s) = (1 - e^{-cs}) / (1 - e^{-c tau_max})
                let s = -(u * (-c * tau_max).exp_m1()).ln_1p() / c;
                s.clamp(0.0, tau_max)
            }
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            DelayModel::Dirac { tau } => {
                if s >= tau {
                    1.0
                } else {
                    0.0
                }
            }
            DelayModel::TruncatedExponential { c, tau_max } => {
                if s <= 0.0 {
                    0.0
                } else if s >= tau_max {
                    1.0
                } else {
                    (-c * s).exp_m1() / (-c * tau_max).exp_m1()
                }
            }
        }
    }

    pub fn sample_delays<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            DelayModel::Dirac { tau } => vec![tau; n],
            DelayModel::TruncatedExponential { .. } => {
                (0..n).map(|_| self.quantile(rng.random::<f64>())).collect()
            }
        }
    }

    /// Discrete weights of the law on the lag grid `{0, dt, 2dt, ...}`:
    /// `weights[k]` approximates `b` near lag `k dt`. Dirac masses between two
    /// nodes are split linearly; densities get the mass of `[(k-1/2)dt, (k+1/2)dt)`.
    pub fn lag_weights(&self, dt: f64) -> Vec<f64> {
        match *self {
            DelayModel::Dirac { tau } => {
                let pos = tau / dt;
                let k = pos.floor() as usize;
                let frac = pos - k as f64;
                let mut w = vec![0.0; k + 2];
                w[k] = 1.0 - frac;
                w[k + 1] = frac;
                while w.len() > 1 && *w.last().unwrap() == 0.0 {
                    w.pop();
                }
                w
            }
            DelayModel::TruncatedExponential { tau_max, .. } => {
                let n = (tau_max / dt).ceil() as usize + 1;
                (0..n)
                    .map(|k| {
                        let lo = ((k as f64 - 0.5) * dt).max(0.0);
                        let hi = ((k as f64 + 0.5) * dt).min(tau_max);
                        if hi > lo {
                            self.cdf(hi) - self.cdf(lo)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn dirac_samples() {
        let mut rng = stream(1, Stream::Delays);
        assert_eq!(DelayModel::Dirac { tau: 0.5 }.sample_delays(3, &mut rng), vec![0.5; 3]);
        assert!(DelayModel::no_delay().sample_delays(50, &mut rng).iter().all(|&t| t == 0.0));
    }

    #[test]
    fn support_bounds() {
        assert_eq!(DelayModel::Dirac { tau: 0.5 }.support_bound(), 0.5);
        assert_eq!(DelayModel::TruncatedExponential { c: 1.0, tau_max: 2.0 }.support_bound(), 2.0);
        assert_eq!(DelayModel::no_delay().support_bound(), 0.0);
    }

    /// Composite Simpson rule, used as an independent oracle.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn truncated_exponential_mean() {
        let num = simpson(|s| s * (-s).exp(), 0.0, 2.0, 2000);
        let den = simpson(|s| (-s).exp(), 0.0, 2.0, 2000);
        let oracle = num / den;
        let closed = (1.0 - 3.0 * (-2.0f64).exp()) / (1.0 - (-2.0f64).exp());
        assert!((oracle - closed).abs() < 1e-10);

        let law = DelayModel::TruncatedExponential { c: 1.0, tau_max: 2.0 };
        let mut rng = stream(2024, Stream::Delays);
        let draws = law.sample_delays(1_000_000, &mut rng);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - oracle).abs() < 3e-3, "mean {mean} vs {oracle}");
    }

    #[test]
    fn truncated_exponential_ks() {
        let law = DelayModel::TruncatedExponential { c: 1.0, tau_max: 2.0 };
        let mut rng = stream(99, Stream::Delays);
        let mut draws = law.sample_delays(1_000_000, &mut rng);
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let f = law.cdf(s);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.002, "KS statistic {ks}");
    }

    #[test]
    fn samples_within_support() {
        for seed in 0..20 {
            let law = DelayModel::TruncatedExponential { c: 3.0, tau_max: 0.7 };
            let mut rng = stream(seed, Stream::Delays);
            assert!(law
                .sample_delays(10_000, &mut rng)
                .iter()
                .all(|&s| (0.0..=law.support_bound()).contains(&s)));
        }
        let top = DelayModel::TruncatedExponential { c: 3.0, tau_max: 0.7 }.quantile(1.0);
        assert!(top <= 0.7 && top > 0.7 - 1e-15);
    }

    #[test]
    fn lag_weights_are_probabilities() {
        let w = DelayModel::Dirac { tau: 0.25 }.lag_weights(0.1);
        assert_eq!(w.len(), 4);
        assert!((w[2] - 0.5).abs() < 1e-12 && (w[3] - 0.5).abs() < 1e-12);
        assert_eq!(DelayModel::no_delay().lag_weights(0.1), vec![1.0]);
        let w = DelayModel::TruncatedExponential { c: 2.0, tau_max: 1.0 }.lag_weights(0.01);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
