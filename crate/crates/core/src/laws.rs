//! Laws of the initial ages and of the initial activity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Dirac { value: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Finitely supported law: `values[k]` with probability `weights[k] / sum(weights)`.
    Atoms { values: Vec<f64>, weights: Vec<f64> },
    /// Exponential law with the given rate, truncated to `[0, cutoff]` so the
    /// support stays compact.
    TruncatedExponential { rate: f64, cutoff: f64 },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            InitialLaw::Dirac { value } if !(value.is_finite() && *value >= 0.0) => {
                bad(format!("dirac law needs a finite value >= 0, got {value}"))
            }
            InitialLaw::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) => {
                bad(format!("uniform law needs 0 <= lo < hi, got [{lo}, {hi}]"))
            }
            InitialLaw::Atoms { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return bad("atoms: values and weights must be non-empty and of equal length".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("atoms: values must be finite and >= 0".into());
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("atoms: weights must be >= 0 with a positive sum".into());
                }
                Ok(())
            }
            InitialLaw::TruncatedExponential { rate, cutoff }
                if !(rate.is_finite() && *rate > 0.0 && cutoff.is_finite() && *cutoff > 0.0) =>
            {
                bad(format!("truncated exponential needs rate > 0 and cutoff > 0, got {rate}, {cutoff}"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InitialLaw::Dirac { value } => *value,
            InitialLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            InitialLaw::Atoms { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (v, w) in values.iter().zip(weights) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values.last().unwrap()
            }
            InitialLaw::TruncatedExponential { rate, cutoff } => {
                let u = rng.random::<f64>();
                (-(u * (-rate * cutoff).exp_m1()).ln_1p() / rate).clamp(0.0, *cutoff)
            }
        }
    }

    /// Upper end of the support.
    pub fn support_max(&self) -> f64 {
        match self {
            InitialLaw::Dirac { value } => *value,
            InitialLaw::Uniform { hi, .. } => *hi,
            InitialLaw::Atoms { values, .. } => values.iter().cloned().fold(0.0, f64::max),
            InitialLaw::TruncatedExponential { cutoff, .. } => *cutoff,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            InitialLaw::Dirac { value } => *value,
            InitialLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            InitialLaw::Atoms { values, weights } => {
                let total: f64 = weights.iter().sum();
                values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
            }
            InitialLaw::TruncatedExponential { rate, cutoff } => {
                let z = -(-rate * cutoff).exp_m1();
                (1.0 - (1.0 + rate * cutoff) * (-rate * cutoff).exp()) / (rate * z)
            }
        }
    }

    /// Probability of `[lo, hi)`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        match self {
            InitialLaw::Dirac { value } => {
                if *value >= lo && *value < hi {
                    1.0
                } else {
                    0.0
                }
            }
            InitialLaw::Uniform { lo: a, hi: b } => {
                let overlap = hi.min(*b) - lo.max(*a);
                (overlap / (b - a)).max(0.0)
            }
            InitialLaw::Atoms { values, weights } => {
                let total: f64 = weights.iter().sum();
                values
                    .iter()
                    .zip(weights)
                    .filter(|(v, _)| **v >= lo && **v < hi)
                    .map(|(_, w)| w)
                    .sum::<f64>()
                    / total
            }
            InitialLaw::TruncatedExponential { rate, cutoff } => {
                let cdf = |s: f64| {
                    let s = s.clamp(0.0, *cutoff);
                    (-rate * s).exp_m1() / (-rate * cutoff).exp_m1()
                };
                (cdf(hi) - cdf(lo)).max(0.0)
            }
        }
    }

    /// The single value of a point mass.
    pub fn as_dirac(&self) -> Option<f64> {
        match self {
            InitialLaw::Dirac { value } => Some(*value),
            InitialLaw::Atoms { values, weights } if values.len() == 1 && weights[0] > 0.0 => Some(values[0]),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn validation() {
        assert!(InitialLaw::Dirac { value: -1.0 }.validate().is_err());
        assert!(InitialLaw::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(InitialLaw::Atoms { values: vec![1.0], weights: vec![] }.validate().is_err());
        InitialLaw::Atoms { values: vec![0.5, 1.0], weights: vec![1.0, 3.0] }.validate().unwrap();
    }

    #[test]
    fn sample_means() {
        let laws = [
            InitialLaw::Uniform { lo: 0.5, hi: 2.0 },
            InitialLaw::Atoms { values: vec![0.5, 1.0], weights: vec![1.0, 3.0] },
            InitialLaw::TruncatedExponential { rate: 2.0, cutoff: 3.0 },
        ];
        for law in &laws {
            let mut rng = stream(5, Stream::InitialAges);
            let n = 200_000;
            let mean = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!((mean - law.mean()).abs() < 0.01, "{law:?}: {mean} vs {}", law.mean());
        }
    }

    #[test]
    fn masses_sum_to_one() {
        let law = InitialLaw::TruncatedExponential { rate: 2.0, cutoff: 3.0 };
        let total: f64 = (0..30).map(|k| law.mass(k as f64 * 0.1, (k + 1) as f64 * 0.1)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(InitialLaw::Uniform { lo: 0.0, hi: 1.0 }.mass(0.25, 0.5), 0.25);
    }
}
