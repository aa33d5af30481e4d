//! TOML run configuration.
//!
//! Units: times (`horizon`, ages, delays, `dt`) are in the model's time unit,
//! `alpha` and rate constants in inverse time units, `epsilon` is
//! dimensionless, ages and `dx` share the time unit because ages grow at unit
//! speed. Every omitted key takes the default shown by [`RunConfig::resolved_toml`].

use serde::{Deserialize, Serialize};

use crate::chaos::StudySpec;
use crate::delays::DelayModel;
use crate::engine::{NetworkConfig, SimOptions};
use crate::error::{Error, Result};
use crate::intensity::{CustomRate, Family, GridSpec, GrowthConstants, IntensityModel};
use crate::laws::InitialLaw;
use crate::pde::{GridParams, MeanFieldParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSection,
    pub intensity: IntensitySection,
    #[serde(default = "DelayModel::no_delay")]
    pub delay: DelayModel,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub meanfield: MeanFieldSection,
    #[serde(default)]
    pub chaos: ChaosSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n_neurons: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    pub g0: InitialLaw,
    pub m0: InitialLaw,
}

/// `family` is `pure_power` (`xi`), `power_threshold` (`xi`, `x_star`,
/// `slope_a`, `offset_b`) or `custom` (`name`, `params`, `declared_monotone`)
/// where `name` is one of `zero`, `step`, `refractory`, `bump`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySection {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_monotone: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConstants>,
}

impl IntensitySection {
    fn family(&self) -> Result<Family> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("intensity.{key} is required for family `{}`", self.family)))
        };
        let allowed: &[&str] = match self.family.as_str() {
            "pure_power" => &["xi"],
            "power_threshold" => &["xi", "x_star", "slope_a", "offset_b"],
            "custom" => &["name", "params", "declared_monotone"],
            other => {
                return Err(Error::Config(format!(
                    "intensity.family `{other}` is not one of pure_power, power_threshold, custom"
                )))
            }
        };
        let present = [
            ("xi", self.xi.is_some()),
            ("x_star", self.x_star.is_some()),
            ("slope_a", self.slope_a.is_some()),
            ("offset_b", self.offset_b.is_some()),
            ("name", self.name.is_some()),
            ("params", self.params.is_some()),
            ("declared_monotone", self.declared_monotone.is_some()),
        ];
        if let Some((key, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            return Err(Error::Config(format!(
                "intensity.{key} does not apply to family `{}`",
                self.family
            )));
        }
        Ok(match self.family.as_str() {
            "pure_power" => Family::PurePower { xi: need(self.xi, "xi")? },
            "power_threshold" => Family::PowerThreshold {
                xi: need(self.xi, "xi")?,
                x_star: need(self.x_star, "x_star")?,
                slope: need(self.slope_a, "slope_a")?,
                offset: need(self.offset_b, "offset_b")?,
            },
            _ => {
                let name = self
                    .name
                    .as_deref()
                    .ok_or_else(|| Error::Config("intensity.name is required for family `custom`".into()))?;
                let declared = self.declared_monotone.ok_or_else(|| {
                    Error::Config("intensity.declared_monotone is required for family `custom`".into())
                })?;
                Family::Custom(CustomRate::from_name(
                    name,
                    self.params.as_deref().unwrap_or(&[]),
                    declared,
                )?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub snapshot_points: usize,
    pub snapshot_every_event: bool,
    pub max_events: u64,
    pub log_rejections: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_cap: Option<f64>,
    /// Use the mean of `m0` as a fixed initial activity in every replica.
    pub pin_m0: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimOptions::default();
        SimulationSection {
            snapshot_points: d.snapshot_points,
            snapshot_every_event: d.snapshot_every_event,
            max_events: d.max_events,
            log_rejections: d.log_rejections,
            moment_cap: d.moment_cap,
            pin_m0: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanFieldSection {
    pub dx: f64,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub density_rows: usize,
    pub instantaneous: bool,
    pub emit_density: bool,
}

impl Default for MeanFieldSection {
    fn default() -> Self {
        let g = GridParams::default();
        MeanFieldSection {
            dx: g.dx,
            dt: g.dt,
            x_max: g.x_max,
            picard_tol: g.picard_tol,
            max_iters: g.max_iters,
            damping: g.damping,
            density_rows: g.density_rows,
            instantaneous: false,
            emit_density: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSection {
    pub n_list: Vec<usize>,
    /// Replicas per size; omitted means 20 up to N = 800 and 10 above.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    pub three_times: bool,
    pub dump_replicas: bool,
}

impl Default for ChaosSection {
    fn default() -> Self {
        ChaosSection {
            n_list: vec![50, 200, 800, 3200],
            replicas: None,
            three_times: false,
            dump_replicas: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub x_max: f64,
    pub m_max: f64,
    pub nx: usize,
    pub nm: usize,
    pub deltas: Vec<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            x_max: 10.0,
            m_max: 10.0,
            nx: 1001,
            nm: 41,
            deltas: vec![0.01, 0.1, 0.5],
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.intensity_model()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The configuration with every default filled in.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn intensity_model(&self) -> Result<IntensityModel> {
        let mut model = IntensityModel::new(self.intensity.family()?)?;
        if let Some(c0) = self.intensity.lipschitz_c0 {
            model = model.with_lipschitz(c0)?;
        }
        if let Some(g) = self.intensity.growth {
            model = model.with_growth(g)?;
        }
        Ok(model)
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let s = &self.simulation;
        let n = &self.network;
        let config = NetworkConfig {
            n_neurons: n.n_neurons,
            alpha: n.alpha,
            epsilon: n.epsilon,
            horizon: n.horizon,
            g0: n.g0.clone(),
            m0: n.m0.clone(),
            intensity: self.intensity_model()?,
            delay: self.delay,
            seed: n.seed,
            options: SimOptions {
                snapshot_points: s.snapshot_points,
                snapshot_every_event: s.snapshot_every_event,
                max_events: s.max_events,
                log_rejections: s.log_rejections,
                keep_ages: false,
                moment_cap: s.moment_cap,
                pinned_m0: s.pin_m0.then(|| n.m0.mean()),
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn meanfield_params(&self) -> Result<MeanFieldParams> {
        let mut p = MeanFieldParams::from_network(&self.network()?)?;
        p.instantaneous = self.meanfield.instantaneous;
        Ok(p)
    }

    pub fn grid(&self) -> GridParams {
        let m = &self.meanfield;
        GridParams {
            dx: m.dx,
            dt: m.dt,
            x_max: m.x_max,
            picard_tol: m.picard_tol,
            max_iters: m.max_iters,
            damping: m.damping,
            density_rows: m.density_rows,
        }
    }

    pub fn study(&self) -> StudySpec {
        let c = &self.chaos;
        StudySpec {
            n_list: c.n_list.clone(),
            replicas: c.replicas,
            three_times: c.three_times,
            master_seed: self.network.seed,
            keep_replicas: c.dump_replicas,
        }
    }

    pub fn validation_grid(&self) -> GridSpec {
        let v = &self.validate;
        GridSpec {
            x_max: v.x_max,
            m_max: v.m_max,
            nx: v.nx,
            nm: v.nm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[network]
n_neurons = 20
alpha = 1.0
epsilon = 0.3
horizon = 2.0
g0 = { kind = "uniform", lo = 0.0, hi = 1.0 }
m0 = { kind = "dirac", value = 1.0 }

[intensity]
family = "pure_power"
xi = 1.0
"#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.delay, DelayModel::no_delay());
        assert_eq!(cfg.simulation.snapshot_points, 100);
        let net = cfg.network().unwrap();
        assert_eq!(net.n_neurons, 20);
        assert_eq!(net.options.max_events, 10_000_000);
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.delay = DelayModel::TruncatedExponential { c: 2.0, tau_max: 0.5 };
        cfg.intensity = IntensitySection {
            family: "custom".into(),
            name: Some("refractory".into()),
            params: Some(vec![1.0, 0.2, 2.0]),
            declared_monotone: Some(true),
            ..IntensitySection::default()
        };
        cfg.intensity.lipschitz_c0 = Some(3.0);
        let echo = cfg.resolved_toml();
        assert_eq!(RunConfig::parse(&echo).unwrap(), cfg);
    }

    #[test]
    fn missing_family_is_named() {
        let text = MINIMAL.replace("family = \"pure_power\"\n", "");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("family"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let text = MINIMAL.replace("alpha = 1.0", "alpha = 1.0\nbeta = 2.0");
        assert!(RunConfig::parse(&text).unwrap_err().to_string().contains("beta"));
        let text = MINIMAL.replace("xi = 1.0", "xi = 0.5");
        assert!(RunConfig::parse(&text).is_err());
        let text = MINIMAL.replace("xi = 1.0", "xi = 1.0\nx_star = 0.5");
        assert!(RunConfig::parse(&text).unwrap_err().to_string().contains("x_star"));
        let text = MINIMAL.replace("pure_power", "power_threshold");
        assert!(RunConfig::parse(&text).unwrap_err().to_string().contains("intensity.x_star"));
        let text = MINIMAL.replace("alpha = 1.0", "alpha = -1.0");
        assert!(RunConfig::parse(&text).unwrap().network().is_err());
    }

    #[test]
    fn pinned_activity_uses_mean() {
        let text = MINIMAL.replace(
            "m0 = { kind = \"dirac\", value = 1.0 }",
            "m0 = { kind = \"uniform\", lo = 0.0, hi = 2.0 }",
        ) + "\n[simulation]\npin_m0 = true\n";
        let net = RunConfig::parse(&text).unwrap().network().unwrap();
        assert_eq!(net.options.pinned_m0, Some(1.0));
    }
}
