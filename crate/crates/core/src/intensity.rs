//! Spiking rates `a(x, m)` of a neuron with age `x` under global activity `m`.
//!
//! Exact thinning relies on `a` being non-decreasing in both arguments: the
//! value at the upper corner of a rectangle bounds the rate everywhere inside
//! it. Built-in families satisfy this by construction; custom rates must
//! declare it and pass a grid check before the simulator accepts them.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

type RateFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A user supplied rate function together with its declared monotonicity.
#[derive(Clone)]
pub struct CustomRate {
    name: String,
    params: Vec<f64>,
    declared_monotone: bool,
    func: Arc<RateFn>,
}

impl CustomRate {
    pub fn new<F>(name: impl Into<String>, declared_monotone: bool, func: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        CustomRate {
            name: name.into(),
            params: Vec::new(),
            declared_monotone,
            func: Arc::new(func),
        }
    }

    /// `a ≡ 0`. Degenerate, only useful for transport tests.
    pub fn zero() -> Self {
        let mut c = CustomRate::new("zero", true, |_, _| 0.0);
        c.params = vec![];
        c
    }

    /// `level · 1{x > threshold}`, independent of the activity.
    pub fn step(threshold: f64, level: f64) -> Self {
        let mut c = CustomRate::new("step", true, move |x, _| {
            if x > threshold {
                level
            } else {
                0.0
            }
        });
        c.params = vec![threshold, level];
        c
    }

    /// Refractory rate with an activity dependent threshold
    /// `x*(m) = x_minus + (x_plus - x_minus) e^{-m}`, and `a = gain · (x - x*(m))_+`.
    /// The threshold decreases from `x_plus` at rest to `x_minus` under strong activity.
    pub fn refractory(x_plus: f64, x_minus: f64, gain: f64) -> Self {
        let mut c = CustomRate::new("refractory", true, move |x, m| {
            let threshold = x_minus + (x_plus - x_minus) * (-m).exp();
            gain * (x - threshold).max(0.0)
        });
        c.params = vec![x_plus, x_minus, gain];
        c
    }

    /// `x e^{-x}`: vanishes at the origin but decreases past `x = 1`.
    pub fn bump() -> Self {
        let mut c = CustomRate::new("bump", false, |x, _| x * (-x).exp());
        c.params = vec![];
        c
    }

    /// Looks up one of the named rates above.
    pub fn from_name(name: &str, params: &[f64], declared_monotone: bool) -> Result<Self> {
        let need = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "custom rate `{name}` takes {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        let mut rate = match name {
            "zero" => {
                need(0)?;
                CustomRate::zero()
            }
            "step" => {
                need(2)?;
                if params[0] < 0.0 || params[1] < 0.0 {
                    return Err(Error::Config("step: threshold and level must be >= 0".into()));
                }
                CustomRate::step(params[0], params[1])
            }
            "refractory" => {
                need(3)?;
                let (xp, xm, g) = (params[0], params[1], params[2]);
                if !(xm > 0.0 && xp >= xm && g > 0.0) {
                    return Err(Error::Config(
                        "refractory: need x_plus >= x_minus > 0 and gain > 0".into(),
                    ));
                }
                CustomRate::refractory(xp, xm, g)
            }
            "bump" => {
                need(0)?;
                CustomRate::bump()
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown custom rate `{other}` (known: zero, step, refractory, bump)"
                )))
            }
        };
        rate.declared_monotone = declared_monotone;
        Ok(rate)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn declared_monotone(&self) -> bool {
        self.declared_monotone
    }
}

impl fmt::Debug for CustomRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRate")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("declared_monotone", &self.declared_monotone)
            .finish()
    }
}

impl PartialEq for CustomRate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.declared_monotone == other.declared_monotone
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `x^xi + 1{x > x_star} (slope m + offset)`.
    PowerThreshold {
        xi: f64,
        x_star: f64,
        slope: f64,
        offset: f64,
    },
    /// `x^xi`, independent of the activity.
    PurePower { xi: f64 },
    Custom(CustomRate),
}

/// Constants of the two-sided growth condition
/// `c_rho x^{(1+rho)/(1-rho)} <= a(x, m) <= c_xi (1 + x^{xi-2} + m^{xi-2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConstants {
    pub xi: f64,
    pub rho: f64,
    pub c_xi: f64,
    pub c_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityModel {
    pub family: Family,
    /// Declared constant of the Lipschitz-type condition, when known.
    pub lipschitz_c0: Option<f64>,
    pub growth: Option<GrowthConstants>,
}

impl IntensityModel {
    pub fn new(family: Family) -> Result<Self> {
        let model = IntensityModel {
            family,
            lipschitz_c0: None,
            growth: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn pure_power(xi: f64) -> Result<Self> {
        Self::new(Family::PurePower { xi })
    }

    pub fn power_threshold(xi: f64, x_star: f64, slope: f64, offset: f64) -> Result<Self> {
        Self::new(Family::PowerThreshold {
            xi,
            x_star,
            slope,
            offset,
        })
    }

    pub fn custom(rate: CustomRate) -> Result<Self> {
        Self::new(Family::Custom(rate))
    }

    pub fn with_lipschitz(mut self, c0: f64) -> Result<Self> {
        self.lipschitz_c0 = Some(c0);
        self.validate()?;
        Ok(self)
    }

    pub fn with_growth(mut self, growth: GrowthConstants) -> Result<Self> {
        self.growth = Some(growth);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        match &self.family {
            Family::PowerThreshold {
                xi,
                x_star,
                slope,
                offset,
            } => {
                if !(xi.is_finite() && *xi > 0.0) {
                    return Err(Error::Config(format!("power_threshold: xi must be > 0, got {xi}")));
                }
                for (name, v) in [("x_star", x_star), ("slope_a", slope), ("offset_b", offset)] {
                    if !finite_nonneg(*v) {
                        return Err(Error::Config(format!(
                            "power_threshold: {name} must be finite and >= 0, got {v}"
                        )));
                    }
                }
            }
            Family::PurePower { xi } => {
                if !(xi.is_finite() && *xi >= 1.0) {
                    return Err(Error::Config(format!("pure_power: xi must be >= 1, got {xi}")));
                }
            }
            Family::Custom(_) => {}
        }
        if let Some(c0) = self.lipschitz_c0 {
            if !(c0.is_finite() && c0 > 0.0) {
                return Err(Error::Config(format!("lipschitz_c0 must be > 0, got {c0}")));
            }
        }
        if let Some(g) = &self.growth {
            if !(g.xi > 2.0 && g.rho > 0.0 && g.rho < 1.0 && g.c_xi > 0.0 && g.c_rho > 0.0) {
                return Err(Error::Config(format!(
                    "growth constants need xi > 2, 0 < rho < 1, c_xi > 0, c_rho > 0; got {g:?}"
                )));
            }
        }
        Ok(())
    }

    /// Unchecked evaluation for hot loops; arguments must be non-negative.
    #[inline]
    pub fn rate(&self, x: f64, m: f64) -> f64 {
        match &self.family {
            Family::PowerThreshold {
                xi,
                x_star,
                slope,
                offset,
            } => {
                let base = power(x, *xi);
                // Right-continuous at the threshold: the indicator needs x strictly above it.
                if x > *x_star {
                    base + (slope * m + offset)
                } else {
                    base
                }
            }
            Family::PurePower { xi } => power(x, *xi),
            Family::Custom(c) => (c.func)(x, m),
        }
    }

    pub fn eval(&self, x: f64, m: f64) -> Result<f64> {
        check_arguments(x, m)?;
        Ok(self.rate(x, m))
    }

    /// Upper bound of the rate on `[0, x_max] × [0, m_max]`.
    pub fn envelope(&self, x_max: f64, m_max: f64) -> Result<f64> {
        self.eval(x_max, m_max)
    }

    /// True when the family provably ignores the activity.
    pub fn ignores_activity(&self) -> Option<bool> {
        match &self.family {
            Family::PurePower { .. } => Some(true),
            Family::PowerThreshold { slope, .. } => Some(*slope == 0.0),
            Family::Custom(c) => match c.name.as_str() {
                "zero" | "step" | "bump" => Some(true),
                "refractory" => Some(false),
                _ => None,
            },
        }
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::PowerThreshold {
                xi,
                x_star,
                slope,
                offset,
            } => format!("x^{xi} + 1{{x > {x_star}}}({slope} m + {offset})"),
            Family::PurePower { xi } => format!("x^{xi}"),
            Family::Custom(c) => format!("custom `{}` {:?}", c.name, c.params),
        }
    }

    /// Refuses rates that would make thinning inexact: custom rates must be
    /// declared monotone and must pass the grid monotonicity check on the
    /// rectangle the simulation can visit.
    pub fn ensure_simulable(&self, x_max: f64, m_max: f64) -> Result<()> {
        self.validate()?;
        if let Family::Custom(c) = &self.family {
            if !c.declared_monotone {
                return Err(Error::Model(format!(
                    "custom rate `{}` is not declared monotone; thinning would be inexact",
                    c.name
                )));
            }
            let grid = GridSpec {
                x_max: x_max.max(1e-9),
                m_max: m_max.max(1e-9),
                nx: 129,
                nm: 33,
            };
            let report = check_hypotheses(self, &grid, &[])?;
            for axis in [&report.monotone_x, &report.monotone_m] {
                if let Some(v) = &axis.first_violation {
                    return Err(Error::Model(format!(
                        "custom rate `{}` declared monotone but fails the grid check: {v}",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn power(x: f64, xi: f64) -> f64 {
    if xi == 1.0 {
        x
    } else if xi == 2.0 {
        x * x
    } else {
        x.powf(xi)
    }
}

fn check_arguments(x: f64, m: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("age must be finite and >= 0, got {x}")));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("activity must be finite and >= 0, got {m}")));
    }
    Ok(())
}

/// Uniform sampling grid over `[0, x_max] × [0, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub m_max: f64,
    pub nx: usize,
    pub nm: usize,
}

impl GridSpec {
    pub fn x(&self, k: usize) -> f64 {
        self.x_max * k as f64 / (self.nx - 1) as f64
    }

    pub fn m(&self, l: usize) -> f64 {
        self.m_max * l as f64 / (self.nm - 1) as f64
    }

    pub fn x_step(&self) -> f64 {
        self.x_max / (self.nx - 1) as f64
    }
}

/// Two grid nodes whose rates break monotonicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPair {
    pub lower: (f64, f64),
    pub upper: (f64, f64),
    pub rate_lower: f64,
    pub rate_upper: f64,
}

impl fmt::Display for GridPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a({}, {}) = {} > a({}, {}) = {}",
            self.lower.0, self.lower.1, self.rate_lower, self.upper.0, self.upper.1, self.rate_upper
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisCheck {
    pub passed: bool,
    pub violations: usize,
    pub first_violation: Option<GridPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefractoryCheck {
    pub delta: f64,
    /// Largest grid age below which `sup_m a(x, m) <= delta`; zero when none exists.
    pub x_star_delta: f64,
    pub passed: bool,
    pub failing_region: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzCheck {
    /// Largest finite ratio `|a - a'| / (min(a, a') |x - x'| + |m - m'|)` over neighbouring nodes.
    pub sup_ratio: f64,
    /// Neighbour pairs with a rate change but a vanishing denominator (infinite ratio).
    pub degenerate_pairs: usize,
    pub declared_c0: Option<f64>,
    pub within_declared: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub model: String,
    pub grid: GridSpec,
    pub monotone_x: AxisCheck,
    pub monotone_m: AxisCheck,
    pub zero_at_origin: bool,
    /// `a(x, 0) > 0` for every sampled `x > 0`. Reported, not enforced.
    pub positive_at_rest: bool,
    pub refractory: Vec<RefractoryCheck>,
    pub lipschitz: LipschitzCheck,
    pub growth: Option<GrowthCheck>,
}

impl HypothesisReport {
    /// Monotonicity, `a(0, ·) = 0` and the refractory condition for every tested delta.
    pub fn mandatory_passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(v) = &self.monotone_x.first_violation {
            out.push(format!(
                "H1 monotonicity in age fails at {} grid pairs, first: {v}",
                self.monotone_x.violations
            ));
        }
        if let Some(v) = &self.monotone_m.first_violation {
            out.push(format!(
                "H1 monotonicity in activity fails at {} grid pairs, first: {v}",
                self.monotone_m.violations
            ));
        }
        if !self.zero_at_origin {
            out.push("H1 requires a(0, m) = 0 for every m".to_string());
        }
        for r in &self.refractory {
            if let Some(region) = &r.failing_region {
                out.push(format!("H3 fails for delta = {}: {region}", r.delta));
            }
        }
        out
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(f, "rate: {}", self.model)?;
        writeln!(
            f,
            "grid: [0, {}] x [0, {}], {} x {} nodes",
            self.grid.x_max, self.grid.m_max, self.grid.nx, self.grid.nm
        )?;
        writeln!(f, "H1 monotone in age        {}", mark(self.monotone_x.passed))?;
        if let Some(v) = &self.monotone_x.first_violation {
            writeln!(f, "    first violating pair: {v}")?;
        }
        writeln!(f, "H1 monotone in activity   {}", mark(self.monotone_m.passed))?;
        if let Some(v) = &self.monotone_m.first_violation {
            writeln!(f, "    first violating pair: {v}")?;
        }
        writeln!(f, "H1 a(0, m) = 0            {}", mark(self.zero_at_origin))?;
        writeln!(
            f,
            "H1 a(x, 0) > 0 for x > 0  {} (informational)",
            mark(self.positive_at_rest)
        )?;
        for r in &self.refractory {
            writeln!(
                f,
                "H3 delta = {:<10} {}  x*_delta = {}",
                r.delta,
                mark(r.passed),
                r.x_star_delta
            )?;
            if let Some(region) = &r.failing_region {
                writeln!(f, "    {region}")?;
            }
        }
        let l = &self.lipschitz;
        write!(
            f,
            "H4 empirical ratio sup = {} ({} degenerate pairs)",
            l.sup_ratio, l.degenerate_pairs
        )?;
        match (l.declared_c0, l.within_declared) {
            (Some(c0), Some(ok)) => writeln!(f, ", declared C0 = {c0}: {}", mark(ok))?,
            _ => writeln!(f, ", no declared C0")?,
        }
        if let Some(g) = &self.growth {
            writeln!(
                f,
                "growth envelope           {} (lower violations {}, upper violations {})",
                mark(g.passed),
                g.lower_violations,
                g.upper_violations
            )?;
        }
        Ok(())
    }
}

/// Grid-sampled check of the structural hypotheses on the rate.
pub fn check_hypotheses(
    model: &IntensityModel,
    grid: &GridSpec,
    deltas: &[f64],
) -> Result<HypothesisReport> {
    if grid.nx < 3 || grid.nm < 3 {
        return Err(Error::Config(format!(
            "hypothesis grid too coarse: need at least 3 points per axis, got {} x {}",
            grid.nx, grid.nm
        )));
    }
    if !(grid.x_max > 0.0 && grid.m_max > 0.0 && grid.x_max.is_finite() && grid.m_max.is_finite()) {
        return Err(Error::Config("hypothesis grid needs finite x_max > 0 and m_max > 0".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::Config(format!("delta must be > 0, got {d}")));
    }
    model.validate()?;

    let (nx, nm) = (grid.nx, grid.nm);
    let values: Vec<f64> = (0..nx)
        .flat_map(|k| (0..nm).map(move |l| (k, l)))
        .map(|(k, l)| model.rate(grid.x(k), grid.m(l)))
        .collect();
    let at = |k: usize, l: usize| values[k * nm + l];

    let mut mono_x = AxisCheck {
        passed: true,
        violations: 0,
        first_violation: None,
    };
    let mut mono_m = mono_x.clone();
    // Consecutive comparisons along each axis imply all ordered pairs by transitivity.
    for k in 0..nx {
        for l in 0..nm {
            let v = at(k, l);
            if k + 1 < nx && at(k + 1, l) < v {
                record(&mut mono_x, grid, (k, l), (k + 1, l), v, at(k + 1, l));
            }
            if l + 1 < nm && at(k, l + 1) < v {
                record(&mut mono_m, grid, (k, l), (k, l + 1), v, at(k, l + 1));
            }
        }
    }

    let zero_at_origin = (0..nm).all(|l| at(0, l) == 0.0);
    let positive_at_rest = (1..nx).all(|k| at(k, 0) > 0.0);

    let sup_over_m: Vec<f64> = (0..nx)
        .map(|k| (0..nm).map(|l| at(k, l)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let refractory = deltas
        .iter()
        .map(|&delta| {
            let mut last_ok = None;
            for (k, s) in sup_over_m.iter().enumerate() {
                if *s <= delta {
                    last_ok = Some(k);
                } else {
                    break;
                }
            }
            let x_star_delta = last_ok.map(|k| grid.x(k)).unwrap_or(0.0);
            let passed = x_star_delta > 0.0;
            let failing_region = if passed {
                None
            } else {
                let k = last_ok.map(|k| k + 1).unwrap_or(0);
                let l = (0..nm).find(|&l| at(k, l) > delta).unwrap_or(nm - 1);
                Some(format!(
                    "no positive age keeps the rate below delta: a({}, m) > {} for m in [{}, {}] \
                     (a({}, {}) = {}), i.e. the region x in (0, {}] at activity m >= {}",
                    grid.x(k),
                    delta,
                    grid.m(l),
                    grid.m_max,
                    grid.x(k),
                    grid.m(nm - 1),
                    at(k, nm - 1),
                    grid.x(k.max(1)),
                    grid.m(l)
                ))
            };
            RefractoryCheck {
                delta,
                x_star_delta,
                passed,
                failing_region,
            }
        })
        .collect();

    let mut sup_ratio = 0.0f64;
    let mut degenerate_pairs = 0usize;
    for k in 0..nx {
        for l in 0..nm {
            for (dk, dl) in [(1usize, 0usize), (0, 1), (1, 1)] {
                let (k2, l2) = (k + dk, l + dl);
                if k2 >= nx || l2 >= nm {
                    continue;
                }
                let (a1, a2) = (at(k, l), at(k2, l2));
                let num = (a1 - a2).abs();
                let den = a1.min(a2) * (grid.x(k2) - grid.x(k)) + (grid.m(l2) - grid.m(l));
                if den > 0.0 {
                    sup_ratio = sup_ratio.max(num / den);
                } else if num > 0.0 {
                    degenerate_pairs += 1;
                }
            }
        }
    }
    let lipschitz = LipschitzCheck {
        sup_ratio,
        degenerate_pairs,
        declared_c0: model.lipschitz_c0,
        within_declared: model
            .lipschitz_c0
            .map(|c0| degenerate_pairs == 0 && sup_ratio <= c0),
    };

    let growth = model.growth.map(|g| {
        let exponent = (1.0 + g.rho) / (1.0 - g.rho);
        let mut lower_violations = 0;
        let mut upper_violations = 0;
        for k in 0..nx {
            for l in 0..nm {
                let (x, m, a) = (grid.x(k), grid.m(l), at(k, l));
                if g.c_rho * x.powf(exponent) > a {
                    lower_violations += 1;
                }
                if a > g.c_xi * (1.0 + x.powf(g.xi - 2.0) + m.powf(g.xi - 2.0)) {
                    upper_violations += 1;
                }
            }
        }
        GrowthCheck {
            lower_violations,
            upper_violations,
            passed: lower_violations == 0 && upper_violations == 0,
        }
    });

    Ok(HypothesisReport {
        model: model.describe(),
        grid: *grid,
        monotone_x: mono_x,
        monotone_m: mono_m,
        zero_at_origin,
        positive_at_rest,
        refractory,
        lipschitz,
        growth,
    })
}

fn record(
    check: &mut AxisCheck,
    grid: &GridSpec,
    lower: (usize, usize),
    upper: (usize, usize),
    rate_lower: f64,
    rate_upper: f64,
) {
    check.passed = false;
    check.violations += 1;
    if check.first_violation.is_none() {
        check.first_violation = Some(GridPair {
            lower: (grid.x(lower.0), grid.m(lower.1)),
            upper: (grid.x(upper.0), grid.m(upper.1)),
            rate_lower,
            rate_upper,
        });
    }
}
