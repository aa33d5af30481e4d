mod common;

use agenet::delays::DelayModel;
use agenet::error::Error;
use agenet::intensity::{CustomRate, IntensityModel};
use agenet::laws::InitialLaw;
use agenet::pde::{picard_solve, stationary_profile, transport_step, GridParams, MeanFieldParams};

use common::{reference_config, reference_grid};

fn gaussian_profile(x_max: f64, dx: f64) -> Vec<f64> {
    let z = (std::f64::consts::PI / 2.0).sqrt();
    (0..(x_max / dx).round() as usize)
        .map(|j| {
            let x = (j as f64 + 0.5) * dx;
            (-0.5 * x * x).exp() / z
        })
        .collect()
}

#[test]
fn stationary_profile_survives_sub_cfl_steps() {
    let model = IntensityModel::pure_power(1.0).unwrap();
    let (dx, x_max) = (1e-3, 10.0);
    let exact = gaussian_profile(x_max, dx);
    for dt in [1e-3f64, 5e-4, 2.5e-4] {
        let mut f = exact.clone();
        let mut worst = 0.0f64;
        for _ in 0..(1.0 / dt).round() as usize {
            let step = transport_step(&f, 0.0, dt, dx, &model).unwrap();
            assert!(step.density.iter().all(|v| *v >= 0.0));
            f = step.density;
            let mass = f.iter().sum::<f64>() * dx;
            assert!((mass - 1.0).abs() <= 1e-6, "mass {mass}");
            worst = worst.max(f.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        assert!(worst < 5e-3, "dt = {dt}: sup error {worst}");
    }
}

#[test]
fn closed_form_stationary_profiles() {
    let dx = 1e-3;
    let f = stationary_profile(&IntensityModel::pure_power(1.0).unwrap(), 10.0, dx).unwrap();
    let exact = gaussian_profile(10.0, dx);
    let err = f.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");

    // a = 1{x > 1}: flat at 1/2 on [0, 1], then exp(-(x - 1)) / 2
    let step = IntensityModel::custom(CustomRate::step(1.0, 1.0)).unwrap();
    let f = stationary_profile(&step, 30.0, dx).unwrap();
    for (j, v) in f.iter().enumerate().step_by(97) {
        let x = (j as f64 + 0.5) * dx;
        let expected = if x < 1.0 { 0.5 } else { 0.5 * (1.0 - x).exp() };
        assert!((v - expected).abs() < 1e-3, "x = {x}: {v} vs {expected}");
    }

    let zero = IntensityModel::custom(CustomRate::zero()).unwrap();
    assert!(matches!(
        stationary_profile(&zero, 10.0, dx),
        Err(Error::GridTooShort { .. })
    ));
}

#[test]
fn activity_bounded_by_integrated_flux() {
    let mut cfg = reference_config(1, 0);
    cfg.epsilon = 0.6;
    cfg.horizon = 2.0;
    for delay in [DelayModel::no_delay(), DelayModel::Dirac { tau: 0.2 }] {
        cfg.delay = delay;
        let params = MeanFieldParams::from_network(&cfg).unwrap();
        let sol = picard_solve(&params, &reference_grid()).unwrap();
        let mut integral = 0.0;
        for (n, m) in sol.activity.iter().enumerate() {
            assert!(*m <= params.m0 + params.alpha * params.epsilon * integral + 1e-8, "n = {n}");
            if n < sol.steps() {
                integral += sol.boundary_flux[n] * sol.dt;
            }
        }
        assert!(sol.max_mass_error <= 1e-6);
        assert!(sol.density.iter().flatten().all(|v| *v >= 0.0));
    }
}

#[test]
fn residuals_contract_after_the_second_iteration() {
    let mut cfg = reference_config(1, 0);
    cfg.epsilon = 1.0;
    cfg.delay = DelayModel::TruncatedExponential { c: 2.0, tau_max: 0.5 };
    let sol = picard_solve(&MeanFieldParams::from_network(&cfg).unwrap(), &reference_grid()).unwrap();
    let r = &sol.picard_residuals;
    assert!(r.len() >= 3, "{r:?}");
    assert!(r[1..].windows(2).all(|w| w[1] < w[0]), "{r:?}");
    assert!(*r.last().unwrap() < 1e-9);
}

#[test]
fn fast_decay_approaches_the_instantaneous_limit() {
    let mut params = MeanFieldParams {
        alpha: 1000.0,
        epsilon: 0.5,
        horizon: 1.0,
        g0: InitialLaw::Uniform { lo: 0.0, hi: 1.0 },
        m0: 0.0,
        // continuous in age away from 0, so the flux has no jumps after the layers
        intensity: IntensityModel::power_threshold(1.0, 0.0, 0.5, 0.2).unwrap(),
        delay: DelayModel::Dirac { tau: 0.1 },
        instantaneous: false,
    };
    let grid = GridParams {
        dx: 1e-3,
        dt: 1e-3,
        ..GridParams::default()
    };
    let slow = picard_solve(&params, &grid).unwrap();
    params.instantaneous = true;
    let limit = picard_solve(&params, &grid).unwrap();
    // the flux jumps at every multiple of tau (the delayed feedback switching on);
    // outside layers of width a few 1 / alpha after each jump the two paths agree
    let in_layer = |t: f64| (t / 0.1).fract() < 0.1 || (t / 0.1).fract() > 1.0 - 1e-9;
    let gap = (0..slow.activity.len())
        .filter(|&n| !in_layer(slow.t_grid[n]))
        .map(|n| (slow.activity[n] - limit.activity[n]).abs())
        .fold(0.0, f64::max);
    assert!(gap < 5e-2, "{gap}");
}

#[test]
fn cfl_violation_is_rejected() {
    let params = MeanFieldParams::from_network(&reference_config(1, 0)).unwrap();
    let grid = GridParams {
        dx: 1e-3,
        dt: 2e-3,
        ..GridParams::default()
    };
    assert!(matches!(picard_solve(&params, &grid), Err(Error::Cfl { .. })));
}
