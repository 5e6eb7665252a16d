use std::f64::consts::PI;

use super::profile::RadialProfile;
use super::ModelError;
use crate::ode::{integrate, StepControl};

/// Time-`t` map of twice the fibrewise Hopf field: every complex coordinate
/// `(z_{2i}, z_{2i+1})` is rotated by the angle `2t`. It is `π`-periodic.
pub fn hopf_flow(z0: &[f64], t: f64) -> Vec<f64> {
    assert!(
        z0.len().is_multiple_of(2),
        "hopf_flow needs an even-dimensional vector"
    );
    let (s, c) = (2.0 * t).sin_cos();
    z0.chunks_exact(2)
        .flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect()
}

/// Exact flow of `α(‖z‖²)`: the Hopf flow reparametrized by `α′` on the
/// starting level.
pub fn radial_flow(profile: &RadialProfile, z0: &[f64], t: f64) -> Vec<f64> {
    let s: f64 = z0.iter().map(|x| x * x).sum();
    hopf_flow(z0, profile.slope(s) * t)
}

/// Minimal period `π/|α′(c)|` on a level, or `None` for constant orbits.
pub fn minimal_period(profile: &RadialProfile, level: f64) -> Option<f64> {
    let slope = profile.slope(level);
    (slope != 0.0).then(|| PI / slope.abs())
}

/// Profile with `α(0) = πR² − ε`, support in `[0, R²]` and `sup|α′| < π`.
/// Plateau, both transitions and the tail all have width `ε/(4π)`, which
/// leaves a constant slope `(πR² − ε)/(R² − 3ε/(4π)) < π`.
pub fn capacity_witness(radius: f64, eps: f64) -> Result<RadialProfile, ModelError> {
    let cap = PI * radius * radius;
    if !(eps > 0.0 && eps < cap) {
        return Err(ModelError::Infeasible(format!(
            "0 < eps < pi R^2 = {cap} (eps = {eps})"
        )));
    }
    let w = eps / (4.0 * PI);
    RadialProfile::standard(cap - eps, radius, w, w, w, w)
}

/// Numerical return time of `z0` under `ż = 2α′(‖z‖²) J z`, integrated with
/// an adaptive Runge–Kutta scheme: the first `t ∈ (0, horizon]` where
/// `|z(t) − z0|` has a local minimum below `tol·|z0|`. `None` for points on
/// constant levels or when nothing returns before the horizon.
pub fn numeric_return_time(
    profile: &RadialProfile,
    z0: [f64; 4],
    horizon: f64,
    tol: f64,
) -> Result<Option<f64>, ModelError> {
    let s0: f64 = z0.iter().map(|x| x * x).sum();
    if profile.slope(s0) == 0.0 || s0 == 0.0 {
        return Ok(None);
    }
    let sys = |_t: f64, z: &[f64; 4]| {
        let s: f64 = z.iter().map(|x| x * x).sum();
        let w = 2.0 * profile.slope(s);
        [-w * z[1], w * z[0], -w * z[3], w * z[2]]
    };
    let sol = integrate(&sys, 0.0, z0, horizon, &StepControl::with_tol(1e-12), None)
        .map_err(|e| ModelError::Integration(e.to_string()))?;
    let dist = |t: f64| -> f64 {
        let z = sol.eval(t).expect("inside span");
        z.iter()
            .zip(&z0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let norm0 = s0.sqrt();
    let n = (horizon * 4000.0).ceil() as usize;
    let h = horizon / n as f64;
    let mut prev2 = dist(0.0);
    let mut prev1 = dist(h);
    for i in 2..=n {
        let cur = dist(i as f64 * h);
        if prev1 <= prev2 && prev1 <= cur {
            // Golden-section refinement of the local minimum.
            let (mut lo, mut hi) = ((i - 2) as f64 * h, i as f64 * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if dist(m1) < dist(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let tm = 0.5 * (lo + hi);
            if dist(tm) < tol * norm0 {
                return Ok(Some(tm));
            }
        }
        prev2 = prev1;
        prev1 = cur;
    }
    Ok(None)
}
