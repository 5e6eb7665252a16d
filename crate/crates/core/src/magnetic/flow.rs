use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::field::MagneticField;
use super::MagneticError;
use crate::ode::{integrate, Solution, StepControl};

/// Point of the unit tangent bundle at energy `E`. `q1, q2` are torus
/// coordinates (period 1); `theta` is a lift of the velocity angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub q1: f64,
    pub q2: f64,
    pub theta: f64,
    pub energy: f64,
}

impl ReducedState {
    pub fn new(q1: f64, q2: f64, theta: f64, energy: f64) -> Result<Self, MagneticError> {
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(MagneticError::InvalidEnergy(energy));
        }
        Ok(Self {
            q1,
            q2,
            theta,
            energy,
        })
    }

    pub fn speed(&self) -> f64 {
        (2.0 * self.energy).sqrt()
    }
}

/// Wrap into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Duration(f64),
    /// Stop once θ has decreased by this (positive) amount.
    ThetaSpan(f64),
}

/// Augmented state `(q₁, q₂, θ, ∫G dq₂, −∫H dq₁)` on the planar lift.
pub(crate) type Augmented = [f64; 5];

pub(crate) fn rhs(field: &MagneticField, speed: f64, s: &Augmented) -> Augmented {
    let (q1, q2, th) = (s[0], s[1], s[2]);
    let (c, sn) = (th.cos(), th.sin());
    let d1 = speed * c;
    let d2 = speed * sn;
    [
        d1,
        d2,
        -field.eval(q1, q2),
        field.primitive_q1(q1, q2) * d2,
        -field.primitive_q2(q1, q2) * d1,
    ]
}

/// Sampled trajectory on the planar lift.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub(crate) solution: Solution<5>,
}

impl Trajectory {
    pub fn final_state(&self) -> ReducedState {
        let y = self.solution.y_final();
        ReducedState {
            q1: y[0],
            q2: y[1],
            theta: y[2],
            energy: self.energy,
        }
    }

    pub fn duration(&self) -> f64 {
        self.solution.t_final() - self.solution.t[0]
    }

    pub fn eval(&self, t: f64) -> Option<[f64; 3]> {
        self.solution.eval(t).map(|y| [y[0], y[1], y[2]])
    }
}

/// Integrate the reduced magnetic flow `q̇ = √(2E)(cos θ, sin θ)`,
/// `θ̇ = −F(q)`. A negative duration integrates backwards.
pub fn flow(
    field: &MagneticField,
    state: &ReducedState,
    stop: Stop,
    ctl: &StepControl,
) -> Result<Trajectory, MagneticError> {
    let speed = state.speed();
    let sys = |_t: f64, s: &Augmented| rhs(field, speed, s);
    let y0 = [state.q1, state.q2, state.theta, 0.0, 0.0];
    let target = state.theta;
    let sol = match stop {
        Stop::Duration(d) => integrate(&sys, 0.0, y0, d, ctl, None)?,
        Stop::ThetaSpan(span) => {
            if !(span > 0.0) {
                return Err(MagneticError::InvalidStop(span));
            }
            // θ̇ ≤ −F̲ bounds the time needed; pad generously.
            let horizon = 2.0 * span / field.f_min + 1.0;
            let ev = move |_t: f64, s: &Augmented| s[2] - (target - span);
            integrate(&sys, 0.0, y0, horizon, ctl, Some(&ev))?
        }
    };
    Ok(Trajectory {
        t: sol.t.clone(),
        q1: sol.y.iter().map(|y| y[0]).collect(),
        q2: sol.y.iter().map(|y| y[1]).collect(),
        theta: sol.y.iter().map(|y| y[2]).collect(),
        energy: state.energy,
        solution: sol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnPoint {
    /// Image `ψ_E(q)` in `[0,1)²`.
    pub image: [f64; 2],
    /// Endpoint of the planar lift started at `q`.
    pub lifted: [f64; 2],
    pub return_time: f64,
    /// Integer part of the lift displacement, `round(lifted − q)`.
    pub lattice_displacement: [i64; 2],
}

impl ReturnPoint {
    /// Lifted displacement modulo the lattice, `lifted − q − n`.
    pub fn displacement(&self, q: [f64; 2]) -> [f64; 2] {
        [
            self.lifted[0] - q[0] - self.lattice_displacement[0] as f64,
            self.lifted[1] - q[1] - self.lattice_displacement[1] as f64,
        ]
    }
}

/// First return to the section `θ ≡ 0 mod 2π`: integrate from `θ = 0` until
/// `θ = −2π`.
pub fn poincare_return(
    field: &MagneticField,
    energy: f64,
    q: [f64; 2],
    ctl: &StepControl,
) -> Result<ReturnPoint, MagneticError> {
    let state = ReducedState::new(q[0], q[1], 0.0, energy)?;
    let traj = flow(field, &state, Stop::ThetaSpan(TAU), ctl)?;
    let (t, y) = traj
        .solution
        .event
        .expect("event-terminated integration records the event");
    let lifted = [y[0], y[1]];
    let n = [
        (lifted[0] - q[0]).round() as i64,
        (lifted[1] - q[1]).round() as i64,
    ];
    Ok(ReturnPoint {
        image: [wrap_unit(lifted[0]), wrap_unit(lifted[1])],
        lifted,
        return_time: t,
        lattice_displacement: n,
    })
}

#[cfg(test)]
mod tests {
    use super::super::field::FourierMode;
    use super::*;

    fn ctl() -> StepControl {
        StepControl::with_tol(1e-10)
    }

    #[test]
    fn larmor_circle() {
        let f0 = 3.0;
        let e = 0.02;
        let field = MagneticField::constant_field(f0).unwrap();
        let s = ReducedState::new(0.2, 0.3, 0.0, e).unwrap();
        let period = TAU / f0;
        let tr = flow(&field, &s, Stop::Duration(period), &ctl()).unwrap();
        let r = (2.0 * e).sqrt() / f0;
        // Clockwise circle; the center sits at distance r to the right-hand side.
        let (cx, cy) = (0.2, 0.3 - r);
        for i in 0..tr.t.len() {
            let d = ((tr.q1[i] - cx).powi(2) + (tr.q2[i] - cy).powi(2)).sqrt();
            assert!((d - r).abs() < 1e-10);
            assert!((tr.theta[i] + f0 * tr.t[i]).abs() < 1e-12);
        }
        let end = tr.final_state();
        assert!((end.q1 - 0.2).abs() < 1e-10 && (end.q2 - 0.3).abs() < 1e-10);
    }

    #[test]
    fn constant_field_return_is_identity() {
        for f0 in [1.5, 3.0] {
            let field = MagneticField::constant_field(f0).unwrap();
            let r = poincare_return(&field, 0.05, [0.7, 0.1], &ctl()).unwrap();
            assert!((r.image[0] - 0.7).abs() < 1e-10 && (r.image[1] - 0.1).abs() < 1e-10);
            assert!((r.return_time - TAU / f0).abs() < 1e-10);
            assert_eq!(r.lattice_displacement, [0, 0]);
        }
    }

    #[test]
    fn reversibility() {
        let field = MagneticField::new(
            4.0,
            vec![FourierMode::cos(1, 1, 0.7), FourierMode::cos(2, -1, 0.3)],
        )
        .unwrap();
        let s = ReducedState::new(0.31, 0.77, 0.4, 0.8).unwrap();
        let fwd = flow(&field, &s, Stop::Duration(3.0), &ctl()).unwrap();
        let mid = fwd.final_state();
        let back = flow(&field, &mid, Stop::Duration(-3.0), &ctl()).unwrap();
        let end = back.final_state();
        assert!((end.q1 - s.q1).abs() < 1e-8);
        assert!((end.q2 - s.q2).abs() < 1e-8);
        assert!((end.theta - s.theta).abs() < 1e-8);
    }

    #[test]
    fn theta_span_stop() {
        let field = MagneticField::new(2.0, vec![FourierMode::cos(1, 0, 0.5)]).unwrap();
        let s = ReducedState::new(0.0, 0.0, 1.0, 0.3).unwrap();
        let tr = flow(&field, &s, Stop::ThetaSpan(5.0), &ctl()).unwrap();
        assert!((tr.final_state().theta - (1.0 - 5.0)).abs() < 1e-10);
    }

    #[test]
    fn energy_must_be_positive() {
        assert!(ReducedState::new(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_unit(1.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert_eq!(wrap_unit(-1e-18), 0.0);
    }
}
