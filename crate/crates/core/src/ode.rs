//! Dormand–Prince 5(4) integrator with dense output and event location.
//!
//! The state dimension is a const generic so the small systems used across the
//! crate (3 to 6 components) stay on the stack. Integration runs forward or
//! backward in time depending on the sign of `t_end - t0`.

use thiserror::Error;

use crate::roots::brent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("event not reached before t = {0}")]
    EventNotReached(f64),
    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),
}

/// Right-hand side of an autonomous or time-dependent system `y' = f(t, y)`.
pub trait System<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F> System<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

/// A scalar event function; the integration stops at its first sign change.
pub type EventFn<'a, const N: usize> = &'a (dyn Fn(f64, &[f64; N]) -> f64 + Sync);

/// Continuous extension of a single accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let [r1, r2, r3, r4, r5] = [
                self.rc[0][i],
                self.rc[1][i],
                self.rc[2][i],
                self.rc[3][i],
                self.rc[4][i],
            ];
            out[i] = r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    /// Time and state at the located event, when an event function was given.
    pub event: Option<(f64, [f64; N])>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl<const N: usize> Solution<N> {
    pub fn t_final(&self) -> f64 {
        *self
            .t
            .last()
            .expect("solution always holds the initial point")
    }

    pub fn y_final(&self) -> [f64; N] {
        *self
            .y
            .last()
            .expect("solution always holds the initial point")
    }

    /// Interpolate inside the integrated span using the dense output.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (lo, hi) = self.span();
        if t < lo - 1e-15 || t > hi + 1e-15 {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.y[0]);
        }
        let forward = self.segments[0].h > 0.0;
        let idx = self
            .segments
            .partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        Some(seg.eval(t))
    }

    pub fn span(&self) -> (f64, f64) {
        let a = self.t[0];
        let b = self.t_final();
        (a.min(b), a.max(b))
    }
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

struct Step<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: f64,
    rc: [[f64; N]; 5],
}

fn dp_step<const N: usize, S: System<N> + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    ctl: &StepControl,
) -> Step<N> {
    let k2 = sys.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = sys.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = sys.rhs(
        t + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = sys.rhs(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = sys.rhs(
        t + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y1 = axpy(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = sys.rhs(t + h, &y1);

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = ctl.atol + ctl.rtol * y[i].abs().max(y1[i].abs());
        sum += (e / sc) * (e / sc);
    }
    let err = (sum / N as f64).sqrt();

    let mut rc = [[0.0; N]; 5];
    for i in 0..N {
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        rc[0][i] = y[i];
        rc[1][i] = dy;
        rc[2][i] = bspl;
        rc[3][i] = dy - h * k7[i] - bspl;
        rc[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step { y1, k7, err, rc }
}

fn initial_step<const N: usize, S: System<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    ctl: &StepControl,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = ctl.atol + ctl.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(ctl.h_max);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let f1 = sys.rhs(t0 + dir * h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = ctl.atol + ctl.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    h.min(100.0 * h).min(h1).min(ctl.h_max).max(ctl.h_min)
}

/// Integrate from `t0` towards `t_end`. When `event` is given, integration
/// stops at the first sign change of the event function and the crossing is
/// located on the dense output to ~1e-14 in time, then re-stepped exactly.
pub fn integrate<const N: usize, S: System<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctl: &StepControl,
    event: Option<EventFn<'_, N>>,
) -> Result<Solution<N>, IntegrationError> {
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y0],
        segments: Vec::new(),
        event: None,
        steps_accepted: 0,
        steps_rejected: 0,
    };
    if t_end == t0 {
        return Ok(sol);
    }
    let dir = (t_end - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut h = initial_step(sys, t0, &y0, &k1, dir, ctl);
    let mut g_prev = event.map(|g| g(t, &y));
    let mut last_err: f64 = 1e-4;

    loop {
        if sol.steps_accepted + sol.steps_rejected >= ctl.max_steps {
            return Err(IntegrationError::TooManySteps(ctl.max_steps));
        }
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let step = dp_step(sys, t, &y, &k1, dir * h, ctl);
        if !step.err.is_finite() {
            return Err(IntegrationError::NonFinite(t));
        }
        if step.err <= 1.0 {
            // PI step-size controller (Hairer's beta = 0.04).
            let fac = 0.9 * step.err.max(1e-10).powf(-0.2 + 0.04 * 0.75) * last_err.powf(0.04);
            last_err = step.err.max(1e-4);
            let seg = DenseSegment {
                t0: t,
                h: dir * h,
                rc: step.rc,
            };
            let t_new = if last { t_end } else { t + dir * h };

            if let (Some(g), Some(gp)) = (event, g_prev) {
                let g_new = g(t_new, &step.y1);
                if gp != 0.0 && (g_new == 0.0 || gp.signum() != g_new.signum()) {
                    let te = brent(
                        |s| g(s, &seg.eval(s)),
                        t.min(t_new),
                        t.max(t_new),
                        1e-15 * (1.0 + t_new.abs()),
                        200,
                    )
                    .unwrap_or(t_new);
                    // Re-step from the segment start to the event time for full-order accuracy.
                    let he = te - t;
                    let ye = if he != 0.0 {
                        let s = dp_step(sys, t, &y, &k1, he, ctl);
                        sol.segments.push(DenseSegment {
                            t0: t,
                            h: he,
                            rc: s.rc,
                        });
                        s.y1
                    } else {
                        y
                    };
                    sol.t.push(te);
                    sol.y.push(ye);
                    sol.steps_accepted += 1;
                    sol.event = Some((te, ye));
                    return Ok(sol);
                }
                g_prev = Some(g_new);
            }

            sol.segments.push(seg);
            t = t_new;
            y = step.y1;
            k1 = step.k7;
            sol.t.push(t);
            sol.y.push(y);
            sol.steps_accepted += 1;
            if last {
                break;
            }
            h = (h * fac.clamp(0.2, 10.0)).min(ctl.h_max);
        } else {
            sol.steps_rejected += 1;
            let fac = 0.9 * step.err.powf(-0.2);
            h *= fac.clamp(0.2, 1.0);
            if h < ctl.h_min {
                return Err(IntegrationError::StepFailure { t, h });
            }
        }
    }
    if event.is_some() {
        return Err(IntegrationError::EventNotReached(t_end));
    }
    Ok(sol)
}
