//! Box curves and the area bound for closed constant-speed planar curves with
//! positive curvature.
//!
//! A curve is described by its speed `v`, its turning rate `K(t) = θ'(t)`
//! (the geometric curvature is `K / v`) and its duration `T`. The associated
//! positive box curve is built from the y-extremes (where `θ ≡ 0 mod π`) and
//! the x-extremes (where `θ ≡ π/2 mod π`), and it circumscribes the curve.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{integrate, IntegrationError, StepControl};
use crate::roots::brent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curvature must be positive (minimum K = {min})")]
    NonPositiveCurvature { min: f64 },
    #[error("total turning θ(T)/2π = {turns} is not an integer")]
    NonIntegerRotation { turns: f64 },
    #[error("curve is not closed: endpoint gap {gap:e}")]
    NotClosed { gap: f64 },
    #[error("invalid box curve: {0}")]
    InvalidBox(String),
    #[error("invalid curve samples: {0}")]
    InvalidSamples(String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Turning rate `K(t) = mean + Σ a_n cos(2πnt/T) + b_n sin(2πnt/T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub mean: f64,
    /// `(n, a_n, b_n)`
    #[serde(default)]
    pub harmonics: Vec<(u32, f64, f64)>,
    pub period: f64,
}

impl CurvatureProfile {
    pub fn constant(k: f64, period: f64) -> Self {
        Self {
            mean: k,
            harmonics: Vec::new(),
            period,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        self.harmonics.iter().fold(self.mean, |acc, &(n, a, b)| {
            let ph = w * n as f64 * t;
            acc + a * ph.cos() + b * ph.sin()
        })
    }

    fn derivative(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        self.harmonics.iter().fold(0.0, |acc, &(n, a, b)| {
            let wn = w * n as f64;
            let ph = wn * t;
            acc + wn * (b * ph.cos() - a * ph.sin())
        })
    }

    /// Minimum over one period: dense scan followed by a bracketed refinement
    /// on the derivative.
    pub fn minimum(&self) -> f64 {
        if self.harmonics.is_empty() {
            return self.mean;
        }
        let nmax = self.harmonics.iter().map(|h| h.0).max().unwrap_or(1).max(1);
        let m = 64 * nmax as usize;
        let dt = self.period / m as f64;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let t0 = i as f64 * dt;
            best = best.min(self.eval(t0));
            let (d0, d1) = (self.derivative(t0), self.derivative(t0 + dt));
            if d0 < 0.0 && d1 >= 0.0 {
                if let Some(tc) = brent(|t| self.derivative(t), t0, t0 + dt, 1e-15, 200) {
                    best = best.min(self.eval(tc));
                }
            }
        }
        best
    }
}

/// Sampled rotation angle `θ(t) = ∫₀ᵗ K`.
#[derive(Debug, Clone)]
pub struct RotationTrace {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub rotation_number: u32,
    pub k_min: f64,
}

/// Integrate `θ' = K(t)`, `θ(0) = 0` over `[0, T]` and report the number of
/// full turns.
pub fn integrate_rotation(
    profile: &CurvatureProfile,
    duration: f64,
    tol: f64,
) -> Result<RotationTrace, CurveError> {
    let k_min = profile.minimum();
    if k_min <= 0.0 {
        return Err(CurveError::NonPositiveCurvature { min: k_min });
    }
    let sys = |t: f64, _y: &[f64; 1]| [profile.eval(t)];
    let sol = integrate(
        &sys,
        0.0,
        [0.0],
        duration,
        &StepControl::with_tol(1e-13),
        None,
    )?;
    let total = sol.y_final()[0];
    let turns = total / TAU;
    let k = turns.round();
    if (turns - k).abs() > tol || k < 1.0 {
        return Err(CurveError::NonIntegerRotation { turns });
    }
    Ok(RotationTrace {
        t: sol.t.clone(),
        theta: sol.y.iter().map(|y| y[0]).collect(),
        rotation_number: k as u32,
        k_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureMode {
    /// Reject curves whose endpoint gap exceeds the tolerance.
    #[default]
    Strict,
    /// Subtract the mean velocity defect so the curve closes exactly.
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub samples_per_lap: usize,
    pub tol: f64,
    pub closure: ClosureMode,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            samples_per_lap: 2048,
            tol: 1e-6,
            closure: ClosureMode::Strict,
        }
    }
}

/// A sampled closed curve on a uniform time grid `t_i = i T / N`, `i = 0..=N`,
/// with exact derivatives at every sample.
#[derive(Debug, Clone)]
pub struct PlanarCurve {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    /// Turning rate `θ'` at each sample.
    pub turning: Vec<f64>,
    pub speed: f64,
    pub period: f64,
    pub rotation_number: u32,
    pub k_min: f64,
    /// `|ξ(T) - ξ(0)|` before any projection.
    pub closure_gap: f64,
    pub projected: bool,
}

fn hermite(t0: f64, t1: f64, f0: f64, f1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * f1
        + (s3 - s2) * h * d1
}

impl PlanarCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len() - 1;
        let h = self.period / n as f64;
        ((t / h).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn theta_at(&self, t: f64) -> f64 {
        let i = self.segment(t);
        hermite(
            self.t[i],
            self.t[i + 1],
            self.theta[i],
            self.theta[i + 1],
            self.turning[i],
            self.turning[i + 1],
            t,
        )
    }

    pub fn position_at(&self, t: f64) -> (f64, f64) {
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        (
            hermite(
                t0,
                t1,
                self.x[i],
                self.x[i + 1],
                self.dx[i],
                self.dx[i + 1],
                t,
            ),
            hermite(
                t0,
                t1,
                self.y[i],
                self.y[i + 1],
                self.dy[i],
                self.dy[i + 1],
                t,
            ),
        )
    }

    /// Signed area with multiplicity `∮ x dy` (periodic trapezoid rule, which
    /// is spectrally accurate on closed smooth curves).
    pub fn signed_area(&self) -> f64 {
        let n = self.t.len() - 1;
        let h = self.period / n as f64;
        (0..n).map(|i| self.x[i] * self.dy[i]).sum::<f64>() * h
    }

    /// Build a curve from uniformly spaced samples `(t, x, y)`. The last row
    /// may repeat the first. The data is rotated so the initial heading is
    /// along `+x`, which the box construction assumes.
    pub fn from_samples(t: &[f64], x: &[f64], y: &[f64], tol: f64) -> Result<Self, CurveError> {
        let bad = |m: &str| CurveError::InvalidSamples(m.to_string());
        if t.len() != x.len() || t.len() != y.len() {
            return Err(bad("column lengths differ"));
        }
        if t.len() < 16 {
            return Err(bad("need at least 16 samples"));
        }
        let step = t[1] - t[0];
        if step <= 0.0 {
            return Err(bad("time must increase"));
        }
        for w in t.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
                return Err(bad("time step is not constant"));
            }
        }
        let mut n = t.len();
        let closes = ((x[n - 1] - x[0]).powi(2) + (y[n - 1] - y[0]).powi(2)).sqrt() < tol;
        if closes {
            n -= 1;
        }
        let period = step * n as f64;
        let closure_gap = if closes {
            0.0
        } else {
            // Extrapolate one step past the end to measure closure.
            let gx = x[n - 1] + (x[n - 1] - x[n - 2]) - x[0];
            let gy = y[n - 1] + (y[n - 1] - y[n - 2]) - y[0];
            (gx * gx + gy * gy).sqrt()
        };
        if closure_gap > tol.max(1e-3 * step) {
            return Err(CurveError::NotClosed { gap: closure_gap });
        }
        // Eighth-order periodic central differences.
        const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let deriv = |f: &[f64], i: usize| -> f64 {
            let mut acc = 0.0;
            for (m, c) in C.iter().enumerate() {
                let o = m + 1;
                acc += c * (f[(i + o) % n] - f[(i + n - o) % n]);
            }
            acc / step
        };
        let vx: Vec<f64> = (0..n).map(|i| deriv(&x[..n], i)).collect();
        let vy: Vec<f64> = (0..n).map(|i| deriv(&y[..n], i)).collect();
        let speeds: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();
        let speed = speeds.iter().sum::<f64>() / n as f64;
        let dev = speeds.iter().map(|s| (s - speed).abs()).fold(0.0, f64::max);
        if dev > tol.max(1e-9) * speed.max(1.0) {
            return Err(bad(&format!("speed is not constant (deviation {dev:e})")));
        }
        let rot = -vy[0].atan2(vx[0]);
        let (c, s) = (rot.cos(), rot.sin());
        let xr: Vec<f64> = (0..n).map(|i| c * x[i] - s * y[i]).collect();
        let yr: Vec<f64> = (0..n).map(|i| s * x[i] + c * y[i]).collect();
        let dxr: Vec<f64> = (0..n).map(|i| c * vx[i] - s * vy[i]).collect();
        let dyr: Vec<f64> = (0..n).map(|i| s * vx[i] + c * vy[i]).collect();
        let mut theta = Vec::with_capacity(n + 1);
        let mut prev = 0.0;
        for i in 0..n {
            let raw = dyr[i].atan2(dxr[i]);
            let mut th = raw + TAU * ((prev - raw) / TAU).round();
            if i == 0 {
                th = 0.0;
            }
            theta.push(th);
            prev = th;
        }
        let total = {
            let raw = dyr[0].atan2(dxr[0]);
            raw + TAU * ((prev - raw) / TAU).round()
        };
        let turns = total / TAU;
        let k = turns.round();
        if k < 1.0 {
            return Err(CurveError::NonIntegerRotation { turns });
        }
        theta.push(TAU * k);
        let theta_ext: Vec<f64> = theta[..n].to_vec();
        // θ' from differences of the unwrapped angle (periodic after removing the trend).
        let trend = TAU * k / period;
        let detr: Vec<f64> = (0..n)
            .map(|i| theta_ext[i] - trend * i as f64 * step)
            .collect();
        let mut turning: Vec<f64> = (0..n).map(|i| deriv(&detr, i) + trend).collect();
        // The minimum usually falls between samples; refine with the parabola
        // through the discrete minimum and its neighbours.
        let imin = (0..n)
            .min_by(|&a, &b| turning[a].total_cmp(&turning[b]))
            .unwrap_or(0);
        let (ka, kb, kc) = (
            turning[(imin + n - 1) % n],
            turning[imin],
            turning[(imin + 1) % n],
        );
        let curv = ka - 2.0 * kb + kc;
        let k_min = if curv > 0.0 {
            kb - (ka - kc) * (ka - kc) / (8.0 * curv)
        } else {
            kb
        };
        if k_min <= 0.0 {
            return Err(CurveError::NonPositiveCurvature { min: k_min });
        }
        turning.push(turning[0]);
        let close = |v: &[f64]| {
            let mut out = v.to_vec();
            out.push(v[0]);
            out
        };
        Ok(Self {
            t: (0..=n).map(|i| i as f64 * step).collect(),
            x: close(&xr),
            y: close(&yr),
            theta,
            dx: close(&dxr),
            dy: close(&dyr),
            turning,
            speed,
            period,
            rotation_number: k as u32,
            k_min,
            closure_gap,
            projected: false,
        })
    }
}

/// Integrate `ξ' = v (cos θ, sin θ)`, `θ' = K(t)` from the origin.
pub fn curve_from_curvature(
    profile: &CurvatureProfile,
    speed: f64,
    duration: f64,
    opts: &CurveOptions,
) -> Result<PlanarCurve, CurveError> {
    let rot = integrate_rotation(profile, duration, opts.tol)?;
    let k = rot.rotation_number;
    let sys = |t: f64, s: &[f64; 3]| [profile.eval(t), speed * s[0].cos(), speed * s[0].sin()];
    let sol = integrate(
        &sys,
        0.0,
        [0.0, 0.0, 0.0],
        duration,
        &StepControl::with_tol(1e-13),
        None,
    )?;
    let end = sol.y_final();
    let gap = end[1].hypot(end[2]);
    let projected = match opts.closure {
        ClosureMode::Strict if gap > opts.tol => return Err(CurveError::NotClosed { gap }),
        ClosureMode::Strict => false,
        ClosureMode::Project => gap > 0.0,
    };
    let (gx, gy) = if projected {
        (end[1] / duration, end[2] / duration)
    } else {
        (0.0, 0.0)
    };
    let n = opts.samples_per_lap.max(64) * k as usize;
    let mut curve = PlanarCurve {
        t: Vec::with_capacity(n + 1),
        x: Vec::with_capacity(n + 1),
        y: Vec::with_capacity(n + 1),
        theta: Vec::with_capacity(n + 1),
        dx: Vec::with_capacity(n + 1),
        dy: Vec::with_capacity(n + 1),
        turning: Vec::with_capacity(n + 1),
        speed,
        period: duration,
        rotation_number: k,
        k_min: rot.k_min,
        closure_gap: gap,
        projected,
    };
    for i in 0..=n {
        let t = if i == n {
            duration
        } else {
            duration * i as f64 / n as f64
        };
        let s = if i == n {
            end
        } else {
            sol.eval(t).expect("inside span")
        };
        let (x, y) = if i == n && !projected {
            // Closed within tolerance: identify the endpoint with the start.
            (0.0, 0.0)
        } else {
            (s[1] - gx * t, s[2] - gy * t)
        };
        curve.t.push(t);
        curve.x.push(x);
        curve.y.push(y);
        curve.theta.push(s[0]);
        curve.dx.push(speed * s[0].cos() - gx);
        curve.dy.push(speed * s[0].sin() - gy);
        curve.turning.push(profile.eval(t));
    }
    Ok(curve)
}

/// Times where the heading is horizontal (`θ = jπ`, j = 0..=2k) and vertical
/// (`θ = π/2 + jπ`, j = 0..2k).
#[derive(Debug, Clone, PartialEq)]
pub struct Crossings {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

fn solve_heading(curve: &PlanarCurve, level: f64) -> f64 {
    let i = curve.theta.partition_point(|&th| th < level);
    if i == 0 {
        return curve.t[0];
    }
    if i >= curve.theta.len() {
        return curve.period;
    }
    let (a, b) = (curve.t[i - 1], curve.t[i]);
    let kmax = curve.turning[i - 1].max(curve.turning[i]).max(curve.k_min);
    let xtol = 1e-10 / kmax;
    brent(|t| curve.theta_at(t) - level, a, b, xtol.min(1e-12), 200).unwrap_or(b)
}

pub fn crossing_times(curve: &PlanarCurve) -> Crossings {
    let k = curve.rotation_number as usize;
    let mut horizontal = vec![0.0];
    for j in 1..2 * k {
        horizontal.push(solve_heading(curve, j as f64 * PI));
    }
    horizontal.push(curve.period);
    let vertical = (0..2 * k)
        .map(|j| solve_heading(curve, PI / 2.0 + j as f64 * PI))
        .collect();
    Crossings {
        horizontal,
        vertical,
    }
}

/// Positive box curve given by vertical lengths `a` and horizontal lengths
/// `b` (2k each). The first segment is vertical and points up; the first
/// horizontal segment points left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCurve {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub rotation_number: usize,
}

fn alternating_sum(v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(j, x)| if j % 2 == 0 { *x } else { -*x })
        .sum()
}

impl BoxCurve {
    /// Validate positivity and closure (alternating sums vanish within `tol`).
    pub fn new(a: Vec<f64>, b: Vec<f64>, tol: f64) -> Result<Self, CurveError> {
        if a.len() != b.len() || a.is_empty() || !a.len().is_multiple_of(2) {
            return Err(CurveError::InvalidBox(format!(
                "need 2k vertical and 2k horizontal lengths, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(CurveError::InvalidBox("lengths must be nonnegative".into()));
        }
        let scale = a.iter().chain(&b).cloned().fold(1.0, f64::max);
        let (sa, sb) = (alternating_sum(&a), alternating_sum(&b));
        if sa.abs() > tol * scale || sb.abs() > tol * scale {
            return Err(CurveError::InvalidBox(format!(
                "alternating sums do not vanish ({sa:e}, {sb:e})"
            )));
        }
        let k = a.len() / 2;
        Ok(Self {
            a,
            b,
            rotation_number: k,
        })
    }

    pub fn max_entry(&self) -> f64 {
        self.a.iter().chain(&self.b).cloned().fold(0.0, f64::max)
    }

    /// Corner points starting at the origin, closing back to it.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut pts = vec![(0.0, 0.0)];
        let (mut x, mut y) = (0.0, 0.0);
        for j in 0..self.a.len() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            y += sign * self.a[j];
            pts.push((x, y));
            x -= sign * self.b[j];
            pts.push((x, y));
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstruction {
    pub curve: BoxCurve,
    /// Indices (into `a` then `b`, as `("a"|"b", j)`) of segments shorter than
    /// the tolerance; they are kept, clamped to zero.
    pub degenerate: Vec<(char, usize)>,
    pub crossings: Crossings,
}

/// Box curve circumscribing `curve`: `a_j` from y-extremes between
/// consecutive horizontal-heading times, `b_j` from x-extremes between
/// consecutive vertical-heading times.
pub fn build_box_curve(curve: &PlanarCurve, tol: f64) -> Result<BoxConstruction, CurveError> {
    let cr = crossing_times(curve);
    let k = curve.rotation_number as usize;
    let ys: Vec<f64> = cr
        .horizontal
        .iter()
        .map(|&t| curve.position_at(t).1)
        .collect();
    let mut xs: Vec<f64> = cr
        .vertical
        .iter()
        .map(|&t| curve.position_at(t).0)
        .collect();
    xs.push(xs[0]);
    let mut degenerate = Vec::new();
    let mut a = Vec::with_capacity(2 * k);
    let mut b = Vec::with_capacity(2 * k);
    for j in 1..=2 * k {
        let mut aj = (ys[j] - ys[j - 1]).abs();
        if aj < tol {
            degenerate.push(('a', j - 1));
            aj = 0.0;
        }
        let mut bj = (xs[j] - xs[j - 1]).abs();
        if bj < tol {
            degenerate.push(('b', j - 1));
            bj = 0.0;
        }
        a.push(aj);
        b.push(bj);
    }
    let boxc = BoxCurve::new(a, b, tol.max(1e-9))?;
    Ok(BoxConstruction {
        curve: boxc,
        degenerate,
        crossings: cr,
    })
}

/// Enclosed area of a positive box curve,
/// `b₁ã₁ − b₂ã₂ + … + b_{2k−1}ã_{2k−1}` with `ã_i = Σ_{l≤i} (−1)^{l+1} a_l`,
/// oriented so the result is nonnegative.
pub fn box_area(boxc: &BoxCurve) -> f64 {
    let mut partial = 0.0;
    let mut area = 0.0;
    for (j, (a, b)) in boxc.a.iter().zip(&boxc.b).enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        partial += sign * a;
        area += sign * b * partial;
    }
    area.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBoundReport {
    pub rotation_number: u32,
    pub speed: f64,
    pub k_min: f64,
    pub area_curve: f64,
    pub area_box: f64,
    pub bound: f64,
    pub max_box_entry: f64,
    pub pass: bool,
}

/// Check `0 ≤ A(ξ) ≤ A(ξ̂) ≤ k·4(v/K̲)²`.
pub fn verify_curvature_area_bound(
    curve: &PlanarCurve,
    tol: f64,
) -> Result<CurveBoundReport, CurveError> {
    let boxc = build_box_curve(curve, tol)?;
    let area_curve = curve.signed_area().abs();
    let area_box = box_area(&boxc.curve);
    let k = curve.rotation_number;
    let r = curve.speed / curve.k_min;
    let bound = k as f64 * 4.0 * r * r;
    let signed = curve.signed_area();
    let pass = signed >= -tol && area_curve <= area_box + tol && area_box <= bound + tol;
    Ok(CurveBoundReport {
        rotation_number: k,
        speed: curve.speed,
        k_min: curve.k_min,
        area_curve,
        area_box,
        bound,
        max_box_entry: boxc.curve.max_entry(),
        pass,
    })
}

/// Random turning-rate profile whose curve closes by symmetry: the
/// oscillating part has period `T/N` with `N` not dividing `k`, so the
/// velocity integral over `[0, T]` is a sum of `N`-th roots of unity times a
/// common factor.
pub fn random_closed_profile<R: Rng + ?Sized>(
    rng: &mut R,
    rotation_number: u32,
    period: f64,
) -> CurvatureProfile {
    let k = rotation_number.max(1);
    let symmetry = (2..).find(|n| !k.is_multiple_of(*n)).unwrap_or(2);
    let mean = TAU * k as f64 / period;
    let modes = rng.random_range(1..=3u32);
    let budget = rng.random_range(0.1..0.85) * mean;
    let weights: Vec<f64> = (0..modes).map(|_| rng.random_range(0.1..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    let harmonics = weights
        .iter()
        .enumerate()
        .map(|(m, w)| {
            let amp = budget * w / wsum;
            let phase = rng.random_range(0.0..TAU);
            (
                symmetry * (m as u32 + 1),
                amp * phase.cos(),
                amp * phase.sin(),
            )
        })
        .collect();
    CurvatureProfile {
        mean,
        harmonics,
        period,
    }
}

/// Random positive box curve with `2k` entries per sequence.
pub fn random_box_curve<R: Rng + ?Sized>(rng: &mut R, k: usize) -> BoxCurve {
    let fill = |rng: &mut R| -> Vec<f64> {
        let odd: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let even_raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s_odd: f64 = odd.iter().sum();
        let s_even: f64 = even_raw.iter().sum();
        let mut out = Vec::with_capacity(2 * k);
        for j in 0..k {
            out.push(odd[j]);
            out.push(even_raw[j] * s_odd / s_even);
        }
        out
    };
    let a = fill(rng);
    let b = fill(rng);
    BoxCurve {
        a,
        b,
        rotation_number: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle(kc: f64, v: f64) -> PlanarCurve {
        let prof = CurvatureProfile::constant(kc, TAU);
        curve_from_curvature(&prof, v, TAU, &CurveOptions::default()).unwrap()
    }

    #[test]
    fn rotation_of_constant_curvature() {
        let r = integrate_rotation(&CurvatureProfile::constant(1.0, TAU), TAU, 1e-6).unwrap();
        assert_eq!(r.rotation_number, 1);
        assert!((r.theta.last().unwrap() - TAU).abs() < 1e-10);
        let r = integrate_rotation(&CurvatureProfile::constant(2.0, TAU), TAU, 1e-6).unwrap();
        assert_eq!(r.rotation_number, 2);
        assert!((r.theta.last().unwrap() - 2.0 * TAU).abs() < 1e-10);
    }

    #[test]
    fn nonpositive_curvature_rejected() {
        let prof = CurvatureProfile {
            mean: 1.0,
            harmonics: vec![(1, 0.0, 1.5)],
            period: TAU,
        };
        assert!(matches!(
            integrate_rotation(&prof, TAU, 1e-6),
            Err(CurveError::NonPositiveCurvature { .. })
        ));
    }

    #[test]
    fn fractional_turning_rejected() {
        let prof = CurvatureProfile::constant(1.1, TAU);
        assert!(matches!(
            integrate_rotation(&prof, TAU, 1e-6),
            Err(CurveError::NonIntegerRotation { .. })
        ));
    }

    #[test]
    fn unit_circle_closes() {
        let c = circle(1.0, 1.0);
        assert!(c.closure_gap < 1e-9);
        assert!((c.signed_area() - PI).abs() < 1e-9);
    }

    #[test]
    fn perturbed_profile_does_not_close() {
        let prof = CurvatureProfile {
            mean: 1.0,
            harmonics: vec![(1, 0.0, 0.9)],
            period: TAU,
        };
        let err = curve_from_curvature(&prof, 1.0, TAU, &CurveOptions::default()).unwrap_err();
        assert!(matches!(err, CurveError::NotClosed { gap } if gap > 1e-3));
        let opts = CurveOptions {
            closure: ClosureMode::Project,
            ..CurveOptions::default()
        };
        let c = curve_from_curvature(&prof, 1.0, TAU, &opts).unwrap();
        assert!(c.projected);
        assert!(c.x.last().unwrap().abs() < 1e-9 && c.y.last().unwrap().abs() < 1e-9);
    }

    #[test]
    fn circle_crossings() {
        let c = circle(1.0, 1.0);
        let cr = crossing_times(&c);
        assert!((cr.horizontal[1] - PI).abs() < 1e-9);
        assert!((cr.vertical[0] - PI / 2.0).abs() < 1e-9);
        assert!((cr.vertical[1] - 3.0 * PI / 2.0).abs() < 1e-9);
        let c2 = circle(2.0, 1.0);
        let cr2 = crossing_times(&c2);
        for j in 1..4 {
            assert!((cr2.horizontal[j] - j as f64 * PI / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_boxes() {
        let b = build_box_curve(&circle(1.0, 1.0), 1e-6).unwrap();
        for v in b.curve.a.iter().chain(&b.curve.b) {
            assert!((v - 2.0).abs() < 1e-9);
        }
        let b2 = build_box_curve(&circle(2.0, 1.0), 1e-6).unwrap();
        assert_eq!(b2.curve.a.len(), 4);
        for v in b2.curve.a.iter().chain(&b2.curve.b) {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn box_area_examples() {
        let b = BoxCurve::new(vec![2.0, 2.0], vec![2.0, 2.0], 1e-12).unwrap();
        assert_eq!(box_area(&b), 4.0);
        let b = BoxCurve::new(vec![1.0; 4], vec![1.0; 4], 1e-12).unwrap();
        assert_eq!(box_area(&b), 2.0);
        let c = 0.37;
        let b = BoxCurve::new(vec![c, c], vec![c, c], 1e-12).unwrap();
        assert!((box_area(&b) - c * c).abs() < 1e-15);
    }

    #[test]
    fn box_rejects_open_sequences() {
        assert!(BoxCurve::new(vec![1.0, 2.0], vec![1.0, 1.0], 1e-9).is_err());
        assert!(BoxCurve::new(vec![1.0], vec![1.0], 1e-9).is_err());
    }

    #[test]
    fn box_vertices_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_box_curve(&mut rng, 3);
        let v = b.vertices();
        let last = v.last().unwrap();
        assert!(last.0.abs() < 1e-12 && last.1.abs() < 1e-12);
        // Shoelace on the vertices agrees with the alternating formula.
        let shoelace: f64 = v
            .windows(2)
            .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
            .sum::<f64>()
            / 2.0;
        assert!((shoelace.abs() - box_area(&b)).abs() < 1e-12);
    }

    #[test]
    fn circle_bound_report() {
        let r = verify_curvature_area_bound(&circle(1.0, 1.0), 1e-6).unwrap();
        assert!((r.area_curve - PI).abs() < 1e-9);
        assert!((r.area_box - 4.0).abs() < 1e-9);
        assert!((r.bound - 4.0).abs() < 1e-12);
        assert!(r.pass);
        let r = verify_curvature_area_bound(&circle(2.0, 1.0), 1e-6).unwrap();
        assert!((r.area_curve - PI / 2.0).abs() < 1e-9);
        assert!((r.area_box - 2.0).abs() < 1e-9);
        assert!((r.bound - 2.0).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn sampled_circle_round_trip() {
        let n = 1024;
        let r = 0.75;
        let t: Vec<f64> = (0..=n).map(|i| TAU * i as f64 / n as f64).collect();
        // Start with heading along +y so the frame rotation is exercised.
        let x: Vec<f64> = t.iter().map(|s| r * s.cos()).collect();
        let y: Vec<f64> = t.iter().map(|s| r * s.sin()).collect();
        let c = PlanarCurve::from_samples(&t, &x, &y, 1e-6).unwrap();
        assert_eq!(c.rotation_number, 1);
        assert!((c.speed - r).abs() < 1e-9);
        assert!((c.k_min - 1.0).abs() < 1e-8);
        let rep = verify_curvature_area_bound(&c, 1e-6).unwrap();
        assert!((rep.area_curve - PI * r * r).abs() < 1e-9);
        assert!((rep.area_box - 4.0 * r * r).abs() < 1e-8);
        assert!(rep.pass);
    }

    #[test]
    fn random_profiles_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=3 {
            let prof = random_closed_profile(&mut rng, k, 5.0);
            assert!(prof.minimum() > 0.0);
            let c = curve_from_curvature(&prof, 1.3, 5.0, &CurveOptions::default()).unwrap();
            assert_eq!(c.rotation_number, k);
            assert!(c.closure_gap < 1e-9, "gap {}", c.closure_gap);
        }
    }
}
