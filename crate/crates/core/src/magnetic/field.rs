use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::MagneticError;

/// One Fourier term `cos_coeff·cos(2π(m₁q₁+m₂q₂)) + sin_coeff·sin(…)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m1: i32,
    pub m2: i32,
    #[serde(default)]
    pub coeff_cos: f64,
    #[serde(default)]
    pub coeff_sin: f64,
}

impl FourierMode {
    pub fn cos(m1: i32, m2: i32, c: f64) -> Self {
        Self {
            m1,
            m2,
            coeff_cos: c,
            coeff_sin: 0.0,
        }
    }

    fn phase(&self, q1: f64, q2: f64) -> f64 {
        TAU * (self.m1 as f64 * q1 + self.m2 as f64 * q2)
    }

    fn is_trivial(&self) -> bool {
        (self.m1 == 0 && self.m2 == 0) || (self.coeff_cos == 0.0 && self.coeff_sin == 0.0)
    }
}

/// Field strength `F` of the magnetic form `F dq₁∧dq₂` on the torus
/// `ℝ²/ℤ²`, with cached extrema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagneticField {
    pub constant: f64,
    pub modes: Vec<FourierMode>,
    pub f_min: f64,
    pub f_max: f64,
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

impl MagneticField {
    /// Build the field and locate its extrema. Modes with `(m₁,m₂) = (0,0)`
    /// are folded into the constant (their sine part vanishes).
    pub fn new(constant: f64, modes: Vec<FourierMode>) -> Result<Self, MagneticError> {
        let mut c0 = constant;
        let mut kept = Vec::with_capacity(modes.len());
        for m in modes {
            if m.m1 == 0 && m.m2 == 0 {
                c0 += m.coeff_cos;
            } else if !m.is_trivial() {
                kept.push(m);
            }
        }
        if !c0.is_finite()
            || kept
                .iter()
                .any(|m| !m.coeff_cos.is_finite() || !m.coeff_sin.is_finite())
        {
            return Err(MagneticError::InvalidField("non-finite coefficient".into()));
        }
        let mut field = Self {
            constant: c0,
            modes: kept,
            f_min: c0,
            f_max: c0,
            variance_ratio: 1.0,
        };
        let ext = field_extrema(&field)?;
        field.f_min = ext.min;
        field.f_max = ext.max;
        field.variance_ratio = ext.ratio;
        Ok(field)
    }

    pub fn constant_field(f0: f64) -> Result<Self, MagneticError> {
        Self::new(f0, Vec::new())
    }

    pub fn is_constant(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eval(&self, q1: f64, q2: f64) -> f64 {
        self.modes.iter().fold(self.constant, |acc, m| {
            let ph = m.phase(q1, q2);
            acc + m.coeff_cos * ph.cos() + m.coeff_sin * ph.sin()
        })
    }

    pub fn gradient(&self, q1: f64, q2: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for m in &self.modes {
            let ph = m.phase(q1, q2);
            let d = TAU * (m.coeff_sin * ph.cos() - m.coeff_cos * ph.sin());
            g[0] += m.m1 as f64 * d;
            g[1] += m.m2 as f64 * d;
        }
        g
    }

    pub fn hessian(&self, q1: f64, q2: f64) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for m in &self.modes {
            let ph = m.phase(q1, q2);
            let d2 = -TAU * TAU * (m.coeff_cos * ph.cos() + m.coeff_sin * ph.sin());
            let (a, b) = (m.m1 as f64, m.m2 as f64);
            h[0][0] += a * a * d2;
            h[0][1] += a * b * d2;
            h[1][1] += b * b * d2;
        }
        h[1][0] = h[0][1];
        h
    }

    /// `G(q₁,q₂) = ∫₀^{q₁} F(s,q₂) ds`, so that `d(G dq₂) = F dq₁∧dq₂`.
    pub fn primitive_q1(&self, q1: f64, q2: f64) -> f64 {
        self.modes.iter().fold(self.constant * q1, |acc, m| {
            let ph = m.phase(q1, q2);
            if m.m1 == 0 {
                acc + q1 * (m.coeff_cos * ph.cos() + m.coeff_sin * ph.sin())
            } else {
                let ph0 = m.phase(0.0, q2);
                let w = TAU * m.m1 as f64;
                acc + (m.coeff_cos * (ph.sin() - ph0.sin()) - m.coeff_sin * (ph.cos() - ph0.cos()))
                    / w
            }
        })
    }

    /// `H(q₁,q₂) = ∫₀^{q₂} F(q₁,s) ds`, so that `d(−H dq₁) = F dq₁∧dq₂`.
    pub fn primitive_q2(&self, q1: f64, q2: f64) -> f64 {
        self.modes.iter().fold(self.constant * q2, |acc, m| {
            let ph = m.phase(q1, q2);
            if m.m2 == 0 {
                acc + q2 * (m.coeff_cos * ph.cos() + m.coeff_sin * ph.sin())
            } else {
                let ph0 = m.phase(q1, 0.0);
                let w = TAU * m.m2 as f64;
                acc + (m.coeff_cos * (ph.sin() - ph0.sin()) - m.coeff_sin * (ph.cos() - ph0.cos()))
                    / w
            }
        })
    }

    fn max_mode(&self) -> i32 {
        self.modes
            .iter()
            .map(|m| m.m1.abs().max(m.m2.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Newton iteration on `∇F = 0` from a grid candidate.
fn polish(field: &MagneticField, mut q: [f64; 2]) -> [f64; 2] {
    for _ in 0..30 {
        let g = field.gradient(q[0], q[1]);
        let h = field.hessian(q[0], q[1]);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let fro2 = h[0][0].powi(2) + 2.0 * h[0][1].powi(2) + h[1][1].powi(2);
        if fro2 < 1e-28 {
            break;
        }
        // Critical lines (e.g. a single Fourier mode) make the Hessian rank
        // one; the pseudo-inverse step moves across the line.
        let (dx, dy) = if det.abs() > 1e-10 * fro2 {
            (
                (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                (h[0][0] * g[1] - h[1][0] * g[0]) / det,
            )
        } else {
            (
                (h[0][0] * g[0] + h[0][1] * g[1]) / fro2,
                (h[0][1] * g[0] + h[1][1] * g[1]) / fro2,
            )
        };
        q[0] -= dx;
        q[1] -= dy;
        if dx.abs().max(dy.abs()) < 1e-15 {
            break;
        }
    }
    q
}

/// Minimum, maximum and ratio `F̄/F̲`: dense grid scan, then Newton on the
/// gradient from every discrete local extremum.
pub fn field_extrema(field: &MagneticField) -> Result<Extrema, MagneticError> {
    if field.is_constant() {
        let c = field.constant;
        if c <= 0.0 {
            return Err(MagneticError::NondegeneracyViolation { min: c });
        }
        return Ok(Extrema {
            min: c,
            max: c,
            ratio: 1.0,
        });
    }
    let n = 64usize.max(16 * field.max_mode() as usize);
    let h = 1.0 / n as f64;
    let grid: Vec<f64> = (0..n * n)
        .map(|idx| field.eval((idx / n) as f64 * h, (idx % n) as f64 * h))
        .collect();
    let at = |i: usize, j: usize| grid[(i % n) * n + (j % n)];
    let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            fmin = fmin.min(v);
            fmax = fmax.max(v);
            let nb = [
                at(i + 1, j),
                at(i + n - 1, j),
                at(i, j + 1),
                at(i, j + n - 1),
                at(i + 1, j + 1),
                at(i + n - 1, j + n - 1),
                at(i + 1, j + n - 1),
                at(i + n - 1, j + 1),
            ];
            let is_min = nb.iter().all(|&w| v <= w);
            let is_max = nb.iter().all(|&w| v >= w);
            if is_min || is_max {
                let q = polish(field, [i as f64 * h, j as f64 * h]);
                // Only accept refinements that stay near the seed cell.
                if (q[0] - i as f64 * h).abs() < 2.0 * h && (q[1] - j as f64 * h).abs() < 2.0 * h {
                    let f = field.eval(q[0], q[1]);
                    fmin = fmin.min(f);
                    fmax = fmax.max(f);
                }
            }
        }
    }
    if fmin <= 0.0 {
        return Err(MagneticError::NondegeneracyViolation { min: fmin });
    }
    Ok(Extrema {
        min: fmin,
        max: fmax,
        ratio: fmax / fmin,
    })
}
