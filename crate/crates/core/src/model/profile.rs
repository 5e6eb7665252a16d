use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Margin keeping constant slopes away from `πℤ`.
pub const RESONANCE_MARGIN: f64 = 1e-6 * PI;

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// One polynomial piece on `[s0, s1]`. The slope moves from `slope0` to
/// `slope1` along the smoothstep `3τ² − 2τ³`, so `α` is a quartic in `τ`
/// and consecutive pieces join in `C²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub s0: f64,
    pub s1: f64,
    pub slope0: f64,
    pub slope1: f64,
    /// `α(s0)`
    pub value0: f64,
}

impl Piece {
    fn width(&self) -> f64 {
        self.s1 - self.s0
    }

    fn tau(&self, s: f64) -> f64 {
        ((s - self.s0) / self.width()).clamp(0.0, 1.0)
    }

    pub fn is_constant_slope(&self) -> bool {
        self.slope0 == self.slope1
    }

    pub fn value(&self, s: f64) -> f64 {
        let h = self.width();
        let t = self.tau(s);
        let d = self.slope1 - self.slope0;
        self.value0 + self.slope0 * h * t + d * h * (t * t * t - 0.5 * t * t * t * t)
    }

    pub fn slope(&self, s: f64) -> f64 {
        self.slope0 + (self.slope1 - self.slope0) * smooth(self.tau(s))
    }

    pub fn curvature(&self, s: f64) -> f64 {
        let t = self.tau(s);
        (self.slope1 - self.slope0) * 6.0 * t * (1.0 - t) / self.width()
    }

    fn end_value(&self) -> f64 {
        self.value0 + 0.5 * (self.slope0 + self.slope1) * self.width()
    }
}

/// Segment of a profile specification: over `width`, the slope moves to
/// `end_slope` (a constant-slope segment repeats the previous slope).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub width: f64,
    pub end_slope: f64,
}

/// Radial profile `α: [0, R²] → [0, ∞)`; the Hamiltonian is `α(‖z‖²)`,
/// extended by zero beyond `R²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    radius: f64,
    plateau_end: f64,
    max_value: f64,
    pieces: Vec<Piece>,
}

impl RadialProfile {
    /// Build from a plateau `[0, P²]` followed by `segments` that must end
    /// with slope zero. `α(0)` is chosen so that `α(R²) = 0`; any room left
    /// after the segments becomes a zero-slope tail.
    pub fn from_segments(
        radius: f64,
        plateau_end: f64,
        segments: &[Segment],
    ) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::InvalidProfile(m));
        if !(radius > 0.0) {
            return bad(format!("radius must be positive, got {radius}"));
        }
        let r2 = radius * radius;
        if !(plateau_end >= 0.0) || plateau_end >= r2 {
            return bad(format!("plateau end {plateau_end} must lie in [0, R²)"));
        }
        if segments.is_empty() {
            return bad("at least one segment is required".into());
        }
        let mut pieces = Vec::with_capacity(segments.len() + 2);
        if plateau_end > 0.0 {
            pieces.push(Piece {
                s0: 0.0,
                s1: plateau_end,
                slope0: 0.0,
                slope1: 0.0,
                value0: 0.0,
            });
        }
        let mut s = plateau_end;
        let mut slope = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.width > 0.0) {
                return bad(format!("segment {i}: width must be positive"));
            }
            if seg.end_slope > 0.0 || !seg.end_slope.is_finite() {
                return bad(format!("segment {i}: slopes must be nonpositive"));
            }
            pieces.push(Piece {
                s0: s,
                s1: s + seg.width,
                slope0: slope,
                slope1: seg.end_slope,
                value0: 0.0,
            });
            s += seg.width;
            slope = seg.end_slope;
        }
        if slope != 0.0 {
            return bad("the last segment must end with slope 0".into());
        }
        let excess = s - r2;
        if excess > 1e-12 * r2 {
            return bad(format!("segments extend past R² by {excess:e}"));
        }
        if excess < -1e-12 * r2 {
            pieces.push(Piece {
                s0: s,
                s1: r2,
                slope0: 0.0,
                slope1: 0.0,
                value0: 0.0,
            });
        } else if let Some(last) = pieces.last_mut() {
            last.s1 = r2;
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.is_constant_slope() && p.slope0 != 0.0 {
                let k = (-p.slope0 / PI).round();
                if k >= 1.0 && (p.slope0 + k * PI).abs() < RESONANCE_MARGIN {
                    return Err(ModelError::ResonantSlope {
                        piece: i,
                        slope: p.slope0,
                    });
                }
            }
        }
        // Fix α(0) from the total drop, then fill in knot values.
        let drop: f64 = pieces.iter().map(|p| -p.end_value()).sum();
        if !(drop > 0.0) {
            return bad("profile must decrease somewhere".into());
        }
        let mut v = drop;
        for p in &mut pieces {
            p.value0 = v;
            v = p.end_value();
        }
        let profile = Self {
            radius,
            plateau_end,
            max_value: drop,
            pieces,
        };
        let tail = profile.value(r2);
        if tail.abs() > 1e-12 * drop.max(1.0) {
            return bad(format!("α(R²) = {tail:e} does not vanish"));
        }
        Ok(profile)
    }

    /// Plateau, smooth descent over `descent` to slope `−S`, constant slope,
    /// smooth ascent back to zero over `ascent`, then a flat tail. `S` is
    /// solved for so that `α(0) = max_value`.
    pub fn standard(
        max_value: f64,
        radius: f64,
        plateau_end: f64,
        descent: f64,
        ascent: f64,
        tail: f64,
    ) -> Result<Self, ModelError> {
        let r2 = radius * radius;
        let flat = r2 - tail - plateau_end - descent - ascent;
        if !(flat > 0.0) {
            return Err(ModelError::InvalidProfile(format!(
                "no room for the constant-slope segment (length {flat})"
            )));
        }
        let slope = max_value / (flat + 0.5 * (descent + ascent));
        let mut profile = Self::from_segments(
            radius,
            plateau_end,
            &[
                Segment {
                    width: descent,
                    end_slope: -slope,
                },
                Segment {
                    width: flat,
                    end_slope: -slope,
                },
                Segment {
                    width: ascent,
                    end_slope: 0.0,
                },
            ],
        )?;
        profile.anchor(max_value)?;
        Ok(profile)
    }

    /// Re-derive knot values from an exact `α(0)` that agrees with the
    /// integrated drop up to rounding.
    fn anchor(&mut self, max_value: f64) -> Result<(), ModelError> {
        if (max_value - self.max_value).abs() > 1e-12 * max_value.abs().max(1.0) {
            return Err(ModelError::InvalidProfile(format!(
                "requested maximum {max_value} differs from the integrated drop {}",
                self.max_value
            )));
        }
        self.max_value = max_value;
        let mut v = max_value;
        for p in &mut self.pieces {
            p.value0 = v;
            v = p.end_value();
        }
        Ok(())
    }

    /// Same shape as [`RadialProfile::standard`] but with the constant slope
    /// `−slope` prescribed and the plateau solved for.
    pub fn with_slope(
        max_value: f64,
        radius: f64,
        slope: f64,
        descent: f64,
        ascent: f64,
        tail: f64,
    ) -> Result<Self, ModelError> {
        let r2 = radius * radius;
        let plateau = r2 - tail - 0.5 * (descent + ascent) - max_value / slope;
        if !(plateau > 0.0) {
            return Err(ModelError::InvalidProfile(format!(
                "slope {slope} too small to drop {max_value} within R² = {r2}"
            )));
        }
        Self::standard(max_value, radius, plateau, descent, ascent, tail)
    }

    /// Constant profile `α ≡ value` on `[0, R²]` (no descent).
    pub fn plateau(value: f64, radius: f64) -> Self {
        let r2 = radius * radius;
        Self {
            radius,
            plateau_end: r2,
            max_value: value,
            pieces: vec![Piece {
                s0: 0.0,
                s1: r2,
                slope0: 0.0,
                slope1: 0.0,
                value0: value,
            }],
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn plateau_end(&self) -> f64 {
        self.plateau_end
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_at(&self, s: f64) -> Option<&Piece> {
        if s < 0.0 || s > self.radius * self.radius {
            return None;
        }
        let i = self.pieces.partition_point(|p| p.s1 < s);
        self.pieces.get(i)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.max_value;
        }
        self.piece_at(s).map_or(0.0, |p| p.value(s))
    }

    pub fn slope(&self, s: f64) -> f64 {
        self.piece_at(s).map_or(0.0, |p| p.slope(s))
    }

    pub fn curvature(&self, s: f64) -> f64 {
        self.piece_at(s).map_or(0.0, |p| p.curvature(s))
    }

    /// `sup |α′|`; the slope is monotone on every piece, so the supremum is
    /// attained at a knot.
    pub fn sup_slope(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.slope0.abs().max(p.slope1.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub sup_slope: f64,
}

/// The flow of `α(‖z‖²)` has minimal period `π/|α′|` on a nonconstant
/// level, so there is no nonconstant orbit of period ≤ 1 iff `sup|α′| < π`.
pub fn admissibility_check(profile: &RadialProfile) -> Admissibility {
    let sup = profile.sup_slope();
    Admissibility {
        admissible: sup < PI,
        sup_slope: sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_profile_shape() {
        let p = RadialProfile::standard(4.05, 1.0, 0.53, 0.02, 0.02, 0.0).unwrap();
        assert_eq!(p.max_value(), 4.05);
        assert!((p.value(0.0) - 4.05).abs() < 1e-15);
        assert!((p.value(0.3) - 4.05).abs() < 1e-15);
        assert!(p.value(1.0).abs() < 1e-12);
        assert_eq!(p.value(1.5), 0.0);
        assert!((p.sup_slope() - 9.0).abs() < 1e-12);
        // Nonincreasing.
        let mut prev = f64::INFINITY;
        for i in 0..=2000 {
            let v = p.value(i as f64 / 2000.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn c2_joins() {
        let p = RadialProfile::standard(3.0, 1.2, 0.3, 0.1, 0.2, 0.05).unwrap();
        for w in p.pieces().windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!((a.value(a.s1) - b.value(b.s0)).abs() < 1e-14);
            assert!((a.slope(a.s1) - b.slope(b.s0)).abs() < 1e-14);
            assert!((a.curvature(a.s1) - b.curvature(b.s0)).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_prescribed() {
        let p = RadialProfile::with_slope(3.95, 0.95f64.sqrt(), 1.8 * PI, 0.02, 0.02, 0.0).unwrap();
        assert!((p.sup_slope() - 1.8 * PI).abs() < 1e-12);
        assert!((p.max_value() - 3.95).abs() < 1e-12);
    }

    #[test]
    fn resonant_slope_rejected() {
        let err = RadialProfile::from_segments(
            2.0,
            0.5,
            &[
                Segment {
                    width: 0.1,
                    end_slope: -PI,
                },
                Segment {
                    width: 1.0,
                    end_slope: -PI,
                },
                Segment {
                    width: 0.1,
                    end_slope: 0.0,
                },
            ],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::ResonantSlope { .. }));
    }

    #[test]
    fn admissibility_threshold() {
        let p = RadialProfile::with_slope(1.0, 1.0, 0.9 * PI, 0.05, 0.05, 0.0).unwrap();
        let a = admissibility_check(&p);
        assert!(a.admissible);
        assert!((a.sup_slope - 0.9 * PI).abs() < 1e-12);
        // A transition touching −π exactly is on the boundary and not admissible.
        let p = RadialProfile::from_segments(
            1.0,
            0.2,
            &[
                Segment {
                    width: 0.3,
                    end_slope: -PI,
                },
                Segment {
                    width: 0.3,
                    end_slope: 0.0,
                },
            ],
        )
        .unwrap();
        assert!(!admissibility_check(&p).admissible);
        assert!(admissibility_check(&RadialProfile::plateau(2.0, 1.0)).admissible);
    }

    #[test]
    fn invalid_profiles() {
        assert!(RadialProfile::standard(1.0, 1.0, 0.9, 0.1, 0.1, 0.0).is_err());
        assert!(RadialProfile::from_segments(
            1.0,
            0.1,
            &[Segment {
                width: 0.5,
                end_slope: -1.0
            }]
        )
        .is_err());
        assert!(RadialProfile::with_slope(10.0, 1.0, 1.0, 0.1, 0.1, 0.0).is_err());
    }
}
