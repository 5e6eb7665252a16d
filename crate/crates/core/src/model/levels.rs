use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::profile::RadialProfile;
use super::ModelError;
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    /// Slope decreasing (`α″ < 0`).
    C,
    /// Slope increasing (`α″ > 0`).
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Plus,
    Zero,
    Minus,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Zero => "zero",
            Family::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionData {
    pub m: u32,
    pub n: u32,
}

impl DimensionData {
    pub fn new(m: u32, n: u32) -> Result<Self, ModelError> {
        if m == 0 || n == 0 {
            return Err(ModelError::InvalidDimensions { m, n });
        }
        Ok(Self { m, n })
    }
}

/// A level `‖z‖² = c` of 1-periodic orbits, where `α′(c) = −kπ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicLevel {
    pub level: f64,
    pub multiplicity: u32,
    pub branch: Branch,
    /// `α(c) + kπc`
    pub action: f64,
    /// `|α′(c) + kπ|` at the stored root.
    pub residual: f64,
    pub relative_index: Option<i64>,
}

/// Roots of `α′(c) = −kπ` on each monotone piece, for every `k ≥ 1` up to
/// `sup|α′|/π`. Constant orbits (the plateau and the flat tail) are not
/// listed. Output is ordered by branch, then multiplicity, then level.
pub fn enumerate_periodic_levels(
    profile: &RadialProfile,
) -> Result<Vec<PeriodicLevel>, ModelError> {
    let mut out = Vec::new();
    for (i, p) in profile.pieces().iter().enumerate() {
        if p.is_constant_slope() {
            if p.slope0 != 0.0 {
                let k = (-p.slope0 / PI).round();
                if k >= 1.0 && (p.slope0 + k * PI).abs() < super::profile::RESONANCE_MARGIN {
                    return Err(ModelError::ResonantSlope {
                        piece: i,
                        slope: p.slope0,
                    });
                }
            }
            continue;
        }
        let (lo, hi) = if p.slope0 < p.slope1 {
            (p.slope0, p.slope1)
        } else {
            (p.slope1, p.slope0)
        };
        let branch = if p.slope1 < p.slope0 {
            Branch::C
        } else {
            Branch::D
        };
        // Multiples of −π strictly inside (lo, hi), or touching an endpoint
        // of the piece where the slope is −kπ (counted on this piece only if
        // it is the piece's interior-facing end).
        let k_first = (-hi / PI).ceil().max(1.0) as u32;
        let k_last = (-lo / PI).floor() as u32;
        for k in k_first..=k_last {
            let target = -(k as f64) * PI;
            if target <= lo || target >= hi {
                // Slope hits −kπ only at a knot; the neighbouring constant
                // piece would be resonant, and transitions share knots, so
                // attribute it to the piece where it is the start.
                if !(target == p.slope0 && p.slope0 != p.slope1) {
                    continue;
                }
            }
            let f = |s: f64| p.slope(s) - target;
            let mut c = if f(p.s0) == 0.0 {
                p.s0
            } else if f(p.s1) == 0.0 {
                p.s1
            } else {
                brent(f, p.s0, p.s1, 1e-17, 300).ok_or(ModelError::RootNotFound { k })?
            };
            // One Newton polish on the smooth piece.
            let curv = p.curvature(c);
            if curv != 0.0 {
                let next = c - f(c) / curv;
                if next > p.s0 && next < p.s1 && f(next).abs() < f(c).abs() {
                    c = next;
                }
            }
            let residual = f(c).abs();
            out.push(PeriodicLevel {
                level: c,
                multiplicity: k,
                branch,
                action: profile.value(c) + k as f64 * PI * c,
                residual,
                relative_index: None,
            });
        }
    }
    out.sort_by(|a, b| {
        a.branch
            .cmp(&b.branch)
            .then(a.multiplicity.cmp(&b.multiplicity))
            .then(a.level.total_cmp(&b.level))
    });
    Ok(out)
}

/// Relative index of a level family.
pub fn relative_index(branch: Branch, k: u32, dims: DimensionData, family: Family) -> i64 {
    let (k, m, n) = (k as i64, dims.m as i64, dims.n as i64);
    match (family, branch) {
        (Family::Plus, Branch::C) => (2 * k - 1) * n - m + 1,
        (Family::Plus, Branch::D) => (2 * k - 1) * n - m,
        (Family::Zero | Family::Minus, Branch::C) => (2 * k - 1) * (m + n) + 1,
        (Family::Zero | Family::Minus, Branch::D) => (2 * k - 1) * (m + n),
    }
}

/// Enumerate and attach indices.
pub fn indexed_levels(
    profile: &RadialProfile,
    dims: DimensionData,
    family: Family,
) -> Result<Vec<PeriodicLevel>, ModelError> {
    let mut levels = enumerate_periodic_levels(profile)?;
    for l in &mut levels {
        l.relative_index = Some(relative_index(l.branch, l.multiplicity, dims, family));
    }
    Ok(levels)
}

/// Where `a` and `b` sit inside their admissible intervals (0 = lower end,
/// 1 = upper end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlacement {
    pub a_position: f64,
    pub b_position: f64,
}

impl Default for WindowPlacement {
    fn default() -> Self {
        Self {
            a_position: 0.5,
            b_position: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionWindow {
    pub a: f64,
    pub b: f64,
    /// Admissible interval for `a`: `(max H, max G₋ + πr²)`.
    pub a_range: (f64, f64),
    /// Admissible interval for `b`: `(max G₊ + πR², max G₊ + 2πR²)`.
    pub b_range: (f64, f64),
}

/// Constants with `max H < a < max G₋ + πr² < max G₊ + πR² < b < max G₊ + 2πR²`.
pub fn choose_window(
    max_h: f64,
    max_g_minus: f64,
    max_g_plus: f64,
    r: f64,
    big_r: f64,
    placement: WindowPlacement,
) -> Result<ActionWindow, ModelError> {
    let infeasible = |s: &str| Err(ModelError::Infeasible(s.to_string()));
    let cap = PI * big_r * big_r;
    if max_h <= cap {
        return Err(ModelError::HypothesisViolation { max_h, bound: cap });
    }
    for (name, pos) in [
        ("a_position", placement.a_position),
        ("b_position", placement.b_position),
    ] {
        if !(pos > 0.0 && pos < 1.0) {
            return Err(ModelError::InvalidProfile(format!(
                "{name} must lie in (0, 1), got {pos}"
            )));
        }
    }
    if !(r > 0.0) {
        return infeasible("r > 0");
    }
    if r >= big_r {
        return infeasible("r < R");
    }
    if max_g_minus >= max_h {
        return infeasible("max(G-) < max(H)");
    }
    if max_h >= max_g_plus {
        return infeasible("max(H) < max(G+)");
    }
    let a_hi = max_g_minus + PI * r * r;
    if a_hi <= max_h {
        return infeasible("max(H) < max(G-) + pi r^2");
    }
    let b_lo = max_g_plus + cap;
    if a_hi >= b_lo {
        return infeasible("max(G-) + pi r^2 < max(G+) + pi R^2");
    }
    let b_hi = max_g_plus + 2.0 * cap;
    Ok(ActionWindow {
        a: max_h + placement.a_position * (a_hi - max_h),
        b: b_lo + placement.b_position * (b_hi - b_lo),
        a_range: (max_h, a_hi),
        b_range: (b_lo, b_hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowClass {
    Below,
    Inside,
    Above,
}

pub fn classify_action(action: f64, window: &ActionWindow) -> WindowClass {
    if action <= window.a {
        WindowClass::Below
    } else if action >= window.b {
        WindowClass::Above
    } else {
        WindowClass::Inside
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct WindowPartition {
    pub below: Vec<PeriodicLevel>,
    pub inside: Vec<PeriodicLevel>,
    pub above: Vec<PeriodicLevel>,
}

pub fn window_classification(levels: &[PeriodicLevel], window: &ActionWindow) -> WindowPartition {
    let mut out = WindowPartition::default();
    for l in levels {
        match classify_action(l.action, window) {
            WindowClass::Below => out.below.push(*l),
            WindowClass::Inside => out.inside.push(*l),
            WindowClass::Above => out.above.push(*l),
        }
    }
    out
}

/// True iff the levels outside the window are exactly the `k = 1` D-levels
/// and the C-levels with `k ≥ 2`.
pub fn excludes_expected(levels: &[PeriodicLevel], window: &ActionWindow) -> bool {
    levels.iter().all(|l| {
        let expected_out = match l.branch {
            Branch::D => l.multiplicity == 1,
            Branch::C => l.multiplicity >= 2,
        };
        (classify_action(l.action, window) != WindowClass::Inside) == expected_out
    })
}

#[cfg(test)]
mod tests {
    use super::super::profile::Segment;
    use super::*;

    #[test]
    fn table_rows() {
        let d = DimensionData::new(1, 1).unwrap();
        assert_eq!(relative_index(Branch::C, 1, d, Family::Plus), 1);
        assert_eq!(relative_index(Branch::D, 1, d, Family::Plus), 0);
        assert_eq!(relative_index(Branch::C, 1, d, Family::Zero), 3);
        assert_eq!(relative_index(Branch::D, 2, d, Family::Zero), 6);
        assert_eq!(relative_index(Branch::C, 2, d, Family::Minus), 7);
        assert_eq!(relative_index(Branch::D, 1, d, Family::Minus), 2);
        let d = DimensionData::new(3, 2).unwrap();
        assert_eq!(relative_index(Branch::C, 2, d, Family::Plus), 6 - 3 + 1);
        assert!(DimensionData::new(0, 1).is_err());
    }

    #[test]
    fn two_and_a_half_pi_descent() {
        // Slope descends continuously from 0 to −2.5π and back.
        let p = RadialProfile::from_segments(
            1.0,
            0.2,
            &[
                Segment {
                    width: 0.3,
                    end_slope: -2.5 * PI,
                },
                Segment {
                    width: 0.3,
                    end_slope: 0.0,
                },
            ],
        )
        .unwrap();
        let lv = enumerate_periodic_levels(&p).unwrap();
        let summary: Vec<(Branch, u32)> = lv.iter().map(|l| (l.branch, l.multiplicity)).collect();
        assert_eq!(
            summary,
            vec![
                (Branch::C, 1),
                (Branch::C, 2),
                (Branch::D, 1),
                (Branch::D, 2)
            ]
        );
        for l in &lv {
            assert!(l.residual < 1e-12);
            assert!((p.slope(l.level) + l.multiplicity as f64 * PI).abs() < 1e-12);
            assert!(
                (l.action - (p.value(l.level) + l.multiplicity as f64 * PI * l.level)).abs()
                    < 1e-15
            );
        }
        // C: deeper multiples sit further out; D: further in.
        assert!(lv[0].level < lv[1].level);
        assert!(lv[2].level > lv[3].level);
        assert!(p.value(lv[0].level) > p.value(lv[1].level));
    }

    #[test]
    fn admissible_profile_has_no_levels() {
        let p = RadialProfile::with_slope(2.0, 1.0, 0.9 * PI, 0.1, 0.1, 0.0).unwrap();
        assert!(enumerate_periodic_levels(&p).unwrap().is_empty());
        assert!(enumerate_periodic_levels(&RadialProfile::plateau(1.0, 1.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn minus_profile_levels() {
        let r = 0.95f64.sqrt();
        let p = RadialProfile::with_slope(3.0, r, 1.5 * PI, 0.05, 0.05, 0.0).unwrap();
        let lv = enumerate_periodic_levels(&p).unwrap();
        assert_eq!(lv.len(), 2);
        assert_eq!((lv[0].branch, lv[0].multiplicity), (Branch::C, 1));
        assert_eq!((lv[1].branch, lv[1].multiplicity), (Branch::D, 1));
    }

    #[test]
    fn window_midpoints() {
        let w = choose_window(4.0, 3.95, 4.05, 0.5, 1.0, WindowPlacement::default()).unwrap();
        assert!((w.a - 0.5 * (4.0 + 3.95 + PI / 4.0)).abs() < 1e-15);
        assert!((w.b - 0.5 * (4.05 + PI + 4.05 + 2.0 * PI)).abs() < 1e-14);
        let ineq = [
            4.0 < w.a,
            w.a < 3.95 + PI * 0.25,
            3.95 + PI * 0.25 < 4.05 + PI,
            4.05 + PI < w.b,
            w.b < 4.05 + 2.0 * PI,
        ];
        assert!(ineq.iter().all(|&x| x));
    }

    #[test]
    fn window_errors() {
        assert!(matches!(
            choose_window(3.0, 2.9, 3.1, 0.5, 1.0, WindowPlacement::default()),
            Err(ModelError::HypothesisViolation { .. })
        ));
        match choose_window(4.0, 3.95, 4.05, 1.0, 1.0, WindowPlacement::default()) {
            Err(ModelError::Infeasible(s)) => assert!(s.contains("r < R")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            choose_window(4.0, 4.1, 4.05, 0.5, 1.0, WindowPlacement::default()),
            Err(ModelError::Infeasible(_))
        ));
    }

    #[test]
    fn empty_classification() {
        let w = choose_window(4.0, 3.95, 4.05, 0.5, 1.0, WindowPlacement::default()).unwrap();
        let part = window_classification(&[], &w);
        assert!(part.below.is_empty() && part.inside.is_empty() && part.above.is_empty());
    }
}
