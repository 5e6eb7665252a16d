//! Radial model Hamiltonians `α(‖z‖²)`: profiles, their 1-periodic level
//! sets with actions and relative indices, and the action window used to
//! separate them.

mod hopf;
mod levels;
mod profile;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hopf::{capacity_witness, hopf_flow, minimal_period, numeric_return_time, radial_flow};
pub use levels::{
    choose_window, classify_action, enumerate_periodic_levels, excludes_expected, indexed_levels,
    relative_index, window_classification, ActionWindow, Branch, DimensionData, Family,
    PeriodicLevel, WindowClass, WindowPartition, WindowPlacement,
};
pub use profile::{
    admissibility_check, Admissibility, Piece, RadialProfile, Segment, RESONANCE_MARGIN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("constant slope {slope} on piece {piece} is a multiple of π")]
    ResonantSlope { piece: usize, slope: f64 },
    #[error("no root of α′ = −{k}π found on a bracketing piece")]
    RootNotFound { k: u32 },
    #[error("m and n must be positive (got m = {m}, n = {n})")]
    InvalidDimensions { m: u32, n: u32 },
    #[error("infeasible: {0} fails")]
    Infeasible(String),
    #[error("max(H) = {max_h} must exceed pi R^2 = {bound}")]
    HypothesisViolation { max_h: f64, bound: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
}

/// Shape parameters shared by the named presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub max_h: f64,
    pub big_r: f64,
    pub r: f64,
    /// Offset of `max G₊ = max G₀` above and `max G₋` below `max H`.
    pub eps: f64,
    /// Plateau end of `G₊`/`G₀` as a fraction of `R²`.
    #[serde(default = "default_plateau_fraction")]
    pub plateau_fraction: f64,
    /// Constant slope of `G₋` in units of `π`.
    #[serde(default = "default_minus_slope")]
    pub minus_slope: f64,
    /// Width of each slope transition as a fraction of the squared radius.
    #[serde(default = "default_transition")]
    pub transition: f64,
}

fn default_plateau_fraction() -> f64 {
    0.53
}

fn default_minus_slope() -> f64 {
    1.8
}

fn default_transition() -> f64 {
    0.02
}

impl PresetParams {
    /// Geometry used by the acceptance run: `m = n = 1`, `R = 1`,
    /// `max H = 4`, `r² = 0.95`.
    pub fn acceptance() -> Self {
        Self {
            max_h: 4.0,
            big_r: 1.0,
            r: 0.95f64.sqrt(),
            eps: 0.05,
            plateau_fraction: default_plateau_fraction(),
            minus_slope: default_minus_slope(),
            transition: default_transition(),
        }
    }

    pub fn profile(&self, family: Family) -> Result<RadialProfile, ModelError> {
        match family {
            Family::Plus | Family::Zero => {
                let r2 = self.big_r * self.big_r;
                let w = self.transition * r2;
                RadialProfile::standard(
                    self.max_h + self.eps,
                    self.big_r,
                    self.plateau_fraction * r2,
                    w,
                    w,
                    0.0,
                )
            }
            Family::Minus => {
                let w = self.transition * self.r * self.r;
                RadialProfile::with_slope(
                    self.max_h - self.eps,
                    self.r,
                    self.minus_slope * std::f64::consts::PI,
                    w,
                    w,
                    0.0,
                )
            }
        }
    }

    pub fn window(&self, placement: WindowPlacement) -> Result<ActionWindow, ModelError> {
        choose_window(
            self.max_h,
            self.max_h - self.eps,
            self.max_h + self.eps,
            self.r,
            self.big_r,
            placement,
        )
    }
}

/// Placement that realizes the expected exclusions for
/// [`PresetParams::acceptance`]: `a` low enough to keep `c₋¹` inside, `b`
/// below the `k = 2` C-level of `G₊`.
pub fn acceptance_placement() -> WindowPlacement {
    WindowPlacement {
        a_position: 0.1,
        b_position: 0.05,
    }
}

/// One row of the level table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub family: Family,
    pub branch: Branch,
    pub k: u32,
    pub level: f64,
    pub action: f64,
    pub index: i64,
    pub window_class: WindowClass,
}

/// Levels of the three preset families with indices and window classes.
pub fn preset_table(
    params: &PresetParams,
    dims: DimensionData,
    placement: WindowPlacement,
) -> Result<(ActionWindow, Vec<LevelRow>), ModelError> {
    let window = params.window(placement)?;
    let mut rows = Vec::new();
    for family in [Family::Plus, Family::Zero, Family::Minus] {
        let profile = params.profile(family)?;
        for l in indexed_levels(&profile, dims, family)? {
            rows.push(LevelRow {
                family,
                branch: l.branch,
                k: l.multiplicity,
                level: l.level,
                action: l.action,
                index: l.relative_index.expect("indexed"),
                window_class: classify_action(l.action, &window),
            });
        }
    }
    Ok((window, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_geometry() {
        let params = PresetParams::acceptance();
        let dims = DimensionData::new(1, 1).unwrap();
        let (w, rows) = preset_table(&params, dims, acceptance_placement()).unwrap();
        let find = |f: Family, b: Branch, k: u32| {
            rows.iter()
                .find(|r| r.family == f && r.branch == b && r.k == k)
                .unwrap()
        };
        assert_eq!(
            find(Family::Plus, Branch::C, 1).window_class,
            WindowClass::Inside
        );
        assert_eq!(
            find(Family::Plus, Branch::D, 1).window_class,
            WindowClass::Below
        );
        assert_eq!(
            find(Family::Plus, Branch::C, 2).window_class,
            WindowClass::Above
        );
        assert_eq!(
            find(Family::Plus, Branch::D, 2).window_class,
            WindowClass::Inside
        );
        assert_eq!(
            find(Family::Minus, Branch::C, 1).window_class,
            WindowClass::Inside
        );
        assert!(w.a > params.max_h && w.b < params.max_h + params.eps + 2.0 * std::f64::consts::PI);
        for f in [Family::Plus, Family::Zero, Family::Minus] {
            let levels = indexed_levels(&params.profile(f).unwrap(), dims, f).unwrap();
            assert!(excludes_expected(&levels, &w), "{f:?}");
        }
    }

    #[test]
    fn midpoint_window_keeps_second_c_level() {
        // With both constants at their midpoints the k = 2 C-level of G₊
        // falls inside the window.
        let params = PresetParams::acceptance();
        let w = params.window(WindowPlacement::default()).unwrap();
        let levels = enumerate_periodic_levels(&params.profile(Family::Plus).unwrap()).unwrap();
        assert!(!excludes_expected(&levels, &w));
    }
}
