//! Run configuration: TOML text with one block per scenario.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curve_bounds::ClosureMode;
use crate::magnetic::FourierMode;
use crate::model::{Family, PresetParams, Segment};
use crate::spectral::{BundleMorseData, ComplexSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CurveBound,
    Magnetic,
    Levels,
    Spectral,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::CurveBound => "curve-bound",
            Scenario::Magnetic => "magnetic",
            Scenario::Levels => "levels",
            Scenario::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Geometric checks (curve closure, area inequalities).
    #[serde(default = "defaults::geom")]
    pub geom: f64,
    /// Local error tolerance of the adaptive integrator.
    #[serde(default = "defaults::integrator")]
    pub integrator: f64,
    /// Newton convergence threshold for periodic orbits.
    #[serde(default = "defaults::orbit")]
    pub orbit: f64,
    /// Slack in the magnetic area certificate.
    #[serde(default = "defaults::certificate")]
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geom: defaults::geom(),
            integrator: defaults::integrator(),
            orbit: defaults::orbit(),
            certificate: defaults::certificate(),
        }
    }
}

mod defaults {
    pub fn geom() -> f64 {
        1e-6
    }
    pub fn integrator() -> f64 {
        1e-10
    }
    pub fn orbit() -> f64 {
        1e-8
    }
    pub fn certificate() -> f64 {
        1e-6
    }
    pub fn samples_per_lap() -> usize {
        2048
    }
    pub fn grid() -> usize {
        16
    }
    pub fn one() -> u32 {
        1
    }
    pub fn half() -> f64 {
        0.5
    }
    pub fn yes() -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for report files; the `HZ_OUTPUT_DIR` environment variable
    /// takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File name stem; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSource {
    /// Named closed-form curve: `unit-circle` or `double-circle`.
    Preset { name: String },
    /// Turning rate `K(t) = mean + Σ a_n cos(2πnt/T) + b_n sin(2πnt/T)`.
    Curvature {
        mean: f64,
        #[serde(default)]
        harmonics: Vec<(u32, f64, f64)>,
        period: f64,
        speed: f64,
        /// Integration time; defaults to one period.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
        #[serde(default)]
        closure: ClosureMode,
        #[serde(default = "defaults::samples_per_lap")]
        samples_per_lap: usize,
    },
    /// CSV file with columns `t,x,y` on a uniform time grid.
    Samples { path: PathBuf },
    /// Generated corpus of closed curves plus synthetic box curves.
    Random {
        count: usize,
        rotation_numbers: Vec<u32>,
        #[serde(default)]
        boxes: usize,
        #[serde(default = "defaults::samples_per_lap")]
        samples_per_lap: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticConfig {
    /// Constant part of the field strength.
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<FourierMode>,
    pub energies: Vec<f64>,
    #[serde(default = "defaults::grid")]
    pub grid: usize,
    /// Write sampled orbit traces as plot data.
    #[serde(default)]
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub family: Family,
    pub radius: f64,
    pub plateau_end: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub radius: f64,
    pub eps: f64,
    #[serde(default)]
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    #[serde(default = "defaults::one")]
    pub m: u32,
    #[serde(default = "defaults::one")]
    pub n: u32,
    pub preset: PresetParams,
    #[serde(default = "defaults::half")]
    pub a_position: f64,
    #[serde(default = "defaults::half")]
    pub b_position: f64,
    /// Require the window to exclude exactly the `k = 1` D-levels and the
    /// `k ≥ 2` C-levels.
    #[serde(default = "defaults::yes")]
    pub expect_exclusions: bool,
    /// Custom profiles replacing the preset families.
    #[serde(default)]
    pub profiles: Vec<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralSource {
    /// `hopf`, `hopf-bundle`, `torus` or `trivial-bundle` (uses `m`, `n`).
    Preset {
        name: String,
    },
    Complex {
        complex: ComplexSpec,
    },
    Bundle {
        bundle: BundleMorseData,
    },
    Random {
        count: usize,
        max_generators: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    pub m: u32,
    pub n: u32,
    pub betti: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub source: SpectralSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingConfig>,
    /// Expected outcome of the splitting check, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_split: Option<bool>,
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic: Option<MagneticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn fields(&self) -> Vec<&str> {
        match self {
            ConfigError::Validation(v) => v.iter().map(|e| e.field.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

/// Parse and validate; validation reports every offending field.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let errors = validate(&cfg);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errors))
    }
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Canonical TOML text of a configuration.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes")
}

/// SHA-256 of the canonical text.
pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(emit_config(cfg).as_bytes()))
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(field, format!("must be positive and finite, got {v}"));
        }
    }

    fn finite(&mut self, field: &str, v: f64) {
        if !v.is_finite() {
            self.push(field, format!("must be finite, got {v}"));
        }
    }

    fn unit_interval(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.push(field, format!("must lie strictly between 0 and 1, got {v}"));
        }
    }
}

pub fn validate(cfg: &RunConfig) -> Vec<FieldError> {
    let mut c = Checker { errors: Vec::new() };
    let t = &cfg.tolerances;
    c.positive("tolerances.geom", t.geom);
    c.positive("tolerances.integrator", t.integrator);
    c.positive("tolerances.orbit", t.orbit);
    c.positive("tolerances.certificate", t.certificate);
    if let Some(stem) = &cfg.output.stem {
        if stem.is_empty() || stem.contains(['/', '\\']) {
            c.push("output.stem", "must be a plain, nonempty file name");
        }
    }
    let present = [
        (Scenario::CurveBound, cfg.curve.is_some(), "curve"),
        (Scenario::Magnetic, cfg.magnetic.is_some(), "magnetic"),
        (Scenario::Levels, cfg.levels.is_some(), "levels"),
        (Scenario::Spectral, cfg.spectral.is_some(), "spectral"),
    ];
    for (sc, has, key) in present {
        if sc == cfg.scenario && !has {
            c.push(
                key,
                format!("section [{key}] is required for scenario {sc}"),
            );
        }
    }
    if let Some(curve) = &cfg.curve {
        validate_curve(&mut c, curve);
    }
    if let Some(m) = &cfg.magnetic {
        // The mean of F is the constant part, so F > 0 needs it positive.
        c.positive("magnetic.constant", m.constant);
        for (i, mode) in m.modes.iter().enumerate() {
            c.finite(&format!("magnetic.modes[{i}].coeff_cos"), mode.coeff_cos);
            c.finite(&format!("magnetic.modes[{i}].coeff_sin"), mode.coeff_sin);
        }
        for (i, &e) in m.energies.iter().enumerate() {
            c.positive(&format!("magnetic.energies[{i}]"), e);
        }
    }
    if let Some(l) = &cfg.levels {
        if l.m == 0 {
            c.push("levels.m", "must be at least 1");
        }
        if l.n == 0 {
            c.push("levels.n", "must be at least 1");
        }
        let p = &l.preset;
        c.finite("levels.preset.max_h", p.max_h);
        c.positive("levels.preset.big_r", p.big_r);
        c.positive("levels.preset.r", p.r);
        c.positive("levels.preset.eps", p.eps);
        c.unit_interval("levels.preset.plateau_fraction", p.plateau_fraction);
        c.positive("levels.preset.minus_slope", p.minus_slope);
        c.unit_interval("levels.preset.transition", p.transition);
        c.unit_interval("levels.a_position", l.a_position);
        c.unit_interval("levels.b_position", l.b_position);
        for (i, pr) in l.profiles.iter().enumerate() {
            c.positive(&format!("levels.profiles[{i}].radius"), pr.radius);
            if !(pr.plateau_end >= 0.0) {
                c.push(
                    format!("levels.profiles[{i}].plateau_end"),
                    "must be nonnegative",
                );
            }
            if pr.segments.is_empty() {
                c.push(
                    format!("levels.profiles[{i}].segments"),
                    "must not be empty",
                );
            }
            for (k, s) in pr.segments.iter().enumerate() {
                c.positive(
                    &format!("levels.profiles[{i}].segments[{k}].width"),
                    s.width,
                );
                if !(s.end_slope <= 0.0) {
                    c.push(
                        format!("levels.profiles[{i}].segments[{k}].end_slope"),
                        "must be nonpositive",
                    );
                }
            }
        }
        if let Some(w) = &l.witness {
            c.positive("levels.witness.radius", w.radius);
            c.positive("levels.witness.eps", w.eps);
        }
    }
    if let Some(s) = &cfg.spectral {
        match &s.source {
            SpectralSource::Preset { name } => {
                if !["hopf", "hopf-bundle", "torus", "trivial-bundle"].contains(&name.as_str()) {
                    c.push("spectral.source.name", format!("unknown preset {name:?}"));
                }
                if name == "trivial-bundle" && s.splitting.is_none() {
                    c.push("spectral.splitting", "trivial-bundle needs m and n");
                }
            }
            SpectralSource::Random {
                count,
                max_generators,
            } => {
                if *count == 0 {
                    c.push("spectral.source.count", "must be at least 1");
                }
                if *max_generators < 4 {
                    c.push("spectral.source.max_generators", "must be at least 4");
                }
            }
            SpectralSource::Complex { .. } | SpectralSource::Bundle { .. } => {}
        }
        if let Some(sp) = &s.splitting {
            if sp.m == 0 {
                c.push("spectral.splitting.m", "must be at least 1");
            }
            if sp.n == 0 {
                c.push("spectral.splitting.n", "must be at least 1");
            }
        }
    }
    c.errors
}

fn validate_curve(c: &mut Checker, curve: &CurveSource) {
    match curve {
        CurveSource::Preset { name } => {
            if !["unit-circle", "double-circle"].contains(&name.as_str()) {
                c.push("curve.name", format!("unknown preset {name:?}"));
            }
        }
        CurveSource::Curvature {
            mean,
            harmonics,
            period,
            speed,
            duration,
            samples_per_lap,
            ..
        } => {
            c.positive("curve.mean", *mean);
            c.positive("curve.period", *period);
            c.positive("curve.speed", *speed);
            if let Some(d) = duration {
                c.positive("curve.duration", *d);
            }
            for (i, h) in harmonics.iter().enumerate() {
                c.finite(&format!("curve.harmonics[{i}]"), h.1 + h.2);
            }
            if *samples_per_lap < 64 {
                c.push("curve.samples_per_lap", "must be at least 64");
            }
        }
        CurveSource::Samples { path } => {
            if path.as_os_str().is_empty() {
                c.push("curve.path", "must not be empty");
            }
        }
        CurveSource::Random {
            count,
            rotation_numbers,
            samples_per_lap,
            ..
        } => {
            if *count > 0 && rotation_numbers.is_empty() {
                c.push("curve.rotation_numbers", "must list at least one value");
            }
            if rotation_numbers.contains(&0) {
                c.push("curve.rotation_numbers", "values must be positive");
            }
            if *samples_per_lap < 64 {
                c.push("curve.samples_per_lap", "must be at least 64");
            }
        }
    }
}
