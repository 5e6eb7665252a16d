//! Scenario orchestration: turns a validated [`RunConfig`] into a
//! [`ReportDocument`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{
    config_hash, ConfigError, CurveSource, LevelsConfig, MagneticConfig, RunConfig, Scenario,
    SpectralConfig, SpectralSource, WitnessConfig,
};
use crate::curve_bounds::{
    box_area, build_box_curve, curve_from_curvature, random_box_curve, random_closed_profile,
    verify_curvature_area_bound, CurvatureProfile, CurveError, CurveOptions, PlanarCurve,
};
use crate::magnetic::{
    energy_sweep, flow, CertificateStatus, MagneticError, MagneticField, OrbitOptions,
    ReducedState, Stop,
};
use crate::model::{
    admissibility_check, capacity_witness, classify_action, excludes_expected, indexed_levels,
    minimal_period, numeric_return_time, preset_table, DimensionData, Family, LevelRow, ModelError,
    RadialProfile, WindowPlacement,
};
use crate::ode::StepControl;
use crate::report::{ReportDocument, Table};
use crate::spectral::{
    brute_force_homology, compute_pages, e1_from_bundle, e2_from_bundle, hopf_bundle, hopf_complex,
    random_filtered_complex, splitting_check, torus_complex, trivial_sphere_bundle,
    validate_complex, BundleMorseData, FilteredZ2Complex, SpectralError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Input rejected by a scenario module.
    #[error("{context}: {message}")]
    Input { context: String, message: String },
    #[error("numerical failure in {context}: {message}")]
    Numerical { context: String, message: String },
}

impl RunError {
    /// 2 for configuration and input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Input { .. } => 2,
            RunError::Numerical { .. } => 3,
        }
    }

    fn input(context: &str, e: impl ToString) -> Self {
        RunError::Input {
            context: context.to_string(),
            message: e.to_string(),
        }
    }

    fn numerical(context: &str, e: impl ToString) -> Self {
        RunError::Numerical {
            context: context.to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Enable brute-force cross-checks.
    pub oracle: bool,
    /// Directory that relative input paths are resolved against.
    pub base_dir: Option<PathBuf>,
}

/// Output directory: `HZ_OUTPUT_DIR`, then `output.dir`, then `.`.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os("HZ_OUTPUT_DIR")
        .map(PathBuf::from)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn output_stem(cfg: &RunConfig) -> String {
    cfg.output
        .stem
        .clone()
        .unwrap_or_else(|| cfg.scenario.name().to_string())
}

/// Independent stream per record, so results do not depend on scheduling.
fn record_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_scenario(cfg: &RunConfig, opts: &RunOptions) -> Result<ReportDocument, RunError> {
    let errors = crate::config::validate(cfg);
    if !errors.is_empty() {
        return Err(ConfigError::Validation(errors).into());
    }
    let mut doc = ReportDocument::new(cfg.scenario, 1, config_hash(cfg));
    match cfg.scenario {
        Scenario::CurveBound => run_curves(cfg, opts, &mut doc)?,
        Scenario::Magnetic => run_magnetic(cfg, opts, &mut doc)?,
        Scenario::Levels => run_levels(cfg, opts, &mut doc)?,
        Scenario::Spectral => run_spectral(cfg, opts, &mut doc)?,
    }
    Ok(doc)
}

// ---------------------------------------------------------------- curves

const CURVE_COLUMNS: &[&str] = &[
    "id",
    "k",
    "v",
    "K_min",
    "A_curve",
    "A_box",
    "bound",
    "max_entry",
    "entry_bound",
    "pass",
];

fn curve_error(context: &str, e: CurveError) -> RunError {
    match e {
        CurveError::Integration(_) => RunError::numerical(context, e),
        other => RunError::input(context, other),
    }
}

/// Append one curve row and its checks; `Err` carries a message for a
/// failed construction.
fn curve_row(
    id: &str,
    curve: &PlanarCurve,
    tol: f64,
    table: &mut Table,
) -> Result<bool, CurveError> {
    let rep = verify_curvature_area_bound(curve, tol)?;
    let entry_bound = 2.0 * rep.speed / rep.k_min;
    let entries_ok = rep.max_box_entry <= entry_bound + tol;
    let pass = rep.pass && entries_ok;
    table.push(vec![
        id.into(),
        rep.rotation_number.into(),
        rep.speed.into(),
        rep.k_min.into(),
        rep.area_curve.into(),
        rep.area_box.into(),
        rep.bound.into(),
        rep.max_box_entry.into(),
        entry_bound.into(),
        pass.into(),
    ]);
    Ok(pass)
}

fn curve_plots(curve: &PlanarCurve, tol: f64, doc: &mut ReportDocument) {
    let mut samples = Table::new("curve", &["t", "x", "y"]);
    let stride = (curve.len() / 1024).max(1);
    for i in (0..curve.len()).step_by(stride) {
        samples.push(vec![
            curve.t[i].into(),
            curve.x[i].into(),
            curve.y[i].into(),
        ]);
    }
    doc.plots.push(samples);
    if let Ok(b) = build_box_curve(curve, tol) {
        // Box vertices are relative to the first corner; shift it onto the
        // curve's lowest point on the first vertical side.
        let (x0, _) = curve.position_at(b.crossings.vertical[0]);
        let y0 = curve.position_at(b.crossings.horizontal[0]).1;
        let mut table = Table::new("box", &["x", "y"]);
        for (x, y) in b.curve.vertices() {
            table.push(vec![(x + x0).into(), (y + y0).into()]);
        }
        doc.plots.push(table);
    }
}

/// Bounding rectangle from a fine Hermite resampling.
fn bounding_box(curve: &PlanarCurve) -> (f64, f64) {
    let n = 16 * curve.len();
    let (mut xl, mut xh, mut yl, mut yh) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for i in 0..=n {
        let (x, y) = curve.position_at(curve.period * i as f64 / n as f64);
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    (xh - xl, yh - yl)
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), RunError> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| RunError::input(&ctx, e))?;
    let headers = rdr.headers().map_err(|e| RunError::input(&ctx, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| RunError::input(&ctx, format!("missing column {name:?}")))
    };
    let (ct, cx, cy) = (col("t")?, col("x")?, col("y")?);
    let (mut t, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RunError::input(&ctx, e))?;
        let num = |c: usize| -> Result<f64, RunError> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| RunError::input(&ctx, format!("row {}: bad number", line + 2)))
        };
        t.push(num(ct)?);
        x.push(num(cx)?);
        y.push(num(cy)?);
    }
    Ok((t, x, y))
}

fn run_curves(
    cfg: &RunConfig,
    opts: &RunOptions,
    doc: &mut ReportDocument,
) -> Result<(), RunError> {
    let tol = cfg.tolerances.geom;
    let source = cfg.curve.as_ref().expect("validated");
    let mut table = Table::new("curves", CURVE_COLUMNS);
    let single =
        |curve: PlanarCurve, id: &str, doc: &mut ReportDocument| -> Result<Table, RunError> {
            let mut table = Table::new("curves", CURVE_COLUMNS);
            let pass = curve_row(id, &curve, tol, &mut table).map_err(|e| curve_error(id, e))?;
            doc.check(
                format!("area chain {id}"),
                pass,
                "0 <= A(curve) <= A(box) <= k 4 (v/K_min)^2",
            );
            if opts.oracle && curve.rotation_number == 1 {
                let bc = build_box_curve(&curve, tol).map_err(|e| curve_error(id, e))?;
                let (w, h) = bounding_box(&curve);
                let dev = (bc.curve.a[0] - h).abs().max((bc.curve.b[0] - w).abs());
                doc.check(
                    format!("oracle bounding box {id}"),
                    dev <= 10.0 * tol * w.max(h),
                    format!("max deviation {dev:e}"),
                );
            }
            curve_plots(&curve, tol, doc);
            Ok(table)
        };
    match source {
        CurveSource::Preset { name } => {
            let (k_turn, duration) = match name.as_str() {
                "unit-circle" => (1.0, 2.0 * PI),
                _ => (1.0, 4.0 * PI),
            };
            let profile = CurvatureProfile::constant(k_turn, 2.0 * PI);
            let copts = CurveOptions {
                tol,
                ..CurveOptions::default()
            };
            let curve = curve_from_curvature(&profile, 1.0, duration, &copts)
                .map_err(|e| curve_error(name, e))?;
            table = single(curve, name, doc)?;
        }
        CurveSource::Curvature {
            mean,
            harmonics,
            period,
            speed,
            duration,
            closure,
            samples_per_lap,
        } => {
            let profile = CurvatureProfile {
                mean: *mean,
                harmonics: harmonics.clone(),
                period: *period,
            };
            let copts = CurveOptions {
                samples_per_lap: *samples_per_lap,
                tol,
                closure: *closure,
            };
            let curve = curve_from_curvature(&profile, *speed, duration.unwrap_or(*period), &copts)
                .map_err(|e| curve_error("curvature", e))?;
            table = single(curve, "curvature", doc)?;
        }
        CurveSource::Samples { path } => {
            let path = match &opts.base_dir {
                Some(base) if path.is_relative() => base.join(path),
                _ => path.clone(),
            };
            let (t, x, y) = read_samples(&path)?;
            let curve = PlanarCurve::from_samples(&t, &x, &y, tol)
                .map_err(|e| curve_error(&path.display().to_string(), e))?;
            table = single(curve, "samples", doc)?;
        }
        CurveSource::Random {
            count,
            rotation_numbers,
            boxes,
            samples_per_lap,
        } => {
            let rows: Vec<(String, Result<(Table, bool), CurveError>)> = (0..*count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = record_rng(cfg.seed, i as u64);
                    let k = rotation_numbers[i % rotation_numbers.len()];
                    let period = rng.random_range(1.0..10.0);
                    let speed = rng.random_range(0.5..2.0);
                    let profile = random_closed_profile(&mut rng, k, period);
                    let copts = CurveOptions {
                        samples_per_lap: *samples_per_lap,
                        tol,
                        ..CurveOptions::default()
                    };
                    let id = format!("curve-{i}");
                    let res = curve_from_curvature(&profile, speed, period, &copts).and_then(|c| {
                        let mut t = Table::new("curves", CURVE_COLUMNS);
                        let pass = curve_row(&id, &c, tol, &mut t)?;
                        Ok((t, pass))
                    });
                    (id, res)
                })
                .collect();
            let mut failed = Vec::new();
            for (id, res) in rows {
                match res {
                    Ok((t, pass)) => {
                        table.rows.extend(t.rows);
                        if !pass {
                            failed.push(id);
                        }
                    }
                    Err(CurveError::Integration(m)) => {
                        doc.numerical_failures.push(format!("{id}: {m}"))
                    }
                    Err(e) => failed.push(format!("{id} ({e})")),
                }
            }
            doc.check(
                "area chain on generated curves",
                failed.is_empty(),
                if failed.is_empty() {
                    format!("{count} curves")
                } else {
                    format!("failed: {}", failed.join(", "))
                },
            );
            let mut box_table =
                Table::new("boxes", &["id", "k", "max_entry", "area", "bound", "pass"]);
            let mut box_fail = 0usize;
            for i in 0..*boxes {
                let mut rng = record_rng(cfg.seed, (1u64 << 32) + i as u64);
                let k = rotation_numbers[i % rotation_numbers.len()] as usize;
                let b = random_box_curve(&mut rng, k);
                let area = box_area(&b);
                let c = b.max_entry();
                let bound = k as f64 * c * c;
                let pass = area > 0.0 && area <= bound + tol;
                box_fail += usize::from(!pass);
                box_table.push(vec![
                    format!("box-{i}").into(),
                    k.into(),
                    c.into(),
                    area.into(),
                    bound.into(),
                    pass.into(),
                ]);
            }
            if *boxes > 0 {
                doc.check(
                    "box area bound",
                    box_fail == 0,
                    format!("{box_fail} of {boxes} synthetic boxes violate 0 < A <= k c^2"),
                );
            }
            doc.tables.push(table);
            doc.tables.push(box_table);
            return Ok(());
        }
    }
    doc.tables.push(table);
    Ok(())
}

// -------------------------------------------------------------- magnetic

fn magnetic_error(context: &str, e: MagneticError) -> RunError {
    match e {
        MagneticError::Integration(_) => RunError::numerical(context, e),
        other => RunError::input(context, other),
    }
}

fn run_magnetic(
    cfg: &RunConfig,
    opts: &RunOptions,
    doc: &mut ReportDocument,
) -> Result<(), RunError> {
    let m: &MagneticConfig = cfg.magnetic.as_ref().expect("validated");
    let field = MagneticField::new(m.constant, m.modes.clone())
        .map_err(|e| magnetic_error("magnetic field", e))?;
    let t = &cfg.tolerances;
    let oopts = OrbitOptions {
        integrator_tol: t.integrator,
        orbit_tol: t.orbit,
        certificate_tol: t.certificate,
        ..OrbitOptions::default()
    };
    let sweep = energy_sweep(&field, &m.energies, m.grid, &oopts);
    let vacuous = field.variance_ratio >= std::f64::consts::FRAC_PI_2.sqrt();

    let mut orbits = Table::new(
        "orbits",
        &[
            "E",
            "q1",
            "q2",
            "T",
            "k",
            "A1",
            "A2",
            "A",
            "C_E",
            "pass",
            "contractible",
            "residual",
        ],
    );
    let mut levels = Table::new(
        "levels",
        &[
            "E",
            "continuum",
            "seeds",
            "dropped",
            "orbits",
            "contractible",
            "certified",
            "error",
        ],
    );
    let mut failures = Vec::new();
    let mut uncertified = Vec::new();
    for l in &sweep.levels {
        if let Some(e) = &l.error {
            doc.numerical_failures
                .push(format!("E = {}: {e}", l.energy));
        }
        let contractible = l.orbits.iter().filter(|o| o.contractible).count();
        levels.push(vec![
            l.energy.into(),
            l.continuum.into(),
            l.seeds.into(),
            l.dropped.into(),
            l.orbits.len().into(),
            contractible.into(),
            l.certified.into(),
            l.error.clone().into(),
        ]);
        if !vacuous && !l.certified && l.error.is_none() {
            uncertified.push(l.energy.to_string());
        }
        for o in &l.orbits {
            let status = o.status.map(|s| match s {
                CertificateStatus::Pass => "pass",
                CertificateStatus::Fail => "fail",
                CertificateStatus::Vacuous => "vacuous",
            });
            if o.status == Some(CertificateStatus::Fail) {
                failures.push(format!("E = {} at ({}, {})", o.energy, o.q1, o.q2));
            }
            orbits.push(vec![
                o.energy.into(),
                o.q1.into(),
                o.q2.into(),
                o.period.into(),
                o.rotation_number.into(),
                o.a1.into(),
                o.a2.into(),
                o.a.into(),
                o.c_e.into(),
                status.into(),
                o.contractible.into(),
                o.residual.into(),
            ]);
        }
    }
    doc.check(
        "area certificate |A| >= C(E) T",
        failures.is_empty(),
        if failures.is_empty() {
            format!("variance ratio {}", field.variance_ratio)
        } else {
            failures.join("; ")
        },
    );
    if !vacuous {
        doc.check(
            "certified contractible orbit on every level",
            uncertified.is_empty(),
            if uncertified.is_empty() {
                format!("{} levels", sweep.levels.len())
            } else {
                format!("no certificate at E = {}", uncertified.join(", "))
            },
        );
    }

    let need_flow = opts.oracle || m.traces;
    if need_flow {
        let ctl = StepControl::with_tol(t.integrator.min(1e-12));
        let mut traces = Table::new("traces", &["orbit", "E", "t", "q1", "q2"]);
        let mut worst = 0.0f64;
        let mut id = 0usize;
        for o in sweep.levels.iter().flat_map(|l| &l.orbits) {
            if !o.contractible {
                continue;
            }
            let state = ReducedState::new(o.q1, o.q2, 0.0, o.energy)
                .map_err(|e| magnetic_error("trace", e))?;
            let tr = flow(&field, &state, Stop::Duration(o.period), &ctl)
                .map_err(|e| magnetic_error("trace", e))?;
            let end = tr.final_state();
            let turns = -end.theta / (2.0 * PI);
            let defect = (end.q1 - o.q1)
                .hypot(end.q2 - o.q2)
                .max((turns - (-o.rotation_number) as f64).abs());
            worst = worst.max(defect);
            if m.traces {
                let n = 200;
                for i in 0..=n {
                    let s = o.period * i as f64 / n as f64;
                    let y = tr.eval(s).expect("inside span");
                    traces.push(vec![
                        id.into(),
                        o.energy.into(),
                        s.into(),
                        y[0].into(),
                        y[1].into(),
                    ]);
                }
            }
            id += 1;
        }
        if opts.oracle {
            doc.check(
                "oracle re-integration closes orbits",
                worst <= 100.0 * t.orbit,
                format!("largest closure defect {worst:e}"),
            );
        }
        if m.traces {
            doc.plots.push(traces);
        }
    }
    doc.tables.push(orbits);
    doc.tables.push(levels);
    Ok(())
}

// ---------------------------------------------------------------- levels

fn model_error(context: &str, e: ModelError) -> RunError {
    match e {
        ModelError::Integration(_) | ModelError::RootNotFound { .. } => {
            RunError::numerical(context, e)
        }
        other => RunError::input(context, other),
    }
}

fn run_levels(
    cfg: &RunConfig,
    _opts: &RunOptions,
    doc: &mut ReportDocument,
) -> Result<(), RunError> {
    let l: &LevelsConfig = cfg.levels.as_ref().expect("validated");
    let dims = DimensionData::new(l.m, l.n).map_err(|e| model_error("levels", e))?;
    let placement = WindowPlacement {
        a_position: l.a_position,
        b_position: l.b_position,
    };
    let window = l
        .preset
        .window(placement)
        .map_err(|e| model_error("window", e))?;
    let profiles: Vec<(Family, RadialProfile)> = if l.profiles.is_empty() {
        [Family::Plus, Family::Zero, Family::Minus]
            .into_iter()
            .map(|f| l.preset.profile(f).map(|p| (f, p)))
            .collect::<Result<_, _>>()
            .map_err(|e| model_error("preset profiles", e))?
    } else {
        l.profiles
            .iter()
            .map(|p| {
                RadialProfile::from_segments(p.radius, p.plateau_end, &p.segments)
                    .map(|prof| (p.family, prof))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| model_error("profiles", e))?
    };
    let rows: Vec<LevelRow> = if l.profiles.is_empty() {
        preset_table(&l.preset, dims, placement)
            .map_err(|e| model_error("levels", e))?
            .1
    } else {
        let mut rows = Vec::new();
        for (family, prof) in &profiles {
            for lv in indexed_levels(prof, dims, *family).map_err(|e| model_error("levels", e))? {
                rows.push(LevelRow {
                    family: *family,
                    branch: lv.branch,
                    k: lv.multiplicity,
                    level: lv.level,
                    action: lv.action,
                    index: lv.relative_index.expect("indexed"),
                    window_class: classify_action(lv.action, &window),
                });
            }
        }
        rows
    };

    let mut table = Table::new(
        "levels",
        &[
            "family",
            "branch",
            "k",
            "c",
            "action",
            "index",
            "window_class",
            "slope_residual",
        ],
    );
    let mut worst_residual = 0.0f64;
    let mut worst_action = 0.0f64;
    for r in &rows {
        let prof = &profiles
            .iter()
            .find(|(f, _)| *f == r.family)
            .expect("family")
            .1;
        let residual = (prof.slope(r.level) + r.k as f64 * PI).abs();
        let action = prof.value(r.level) + r.k as f64 * PI * r.level;
        worst_residual = worst_residual.max(residual);
        worst_action = worst_action.max((action - r.action).abs());
        table.push(vec![
            r.family.name().into(),
            format!("{:?}", r.branch).into(),
            r.k.into(),
            r.level.into(),
            r.action.into(),
            r.index.into(),
            match r.window_class {
                crate::model::WindowClass::Below => "below",
                crate::model::WindowClass::Inside => "inside",
                crate::model::WindowClass::Above => "above",
            }
            .into(),
            residual.into(),
        ]);
    }
    doc.check(
        "levels solve slope = -k pi",
        worst_residual < 1e-9,
        format!("largest residual {worst_residual:e}"),
    );
    doc.check(
        "actions equal alpha(c) + k pi c",
        worst_action < 1e-9,
        format!("largest deviation {worst_action:e}"),
    );
    if l.expect_exclusions {
        for (family, prof) in &profiles {
            let levels =
                indexed_levels(prof, dims, *family).map_err(|e| model_error("levels", e))?;
            doc.check(
                format!("window exclusions for {}", family.name()),
                excludes_expected(&levels, &window),
                "outside the window: exactly d^1 and c^k for k >= 2",
            );
        }
    }
    let mut wt = Table::new(
        "window",
        &["a", "b", "a_lower", "a_upper", "b_lower", "b_upper"],
    );
    wt.push(vec![
        window.a.into(),
        window.b.into(),
        window.a_range.0.into(),
        window.a_range.1.into(),
        window.b_range.0.into(),
        window.b_range.1.into(),
    ]);
    doc.tables.push(table);
    doc.tables.push(wt);

    let mut plot = Table::new("profiles", &["family", "s", "alpha", "slope"]);
    for (family, prof) in &profiles {
        let r2 = prof.radius() * prof.radius();
        let n = 400;
        for i in 0..=n {
            let s = r2 * i as f64 / n as f64;
            plot.push(vec![
                family.name().into(),
                s.into(),
                prof.value(s).into(),
                prof.slope(s).into(),
            ]);
        }
    }
    doc.plots.push(plot);

    if let Some(w) = &l.witness {
        run_witness(cfg.seed, w, doc)?;
    }
    Ok(())
}

fn run_witness(seed: u64, w: &WitnessConfig, doc: &mut ReportDocument) -> Result<(), RunError> {
    let prof = capacity_witness(w.radius, w.eps).map_err(|e| model_error("witness", e))?;
    let expected_max = PI * w.radius * w.radius - w.eps;
    let adm = admissibility_check(&prof);
    let mut summary = Table::new(
        "witness",
        &[
            "radius",
            "eps",
            "max",
            "expected_max",
            "sup_slope",
            "admissible",
        ],
    );
    summary.push(vec![
        w.radius.into(),
        w.eps.into(),
        prof.max_value().into(),
        expected_max.into(),
        adm.sup_slope.into(),
        adm.admissible.into(),
    ]);
    doc.check(
        "witness maximum",
        (prof.max_value() - expected_max).abs() <= 1e-12 * expected_max.max(1.0),
        format!("max = {}", prof.max_value()),
    );
    doc.check(
        "witness slope below pi",
        adm.admissible,
        format!("sup |slope| = {}", adm.sup_slope),
    );
    let samples: Vec<Result<(usize, f64, Option<f64>, Option<f64>), RunError>> = (0..w.seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = record_rng(seed, (2u64 << 32) + i as u64);
            // Uniform in the ball of radius R in R^4.
            let z: [f64; 4] = loop {
                let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let n2: f64 = v.iter().map(|x| x * x).sum();
                if n2 > 1e-6 && n2 < 1.0 {
                    break v.map(|x| x * w.radius);
                }
            };
            let s: f64 = z.iter().map(|x| x * x).sum();
            let analytic = minimal_period(&prof, s);
            let numeric = numeric_return_time(&prof, z, 1.0, 1e-6)
                .map_err(|e| model_error("witness flow", e))?;
            Ok((i, s, analytic, numeric))
        })
        .collect();
    let mut table = Table::new(
        "witness_seeds",
        &["seed", "s", "analytic_period", "numeric_return"],
    );
    let mut short = 0usize;
    for r in samples {
        let (i, s, analytic, numeric) = r?;
        if numeric.is_some() || analytic.is_some_and(|p| p <= 1.0) {
            short += 1;
        }
        table.push(vec![i.into(), s.into(), analytic.into(), numeric.into()]);
    }
    if w.seeds > 0 {
        doc.check(
            "no nonconstant return before t = 1",
            short == 0,
            format!("{short} of {} seeds returned early", w.seeds),
        );
    }
    doc.tables.push(summary);
    doc.tables.push(table);
    Ok(())
}

// -------------------------------------------------------------- spectral

fn spectral_error(context: &str, e: SpectralError) -> RunError {
    RunError::input(context, e)
}

struct Spectral<'a> {
    pages: Table,
    diffs: Table,
    infinity: Table,
    doc: &'a mut ReportDocument,
}

impl Spectral<'_> {
    /// Pages, checks and (optionally) the homology oracle for one complex.
    fn add(
        &mut self,
        id: &str,
        complex: &FilteredZ2Complex,
        oracle: bool,
    ) -> crate::spectral::SpectralSequence {
        let seq = compute_pages(complex, None);
        for p in &seq.pages {
            for (&(i, j), &d) in &p.dims {
                self.pages
                    .push(vec![id.into(), p.k.into(), i.into(), j.into(), d.into()]);
            }
            for d in &p.differentials {
                self.diffs.push(vec![
                    id.into(),
                    p.k.into(),
                    d.source.0.into(),
                    d.source.1.into(),
                    d.target.0.into(),
                    d.target.1.into(),
                    d.rank.into(),
                ]);
            }
        }
        let total = seq.infinity_total();
        let brute = oracle.then(|| brute_force_homology(complex));
        let mut degrees: Vec<i32> = total.keys().copied().collect();
        if let Some(b) = &brute {
            degrees.extend(b.keys());
        }
        degrees.sort_unstable();
        degrees.dedup();
        let mut agree = true;
        for l in degrees {
            let ours = total.get(&l).copied().unwrap_or(0);
            let theirs = brute.as_ref().map(|b| b.get(&l).copied().unwrap_or(0));
            if theirs.is_some_and(|t| t != ours) {
                agree = false;
            }
            self.infinity
                .push(vec![id.into(), l.into(), ours.into(), theirs.into()]);
        }
        let c = seq.checks();
        self.doc.check(
            format!("sequence consistency {id}"),
            c.d_squared_zero && c.euler_constant && c.pages_consistent && c.stabilized,
            format!(
                "d^2 = 0: {}, euler: {}, pages: {}, stabilized: {}",
                c.d_squared_zero, c.euler_constant, c.pages_consistent, c.stabilized
            ),
        );
        if oracle {
            self.doc.check(
                format!("oracle homology {id}"),
                agree,
                "E-infinity totals against direct rank computation",
            );
        }
        seq
    }
}

fn bundle_oracle(
    id: &str,
    data: &BundleMorseData,
    seq: &crate::spectral::SpectralSequence,
    doc: &mut ReportDocument,
) -> Result<(), RunError> {
    let e1 = e1_from_bundle(data).map_err(|e| spectral_error(id, e))?;
    let e2 = e2_from_bundle(data).map_err(|e| spectral_error(id, e))?;
    let ok1 = seq.page(1).is_some_and(|p| p.dims == e1.dims);
    let ok2 = seq
        .page(2)
        .map_or(e2.dims.is_empty(), |p| p.dims == e2.dims);
    doc.check(format!("oracle E1 {id}"), ok1, "C(B) tensor H(F)");
    doc.check(format!("oracle E2 {id}"), ok2, "H(B) tensor H(F)");
    Ok(())
}

fn run_spectral(
    cfg: &RunConfig,
    opts: &RunOptions,
    doc: &mut ReportDocument,
) -> Result<(), RunError> {
    let s: &SpectralConfig = cfg.spectral.as_ref().expect("validated");
    let oracle = opts.oracle || s.oracle;
    let mut sp = Spectral {
        pages: Table::new("pages", &["complex", "k", "i", "j", "dim"]),
        diffs: Table::new(
            "differentials",
            &[
                "complex", "k", "source_i", "source_j", "target_i", "target_j", "rank",
            ],
        ),
        infinity: Table::new("infinity", &["complex", "degree", "dim", "oracle_dim"]),
        doc,
    };
    let mut bundle: Option<BundleMorseData> = None;
    let seq = match &s.source {
        SpectralSource::Preset { name } => {
            let complex = match name.as_str() {
                "hopf" => hopf_complex(),
                "torus" => torus_complex(),
                "hopf-bundle" => {
                    let b = hopf_bundle();
                    let c = b.to_complex().map_err(|e| spectral_error(name, e))?;
                    bundle = Some(b);
                    c
                }
                _ => {
                    let sp_cfg = s.splitting.as_ref().expect("validated");
                    let b = trivial_sphere_bundle(sp_cfg.m, sp_cfg.n);
                    let c = b.to_complex().map_err(|e| spectral_error(name, e))?;
                    bundle = Some(b);
                    c
                }
            };
            Some(sp.add(name, &complex, oracle))
        }
        SpectralSource::Complex { complex } => {
            let c = validate_complex(complex).map_err(|e| spectral_error("complex", e))?;
            Some(sp.add("complex", &c, oracle))
        }
        SpectralSource::Bundle { bundle: b } => {
            let c = b.to_complex().map_err(|e| spectral_error("bundle", e))?;
            bundle = Some(b.clone());
            Some(sp.add("bundle", &c, oracle))
        }
        SpectralSource::Random {
            count,
            max_generators,
        } => {
            let complexes: Vec<FilteredZ2Complex> = (0..*count)
                .into_par_iter()
                .map(|i| {
                    random_filtered_complex(&mut record_rng(cfg.seed, i as u64), *max_generators)
                })
                .collect();
            for (i, c) in complexes.iter().enumerate() {
                sp.add(&format!("random-{i}"), c, true);
            }
            None
        }
    };
    let Spectral {
        pages,
        diffs,
        infinity,
        doc,
    } = sp;
    doc.tables.push(pages);
    doc.tables.push(diffs);
    doc.tables.push(infinity);
    if let (Some(seq), Some(b)) = (&seq, &bundle) {
        if oracle {
            bundle_oracle("bundle", b, seq, doc)?;
        }
    }
    if let (Some(seq), Some(split)) = (&seq, &s.splitting) {
        let rep = splitting_check(seq, split.m, split.n, &split.betti)
            .map_err(|e| spectral_error("splitting", e))?;
        let mut t = Table::new(
            "splitting",
            &[
                "m",
                "n",
                "h_2m",
                "expected",
                "splits",
                "corner_e2",
                "corner_infinity",
                "corner_survives",
            ],
        );
        t.push(vec![
            rep.m.into(),
            rep.n.into(),
            rep.h_2m.into(),
            rep.expected.into(),
            rep.splits.into(),
            rep.corner_e2.into(),
            rep.corner_infinity.into(),
            rep.corner_survives.into(),
        ]);
        doc.tables.push(t);
        if let Some(expect) = s.expect_split {
            doc.check(
                "degree 2m splitting",
                rep.splits == expect,
                format!(
                    "H_2m = {}, expected {} (splits: {})",
                    rep.h_2m, rep.expected, rep.splits
                ),
            );
        }
    }
    Ok(())
}
