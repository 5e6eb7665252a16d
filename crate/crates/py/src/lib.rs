//! Python bindings. Configs go in as TOML text; results come back as plain
//! dicts, lists and floats.

use std::collections::BTreeMap;

use hzlab::config::{config_hash, emit_config, parse_config, RunConfig};
use hzlab::curve_bounds::{
    curve_from_curvature, verify_curvature_area_bound, CurvatureProfile, CurveOptions,
};
use hzlab::magnetic::{
    energy_sweep, find_periodic_orbits, FourierMode, MagneticField, OrbitOptions,
};
use hzlab::model::{
    acceptance_placement, admissibility_check, capacity_witness, preset_table, DimensionData,
    PresetParams, WindowPlacement,
};
use hzlab::report::{render_report, Format, ReportDocument, Value};
use hzlab::scenario::{run_scenario, RunOptions};
use hzlab::spectral::{
    compute_pages, cp_betti, hopf_bundle, hopf_complex, splitting_check, torus_complex,
    trivial_sphere_bundle,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Int(i) => i.into_py_any(py),
        Value::Float(f) => f.into_py_any(py),
        Value::Text(s) => s.into_py_any(py),
        Value::Bool(b) => b.into_py_any(py),
        Value::Null => Ok(py.None()),
    }
}

/// Parsed and validated run configuration.
#[pyclass(name = "Config", module = "hzlab", frozen)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        // Parsing also validates every field.
        let inner = parse_config(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn scenario(&self) -> &'static str {
        self.inner.scenario.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_toml(&self) -> String {
        emit_config(&self.inner)
    }

    fn hash(&self) -> String {
        config_hash(&self.inner)
    }

    #[pyo3(signature = (oracle = false))]
    fn run(&self, oracle: bool) -> PyResult<PyReport> {
        let opts = RunOptions {
            oracle,
            ..RunOptions::default()
        };
        let doc = run_scenario(&self.inner, &opts).map_err(runtime_err)?;
        Ok(PyReport { doc })
    }
}

/// Result of a scenario run.
#[pyclass(name = "Report", module = "hzlab", frozen)]
struct PyReport {
    doc: ReportDocument,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn passed(&self) -> bool {
        self.doc.summary_pass()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.doc.exit_code()
    }

    /// `[(name, pass, detail), ...]`
    fn checks(&self) -> Vec<(String, bool, String)> {
        self.doc
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.pass, c.detail.clone()))
            .collect()
    }

    fn table_names(&self) -> Vec<String> {
        self.doc.tables.iter().map(|t| t.name.clone()).collect()
    }

    /// Table as a list of row dicts keyed by column name.
    fn table<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyList>> {
        let t = self
            .doc
            .table(name)
            .or_else(|| self.doc.plot(name))
            .ok_or_else(|| PyValueError::new_err(format!("no table named {name}")))?;
        let out = PyList::empty(py);
        for row in &t.rows {
            let d = PyDict::new(py);
            for (c, v) in t.columns.iter().zip(row) {
                d.set_item(c, value_to_py(py, v)?)?;
            }
            out.append(d)?;
        }
        Ok(out)
    }

    /// Rendered report bodies keyed by file name.
    #[pyo3(signature = (format = "csv", stem = "report"))]
    fn render(&self, format: &str, stem: &str) -> PyResult<BTreeMap<String, String>> {
        let format: Format = format.parse().map_err(value_err)?;
        let files = render_report(&self.doc, format, stem).map_err(runtime_err)?;
        Ok(files.into_iter().collect())
    }
}

/// Area chain for a curve with turning rate
/// `mean + Σ a cos(2πnt/T) + b sin(2πnt/T)` and constant speed.
#[pyfunction]
#[pyo3(signature = (mean, period, speed, harmonics = Vec::new(), duration = None, tol = 1e-6))]
fn curve_bound<'py>(
    py: Python<'py>,
    mean: f64,
    period: f64,
    speed: f64,
    harmonics: Vec<(u32, f64, f64)>,
    duration: Option<f64>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let profile = CurvatureProfile {
        mean,
        harmonics,
        period,
    };
    let curve = curve_from_curvature(
        &profile,
        speed,
        duration.unwrap_or(period),
        &CurveOptions::default(),
    )
    .map_err(value_err)?;
    let rep = verify_curvature_area_bound(&curve, tol).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("k", rep.rotation_number)?;
    d.set_item("speed", rep.speed)?;
    d.set_item("k_min", rep.k_min)?;
    d.set_item("area_curve", rep.area_curve)?;
    d.set_item("area_box", rep.area_box)?;
    d.set_item("bound", rep.bound)?;
    d.set_item("max_box_entry", rep.max_box_entry)?;
    d.set_item("pass", rep.pass)?;
    Ok(d)
}

fn field(constant: f64, modes: Vec<(i32, i32, f64, f64)>) -> PyResult<MagneticField> {
    let modes = modes
        .into_iter()
        .map(|(m1, m2, c, s)| FourierMode {
            m1,
            m2,
            coeff_cos: c,
            coeff_sin: s,
        })
        .collect();
    MagneticField::new(constant, modes).map_err(value_err)
}

/// Periodic orbits of the magnetic flow at one energy. `modes` holds
/// `(m1, m2, cos, sin)` Fourier coefficients on top of `constant`.
#[pyfunction]
#[pyo3(signature = (constant, energy, modes = Vec::new(), grid = 8))]
fn magnetic_orbits<'py>(
    py: Python<'py>,
    constant: f64,
    energy: f64,
    modes: Vec<(i32, i32, f64, f64)>,
    grid: usize,
) -> PyResult<Bound<'py, PyList>> {
    let f = field(constant, modes)?;
    let search =
        find_periodic_orbits(&f, energy, grid, &OrbitOptions::default()).map_err(runtime_err)?;
    let out = PyList::empty(py);
    for o in &search.orbits {
        let d = PyDict::new(py);
        d.set_item("q1", o.initial.q1)?;
        d.set_item("q2", o.initial.q2)?;
        d.set_item("period", o.period)?;
        d.set_item("k", o.rotation_number)?;
        d.set_item("contractible", o.is_contractible())?;
        d.set_item("a1", o.areas.map(|a| a.a1))?;
        d.set_item("a2", o.areas.map(|a| a.a2))?;
        d.set_item("a", o.areas.map(|a| a.a))?;
        d.set_item("residual", o.residual)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Energy sweep with the area certificate. Returns `(all_certified, levels)`.
#[pyfunction]
#[pyo3(signature = (constant, energies, modes = Vec::new(), grid = 8))]
fn magnetic_sweep<'py>(
    py: Python<'py>,
    constant: f64,
    energies: Vec<f64>,
    modes: Vec<(i32, i32, f64, f64)>,
    grid: usize,
) -> PyResult<(bool, Bound<'py, PyList>)> {
    let f = field(constant, modes)?;
    let sweep = py.detach(|| energy_sweep(&f, &energies, grid, &OrbitOptions::default()));
    let out = PyList::empty(py);
    for l in &sweep.levels {
        let d = PyDict::new(py);
        d.set_item("energy", l.energy)?;
        d.set_item("orbits", l.orbits.len())?;
        d.set_item(
            "contractible",
            l.orbits.iter().filter(|o| o.contractible).count(),
        )?;
        d.set_item("certified", l.certified)?;
        d.set_item("error", l.error.clone())?;
        out.append(d)?;
    }
    Ok((sweep.all_levels_certified, out))
}

/// Level table of the three preset families. Without explicit positions the
/// window placement used by the acceptance run is taken.
#[pyfunction]
#[pyo3(signature = (m = 1, n = 1, a_position = None, b_position = None))]
fn levels_table<'py>(
    py: Python<'py>,
    m: u32,
    n: u32,
    a_position: Option<f64>,
    b_position: Option<f64>,
) -> PyResult<(f64, f64, Bound<'py, PyList>)> {
    let dims = DimensionData::new(m, n).map_err(value_err)?;
    let default = acceptance_placement();
    let placement = WindowPlacement {
        a_position: a_position.unwrap_or(default.a_position),
        b_position: b_position.unwrap_or(default.b_position),
    };
    let (w, rows) =
        preset_table(&PresetParams::acceptance(), dims, placement).map_err(value_err)?;
    let out = PyList::empty(py);
    for r in &rows {
        let d = PyDict::new(py);
        d.set_item("family", r.family.name())?;
        d.set_item("branch", format!("{:?}", r.branch))?;
        d.set_item("k", r.k)?;
        d.set_item("level", r.level)?;
        d.set_item("action", r.action)?;
        d.set_item("index", r.index)?;
        d.set_item(
            "window_class",
            format!("{:?}", r.window_class).to_lowercase(),
        )?;
        out.append(d)?;
    }
    Ok((w.a, w.b, out))
}

/// `(max, sup |h'|, admissible)` of the capacity witness.
#[pyfunction]
fn witness(radius: f64, eps: f64) -> PyResult<(f64, f64, bool)> {
    let prof = capacity_witness(radius, eps).map_err(value_err)?;
    let adm = admissibility_check(&prof);
    Ok((prof.max_value(), adm.sup_slope, adm.admissible))
}

/// `E^∞` of a named preset as `{(i, j): dim}`, plus the page at which the
/// sequence stabilizes.
#[pyfunction]
#[pyo3(signature = (name, m = 1, n = 1))]
fn spectral_pages(name: &str, m: u32, n: u32) -> PyResult<(BTreeMap<(i32, i32), usize>, usize)> {
    let complex = match name {
        "hopf" => hopf_complex(),
        "torus" => torus_complex(),
        "hopf-bundle" => hopf_bundle().to_complex().map_err(value_err)?,
        "trivial-bundle" => trivial_sphere_bundle(m, n)
            .to_complex()
            .map_err(value_err)?,
        other => return Err(PyValueError::new_err(format!("unknown preset {other}"))),
    };
    let seq = compute_pages(&complex, None);
    Ok((seq.infinity, seq.stabilized_at))
}

/// Degree-2m splitting of the sphere bundle `CP^m × S^{2n−1}` (or the Hopf
/// bundle when `hopf` is set).
#[pyfunction]
#[pyo3(signature = (m, n, hopf = false))]
fn splitting(m: u32, n: u32, hopf: bool) -> PyResult<bool> {
    let data = if hopf {
        hopf_bundle()
    } else {
        trivial_sphere_bundle(m, n)
    };
    let seq = compute_pages(&data.to_complex().map_err(value_err)?, None);
    let rep = splitting_check(&seq, m, n, &cp_betti(m)).map_err(value_err)?;
    Ok(rep.splits)
}

#[pymodule]
#[pyo3(name = "hzlab")]
pub fn hzlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(curve_bound, m)?)?;
    m.add_function(wrap_pyfunction!(magnetic_orbits, m)?)?;
    m.add_function(wrap_pyfunction!(magnetic_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(levels_table, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_pages, m)?)?;
    m.add_function(wrap_pyfunction!(splitting, m)?)?;
    Ok(())
}
