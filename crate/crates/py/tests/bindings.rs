use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(hzlab_py::hzlab_module)(py);
        let locals = PyDict::new(py);
        locals.set_item("hzlab", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, None, Some(&locals)).unwrap();
    });
}

#[test]
fn constant_field_orbit() {
    with_module(
        "import math\n\
         o = hzlab.magnetic_orbits(1.0, 0.5, grid=4)[0]\n\
         assert o['k'] == -1 and o['contractible']\n\
         assert abs(o['a1'] - 4 * math.pi * 0.5) < 1e-8\n",
    );
}

#[test]
fn scenario_round_trip() {
    with_module(
        "cfg = hzlab.Config('scenario = \"spectral\"\\n[spectral]\\nsource = { kind = \"preset\", name = \"torus\" }\\n')\n\
         rep = cfg.run()\n\
         assert rep.passed\n\
         inf = rep.table('infinity')\n\
         assert [r['dim'] for r in inf] == [1, 2, 1]\n\
         assert hzlab.Config(cfg.to_toml()).hash() == cfg.hash()\n",
    );
}

#[test]
fn bad_input_raises_value_error() {
    with_module(
        "try:\n    hzlab.curve_bound(mean=1.0, period=6.0, speed=1.0, harmonics=[(1, 2.0, 0.0)])\n\
         except ValueError:\n    pass\n\
         else:\n    raise AssertionError('accepted')\n",
    );
}
