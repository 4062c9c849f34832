use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "ktfr")?;
        ktfr_py::ktfr(&m)?;
        let globals = PyDict::new(py);
        globals.set_item("ktfr", m)?;
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, Some(&globals), None)
    })
}

#[test]
fn module_round_trip() {
    with_module(
        r#"
import math
x = ktfr.Signal.tone(64, 0.5 * math.pi)
w = ktfr.wvd(x)
assert len(w) == 64 and len(w[0]) == 64
row = w[32]
assert row.index(max(row)) == 32
g = ktfr.KernelGrid.preset("spectrogram", 64, 16)
assert g.shape == (64, 16)
p = g.get(3, 2)
assert abs(p.sigma_t * p.sigma_f - 1.0) < 1e-12
k = ktfr.k_equivariant(x, g)
assert len(k) == 64 and len(k[0]) == 16
assert abs(ktfr.KernelParams(0.0, 0.0, 1 / (4 * math.pi), 1.0).logon()[3] - ktfr.MIN_LOGON_AREA) == 0.0
"#,
    )
    .unwrap();
}

#[test]
fn library_errors_become_value_errors() {
    let e = with_module("ktfr.KernelParams(0.0, 0.0, -1.0, 1.0)").unwrap_err();
    Python::attach(|py| assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py)));
    assert!(with_module("ktfr.Signal.tone(8, 5.0)").is_err());
}
