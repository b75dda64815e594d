//! Python module `dpnls`: soliton fields, the asymptotic formula, forward
//! scattering of sampled profiles and the split-step integrator.
//! Discrete data cross the boundary as `(z, order, c0, c1)` tuples and
//! scattering data as the JSON document written by `dpnls scatter`.

use dpnls_core::asymptotics::{complex_gamma as gamma, q_asymptotic as q_asym, AsymptoticSettings};
use dpnls_core::pde_oracle::{PeriodicGrid, SplitStep};
use dpnls_core::phase::Cone;
use dpnls_core::scattering::{
    derivative_radius, locate_zeros as locate, norming_constants, DiscreteDatum, InitialProfile, JostSettings,
    ScatteringData, Scatterer, SearchBox, ZeroSettings,
};
use dpnls_core::soliton::solve_soliton as solve;
use dpnls_core::C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Datum = (C64, u8, C64, C64);

fn py_err(e: dpnls_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_data(data: &[Datum]) -> PyResult<Vec<DiscreteDatum>> {
    data.iter().map(|&(z, order, c0, c1)| DiscreteDatum::new(z, order, c0, c1).map_err(py_err)).collect()
}

fn parse_scattering(doc: &str) -> PyResult<ScatteringData> {
    let s: ScatteringData = serde_json::from_str(doc).map_err(|e| PyValueError::new_err(e.to_string()))?;
    s.validate().map_err(py_err)?;
    Ok(s)
}

fn scatterer(xs: Vec<f64>, q: Vec<C64>) -> PyResult<Scatterer> {
    Scatterer::new(InitialProfile::new(xs, q).map_err(py_err)?, JostSettings::default()).map_err(py_err)
}

/// q_sol(x, t) for discrete data.
#[pyfunction]
fn solve_soliton(data: Vec<Datum>, x: f64, t: f64) -> PyResult<C64> {
    Ok(solve(&to_data(&data)?, x, t).map_err(py_err)?.q)
}

/// q_sol at every x for one t.
#[pyfunction]
fn soliton_field(data: Vec<Datum>, xs: Vec<f64>, t: f64) -> PyResult<Vec<C64>> {
    let d = to_data(&data)?;
    xs.iter().map(|&x| Ok(solve(&d, x, t).map_err(py_err)?.q)).collect()
}

/// The long-time formula at (x, t); `cone` is (x1, x2, v1, v2).
#[pyfunction]
#[pyo3(signature = (scattering_json, x, t, cone=None))]
fn q_asymptotic<'py>(
    py: Python<'py>,
    scattering_json: &str,
    x: f64,
    t: f64,
    cone: Option<(f64, f64, f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = parse_scattering(scattering_json)?;
    let cone = cone.map(|(a, b, c, d)| Cone::new(a, b, c, d)).transpose().map_err(py_err)?;
    let v = q_asym(x, t, &s, cone.as_ref(), &AsymptoticSettings::default()).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("z0", v.z0)?;
    out.set_item("nu", v.nu)?;
    out.set_item("q_sol", v.q_sol_part)?;
    out.set_item("f", v.f_part)?;
    out.set_item("q_total", v.q_total)?;
    out.set_item("error_order", v.error_order)?;
    Ok(out)
}

/// (s11, s21) at real z for a profile sampled on a uniform grid.
#[pyfunction]
fn transmission(xs: Vec<f64>, q: Vec<C64>, z: f64) -> PyResult<(C64, C64)> {
    scatterer(xs, q)?.transmission(z).map_err(py_err)
}

/// Zeros of s11 in the box (re_min, re_max, im_min, im_max) with multiplicities.
#[pyfunction]
fn locate_zeros(xs: Vec<f64>, q: Vec<C64>, bx: (f64, f64, f64, f64)) -> PyResult<Vec<(C64, usize)>> {
    let sc = scatterer(xs, q)?;
    let bx = SearchBox::new(bx.0, bx.1, bx.2, bx.3).map_err(py_err)?;
    let zeros = locate(&sc, &bx, &ZeroSettings::default()).map_err(py_err)?;
    Ok(zeros.iter().map(|z| (z.z, z.multiplicity)).collect())
}

/// Full forward scattering; returns the scattering JSON document.
#[pyfunction]
fn scatter(xs: Vec<f64>, q: Vec<C64>, z_grid: Vec<f64>, bx: (f64, f64, f64, f64)) -> PyResult<String> {
    let sc = scatterer(xs, q)?;
    let bx = SearchBox::new(bx.0, bx.1, bx.2, bx.3).map_err(py_err)?;
    let zeros = locate(&sc, &bx, &ZeroSettings::default()).map_err(py_err)?;
    let zs: Vec<C64> = zeros.iter().map(|z| z.z).collect();
    let mut discrete = Vec::new();
    for z in &zeros {
        let order = u8::try_from(z.multiplicity).map_err(|_| PyValueError::new_err("multiplicity above 2"))?;
        discrete.push(norming_constants(&sc, z.z, order, derivative_radius(z.z, &zs, 0.4)).map_err(py_err)?);
    }
    let mut data = sc.reflection_coefficient(&z_grid).map_err(py_err)?;
    data.discrete = discrete;
    serde_json::to_string(&data).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Split-step evolution on the periodic grid [x_min, x_max) with `modes`
/// points; returns one list of samples per requested time.
#[pyfunction]
fn split_step(x_min: f64, x_max: f64, modes: usize, dt: f64, q0: Vec<C64>, times: Vec<f64>) -> PyResult<Vec<Vec<C64>>> {
    let grid = PeriodicGrid::new(x_min, x_max, modes).map_err(py_err)?;
    let field = SplitStep::new(grid, dt).map_err(py_err)?.evolve(&q0, &times).map_err(py_err)?;
    Ok(field.q)
}

#[pyfunction]
fn complex_gamma(w: C64) -> PyResult<C64> {
    gamma(w).map_err(py_err)
}

#[pymodule]
fn dpnls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_field, m)?)?;
    m.add_function(wrap_pyfunction!(q_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(locate_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(scatter, m)?)?;
    m.add_function(wrap_pyfunction!(split_step, m)?)?;
    m.add_function(wrap_pyfunction!(complex_gamma, m)?)?;
    Ok(())
}
