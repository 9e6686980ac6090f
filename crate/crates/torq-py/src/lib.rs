//! Python bindings for the torq core: circuit construction, spectra,
//! flux sweeps, qubit-parameter extraction, disorder ensembles and
//! toroidal-coupling estimates.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use torq::circuit::{Bias, CircuitParams, Design};
use torq::disorder::{run_ensemble, DisorderSpec, Distribution};
use torq::hamiltonian::{build_charge_basis, build_flux_grid, ChargeBasisSpec, FluxGridSpec};
use torq::observables::{circulating_current, extract_qubit_params, SweepPoint};
use torq::solve::solve_lowest;
use torq::toroidal::{self, SolenoidGeometry};

fn err(e: torq::error::TorqError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CircuitParams", skip_from_py_object)]
#[derive(Clone)]
struct PyCircuitParams {
    inner: CircuitParams,
}

#[pymethods]
impl PyCircuitParams {
    #[new]
    #[pyo3(signature = (c_a, c_b, c_f, e_a, e_b, e_f, e_c_ref_over_e_j, design="open_b", f=None, i_ext=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        c_a: f64,
        c_b: f64,
        c_f: f64,
        e_a: f64,
        e_b: f64,
        e_f: f64,
        e_c_ref_over_e_j: f64,
        design: &str,
        f: Option<f64>,
        i_ext: Option<f64>,
    ) -> PyResult<Self> {
        let design = match design {
            "open_b" => Design::OpenB,
            "closed_a" => Design::ClosedA,
            other => {
                return Err(PyValueError::new_err(format!(
                    "design must be \"open_b\" or \"closed_a\", got {other:?}"
                )))
            }
        };
        let bias = match (f, i_ext) {
            (Some(f), None) => Bias::ReducedFlux(f),
            (None, Some(i)) => Bias::CurrentExt(i),
            _ => {
                return Err(PyValueError::new_err(
                    "exactly one of f= or i_ext= is required",
                ))
            }
        };
        let inner = CircuitParams {
            c_a,
            c_b,
            c_f,
            e_a,
            e_b,
            e_f,
            design,
            bias,
            e_c_ref_over_e_j,
        }
        .validated()
        .map_err(err)?;
        Ok(Self { inner })
    }

    /// Copy with a different reduced flux.
    fn with_f(&self, f: f64) -> Self {
        Self {
            inner: self.inner.clone().with_reduced_flux(f),
        }
    }

    /// Mode charging energies (E_C_a, E_C_b) in E_J units.
    fn charging_energies(&self) -> (f64, f64) {
        torq::circuit::charging_energies(&self.inner)
    }

    /// Mode rotation angle theta, radians.
    fn mode_angle(&self) -> f64 {
        torq::circuit::compute_transform(&self.inner).theta
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Lowest-k eigenvalues (E_J units) and solver residuals at the
/// parameters' bias point.
#[pyfunction]
#[pyo3(signature = (params, k=2, n_max=10, backend="charge", grid_points=201, half_width=None))]
fn spectrum(
    params: &PyCircuitParams,
    k: usize,
    n_max: usize,
    backend: &str,
    grid_points: usize,
    half_width: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let h = match backend {
        "charge" => build_charge_basis(&params.inner, &ChargeBasisSpec::new(n_max).map_err(err)?)
            .map_err(err)?,
        "grid" => {
            let hw = half_width.unwrap_or(std::f64::consts::PI);
            build_flux_grid(&params.inner, &FluxGridSpec::square(hw, grid_points).map_err(err)?)
                .map_err(err)?
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "backend must be \"charge\" or \"grid\", got {other:?}"
            )))
        }
    };
    let sp = solve_lowest(&h, k).map_err(err)?;
    Ok((sp.energies, sp.residuals))
}

/// Flux sweep in the charge basis. Returns per-point rows
/// (f, energies, I0, I1) with energies in E_J and currents in I_c units.
#[pyfunction]
#[pyo3(signature = (params, f_values, k=2, n_max=10))]
fn sweep(
    params: &PyCircuitParams,
    f_values: Vec<f64>,
    k: usize,
    n_max: usize,
) -> PyResult<Vec<(f64, Vec<f64>, f64, f64)>> {
    let spec = ChargeBasisSpec::new(n_max).map_err(err)?;
    let k = k.max(2);
    f_values
        .into_iter()
        .map(|f| {
            let p = params.inner.clone().with_reduced_flux(f);
            let h = build_charge_basis(&p, &spec).map_err(err)?;
            let sp = solve_lowest(&h, k).map_err(err)?;
            let i0 = circulating_current(&h, &sp, 0);
            let i1 = circulating_current(&h, &sp, 1);
            Ok((f, sp.energies, i0, i1))
        })
        .collect()
}

#[pyclass(name = "QubitParams")]
struct PyQubitParams {
    #[pyo3(get)]
    delta: f64,
    #[pyo3(get)]
    f_degeneracy: f64,
    #[pyo3(get)]
    i_p: f64,
    #[pyo3(get)]
    i_plateau: Option<f64>,
    #[pyo3(get)]
    epsilon_of_f: Vec<(f64, f64)>,
}

/// Two-level reduction (Delta, epsilon(f), I_p) from a flux sweep around
/// the degeneracy point.
#[pyfunction]
#[pyo3(signature = (params, f_values, n_max=10))]
fn qubit_params(
    params: &PyCircuitParams,
    f_values: Vec<f64>,
    n_max: usize,
) -> PyResult<PyQubitParams> {
    let rows = sweep(params, f_values, 2, n_max)?;
    let pts: Vec<SweepPoint> = rows
        .iter()
        .map(|(f, e, i0, _)| (*f, e[0], e[1], *i0))
        .collect();
    let q = extract_qubit_params(&pts).map_err(err)?;
    Ok(PyQubitParams {
        delta: q.delta,
        f_degeneracy: q.f_degeneracy,
        i_p: q.i_p,
        i_plateau: q.i_plateau,
        epsilon_of_f: q.epsilon_of_f,
    })
}

/// Qubit-field toroidal coupling estimate in SI units, as a dict.
#[pyfunction]
#[pyo3(signature = (v_eff, current, field, freq, rms=false))]
fn coupling_report<'py>(
    py: Python<'py>,
    v_eff: f64,
    current: f64,
    field: f64,
    freq: f64,
    rms: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let r = toroidal::coupling_report(v_eff, current, field, freq, rms).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("prefactor_j_per_v_m_s", r.prefactor_j_per_v_m_s)?;
    d.set_item("u_int_j", r.u_int_j)?;
    d.set_item("u_int_hz", r.u_int_hz)?;
    d.set_item("ratio_to_published", r.ratio_to_published)?;
    d.set_item("u_int_ratio_to_published", r.u_int_ratio_to_published)?;
    Ok(d)
}

/// Classical toroidal-solenoid moment: (j0, magnitude, direction).
#[pyfunction]
#[pyo3(signature = (n_turns, current, tube_radius, torus_diameter))]
fn solenoid_moment(
    n_turns: u64,
    current: f64,
    tube_radius: f64,
    torus_diameter: f64,
) -> PyResult<(f64, f64, [f64; 3])> {
    let g = SolenoidGeometry {
        n_turns,
        current,
        tube_radius,
        torus_diameter,
        axis: [0.0, 0.0, 1.0],
    };
    let m = toroidal::solenoid_moment(&g).map_err(err)?;
    Ok((m.j0, m.magnitude, m.direction))
}

/// Seeded fabrication-disorder ensemble; returns
/// (fraction_crossing_in_window, zero_crossings).
#[pyfunction]
#[pyo3(signature = (params, fractional_spread, n_realizations, seed, f_values, n_max=6, distribution="uniform_pm"))]
fn disorder_ensemble(
    params: &PyCircuitParams,
    fractional_spread: f64,
    n_realizations: u64,
    seed: u64,
    f_values: Vec<f64>,
    n_max: usize,
    distribution: &str,
) -> PyResult<(f64, Vec<Option<f64>>)> {
    let distribution = match distribution {
        "uniform_pm" => Distribution::UniformPm,
        "gaussian" => Distribution::Gaussian,
        other => {
            return Err(PyValueError::new_err(format!(
                "distribution must be \"uniform_pm\" or \"gaussian\", got {other:?}"
            )))
        }
    };
    let d = DisorderSpec {
        fractional_spread,
        n_realizations,
        distribution,
        seed,
    };
    let basis = ChargeBasisSpec::new(n_max).map_err(err)?;
    let (summary, _) = run_ensemble(&params.inner, &d, &f_values, &basis).map_err(err)?;
    Ok((summary.fraction_crossing_in_window, summary.zero_crossings))
}

#[pymodule]
fn torq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuitParams>()?;
    m.add_class::<PyQubitParams>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_params, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_report, m)?)?;
    m.add_function(wrap_pyfunction!(solenoid_moment, m)?)?;
    m.add_function(wrap_pyfunction!(disorder_ensemble, m)?)?;
    Ok(())
}
