//! Python bindings for `rydberg_fusion`.
//!
//! States come back as `(labels, amplitudes)` pairs and matrices as nested
//! lists of `complex`, so nothing here needs numpy.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rydberg_fusion::dynamics::{fidelity_trace as trace_fidelity, EvolutionSpec, HamiltonianSource};
use rydberg_fusion::fusion::{self, GateModel, Protocol};
use rydberg_fusion::hamiltonian::{self, Subspace};
use rydberg_fusion::quantum::StateVector;
use rydberg_fusion::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn protocol(name: &str) -> PyResult<Protocol> {
    match name.to_ascii_lowercase().as_str() {
        "ghz" => Ok(Protocol::Ghz),
        "w" => Ok(Protocol::W),
        _ => Err(PyValueError::new_err(format!(
            "unknown protocol `{name}` (expected ghz or w)"
        ))),
    }
}

fn gate_model(gate: &str) -> PyResult<GateModel> {
    match gate {
        "ideal" => Ok(GateModel::ideal()),
        "physical" => GateModel::numerical(&hamiltonian::AtomParams::physical()).map_err(py_err),
        _ => Err(PyValueError::new_err(format!(
            "unknown gate `{gate}` (expected ideal or physical)"
        ))),
    }
}

fn unpack(state: &StateVector) -> (Vec<String>, Vec<Complex64>) {
    let labels = state.basis().labels().map(|l| l.to_string()).collect();
    (labels, state.amplitudes().iter().copied().collect())
}

fn rows(m: &rydberg_fusion::quantum::Operator) -> Vec<Vec<Complex64>> {
    let m = m.matrix();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Laser and decay parameters for a pair of atoms. All rates share one
/// angular-frequency unit.
#[pyclass(name = "AtomParams", module = "pyrydberg", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyAtomParams {
    inner: hamiltonian::AtomParams,
}

#[pymethods]
impl PyAtomParams {
    #[new]
    #[pyo3(signature = (omega_a, omega_b, delta_a, delta_b, delta_rr, gamma = 0.0))]
    fn new(
        omega_a: f64,
        omega_b: f64,
        delta_a: f64,
        delta_b: f64,
        delta_rr: f64,
        gamma: f64,
    ) -> PyResult<Self> {
        let inner = hamiltonian::AtomParams::new(omega_a, omega_b, delta_a, delta_b, delta_rr, gamma)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn fig2() -> Self {
        Self { inner: hamiltonian::AtomParams::fig2() }
    }

    #[staticmethod]
    fn physical() -> Self {
        Self { inner: hamiltonian::AtomParams::physical() }
    }

    #[getter]
    fn omega_a(&self) -> f64 {
        self.inner.omega_a
    }
    #[getter]
    fn omega_b(&self) -> f64 {
        self.inner.omega_b
    }
    #[getter]
    fn delta_a(&self) -> f64 {
        self.inner.delta_a
    }
    #[getter]
    fn delta_b(&self) -> f64 {
        self.inner.delta_b
    }
    #[getter]
    fn delta_rr(&self) -> f64 {
        self.inner.delta_rr
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn with_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(gamma);
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn with_delta_omega(&self, delta_omega: f64) -> PyResult<Self> {
        let inner = self.inner.with_delta_omega(delta_omega);
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn optimal_time(&self) -> f64 {
        self.inner.optimal_time()
    }

    fn antiblockade_satisfied(&self) -> bool {
        self.inner.antiblockade_satisfied()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "AtomParams(omega_a={}, omega_b={}, delta_a={}, delta_b={}, delta_rr={}, gamma={})",
            p.omega_a, p.omega_b, p.delta_a, p.delta_b, p.delta_rr, p.gamma
        )
    }
}

/// Closed-form propagator coefficients `(a, b, c, d)` at pulse area `theta`.
#[pyfunction]
fn closed_form_coeffs(theta: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    let k = hamiltonian::closed_form_coeffs(theta);
    (k.a, k.b, k.c, k.d)
}

/// Effective Hamiltonian on the five-state block, or on all nine pair
/// states with `extended=True`.
#[pyfunction]
#[pyo3(signature = (params, extended = false))]
fn effective_hamiltonian(params: PyAtomParams, extended: bool) -> PyResult<Vec<Vec<Complex64>>> {
    let sub = if extended { Subspace::Extended9 } else { Subspace::Full5 };
    let h = hamiltonian::effective_hamiltonian(&params.inner, sub).map_err(py_err)?;
    Ok(rows(&h))
}

/// Nine-state interaction-picture Hamiltonian at time `t`.
#[pyfunction]
fn full_hamiltonian(params: PyAtomParams, t: f64) -> Vec<Vec<Complex64>> {
    rows(&hamiltonian::full_hamiltonian(&params.inner, t))
}

/// Fidelity to the ideal gate output over `[0, t_final]`. Returns
/// `(times, fidelities)`.
#[pyfunction]
#[pyo3(signature = (params, initial = "00", model = "full", t_final = None, samples = 100, steps = None))]
fn fidelity_trace(
    py: Python<'_>,
    params: PyAtomParams,
    initial: &str,
    model: &str,
    t_final: Option<f64>,
    samples: usize,
    steps: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let source = match model {
        "full" => HamiltonianSource::Full,
        "effective" => HamiltonianSource::Effective,
        "closed_form" => HamiltonianSource::ClosedForm,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown model `{model}` (expected full, effective or closed_form)"
            )))
        }
    };
    let p = params.inner;
    let t_final = t_final.unwrap_or_else(|| p.optimal_time());
    py.detach(|| {
        let basis = source.basis();
        let label = initial.parse().map_err(py_err)?;
        let psi = StateVector::basis_state(basis.clone(), &label).map_err(py_err)?;
        let ideal = hamiltonian::ideal_gate_target(&basis, initial).map_err(py_err)?;
        let mut spec = EvolutionSpec::new(source, p, t_final).with_samples(samples.max(1));
        if let Some(n) = steps {
            spec = spec.with_steps(n);
        }
        let trace = trace_fidelity(&spec, &psi, &ideal).map_err(py_err)?;
        Ok((trace.times, trace.fidelities))
    })
}

/// One measurement branch of a fusion run.
#[pyclass(name = "FusionBranch", module = "pyrydberg", frozen, get_all)]
struct PyFusionBranch {
    outcome: String,
    probability: f64,
    verdict: String,
    correction: String,
    fidelity: Option<f64>,
    post_state: Option<(Vec<String>, Vec<Complex64>)>,
}

#[pymethods]
impl PyFusionBranch {
    fn __repr__(&self) -> String {
        format!(
            "FusionBranch(outcome='{}', probability={:.9}, verdict='{}')",
            self.outcome, self.probability, self.verdict
        )
    }
}

/// Fuse an `m`-qubit and an `n`-qubit register held by Alice and Bob.
/// `gate` is `"ideal"` or `"physical"`.
#[pyfunction]
#[pyo3(signature = (protocol_name, m, n, gate = "ideal"))]
fn run_fusion(
    py: Python<'_>,
    protocol_name: &str,
    m: usize,
    n: usize,
    gate: &str,
) -> PyResult<Vec<PyFusionBranch>> {
    let protocol = protocol(protocol_name)?;
    let branches = py.detach(|| {
        let model = gate_model(gate)?;
        let (a, b) = fusion::registers(protocol, m, n).map_err(py_err)?;
        fusion::run_fusion(&a, &b, &model).map_err(py_err)
    })?;
    Ok(branches
        .iter()
        .map(|br| PyFusionBranch {
            outcome: br.outcome.to_string(),
            probability: br.probability,
            verdict: br.verdict.to_string(),
            correction: br.describe_correction(),
            fidelity: br.corrected_fidelity,
            post_state: br.post_state.as_ref().map(|r| unpack(r.state())),
        })
        .collect())
}

/// Success probability of W fusion as an exact `(numerator, denominator)`.
#[pyfunction]
fn w_success_probability(m: usize, n: usize) -> PyResult<(u64, u64)> {
    let f = fusion::w_success_probability(m, n).map_err(py_err)?;
    Ok((f.num, f.den))
}

/// Probability-weighted fidelity of the corrected successful branches.
#[pyfunction]
#[pyo3(signature = (protocol_name, m, n, gate = "ideal"))]
fn fusion_fidelity(py: Python<'_>, protocol_name: &str, m: usize, n: usize, gate: &str) -> PyResult<f64> {
    let protocol = protocol(protocol_name)?;
    py.detach(|| {
        let model = gate_model(gate)?;
        fusion::fusion_fidelity(&model, protocol, m, n).map_err(py_err)
    })
}

#[pyfunction]
fn ghz_state(k: usize) -> PyResult<(Vec<String>, Vec<Complex64>)> {
    Ok(unpack(&fusion::ghz_state(k).map_err(py_err)?))
}

#[pyfunction]
fn w_state(k: usize) -> PyResult<(Vec<String>, Vec<Complex64>)> {
    Ok(unpack(&fusion::w_state(k).map_err(py_err)?))
}

#[pymodule]
fn pyrydberg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAtomParams>()?;
    m.add_class::<PyFusionBranch>()?;
    m.add_function(wrap_pyfunction!(closed_form_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(effective_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(full_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_trace, m)?)?;
    m.add_function(wrap_pyfunction!(run_fusion, m)?)?;
    m.add_function(wrap_pyfunction!(w_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(fusion_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(w_state, m)?)?;
    Ok(())
}
