//! Python bindings: `import lsrquad`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lsrquad::bench::Algorithm;
use lsrquad::oracle::{self, DEFAULT_MAX_BITS};
use lsrquad::{Assignment, GeneratorSpec, Monomial, SelectionVariant};

create_exception!(lsrquad, LsrquadError, PyValueError);

fn err(e: lsrquad::Error) -> PyErr {
    LsrquadError::new_err(e.to_string())
}

/// A pseudo-Boolean function in multilinear form over variables `1..=n`.
#[pyclass(name = "Pbf", module = "lsrquad", skip_from_py_object)]
#[derive(Clone)]
struct PyPbf {
    inner: lsrquad::Pbf,
}

#[pymethods]
impl PyPbf {
    /// `terms` is a list of `(vars, coeff)`; duplicate index sets are summed.
    #[new]
    #[pyo3(signature = (n, terms = Vec::new()))]
    fn new(n: u32, terms: Vec<(Vec<u32>, f64)>) -> PyResult<Self> {
        let inner = lsrquad::Pbf::from_terms(n, terms.iter().map(|(v, c)| (&v[..], *c))).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: lsrquad::Pbf::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Canonical `(vars, coeff)` list, sorted by variables.
    fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        self.inner
            .canonical_terms()
            .into_iter()
            .map(|m| (m.vars().iter().map(|v| v.0).collect(), m.coeff()))
            .collect()
    }

    fn add_term(&mut self, vars: Vec<u32>, coeff: f64) -> PyResult<()> {
        self.inner.add_term(Monomial::of(&vars, coeff).map_err(err)?);
        Ok(())
    }

    #[getter]
    fn num_vars(&self) -> u32 {
        self.inner.num_vars()
    }

    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn density(&self, k: usize, n: u32) -> PyResult<f64> {
        self.inner.density(k, n).map_err(err)
    }

    /// `values[v - 1]` is the value of variable `v`.
    fn evaluate(&self, values: Vec<u8>) -> PyResult<f64> {
        self.inner.evaluate(&Assignment::from_values(&values)).map_err(err)
    }

    fn scale_heuristic(&self) -> f64 {
        self.inner.scale_heuristic()
    }

    /// Edges `(i, j, z)` of the pair multigraph in sorted order.
    fn graph_edges(&self) -> Vec<(u32, u32, u32)> {
        lsrquad::build_graph(&self.inner)
            .edges_sorted()
            .into_iter()
            .map(|e| (e.i.0, e.j.0, e.z.0))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Pbf(n={}, terms={}, degree={})",
            self.inner.num_vars(),
            self.inner.len(),
            self.inner.degree()
        )
    }
}

#[pyclass(name = "ReductionResult", module = "lsrquad", frozen)]
struct PyReductionResult {
    inner: lsrquad::ReductionResult,
}

#[pymethods]
impl PyReductionResult {
    #[getter]
    fn algorithm(&self) -> &str {
        &self.inner.algorithm
    }

    #[getter]
    fn reduced(&self) -> PyPbf {
        PyPbf {
            inner: self.inner.reduced.clone(),
        }
    }

    /// The unscaled penalty polynomial.
    #[getter]
    fn penalty(&self) -> PyPbf {
        PyPbf {
            inner: self.inner.penalty.clone(),
        }
    }

    /// `(h, i, j)` triples meaning `y_h = x_i x_j`.
    #[getter]
    fn substitutions(&self) -> Vec<(u32, u32, u32)> {
        self.inner
            .substitutions
            .iter()
            .map(|s| (s.fresh.0, s.pair.lo().0, s.pair.hi().0))
            .collect()
    }

    #[getter]
    fn introduced(&self) -> usize {
        self.inner.introduced()
    }

    #[getter]
    fn iterations_stage1(&self) -> usize {
        self.inner.iterations_stage1
    }

    #[getter]
    fn iterations_stage2(&self) -> usize {
        self.inner.iterations_stage2
    }

    /// Multi-edge mass before each stage-1 step and after the last.
    #[getter]
    fn mass_trace(&self) -> Vec<usize> {
        self.inner.mass_trace.clone()
    }

    #[pyo3(signature = (k, with_penalty = true))]
    fn density(&self, k: usize, with_penalty: bool) -> f64 {
        self.inner.density(k, with_penalty)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "ReductionResult(algorithm={:?}, introduced={}, degree={})",
            self.inner.algorithm,
            self.inner.introduced(),
            self.inner.reduced.degree()
        )
    }
}

#[pyclass(name = "VerificationReport", module = "lsrquad", frozen)]
struct PyReport {
    inner: oracle::VerificationReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn ok(&self) -> bool {
        self.inner.ok()
    }

    #[getter]
    fn passed(&self) -> usize {
        self.inner.passed
    }

    #[getter]
    fn failed(&self) -> usize {
        self.inner.failed
    }

    /// Names of failed checks.
    fn failures(&self) -> Vec<String> {
        self.inner
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

#[pyfunction]
#[pyo3(signature = (f, q = 1.0, seed = 0))]
fn lsr(py: Python<'_>, f: PyRef<'_, PyPbf>, q: f64, seed: u64) -> PyResult<PyReductionResult> {
    let f = f.inner.clone();
    let inner = py.detach(|| lsrquad::lsr(f, q, seed)).map_err(err)?;
    Ok(PyReductionResult { inner })
}

#[pyfunction]
#[pyo3(signature = (f, k, q = 1.0, seed = 0))]
fn reduce_to_degree_k(
    py: Python<'_>,
    f: PyRef<'_, PyPbf>,
    k: usize,
    q: f64,
    seed: u64,
) -> PyResult<PyReductionResult> {
    let f = f.inner.clone();
    let inner = py
        .detach(|| lsrquad::reduce_to_degree_k(f, q, k, seed))
        .map_err(err)?;
    Ok(PyReductionResult { inner })
}

/// `variant` is one of "sparse", "medium", "dense".
#[pyfunction]
#[pyo3(signature = (f, variant = "dense"))]
fn quadratise_baseline(py: Python<'_>, f: PyRef<'_, PyPbf>, variant: &str) -> PyResult<PyReductionResult> {
    let v: SelectionVariant = variant.parse().map_err(err)?;
    let f = f.inner.clone();
    let inner = py
        .detach(|| lsrquad::quadratise_baseline(f, v))
        .map_err(err)?;
    Ok(PyReductionResult { inner })
}

/// Runs a named configuration such as "lsr-q0.5" or "base-medium".
#[pyfunction]
#[pyo3(signature = (f, algorithm, seed = 0))]
fn quadratise(py: Python<'_>, f: PyRef<'_, PyPbf>, algorithm: &str, seed: u64) -> PyResult<PyReductionResult> {
    let algo: Algorithm = algorithm.parse().map_err(err)?;
    let f = f.inner.clone();
    let inner = py.detach(|| algo.run(f, seed, None)).map_err(err)?;
    Ok(PyReductionResult { inner })
}

#[pyfunction]
fn penalty_term(i: u32, j: u32, h: u32) -> PyResult<PyPbf> {
    let inner = lsrquad::penalty_term(lsrquad::VarId(i), lsrquad::VarId(j), lsrquad::VarId(h)).map_err(err)?;
    Ok(PyPbf { inner })
}

#[pyfunction]
#[pyo3(signature = (n, degree, density, seed = 0, coeff_range = (-10.0, 10.0)))]
fn generate(n: u32, degree: usize, density: f64, seed: u64, coeff_range: (f64, f64)) -> PyResult<PyPbf> {
    let spec = GeneratorSpec {
        coeff_range: [coeff_range.0, coeff_range.1],
        ..GeneratorSpec::new(n, degree, density, seed)
    };
    Ok(PyPbf {
        inner: lsrquad::generate(&spec).map_err(err)?,
    })
}

#[pyfunction]
fn oracle_penalty_scale(f: PyRef<'_, PyPbf>) -> f64 {
    oracle::oracle_penalty_scale(&f.inner)
}

/// Exhaustive check; `c` defaults to `oracle_penalty_scale(original)`.
#[pyfunction]
#[pyo3(signature = (original, result, c = None, max_bits = DEFAULT_MAX_BITS))]
fn check_quadratisation(
    py: Python<'_>,
    original: PyRef<'_, PyPbf>,
    result: PyRef<'_, PyReductionResult>,
    c: Option<f64>,
    max_bits: usize,
) -> PyResult<PyReport> {
    let f = &original.inner;
    let r = &result.inner;
    let c = c.unwrap_or_else(|| oracle::oracle_penalty_scale(f));
    let mut inner = py
        .detach(|| oracle::check_quadratisation(f, r, c, max_bits))
        .map_err(err)?;
    inner.extend(oracle::check_variable_bounds(f, r));
    Ok(PyReport { inner })
}

#[pyfunction]
fn check_penalty_property() -> PyReport {
    PyReport {
        inner: oracle::check_penalty_property(),
    }
}

#[pyfunction]
#[pyo3(signature = (f, q = 1.0, seed = 0))]
fn check_incremental_graph(f: PyRef<'_, PyPbf>, q: f64, seed: u64) -> PyResult<PyReport> {
    Ok(PyReport {
        inner: oracle::check_incremental_graph(&f.inner, q, seed).map_err(err)?,
    })
}

/// `(n, degree, terms)` rows of full-density term counts.
#[pyfunction]
fn terms_scaling_report(n_max: u64, deg_max: u64) -> PyResult<Vec<(u64, u64, u128)>> {
    let rows = lsrquad::terms_scaling_report(n_max, deg_max).map_err(err)?;
    Ok(rows.into_iter().map(|r| (r.n, r.degree, r.terms)).collect())
}

#[pymodule(name = "lsrquad")]
fn lsrquad_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LsrquadError", m.py().get_type::<LsrquadError>())?;
    m.add_class::<PyPbf>()?;
    m.add_class::<PyReductionResult>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(lsr, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_to_degree_k, m)?)?;
    m.add_function(wrap_pyfunction!(quadratise_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(quadratise, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_term, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_penalty_scale, m)?)?;
    m.add_function(wrap_pyfunction!(check_quadratisation, m)?)?;
    m.add_function(wrap_pyfunction!(check_penalty_property, m)?)?;
    m.add_function(wrap_pyfunction!(check_incremental_graph, m)?)?;
    m.add_function(wrap_pyfunction!(terms_scaling_report, m)?)?;
    Ok(())
}
