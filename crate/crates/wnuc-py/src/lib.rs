//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wnuc::geometry as geo;
use wnuc::numerics::{self, MpParams};
use wnuc::recovery::{self as rec, MeasurementEnsemble, Program, SolverParams};
use wnuc::sdim::{self, McProgram, McSolverParams, PsiOptions, ScaledWeights, TangentBlocks};
use wnuc::{optweights, weighting, Matrix};

pub mod convert;

use convert::{from_matrix, to_matrix, to_vector};

fn py_err(e: wnuc::Error) -> PyErr {
    match e {
        wnuc::Error::NumericFailure(_) | wnuc::Error::Undefined(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn psi_options(tangent: &str) -> PyResult<PsiOptions> {
    let tangent = match tangent {
        "support_only" => TangentBlocks::SupportOnly,
        "complete" => TangentBlocks::Complete,
        other => return Err(PyValueError::new_err(format!("unknown tangent option {other:?}"))),
    };
    Ok(PsiOptions { tangent, ..Default::default() })
}

#[pyclass(name = "SubspacePrior", frozen)]
#[derive(Clone)]
struct PySubspacePrior(geo::SubspacePrior);

#[pymethods]
impl PySubspacePrior {
    #[new]
    fn new(n: usize, r: usize, r_prime: usize, theta_u: Vec<f64>, theta_v: Vec<f64>) -> PyResult<Self> {
        geo::SubspacePrior::new(n, r, r_prime, theta_u, theta_v).map(Self).map_err(py_err)
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn r(&self) -> usize {
        self.0.r
    }
    #[getter]
    fn r_prime(&self) -> usize {
        self.0.r_prime
    }
    #[getter]
    fn theta_u(&self) -> Vec<f64> {
        self.0.theta_u.clone()
    }
    #[getter]
    fn theta_v(&self) -> Vec<f64> {
        self.0.theta_v.clone()
    }
    fn block_widths(&self) -> [usize; 4] {
        self.0.block_widths()
    }
    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "SubspacePrior(n={}, r={}, r_prime={}, theta_u={:?}, theta_v={:?})",
            p.n, p.r, p.r_prime, p.theta_u, p.theta_v
        )
    }
}

#[pyclass(name = "WeightVector", frozen)]
#[derive(Clone, Copy)]
struct PyWeightVector(weighting::WeightVector);

#[pymethods]
impl PyWeightVector {
    #[new]
    fn new(w1: f64, w2: f64, w3: f64) -> PyResult<Self> {
        weighting::WeightVector::new(w1, w2, w3).map(Self).map_err(py_err)
    }
    #[getter]
    fn w4(&self) -> f64 {
        self.0.w4()
    }
    fn as_tuple(&self) -> (f64, f64, f64, f64) {
        let [a, b, c, d] = self.0.as_array();
        (a, b, c, d)
    }
    fn reciprocal(&self) -> Self {
        Self(self.0.reciprocal())
    }
    fn scaled(&self, c: f64) -> Self {
        Self(self.0.scaled(c))
    }
    fn __repr__(&self) -> String {
        let w = self.0;
        format!("WeightVector({}, {}, {}; w4={})", w.w1, w.w2, w.w3, w.w4())
    }
}

/// Random ground truth and prior subspaces with the prescribed angles.
#[pyclass(name = "PriorInstance", frozen)]
struct PyPriorInstance(geo::PriorInstance);

#[pymethods]
impl PyPriorInstance {
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.0.truth.matrix())
    }
    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.0.truth.u)
    }
    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.0.truth.v)
    }
    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.0.truth.sigma.clone()
    }
    #[getter]
    fn u_tilde(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.0.u_tilde)
    }
    #[getter]
    fn v_tilde(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.0.v_tilde)
    }
    #[getter]
    fn prior(&self) -> PySubspacePrior {
        PySubspacePrior(self.0.prior.clone())
    }
}

#[pyfunction]
fn make_prior_instance(prior: &PySubspacePrior, seed: u64) -> PyResult<PyPriorInstance> {
    geo::make_prior_instance(&prior.0, seed).map(PyPriorInstance).map_err(py_err)
}

/// Principal angles in degrees, non-increasing.
#[pyfunction]
fn principal_angles(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    geo::principal_angles(&to_matrix(&a)?, &to_matrix(&b)?).map_err(py_err)
}

#[pyfunction]
fn apply_h(
    w: &PyWeightVector,
    u_tilde: Vec<Vec<f64>>,
    v_tilde: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let (u, v, z) = (to_matrix(&u_tilde)?, to_matrix(&v_tilde)?, to_matrix(&z)?);
    check_square(&z, &u, &v)?;
    Ok(from_matrix(&weighting::apply_h(&w.0, &u, &v, &z)))
}

#[pyfunction]
fn apply_h_inverse(
    w: &PyWeightVector,
    u_tilde: Vec<Vec<f64>>,
    v_tilde: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let (u, v, z) = (to_matrix(&u_tilde)?, to_matrix(&v_tilde)?, to_matrix(&z)?);
    check_square(&z, &u, &v)?;
    Ok(from_matrix(&weighting::apply_h_inverse(&w.0, &u, &v, &z)))
}

fn check_square(z: &Matrix, u: &Matrix, v: &Matrix) -> PyResult<()> {
    let n = z.nrows();
    if z.ncols() != n || u.nrows() != n || v.nrows() != n {
        return Err(PyValueError::new_err("z must be n×n and the prior bases must have n rows"));
    }
    Ok(())
}

#[pyfunction]
#[pyo3(signature = (t, n, r, r_prime, tangent = "support_only"))]
fn psi_nuclear(t: f64, n: usize, r: usize, r_prime: usize, tangent: &str) -> PyResult<f64> {
    sdim::psi_nuclear(t, n, r, r_prime, psi_options(tangent)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (v, prior, tangent = "support_only"))]
fn psi_weighted(v: (f64, f64, f64), prior: &PySubspacePrior, tangent: &str) -> PyResult<f64> {
    let s = ScaledWeights::new(v.0, v.1, v.2).map_err(py_err)?;
    sdim::psi_weighted(&s, &prior.0, psi_options(tangent)?).map_err(py_err)
}

fn report_dict<'py>(py: Python<'py>, r: &sdim::ThresholdReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("m_hat", r.m_hat)?;
    d.set_item("t_star", r.t_star)?;
    d.set_item("v_star", r.v_star)?;
    d.set_item("error_lower", r.error_lower)?;
    d.set_item("c", r.c)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, r, r_prime, tangent = "support_only"))]
fn nuclear_threshold<'py>(
    py: Python<'py>,
    n: usize,
    r: usize,
    r_prime: usize,
    tangent: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = sdim::nuclear_threshold(n, r, r_prime, psi_options(tangent)?).map_err(py_err)?;
    report_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (w, prior, tangent = "support_only"))]
fn weighted_threshold<'py>(
    py: Python<'py>,
    w: &PyWeightVector,
    prior: &PySubspacePrior,
    tangent: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = sdim::weighted_threshold(&w.0, &prior.0, psi_options(tangent)?).map_err(py_err)?;
    report_dict(py, &rep)
}

type Optimum = (PyWeightVector, (f64, f64, f64), f64, usize);

/// Returns (w_star, v_star, m_hat, iterations).
#[pyfunction]
#[pyo3(signature = (prior, tangent = "support_only"))]
fn optimize_weights(prior: &PySubspacePrior, tangent: &str) -> PyResult<Optimum> {
    let cfg = optweights::OptimizerConfig { psi: psi_options(tangent)?, ..Default::default() };
    let o = optweights::optimize_weights(&prior.0, &cfg).map_err(py_err)?;
    let [a, b, c] = o.v_star.as_array();
    Ok((PyWeightVector(o.w_star), (a, b, c), o.m_hat, o.iterations))
}

/// Monte-Carlo δ/n² for the instance; `w=None` samples the nuclear cone.
#[pyfunction]
#[pyo3(signature = (instance, trials, seed, w = None))]
fn mc_statistical_dimension(
    instance: &PyPriorInstance,
    trials: usize,
    seed: u64,
    w: Option<PyWeightVector>,
) -> PyResult<(f64, Option<f64>)> {
    let prog = w.map_or(McProgram::Nuclear, |w| McProgram::Weighted(w.0));
    let e =
        sdim::mc_statistical_dimension(prog, &instance.0, trials, seed, McSolverParams::default()).map_err(py_err)?;
    Ok((e.mean, e.std_error))
}

/// Gaussian measurements: returns (A, y) with row k of A the column-stacked A_k.
#[pyfunction]
fn measure(x: Vec<Vec<f64>>, m: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let e = rec::measure(&to_matrix(&x)?, m, seed).map_err(py_err)?;
    Ok((from_matrix(&e.a), e.y.iter().copied().collect()))
}

fn ensemble(a: &[Vec<f64>], y: &[f64]) -> PyResult<MeasurementEnsemble> {
    let a = to_matrix(a)?;
    let nn = a.ncols();
    let n = (nn as f64).sqrt().round() as usize;
    if n * n != nn || a.nrows() != y.len() {
        return Err(PyValueError::new_err("A must be m×n² and y must have m entries"));
    }
    Ok(MeasurementEnsemble { m: a.nrows(), n, a, y: to_vector(y) })
}

fn solved<'py>(
    py: Python<'py>,
    res: wnuc::Result<(Matrix, rec::Diagnostics)>,
) -> PyResult<(Vec<Vec<f64>>, Bound<'py, PyDict>)> {
    let (x, d) = res.map_err(py_err)?;
    let info = PyDict::new(py);
    info.set_item("iterations", d.iterations)?;
    info.set_item("converged", d.converged)?;
    info.set_item("primal_residual", d.primal_residual)?;
    info.set_item("dual_residual", d.dual_residual)?;
    info.set_item("feasibility", d.feasibility)?;
    Ok((from_matrix(&x), info))
}

#[pyfunction]
#[pyo3(signature = (a, y, max_iter = 2000))]
fn solve_nuclear<'py>(
    py: Python<'py>,
    a: Vec<Vec<f64>>,
    y: Vec<f64>,
    max_iter: usize,
) -> PyResult<(Vec<Vec<f64>>, Bound<'py, PyDict>)> {
    let e = ensemble(&a, &y)?;
    let prm = SolverParams { max_iter, ..Default::default() };
    solved(py, rec::solve_nuclear(&e, &prm))
}

#[pyfunction]
#[pyo3(signature = (a, y, w, u_tilde, v_tilde, max_iter = 2000))]
fn solve_weighted_nuclear<'py>(
    py: Python<'py>,
    a: Vec<Vec<f64>>,
    y: Vec<f64>,
    w: &PyWeightVector,
    u_tilde: Vec<Vec<f64>>,
    v_tilde: Vec<Vec<f64>>,
    max_iter: usize,
) -> PyResult<(Vec<Vec<f64>>, Bound<'py, PyDict>)> {
    let e = ensemble(&a, &y)?;
    let (u, v) = (to_matrix(&u_tilde)?, to_matrix(&v_tilde)?);
    if u.nrows() != e.n || v.nrows() != e.n {
        return Err(PyValueError::new_err("prior bases must have n rows"));
    }
    let prm = SolverParams { max_iter, ..Default::default() };
    solved(py, rec::solve_weighted_nuclear(&e, &w.0, &u, &v, &prm))
}

#[pyfunction]
fn relative_error(x: Vec<Vec<f64>>, x_hat: Vec<Vec<f64>>) -> PyResult<f64> {
    rec::relative_error(&to_matrix(&x)?, &to_matrix(&x_hat)?).map_err(py_err)
}

/// (m, successes, trials, mean_rel_err)
type CellTuple = (usize, usize, usize, f64);

/// Success counts per program (None = nuclear) and m: a list of rows of
/// (m, successes, trials, mean_rel_err).
#[pyfunction]
fn phase_curve(
    py: Python<'_>,
    prior: &PySubspacePrior,
    programs: Vec<Option<PyWeightVector>>,
    m_grid: Vec<usize>,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Vec<CellTuple>>> {
    let progs: Vec<Program> = programs.iter().map(|w| w.map_or(Program::Nuclear, |w| Program::Weighted(w.0))).collect();
    let p = prior.0.clone();
    let table = py
        .allow_threads(|| rec::phase_curve(&p, &progs, &m_grid, trials, seed, &SolverParams::default()))
        .map_err(py_err)?;
    Ok(table.iter().map(|row| row.iter().map(|c| (c.m, c.successes, c.trials, c.mean_rel_err)).collect()).collect())
}

#[pyfunction]
fn phi(tau: f64, s: f64) -> PyResult<f64> {
    numerics::phi(tau, &MpParams::new(s).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn varphi(alpha: f64) -> f64 {
    numerics::varphi(alpha)
}

#[pyfunction]
fn mp_cdf(x: f64, s: f64) -> PyResult<f64> {
    numerics::mp_cdf(x, &MpParams::new(s).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn ks_distance_mp(sample: Vec<f64>, s: f64) -> PyResult<f64> {
    numerics::ks_distance_mp(&sample, &MpParams::new(s).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn expected_shrinkage_mc(n1: usize, n2: usize, f: Vec<f64>, trials: usize, seed: u64) -> PyResult<(f64, Option<f64>)> {
    numerics::expected_shrinkage_mc(n1, n2, &f, trials, seed).map_err(py_err)
}

#[pyfunction]
fn expected_shrinkage_mp(n1: usize, n2: usize, f: Vec<f64>) -> PyResult<f64> {
    numerics::expected_shrinkage_mp(n1, n2, &f).map_err(py_err)
}

#[pyfunction]
fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    from_matrix(&numerics::gaussian_matrix(rows, cols, seed))
}

#[pyfunction]
fn singular_values(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    numerics::singular_values(&to_matrix(&m)?).map_err(py_err)
}

#[pymodule]
fn wnuc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", wnuc::VERSION)?;
    m.add_class::<PySubspacePrior>()?;
    m.add_class::<PyWeightVector>()?;
    m.add_class::<PyPriorInstance>()?;
    m.add_function(wrap_pyfunction!(make_prior_instance, m)?)?;
    m.add_function(wrap_pyfunction!(principal_angles, m)?)?;
    m.add_function(wrap_pyfunction!(apply_h, m)?)?;
    m.add_function(wrap_pyfunction!(apply_h_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(psi_nuclear, m)?)?;
    m.add_function(wrap_pyfunction!(psi_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(nuclear_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_weights, m)?)?;
    m.add_function(wrap_pyfunction!(mc_statistical_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nuclear, m)?)?;
    m.add_function(wrap_pyfunction!(solve_weighted_nuclear, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(phase_curve, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(varphi, m)?)?;
    m.add_function(wrap_pyfunction!(mp_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance_mp, m)?)?;
    m.add_function(wrap_pyfunction!(expected_shrinkage_mc, m)?)?;
    m.add_function(wrap_pyfunction!(expected_shrinkage_mp, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    Ok(())
}
