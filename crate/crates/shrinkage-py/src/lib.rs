//! Python bindings for the shrinkage regression library.
//!
//! Matrices cross the boundary as sequences of rows and come back as nested
//! lists, so the module has no dependency beyond the interpreter.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use shrinkage::cli_io::RunConfig;
use shrinkage::evidence::{bma_enumerate_gprior, log_marginal_conjugate, sddr, ConjugateModel, GRule};
use shrinkage::gibbs_engine::{run_chains, BlockMode, DrawStore, Problem, SamplerPlan};
use shrinkage::prior_library::{PriorSpec, Scaling, FAMILY_NAMES};
use shrinkage::quantile::{run_quantile_chain, QuantilePlan, QuantileSpec};
use shrinkage::sampling_kernels::{sample_gig, GigParams, MvnKernel, RngStream};
use shrinkage::simulation_harness::{run_study, Study, StudyOptions};
use shrinkage::variational_engine::{run_cavi, VbHyper};
use shrinkage::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Data(_) | Error::Domain(_) | Error::ImproperPrior(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(PyValueError::new_err("design matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("design rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn problem(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Problem> {
    let x = matrix(x)?;
    if x.nrows() != y.len() {
        return Err(PyValueError::new_err(format!("x has {} rows but y has {} entries", x.nrows(), y.len())));
    }
    Ok(Problem::new(x, DVector::from_vec(y)))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

/// Prior family with hyperparameters, validated by the same rules as a config file.
#[pyclass(name = "Prior", module = "shrinkage_py")]
#[derive(Clone)]
struct PyPrior {
    spec: PriorSpec,
}

#[pymethods]
impl PyPrior {
    #[new]
    #[pyo3(signature = (family, scaling=None, a0=None, b0=None, **params))]
    fn new(
        family: &str,
        scaling: Option<&str>,
        a0: Option<f64>,
        b0: Option<f64>,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let mut pairs = BTreeMap::new();
        pairs.insert("prior.family".to_string(), family.to_string());
        if let Some(s) = scaling {
            pairs.insert("prior.scaling".to_string(), s.to_string());
        }
        if let Some(v) = a0 {
            pairs.insert("prior.a0".to_string(), v.to_string());
        }
        if let Some(v) = b0 {
            pairs.insert("prior.b0".to_string(), v.to_string());
        }
        if let Some(params) = params {
            for (k, v) in params.iter() {
                let key: String = k.extract()?;
                let text = if let Ok(list) = v.downcast::<PyList>() {
                    list.iter().map(|e| e.str().map(|s| s.to_string())).collect::<PyResult<Vec<_>>>()?.join(",")
                } else {
                    v.str()?.to_string()
                };
                pairs.insert(format!("prior.{key}"), text);
            }
        }
        let cfg = RunConfig::from_pairs(pairs).map_err(to_py)?;
        Ok(Self { spec: cfg.prior })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.spec.family.name()
    }

    #[getter]
    fn scaling(&self) -> &'static str {
        match self.spec.scaling {
            Scaling::Conjugate => "conjugate",
            Scaling::Independent => "independent",
        }
    }

    fn __repr__(&self) -> String {
        format!("Prior({:?}, scaling={:?})", self.family(), self.scaling())
    }
}

/// Retained posterior draws, rows ordered by chain then iteration.
#[pyclass(name = "Draws", module = "shrinkage_py")]
struct PyDraws {
    store: DrawStore,
}

#[pymethods]
impl PyDraws {
    fn __len__(&self) -> usize {
        self.store.len()
    }

    #[getter]
    fn beta(&self) -> Vec<Vec<f64>> {
        rows(&self.store.beta)
    }

    #[getter]
    fn sigma2(&self) -> Vec<f64> {
        self.store.sigma2.clone()
    }

    #[getter]
    fn gamma(&self) -> Option<Vec<Vec<f64>>> {
        self.store.gamma.as_ref().map(rows)
    }

    #[getter]
    fn chain(&self) -> Vec<usize> {
        self.store.chain.clone()
    }

    fn beta_mean(&self) -> Vec<f64> {
        self.store.beta_mean().iter().copied().collect()
    }

    fn sigma2_mean(&self) -> f64 {
        self.store.sigma2_mean()
    }

    fn inclusion_probs(&self) -> Option<Vec<f64>> {
        self.store.inclusion_probs().map(|v| v.iter().copied().collect())
    }
}

#[pyfunction]
fn families() -> Vec<&'static str> {
    FAMILY_NAMES.to_vec()
}

/// Gibbs sampling of the regression posterior. X is used as given.
#[pyfunction]
#[pyo3(signature = (x, y, prior, iterations=5000, burn_in=1000, thin=1, chains=2, seed=1, block_mode="three_block", kernel="auto"))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    prior: &PyPrior,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    chains: usize,
    seed: u64,
    block_mode: &str,
    kernel: &str,
) -> PyResult<PyDraws> {
    let prob = problem(x, y)?;
    let mut plan = SamplerPlan::new(prior.spec.clone());
    plan.iterations = iterations;
    plan.burn_in = burn_in;
    plan.thin = thin;
    plan.chains = chains;
    plan.seed = seed;
    plan.block_mode = parse::<BlockMode>(block_mode)?;
    plan.mvn_kernel = parse::<MvnKernel>(kernel)?;
    let store = py.allow_threads(|| run_chains(&plan, &prob)).map_err(to_py)?;
    Ok(PyDraws { store })
}

/// Coordinate-ascent variational fit of the Kuo-Mallick spike-and-slab model.
#[pyfunction]
#[pyo3(signature = (x, y, tau2=10.0, pi0=0.5, a0=0.01, b0=0.01, tol=1e-8, max_iters=1000))]
#[allow(clippy::too_many_arguments)]
fn cavi<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    tau2: f64,
    pi0: f64,
    a0: f64,
    b0: f64,
    tol: f64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let prob = problem(x, y)?;
    let hyper = VbHyper { d: DVector::from_element(prob.p(), tau2), pi0, a0, b0 };
    let st = run_cavi(&prob, &hyper, tol, max_iters).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("mu", st.mu.iter().copied().collect::<Vec<_>>())?;
    out.set_item("pi", st.pi.iter().copied().collect::<Vec<_>>())?;
    out.set_item("a", st.a)?;
    out.set_item("b", st.b)?;
    out.set_item("elbo_trace", st.elbo_trace)?;
    out.set_item("converged", st.converged)?;
    Ok(out)
}

/// Log marginal likelihood of the conjugate model β|σ² ~ N(0, σ²τI), σ² ~ IG(v0/2, s0/2).
#[pyfunction]
#[pyo3(signature = (x, y, tau=10.0, v0=0.2, s0=0.2))]
fn log_marginal(x: Vec<Vec<f64>>, y: Vec<f64>, tau: f64, v0: f64, s0: f64) -> PyResult<f64> {
    let prob = problem(x, y)?;
    let model = ConjugateModel::ridge(prob.p(), tau, v0, s0);
    log_marginal_conjugate(&model, &prob.x, &prob.y).map_err(to_py)
}

/// Savage-Dickey log Bayes factor of β_j = beta_star (j is 0-based) under the conjugate model.
#[pyfunction]
#[pyo3(signature = (x, y, j, beta_star=0.0, tau=10.0, v0=0.2, s0=0.2))]
#[allow(clippy::too_many_arguments)]
fn savage_dickey(x: Vec<Vec<f64>>, y: Vec<f64>, j: usize, beta_star: f64, tau: f64, v0: f64, s0: f64) -> PyResult<f64> {
    let prob = problem(x, y)?;
    let model = ConjugateModel::ridge(prob.p(), tau, v0, s0);
    sddr(&model, &prob.x, &prob.y, j, beta_star).map_err(to_py)
}

/// Exhaustive g-prior model averaging; g=None uses g = p_r/n per model.
#[pyfunction]
#[pyo3(signature = (x, y, g=None, pi0=0.5))]
fn bma<'py>(py: Python<'py>, x: Vec<Vec<f64>>, y: Vec<f64>, g: Option<f64>, pi0: f64) -> PyResult<Bound<'py, PyDict>> {
    let prob = problem(x, y)?;
    let rule = g.map_or(GRule::SizeOverN, GRule::Fixed);
    let res = bma_enumerate_gprior(&prob.x, &prob.y, rule, pi0).map_err(to_py)?;
    let out = PyDict::new(py);
    let models: Vec<(Vec<usize>, f64, f64)> =
        res.models.iter().map(|m| (m.columns.clone(), m.log_marginal, m.prob)).collect();
    out.set_item("models", models)?;
    out.set_item("inclusion_probs", res.inclusion_probs)?;
    out.set_item("median_model", res.median_model)?;
    out.set_item("coefficients", res.coefficients)?;
    Ok(out)
}

/// Bayesian quantile regression at one level; include an intercept column in x yourself.
#[pyfunction]
#[pyo3(signature = (x, y, level=0.5, iterations=4000, burn_in=1000, seed=1, prior_tau=100.0))]
#[allow(clippy::too_many_arguments)]
fn quantile_fit(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    level: f64,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    prior_tau: f64,
) -> PyResult<PyDraws> {
    let prob = problem(x, y)?;
    let spec = QuantileSpec { levels: vec![level], prior_tau, ..QuantileSpec::default() };
    spec.validate().map_err(to_py)?;
    let plan = QuantilePlan { iterations, burn_in, thin: 1, seed };
    let store = py.allow_threads(|| run_quantile_chain(&prob.x, &prob.y, &spec, &plan, level, 0)).map_err(to_py)?;
    Ok(PyDraws { store })
}

/// Draws from GIG(nu, a, b) with density ∝ x^(nu-1) exp(-(a x + b/x)/2).
#[pyfunction]
#[pyo3(signature = (nu, a, b, size=1, seed=1))]
fn gig(nu: f64, a: f64, b: f64, size: usize, seed: u64) -> PyResult<Vec<f64>> {
    let params = GigParams::new(nu, a, b).map_err(to_py)?;
    let mut rng = RngStream::new(seed, 0).rng();
    Ok((0..size).map(|_| sample_gig(params, &mut rng)).collect())
}

/// One simulation study table as a list of row dicts.
#[pyfunction]
#[pyo3(signature = (study, p=vec![50], r2=vec![0.8], replications=2, iterations=1000, burn_in=250, seed=2021, methods=None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    study: &str,
    p: Vec<usize>,
    r2: Vec<f64>,
    replications: usize,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    methods: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let study = parse::<Study>(study)?;
    let opts = StudyOptions {
        p_values: p,
        r2_values: r2,
        replications,
        iterations,
        burn_in,
        seed,
        methods,
        ..StudyOptions::desk()
    };
    let table = py.allow_threads(|| run_study(study, &opts)).map_err(to_py)?;
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("method", &r.method)?;
            d.set_item("p", r.p)?;
            d.set_item("r2", r.r2_pop)?;
            d.set_item("sigma2_hat", r.metrics.sigma2_hat)?;
            d.set_item("bias", r.metrics.bias)?;
            d.set_item("mse", r.metrics.mse)?;
            d.set_item("fn", r.metrics.fn_)?;
            d.set_item("fp", r.metrics.fp)?;
            d.set_item("tp", r.metrics.tp)?;
            d.set_item("completed", r.completed)?;
            d.set_item("failed", r.failed)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn shrinkage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPrior>()?;
    m.add_class::<PyDraws>()?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(cavi, m)?)?;
    m.add_function(wrap_pyfunction!(log_marginal, m)?)?;
    m.add_function(wrap_pyfunction!(savage_dickey, m)?)?;
    m.add_function(wrap_pyfunction!(bma, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_fit, m)?)?;
    m.add_function(wrap_pyfunction!(gig, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
