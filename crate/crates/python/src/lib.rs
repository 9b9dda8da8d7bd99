//! Python bindings: embeddings, pair statistics, draw stores and the
//! fitting and diagnostic entry points.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use pgembed::data::{sim_embedding, sim_pairs, PairLaw, SimConfig};
use pgembed::diagnostics::{self, ScalarTrace};
use pgembed::gibbs::{random_init, run_chain, GibbsConfig};
use pgembed::laplace::{build_laplace, fit_map, laplace_draws, MapConfig};
use pgembed::rng::derive_seed;
use pgembed::{io, model, Error, IdentificationConstraint, PriorSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::Json(_) | Error::Format(_) => PyIOError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for pgembed::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn rows(flat: &[f64], k: usize) -> Vec<Vec<f64>> {
    flat.chunks(k).map(<[f64]>::to_vec).collect()
}

/// Target and context vectors, `V x K` each.
#[pyclass(name = "EmbeddingState", from_py_object)]
#[derive(Clone)]
pub struct PyEmbedding {
    inner: pgembed::EmbeddingState,
}

#[pymethods]
impl PyEmbedding {
    #[new]
    fn new(rho: Vec<Vec<f64>>, alpha: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: pgembed::EmbeddingState::from_rows(&rho, &alpha).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: io::load_embedding(&path).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_embedding(&self.inner, &path).py()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rho(&self) -> Vec<Vec<f64>> {
        rows(self.inner.rho(), self.inner.dim())
    }

    #[getter]
    fn alpha(&self) -> Vec<Vec<f64>> {
        rows(self.inner.alpha(), self.inner.dim())
    }

    fn co_prob(&self, w: usize, v: usize) -> PyResult<f64> {
        self.check(w)?;
        self.check(v)?;
        Ok(model::co_prob(&self.inner, w, v))
    }

    fn cosine(&self, w: usize, v: usize) -> PyResult<f64> {
        self.check(w)?;
        self.check(v)?;
        model::cosine_similarity(&self.inner, w, v).py()
    }

    fn __repr__(&self) -> String {
        format!("EmbeddingState(V={}, K={})", self.inner.vocab_size(), self.inner.dim())
    }
}

impl PyEmbedding {
    fn check(&self, w: usize) -> PyResult<()> {
        if w >= self.inner.vocab_size() {
            return Err(PyValueError::new_err(format!("word id {w} out of range")));
        }
        Ok(())
    }
}

/// Aggregated positive and negative counts per `(w, v)` pair.
#[pyclass(name = "PairStats", from_py_object)]
#[derive(Clone)]
pub struct PyPairStats {
    inner: pgembed::PairStats,
}

#[pymethods]
impl PyPairStats {
    /// `counts` holds `(w, v, n_pos, n_neg)` tuples.
    #[new]
    fn new(vocab_size: usize, counts: Vec<(usize, usize, u64, u64)>) -> PyResult<Self> {
        let entries = counts.into_iter().map(|(w, v, n_pos, n_neg)| pgembed::PairCount { w, v, n_pos, n_neg });
        Ok(Self { inner: pgembed::PairStats::new(vocab_size, 0, entries).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: io::load_pair_stats(&path).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_pair_stats(&self.inner, &path).py()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    #[getter]
    fn num_unique(&self) -> usize {
        self.inner.num_unique()
    }

    #[getter]
    fn total_observations(&self) -> u64 {
        self.inner.total_observations()
    }

    fn entries(&self) -> Vec<(usize, usize, u64, u64)> {
        self.inner.entries().iter().map(|e| (e.w, e.v, e.n_pos, e.n_neg)).collect()
    }
}

/// An ordered set of posterior draws sharing one identification constraint.
#[pyclass(name = "PosteriorDraws")]
pub struct PyDraws {
    inner: pgembed::PosteriorDraws,
}

#[pymethods]
impl PyDraws {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: io::load_draw_store(&dir).py()?.0 })
    }

    #[pyo3(signature = (dir, method = "gibbs"))]
    fn save(&self, dir: PathBuf, method: &str) -> PyResult<()> {
        io::save_draw_store(&self.inner, None, method, &dir).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn draw(&self, i: usize) -> PyResult<PyEmbedding> {
        let d = self.inner.draws().get(i).ok_or_else(|| PyValueError::new_err(format!("draw {i} out of range")))?;
        Ok(PyEmbedding { inner: d.clone() })
    }

    fn co_prob_trace(&self, w: usize, v: usize) -> PyResult<Vec<f64>> {
        Ok(diagnostics::co_prob_trace(&self.inner, w, v).py()?.values().to_vec())
    }

    fn posterior_mean(&self) -> PyResult<PyEmbedding> {
        Ok(PyEmbedding { inner: diagnostics::posterior_mean(&self.inner).py()? })
    }

    /// Fraction of `co_prob` intervals containing the truth, and the number of pairs.
    #[pyo3(signature = (truth, level = 0.9))]
    fn coverage(&self, truth: &PyEmbedding, level: f64) -> PyResult<(f64, usize)> {
        let r = diagnostics::coverage(&self.inner, &truth.inner, level).py()?;
        Ok((r.fraction_covered, r.pairs_evaluated))
    }
}

#[pyfunction]
#[pyo3(signature = (vocab_size, dim, num_pairs, seed = 0, law = "uniform", epsilon = 1.0, zipf_a = 1.0, zipf_b = 2.7))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    vocab_size: usize,
    dim: usize,
    num_pairs: u64,
    seed: u64,
    law: &str,
    epsilon: f64,
    zipf_a: f64,
    zipf_b: f64,
) -> PyResult<(PyEmbedding, PyPairStats, f64)> {
    let pair_law = match law {
        "uniform" => PairLaw::Uniform,
        "zipf" => PairLaw::Zipf,
        other => return Err(PyValueError::new_err(format!("unknown law `{other}`"))),
    };
    let cfg = SimConfig { vocab_size, dim, epsilon, pair_law, zipf_a, zipf_b, num_pairs, seed };
    let truth = sim_embedding(&cfg).py()?;
    let stats = sim_pairs(&truth).py()?;
    Ok((PyEmbedding { inner: truth.theta_true }, PyPairStats { inner: stats }, cfg.matched_lambda()))
}

fn prior(lam: f64) -> PyResult<PriorSpec> {
    PriorSpec::new(lam).py()
}

/// MAP estimate with no constraint; returns the estimate and its log posterior.
#[pyfunction]
#[pyo3(signature = (stats, dim, lam = 1.0, seed = 0, max_iterations = 20_000, tol = 1e-6))]
fn map_estimate(
    stats: &PyPairStats,
    dim: usize,
    lam: f64,
    seed: u64,
    max_iterations: usize,
    tol: f64,
) -> PyResult<(PyEmbedding, f64)> {
    let cfg = MapConfig { max_iterations, gradient_tolerance: tol, seed, ..MapConfig::default() };
    let init = random_init(stats.inner.vocab_size(), dim, seed, None).py()?;
    let fit = fit_map(&stats.inner, &prior(lam)?, &cfg, &init, None).py()?;
    Ok((PyEmbedding { inner: fit.theta }, fit.log_posterior))
}

/// Gibbs chain started at `init` and constrained to its last `K` context rows.
#[pyfunction]
#[pyo3(signature = (stats, init, lam = 1.0, iterations = 2000, burn_in = 1000, inner_steps = 10, seed = 0, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn gibbs(
    py: Python<'_>,
    stats: &PyPairStats,
    init: &PyEmbedding,
    lam: f64,
    iterations: usize,
    burn_in: usize,
    inner_steps: usize,
    seed: u64,
    threads: usize,
) -> PyResult<PyDraws> {
    let cfg = GibbsConfig {
        outer_iterations: iterations,
        burn_in,
        inner_steps,
        seed: derive_seed(seed, &[2]),
        warm_start_inner: false,
        parallel_width: threads,
    };
    let p = prior(lam)?;
    let c = IdentificationConstraint::last_k(&init.inner).py()?;
    let draws = py.detach(|| run_chain(&stats.inner, &p, &cfg, &init.inner, Some(&c))).py()?;
    Ok(PyDraws { inner: draws })
}

/// Laplace approximation at `mode`, constrained to its last `K` context rows.
#[pyfunction]
#[pyo3(signature = (stats, mode, lam = 1.0, num_draws = 1000, seed = 0))]
fn laplace(py: Python<'_>, stats: &PyPairStats, mode: &PyEmbedding, lam: f64, num_draws: usize, seed: u64) -> PyResult<PyDraws> {
    let p = prior(lam)?;
    let c = IdentificationConstraint::last_k(&mode.inner).py()?;
    let draws = py
        .detach(|| build_laplace(&stats.inner, &p, &mode.inner, &c).and_then(|m| laplace_draws(&m, num_draws, seed)))
        .py()?;
    Ok(PyDraws { inner: draws })
}

fn trace(values: Vec<f64>) -> PyResult<ScalarTrace> {
    ScalarTrace::new(values, "trace").py()
}

#[pyfunction]
fn ess(values: Vec<f64>) -> PyResult<f64> {
    diagnostics::ess(&trace(values)?).py()
}

#[pyfunction]
fn split_rhat(chains: Vec<Vec<f64>>) -> PyResult<f64> {
    let traces = chains.into_iter().map(trace).collect::<PyResult<Vec<_>>>()?;
    diagnostics::split_rhat(&traces).py()
}

#[pyfunction]
fn holdout_ll(estimate: &PyEmbedding, test: &PyPairStats) -> PyResult<f64> {
    diagnostics::holdout_ll(&estimate.inner, &test.inner).py()
}

#[pyfunction]
fn rmse_co(a: &PyEmbedding, b: &PyEmbedding) -> PyResult<f64> {
    model::rmse_co(&a.inner, &b.inner).py()
}

#[pymodule]
fn pgembed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEmbedding>()?;
    m.add_class::<PyPairStats>()?;
    m.add_class::<PyDraws>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(map_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs, m)?)?;
    m.add_function(wrap_pyfunction!(laplace, m)?)?;
    m.add_function(wrap_pyfunction!(ess, m)?)?;
    m.add_function(wrap_pyfunction!(split_rhat, m)?)?;
    m.add_function(wrap_pyfunction!(holdout_ll, m)?)?;
    m.add_function(wrap_pyfunction!(rmse_co, m)?)?;
    Ok(())
}
