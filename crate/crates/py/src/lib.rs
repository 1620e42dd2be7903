//! Python bindings. Genotypes cross the boundary as digit strings
//! ("012012012"); records and summaries come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use mfnas_core::cost_model;
use mfnas_core::evaluators::{surrogate_accuracy, Evaluator};
use mfnas_core::harness::{self, compare_strategies, oracle_best};
use mfnas_core::{metrics, Error, Genotype, NetScoreParams, RunConfig, SpaceSpec, StrategyKind, SurrogateSpec};

fn py_err(e: Error) -> PyErr {
    if e.is_evaluator_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Kernel-choice search space. Defaults to the three-stage CIFAR ResNet
/// with {3, 5, 7} kernels in every block.
#[pyclass(name = "SearchSpace", module = "mfnas", frozen)]
struct PySearchSpace {
    inner: SpaceSpec,
}

impl PySearchSpace {
    fn genotype(&self, text: &str) -> PyResult<Genotype> {
        self.inner.parse_genotype(text).map_err(py_err)
    }
}

#[pymethods]
impl PySearchSpace {
    #[new]
    #[pyo3(signature = (spec_json=None))]
    fn new(spec_json: Option<&str>) -> PyResult<Self> {
        let inner: SpaceSpec = match spec_json {
            Some(text) => from_json(text)?,
            None => SpaceSpec::default(),
        };
        inner.validate().map_err(py_err)?;
        Ok(PySearchSpace { inner })
    }

    /// Single stage of `blocks` 16-channel blocks, handy for small tests.
    #[staticmethod]
    fn single_stage(blocks: usize) -> PyResult<Self> {
        let inner = SpaceSpec::single_stage(blocks);
        inner.validate().map_err(py_err)?;
        Ok(PySearchSpace { inner })
    }

    #[getter]
    fn size(&self) -> u64 {
        self.inner.size()
    }

    #[getter]
    fn num_slots(&self) -> usize {
        self.inner.num_slots()
    }

    fn encode(&self, genotype: &str) -> PyResult<u64> {
        self.inner.encode(&self.genotype(genotype)?).map_err(py_err)
    }

    fn decode(&self, arch_id: u64) -> PyResult<String> {
        Ok(self.inner.decode(arch_id).map_err(py_err)?.to_string())
    }

    fn kernels(&self, genotype: &str) -> PyResult<Vec<u32>> {
        Ok(self.inner.kernels(&self.genotype(genotype)?))
    }

    fn count_params(&self, genotype: &str) -> PyResult<u64> {
        cost_model::count_params(&self.genotype(genotype)?, &self.inner).map_err(py_err)
    }

    fn count_macs(&self, genotype: &str) -> PyResult<u64> {
        cost_model::count_macs(&self.genotype(genotype)?, &self.inner).map_err(py_err)
    }

    fn p_min(&self) -> PyResult<u64> {
        cost_model::p_min(&self.inner).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.size() as usize
    }

    fn __repr__(&self) -> String {
        format!("SearchSpace(slots={}, size={})", self.inner.num_slots(), self.inner.size())
    }
}

/// Deterministic pattern-match accuracy surrogate.
#[pyclass(name = "Surrogate", module = "mfnas", frozen)]
struct PySurrogate {
    spec: SurrogateSpec,
}

#[pymethods]
impl PySurrogate {
    #[new]
    #[pyo3(signature = (target=None, base=None, step=None, noise_amplitude=None, noise_seed=None))]
    fn new(
        target: Option<&str>,
        base: Option<f64>,
        step: Option<f64>,
        noise_amplitude: Option<f64>,
        noise_seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut spec = SurrogateSpec::default();
        if let Some(t) = target {
            spec.target = t.parse().map_err(py_err)?;
        }
        spec.base = base.unwrap_or(spec.base);
        spec.step = step.unwrap_or(spec.step);
        spec.noise_amplitude = noise_amplitude.unwrap_or(spec.noise_amplitude);
        spec.noise_seed = noise_seed.unwrap_or(spec.noise_seed);
        spec.validate().map_err(py_err)?;
        Ok(PySurrogate { spec })
    }

    fn evaluate(&self, genotype: &str) -> PyResult<f64> {
        let g: Genotype = genotype.parse().map_err(py_err)?;
        if g.len() != self.spec.target.len() {
            return Err(PyValueError::new_err(format!(
                "expected {} slots, got {}",
                self.spec.target.len(),
                g.len()
            )));
        }
        Ok(surrogate_accuracy(&g, &self.spec))
    }

    #[getter]
    fn target(&self) -> String {
        self.spec.target.to_string()
    }
}

#[pyfunction]
fn s_prime(params: u64, p_min: u64) -> PyResult<f64> {
    metrics::s_prime(params, p_min).map_err(py_err)
}

#[pyfunction]
fn m_factor(accuracy: f64, s_prime: f64) -> PyResult<f64> {
    metrics::m_factor(accuracy, s_prime).map_err(py_err)
}

#[pyfunction]
fn m_alpha(accuracy: f64, s_prime: f64, alpha: f64) -> PyResult<f64> {
    metrics::m_alpha(accuracy, s_prime, alpha).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (accuracy, params, macs, alpha=2.0, beta=0.5, gamma=0.5))]
fn netscore(accuracy: f64, params: u64, macs: u64, alpha: f64, beta: f64, gamma: f64) -> PyResult<f64> {
    let p = NetScoreParams {
        alpha,
        beta,
        gamma,
        ..NetScoreParams::default()
    };
    metrics::netscore(accuracy, params, macs, &p).map_err(py_err)
}

fn config_from(
    config_json: Option<&str>,
    strategy: Option<&str>,
    trials: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
) -> PyResult<RunConfig> {
    let mut cfg: RunConfig = match config_json {
        Some(text) => from_json(text)?,
        None => RunConfig::default(),
    };
    if let Some(s) = strategy {
        cfg.strategy = s.parse::<StrategyKind>().map_err(py_err)?;
    }
    cfg.trials = trials.unwrap_or(cfg.trials);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.alpha = alpha.unwrap_or(cfg.alpha);
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// Runs one search. Returns `{"summary": {...}, "trials": [...]}`.
#[pyfunction]
#[pyo3(signature = (strategy=None, trials=None, seed=None, alpha=None, config_json=None))]
fn run(
    py: Python<'_>,
    strategy: Option<&str>,
    trials: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
    config_json: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let cfg = config_from(config_json, strategy, trials, seed, alpha)?;
    let summary = py.detach(|| harness::run_experiment(&cfg)).map_err(py_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        summary: &'a harness::RunSummary,
        trials: &'a [harness::TrialRecord],
    }
    to_py(
        py,
        &Out {
            summary: &summary,
            trials: &summary.trial_log,
        },
    )
}

/// Best architecture by brute force under the configured (cheap) evaluator.
#[pyfunction]
#[pyo3(signature = (alpha=None, config_json=None))]
fn oracle(py: Python<'_>, alpha: Option<f64>, config_json: Option<&str>) -> PyResult<Py<PyAny>> {
    let cfg = config_from(config_json, None, None, None, alpha)?;
    let best = py
        .detach(|| -> mfnas_core::Result<_> {
            let mut eval = cfg.evaluator.build(&cfg.space)?;
            if !eval.is_cheap() {
                return Err(Error::RefusedExpensiveOracle);
            }
            oracle_best(&cfg.space, &mut *eval, cfg.alpha)
        })
        .map_err(py_err)?;
    to_py(py, &best)
}

/// Runs each strategy under each seed.
#[pyfunction]
#[pyo3(signature = (strategies, seeds, trials=None, jobs=1, config_json=None))]
fn compare(
    py: Python<'_>,
    strategies: Vec<String>,
    seeds: Vec<u64>,
    trials: Option<usize>,
    jobs: usize,
    config_json: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let base = config_from(config_json, None, trials, None, None)?;
    let cfgs = strategies
        .iter()
        .map(|s| {
            Ok(RunConfig {
                strategy: s.parse().map_err(py_err)?,
                ..base.clone()
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let cmp = py
        .detach(|| compare_strategies(&cfgs, &seeds, jobs))
        .map_err(py_err)?;
    to_py(py, &cmp)
}

#[pymodule]
fn mfnas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySearchSpace>()?;
    m.add_class::<PySurrogate>()?;
    m.add_function(wrap_pyfunction!(s_prime, m)?)?;
    m.add_function(wrap_pyfunction!(m_factor, m)?)?;
    m.add_function(wrap_pyfunction!(m_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(netscore, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("STRATEGIES", StrategyKind::ALL.map(|k| k.as_str()).to_vec())?;
    Ok(())
}
