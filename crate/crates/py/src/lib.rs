//! Python bindings for `riskbandit-core`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use riskbandit_core::distributions::{ArmSpec as CoreArm, GaussianComponent};
use riskbandit_core::estimators::ArmStats as CoreStats;
use riskbandit_core::experiment::ExperimentSpec;
use riskbandit_core::generators::{
    gen_from_matrix, gen_mixture, gen_proof_of_concept, BanditProblem, ProofOfConceptParams,
};
use riskbandit_core::harness::{run_aggregate, RunConfig};
use riskbandit_core::policies::{self, PolicyConfig};
use riskbandit_core::rng::rng_from_seed;
use riskbandit_core::theory::{self, BoundInputs, RegretBound};
use riskbandit_core::BanditError;

fn to_py(e: BanditError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Reward distribution of one arm.
#[pyclass(name = "ArmSpec", module = "riskbandit", frozen, from_py_object)]
#[derive(Clone)]
struct PyArmSpec(CoreArm);

#[pymethods]
impl PyArmSpec {
    /// Uniform law on `[center - radius, center + radius]`.
    #[staticmethod]
    fn uniform(center: f64, radius: f64) -> PyResult<Self> {
        CoreArm::uniform(center, radius).map(Self).map_err(to_py)
    }

    /// Gaussian mixture truncated to `[floor, 1]`; components are
    /// `(weight, mean, std)` tuples.
    #[staticmethod]
    fn mixture(floor: f64, components: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let comps = components
            .into_iter()
            .map(|(weight, mean, std)| GaussianComponent { weight, mean, std })
            .collect();
        CoreArm::mixture(floor, comps).map(Self).map_err(to_py)
    }

    /// Uniform resampling of a fixed list of rewards.
    #[staticmethod]
    fn empirical(values: Vec<f64>) -> PyResult<Self> {
        CoreArm::empirical(values).map(Self).map_err(to_py)
    }

    /// `n` draws from a generator seeded with `seed`.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| self.0.sample(&mut rng))
            .collect::<Result<_, _>>()
            .map_err(to_py)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.analytic_mean()
    }

    #[getter]
    fn infimum(&self) -> f64 {
        self.0.essential_infimum()
    }

    #[getter]
    fn lower_bound_constant(&self) -> Option<f64> {
        self.0.lower_bound_constant()
    }

    fn cvar(&self, alpha: f64) -> PyResult<f64> {
        self.0.analytic_cvar(alpha).map_err(to_py)
    }

    fn quantile(&self, alpha: f64) -> PyResult<f64> {
        self.0.quantile_value(alpha).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Statistics of the rewards observed on one arm.
#[pyclass(name = "ArmStats", module = "riskbandit", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyArmStats(CoreStats);

#[pymethods]
impl PyArmStats {
    #[new]
    #[pyo3(signature = (rewards = None))]
    fn new(rewards: Option<Vec<f64>>) -> PyResult<Self> {
        CoreStats::from_rewards(&rewards.unwrap_or_default())
            .map(Self)
            .map_err(to_py)
    }

    fn update(&mut self, reward: f64) -> PyResult<()> {
        self.0.update(reward).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.count()
    }

    #[getter]
    fn rewards(&self) -> Vec<f64> {
        self.0.rewards_sorted().to_vec()
    }

    fn mean(&self) -> PyResult<f64> {
        self.0.empirical_mean().map_err(to_py)
    }

    fn variance(&self) -> PyResult<f64> {
        self.0.empirical_variance().map_err(to_py)
    }

    fn min(&self) -> PyResult<f64> {
        self.0.empirical_min().map_err(to_py)
    }

    fn cvar(&self, alpha: f64) -> PyResult<f64> {
        self.0.empirical_cvar(alpha).map_err(to_py)
    }

    fn mv_value(&self, rho: f64) -> PyResult<f64> {
        self.0.mv_value(rho).map_err(to_py)
    }
}

#[pyfunction]
fn ucb_index(stats: &PyArmStats, t: u64, c: f64) -> PyResult<f64> {
    policies::ucb_index(&stats.0, t, c).map_err(to_py)
}

#[pyfunction]
fn marab_index(stats: &PyArmStats, t: u64, c: f64, alpha: f64) -> PyResult<f64> {
    policies::marab_index(&stats.0, t, c, alpha).map_err(to_py)
}

#[pyfunction]
fn min_index(stats: &PyArmStats) -> PyResult<f64> {
    policies::min_index(&stats.0).map_err(to_py)
}

#[pyfunction]
fn mvlcb_index(stats: &PyArmStats, rho: f64, delta: f64) -> PyResult<f64> {
    policies::mvlcb_index(&stats.0, rho, delta).map_err(to_py)
}

/// Arm-selection policy and its parameters.
#[pyclass(name = "Policy", module = "riskbandit", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyPolicy(PolicyConfig);

#[pymethods]
impl PyPolicy {
    #[staticmethod]
    fn ucb(c: f64) -> Self {
        Self(PolicyConfig::Ucb { c })
    }

    #[staticmethod]
    fn min() -> Self {
        Self(PolicyConfig::Min)
    }

    #[staticmethod]
    fn marab(c: f64, alpha: f64) -> Self {
        Self(PolicyConfig::Marab { c, alpha })
    }

    /// The usual choice is `delta = 1/T^2`.
    #[staticmethod]
    fn mvlcb(rho: f64, delta: f64) -> Self {
        Self(PolicyConfig::Mvlcb { rho, delta })
    }

    #[staticmethod]
    fn expexp(rho: f64, tau: u64) -> Self {
        Self(PolicyConfig::Expexp { rho, tau })
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn __repr__(&self) -> String {
        format!("Policy.{}", self.0.label())
    }
}

/// A K-armed problem with cached means and infima.
#[pyclass(name = "Problem", module = "riskbandit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProblem(Arc<BanditProblem>);

#[pymethods]
impl PyProblem {
    #[new]
    fn new(arms: Vec<PyArmSpec>) -> PyResult<Self> {
        let arms = arms.into_iter().map(|a| a.0).collect();
        BanditProblem::new(arms).map(|p| Self(Arc::new(p))).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (arms = 20, mu_star = 0.5, a_star = 0.499, delta_max = 0.05, r_max = 0.4))]
    fn proof_of_concept(arms: usize, mu_star: f64, a_star: f64, delta_max: f64, r_max: f64) -> PyResult<Self> {
        let params = ProofOfConceptParams {
            arms,
            mu_star,
            a_star,
            delta_max,
            r_max,
        };
        gen_proof_of_concept(&params).map(|p| Self(Arc::new(p))).map_err(to_py)
    }

    #[staticmethod]
    fn mixture(arms: usize, seed: u64) -> PyResult<Self> {
        gen_mixture(arms, &mut rng_from_seed(seed))
            .map(|p| Self(Arc::new(p)))
            .map_err(to_py)
    }

    /// One arm per row of rewards, optionally min-max rescaled to `[0, 1]`.
    #[staticmethod]
    #[pyo3(signature = (rows, rescale = false))]
    fn from_matrix(rows: Vec<Vec<f64>>, rescale: bool) -> PyResult<Self> {
        gen_from_matrix(&rows, rescale)
            .map(|p| Self(Arc::new(p)))
            .map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn arms(&self) -> Vec<PyArmSpec> {
        self.0.arms().iter().cloned().map(PyArmSpec).collect()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.0.means().to_vec()
    }

    #[getter]
    fn infima(&self) -> Vec<f64> {
        self.0.infima().to_vec()
    }

    #[getter]
    fn best_mean_arm(&self) -> usize {
        self.0.best_mean_arm()
    }

    #[getter]
    fn best_min_arm(&self) -> usize {
        self.0.best_min_arm()
    }

    #[getter]
    fn lower_bound_a(&self) -> Option<f64> {
        self.0.lower_bound_a()
    }
}

/// Runs `runs` seeded episodes and returns the aggregated curves as a dict
/// with `mean_theoretical`, `mean_empirical`, `std_theoretical`,
/// `reward_cdf` and `pulls`.
#[pyfunction]
#[pyo3(signature = (problem, policy, horizon, runs, seed, random_ties = false))]
fn simulate<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    policy: &PyPolicy,
    horizon: u64,
    runs: usize,
    seed: u64,
    random_ties: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = RunConfig::new(problem.0.clone(), policy.0, horizon, seed, runs);
    cfg.random_ties = random_ties;
    let agg = py.detach(|| run_aggregate(&cfg)).map_err(to_py)?;
    let curve = agg.curve();
    let d = PyDict::new(py);
    d.set_item("policy", policy.0.label())?;
    d.set_item("runs", curve.runs)?;
    d.set_item("mean_theoretical", &curve.mean_theoretical)?;
    d.set_item("mean_empirical", &curve.mean_empirical)?;
    d.set_item("std_theoretical", &curve.std_theoretical)?;
    d.set_item("reward_cdf", agg.sorted_reward_cdf())?;
    d.set_item("pulls", agg.pulls())?;
    Ok(d)
}

/// Runs a TOML experiment document; returns one dict per policy cell.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, toml: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let exp = ExperimentSpec::from_toml_str(toml)
        .and_then(|s| s.resolve())
        .map_err(to_py)?;
    let outcomes = py.detach(|| exp.execute()).map_err(to_py)?;
    outcomes
        .into_iter()
        .map(|o| {
            let d = PyDict::new(py);
            d.set_item("policy", &o.cell.label)?;
            d.set_item("params", o.cell.params.clone())?;
            d.set_item("mean_theoretical", &o.curve.mean_theoretical)?;
            d.set_item("mean_empirical", &o.curve.mean_empirical)?;
            d.set_item("std_theoretical", &o.curve.std_theoretical)?;
            d.set_item("reward_cdf", &o.reward_cdf)?;
            d.set_item("instance_final_theoretical", &o.instance_final_theoretical)?;
            d.set_item("instance_final_empirical", &o.instance_final_empirical)?;
            d.set_item("pulls", &o.pulls)?;
            Ok(d)
        })
        .collect()
}

fn bound_inputs(
    k: usize,
    a: f64,
    delta_mu_max: f64,
    delta_a_min: f64,
    t: u64,
    delta: f64,
    optimal_arms: usize,
) -> BoundInputs {
    BoundInputs {
        k,
        a,
        delta_mu_max,
        delta_a_min,
        t,
        delta,
        delta_mu_list: Vec::new(),
        optimal_arms,
    }
}

fn bound_tuple(b: RegretBound) -> (f64, Option<f64>) {
    (b.high_prob_bound, b.expectation_bound)
}

/// `(high_prob_bound, expectation_bound or None)`.
#[pyfunction]
#[pyo3(signature = (k, a, delta_mu_max, delta_a_min, t, delta, optimal_arms = 1))]
fn prop43_regret_bound(
    k: usize,
    a: f64,
    delta_mu_max: f64,
    delta_a_min: f64,
    t: u64,
    delta: f64,
    optimal_arms: usize,
) -> PyResult<(f64, Option<f64>)> {
    let input = bound_inputs(k, a, delta_mu_max, delta_a_min, t, delta, optimal_arms);
    theory::prop43_regret_bound(&input).map(bound_tuple).map_err(to_py)
}

/// `(high_prob_bound, expectation_bound or None)`; `delta_a_min` is unused.
#[pyfunction]
#[pyo3(signature = (k, a, delta_mu_max, t, delta, optimal_arms = 1))]
fn prop44_regret_bound(
    k: usize,
    a: f64,
    delta_mu_max: f64,
    t: u64,
    delta: f64,
    optimal_arms: usize,
) -> PyResult<(f64, Option<f64>)> {
    let input = bound_inputs(k, a, delta_mu_max, delta_mu_max, t, delta, optimal_arms);
    theory::prop44_regret_bound(&input).map(bound_tuple).map_err(to_py)
}

#[pyfunction]
fn ucb_regret_bound(delta_mu_list: Vec<f64>, t: u64) -> PyResult<f64> {
    theory::ucb_regret_bound(&delta_mu_list, t).map_err(to_py)
}

/// Monte-Carlo tail check; one arm uses the single-arm bound, several arms
/// the union bound. Returns a dict of the check fields.
#[pyfunction]
#[pyo3(signature = (arms, t, epsilon, trials, seed = 0))]
fn check_lemma<'py>(
    py: Python<'py>,
    arms: Vec<PyArmSpec>,
    t: u64,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let arms: Vec<CoreArm> = arms.into_iter().map(|a| a.0).collect();
    let mut rng = rng_from_seed(seed);
    let check = py
        .detach(|| match arms.as_slice() {
            [one] => theory::lemma41_check(one, t, epsilon, trials, &mut rng),
            many => theory::lemma42_check_arms(many, t, epsilon, trials, &mut rng),
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("trials", check.trials)?;
    d.set_item("hits", check.hits)?;
    d.set_item("empirical_prob", check.empirical_prob)?;
    d.set_item("bound", check.bound)?;
    d.set_item("std_error", check.std_error)?;
    d.set_item("exact_prob", check.exact_prob)?;
    d.set_item("pass", check.pass)?;
    Ok(d)
}

/// Module initializer, also usable to populate a module built by hand.
#[pymodule]
pub fn riskbandit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArmSpec>()?;
    m.add_class::<PyArmStats>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(ucb_index, m)?)?;
    m.add_function(wrap_pyfunction!(marab_index, m)?)?;
    m.add_function(wrap_pyfunction!(min_index, m)?)?;
    m.add_function(wrap_pyfunction!(mvlcb_index, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(prop43_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(prop44_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ucb_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
