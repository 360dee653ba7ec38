//! Python module `squint_py`: expert games with Squint, iProd and Hedge,
//! concept classes, Component iProd, bound calculators and the experiment runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use squint::bounds;
use squint::combinatorial::{self, CombGameState};
use squint::experts::{
    self, DiscreteGrid, ExpertGameState, IProdAccumulator, LearningRatePrior,
};
use squint::harness;
use squint::numerics::{self, QuadratureOptions, XiInput};
use squint::polytopes::{self, Dag, Vertex, DEFAULT_VERTEX_CAP};

fn err(e: squint::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid_from(etas: Option<Vec<f64>>, masses: Option<Vec<f64>>, points: Option<usize>) -> PyResult<DiscreteGrid> {
    match (etas, masses, points) {
        (Some(e), Some(m), None) => DiscreteGrid::new(e, m).map_err(err),
        (Some(e), None, None) => DiscreteGrid::uniform(e).map_err(err),
        (None, None, Some(n)) => DiscreteGrid::geometric(n).map_err(err),
        _ => Err(PyValueError::new_err("give either `points` or `etas` (with optional `masses`)")),
    }
}

enum Rule {
    Squint(LearningRatePrior),
    IProd(IProdAccumulator),
    Hedge(f64),
}

/// Prediction with expert advice.
///
/// `algorithm` is one of `squint_conjugate` (with `a`, `b`), `squint_cv`,
/// `squint_improper`, `squint_grid`, `iprod` (grid from `etas`/`masses` or
/// `points`) or `hedge` (with `eta`).
#[pyclass(module = "squint_py")]
struct ExpertGame {
    state: ExpertGameState,
    rule: Rule,
    quadrature: QuadratureOptions,
}

#[pymethods]
impl ExpertGame {
    #[new]
    #[pyo3(signature = (k, algorithm="squint_improper", prior=None, a=0.0, b=0.0, eta=None, etas=None, masses=None, points=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        k: usize,
        algorithm: &str,
        prior: Option<Vec<f64>>,
        a: f64,
        b: f64,
        eta: Option<f64>,
        etas: Option<Vec<f64>>,
        masses: Option<Vec<f64>>,
        points: Option<usize>,
    ) -> PyResult<Self> {
        let state = match prior {
            Some(p) if p.len() != k => {
                return Err(PyValueError::new_err(format!("prior has {} entries, expected {k}", p.len())))
            }
            Some(p) => ExpertGameState::with_prior(p),
            None => ExpertGameState::new(k),
        }
        .map_err(err)?;
        let rule = match algorithm {
            "squint_conjugate" => Rule::Squint(LearningRatePrior::Conjugate { a, b }),
            "squint_cv" => Rule::Squint(LearningRatePrior::Cv),
            "squint_improper" => Rule::Squint(LearningRatePrior::ImproperLogUniform),
            "squint_grid" => Rule::Squint(LearningRatePrior::DiscreteGrid(grid_from(etas, masses, points)?)),
            "iprod" => Rule::IProd(IProdAccumulator::new(k, grid_from(etas, masses, points)?)),
            "hedge" => Rule::Hedge(eta.ok_or_else(|| PyValueError::new_err("hedge needs `eta`"))?),
            other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
        };
        Ok(Self {
            state,
            rule,
            quadrature: QuadratureOptions::default(),
        })
    }

    /// Weights for the next round.
    fn weights(&self) -> PyResult<Vec<f64>> {
        match &self.rule {
            Rule::Squint(prior) => experts::squint_weights(&self.state, prior, &self.quadrature),
            Rule::IProd(acc) => acc.weights(self.state.prior()),
            Rule::Hedge(eta) => experts::hedge_weights(&self.state, *eta),
        }
        .map_err(err)
    }

    /// Play the current weights against `losses ∈ [0, 1]^K`; returns the weights played.
    fn update(&mut self, losses: Vec<f64>) -> PyResult<Vec<f64>> {
        let w = self.weights()?;
        let r = self.state.update(&w, &losses).map_err(err)?;
        if let Rule::IProd(acc) = &mut self.rule {
            acc.push(&r).map_err(err)?;
        }
        Ok(w)
    }

    /// Potential of the current state (not defined for Hedge).
    fn potential(&self) -> PyResult<f64> {
        match &self.rule {
            Rule::Squint(prior) => experts::potential(&self.state, prior, &self.quadrature).map_err(err),
            Rule::IProd(acc) => Ok(acc.potential(self.state.prior())),
            Rule::Hedge(_) => Err(PyValueError::new_err("Hedge has no potential")),
        }
    }

    #[getter]
    fn k(&self) -> usize {
        self.state.k()
    }
    #[getter]
    fn rounds(&self) -> u64 {
        self.state.rounds()
    }
    #[getter]
    fn regret(&self) -> Vec<f64> {
        self.state.regret().to_vec()
    }
    #[getter]
    fn variance(&self) -> Vec<f64> {
        self.state.variance().to_vec()
    }
    #[getter]
    fn learner_loss(&self) -> f64 {
        self.state.learner_loss()
    }
    #[getter]
    fn cumulative_loss(&self) -> Vec<f64> {
        self.state.cumulative_loss().to_vec()
    }
}

/// A binary concept class and its convex hull.
#[pyclass(module = "squint_py", from_py_object)]
#[derive(Clone)]
struct ConceptClass {
    inner: polytopes::ConceptClass,
}

#[pymethods]
impl ConceptClass {
    /// All subsets of size `m` of `k` elements.
    #[staticmethod]
    fn k_subsets(k: usize, m: usize) -> PyResult<Self> {
        polytopes::ConceptClass::k_subsets(k, m).map(|inner| Self { inner }).map_err(err)
    }

    /// Source-to-sink paths of a DAG given as `(tail, head)` pairs on nodes `0..n`.
    #[staticmethod]
    fn dag_paths(n: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> PyResult<Self> {
        let dag = Dag::from_edges(n, &edges, source, sink).map_err(err)?;
        Ok(Self { inner: polytopes::ConceptClass::DagPaths(dag) })
    }

    #[staticmethod]
    fn explicit(vertices: Vec<Vertex>) -> PyResult<Self> {
        polytopes::ConceptClass::explicit(vertices).map(|inner| Self { inner }).map_err(err)
    }

    /// Class from its JSON spec (`{"kind": "k_subsets", ...}` etc.).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        polytopes::ConceptClass::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[pyo3(signature = (cap=DEFAULT_VERTEX_CAP))]
    fn vertices(&self, cap: usize) -> PyResult<Vec<Vertex>> {
        polytopes::enumerate_vertices(&self.inner, cap).map_err(err)
    }

    /// Binary-relative-entropy projection onto the hull.
    fn project(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        polytopes::project(&self.inner, &u).map_err(err)
    }

    /// `(concepts, weights)` with `Σ weights·concepts = u`.
    fn decompose(&self, u: Vec<f64>) -> PyResult<(Vec<Vertex>, Vec<f64>)> {
        let d = polytopes::decompose(&self.inner, &u).map_err(err)?;
        Ok((d.concepts, d.weights))
    }

    fn hull_residual(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.hull_residual(&u).map_err(err)
    }
}

/// Component iProd on a concept class, with the learning-rate grid for `horizon`.
#[pyclass(module = "squint_py")]
struct ComponentIProd {
    inner: CombGameState,
}

#[pymethods]
impl ComponentIProd {
    #[new]
    #[pyo3(signature = (class_, horizon, prior=None))]
    fn new(class_: ConceptClass, horizon: u64, prior: Option<Vec<f64>>) -> PyResult<Self> {
        let prior = match prior {
            Some(p) => p,
            None => harness::default_prior(&class_.inner).map_err(err)?,
        };
        combinatorial::make_game(class_.inner, &prior, horizon)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// Track regret against `v` in the hull; must be called before the first round.
    fn register_comparator(&mut self, v: Vec<f64>) -> PyResult<usize> {
        self.inner.register_comparator(&v).map_err(err)
    }

    /// Usage `u_t` for this round.
    fn play(&mut self) -> PyResult<Vec<f64>> {
        self.inner.play().map_err(err)
    }

    /// Observe `losses ∈ [−1, 1]^K` for the usage returned by `play`.
    fn observe(&mut self, losses: Vec<f64>) -> PyResult<()> {
        self.inner.observe(&losses).map_err(err)
    }

    fn potential(&self) -> f64 {
        self.inner.potential()
    }

    /// `(R, V, bound)` for a registered comparator.
    fn comparator(&self, index: usize) -> PyResult<(f64, f64, f64)> {
        let c = self
            .inner
            .comparators()
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("no comparator {index}")))?;
        let bound = self.inner.comparator_bound(index).map_err(err)?;
        Ok((c.r_v, c.v_v, bound))
    }

    /// `(lhs, rhs)` of the per-rate inequality for grid rate `eta`.
    fn lemma4_check(&self, eta: f64, index: usize) -> PyResult<(f64, f64)> {
        self.inner.lemma4_check(eta, index).map_err(err)
    }

    #[getter]
    fn etas(&self) -> Vec<f64> {
        self.inner.slices().iter().map(|s| s.eta).collect()
    }
    #[getter]
    fn rounds(&self) -> u64 {
        self.inner.rounds()
    }
}

#[pyfunction]
fn ln_xi(r: f64, v: f64) -> PyResult<f64> {
    Ok(numerics::ln_xi(XiInput::new(r, v).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (v, pi_mass, a=0.0, b=0.0))]
fn bound_theorem1(v: f64, pi_mass: f64, a: f64, b: f64) -> PyResult<f64> {
    bounds::bound_theorem1(v, pi_mass, a, b).map_err(err)
}

#[pyfunction]
fn bound_theorem2(v: f64, pi_mass: f64) -> PyResult<f64> {
    bounds::bound_theorem2(v, pi_mass).map_err(err)
}

#[pyfunction]
fn bound_theorem3(v: f64, pi_mass: f64, t: u64) -> PyResult<f64> {
    bounds::bound_theorem3(v, pi_mass, t).map_err(err)
}

#[pyfunction]
fn bound_theorem4(v: f64, entropy: f64, k: usize, t: u64) -> PyResult<f64> {
    bounds::bound_theorem4(v, entropy, k, t).map_err(err)
}

#[pyfunction]
fn bound_eq20(v: f64, entropy: f64, k: usize, alpha: f64, gamma_mass: f64) -> PyResult<f64> {
    bounds::bound_eq20(v, entropy, k, alpha, gamma_mass).map_err(err)
}

/// Learning rates of the Component iProd grid for horizon `t`.
#[pyfunction]
fn default_grid(t: u64) -> PyResult<Vec<f64>> {
    combinatorial::default_grid(t).map(|g| g.etas().to_vec()).map_err(err)
}

/// Run a JSON experiment config; returns `(summary_json, csv)`.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<(String, String)> {
    let cfg = harness::ExperimentConfig::from_json(config_json).map_err(err)?;
    let out = harness::run_experiment(&cfg).map_err(err)?;
    out.write(&cfg).map_err(err)?;
    Ok((out.summary_json().map_err(err)?, out.to_csv(out.dim())))
}

/// Re-check a harness CSV; returns `(failed, rows, bound_checks, problems)`.
#[pyfunction]
fn audit_csv(text: &str) -> PyResult<(bool, usize, usize, Vec<String>)> {
    let r = harness::audit::audit_csv(text).map_err(err)?;
    let failed = r.failed();
    let problems = r.violations.into_iter().chain(r.invariant_failures).collect();
    Ok((failed, r.rows, r.bound_checks, problems))
}

#[pymodule]
fn squint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ExpertGame>()?;
    m.add_class::<ConceptClass>()?;
    m.add_class::<ComponentIProd>()?;
    m.add_function(wrap_pyfunction!(ln_xi, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem3, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem4, m)?)?;
    m.add_function(wrap_pyfunction!(bound_eq20, m)?)?;
    m.add_function(wrap_pyfunction!(default_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(audit_csv, m)?)?;
    Ok(())
}
