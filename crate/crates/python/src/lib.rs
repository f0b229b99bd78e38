use std::collections::BTreeSet;
use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use symcrtl::cli::{build_pipeline, load_run_config, run_monte_carlo, synthesize, Pipeline as CorePipeline};
use symcrtl::game::{self, Horizon};
use symcrtl::lattice::{self, PointSet};
use symcrtl::numerics::{self, Matrix};
use symcrtl::tsys::{self, Relation, RelationFile, TransitionSystem as CoreSystem, Variant};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON and hands back the equivalent Python object.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    match name {
        "plain" => Ok(Variant::Plain),
        "control" => Ok(Variant::Control),
        "dual" => Ok(Variant::Dual),
        "combined" => Ok(Variant::Combined),
        _ => Err(PyValueError::new_err(format!("unknown variant {name:?}"))),
    }
}

fn parse_horizon(horizon: Option<usize>) -> Horizon {
    horizon.map_or(Horizon::Unbounded, Horizon::Bounded)
}

fn state_set(t: &CoreSystem, ids: &[String]) -> PyResult<BTreeSet<usize>> {
    ids.iter()
        .map(|q| t.state_index(q).ok_or_else(|| PyValueError::new_err(format!("unknown state {q:?}"))))
        .collect()
}

/// Finite transition system with control and disturbance labels.
#[pyclass(name = "TransitionSystem", module = "symcrtl_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct TransitionSystem {
    inner: CoreSystem,
}

#[pymethods]
impl TransitionSystem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: CoreSystem = serde_json::from_str(text).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads a transition system, a model or a run config.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = symcrtl::cli::load_transition_system(Path::new(path)).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        symcrtl::io::to_canonical_json(&self.inner).map_err(err)
    }

    fn to_table_csv(&self) -> String {
        self.inner.to_table_csv()
    }

    #[pyo3(signature = (name = "T"))]
    fn to_dot(&self, name: &str) -> String {
        self.inner.to_dot(name)
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states().iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn controls(&self) -> Vec<String> {
        self.inner.controls().iter().map(|l| l.id.clone()).collect()
    }

    #[getter]
    fn disturbances(&self) -> Vec<String> {
        self.inner.disturbances().iter().map(|l| l.id.clone()).collect()
    }

    fn output(&self, state: &str) -> PyResult<Vec<f64>> {
        let q = state_set(&self.inner, &[state.to_string()])?;
        Ok(self.inner.output(*q.iter().next().unwrap()).to_vec())
    }

    fn successors(&self, state: &str, control: &str, disturbance: &str) -> PyResult<Vec<String>> {
        let t = &self.inner;
        let q = t.state_index(state).ok_or_else(|| PyValueError::new_err(format!("unknown state {state:?}")))?;
        let a = t.control_index(control).ok_or_else(|| PyValueError::new_err(format!("unknown control {control:?}")))?;
        let b = t
            .disturbance_index(disturbance)
            .ok_or_else(|| PyValueError::new_err(format!("unknown disturbance {disturbance:?}")))?;
        Ok(t.succ(q, a, b).iter().map(|&p| t.states()[p].id.clone()).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.n_states()
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionSystem(states={}, controls={}, disturbances={}, transitions={})",
            self.inner.n_states(),
            self.inner.controls().len(),
            self.inner.disturbances().len(),
            self.inner.transitions().len()
        )
    }
}

/// Continuous system plus symbolic model built from a run config.
#[pyclass(name = "Pipeline", module = "symcrtl_py", unsendable)]
struct Pipeline {
    inner: CorePipeline,
}

#[pymethods]
impl Pipeline {
    #[staticmethod]
    fn from_config(path: &str) -> PyResult<Self> {
        let p = Path::new(path);
        let config = load_run_config(p).map_err(err)?;
        let dir = p.parent().unwrap_or(Path::new("."));
        Ok(Self {
            inner: build_pipeline(config, dir).map_err(err)?,
        })
    }

    /// Builds from config text; relative file references resolve against `base_dir`.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir = "."))]
    fn from_config_json(text: &str, base_dir: &str) -> PyResult<Self> {
        let config = serde_json::from_str(text).map_err(err)?;
        Ok(Self {
            inner: build_pipeline(config, Path::new(base_dir)).map_err(err)?,
        })
    }

    #[getter]
    fn system(&self) -> TransitionSystem {
        TransitionSystem {
            inner: self.inner.model.system.clone(),
        }
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn model_json(&self) -> PyResult<String> {
        self.inner.model.to_json().map_err(err)
    }

    fn condition<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.model.condition)
    }

    /// Returns `(winning states, strategy)` for the configured objective.
    fn synthesize<'py>(&self, py: Python<'py>) -> PyResult<(Vec<String>, Bound<'py, PyAny>)> {
        let (win, strategy) = synthesize(&self.inner).map_err(err)?;
        let t = &self.inner.model.system;
        let ids = win.iter().map(|&q| t.states()[q].id.clone()).collect();
        Ok((ids, to_py(py, &strategy)?))
    }

    fn monte_carlo<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let (_, strategy) = synthesize(&self.inner).map_err(err)?;
        let report = run_monte_carlo(&self.inner, &strategy).map_err(err)?;
        to_py(py, &report)
    }
}

/// Checks a relation (or the all-ε-close relation when `relation` is None).
#[pyfunction]
#[pyo3(signature = (left, right, epsilon, variant = "plain", relation = None))]
fn check<'py>(
    py: Python<'py>,
    left: &TransitionSystem,
    right: &TransitionSystem,
    epsilon: f64,
    variant: &str,
    relation: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let (t1, t2) = (&left.inner, &right.inner);
    let r = match relation {
        Some(text) => {
            let file: RelationFile = serde_json::from_str(text).map_err(err)?;
            file.resolve(t1, t2).map_err(err)?
        }
        None => Relation::within(t1, t2, epsilon).map_err(err)?,
    };
    let report = tsys::check_alt_bisim(t1, t2, &r, epsilon, parse_variant(variant)?).map_err(err)?;
    to_py(py, &report)
}

/// Maximal relation as `(bisimilar, relation)`.
#[pyfunction]
#[pyo3(signature = (left, right, epsilon, variant = "plain"))]
fn max_relation<'py>(
    py: Python<'py>,
    left: &TransitionSystem,
    right: &TransitionSystem,
    epsilon: f64,
    variant: &str,
) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let (t1, t2) = (&left.inner, &right.inner);
    let max = tsys::max_alt_bisim(t1, t2, epsilon, parse_variant(variant)?).map_err(err)?;
    Ok((max.bisimilar(), to_py(py, &max.relation.to_file(t1, t2))?))
}

#[pyfunction]
fn cpre(t: &TransitionSystem, targets: Vec<String>) -> PyResult<Vec<String>> {
    let w = state_set(&t.inner, &targets)?;
    let pre = game::cpre(&t.inner, &w).map_err(err)?;
    Ok(pre.iter().map(|&q| t.inner.states()[q].id.clone()).collect())
}

/// Reach strategy; `horizon=None` means unbounded.
#[pyfunction]
#[pyo3(signature = (t, targets, horizon = None))]
fn solve_reach<'py>(py: Python<'py>, t: &TransitionSystem, targets: Vec<String>, horizon: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let w = state_set(&t.inner, &targets)?;
    let s = game::solve_reach(&t.inner, &w, parse_horizon(horizon)).map_err(err)?;
    to_py(py, &s)
}

#[pyfunction]
fn solve_safe<'py>(py: Python<'py>, t: &TransitionSystem, safe: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let s = state_set(&t.inner, &safe)?;
    let strategy = game::solve_safe(&t.inner, &s).map_err(err)?;
    to_py(py, &strategy)
}

#[pyfunction]
fn mat_exp(a: Vec<Vec<f64>>, t: f64) -> PyResult<Vec<Vec<f64>>> {
    let m = Matrix::from_rows(&a).map_err(err)?;
    Ok(numerics::mat_exp(&m, t).map_err(err)?.to_rows())
}

#[pyfunction]
fn hausdorff(x1: Vec<Vec<f64>>, x2: Vec<Vec<f64>>) -> PyResult<f64> {
    let a = PointSet::new(x1).map_err(err)?;
    let b = PointSet::new(x2).map_err(err)?;
    lattice::hausdorff(&a, &b).map_err(err)
}

#[pyfunction]
fn canonical_json(text: &str) -> PyResult<String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(err)?;
    symcrtl::io::to_canonical_json(&v).map_err(err)
}

#[pymodule]
fn symcrtl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TransitionSystem>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(max_relation, m)?)?;
    m.add_function(wrap_pyfunction!(cpre, m)?)?;
    m.add_function(wrap_pyfunction!(solve_reach, m)?)?;
    m.add_function(wrap_pyfunction!(solve_safe, m)?)?;
    m.add_function(wrap_pyfunction!(mat_exp, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_json, m)?)?;
    Ok(())
}
