//! Python bindings: automaton parsing and inspection, scenario
//! compilation, composition, verification, synthesis by either engine,
//! and SAT solving through the completion reduction.

use protosynth::automata;
use protosynth::compose::compose_all;
use protosynth::reduction::{Cnf, CnfOutcome};
use protosynth::scenarios::ScenarioSet;
use protosynth::search::{self, Instance, SearchConfig, SearchResult};
use protosynth::symbolic::{solve_symbolic, SymbolicConfig, SymbolicResult};
use protosynth::verify::{verify_all, NbMode, Profile, Trace};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

/// A finite-state input-output automaton.
#[pyclass(frozen)]
#[derive(Clone)]
struct Automaton {
    inner: automata::Automaton,
}

#[pymethods]
impl Automaton {
    /// Parses the textual automaton format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Automaton> {
        automata::Automaton::parse(text)
            .map(|inner| Automaton { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn n_transitions(&self) -> usize {
        self.inner.transitions().len()
    }

    fn emit(&self) -> String {
        self.inner.emit()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot(&[])
    }

    /// Structural violations as human-readable strings; empty means valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(ToString::to_string).collect()
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn is_receptive(&self) -> bool {
        self.inner.is_receptive()
    }

    fn is_closed(&self) -> bool {
        self.inner.is_closed()
    }

    /// Copy with extra input/output events added to the interface.
    fn with_interface(&self, inputs: Vec<String>, outputs: Vec<String>) -> Automaton {
        let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
        let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
        Automaton {
            inner: self.inner.with_interface(&ins, &outs),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "<Automaton {} ({} states, {} transitions)>",
            self.inner.name(),
            self.inner.n_states(),
            self.inner.transitions().len()
        )
    }
}

fn nb_mode(name: &str) -> PyResult<Option<NbMode>> {
    match name {
        "strong" => Ok(Some(NbMode::Strong)),
        "weak" => Ok(Some(NbMode::Weak)),
        "none" => Ok(None),
        other => Err(PyValueError::new_err(format!(
            "unknown nonblocking mode {other:?} (expected strong, weak, or none)"
        ))),
    }
}

fn inner_list(components: &[PyRef<Automaton>]) -> Vec<automata::Automaton> {
    components.iter().map(|a| a.inner.clone()).collect()
}

/// Compiles a scenario text into `{process_name: Automaton}`.
#[pyfunction]
fn compile_scenarios(text: &str) -> PyResult<BTreeMap<String, Automaton>> {
    let set = ScenarioSet::parse(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let procs = set.compile().map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(procs
        .into_iter()
        .map(|(k, inner)| (k, Automaton { inner }))
        .collect())
}

/// Flattens the reachable composition of `components` into one automaton.
#[pyfunction]
fn compose(components: Vec<PyRef<Automaton>>) -> PyResult<Automaton> {
    let product =
        compose_all(&inner_list(&components)).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(Automaton {
        inner: product.to_automaton("product"),
    })
}

fn trace_events(t: &Trace) -> Vec<String> {
    t.events.iter().map(|e| e.name().to_string()).collect()
}

/// Runs the requirement profile over the composition; returns a dict with
/// `passed` plus a witness event list (or None) per requested check.
#[pyfunction]
#[pyo3(signature = (components, deadlock=true, safety=true, liveness=true, nonblocking="weak"))]
fn verify<'py>(
    py: Python<'py>,
    components: Vec<PyRef<Automaton>>,
    deadlock: bool,
    safety: bool,
    liveness: bool,
    nonblocking: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let profile = Profile {
        deadlock,
        safety,
        liveness,
        nonblocking: nb_mode(nonblocking)?,
    };
    let product =
        compose_all(&inner_list(&components)).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = verify_all(&product, &profile);
    let out = PyDict::new_bound(py);
    out.set_item("passed", report.passed())?;
    out.set_item("states", report.n_states)?;
    out.set_item("deadlock", report.deadlock.as_ref().map(trace_events))?;
    out.set_item("safety", report.safety.as_ref().map(trace_events))?;
    out.set_item("liveness", report.liveness.as_ref().map(trace_events))?;
    out.set_item(
        "blocking",
        report.blocking.as_ref().map(|b| {
            (
                trace_events(&b.trace),
                b.component.clone(),
                b.event.name().to_string(),
            )
        }),
    )?;
    Ok(out)
}

/// Completes the `targets` components so the composition satisfies the
/// profile. Returns added transitions as `(component_index, src, event,
/// dst)` tuples, or None when no completion exists. Raises RuntimeError
/// on budget or node-cap exhaustion.
#[pyfunction]
#[pyo3(signature = (components, targets, engine="bdd", budget=1_000_000, node_cap=None,
                    deadlock=true, safety=true, liveness=true, nonblocking="weak"))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    components: Vec<PyRef<Automaton>>,
    targets: Vec<usize>,
    engine: &str,
    budget: u64,
    node_cap: Option<usize>,
    deadlock: bool,
    safety: bool,
    liveness: bool,
    nonblocking: &str,
) -> PyResult<Option<Vec<(usize, String, String, String)>>> {
    let instance = Instance {
        components: inner_list(&components),
        targets,
        profile: Profile {
            deadlock,
            safety,
            liveness,
            nonblocking: nb_mode(nonblocking)?,
        },
    };
    let added = match engine {
        "explicit" => match search::solve(&instance, &SearchConfig { budget }) {
            SearchResult::Solution(added, _) => added,
            SearchResult::Unsat(_) => return Ok(None),
            SearchResult::BudgetExhausted(_) => {
                return Err(PyRuntimeError::new_err("search budget exhausted"))
            }
        },
        "bdd" => {
            let config = SymbolicConfig {
                node_cap: node_cap.unwrap_or(SymbolicConfig::default().node_cap),
                ..SymbolicConfig::default()
            };
            match solve_symbolic(&instance, &config) {
                SymbolicResult::Solution(added, _) => added,
                SymbolicResult::Unsat(_) => return Ok(None),
                SymbolicResult::ResourceExhausted(_) => {
                    return Err(PyRuntimeError::new_err("node cap or retry limit exhausted"))
                }
            }
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown engine {other:?} (expected explicit or bdd)"
            )))
        }
    };
    Ok(Some(
        added
            .iter()
            .map(|&(c, t)| {
                let a = &instance.components[c];
                (
                    c,
                    a.state_name(t.src).to_string(),
                    t.event.name().to_string(),
                    a.state_name(t.dst).to_string(),
                )
            })
            .collect(),
    ))
}

/// Decides a DIMACS CNF via the completion reduction (`engine` explicit
/// or bdd) or direct enumeration (`brute`). Returns a model as signed
/// literals, or None when unsatisfiable.
#[pyfunction]
#[pyo3(signature = (dimacs, engine="bdd"))]
fn sat_solve(dimacs: &str, engine: &str) -> PyResult<Option<Vec<i64>>> {
    let cnf = Cnf::parse_dimacs(dimacs).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = match engine {
        "brute" => match cnf.brute_force() {
            Some(a) => CnfOutcome::Sat(a),
            None => CnfOutcome::Unsat,
        },
        "explicit" => {
            protosynth::reduction::solve_cnf_explicit(&cnf, &SearchConfig::default())
        }
        "bdd" => protosynth::reduction::solve_cnf_symbolic(&cnf, &SymbolicConfig::default()),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown engine {other:?} (expected brute, explicit, or bdd)"
            )))
        }
    };
    match outcome {
        CnfOutcome::Sat(model) => Ok(Some(
            model
                .iter()
                .enumerate()
                .map(|(i, &v)| if v { i as i64 + 1 } else { -(i as i64 + 1) })
                .collect(),
        )),
        CnfOutcome::Unsat => Ok(None),
        CnfOutcome::BudgetExhausted => Err(PyRuntimeError::new_err("budget exhausted")),
    }
}

#[pymodule]
fn protosynth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Automaton>()?;
    m.add_function(wrap_pyfunction!(compile_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(sat_solve, m)?)?;
    Ok(())
}
