//! Python bindings: run scenarios, read metrics and trajectories, and query
//! the lane cost.

use glam::DVec2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use plc_nav::behavior::BehaviorMode;
use plc_nav::harness::export::{metrics_json, trajectory_csv};
use plc_nav::harness::{compute_metrics, run, Config, ScenarioConfig, ScenarioKind, Turn};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scenario(s: &str) -> PyResult<ScenarioKind> {
    match s {
        "frontal" => Ok(ScenarioKind::Frontal),
        "blind" => Ok(ScenarioKind::Blind),
        other => Err(value_error(format!("unknown scenario '{other}'"))),
    }
}

fn parse_turn(s: &str) -> PyResult<Turn> {
    match s {
        "ab" => Ok(Turn::Ab),
        "aprime" => Ok(Turn::Aprime),
        other => Err(value_error(format!("unknown turn '{other}'"))),
    }
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<PyObject> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new_bound(py, items).into_py(py)
        }
        Value::Object(m) => {
            let d = PyDict::new_bound(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py(py)
        }
    })
}

/// Default configuration as TOML text.
#[pyfunction]
fn default_config() -> String {
    Config::default().to_toml()
}

/// Runs one scenario and returns `(metrics, trajectory_csv)`.
///
/// `config` is optional TOML text; omitted keys keep their defaults.
#[pyfunction]
#[pyo3(signature = (scenario, behavior, seed=0, turn=None, config=None))]
fn simulate(
    py: Python<'_>,
    scenario: &str,
    behavior: &str,
    seed: u64,
    turn: Option<&str>,
    config: Option<&str>,
) -> PyResult<(PyObject, String)> {
    let kind = parse_scenario(scenario)?;
    let mode: BehaviorMode = behavior.parse().map_err(value_error)?;
    let turn = turn.map(parse_turn).transpose()?;
    let config = match config {
        Some(text) => Config::from_toml(text).map_err(value_error)?,
        None => Config::default(),
    };
    let cfg = ScenarioConfig::new(kind, turn, mode, seed).with_config(config);
    let (metrics, csv) = py
        .allow_threads(|| {
            let (_, log) = run(&cfg)?;
            Ok::<_, plc_nav::harness::ScenarioError>((compute_metrics(&log, &cfg), trajectory_csv(&log.records)))
        })
        .map_err(value_error)?;
    let json: serde_json::Value = serde_json::from_str(&metrics_json(&metrics)).map_err(value_error)?;
    Ok((to_py(py, &json)?, csv))
}

/// Lane cost of moving along `direction` through a cell with lane vector `lane`.
#[pyfunction]
fn lane_cost(lane: (f64, f64), direction: (f64, f64)) -> PyResult<f64> {
    plc_nav::lane::lane_cost(DVec2::new(lane.0, lane.1), DVec2::new(direction.0, direction.1)).map_err(value_error)
}

#[pymodule]
#[pyo3(name = "plc_nav")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(lane_cost, m)?)?;
    Ok(())
}
