//! Python bindings: parse and check specifications, drive a monitor event
//! by event, and run the offline and online drivers on files.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyTypeError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString};

use lola_core::analysis::{analyze, Analyzed};
use lola_core::cli::{self, Mode, RunConfig, RunFailure, Source};
use lola_core::engine::{init_monitor, init_online_monitor, MonitorState, StepOutput, Value};
use lola_core::feedback::{FeedbackEvent, Payload, TagSinks};
use lola_core::syntax::{
    merge_specifications, parse_specification, pretty_specification, StreamType,
};

create_exception!(
    lola,
    SpecError,
    PyException,
    "Invalid or unsupported specification."
);
create_exception!(
    lola,
    MonitorError,
    PyException,
    "Runtime evaluation failure."
);
create_exception!(
    lola,
    LogError,
    PyException,
    "Log or sink input/output failure."
);

fn spec_err(e: impl ToString) -> PyErr {
    SpecError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Int(i) => PyInt::new(py, *i).into_any().unbind(),
        Value::Double(d) => PyFloat::new(py, *d).into_any().unbind(),
        Value::Str(s) => PyString::new(py, s).into_any().unbind(),
    })
}

fn from_py(obj: &Bound<'_, PyAny>, ty: StreamType, name: &str) -> PyResult<Value> {
    let wrong = || PyTypeError::new_err(format!("input `{name}` expects {ty}"));
    Ok(match ty {
        StreamType::Bool => Value::Bool(obj.cast::<PyBool>().map_err(|_| wrong())?.is_true()),
        StreamType::Int => {
            if obj.is_instance_of::<PyBool>() {
                return Err(wrong());
            }
            Value::Int(obj.extract::<i64>().map_err(|_| wrong())?)
        }
        StreamType::Double => Value::Double(obj.extract::<f64>().map_err(|_| wrong())?),
        StreamType::String => Value::Str(Arc::from(obj.extract::<String>().map_err(|_| wrong())?)),
    })
}

/// A parsed and analysed specification.
#[pyclass(module = "lola", frozen)]
struct Specification {
    analyzed: Analyzed,
    source: String,
}

#[pymethods]
impl Specification {
    /// Parses one or more specification texts and merges them.
    #[new]
    #[pyo3(signature = (*sources))]
    fn new(sources: Vec<String>) -> PyResult<Self> {
        if sources.is_empty() {
            return Err(spec_err("at least one specification text is required"));
        }
        let specs = sources
            .iter()
            .map(|s| parse_specification(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(spec_err)?;
        let merged = merge_specifications(specs).map_err(spec_err)?;
        let analyzed = analyze(&merged).map_err(spec_err)?;
        Ok(Specification {
            source: pretty_specification(&merged),
            analyzed,
        })
    }

    /// Loads a bundled specification by name.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let text = lola_core::corpus::get(name)
            .ok_or_else(|| spec_err(format!("no bundled specification `{name}`")))?;
        Specification::new(vec![text.to_string()])
    }

    #[getter]
    fn well_formed(&self) -> bool {
        self.analyzed.result.well_formed
    }

    #[getter]
    fn efficiently_monitorable(&self) -> bool {
        self.analyzed.result.efficiently_monitorable
    }

    #[getter]
    fn witness(&self) -> Option<String> {
        self.analyzed.result.witness.clone()
    }

    #[getter]
    fn evaluation_order(&self) -> Vec<String> {
        self.analyzed.result.evaluation_order.clone()
    }

    /// `(name, type)` of every input stream.
    #[getter]
    fn inputs(&self) -> Vec<(String, String)> {
        let c = &self.analyzed.checked;
        c.streams[..c.num_inputs]
            .iter()
            .map(|s| (s.name.clone(), s.ty.name().to_string()))
            .collect()
    }

    /// `(name, type)` of every output stream.
    #[getter]
    fn outputs(&self) -> Vec<(String, String)> {
        let c = &self.analyzed.checked;
        c.streams[c.num_inputs..]
            .iter()
            .map(|s| (s.name.clone(), s.ty.name().to_string()))
            .collect()
    }

    /// The full analysis as a JSON document.
    fn check_json(&self) -> String {
        self.analyzed.result.to_json()
    }

    fn __str__(&self) -> String {
        self.source.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Specification(inputs={}, outputs={}, feedback={})",
            self.analyzed.checked.num_inputs,
            self.analyzed.checked.streams.len() - self.analyzed.checked.num_inputs,
            self.analyzed.checked.observers.len()
        )
    }
}

fn feedback_dict<'py>(py: Python<'py>, ev: &FeedbackEvent) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("declaration", ev.declaration)?;
    d.set_item("kind", ev.kind.keyword())?;
    d.set_item("position", ev.position)?;
    d.set_item("message", &*ev.message)?;
    d.set_item(
        "time",
        ev.timestamp.as_ref().map(|t| to_py(py, t)).transpose()?,
    )?;
    d.set_item("line", ev.to_string())?;
    match &ev.payload {
        Payload::None => {}
        Payload::Snapshot(values) => {
            let snap = PyDict::new(py);
            for (name, v) in values {
                snap.set_item(&**name, to_py(py, v)?)?;
            }
            d.set_item("snapshot", snap)?;
        }
        Payload::Tag { location, row } => {
            d.set_item("location", &**location)?;
            let row: Vec<Py<PyAny>> = row.iter().map(|v| to_py(py, v)).collect::<PyResult<_>>()?;
            d.set_item("row", row)?;
        }
    }
    Ok(d)
}

fn step_dict<'py>(py: Python<'py>, out: &StepOutput) -> PyResult<Bound<'py, PyDict>> {
    let resolved = PyList::empty(py);
    for r in &out.resolved {
        resolved.append((r.position, &*r.stream, to_py(py, &r.value)?))?;
    }
    let feedback = PyList::empty(py);
    for ev in &out.feedback {
        feedback.append(feedback_dict(py, ev)?)?;
    }
    let d = PyDict::new(py);
    d.set_item("resolved", resolved)?;
    d.set_item("feedback", feedback)?;
    Ok(d)
}

/// An incremental monitor. Feed one mapping of input values per position
/// with `step`, then call `finalize` once the trace ends.
#[pyclass(module = "lola")]
struct Monitor {
    state: MonitorState,
    sinks: Option<TagSinks>,
}

impl Monitor {
    fn deliver(&mut self, out: &StepOutput) -> PyResult<()> {
        if let Some(sinks) = &mut self.sinks {
            sinks
                .record(&out.feedback)
                .map_err(|e| LogError::new_err(e.to_string()))?;
        }
        Ok(())
    }
}

#[pymethods]
impl Monitor {
    /// With `online=True` specifications needing unbounded memory are
    /// refused. Tag and filter files are only written when `out_dir` is
    /// given.
    #[new]
    #[pyo3(signature = (spec, online = false, out_dir = None))]
    fn new(spec: &Specification, online: bool, out_dir: Option<PathBuf>) -> PyResult<Self> {
        let state = if online {
            init_online_monitor(&spec.analyzed)
        } else {
            init_monitor(&spec.analyzed)
        }
        .map_err(spec_err)?;
        let sinks = out_dir
            .map(|dir| TagSinks::open(state.observers(), Some(&dir)))
            .transpose()
            .map_err(|e| LogError::new_err(e.to_string()))?;
        Ok(Monitor { state, sinks })
    }

    /// Consumes the inputs of the next position, given as a mapping from
    /// input name to value. Returns the finalized outputs and feedback.
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        inputs: &Bound<'py, PyDict>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut values = Vec::with_capacity(self.state.num_inputs());
        for (name, ty) in self.state.input_types() {
            let obj = inputs.get_item(&name)?.ok_or_else(|| {
                MonitorError::new_err(format!("event is missing a value for input `{name}`"))
            })?;
            values.push(from_py(&obj, ty, &name)?);
        }
        let event = lola_core::engine::Event::new(self.state.current_position(), values);
        let out = self
            .state
            .step(event)
            .map_err(|e| MonitorError::new_err(e.to_string()))?;
        self.deliver(&out)?;
        step_dict(py, &out)
    }

    /// Ends the trace: pending lookahead takes defaults and all remaining
    /// positions are finalized.
    fn finalize<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = self
            .state
            .finalize()
            .map_err(|e| MonitorError::new_err(e.to_string()))?;
        self.deliver(&out)?;
        if let Some(sinks) = &mut self.sinks {
            sinks
                .flush()
                .map_err(|e| LogError::new_err(e.to_string()))?;
        }
        step_dict(py, &out)
    }

    #[getter]
    fn position(&self) -> u64 {
        self.state.current_position()
    }

    #[getter]
    fn state_size_bytes(&self) -> usize {
        self.state.state_size_bytes()
    }

    #[getter]
    fn fire_counts(&self) -> Vec<u64> {
        self.state.fire_counts().to_vec()
    }

    #[getter]
    fn stream_names(&self) -> Vec<String> {
        self.state
            .stream_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

fn run_driver(
    py: Python<'_>,
    mode: Mode,
    specs: Vec<PathBuf>,
    input: String,
    out_dir: Option<PathBuf>,
    evalstep: usize,
    lenient: bool,
) -> PyResult<(String, Vec<String>)> {
    let mut config = RunConfig::new(mode, specs);
    config.source = Some(if input == "-" {
        Source::Stdin
    } else {
        Source::Path(PathBuf::from(input))
    });
    config.out_dir = out_dir;
    config.evalstep = evalstep;
    config.lenient = lenient;
    let mut buf: Vec<u8> = Vec::new();
    let result = py.detach(|| match mode {
        Mode::Online => cli::run_online(&config, &mut buf),
        _ => cli::run_offline(&config, &mut buf),
    });
    let lines = String::from_utf8_lossy(&buf)
        .lines()
        .map(str::to_string)
        .collect();
    match result {
        Ok(report) => Ok((report.to_json(), lines)),
        Err(failure) => {
            let RunFailure { error, .. } = *failure;
            Err(match error.exit_code() {
                1 => SpecError::new_err(error.to_string()),
                2 => LogError::new_err(error.to_string()),
                _ => MonitorError::new_err(error.to_string()),
            })
        }
    }
}

/// Evaluates a log file. Returns `(report_json, notification_lines)`.
#[pyfunction]
#[pyo3(signature = (specs, input, out_dir = None, lenient = false))]
fn run_offline(
    py: Python<'_>,
    specs: Vec<PathBuf>,
    input: String,
    out_dir: Option<PathBuf>,
    lenient: bool,
) -> PyResult<(String, Vec<String>)> {
    run_driver(py, Mode::Offline, specs, input, out_dir, 1, lenient)
}

/// Evaluates a log file as a stream delivered in batches of `evalstep`.
#[pyfunction]
#[pyo3(signature = (specs, input, evalstep = 1, out_dir = None, lenient = false))]
fn run_online(
    py: Python<'_>,
    specs: Vec<PathBuf>,
    input: String,
    evalstep: usize,
    out_dir: Option<PathBuf>,
    lenient: bool,
) -> PyResult<(String, Vec<String>)> {
    if evalstep == 0 {
        return Err(SpecError::new_err("evalstep must be at least 1"));
    }
    run_driver(py, Mode::Online, specs, input, out_dir, evalstep, lenient)
}

/// Names of the bundled specifications.
#[pyfunction]
fn bundled_names() -> Vec<&'static str> {
    lola_core::corpus::all().iter().map(|(n, _)| *n).collect()
}

#[pymodule]
fn lola(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SpecError", m.py().get_type::<SpecError>())?;
    m.add("MonitorError", m.py().get_type::<MonitorError>())?;
    m.add("LogError", m.py().get_type::<LogError>())?;
    m.add_class::<Specification>()?;
    m.add_class::<Monitor>()?;
    m.add_function(wrap_pyfunction!(run_offline, m)?)?;
    m.add_function(wrap_pyfunction!(run_online, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_names, m)?)?;
    Ok(())
}
