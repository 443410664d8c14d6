//! Drivers behind the `lola` binary: static checks, offline evaluation of a
//! log file and online evaluation of a record stream.
//!
//! Notifications are written to the caller's sink (standard output for the
//! binary); reports and diagnostics go elsewhere so the notification stream
//! stays machine-readable.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{analyze, AnalysisResult, Analyzed, TypeError};
use crate::engine::{
    init_monitor, init_online_monitor, EvalError, Event, InitError, MonitorState, StepOutput,
};
use crate::feedback::{SinkError, TagSinks};
use crate::io::{Batches, EventReader, IoError};
use crate::syntax::{
    merge_specifications, parse_specification, FeedbackKind, MergeError, ParseError, Specification,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Check,
    Offline,
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Path(PathBuf),
    Stdin,
    /// Accept a single TCP connection on this address.
    Listen(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub specs: Vec<PathBuf>,
    pub mode: Mode,
    pub source: Option<Source>,
    /// Base directory for relative tag and filter locations.
    pub out_dir: Option<PathBuf>,
    pub evalstep: usize,
    pub lenient: bool,
    pub stats: bool,
}

impl RunConfig {
    pub fn new(mode: Mode, specs: Vec<PathBuf>) -> RunConfig {
        RunConfig {
            specs,
            mode,
            source: None,
            out_dir: None,
            evalstep: 1,
            lenient: false,
            stats: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read specification `{}`: {source}", path.display())]
    SpecFile { path: PathBuf, source: io::Error },
    #[error("{}:{error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sink(#[from] SinkError),
    #[error("cannot write output: {0}")]
    Output(#[from] io::Error),
    #[error("runtime error: {0}")]
    Runtime(#[from] EvalError),
}

impl CliError {
    /// 1 for specification problems, 2 for I/O, 3 for evaluation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Merge(_)
            | CliError::Type(_)
            | CliError::Init(_)
            | CliError::Usage(_) => 1,
            CliError::SpecFile { .. }
            | CliError::Io(_)
            | CliError::Sink(_)
            | CliError::Output(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Reads, parses and merges the given specification files.
pub fn load_specification(paths: &[PathBuf]) -> Result<Specification, CliError> {
    let mut specs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(path).map_err(|source| CliError::SpecFile {
            path: path.clone(),
            source,
        })?;
        let spec = parse_specification(&text).map_err(|error| CliError::Parse {
            path: path.clone(),
            error,
        })?;
        specs.push(spec);
    }
    Ok(merge_specifications(specs)?)
}

/// Static analysis of the configured specifications.
pub fn run_check(config: &RunConfig) -> Result<AnalysisResult, CliError> {
    let spec = load_specification(&config.specs)?;
    Ok(analyze(&spec)?.result)
}

/// Human-readable form of a check result.
pub fn format_check(result: &AnalysisResult) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(s, "well-formed: {}", yes_no(result.well_formed));
    let _ = writeln!(
        s,
        "efficiently monitorable: {}",
        yes_no(result.efficiently_monitorable)
    );
    if let Some(w) = &result.witness {
        let _ = writeln!(s, "witness: {w}");
    }
    let width = result
        .type_table
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let _ = writeln!(
        s,
        "\n{:<width$}  {:<6}  {:>4}  {:>6}  {:>7}  {:>8}  pinned",
        "stream", "type", "past", "future", "latency", "capacity"
    );
    let opt = |v: Option<String>| v.unwrap_or_else(|| "inf".to_string());
    for ((name, ty), b) in result.type_table.iter().zip(&result.buffer_bounds.streams) {
        let pinned: Vec<String> = b.pinned.iter().map(u64::to_string).collect();
        let _ = writeln!(
            s,
            "{:<width$}  {:<6}  {:>4}  {:>6}  {:>7}  {:>8}  {}",
            name,
            ty.name(),
            b.past_depth,
            b.future_depth,
            opt(b.latency.map(|l| l.to_string())),
            opt(b.capacity.map(|c| c.to_string())),
            if pinned.is_empty() {
                "-".to_string()
            } else {
                pinned.join(",")
            }
        );
    }
    if result.well_formed {
        let _ = writeln!(
            s,
            "\nevaluation order: {}",
            result.evaluation_order.join(", ")
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FireCount {
    pub declaration: usize,
    pub kind: FeedbackKind,
    pub message: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub events: u64,
    pub evalstep: usize,
    pub fire_counts: Vec<FireCount>,
    pub wall_time_s: f64,
    pub throughput_eps: f64,
    /// Largest engine buffer footprint seen, excluding string payloads.
    pub peak_state_bytes: usize,
    pub peak_payload_bytes: usize,
    /// Events per second of trace time, from the `time` stream.
    pub avg_input_frequency: Option<f64>,
    pub warnings: Vec<String>,
    /// Set when the run stopped early; the counts cover what was processed.
    pub error: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn format_text(&self, stats: bool) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "events processed: {}", self.events);
        if let Some(f) = self.avg_input_frequency {
            let _ = writeln!(s, "average input frequency: {f:.3} Hz");
        }
        for fc in &self.fire_counts {
            let _ = writeln!(
                s,
                "  [{}] {:<15} {:>8}  {}",
                fc.declaration,
                fc.kind.keyword(),
                fc.count,
                fc.message
            );
        }
        if stats {
            let _ = writeln!(s, "wall time: {:.3} s", self.wall_time_s);
            let _ = writeln!(s, "throughput: {:.0} events/s", self.throughput_eps);
            let _ = writeln!(
                s,
                "peak state size: {} bytes (+{} bytes of string data)",
                self.peak_state_bytes, self.peak_payload_bytes
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "stopped early: {e}");
        }
        s
    }
}

/// A monitor wired to its sinks.
pub struct Session<'a> {
    monitor: MonitorState,
    tags: TagSinks,
    notifications: &'a mut dyn Write,
    time: Option<(usize, bool)>,
    first_time: Option<f64>,
    last_time: Option<f64>,
    peak_state: usize,
    peak_payload: usize,
    started: Instant,
    warnings: Vec<String>,
}

impl<'a> Session<'a> {
    pub fn new(
        monitor: MonitorState,
        out_dir: Option<&Path>,
        notifications: &'a mut dyn Write,
    ) -> Result<Session<'a>, CliError> {
        let tags = TagSinks::open(monitor.observers(), out_dir)?;
        let time = monitor
            .stream_names()
            .iter()
            .position(|n| &**n == "time")
            .map(|i| (i, i < monitor.num_inputs()));
        let peak_state = monitor.state_size_bytes();
        Ok(Session {
            monitor,
            tags,
            notifications,
            time,
            first_time: None,
            last_time: None,
            peak_state,
            peak_payload: 0,
            started: Instant::now(),
            warnings: Vec::new(),
        })
    }

    pub fn monitor(&self) -> &MonitorState {
        &self.monitor
    }

    pub fn tag_paths(&self) -> Vec<PathBuf> {
        self.tags.sinks().iter().map(|s| s.path.clone()).collect()
    }

    fn note_time(&mut self, v: &crate::engine::Value) {
        let t = match v {
            crate::engine::Value::Double(d) => *d,
            crate::engine::Value::Int(i) => *i as f64,
            _ => return,
        };
        self.first_time.get_or_insert(t);
        self.last_time = Some(t);
    }

    fn deliver(&mut self, out: StepOutput) -> Result<(), CliError> {
        if let Some((i, false)) = self.time {
            let name = self.monitor.stream_names()[i].clone();
            for r in out.resolved.iter().filter(|r| r.stream == name) {
                self.note_time(&r.value);
            }
        }
        for ev in out.feedback.iter().filter(|e| e.is_notification()) {
            writeln!(self.notifications, "{ev}")?;
        }
        self.tags.record(&out.feedback)?;
        self.peak_state = self.peak_state.max(self.monitor.state_size_bytes());
        self.peak_payload = self.peak_payload.max(self.monitor.value_payload_bytes());
        Ok(())
    }

    pub fn step(&mut self, event: Event) -> Result<(), CliError> {
        if let Some((i, true)) = self.time {
            let v = event.values[i].clone();
            self.note_time(&v);
        }
        let out = self.monitor.step(event)?;
        self.deliver(out)
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Finalizes the monitor (unless the run already failed) and flushes
    /// every sink. A finalization error is returned next to the report.
    pub fn finish(
        mut self,
        mode: Mode,
        evalstep: usize,
        error: Option<String>,
    ) -> Result<(RunReport, Option<EvalError>), CliError> {
        let mut error = error;
        let mut late = None;
        if error.is_none() {
            match self.monitor.finalize() {
                Ok(out) => self.deliver(out)?,
                Err(e) => {
                    error = Some(e.to_string());
                    late = Some(e);
                }
            }
        }
        self.tags.flush()?;
        self.notifications.flush()?;
        let wall = self.started.elapsed().as_secs_f64();
        let events = self.monitor.current_position();
        let avg_input_frequency = match (self.first_time, self.last_time) {
            (Some(a), Some(b)) if events > 1 && b > a => Some((events - 1) as f64 / (b - a)),
            _ => None,
        };
        let fire_counts = self
            .monitor
            .observers()
            .iter()
            .zip(self.monitor.fire_counts())
            .enumerate()
            .map(|(k, (o, &count))| FireCount {
                declaration: k,
                kind: o.kind,
                message: o.message.clone(),
                count,
            })
            .collect();
        let report = RunReport {
            mode,
            events,
            evalstep,
            fire_counts,
            wall_time_s: wall,
            throughput_eps: if wall > 0.0 {
                events as f64 / wall
            } else {
                0.0
            },
            peak_state_bytes: self.peak_state,
            peak_payload_bytes: self.peak_payload,
            avg_input_frequency,
            warnings: self.warnings,
            error,
        };
        Ok((report, late))
    }
}

/// A run that stopped on an error still produces a report.
#[derive(Debug)]
pub struct RunFailure {
    pub error: CliError,
    pub report: Option<RunReport>,
}

impl From<CliError> for Box<RunFailure> {
    fn from(error: CliError) -> Box<RunFailure> {
        Box::new(RunFailure {
            error,
            report: None,
        })
    }
}

fn prepare(config: &RunConfig, online: bool) -> Result<Analyzed, CliError> {
    let spec = load_specification(&config.specs)?;
    let analyzed = analyze(&spec)?;
    if online {
        init_online_monitor(&analyzed)?;
    } else {
        init_monitor(&analyzed)?;
    }
    Ok(analyzed)
}

fn check_sinks(session: &Session<'_>, source: &Source) -> Result<(), CliError> {
    if let Source::Path(input) = source {
        let input = fs::canonicalize(input).unwrap_or_else(|_| input.clone());
        for p in session.tag_paths() {
            if fs::canonicalize(&p).unwrap_or(p.clone()) == input {
                return Err(CliError::Usage(format!(
                    "tag location `{}` would overwrite the input log",
                    p.display()
                )));
            }
        }
    }
    Ok(())
}

fn finish_with(
    session: Session<'_>,
    mode: Mode,
    evalstep: usize,
    failure: Option<CliError>,
) -> Result<RunReport, Box<RunFailure>> {
    let message = failure.as_ref().map(|e| e.to_string());
    let (report, late) = session.finish(mode, evalstep, message)?;
    match failure.or(late.map(CliError::from)) {
        None => Ok(report),
        Some(error) => Err(Box::new(RunFailure {
            error,
            report: Some(report),
        })),
    }
}

/// Evaluates a whole log file (or standard input).
pub fn run_offline(
    config: &RunConfig,
    notifications: &mut dyn Write,
) -> Result<RunReport, Box<RunFailure>> {
    let source = config
        .source
        .clone()
        .ok_or_else(|| CliError::Usage("offline mode needs --input".into()))?;
    let analyzed = prepare(config, false)?;
    let monitor = init_monitor(&analyzed).map_err(CliError::from)?;
    let inputs = monitor.input_types();
    let mut session = Session::new(monitor, config.out_dir.as_deref(), notifications)?;
    check_sinks(&session, &source)?;
    let reader: Box<dyn BufRead> = match &source {
        Source::Path(p) => {
            let file = fs::File::open(p).map_err(|source| IoError::Open {
                path: p.clone(),
                source,
            });
            Box::new(BufReader::new(file.map_err(CliError::from)?))
        }
        Source::Stdin => Box::new(BufReader::new(io::stdin())),
        Source::Listen(_) => {
            return Err(CliError::Usage("offline mode reads a file or `-`".into()).into())
        }
    };
    let mut events = EventReader::new(reader, &inputs, config.lenient).map_err(CliError::from)?;
    for w in events.take_warnings() {
        session.warn(w);
    }
    let mut failure = None;
    for ev in events.by_ref() {
        let result = ev.map_err(CliError::from).and_then(|ev| session.step(ev));
        if let Err(e) = result {
            failure = Some(e);
            break;
        }
    }
    for w in events.take_warnings() {
        session.warn(w);
    }
    finish_with(session, Mode::Offline, 1, failure)
}

fn connect(source: &Source) -> Result<Box<dyn BufRead + Send>, CliError> {
    Ok(match source {
        Source::Path(p) => Box::new(BufReader::new(fs::File::open(p).map_err(|source| {
            IoError::Open {
                path: p.clone(),
                source,
            }
        })?)),
        Source::Stdin => Box::new(BufReader::new(io::stdin())),
        Source::Listen(addr) => {
            let listener = TcpListener::bind(addr).map_err(IoError::Read)?;
            let (stream, _) = listener.accept().map_err(IoError::Read)?;
            Box::new(BufReader::new(stream))
        }
    })
}

fn is_disconnect(e: &IoError) -> bool {
    matches!(e, IoError::Read(io) if matches!(
        io.kind(),
        io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted | io::ErrorKind::BrokenPipe | io::ErrorKind::UnexpectedEof
    ))
}

/// Evaluates records as they arrive, handing them to the monitor in
/// batches of `evalstep`. A reader thread parses the source and blocks when
/// a full batch is waiting.
pub fn run_online(
    config: &RunConfig,
    notifications: &mut dyn Write,
) -> Result<RunReport, Box<RunFailure>> {
    let source = config
        .source
        .clone()
        .ok_or_else(|| CliError::Usage("online mode needs --input or --listen".into()))?;
    if config.evalstep == 0 {
        return Err(CliError::Usage("--evalstep must be at least 1".into()).into());
    }
    let analyzed = prepare(config, true)?;
    let monitor = init_online_monitor(&analyzed).map_err(CliError::from)?;
    let inputs = monitor.input_types();
    let mut session = Session::new(monitor, config.out_dir.as_deref(), notifications)?;
    check_sinks(&session, &source)?;

    let (tx, rx) = mpsc::sync_channel::<Result<Event, IoError>>(config.evalstep);
    let (warn_tx, warn_rx) = mpsc::channel::<String>();
    let lenient = config.lenient;
    let reader = thread::spawn(move || -> Result<(), CliError> {
        let input = connect(&source)?;
        let mut events = match EventReader::new(input, &inputs, lenient) {
            Ok(r) => r,
            Err(e) => {
                let _ = tx.send(Err(e));
                return Ok(());
            }
        };
        for ev in events.by_ref() {
            let stop = ev.is_err();
            if tx.send(ev).is_err() || stop {
                break;
            }
        }
        for w in events.take_warnings() {
            let _ = warn_tx.send(w);
        }
        Ok(())
    });

    let mut failure = None;
    let mut batches = Batches::new(rx.into_iter(), config.evalstep);
    for batch in batches.by_ref() {
        let result = match batch {
            Ok(batch) => batch.into_iter().try_for_each(|ev| session.step(ev)),
            Err(e) if is_disconnect(&e) => {
                session.warn(format!("source disconnected: {e}"));
                break;
            }
            Err(e) => Err(e.into()),
        };
        if let Err(e) = result {
            failure = Some(e);
            break;
        }
    }
    // Dropping the receiver unblocks a reader still handing over records.
    drop(batches);
    if failure.is_none() {
        match reader.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => failure = Some(e),
            Err(_) => failure = Some(CliError::Usage("input reader panicked".into())),
        }
    }
    for w in warn_rx.try_iter() {
        session.warn(w);
    }
    finish_with(session, Mode::Online, config.evalstep, failure)
}
