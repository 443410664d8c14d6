//! Online feedback (triggers, snapshots) and offline feedback (tag and
//! filter sinks).
//!
//! Feedback is evaluated once per finalized position, in position order, so
//! the latching state of `trigger_once` and the previous value needed by
//! `trigger_change` are plain per-declaration fields.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{Observer, StreamId};
use crate::engine::Value;
use crate::io::{format_header, format_record};
use crate::syntax::{quote, FeedbackKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    None,
    /// Every stream's value, inputs first, both in declaration order.
    Snapshot(Vec<(Arc<str>, Value)>),
    Tag {
        location: Arc<str>,
        row: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackEvent {
    /// Index of the feedback declaration.
    pub declaration: usize,
    pub kind: FeedbackKind,
    pub position: u64,
    /// Value of the stream named `time` at this position, if there is one.
    pub timestamp: Option<Value>,
    pub message: Arc<str>,
    pub payload: Payload,
}

impl FeedbackEvent {
    /// Whether this event is a console notification rather than a log row.
    pub fn is_notification(&self) -> bool {
        !matches!(self.payload, Payload::Tag { .. })
    }
}

/// `position=<j> time=<t> kind=<kind> msg="<message>"` followed by the
/// snapshot's `name=value` pairs. `time=` is left out when the
/// specification has no `time` stream.
impl fmt::Display for FeedbackEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "position={}", self.position)?;
        if let Some(t) = &self.timestamp {
            write!(f, " time={t}")?;
        }
        write!(f, " kind={} msg={}", self.kind, quote(&self.message))?;
        match &self.payload {
            Payload::None => {}
            Payload::Snapshot(values) => {
                for (name, value) in values {
                    write!(f, " {name}={value}")?;
                }
            }
            Payload::Tag { location, .. } => write!(f, " at={}", quote(location))?,
        }
        Ok(())
    }
}

/// Firing state of each declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackState {
    fired: Vec<bool>,
    previous: Vec<Option<bool>>,
    counts: Vec<u64>,
}

impl FeedbackState {
    pub fn new(declarations: usize) -> FeedbackState {
        FeedbackState {
            fired: vec![false; declarations],
            previous: vec![None; declarations],
            counts: vec![0; declarations],
        }
    }

    /// Number of events emitted so far per declaration.
    pub fn fire_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn size_bytes(&self) -> usize {
        self.fired.capacity()
            + self.previous.capacity() * std::mem::size_of::<Option<bool>>()
            + self.counts.capacity() * std::mem::size_of::<u64>()
    }
}

/// A finalized position as seen by the feedback declarations.
pub struct PositionView<'a> {
    pub position: u64,
    pub names: &'a [Arc<str>],
    /// One value per stream.
    pub values: &'a [Value],
    /// One value per feedback declaration.
    pub conditions: &'a [bool],
    pub time: Option<StreamId>,
    /// Pre-shared messages and locations, one per declaration.
    pub messages: &'a [Arc<str>],
    pub locations: &'a [Option<Arc<str>>],
}

/// Decides which declarations fire at a finalized position and builds
/// their events.
pub fn evaluate_feedback(
    decls: &[Observer],
    view: &PositionView<'_>,
    state: &mut FeedbackState,
    out: &mut Vec<FeedbackEvent>,
) {
    for (k, decl) in decls.iter().enumerate() {
        let holds = view.conditions[k];
        let fires = match decl.kind {
            FeedbackKind::Trigger | FeedbackKind::Snapshot => holds,
            FeedbackKind::TriggerOnce => holds && !state.fired[k],
            // nothing to compare against at the first position
            FeedbackKind::TriggerChange => state.previous[k].is_some_and(|p| p != holds),
            FeedbackKind::Tag | FeedbackKind::Filter => holds,
        };
        state.previous[k] = Some(holds);
        if !fires {
            continue;
        }
        state.fired[k] = true;
        state.counts[k] += 1;
        let payload = match decl.kind {
            FeedbackKind::Snapshot => Payload::Snapshot(
                view.names
                    .iter()
                    .cloned()
                    .zip(view.values.iter().cloned())
                    .collect(),
            ),
            FeedbackKind::Tag | FeedbackKind::Filter => Payload::Tag {
                location: view.locations[k].clone().unwrap_or_else(|| Arc::from("")),
                row: decl
                    .bindings
                    .iter()
                    .map(|(source, _)| view.values[source.0].clone())
                    .collect(),
            },
            _ => Payload::None,
        };
        out.push(FeedbackEvent {
            declaration: k,
            kind: decl.kind,
            position: view.position,
            timestamp: view.time.map(|t| view.values[t.0].clone()),
            message: view.messages[k].clone(),
            payload,
        });
    }
}

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("cannot write `{}`: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("declarations {first} and {second} both write to `{}`", path.display())]
    Conflict {
        path: PathBuf,
        first: usize,
        second: usize,
    },
}

/// One derived log file.
pub struct TagSink {
    pub path: PathBuf,
    pub columns: Vec<String>,
    writer: BufWriter<File>,
    rows: u64,
    line: String,
}

impl TagSink {
    /// Creates (truncating) the file and writes its header.
    pub fn create(path: PathBuf, columns: Vec<String>) -> Result<TagSink, SinkError> {
        let io_err = |source| SinkError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
        let file = File::create(&path).map_err(io_err)?;
        let mut writer = BufWriter::new(file);
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        writeln!(writer, "{}", format_header(&names)).map_err(io_err)?;
        Ok(TagSink {
            path,
            columns,
            writer,
            rows: 0,
            line: String::new(),
        })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }
}

/// Appends one row; rows arrive in position order.
pub fn append_tag_row(sink: &mut TagSink, row: &[Value]) -> Result<(), SinkError> {
    debug_assert_eq!(row.len(), sink.columns.len());
    sink.line.clear();
    format_record(&mut sink.line, row);
    sink.line.push('\n');
    sink.writer
        .write_all(sink.line.as_bytes())
        .map_err(|source| SinkError::Io {
            path: sink.path.clone(),
            source,
        })?;
    sink.rows += 1;
    Ok(())
}

/// The sinks of every tag and filter declaration of a monitor.
pub struct TagSinks {
    sinks: Vec<TagSink>,
    by_declaration: HashMap<usize, usize>,
}

impl TagSinks {
    /// Opens a sink per tag declaration. Relative locations are resolved
    /// against `base` (the output directory) when given.
    pub fn open(decls: &[Observer], base: Option<&Path>) -> Result<TagSinks, SinkError> {
        let mut sinks: Vec<TagSink> = Vec::new();
        let mut owners: Vec<usize> = Vec::new();
        let mut by_declaration = HashMap::new();
        for (k, decl) in decls.iter().enumerate() {
            if !decl.kind.is_offline() {
                continue;
            }
            let location = decl.location.as_deref().unwrap_or_default();
            let path = match base {
                Some(base) if Path::new(location).is_relative() => base.join(location),
                _ => PathBuf::from(location),
            };
            if let Some(i) = sinks.iter().position(|s| s.path == path) {
                return Err(SinkError::Conflict {
                    path,
                    first: owners[i],
                    second: k,
                });
            }
            let columns = decl.bindings.iter().map(|(_, c)| c.clone()).collect();
            by_declaration.insert(k, sinks.len());
            sinks.push(TagSink::create(path, columns)?);
            owners.push(k);
        }
        Ok(TagSinks {
            sinks,
            by_declaration,
        })
    }

    /// Writes the rows carried by tag events, ignoring other events.
    pub fn record(&mut self, events: &[FeedbackEvent]) -> Result<(), SinkError> {
        for ev in events {
            if let Payload::Tag { row, .. } = &ev.payload {
                if let Some(&i) = self.by_declaration.get(&ev.declaration) {
                    append_tag_row(&mut self.sinks[i], row)?;
                }
            }
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), SinkError> {
        for s in &mut self.sinks {
            s.writer.flush().map_err(|source| SinkError::Io {
                path: s.path.clone(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn sinks(&self) -> &[TagSink] {
        &self.sinks
    }
}
