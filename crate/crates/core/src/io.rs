//! Event logs as comma-separated text.
//!
//! The first non-comment line names the columns. Every following line is
//! one event; positions are assigned in line order. Cells may be surrounded
//! by whitespace. Strings are written quoted with the same backslash
//! escapes as string literals in specifications; booleans are accepted as
//! `0`, `1`, `true` or `false`. Lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{Event, Value};
use crate::syntax::StreamType;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open `{}`: {source}", path.display())]
    Open { path: PathBuf, source: io::Error },
    #[error("read failed: {0}")]
    Read(#[from] io::Error),
    #[error("log has no header line")]
    MissingHeader,
    #[error("log header lacks input column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("column `{0}` appears twice in the header")]
    DuplicateColumn(String),
    #[error("line {line}, column `{column}`: expected {expected}, found `{text}`")]
    Cell {
        line: usize,
        column: String,
        expected: StreamType,
        text: String,
    },
    #[error("line {line}: expected {expected} cells, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl IoError {
    /// Errors about a single record (as opposed to the source or header).
    pub fn is_record_error(&self) -> bool {
        matches!(
            self,
            IoError::Cell { .. } | IoError::Arity { .. } | IoError::Malformed { .. }
        )
    }
}

/// Header line for the given column names.
pub fn format_header(names: &[&str]) -> String {
    names.join(",")
}

/// Appends one record (without line terminator) to `out`.
pub fn format_record(out: &mut String, values: &[Value]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell<'a> {
    Bare(&'a str),
    Quoted(String),
}

fn split_cells(line: &str) -> Result<Vec<Cell<'_>>, String> {
    let mut cells = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    loop {
        while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'"' {
            let mut s = String::new();
            let mut chars = line[i + 1..].char_indices();
            let end = loop {
                match chars.next() {
                    None => return Err("unterminated string".into()),
                    Some((k, '"')) => break i + 1 + k + 1,
                    Some((_, '\\')) => match chars.next() {
                        Some((_, 'n')) => s.push('\n'),
                        Some((_, 't')) => s.push('\t'),
                        Some((_, 'r')) => s.push('\r'),
                        Some((_, '"')) => s.push('"'),
                        Some((_, '\\')) => s.push('\\'),
                        Some((_, c)) => return Err(format!("unknown escape `\\{c}`")),
                        None => return Err("unterminated string".into()),
                    },
                    Some((_, c)) => s.push(c),
                }
            };
            i = end;
            while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
                i += 1;
            }
            cells.push(Cell::Quoted(s));
            match bytes.get(i) {
                None => break,
                Some(b',') => i += 1,
                Some(_) => return Err("text after closing quote".into()),
            }
        } else {
            let end = line[i..].find(',').map_or(line.len(), |k| i + k);
            cells.push(Cell::Bare(line[i..end].trim()));
            if end == line.len() {
                break;
            }
            i = end + 1;
        }
    }
    Ok(cells)
}

fn parse_cell(cell: &Cell<'_>, ty: StreamType) -> Option<Value> {
    match (cell, ty) {
        (Cell::Quoted(s), StreamType::String) => Some(Value::Str(Arc::from(s.as_str()))),
        (Cell::Bare(s), StreamType::String) => Some(Value::Str(Arc::from(*s))),
        (Cell::Quoted(_), _) => None,
        (Cell::Bare(s), StreamType::Bool) => match *s {
            "1" | "true" => Some(Value::Bool(true)),
            "0" | "false" => Some(Value::Bool(false)),
            _ => None,
        },
        (Cell::Bare(s), StreamType::Int) => s.parse().ok().map(Value::Int),
        (Cell::Bare(s), StreamType::Double) => s.parse().ok().map(Value::Double),
    }
}

fn cell_text(cell: &Cell<'_>) -> String {
    match cell {
        Cell::Bare(s) => s.to_string(),
        Cell::Quoted(s) => crate::syntax::quote(s),
    }
}

/// Reads events for a fixed list of typed inputs from a log.
pub struct EventReader<R> {
    reader: R,
    inputs: Vec<(String, StreamType)>,
    /// Column index of each input.
    columns: Vec<usize>,
    width: usize,
    lenient: bool,
    previous: Option<Vec<Value>>,
    line_no: usize,
    position: u64,
    buf: String,
    warnings: Vec<String>,
    done: bool,
}

impl<R: BufRead> EventReader<R> {
    /// Reads the header and maps every input to its column. In lenient
    /// mode malformed records repeat the previous record's values instead
    /// of ending the read.
    pub fn new(reader: R, inputs: &[(String, StreamType)], lenient: bool) -> Result<Self, IoError> {
        let mut this = EventReader {
            reader,
            inputs: inputs.to_vec(),
            columns: Vec::new(),
            width: 0,
            lenient,
            previous: None,
            line_no: 0,
            position: 0,
            buf: String::new(),
            warnings: Vec::new(),
            done: false,
        };
        if !this.next_line()? {
            return Err(IoError::MissingHeader);
        }
        let header: Vec<String> = this.buf.split(',').map(|h| h.trim().to_string()).collect();
        for (i, h) in header.iter().enumerate() {
            if header[..i].contains(h) {
                return Err(IoError::DuplicateColumn(h.clone()));
            }
        }
        let missing: Vec<String> = inputs
            .iter()
            .filter(|(name, _)| !header.contains(name))
            .map(|(name, _)| name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(IoError::MissingColumns(missing));
        }
        this.columns = inputs
            .iter()
            .map(|(name, _)| header.iter().position(|h| h == name).unwrap())
            .collect();
        let extra: Vec<&str> = header
            .iter()
            .filter(|h| !inputs.iter().any(|(n, _)| n == *h))
            .map(String::as_str)
            .collect();
        if !extra.is_empty() {
            this.warnings.push(format!(
                "ignoring column(s) not declared as inputs: {}",
                extra.join(", ")
            ));
        }
        this.width = header.len();
        Ok(this)
    }

    /// Loads the next content line into `buf`; false at end of input.
    fn next_line(&mut self) -> Result<bool, IoError> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(false);
            }
            self.line_no += 1;
            let trimmed = self.buf.trim_end_matches(['\n', '\r']);
            self.buf.truncate(trimmed.len());
            let t = self.buf.trim_start();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(true);
        }
    }

    fn parse_record(&self) -> Result<Vec<Value>, IoError> {
        let line = self.line_no;
        let cells =
            split_cells(&self.buf).map_err(|message| IoError::Malformed { line, message })?;
        if cells.len() != self.width {
            return Err(IoError::Arity {
                line,
                expected: self.width,
                found: cells.len(),
            });
        }
        self.columns
            .iter()
            .zip(&self.inputs)
            .map(|(&c, (name, ty))| {
                parse_cell(&cells[c], *ty).ok_or_else(|| IoError::Cell {
                    line,
                    column: name.clone(),
                    expected: *ty,
                    text: cell_text(&cells[c]),
                })
            })
            .collect()
    }

    /// Diagnostics collected so far (ignored columns, substituted records).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }

    pub fn inputs(&self) -> &[(String, StreamType)] {
        &self.inputs
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<Event, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_line() {
            Ok(true) => {}
            Ok(false) => {
                self.done = true;
                return None;
            }
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        }
        let values = match self.parse_record() {
            Ok(v) => v,
            Err(e) if self.lenient && e.is_record_error() => {
                self.warnings
                    .push(format!("{e}; repeating the previous record"));
                self.previous
                    .clone()
                    .unwrap_or_else(|| self.inputs.iter().map(|(_, ty)| Value::zero(*ty)).collect())
            }
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        };
        if self.lenient {
            self.previous = Some(values.clone());
        }
        let event = Event::new(self.position, values);
        self.position += 1;
        Some(Ok(event))
    }
}

/// Opens a log file and reads its header.
pub fn read_log(
    path: &Path,
    inputs: &[(String, StreamType)],
    lenient: bool,
) -> Result<EventReader<BufReader<File>>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    EventReader::new(BufReader::new(file), inputs, lenient)
}

/// Groups events into batches of `evalstep`, the last one possibly shorter.
/// An error ends the sequence after the events read before it.
pub struct Batches<I> {
    inner: I,
    evalstep: usize,
    failed: Option<IoError>,
}

impl<I: Iterator<Item = Result<Event, IoError>>> Batches<I> {
    pub fn new(inner: I, evalstep: usize) -> Self {
        assert!(evalstep >= 1, "evalstep must be positive");
        Batches {
            inner,
            evalstep,
            failed: None,
        }
    }

    pub fn inner(&self) -> &I {
        &self.inner
    }
}

impl<I: Iterator<Item = Result<Event, IoError>>> Iterator for Batches<I> {
    type Item = Result<Vec<Event>, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.failed.take() {
            return Some(Err(e));
        }
        let mut batch = Vec::with_capacity(self.evalstep);
        while batch.len() < self.evalstep {
            match self.inner.next() {
                Some(Ok(ev)) => batch.push(ev),
                Some(Err(e)) if batch.is_empty() => return Some(Err(e)),
                Some(Err(e)) => {
                    self.failed = Some(e);
                    break;
                }
                None => break,
            }
        }
        (!batch.is_empty()).then_some(Ok(batch))
    }
}

/// Reads a line-delimited record stream (header first) in batches.
pub fn read_stream<R: BufRead>(
    source: R,
    inputs: &[(String, StreamType)],
    evalstep: usize,
    lenient: bool,
) -> Result<Batches<EventReader<R>>, IoError> {
    Ok(Batches::new(
        EventReader::new(source, inputs, lenient)?,
        evalstep,
    ))
}

/// Writes a header and rows in the format read by [`read_log`].
pub fn write_log_to<W: Write>(mut out: W, header: &[&str], rows: &[Vec<Value>]) -> io::Result<()> {
    writeln!(out, "{}", format_header(header))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        format_record(&mut line, row);
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn write_log(path: &Path, header: &[&str], rows: &[Vec<Value>]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(write_log_to(BufWriter::new(file), header, rows)?)
}
