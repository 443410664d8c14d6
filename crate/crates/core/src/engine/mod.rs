//! Incremental evaluation over a synchronous event sequence.
//!
//! Resolved values live in per-node ring buffers (the past array) whose
//! capacity is fixed by the memory plan. An evaluation that needs a value
//! not yet known is parked in the future index under the awaited
//! `(node, position)` key; storing that value wakes exactly the parked
//! evaluations, which restart from the root of their expression. Feedback
//! conditions are extra boolean nodes numbered after the streams.
//!
//! A position is finalized once every output and condition at it has a
//! value. Finalization happens strictly in position order and emits the
//! outputs in declaration order followed by the feedback events.

mod error;
mod value;

use std::collections::HashMap;
use std::mem::size_of;
use std::sync::Arc;

pub use error::{ArithmeticError, EvalError};
pub use value::Value;

use crate::analysis::ir::Expr;
use crate::analysis::{Analyzed, Observer, StreamId};
use crate::feedback::{evaluate_feedback, FeedbackEvent, FeedbackState, PositionView};
use crate::syntax::{BinaryOp, StreamType};

/// One synchronous tick: a value for every input, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub position: u64,
    pub values: Vec<Value>,
}

impl Event {
    pub fn new(position: u64, values: Vec<Value>) -> Event {
        Event { position, values }
    }
}

/// An output value at a finalized position.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub position: u64,
    pub stream: Arc<str>,
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub resolved: Vec<Resolved>,
    pub feedback: Vec<FeedbackEvent>,
}

impl StepOutput {
    fn append(&mut self, other: StepOutput) {
        self.resolved.extend(other.resolved);
        self.feedback.extend(other.feedback);
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InitError {
    #[error("specification is not well-formed: {0}")]
    NotWellFormed(String),
    #[error("online monitoring needs an efficiently monitorable specification: {0}")]
    NotEfficientlyMonitorable(String),
}

/// Result of evaluating an expression at a position.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Value(Value),
    /// The value of `stream` at `position` is not known yet.
    Suspended {
        stream: StreamId,
        position: u64,
    },
    Error(ArithmeticError),
}

const EMPTY: u64 = u64::MAX;

/// Value store of one node.
#[derive(Debug, Clone)]
enum Store {
    Ring(Vec<(u64, Value)>),
    /// Offline evaluation of specifications with unbounded lookahead.
    Unbounded(Vec<Option<Value>>),
}

impl Store {
    fn get(&self, pos: u64) -> Option<&Value> {
        match self {
            Store::Ring(slots) => {
                let (p, v) = &slots[(pos % slots.len() as u64) as usize];
                (*p == pos).then_some(v)
            }
            Store::Unbounded(values) => values.get(pos as usize).and_then(Option::as_ref),
        }
    }

    fn set(&mut self, pos: u64, value: Value) {
        match self {
            Store::Ring(slots) => {
                let n = slots.len() as u64;
                slots[(pos % n) as usize] = (pos, value);
            }
            Store::Unbounded(values) => {
                let i = pos as usize;
                if values.len() <= i {
                    values.resize(i + 1, None);
                }
                values[i] = Some(value);
            }
        }
    }

    fn size_bytes(&self) -> usize {
        match self {
            Store::Ring(slots) => slots.capacity() * size_of::<(u64, Value)>(),
            Store::Unbounded(values) => values.capacity() * size_of::<Option<Value>>(),
        }
    }

    fn payload_bytes(&self) -> usize {
        match self {
            Store::Ring(slots) => slots
                .iter()
                .filter(|(p, _)| *p != EMPTY)
                .map(|(_, v)| v.payload_bytes())
                .sum(),
            Store::Unbounded(values) => values.iter().flatten().map(Value::payload_bytes).sum(),
        }
    }
}

type Key = (usize, u64);

/// A parked evaluation in an intrusive waiter list.
#[derive(Debug, Clone, Copy)]
struct Waiter {
    task: Key,
    next: usize,
}

const NIL: usize = usize::MAX;

/// Pending evaluations keyed by the value they wait for. Waiters live in a
/// slab with a free list so that steady-state operation does not allocate.
#[derive(Debug, Clone)]
struct FutureIndex {
    heads: HashMap<Key, usize>,
    slab: Vec<Waiter>,
    free: usize,
    len: usize,
}

impl FutureIndex {
    fn with_capacity(n: usize) -> FutureIndex {
        FutureIndex {
            heads: HashMap::with_capacity(n),
            slab: Vec::with_capacity(n),
            free: NIL,
            len: 0,
        }
    }

    fn park(&mut self, key: Key, task: Key) {
        let next = self.heads.get(&key).copied().unwrap_or(NIL);
        let w = Waiter { task, next };
        let i = if self.free != NIL {
            let i = self.free;
            self.free = self.slab[i].next;
            self.slab[i] = w;
            i
        } else {
            self.slab.push(w);
            self.slab.len() - 1
        };
        self.heads.insert(key, i);
        self.len += 1;
    }

    /// Moves every task waiting on `key` to `out`.
    fn wake(&mut self, key: Key, out: &mut Vec<Key>) {
        let Some(mut i) = self.heads.remove(&key) else {
            return;
        };
        while i != NIL {
            let w = self.slab[i];
            out.push(w.task);
            self.slab[i].next = self.free;
            self.free = i;
            self.len -= 1;
            i = w.next;
        }
    }

    fn keys(&self) -> Vec<Key> {
        let mut keys: Vec<Key> = self.heads.keys().copied().collect();
        keys.sort_unstable_by_key(|&(node, pos)| (pos, node));
        keys
    }

    fn tasks(&self) -> Vec<Key> {
        let mut tasks = Vec::new();
        for &head in self.heads.values() {
            let mut i = head;
            while i != NIL {
                tasks.push(self.slab[i].task);
                i = self.slab[i].next;
            }
        }
        tasks.sort_unstable_by_key(|&(node, pos)| (pos, node));
        tasks
    }

    fn size_bytes(&self) -> usize {
        // keys, values and one control byte per bucket
        self.heads.capacity() * (size_of::<Key>() + size_of::<usize>() + 1)
            + self.slab.capacity() * size_of::<Waiter>()
    }
}

/// Compiled, immutable part of a monitor.
#[derive(Debug)]
struct Program {
    names: Vec<Arc<str>>,
    types: Vec<StreamType>,
    num_inputs: usize,
    num_streams: usize,
    /// Definition per node; `None` for inputs.
    definitions: Vec<Option<Expr>>,
    observers: Vec<Observer>,
    messages: Vec<Arc<str>>,
    locations: Vec<Option<Arc<str>>>,
    /// Outputs in evaluation order, then the observers.
    schedule: Vec<usize>,
    /// Pinned `(index, slot)` pairs per stream.
    pins: Vec<Vec<(u64, usize)>>,
    time: Option<StreamId>,
    max_latency: Option<u64>,
}

/// State of a running monitor.
#[derive(Debug)]
pub struct MonitorState {
    program: Arc<Program>,
    stores: Vec<Store>,
    pinned: Vec<Option<Value>>,
    future: FutureIndex,
    worklist: Vec<Key>,
    /// Next position expected from the input.
    current: u64,
    /// Next position to finalize.
    next_emit: u64,
    /// Trace length once the input has ended.
    ended: Option<u64>,
    failed: bool,
    feedback: FeedbackState,
    scratch: Vec<Value>,
    conditions: Vec<bool>,
}

/// Allocates a monitor for an analysed specification. Specifications
/// outside the efficiently monitorable fragment get unbounded stores and
/// are meant for offline use only.
pub fn init_monitor(analyzed: &Analyzed) -> Result<MonitorState, InitError> {
    let r = &analyzed.result;
    if !r.well_formed {
        return Err(InitError::NotWellFormed(
            r.witness.clone().unwrap_or_default(),
        ));
    }
    let checked = &analyzed.checked;
    let plan = &r.buffer_bounds;
    let num_streams = checked.streams.len();
    let num_nodes = num_streams + checked.observers.len();
    let names: Vec<Arc<str>> = checked
        .streams
        .iter()
        .map(|s| Arc::from(s.name.as_str()))
        .collect();
    let mut definitions = checked.definitions.clone();
    definitions.extend(checked.observers.iter().map(|o| Some(o.condition.clone())));
    let mut types: Vec<StreamType> = checked.streams.iter().map(|s| s.ty).collect();
    types.extend(checked.observers.iter().map(|_| StreamType::Bool));

    let mut pins = vec![Vec::new(); num_streams];
    for (slot, &(stream, index)) in checked.pinned.iter().enumerate() {
        pins[stream.0].push((index, slot));
    }
    let stores: Vec<Store> = (0..num_nodes)
        .map(|node| {
            let capacity = match plan.max_latency {
                None => None,
                Some(l) if node >= num_streams => Some(l as usize + 1),
                Some(_) => plan.streams[node].capacity,
            };
            match capacity {
                Some(c) => Store::Ring(vec![(EMPTY, Value::Bool(false)); c]),
                None => Store::Unbounded(Vec::new()),
            }
        })
        .collect();
    // at most latency + 1 positions of a node can be pending at once
    let pending: usize = match plan.max_latency {
        Some(l) => (checked.num_inputs..num_nodes).count() * (l as usize + 1),
        None => 0,
    };
    let mut schedule: Vec<usize> = analyzed.order.iter().map(|s| s.0).collect();
    schedule.extend(num_streams..num_nodes);
    let program = Program {
        time: checked.id("time"),
        names,
        types,
        num_inputs: checked.num_inputs,
        num_streams,
        definitions,
        messages: checked
            .observers
            .iter()
            .map(|o| Arc::from(o.message.as_str()))
            .collect(),
        locations: checked
            .observers
            .iter()
            .map(|o| o.location.as_deref().map(Arc::from))
            .collect(),
        observers: checked.observers.clone(),
        schedule,
        pins,
        max_latency: plan.max_latency,
    };
    Ok(MonitorState {
        stores,
        pinned: vec![None; checked.pinned.len()],
        future: FutureIndex::with_capacity(pending),
        worklist: Vec::with_capacity(pending + num_nodes),
        current: 0,
        next_emit: 0,
        ended: None,
        failed: false,
        feedback: FeedbackState::new(checked.observers.len()),
        scratch: Vec::with_capacity(num_streams),
        conditions: Vec::with_capacity(checked.observers.len()),
        program: Arc::new(program),
    })
}

/// Like [`init_monitor`] but refuses specifications that need unbounded
/// memory.
pub fn init_online_monitor(analyzed: &Analyzed) -> Result<MonitorState, InitError> {
    if !analyzed.result.efficiently_monitorable {
        return Err(InitError::NotEfficientlyMonitorable(
            analyzed.result.witness.clone().unwrap_or_default(),
        ));
    }
    init_monitor(analyzed)
}

enum Flow {
    Wait(Key),
    Fail(ArithmeticError),
}

impl From<ArithmeticError> for Flow {
    fn from(e: ArithmeticError) -> Flow {
        Flow::Fail(e)
    }
}

fn arith(op: BinaryOp, l: &Value, r: &Value) -> Result<Value, ArithmeticError> {
    use ArithmeticError::*;
    Ok(match (l, r) {
        (Value::Int(a), Value::Int(b)) => match op {
            BinaryOp::Add => Value::Int(a.checked_add(*b).ok_or(IntOverflow)?),
            BinaryOp::Sub => Value::Int(a.checked_sub(*b).ok_or(IntOverflow)?),
            BinaryOp::Mul => Value::Int(a.checked_mul(*b).ok_or(IntOverflow)?),
            BinaryOp::Div if *b == 0 => return Err(DivisionByZero),
            BinaryOp::Div => Value::Int(a.checked_div(*b).ok_or(IntOverflow)?),
            BinaryOp::Lt => Value::Bool(a < b),
            BinaryOp::Le => Value::Bool(a <= b),
            BinaryOp::Gt => Value::Bool(a > b),
            BinaryOp::Ge => Value::Bool(a >= b),
            BinaryOp::Eq => Value::Bool(a == b),
            BinaryOp::Ne => Value::Bool(a != b),
            _ => unreachable!("ill-typed int operation {op:?}"),
        },
        (Value::Double(a), Value::Double(b)) => match op {
            BinaryOp::Add => Value::Double(a + b),
            BinaryOp::Sub => Value::Double(a - b),
            BinaryOp::Mul => Value::Double(a * b),
            BinaryOp::Div => Value::Double(a / b),
            BinaryOp::Pow => Value::Double(a.powf(*b)),
            BinaryOp::Lt => Value::Bool(a < b),
            BinaryOp::Le => Value::Bool(a <= b),
            BinaryOp::Gt => Value::Bool(a > b),
            BinaryOp::Ge => Value::Bool(a >= b),
            BinaryOp::Eq => Value::Bool(a == b),
            BinaryOp::Ne => Value::Bool(a != b),
            _ => unreachable!("ill-typed double operation {op:?}"),
        },
        (l, r) => match op {
            BinaryOp::Eq => Value::Bool(l == r),
            BinaryOp::Ne => Value::Bool(l != r),
            _ => unreachable!("ill-typed operation {op:?}"),
        },
    })
}

impl MonitorState {
    pub fn num_inputs(&self) -> usize {
        self.program.num_inputs
    }

    /// Names of all streams, inputs first.
    pub fn stream_names(&self) -> &[Arc<str>] {
        &self.program.names
    }

    pub fn input_types(&self) -> Vec<(String, StreamType)> {
        (0..self.program.num_inputs)
            .map(|i| (self.program.names[i].to_string(), self.program.types[i]))
            .collect()
    }

    pub fn observers(&self) -> &[Observer] {
        &self.program.observers
    }

    /// Position the next event must carry.
    pub fn current_position(&self) -> u64 {
        self.current
    }

    pub fn fire_counts(&self) -> &[u64] {
        self.feedback.fire_counts()
    }

    pub fn is_bounded(&self) -> bool {
        self.program.max_latency.is_some()
    }

    /// Builds an event from `(name, value)` pairs covering every input.
    pub fn event_from_pairs<'a>(
        &self,
        position: u64,
        pairs: impl IntoIterator<Item = (&'a str, Value)>,
    ) -> Result<Event, EvalError> {
        let mut values: Vec<Option<Value>> = vec![None; self.program.num_inputs];
        for (name, v) in pairs {
            if let Some(i) = self.program.names[..self.program.num_inputs]
                .iter()
                .position(|n| &**n == name)
            {
                values[i] = Some(v);
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| EvalError::MissingInput(self.program.names[i].to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Event::new(position, values))
    }

    /// Evaluates an expression at `position` against the current state
    /// without side effects.
    pub fn eval_expression(&self, expr: &Expr, position: u64) -> Evaluation {
        match self.eval(expr, position) {
            Ok(v) => Evaluation::Value(v),
            Err(Flow::Wait((node, pos))) => Evaluation::Suspended {
                stream: StreamId(node),
                position: pos,
            },
            Err(Flow::Fail(e)) => Evaluation::Error(e),
        }
    }

    fn lookup(&self, node: usize, target: i128) -> Option<Result<Value, Flow>> {
        if target < 0 {
            return None;
        }
        let target = target as u64;
        if let Some(v) = self.stores[node].get(target) {
            return Some(Ok(v.clone()));
        }
        if self.ended.is_some_and(|n| target >= n) {
            return None;
        }
        Some(Err(Flow::Wait((node, target))))
    }

    fn eval(&self, expr: &Expr, pos: u64) -> Result<Value, Flow> {
        Ok(match expr {
            Expr::Const(v) => v.clone(),
            Expr::Position => {
                Value::Int(i64::try_from(pos).map_err(|_| ArithmeticError::IntOverflow)?)
            }
            Expr::Present(s) => match self.stores[s.0].get(pos) {
                Some(v) => v.clone(),
                None => return Err(Flow::Wait((s.0, pos))),
            },
            Expr::Offset {
                stream,
                offset,
                default,
            } => match self.lookup(stream.0, pos as i128 + *offset as i128) {
                Some(r) => r?,
                None => self.eval(default, pos)?,
            },
            Expr::Absolute {
                stream,
                index,
                slot,
                default,
            } => {
                if let Some(v) = &self.pinned[*slot] {
                    v.clone()
                } else {
                    match self.lookup(stream.0, *index as i128) {
                        Some(r) => r?,
                        None => self.eval(default, pos)?,
                    }
                }
            }
            Expr::Call(f, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, pos)?);
                }
                f.apply(&values)?
            }
            Expr::Not(e) => Value::Bool(!self.eval(e, pos)?.as_bool().expect("bool operand")),
            Expr::Neg(e) => match self.eval(e, pos)? {
                Value::Int(v) => Value::Int(v.checked_neg().ok_or(ArithmeticError::IntOverflow)?),
                Value::Double(v) => Value::Double(-v),
                other => unreachable!("negation of {other:?}"),
            },
            Expr::Binary(BinaryOp::And, l, r) => Value::Bool(
                self.eval(l, pos)?.as_bool() == Some(true)
                    && self.eval(r, pos)?.as_bool() == Some(true),
            ),
            Expr::Binary(BinaryOp::Or, l, r) => Value::Bool(
                self.eval(l, pos)?.as_bool() == Some(true)
                    || self.eval(r, pos)?.as_bool() == Some(true),
            ),
            Expr::Binary(op, l, r) => {
                let l = self.eval(l, pos)?;
                let r = self.eval(r, pos)?;
                arith(*op, &l, &r)?
            }
            Expr::If(c, t, e) => {
                if self.eval(c, pos)?.as_bool() == Some(true) {
                    self.eval(t, pos)?
                } else {
                    self.eval(e, pos)?
                }
            }
            Expr::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let s = self.eval(scrutinee, pos)?;
                for (key, body) in cases {
                    match arith(BinaryOp::Le, key, &s)? {
                        // cases ascend: once a key exceeds the scrutinee no later one matches
                        Value::Bool(false) => break,
                        _ if key == &s => return self.eval(body, pos),
                        _ => {}
                    }
                }
                self.eval(default, pos)?
            }
        })
    }

    fn circular(&self, (node, pos): Key) -> EvalError {
        let stream = if node < self.program.num_streams {
            self.program.names[node].to_string()
        } else {
            let k = node - self.program.num_streams;
            format!("{} condition #{k}", self.program.observers[k].kind)
        };
        EvalError::Circular {
            stream,
            position: pos,
        }
    }

    fn store(&mut self, node: usize, pos: u64, value: Value) {
        if node < self.program.num_streams {
            for &(index, slot) in &self.program.pins[node] {
                if index == pos {
                    self.pinned[slot] = Some(value.clone());
                }
            }
        }
        self.stores[node].set(pos, value);
        self.future.wake((node, pos), &mut self.worklist);
    }

    /// Evaluates a task and everything it wakes up.
    fn run(&mut self, task: Key) -> Result<(), EvalError> {
        self.worklist.push(task);
        self.drain()
    }

    fn drain(&mut self) -> Result<(), EvalError> {
        while let Some((node, pos)) = self.worklist.pop() {
            if self.stores[node].get(pos).is_some() {
                continue;
            }
            let program = Arc::clone(&self.program);
            let def = program.definitions[node]
                .as_ref()
                .expect("only defined nodes are scheduled");
            match self.eval(def, pos) {
                Ok(v) => self.store(node, pos, v),
                Err(Flow::Wait(key)) if key == (node, pos) => return Err(self.circular(key)),
                Err(Flow::Wait(key)) => self.future.park(key, (node, pos)),
                Err(Flow::Fail(error)) => {
                    let stream = if node < program.num_streams {
                        program.names[node].to_string()
                    } else {
                        format!(
                            "{} condition",
                            program.observers[node - program.num_streams].kind
                        )
                    };
                    return Err(EvalError::Runtime {
                        stream,
                        position: pos,
                        error,
                    });
                }
            }
        }
        Ok(())
    }

    fn position_complete(&self, pos: u64) -> bool {
        (self.program.num_inputs..self.stores.len()).all(|n| self.stores[n].get(pos).is_some())
    }

    fn emit(&mut self, pos: u64, out: &mut StepOutput) {
        let program = Arc::clone(&self.program);
        self.scratch.clear();
        for s in 0..program.num_streams {
            self.scratch
                .push(self.stores[s].get(pos).expect("finalized").clone());
        }
        for s in program.num_inputs..program.num_streams {
            out.resolved.push(Resolved {
                position: pos,
                stream: program.names[s].clone(),
                value: self.scratch[s].clone(),
            });
        }
        self.conditions.clear();
        for k in 0..program.observers.len() {
            let v = self.stores[program.num_streams + k]
                .get(pos)
                .expect("finalized");
            self.conditions.push(v.as_bool() == Some(true));
        }
        let view = PositionView {
            position: pos,
            names: &program.names,
            values: &self.scratch,
            conditions: &self.conditions,
            time: program.time,
            messages: &program.messages,
            locations: &program.locations,
        };
        evaluate_feedback(
            &program.observers,
            &view,
            &mut self.feedback,
            &mut out.feedback,
        );
    }

    fn emit_ready(&mut self, out: &mut StepOutput) {
        let limit = self.ended.unwrap_or(self.current);
        while self.next_emit < limit && self.position_complete(self.next_emit) {
            let pos = self.next_emit;
            self.emit(pos, out);
            self.next_emit += 1;
        }
    }

    fn guard(&mut self, result: Result<(), EvalError>) -> Result<(), EvalError> {
        if result.is_err() {
            self.failed = true;
        }
        result
    }

    fn check_event(&self, event: &Event) -> Result<(), EvalError> {
        if self.ended.is_some() || self.failed {
            return Err(EvalError::Finalized);
        }
        if event.position != self.current {
            return Err(EvalError::PositionMismatch {
                expected: self.current,
                found: event.position,
            });
        }
        if event.values.len() != self.program.num_inputs {
            return Err(EvalError::EventArity {
                position: event.position,
                expected: self.program.num_inputs,
                found: event.values.len(),
            });
        }
        for (i, v) in event.values.iter().enumerate() {
            if v.ty() != self.program.types[i] {
                return Err(EvalError::InputType {
                    name: self.program.names[i].to_string(),
                    expected: self.program.types[i],
                    found: v.ty(),
                });
            }
        }
        Ok(())
    }

    /// Consumes the event for the current position.
    pub fn step(&mut self, event: Event) -> Result<StepOutput, EvalError> {
        self.check_event(&event)?;
        let mut out = StepOutput::default();
        let result = self.step_inner(event, &mut out);
        self.guard(result)?;
        Ok(out)
    }

    fn step_inner(&mut self, event: Event, out: &mut StepOutput) -> Result<(), EvalError> {
        let pos = event.position;
        for (i, v) in event.values.into_iter().enumerate() {
            self.store(i, pos, v);
        }
        self.current = pos + 1;
        self.drain()?;
        let program = Arc::clone(&self.program);
        for &node in &program.schedule {
            self.run((node, pos))?;
        }
        self.emit_ready(out);
        if let Some(l) = program.max_latency {
            // every position resolves within L steps unless it waits on itself
            if self.next_emit.saturating_add(l) < self.current {
                let stuck = (program.num_inputs..self.stores.len())
                    .find(|&n| self.stores[n].get(self.next_emit).is_none())
                    .expect("an unfinalized position has an unresolved node");
                return Err(self.circular((stuck, self.next_emit)));
            }
        }
        Ok(())
    }

    /// Declares the end of the trace: out-of-range accesses take their
    /// defaults and every remaining position is finalized.
    pub fn finalize(&mut self) -> Result<StepOutput, EvalError> {
        if self.ended.is_some() || self.failed {
            return Err(EvalError::Finalized);
        }
        self.ended = Some(self.current);
        let mut out = StepOutput::default();
        let result = self.finalize_inner(&mut out);
        self.guard(result)?;
        Ok(out)
    }

    fn finalize_inner(&mut self, out: &mut StepOutput) -> Result<(), EvalError> {
        // Woken evaluations now see accesses past the end as out of range;
        // those still waiting on a pending value park again.
        for key in self.future.keys() {
            self.future.wake(key, &mut self.worklist);
        }
        self.drain()?;
        if let Some(&task) = self.future.tasks().first() {
            return Err(self.circular(task));
        }
        self.emit_ready(out);
        debug_assert_eq!(self.next_emit, self.current);
        Ok(())
    }

    /// Convenience: steps through all events and finalizes.
    pub fn run_trace(
        &mut self,
        events: impl IntoIterator<Item = Event>,
    ) -> Result<StepOutput, EvalError> {
        let mut out = StepOutput::default();
        for ev in events {
            out.append(self.step(ev)?);
        }
        out.append(self.finalize()?);
        Ok(out)
    }

    /// Bytes held by the monitor's own buffers, excluding string payloads.
    pub fn state_size_bytes(&self) -> usize {
        self.stores.iter().map(Store::size_bytes).sum::<usize>()
            + self.stores.capacity() * size_of::<Store>()
            + self.pinned.capacity() * size_of::<Option<Value>>()
            + self.future.size_bytes()
            + self.worklist.capacity() * size_of::<Key>()
            + self.feedback.size_bytes()
            + self.scratch.capacity() * size_of::<Value>()
            + self.conditions.capacity()
    }

    /// Heap bytes of string values currently held.
    pub fn value_payload_bytes(&self) -> usize {
        self.stores.iter().map(Store::payload_bytes).sum::<usize>()
            + self
                .pinned
                .iter()
                .flatten()
                .map(Value::payload_bytes)
                .sum::<usize>()
    }

    /// Number of parked evaluations.
    pub fn pending(&self) -> usize {
        self.future.len
    }
}
