//! Shared helpers for the integration tests: synthetic flight traces, a
//! random specification generator and oracles that share no code with the
//! analysis or the engine.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use lola_core::analysis::{analyze, Analyzed};
use lola_core::engine::{Event, Value};
use lola_core::io::write_log;
use lola_core::syntax::{merge_specifications, parse_specification, StreamType};

pub const TICK: f64 = 0.02;

pub fn analyzed(sources: &[&str]) -> Analyzed {
    let specs: Vec<_> = sources
        .iter()
        .map(|s| parse_specification(s).expect("parses"))
        .collect();
    let merged = merge_specifications(specs).expect("merges");
    analyze(&merged).expect("type checks")
}

/// Mission plan cycled by the synthetic traces: (state, ticks).
const PLAN: [(i64, u64); 12] = [
    (2, 300),
    (3, 150),
    (4, 250),
    (5, 400),
    (6, 200),
    (7, 900),
    (8, 350),
    (7, 600),
    (9, 300),
    (10, 700),
    (11, 100),
    (12, 250),
];

fn plan_state(j: u64) -> i64 {
    let period: u64 = PLAN.iter().map(|(_, d)| d).sum();
    let mut k = j % period;
    for (state, ticks) in PLAN {
        if k < ticks {
            return state;
        }
        k -= ticks;
    }
    unreachable!()
}

pub fn time_parts(j: u64) -> (f64, f64) {
    ((j / 50) as f64, ((j % 50) * 20_000) as f64)
}

/// A 50 Hz flight: smooth ground motion near (52.52 N, 13.405 E), GPS
/// consistent with the velocity inputs apart from a one-tick glitch every
/// 180 s, bursts of velocity every 20 s and a repeating mission plan. Any input name not listed gets a deterministic
/// filler value of its type.
pub fn synth_value(name: &str, ty: StreamType, j: u64) -> Value {
    let t = j as f64 * TICK;
    let burst = (j % 1000) < 50 && (j / 10).is_multiple_of(2);
    let d = match name {
        "time_s" => time_parts(j).0,
        "time_micros" => time_parts(j).1,
        // northward speed 5 + 2 sin(t/10) integrates to this displacement
        "lat" => {
            let glitch = if j % 9_000 == 4_500 { 0.0005 } else { 0.0 };
            52.52 + (5.0 * t - 20.0 * (t / 10.0).cos() + 20.0) / 111_195.0 + glitch
        }
        "lon" => 13.405,
        "ug" => 5.0 + 2.0 * (t / 10.0).sin(),
        "vg" | "wg" => 0.0,
        "vel_x" => 3.0 + 0.3 * (t / 7.0).sin() + if burst { 4.0 } else { 0.0 },
        "vel_y" => 0.2 * (t / 3.0).cos(),
        "vel_z" => 0.1,
        "vel_r_x" => 3.0,
        "vel_r_y" => 0.0,
        "vel_r_z" => 0.1,
        "fuel" => 100.0 - 0.001 * t,
        "power" => 50.0 + 5.0 * (t / 11.0).sin(),
        "stateID_SC" => return Value::Int(plan_state(j)),
        "OnGround" => return Value::Int(matches!(plan_state(j), 2 | 3 | 4 | 11 | 12) as i64),
        _ => return filler(ty, j),
    };
    match ty {
        StreamType::Double => Value::Double(d),
        StreamType::Int => Value::Int(d as i64),
        other => filler(other, j),
    }
}

fn filler(ty: StreamType, j: u64) -> Value {
    match ty {
        StreamType::Bool => Value::Bool(j.is_multiple_of(3)),
        StreamType::Int => Value::Int((j % 7) as i64),
        StreamType::Double => Value::Double((j as f64).sin()),
        StreamType::String => Value::Str(Arc::from(format!("v{}", j % 5))),
    }
}

pub fn synth_event(inputs: &[(String, StreamType)], j: u64) -> Event {
    Event::new(
        j,
        inputs.iter().map(|(n, t)| synth_value(n, *t, j)).collect(),
    )
}

pub fn synth_trace(inputs: &[(String, StreamType)], n: u64) -> Vec<Event> {
    (0..n).map(|j| synth_event(inputs, j)).collect()
}

pub fn write_trace(path: &Path, inputs: &[(String, StreamType)], events: &[Event]) {
    let header: Vec<&str> = inputs.iter().map(|(n, _)| n.as_str()).collect();
    let rows: Vec<Vec<Value>> = events.iter().map(|e| e.values.clone()).collect();
    write_log(path, &header, &rows).expect("trace written");
}

/// Great-circle distance by the arcsine form of the haversine formula.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64, radius: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * radius * h.sqrt().asin()
}

/// Direct simulation of the phase counter of the flight phase monitor:
/// `unchanged` at each position for the given speed sequence.
pub fn phase_counter(speeds: &[f64], bound: f64) -> Vec<i64> {
    let mut out = Vec::with_capacity(speeds.len());
    let (mut hi, mut lo, mut count, mut reset) = (0.0f64, 0.0f64, 0i64, false);
    for &v in speeds {
        let (h, l) = if reset {
            (v, v)
        } else {
            (hi.max(v), lo.min(v))
        };
        count = if reset { 0 } else { count + 1 };
        out.push(count);
        hi = h;
        lo = l;
        reset = (h - l).abs() > bound;
    }
    out
}

/// Equality with doubles compared within one unit in the last place.
pub fn same_value(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Double(x), Value::Double(y)) => {
            if x.is_nan() || y.is_nan() {
                return x.is_nan() && y.is_nan();
            }
            if x == y {
                return true;
            }
            if x.is_sign_negative() != y.is_sign_negative() {
                return false;
            }
            x.to_bits().abs_diff(y.to_bits()) <= 1
        }
        _ => a == b,
    }
}

// ---------------------------------------------------------------------------
// Random specifications

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Double,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Bool => "bool",
            Ty::Int => "int",
            Ty::Double => "double",
        }
    }

    fn stream_type(self) -> StreamType {
        match self {
            Ty::Bool => StreamType::Bool,
            Ty::Int => StreamType::Int,
            Ty::Double => StreamType::Double,
        }
    }
}

#[derive(Debug, Clone)]
pub enum E {
    Bool(bool),
    Int(i64),
    Double(f64),
    Position,
    /// `s` when the offset is 0, else `s[offset, default]`.
    Access(usize, i64, Box<E>),
    Arith(char, Box<E>, Box<E>),
    Less(Box<E>, Box<E>),
    Equal(Box<E>, Box<E>),
    And(Box<E>, Box<E>),
    Or(Box<E>, Box<E>),
    Not(Box<E>),
    If(Box<E>, Box<E>, Box<E>),
    ToDouble(Box<E>),
}

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub types: Vec<Ty>,
    pub num_inputs: usize,
    /// One definition per output.
    pub definitions: Vec<E>,
}

fn name(i: usize) -> String {
    format!("s{i}")
}

fn lit(ty: Ty, rng: &mut StdRng) -> E {
    match ty {
        Ty::Bool => E::Bool(rng.random_bool(0.5)),
        Ty::Int => E::Int(rng.random_range(-3..=3)),
        Ty::Double => E::Double(rng.random_range(-8..=8) as f64 / 4.0),
    }
}

fn gen_expr(ty: Ty, types: &[Ty], depth: u32, rng: &mut StdRng) -> E {
    let leaf = depth == 0 || rng.random_bool(0.3);
    let candidates: Vec<usize> = (0..types.len()).filter(|&i| types[i] == ty).collect();
    if leaf {
        let r = rng.random_range(0..10);
        if r < 7 && !candidates.is_empty() {
            let s = candidates[rng.random_range(0..candidates.len())];
            return E::Access(s, rng.random_range(-2..=2), Box::new(lit(ty, rng)));
        }
        if r < 8 && ty == Ty::Int {
            return E::Position;
        }
        return lit(ty, rng);
    }
    let sub = |t: Ty, rng: &mut StdRng| Box::new(gen_expr(t, types, depth - 1, rng));
    match ty {
        Ty::Int => match rng.random_range(0..3) {
            0 => E::Arith('+', sub(Ty::Int, rng), sub(Ty::Int, rng)),
            1 => E::Arith('-', sub(Ty::Int, rng), sub(Ty::Int, rng)),
            _ => E::If(sub(Ty::Bool, rng), sub(Ty::Int, rng), sub(Ty::Int, rng)),
        },
        Ty::Double => match rng.random_range(0..5) {
            0 => E::Arith('+', sub(Ty::Double, rng), sub(Ty::Double, rng)),
            1 => E::Arith('-', sub(Ty::Double, rng), sub(Ty::Double, rng)),
            2 => E::Arith('*', sub(Ty::Double, rng), sub(Ty::Double, rng)),
            3 => E::ToDouble(sub(Ty::Int, rng)),
            _ => E::If(
                sub(Ty::Bool, rng),
                sub(Ty::Double, rng),
                sub(Ty::Double, rng),
            ),
        },
        Ty::Bool => match rng.random_range(0..6) {
            0 => E::Less(sub(Ty::Int, rng), sub(Ty::Int, rng)),
            1 => E::Less(sub(Ty::Double, rng), sub(Ty::Double, rng)),
            2 => E::Equal(sub(Ty::Int, rng), sub(Ty::Int, rng)),
            3 => E::And(sub(Ty::Bool, rng), sub(Ty::Bool, rng)),
            4 => E::Or(sub(Ty::Bool, rng), sub(Ty::Bool, rng)),
            _ => E::Not(sub(Ty::Bool, rng)),
        },
    }
}

/// A random specification with at most six streams whose accesses use
/// offsets in [-2, 2]. It may or may not be well-formed.
pub fn random_spec(rng: &mut StdRng) -> RandomSpec {
    let total = rng.random_range(2..=6);
    let num_inputs = rng.random_range(1..total);
    let all = [Ty::Bool, Ty::Int, Ty::Double];
    let types: Vec<Ty> = (0..total).map(|_| all[rng.random_range(0..3)]).collect();
    let definitions = (num_inputs..total)
        .map(|i| gen_expr(types[i], &types, 3, rng))
        .collect();
    RandomSpec {
        types,
        num_inputs,
        definitions,
    }
}

fn render_expr(e: &E, out: &mut String) {
    match e {
        E::Bool(b) => write!(out, "{b}").unwrap(),
        E::Int(i) => write!(out, "{i}").unwrap(),
        E::Double(d) => write!(out, "{d:?}").unwrap(),
        E::Position => out.push_str("position"),
        E::Access(s, 0, _) => out.push_str(&name(*s)),
        E::Access(s, k, d) => {
            write!(out, "{}[{k}, ", name(*s)).unwrap();
            render_expr(d, out);
            out.push(']');
        }
        E::Arith(op, a, b) => binary(out, &op.to_string(), a, b),
        E::Less(a, b) => binary(out, "<", a, b),
        E::Equal(a, b) => binary(out, "=", a, b),
        E::And(a, b) => binary(out, "&", a, b),
        E::Or(a, b) => binary(out, "|", a, b),
        E::Not(a) => {
            out.push_str("!(");
            render_expr(a, out);
            out.push(')');
        }
        E::If(c, t, f) => {
            out.push_str("if ");
            render_expr(c, out);
            out.push_str(" { ");
            render_expr(t, out);
            out.push_str(" } else { ");
            render_expr(f, out);
            out.push_str(" }");
        }
        E::ToDouble(a) => {
            out.push_str("double(");
            render_expr(a, out);
            out.push(')');
        }
    }
}

fn binary(out: &mut String, op: &str, a: &E, b: &E) {
    out.push('(');
    render_expr(a, out);
    write!(out, " {op} ").unwrap();
    render_expr(b, out);
    out.push(')');
}

impl RandomSpec {
    pub fn source(&self) -> String {
        let mut out = String::new();
        for (i, ty) in self.types.iter().enumerate() {
            if i < self.num_inputs {
                writeln!(out, "input {} {}", ty.name(), name(i)).unwrap();
            } else {
                write!(out, "output {} {} := ", ty.name(), name(i)).unwrap();
                render_expr(&self.definitions[i - self.num_inputs], &mut out);
                out.push('\n');
            }
        }
        out
    }

    pub fn input_types(&self) -> Vec<(String, StreamType)> {
        (0..self.num_inputs)
            .map(|i| (name(i), self.types[i].stream_type()))
            .collect()
    }

    /// `(consumer, producer, offset)` for every access.
    pub fn edges(&self) -> Vec<(usize, usize, i64)> {
        fn walk(e: &E, from: usize, out: &mut Vec<(usize, usize, i64)>) {
            match e {
                E::Bool(_) | E::Int(_) | E::Double(_) | E::Position => {}
                E::Access(s, k, d) => {
                    out.push((from, *s, *k));
                    walk(d, from, out);
                }
                E::Arith(_, a, b) | E::Less(a, b) | E::Equal(a, b) | E::And(a, b) | E::Or(a, b) => {
                    walk(a, from, out);
                    walk(b, from, out);
                }
                E::Not(a) | E::ToDouble(a) => walk(a, from, out),
                E::If(c, t, f) => {
                    walk(c, from, out);
                    walk(t, from, out);
                    walk(f, from, out);
                }
            }
        }
        let mut out = Vec::new();
        for (k, d) in self.definitions.iter().enumerate() {
            walk(d, self.num_inputs + k, &mut out);
        }
        out
    }

    pub fn random_inputs(&self, n: u64, rng: &mut StdRng) -> Vec<Event> {
        (0..n)
            .map(|j| {
                let values = (0..self.num_inputs)
                    .map(|i| match self.types[i] {
                        Ty::Bool => Value::Bool(rng.random_bool(0.5)),
                        Ty::Int => Value::Int(rng.random_range(-5..=5)),
                        Ty::Double => Value::Double(rng.random_range(-20..=20) as f64 / 8.0),
                    })
                    .collect();
                Event::new(j, values)
            })
            .collect()
    }
}

/// Whether some closed walk of total weight zero exists, by searching
/// (vertex, accumulated weight) states. A zero walk can be reordered so its
/// prefix sums stay within a few simple cycle weights of zero, and each of
/// those is at most `n * max|w|`, so a window of eight times that suffices.
pub fn has_zero_closed_walk(n: usize, edges: &[(usize, usize, i64)]) -> bool {
    let bound = 8 * (n as i64) * edges.iter().map(|e| e.2.abs()).max().unwrap_or(0).max(1);
    for start in 0..n {
        let mut seen: HashSet<(usize, i64)> = HashSet::new();
        let mut queue: VecDeque<(usize, i64)> = VecDeque::new();
        for &(a, b, w) in edges {
            if a == start && seen.insert((b, w)) {
                queue.push_back((b, w));
            }
        }
        while let Some((v, acc)) = queue.pop_front() {
            if v == start && acc == 0 {
                return true;
            }
            for &(a, b, w) in edges {
                let next = acc + w;
                if a == v && next.abs() <= bound && seen.insert((b, next)) {
                    queue.push_back((b, next));
                }
            }
        }
    }
    false
}

/// Brute-force evaluation over the whole trace: starting from nothing
/// known, repeatedly computes every (stream, position) whose operands are
/// all known until nothing changes. `None` when a value never resolves or
/// integer arithmetic overflows.
pub fn oracle_eval(spec: &RandomSpec, inputs: &[Event]) -> Option<Vec<Vec<Value>>> {
    let n = inputs.len() as i64;
    let streams = spec.types.len();
    let mut table: Vec<Vec<Option<Value>>> = vec![vec![None; inputs.len()]; streams];
    for (j, ev) in inputs.iter().enumerate() {
        for (row, v) in table.iter_mut().zip(&ev.values) {
            row[j] = Some(v.clone());
        }
    }
    enum R {
        Known(Value),
        Unknown,
        Overflow,
    }
    fn ev(e: &E, j: i64, n: i64, t: &[Vec<Option<Value>>]) -> R {
        use R::*;
        macro_rules! get {
            ($e:expr) => {
                match ev($e, j, n, t) {
                    Known(v) => v,
                    other => return other,
                }
            };
        }
        match e {
            E::Bool(b) => Known(Value::Bool(*b)),
            E::Int(i) => Known(Value::Int(*i)),
            E::Double(d) => Known(Value::Double(*d)),
            E::Position => Known(Value::Int(j)),
            E::Access(s, k, d) => {
                let p = j + k;
                if p < 0 || p >= n {
                    ev(d, j, n, t)
                } else {
                    match &t[*s][p as usize] {
                        Some(v) => Known(v.clone()),
                        None => Unknown,
                    }
                }
            }
            E::Arith(op, a, b) => match (get!(a), get!(b)) {
                (Value::Int(x), Value::Int(y)) => {
                    let r = if *op == '+' {
                        x.checked_add(y)
                    } else {
                        x.checked_sub(y)
                    };
                    r.map_or(Overflow, |v| Known(Value::Int(v)))
                }
                (Value::Double(x), Value::Double(y)) => Known(Value::Double(match op {
                    '+' => x + y,
                    '-' => x - y,
                    _ => x * y,
                })),
                _ => unreachable!(),
            },
            E::Less(a, b) => Known(Value::Bool(match (get!(a), get!(b)) {
                (Value::Int(x), Value::Int(y)) => x < y,
                (Value::Double(x), Value::Double(y)) => x < y,
                _ => unreachable!(),
            })),
            E::Equal(a, b) => Known(Value::Bool(get!(a) == get!(b))),
            E::And(a, b) => Known(Value::Bool(
                get!(a) == Value::Bool(true) && get!(b) == Value::Bool(true),
            )),
            E::Or(a, b) => Known(Value::Bool(
                get!(a) == Value::Bool(true) || get!(b) == Value::Bool(true),
            )),
            E::Not(a) => Known(Value::Bool(get!(a) == Value::Bool(false))),
            E::If(c, x, y) => {
                let c = get!(c);
                let x = get!(x);
                let y = get!(y);
                Known(if c == Value::Bool(true) { x } else { y })
            }
            E::ToDouble(a) => match get!(a) {
                Value::Int(i) => Known(Value::Double(i as f64)),
                _ => unreachable!(),
            },
        }
    }
    loop {
        let mut changed = false;
        for (k, def) in spec.definitions.iter().enumerate() {
            let s = spec.num_inputs + k;
            for j in 0..inputs.len() {
                if table[s][j].is_some() {
                    continue;
                }
                match ev(def, j as i64, n, &table) {
                    R::Known(v) => {
                        table[s][j] = Some(v);
                        changed = true;
                    }
                    R::Unknown => {}
                    R::Overflow => return None,
                }
            }
        }
        if !changed {
            break;
        }
    }
    table
        .into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub mod props;
