//! Acceptance run: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines print in order; exits non-zero when a hard
//! criterion fails. Criterion 9 is advisory and only warns.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

use common::*;
use lola_core::analysis::analyze;
use lola_core::cli::{run_offline, run_online, Mode, RunConfig, Source};
use lola_core::corpus;
use lola_core::engine::{
    init_monitor, init_online_monitor, Event, MonitorState, StepOutput, Value,
};
use lola_core::feedback::Payload;
use lola_core::syntax::parse_specification;

const CORPUS_TIME_LIMIT: Duration = Duration::from_secs(1);
const RANDOM_SPECS: usize = 500;
const RANDOM_MAX_EVENTS: u64 = 20;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const EARTH_RADIUS: f64 = 6_373_000.0;
const HAVERSINE_REL_TOL: f64 = 1e-6;
const JUMP_DEGREES: f64 = 0.001;
const PHASE_TICKS: usize = 150;
const VEL_BOUND: f64 = 1.0;
const LANDING_BOUND_S: f64 = 20.0;
const EQUIVALENCE_EVENTS: u64 = 45_000;
const MEMORY_EARLY: u64 = 1_000;
const MEMORY_LATE: u64 = 450_000;
const MEMORY_DRIFT_BYTES: usize = 0;
const THROUGHPUT_EVENTS: u64 = 45_000;
const THROUGHPUT_LIMIT: Duration = Duration::from_secs(10);
const FEEDBACK_CASES: u32 = 256;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(u32, &str, bool, Check); 10] = [
        (1, "corpus compilation", false, corpus_compilation),
        (2, "semantics oracle", false, semantics_oracle),
        (3, "haversine correctness", false, haversine_correctness),
        (4, "gps jump detection", false, gps_jump),
        (5, "phase detection timing", false, phase_detection),
        (6, "landing bound", false, landing_bound),
        (
            7,
            "online/offline equivalence",
            false,
            online_offline_equivalence,
        ),
        (8, "constant memory", false, constant_memory),
        (9, "throughput sanity", true, throughput),
        (10, "feedback semantics", false, feedback_semantics),
    ];
    let mut failed = 0;
    for (n, name, soft, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&e))));
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) if soft => ("WARN", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {status} {name} ({secs:.2} s): {detail}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn published() -> [(&'static str, &'static str); 3] {
    [
        ("sensor_validation", corpus::SENSOR_VALIDATION),
        ("flight_phase", corpus::FLIGHT_PHASE),
        ("mission", corpus::MISSION),
    ]
}

fn corpus_compilation() -> Result<String, String> {
    let start = Instant::now();
    for (name, src) in published() {
        let spec = parse_specification(src).map_err(|e| format!("{name}: {e}"))?;
        let a = analyze(&spec).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.result.well_formed, || format!("{name} not well-formed"))?;
        ensure(a.result.efficiently_monitorable, || {
            format!("{name} not efficiently monitorable")
        })?;
    }
    let took = start.elapsed();
    ensure(took < CORPUS_TIME_LIMIT, || format!("took {took:?}"))?;
    Ok(format!(
        "3 published monitors well-formed and efficiently monitorable in {took:?}"
    ))
}

fn semantics_oracle() -> Result<String, String> {
    let start = Instant::now();
    let (mut accepted, mut rejected, mut skipped, mut values) = (0, 0, 0, 0usize);
    let mut seed = 0u64;
    while accepted < RANDOM_SPECS {
        seed += 1;
        let mut rng = seeded(seed);
        let spec = random_spec(&mut rng);
        let src = spec.source();
        let parsed = parse_specification(&src).map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let a = analyze(&parsed).map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let zero_walk = has_zero_closed_walk(spec.types.len(), &spec.edges());
        ensure(a.result.well_formed != zero_walk, || {
            format!("seed {seed}: well-formedness disagrees with closed-walk search\n{src}")
        })?;
        if !a.result.well_formed {
            rejected += 1;
            continue;
        }
        let events = spec.random_inputs(rng.random_range(1..=RANDOM_MAX_EVENTS), &mut rng);
        let Some(expected) = oracle_eval(&spec, &events) else {
            skipped += 1;
            continue;
        };
        let mut monitor = init_monitor(&a).map_err(|e| format!("seed {seed}: {e}"))?;
        let out = monitor
            .run_trace(events.clone())
            .map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let names = monitor.stream_names().to_vec();
        let mut seen = BTreeMap::new();
        for r in &out.resolved {
            let s = names
                .iter()
                .position(|n| *n == r.stream)
                .expect("known stream");
            ensure(seen.insert((s, r.position), ()).is_none(), || {
                format!("seed {seed}: {}@{} resolved twice", r.stream, r.position)
            })?;
            let want = &expected[s][r.position as usize];
            ensure(same_value(want, &r.value), || {
                format!(
                    "seed {seed}: {}@{} engine {} oracle {}\n{src}",
                    r.stream, r.position, r.value, want
                )
            })?;
            values += 1;
        }
        let outputs = spec.types.len() - spec.num_inputs;
        ensure(seen.len() == outputs * events.len(), || {
            format!(
                "seed {seed}: {} of {} values resolved",
                seen.len(),
                outputs * events.len()
            )
        })?;
        accepted += 1;
    }
    let took = start.elapsed();
    ensure(took < ORACLE_TIME_LIMIT, || format!("took {took:?}"))?;
    Ok(format!(
        "{accepted} well-formed specs, {values} values equal; {rejected} ill-formed agreed with closed-walk search, {skipped} overflowing skipped"
    ))
}

fn event_at(monitor: &MonitorState, j: u64, pairs: &[(&str, f64)]) -> Event {
    monitor
        .event_from_pairs(j, pairs.iter().map(|(n, v)| (*n, Value::Double(*v))))
        .expect("complete event")
}

fn value_of(out: &StepOutput, stream: &str, position: u64) -> Option<Value> {
    out.resolved
        .iter()
        .find(|r| &*r.stream == stream && r.position == position)
        .map(|r| r.value.clone())
}

fn haversine_correctness() -> Result<String, String> {
    let a = analyzed(&[corpus::SENSOR_VALIDATION]);
    let mut monitor = init_monitor(&a).map_err(|e| e.to_string())?;
    let fixed = [("ug", 0.0), ("vg", 0.0), ("wg", 0.0), ("time_s", 0.0)];
    let mut events = Vec::new();
    for (j, lat) in [(0u64, 52.52), (1, 52.53)] {
        let mut pairs = fixed.to_vec();
        pairs.extend([
            ("lat", lat),
            ("lon", 13.405),
            ("time_micros", j as f64 * 20_000.0),
        ]);
        events.push(event_at(&monitor, j, &pairs));
    }
    let out = monitor.run_trace(events).map_err(|e| e.to_string())?;
    let got = value_of(&out, "gps_distance", 1)
        .and_then(|v| v.as_double())
        .ok_or("gps_distance@1 missing")?;
    let want = haversine(52.52, 13.405, 52.53, 13.405, EARTH_RADIUS);
    let rel = ((got - want) / want).abs();
    ensure(rel <= HAVERSINE_REL_TOL, || {
        format!("got {got}, oracle {want}, rel {rel:e}")
    })?;
    Ok(format!(
        "{got:.6} m vs oracle {want:.6} m, rel error {rel:.1e}"
    ))
}

fn snapshot_positions(out: &StepOutput, message: &str) -> Vec<u64> {
    out.feedback
        .iter()
        .filter(|f| matches!(f.payload, Payload::Snapshot(_)) && &*f.message == message)
        .map(|f| f.position)
        .collect()
}

fn gps_jump() -> Result<String, String> {
    const N: u64 = 3_000;
    const JUMP_AT: u64 = 1_700;
    let a = analyzed(&[corpus::SENSOR_VALIDATION]);
    let inputs = a_inputs(&a);
    let lat = inputs.iter().position(|(n, _)| n == "lat").unwrap();
    let run = |jump: bool| -> Result<Vec<u64>, String> {
        let mut monitor = init_monitor(&a).map_err(|e| e.to_string())?;
        let events = synth_trace(&inputs, N).into_iter().map(|mut e| {
            if jump && e.position >= JUMP_AT {
                let v = e.values[lat].as_double().unwrap();
                e.values[lat] = Value::Double(v + JUMP_DEGREES);
            }
            e
        });
        let out = monitor.run_trace(events).map_err(|e| e.to_string())?;
        Ok(snapshot_positions(&out, "Invalid GPS signal received!"))
    };
    let clean = run(false)?;
    ensure(clean.is_empty(), || {
        format!("clean trace fired at {clean:?}")
    })?;
    let fired = run(true)?;
    ensure(fired == [JUMP_AT], || {
        format!("fired at {fired:?}, expected [{JUMP_AT}]")
    })?;
    Ok(format!(
        "jump of {JUMP_DEGREES} deg at position {JUMP_AT} snapshotted once; clean trace silent"
    ))
}

fn a_inputs(a: &lola_core::analysis::Analyzed) -> Vec<(String, lola_core::syntax::StreamType)> {
    let c = &a.checked;
    c.streams[..c.num_inputs]
        .iter()
        .map(|s| (s.name.clone(), s.ty))
        .collect()
}

/// Alternating 0/10 speeds, a calm stretch of `calm` ticks near 5, then
/// alternating speeds again.
fn phase_speeds(calm: usize) -> Vec<f64> {
    let noisy = |k: usize| if k.is_multiple_of(2) { 0.0 } else { 10.0 };
    let mut v: Vec<f64> = (0..20).map(noisy).collect();
    v.extend((0..calm).map(|k| 5.0 + 0.3 * (k as f64).sin()));
    v.extend((0..60).map(noisy));
    v
}

fn phase_detection() -> Result<String, String> {
    let a = analyzed(&[corpus::FLIGHT_PHASE]);
    let inputs = a_inputs(&a);
    let vx = inputs.iter().position(|(n, _)| n == "vel_x").unwrap();
    let others: Vec<usize> = ["vel_y", "vel_z"]
        .iter()
        .map(|m| inputs.iter().position(|(n, _)| n == m).unwrap())
        .collect();
    let run = |speeds: &[f64]| -> Result<(Vec<u64>, Vec<u64>), String> {
        let mut monitor = init_monitor(&a).map_err(|e| e.to_string())?;
        let events = speeds.iter().enumerate().map(|(j, s)| {
            let mut e = synth_event(&inputs, j as u64);
            e.values[vx] = Value::Double(*s);
            for &o in &others {
                e.values[o] = Value::Double(0.0);
            }
            e
        });
        let out = monitor.run_trace(events).map_err(|e| e.to_string())?;
        let norm: Vec<f64> = speeds
            .iter()
            .map(|s| (s.powf(2.0) + 0.0 + 0.0).sqrt())
            .collect();
        let expected = phase_counter(&norm, VEL_BOUND)
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == PHASE_TICKS as i64)
            .map(|(j, _)| j as u64)
            .collect();
        Ok((snapshot_positions(&out, "Phase detected!"), expected))
    };
    let (fired, expected) = run(&phase_speeds(PHASE_TICKS))?;
    ensure(expected.len() == 1, || {
        format!("oracle expects {expected:?}")
    })?;
    ensure(fired == expected, || {
        format!("fired at {fired:?}, oracle {expected:?}")
    })?;
    let (short, _) = run(&phase_speeds(PHASE_TICKS - 1))?;
    ensure(short.is_empty(), || {
        format!("{} calm ticks fired at {short:?}", PHASE_TICKS - 1)
    })?;
    Ok(format!(
        "{PHASE_TICKS} calm ticks fire once at position {} (= oracle); {} calm ticks never fire",
        fired[0],
        PHASE_TICKS - 1
    ))
}

fn mission_events(monitor: &MonitorState, states: &[(i64, i64)]) -> Vec<Event> {
    states
        .iter()
        .enumerate()
        .map(|(j, (state, ground))| {
            let (s, us) = time_parts(j as u64);
            monitor
                .event_from_pairs(
                    j as u64,
                    [
                        ("time_s", Value::Double(s)),
                        ("time_micros", Value::Double(us)),
                        ("stateID_SC", Value::Int(*state)),
                        ("OnGround", Value::Int(*ground)),
                    ],
                )
                .expect("complete event")
        })
        .collect()
}

fn landing_errors(states: &[(i64, i64)]) -> Result<Vec<u64>, String> {
    let a = analyzed(&[corpus::MISSION]);
    let mut monitor = init_monitor(&a).map_err(|e| e.to_string())?;
    let events = mission_events(&monitor, states);
    let out = monitor.run_trace(events).map_err(|e| e.to_string())?;
    Ok(out
        .resolved
        .iter()
        .filter(|r| &*r.stream == "landing_error" && r.value == Value::Bool(true))
        .map(|r| r.position)
        .collect())
}

fn landing_bound() -> Result<String, String> {
    const LANDING: i64 = 10;
    const ENTRY: usize = 100;
    const TICKS: usize = 1_500;
    let mut stuck: Vec<(i64, i64)> = vec![(7, 0); ENTRY];
    stuck.extend(std::iter::repeat_n((LANDING, 0), TICKS));
    // first position whose time since entry exceeds the bound
    let clock = |j: usize| {
        let (s, us) = time_parts(j as u64);
        s + us / 1_000_000.0
    };
    let first = (ENTRY..stuck.len())
        .find(|&j| clock(j) - clock(ENTRY) > LANDING_BOUND_S)
        .unwrap() as u64;
    let errors = landing_errors(&stuck)?;
    ensure(errors.first() == Some(&first), || {
        format!(
            "first landing_error at {:?}, expected {first}",
            errors.first()
        )
    })?;
    ensure(errors.len() == stuck.len() - first as usize, || {
        "landing_error not held".into()
    })?;

    let mut landed = stuck.clone();
    for s in &mut landed[ENTRY + 750..] {
        s.1 = 1;
    }
    let errors = landing_errors(&landed)?;
    ensure(errors.is_empty(), || {
        format!("landing within bound flagged at {errors:?}")
    })?;
    Ok(format!(
        "never-grounded landing flagged from position {first} ({:.2} s after entry); grounded at 15 s never flagged",
        clock(first as usize) - clock(ENTRY)
    ))
}

type Files = BTreeMap<PathBuf, Vec<u8>>;

fn files_under(dir: &Path) -> Files {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn drive(
    mode: Mode,
    spec: &Path,
    log: &Path,
    out: PathBuf,
    evalstep: usize,
) -> Result<(Vec<u8>, Files), String> {
    fs::create_dir_all(&out).unwrap();
    let mut config = RunConfig::new(mode, vec![spec.to_path_buf()]);
    config.source = Some(Source::Path(log.to_path_buf()));
    config.out_dir = Some(out.clone());
    config.evalstep = evalstep;
    let mut lines = Vec::new();
    let report = match mode {
        Mode::Online => run_online(&config, &mut lines),
        _ => run_offline(&config, &mut lines),
    }
    .map_err(|f| f.error.to_string())?;
    ensure(report.events == EQUIVALENCE_EVENTS, || {
        format!("{} events read", report.events)
    })?;
    Ok((lines, files_under(&out)))
}

fn online_offline_equivalence() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let mut summary = Vec::new();
    for (name, src) in corpus::all() {
        let spec = dir.path().join(format!("{name}.lola"));
        fs::write(&spec, src).unwrap();
        let a = analyzed(&[src]);
        let inputs = a_inputs(&a);
        let log = dir.path().join(format!("{name}.csv"));
        write_trace(&log, &inputs, &synth_trace(&inputs, EQUIVALENCE_EVENTS));
        let base = dir.path().join(name);
        let offline = drive(Mode::Offline, &spec, &log, base.join("offline"), 1)?;
        for step in [1, 100] {
            let online = drive(
                Mode::Online,
                &spec,
                &log,
                base.join(format!("online{step}")),
                step,
            )?;
            ensure(online.0 == offline.0, || {
                format!("{name}: notifications differ at evalstep {step}")
            })?;
            ensure(online.1 == offline.1, || {
                format!("{name}: tag files differ at evalstep {step}")
            })?;
        }
        summary.push(format!(
            "{name} {} lines/{} files",
            offline.0.iter().filter(|b| **b == b'\n').count(),
            offline.1.len()
        ));
    }
    Ok(summary.join(", "))
}

// the drift tolerance is pinned at zero on purpose
#[allow(clippy::absurd_extreme_comparisons)]
fn constant_memory() -> Result<String, String> {
    let mut summary = Vec::new();
    for (name, src) in corpus::all() {
        let a = analyzed(&[src]);
        let inputs = a_inputs(&a);
        let mut monitor = init_online_monitor(&a).map_err(|e| format!("{name}: {e}"))?;
        let mut early = 0;
        for j in 0..MEMORY_LATE {
            monitor
                .step(synth_event(&inputs, j))
                .map_err(|e| format!("{name}@{j}: {e}"))?;
            if j + 1 == MEMORY_EARLY {
                early = monitor.state_size_bytes();
            }
        }
        let late = monitor.state_size_bytes();
        ensure(late.abs_diff(early) <= MEMORY_DRIFT_BYTES, || {
            format!("{name}: {early} bytes after {MEMORY_EARLY} events, {late} after {MEMORY_LATE}")
        })?;
        summary.push(format!("{name} {late} B"));
    }
    Ok(summary.join(", "))
}

fn throughput() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let sources = [
        corpus::SENSOR_VALIDATION,
        corpus::MISSION,
        corpus::MISSION_EXTENDED,
    ];
    let mut paths = Vec::new();
    for (k, src) in sources.iter().enumerate() {
        let p = dir.path().join(format!("part{k}.lola"));
        fs::write(&p, src).unwrap();
        paths.push(p);
    }
    let inputs = a_inputs(&analyzed(&sources));
    let log = dir.path().join("merged.csv");
    write_trace(&log, &inputs, &synth_trace(&inputs, THROUGHPUT_EVENTS));
    let mut config = RunConfig::new(Mode::Offline, paths);
    config.source = Some(Source::Path(log));
    config.out_dir = Some(dir.path().join("out"));
    let start = Instant::now();
    let mut sink = std::io::sink();
    run_offline(&config, &mut sink).map_err(|f| f.error.to_string())?;
    let took = start.elapsed();
    let rate = THROUGHPUT_EVENTS as f64 / took.as_secs_f64();
    ensure(took < THROUGHPUT_LIMIT, || {
        format!("{took:?} for {THROUGHPUT_EVENTS} events")
    })?;
    Ok(format!(
        "{THROUGHPUT_EVENTS} events in {took:.2?} ({rate:.0} events/s)"
    ))
}

fn feedback_semantics() -> Result<String, String> {
    type Prop = fn(&[bool]) -> Result<(), proptest::test_runner::TestCaseError>;
    let props: [(&str, Prop); 3] = [
        ("trigger_once", props::trigger_once),
        ("trigger_change", props::trigger_change),
        ("filter", props::filter_round_trip),
    ];
    for (name, prop) in props {
        let mut runner = TestRunner::new(Config {
            cases: FEEDBACK_CASES,
            failure_persistence: None,
            ..Config::default()
        });
        runner
            .run(&props::conditions(), |c| prop(&c))
            .map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("trigger_once, trigger_change, filter rows and re-ingestion hold over {FEEDBACK_CASES} cases each"))
}
