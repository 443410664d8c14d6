//! Feedback properties, shared by the property tests and the acceptance
//! run. Each takes a generated boolean condition sequence.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use lola_core::engine::{init_monitor, Event, Value};
use lola_core::feedback::{Payload, TagSinks};
use lola_core::io::read_log;
use lola_core::syntax::StreamType;

use super::analyzed;

pub fn conditions() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 0..60)
}

fn bool_events(cond: &[bool]) -> Vec<Event> {
    cond.iter()
        .enumerate()
        .map(|(j, b)| {
            Event::new(
                j as u64,
                vec![Value::Bool(*b), Value::Int(j as i64 * 3 - 7)],
            )
        })
        .collect()
}

fn fired_positions(spec: &str, cond: &[bool]) -> Vec<u64> {
    let mut monitor = init_monitor(&analyzed(&[spec])).expect("monitor");
    let out = monitor.run_trace(bool_events(cond)).expect("runs");
    out.feedback.iter().map(|f| f.position).collect()
}

const INPUTS: &str = "input bool b\ninput int v\n";

/// trigger_once fires at most once, at the first position the condition holds.
pub fn trigger_once(cond: &[bool]) -> Result<(), TestCaseError> {
    let fired = fired_positions(&format!("{INPUTS}trigger_once b with \"once\""), cond);
    let first = cond.iter().position(|b| *b).map(|j| j as u64);
    prop_assert!(fired.len() <= 1);
    prop_assert_eq!(fired.first().copied(), first);
    Ok(())
}

/// trigger_change fires exactly where adjacent condition values differ.
pub fn trigger_change(cond: &[bool]) -> Result<(), TestCaseError> {
    let fired = fired_positions(&format!("{INPUTS}trigger_change b with \"flip\""), cond);
    let expected: Vec<u64> = (1..cond.len())
        .filter(|&j| cond[j] != cond[j - 1])
        .map(|j| j as u64)
        .collect();
    prop_assert!(!fired.contains(&0));
    prop_assert_eq!(fired, expected);
    Ok(())
}

/// A filter writes one row per true position, and its file reads back as
/// an input log equal to the selected events. Filtering that file again on
/// the same condition keeps every row.
pub fn filter_round_trip(cond: &[bool]) -> Result<(), TestCaseError> {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = format!("{INPUTS}filter if b at \"kept.csv\"");
    let analysis = analyzed(&[spec.as_str()]);
    let inputs = vec![
        ("b".to_string(), StreamType::Bool),
        ("v".to_string(), StreamType::Int),
    ];

    let run = |events: Vec<Event>, out: &std::path::Path| -> Vec<Event> {
        let mut monitor = init_monitor(&analysis).expect("monitor");
        let mut sinks = TagSinks::open(monitor.observers(), Some(out)).expect("sinks");
        let result = monitor.run_trace(events).expect("runs");
        assert!(result
            .feedback
            .iter()
            .all(|f| matches!(f.payload, Payload::Tag { .. })));
        sinks.record(&result.feedback).expect("recorded");
        sinks.flush().expect("flushed");
        drop(sinks);
        read_log(&out.join("kept.csv"), &inputs, false)
            .expect("filter output has a valid header")
            .collect::<Result<Vec<_>, _>>()
            .expect("filter output parses as an input log")
    };

    let events = bool_events(cond);
    let kept = run(events.clone(), dir.path());
    let selected: Vec<&Event> = events
        .iter()
        .filter(|e| e.values[0] == Value::Bool(true))
        .collect();
    prop_assert_eq!(kept.len(), cond.iter().filter(|b| **b).count());
    for (k, (a, b)) in kept.iter().zip(&selected).enumerate() {
        prop_assert_eq!(a.position, k as u64);
        prop_assert_eq!(&a.values, &b.values);
    }

    let second = dir.path().join("again");
    let again = run(kept.clone(), &second);
    prop_assert_eq!(
        std::fs::read(dir.path().join("kept.csv")).unwrap(),
        std::fs::read(second.join("kept.csv")).unwrap()
    );
    prop_assert_eq!(again, kept);
    Ok(())
}
