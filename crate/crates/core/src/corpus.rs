//! Specifications shipped with the crate.
//!
//! `sensor_validation` and `flight_phase` are the published monitors as
//! printed. `mission` fills in the constants and cases the published text
//! elides, and `mission_extended` is a reconstruction of its per-location
//! statistics variant; neither of the latter two is normative.

pub const SENSOR_VALIDATION: &str = include_str!("../specs/sensor_validation.lola");
pub const FLIGHT_PHASE: &str = include_str!("../specs/flight_phase.lola");
pub const MISSION: &str = include_str!("../specs/mission.lola");
pub const MISSION_EXTENDED: &str = include_str!("../specs/mission_extended.lola");

/// `(name, source)` of every bundled specification.
pub fn all() -> [(&'static str, &'static str); 4] {
    [
        ("sensor_validation", SENSOR_VALIDATION),
        ("flight_phase", FLIGHT_PHASE),
        ("mission", MISSION),
        ("mission_extended", MISSION_EXTENDED),
    ]
}

pub fn get(name: &str) -> Option<&'static str> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}
