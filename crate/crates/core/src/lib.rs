//! Stream runtime monitoring for Lola specifications.
//!
//! A specification is a system of typed stream equations over input streams
//! read from event logs. The crate parses and desugars specifications
//! ([`syntax`]), checks them statically ([`analysis`]), evaluates them
//! incrementally with bounded memory ([`engine`]) and routes notifications
//! and derived logs ([`feedback`], [`io`]).

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod feedback;
pub mod io;
pub mod stdlib;
pub mod syntax;
