//! Referring forms of sequential circuits.
//!
//! A circuit is a set of flip-flops on independent clock domains, connected
//! through combinational nodes that are modelled only by their connectivity.
//! For a resolved control stream (a [`Schedule`]) the circuit's *referring
//! form* records, per output step, which earlier data-input occurrences the
//! output can depend on. A set of referring forms is *time preserving* when
//! the values they take admit a partial order that every form respects.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature pulls in
//! `std` and `rayon` for the exhaustive harness.
#![cfg_attr(not(any(test, feature = "parallel")), no_std)]

extern crate alloc;

pub mod dsl;
mod error;
pub mod explore;
pub mod influence;
pub mod model;
pub mod oracle;
pub mod order;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    canonicalize, schedule_from_clocks, Circuit, Clock, ClockRef, ControlInputs, FlipFlop,
    InputOccurrence, PortKind, RefSet, ReferringForm, Schedule, Selector, Source, SourceSet,
    StepControl, TimeStep,
};

/// Default cap on the number of schedules enumerated by a single analysis.
pub const DEFAULT_SCHEDULE_BUDGET: u128 = 1 << 24;

/// Default cap on the number of stream evaluations performed by the oracle.
pub const DEFAULT_ORACLE_BUDGET: u128 = 1 << 20;
