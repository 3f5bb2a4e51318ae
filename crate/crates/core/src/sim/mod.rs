//! Discrete-event simulation of an inbound sales call center.
//!
//! Customers arrive, queue FIFO, and either abandon when their patience runs
//! out or are answered by the longest-idle available operator. Answered
//! customers buy, decline, or defer and call back later; a deferred sale can
//! end up credited to an operator who has already gone home. Those absent
//! sales are what the Hardy probability q measures.

mod aggregate;
mod attribution;
mod config;
mod engine;
mod event;

use thiserror::Error;

pub use aggregate::{
    aggregate_daily, aggregates_to_csv, audit_structural_zeros, classify_calls, shift_contexts, simulated_q,
    DailyAggregate, StructuralAudit, AGGREGATE_CSV_HEADER,
};
pub use attribution::{
    attribute_sale, classify_event, CallOutcome, EventAssignment, ServiceId, ShiftContext, Suggestion,
};
pub use config::{SimConfig, HOLIDAY_WEEKDAY, MINUTES_PER_DAY};
pub use engine::{run_scripted, run_simulation, ScriptedCall, SimOutput, SERVICE_CATALOG};
pub use event::{events_from_csv, events_to_csv, CallId, Event, EventKind, OperatorId, EVENT_CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("cannot parse simulation config: {0}")]
    ConfigParse(String),
    #[error("malformed event log: {0}")]
    MalformedLog(String),
    #[error("no sales recorded")]
    NoSales,
}
