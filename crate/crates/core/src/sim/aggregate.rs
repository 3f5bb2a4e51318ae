use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::attribution::{classify_event, CallOutcome, EventAssignment, ShiftContext};
use super::event::{CallId, Event, EventKind, OperatorId};
use super::SimError;

/// One day in the schema of the published daily sales table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DailyAggregate {
    pub date_index: u32,
    pub responded: u64,
    pub abandoned: u64,
    /// Toman credited to operators who were off shift at purchase time.
    pub absent_sales: u64,
    /// Toman credited to operators who were on shift at purchase time.
    pub present_sales: u64,
}

impl DailyAggregate {
    pub fn empty(date_index: u32) -> Self {
        Self { date_index, responded: 0, abandoned: 0, absent_sales: 0, present_sales: 0 }
    }
}

/// Operator status reconstructed by replaying the log in order.
#[derive(Debug, Default)]
struct Roster {
    on_shift: HashMap<OperatorId, bool>,
    dnd: HashMap<OperatorId, bool>,
    busy: HashMap<OperatorId, bool>,
}

impl Roster {
    fn apply(&mut self, e: &Event) {
        let Some(op) = e.operator_id else { return };
        match e.kind {
            EventKind::ShiftStart => {
                self.on_shift.insert(op, true);
            }
            EventKind::ShiftEnd => {
                self.on_shift.insert(op, false);
            }
            EventKind::DndOn => {
                self.dnd.insert(op, true);
            }
            EventKind::DndOff => {
                self.dnd.insert(op, false);
            }
            EventKind::Answer => {
                self.busy.insert(op, true);
            }
            EventKind::Hangup => {
                self.busy.insert(op, false);
            }
            _ => {}
        }
    }

    fn flag(map: &HashMap<OperatorId, bool>, op: OperatorId) -> bool {
        map.get(&op).copied().unwrap_or(false)
    }

    fn context(&self, op: OperatorId) -> ShiftContext {
        ShiftContext { on_shift: Self::flag(&self.on_shift, op), responding: Self::flag(&self.busy, op) }
    }

    fn in_dnd(&self, op: OperatorId) -> bool {
        Self::flag(&self.dnd, op)
    }
}

/// Daily totals from an event log.
///
/// ANSWER and ABANDON events are counted on their own day; sales are booked
/// on the day of the PURCHASE event and split by whether the credited
/// operator was on shift at that point of the log.
pub fn aggregate_daily(events: &[Event]) -> Vec<DailyAggregate> {
    let Some(last_day) = events.iter().map(Event::day).max() else {
        return Vec::new();
    };
    let mut days: Vec<DailyAggregate> = (0..=last_day).map(DailyAggregate::empty).collect();
    let mut roster = Roster::default();
    for e in events {
        let day = &mut days[e.day() as usize];
        match e.kind {
            EventKind::Answer => day.responded += 1,
            EventKind::Abandon => day.abandoned += 1,
            EventKind::Purchase => {
                let amount = e.amount.unwrap_or(0);
                let on_shift = e.operator_id.is_some_and(|op| roster.context(op).on_shift);
                if on_shift {
                    day.present_sales += amount;
                } else {
                    day.absent_sales += amount;
                }
            }
            _ => {}
        }
        roster.apply(e);
    }
    days
}

/// Share of sales value credited to absent operators.
pub fn simulated_q(aggregates: &[DailyAggregate]) -> Result<f64, SimError> {
    let absent: u128 = aggregates.iter().map(|d| u128::from(d.absent_sales)).sum();
    let present: u128 = aggregates.iter().map(|d| u128::from(d.present_sales)).sum();
    if absent + present == 0 {
        return Err(SimError::NoSales);
    }
    Ok(absent as f64 / (absent + present) as f64)
}

pub const AGGREGATE_CSV_HEADER: &str = "day,responded,abandoned,absent_sales,present_sales";

pub fn aggregates_to_csv(aggregates: &[DailyAggregate]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for d in aggregates {
        let _ =
            writeln!(out, "{},{},{},{},{}", d.date_index, d.responded, d.abandoned, d.absent_sales, d.present_sales);
    }
    out
}

/// Counts of log patterns that the three zero-probability conditions rule out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StructuralAudit {
    pub contacts: u64,
    pub answers: u64,
    pub purchases: u64,
    /// A contact that was both abandoned and answered.
    pub answered_abandoned: u64,
    /// An ANSWER by an operator who was off shift or in DND.
    pub off_shift_answers: u64,
    /// A PURCHASE with no answered contact in progress.
    pub unanswered_purchases: u64,
}

impl StructuralAudit {
    pub fn is_clean(&self) -> bool {
        self.answered_abandoned == 0 && self.off_shift_answers == 0 && self.unanswered_purchases == 0
    }
}

pub fn audit_structural_zeros(events: &[Event]) -> StructuralAudit {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Waiting,
        Answered,
        Abandoned,
        Finished,
    }
    let mut audit = StructuralAudit::default();
    let mut contacts: HashMap<CallId, State> = HashMap::new();
    let mut roster = Roster::default();
    for e in events {
        match (e.kind, e.call_id) {
            (kind, Some(call)) if kind.is_contact() => {
                audit.contacts += 1;
                contacts.insert(call, State::Waiting);
            }
            (EventKind::Answer, Some(call)) => {
                audit.answers += 1;
                match contacts.get(&call) {
                    Some(State::Waiting) => {}
                    _ => audit.answered_abandoned += 1,
                }
                contacts.insert(call, State::Answered);
                let op = e.operator_id;
                if op.is_none_or(|op| !roster.context(op).on_shift || roster.in_dnd(op)) {
                    audit.off_shift_answers += 1;
                }
            }
            (EventKind::Abandon, Some(call)) => {
                if contacts.get(&call) != Some(&State::Waiting) {
                    audit.answered_abandoned += 1;
                }
                contacts.insert(call, State::Abandoned);
            }
            (EventKind::Purchase, Some(call)) => {
                audit.purchases += 1;
                if contacts.get(&call) != Some(&State::Answered) {
                    audit.unanswered_purchases += 1;
                }
            }
            (EventKind::Hangup, Some(call)) => {
                contacts.insert(call, State::Finished);
            }
            _ => {}
        }
        roster.apply(e);
    }
    audit
}

/// Reference-operator status for each call: at the PURCHASE event for
/// purchases, otherwise right after the first ANSWER.
pub fn shift_contexts(events: &[Event]) -> HashMap<CallId, ShiftContext> {
    let mut contexts = HashMap::new();
    let mut purchased = HashMap::new();
    let mut roster = Roster::default();
    for e in events {
        match (e.kind, e.call_id, e.operator_id) {
            (EventKind::Purchase, Some(call), Some(op)) => {
                contexts.insert(call, roster.context(op));
                purchased.insert(call, true);
                roster.apply(e);
            }
            (EventKind::Answer, Some(call), Some(op)) => {
                roster.apply(e);
                contexts.entry(call).or_insert_with(|| roster.context(op));
            }
            _ => roster.apply(e),
        }
    }
    contexts
}

/// Classifies every call of a run.
pub fn classify_calls(events: &[Event], outcomes: &[CallOutcome]) -> Vec<EventAssignment> {
    let contexts = shift_contexts(events);
    outcomes.iter().map(|o| classify_event(o, contexts.get(&o.call_id).copied())).collect()
}
