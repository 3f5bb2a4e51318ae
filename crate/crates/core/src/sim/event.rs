use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CallId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OperatorId(pub u32);

impl fmt::Display for CallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Arrival,
    Abandon,
    Answer,
    Hangup,
    DndOn,
    DndOff,
    ShiftStart,
    ShiftEnd,
    Purchase,
    /// Arrival of a customer's second contact; reuses the original call id.
    Callback,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "ARRIVAL",
            EventKind::Abandon => "ABANDON",
            EventKind::Answer => "ANSWER",
            EventKind::Hangup => "HANGUP",
            EventKind::DndOn => "DND_ON",
            EventKind::DndOff => "DND_OFF",
            EventKind::ShiftStart => "SHIFT_START",
            EventKind::ShiftEnd => "SHIFT_END",
            EventKind::Purchase => "PURCHASE",
            EventKind::Callback => "CALLBACK",
        }
    }

    /// Kinds that bring a contact into the system.
    pub fn is_contact(self) -> bool {
        matches!(self, EventKind::Arrival | EventKind::Callback)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ARRIVAL" => EventKind::Arrival,
            "ABANDON" => EventKind::Abandon,
            "ANSWER" => EventKind::Answer,
            "HANGUP" => EventKind::Hangup,
            "DND_ON" => EventKind::DndOn,
            "DND_OFF" => EventKind::DndOff,
            "SHIFT_START" => EventKind::ShiftStart,
            "SHIFT_END" => EventKind::ShiftEnd,
            "PURCHASE" => EventKind::Purchase,
            "CALLBACK" => EventKind::Callback,
            other => return Err(SimError::MalformedLog(format!("unknown event kind {other:?}"))),
        })
    }
}

/// One line of the simulation log. Times are whole seconds since the start
/// of day 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub timestamp_s: u64,
    pub kind: EventKind,
    pub call_id: Option<CallId>,
    pub operator_id: Option<OperatorId>,
    /// Toman; set only on purchases.
    pub amount: Option<u64>,
}

impl Event {
    pub fn day(&self) -> u32 {
        (self.timestamp_s / 86_400) as u32
    }
}

pub const EVENT_CSV_HEADER: &str = "timestamp_s,kind,call_id,operator_id,amount";

pub fn events_to_csv(events: &[Event]) -> String {
    let mut out = String::with_capacity(32 * (events.len() + 1));
    out.push_str(EVENT_CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<String>| v.unwrap_or_default();
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.timestamp_s,
            e.kind,
            opt(e.call_id.map(|c| c.to_string())),
            opt(e.operator_id.map(|o| o.to_string())),
            opt(e.amount.map(|a| a.to_string())),
        );
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<Event>, SimError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == EVENT_CSV_HEADER => {}
        _ => return Err(SimError::MalformedLog("missing event log header".into())),
    }
    let malformed = |n: usize, why: &str| SimError::MalformedLog(format!("line {}: {why}", n + 2));
    let mut events = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(n, "expected 5 fields"));
        }
        let opt_u64 = |s: &str| -> Result<Option<u64>, SimError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| malformed(n, "bad integer"))
            }
        };
        events.push(Event {
            timestamp_s: fields[0].parse().map_err(|_| malformed(n, "bad timestamp"))?,
            kind: fields[1].parse()?,
            call_id: opt_u64(fields[2])?.map(CallId),
            operator_id: opt_u64(fields[3])?
                .map(|v| u32::try_from(v).map(OperatorId).map_err(|_| malformed(n, "operator id too large")))
                .transpose()?,
            amount: opt_u64(fields[4])?,
        });
    }
    Ok(events)
}
