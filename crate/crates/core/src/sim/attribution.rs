//! Who gets credit for a sale, and how a finished call maps onto the four
//! ±1 events.

use serde::Serialize;

use super::event::{CallId, OperatorId};
use crate::hna::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ServiceId(pub u32);

/// A service pitched to the customer by an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Suggestion {
    pub service: ServiceId,
    pub operator: OperatorId,
}

/// Credits a sale to the operator who convinced the customer.
///
/// `callback` is `None` for a purchase on the first call. On a callback it is
/// the service bought and the operator who took the second call: buying the
/// originally pitched service credits the first operator, buying a service
/// newly pitched on the callback credits the second.
pub fn attribute_sale(first: Suggestion, callback: Option<Suggestion>) -> OperatorId {
    match callback {
        Some(second) if second.service != first.service => second.operator,
        _ => first.operator,
    }
}

/// The life of one customer across at most two contacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallOutcome {
    pub call_id: CallId,
    /// The first contact ended before any operator answered.
    pub abandoned: bool,
    pub answering_operator: Option<OperatorId>,
    pub suggested_service: Option<ServiceId>,
    pub deferred: bool,
    /// Operator who answered the callback, if one happened and was answered.
    pub callback_operator: Option<OperatorId>,
    pub purchased: bool,
    pub purchased_service: Option<ServiceId>,
    pub attributed_operator: Option<OperatorId>,
    /// Seconds since simulation start.
    pub purchase_time: Option<u64>,
    pub amount: Option<u64>,
}

impl CallOutcome {
    pub fn new(call_id: CallId) -> Self {
        Self {
            call_id,
            abandoned: false,
            answering_operator: None,
            suggested_service: None,
            deferred: false,
            callback_operator: None,
            purchased: false,
            purchased_service: None,
            attributed_operator: None,
            purchase_time: None,
            amount: None,
        }
    }

    /// The operator whose status defines b1 and b2 for this call.
    pub fn reference_operator(&self) -> Option<OperatorId> {
        if self.purchased {
            self.attributed_operator
        } else {
            self.answering_operator
        }
    }
}

/// Status of the reference operator at the reference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftContext {
    pub on_shift: bool,
    /// Handling a call (not idle, not in DND, not off shift).
    pub responding: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventAssignment {
    pub a1: Option<Outcome>,
    pub a2: Option<Outcome>,
    pub b1: Option<Outcome>,
    pub b2: Option<Outcome>,
}

fn sign(flag: bool) -> Outcome {
    if flag {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Maps a terminated call onto (a1, a2, b1, b2).
///
/// a1 = +1 iff the caller abandoned before an answer; a2 = +1 iff a purchase
/// happened. b1 and b2 describe the reference operator (the credited one for
/// a purchase, else the one who answered) at the reference time (purchase
/// time, else answer time): b1 = +1 while responding, b2 = +1 while off shift.
/// Abandoned calls have no operator, so b1 and b2 are unmeasured.
pub fn classify_event(outcome: &CallOutcome, context: Option<ShiftContext>) -> EventAssignment {
    let a1 = Some(sign(outcome.abandoned));
    let a2 = Some(sign(outcome.purchased));
    let (b1, b2) = match (outcome.abandoned, context) {
        (false, Some(ctx)) => (Some(sign(ctx.responding)), Some(sign(!ctx.on_shift))),
        _ => (None, None),
    };
    EventAssignment { a1, a2, b1, b2 }
}
