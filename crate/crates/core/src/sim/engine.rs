use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

use super::aggregate::{aggregate_daily, DailyAggregate};
use super::attribution::{attribute_sale, CallOutcome, ServiceId, Suggestion};
use super::config::SimConfig;
use super::event::{CallId, Event, EventKind, OperatorId};
use super::SimError;

/// Number of distinct services operators can pitch.
pub const SERVICE_CATALOG: u32 = 4;

// Substream tags. Each process, call and operator-day draws from its own
// ChaCha stream so that changing one parameter only moves the draws it owns.
const STREAM_ARRIVALS: u64 = 1 << 60;
const STREAM_CALL: u64 = 2 << 60;
const STREAM_OPERATOR_DAY: u64 = 3 << 60;

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A hand-placed customer, for scenario tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScriptedCall {
    pub arrival_s: u64,
    /// Overrides the random callback delay if the customer defers.
    pub callback_delay_s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<Event>,
    pub aggregates: Vec<DailyAggregate>,
    pub outcomes: Vec<CallOutcome>,
}

/// Runs the seeded call-center simulation. Identical configs give identical output.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    let calls = generate_arrivals(config)
        .into_iter()
        .map(|arrival_s| ScriptedCall { arrival_s, callback_delay_s: None })
        .collect();
    Ok(Engine::new(config, calls).run())
}

/// Runs the simulation with a fixed list of customers instead of the arrival process.
pub fn run_scripted(config: &SimConfig, calls: &[ScriptedCall]) -> Result<SimOutput, SimError> {
    config.validate()?;
    let mut calls = calls.to_vec();
    calls.sort_by_key(|c| c.arrival_s);
    Ok(Engine::new(config, calls).run())
}

/// Poisson arrivals at the larger of the two day-type rates, thinned down
/// to the rate of each day's type, inside each day's open window.
fn generate_arrivals(config: &SimConfig) -> Vec<u64> {
    let max_rate = config.arrival_rate_per_hour_working.max(config.arrival_rate_per_hour_holiday);
    let mut arrivals = Vec::new();
    if max_rate <= 0.0 {
        return arrivals;
    }
    let mean_gap_s = 3600.0 / max_rate;
    for day in 0..config.days {
        let mut rng = substream(config.seed, STREAM_ARRIVALS | u64::from(day));
        let keep = config.arrival_rate_on(day) / max_rate;
        let (open, close) = config.open_window(day);
        let mut t = open as f64;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap * mean_gap_s;
            if t >= close as f64 {
                break;
            }
            let u: f64 = rng.random();
            if u < keep {
                arrivals.push(t.floor() as u64);
            }
        }
    }
    arrivals
}

fn exp_seconds(rng: &mut ChaCha8Rng, mean_s: f64) -> u64 {
    let e: f64 = Exp1.sample(rng);
    (e * mean_s).round() as u64
}

/// Truncated normal at 1 Toman, rounded to whole Toman.
fn sale_amount(rng: &mut ChaCha8Rng, mean: f64, spread: f64) -> u64 {
    if spread == 0.0 {
        return mean.round().max(1.0) as u64;
    }
    let normal = Normal::new(mean, spread).expect("spread validated finite and positive");
    for _ in 0..64 {
        let v = normal.sample(rng).round();
        if v >= 1.0 {
            return v as u64;
        }
    }
    1
}

/// Everything random about one customer, drawn up front in a fixed order.
#[derive(Debug, Clone)]
struct CallDraws {
    patience: [u64; 2],
    service: [u64; 2],
    decision: f64,
    callback_decision: f64,
    first_service: ServiceId,
    new_service: ServiceId,
    callback_delay: u64,
    amount: [u64; 2],
}

impl CallDraws {
    fn sample(config: &SimConfig, index: usize) -> Self {
        let mut rng = substream(config.seed, STREAM_CALL | index as u64);
        let patience_s = config.patience_mean_minutes * 60.0;
        let service_s = config.service_mean_minutes * 60.0;
        let patience = [exp_seconds(&mut rng, patience_s), exp_seconds(&mut rng, patience_s)];
        let service = [exp_seconds(&mut rng, service_s).max(1), exp_seconds(&mut rng, service_s).max(1)];
        let decision = rng.random();
        let callback_decision = rng.random();
        let first = rng.random_range(0..SERVICE_CATALOG);
        let new = (first + 1 + rng.random_range(0..SERVICE_CATALOG - 1)) % SERVICE_CATALOG;
        let callback_delay = exp_seconds(&mut rng, config.callback_delay_mean_hours * 3600.0);
        let amount = [
            sale_amount(&mut rng, config.sale_amount_mean, config.sale_amount_spread),
            sale_amount(&mut rng, config.sale_amount_mean, config.sale_amount_spread),
        ];
        Self {
            patience,
            service,
            decision,
            callback_decision,
            first_service: ServiceId(first),
            new_service: ServiceId(new),
            callback_delay,
            amount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Contact {
    Pending,
    Queued,
    InService,
    Abandoned,
    Done,
}

struct CallState {
    draws: CallDraws,
    contact: Contact,
    /// The current contact is the callback.
    second: bool,
    callback_override: Option<u64>,
    outcome: CallOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Off,
    Idle,
    Busy,
    Dnd,
}

struct OperatorState {
    status: Status,
    idle_since: u64,
    /// Bumped at shift end to invalidate outstanding break timers.
    token: u64,
    pending_break: bool,
    /// Shift ended mid-call; leave at hangup.
    leaving: bool,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    ShiftStart { op: usize, day: u32 },
    ShiftEnd { op: usize },
    Close,
    Contact { call: usize, second: bool },
    Abandon { call: usize, second: bool },
    Hangup { op: usize, call: usize },
    BreakDue { op: usize, token: u64 },
    BreakEnd { op: usize, token: u64 },
}

struct Engine<'a> {
    config: &'a SimConfig,
    now: u64,
    seq: u64,
    // (time, insertion order) makes the agenda a total order.
    agenda: BinaryHeap<Reverse<(u64, u64, Action)>>,
    log: Vec<Event>,
    calls: Vec<CallState>,
    operators: Vec<OperatorState>,
    queue: VecDeque<usize>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, script: Vec<ScriptedCall>) -> Self {
        let calls = script
            .iter()
            .enumerate()
            .map(|(i, s)| CallState {
                draws: CallDraws::sample(config, i),
                contact: Contact::Pending,
                second: false,
                callback_override: s.callback_delay_s,
                outcome: CallOutcome::new(CallId(i as u64)),
            })
            .collect();
        let operators = (0..config.operator_pool())
            .map(|_| OperatorState {
                status: Status::Off,
                idle_since: 0,
                token: 0,
                pending_break: false,
                leaving: false,
                rng: substream(config.seed, STREAM_OPERATOR_DAY),
            })
            .collect();
        let mut engine = Self {
            config,
            now: 0,
            seq: 0,
            agenda: BinaryHeap::new(),
            log: Vec::new(),
            calls,
            operators,
            queue: VecDeque::new(),
        };
        for day in 0..config.days {
            for op in 0..config.operator_pool() {
                if let Some((start, end)) = config.shift_seconds(op, day) {
                    engine.schedule(start, Action::ShiftStart { op: op as usize, day });
                    engine.schedule(end, Action::ShiftEnd { op: op as usize });
                }
            }
            engine.schedule(config.open_window(day).1, Action::Close);
        }
        for (call, s) in script.iter().enumerate() {
            engine.schedule(s.arrival_s, Action::Contact { call, second: false });
        }
        engine
    }

    fn schedule(&mut self, time: u64, action: Action) {
        self.agenda.push(Reverse((time, self.seq, action)));
        self.seq += 1;
    }

    fn emit(&mut self, kind: EventKind, call: Option<usize>, op: Option<usize>, amount: Option<u64>) {
        self.log.push(Event {
            timestamp_s: self.now,
            kind,
            call_id: call.map(|c| CallId(c as u64)),
            operator_id: op.map(|o| OperatorId(o as u32)),
            amount,
        });
    }

    fn run(mut self) -> SimOutput {
        while let Some(Reverse((time, _, action))) = self.agenda.pop() {
            self.now = time;
            match action {
                Action::ShiftStart { op, day } => self.shift_start(op, day),
                Action::ShiftEnd { op } => self.shift_end(op),
                Action::Close => self.close(),
                Action::Contact { call, second } => self.contact(call, second),
                Action::Abandon { call, second } => self.abandon(call, second),
                Action::Hangup { op, call } => self.hangup(op, call),
                Action::BreakDue { op, token } => self.break_due(op, token),
                Action::BreakEnd { op, token } => self.break_end(op, token),
            }
        }
        let mut aggregates = aggregate_daily(&self.log);
        while aggregates.len() < self.config.days as usize {
            aggregates.push(DailyAggregate::empty(aggregates.len() as u32));
        }
        SimOutput { events: self.log, aggregates, outcomes: self.calls.into_iter().map(|c| c.outcome).collect() }
    }

    fn shift_start(&mut self, op: usize, day: u32) {
        let stream = STREAM_OPERATOR_DAY | ((op as u64) << 32) | u64::from(day);
        let o = &mut self.operators[op];
        o.rng = substream(self.config.seed, stream);
        o.status = Status::Idle;
        o.idle_since = self.now;
        o.pending_break = false;
        o.leaving = false;
        self.emit(EventKind::ShiftStart, None, Some(op), None);
        self.schedule_break(op);
        self.dispatch();
    }

    fn shift_end(&mut self, op: usize) {
        let o = &mut self.operators[op];
        o.token += 1;
        o.pending_break = false;
        match o.status {
            Status::Busy => o.leaving = true,
            Status::Dnd => {
                o.status = Status::Off;
                self.emit(EventKind::DndOff, None, Some(op), None);
                self.emit(EventKind::ShiftEnd, None, Some(op), None);
            }
            Status::Idle => {
                o.status = Status::Off;
                self.emit(EventKind::ShiftEnd, None, Some(op), None);
            }
            Status::Off => {}
        }
    }

    /// Callers still waiting when the center closes hang up.
    fn close(&mut self) {
        while let Some(call) = self.queue.pop_front() {
            if self.calls[call].contact == Contact::Queued {
                self.drop_contact(call);
            }
        }
    }

    fn contact(&mut self, call: usize, second: bool) {
        let c = &mut self.calls[call];
        c.second = second;
        c.contact = Contact::Queued;
        let patience = c.draws.patience[usize::from(second)];
        let kind = if second { EventKind::Callback } else { EventKind::Arrival };
        self.emit(kind, Some(call), None, None);
        self.queue.push_back(call);
        self.schedule(self.now + patience, Action::Abandon { call, second });
        self.dispatch();
    }

    fn abandon(&mut self, call: usize, second: bool) {
        let c = &self.calls[call];
        if c.second == second && c.contact == Contact::Queued {
            self.drop_contact(call);
        }
    }

    fn drop_contact(&mut self, call: usize) {
        let c = &mut self.calls[call];
        c.contact = Contact::Abandoned;
        if !c.second {
            c.outcome.abandoned = true;
        }
        self.emit(EventKind::Abandon, Some(call), None, None);
    }

    /// FIFO queue, longest-idle operator first (ties to the lowest id).
    fn dispatch(&mut self) {
        loop {
            while self.queue.front().is_some_and(|&c| self.calls[c].contact != Contact::Queued) {
                self.queue.pop_front();
            }
            let Some(&call) = self.queue.front() else { return };
            let free = self
                .operators
                .iter()
                .enumerate()
                .filter(|(_, o)| o.status == Status::Idle)
                .min_by_key(|(i, o)| (o.idle_since, *i))
                .map(|(i, _)| i);
            let Some(op) = free else { return };
            self.queue.pop_front();
            self.answer(call, op);
        }
    }

    fn answer(&mut self, call: usize, op: usize) {
        self.operators[op].status = Status::Busy;
        let c = &mut self.calls[call];
        c.contact = Contact::InService;
        let operator = OperatorId(op as u32);
        if c.second {
            c.outcome.callback_operator = Some(operator);
        } else {
            c.outcome.answering_operator = Some(operator);
            c.outcome.suggested_service = Some(c.draws.first_service);
        }
        let duration = c.draws.service[usize::from(c.second)];
        self.emit(EventKind::Answer, Some(call), Some(op), None);
        self.schedule(self.now + duration, Action::Hangup { op, call });
    }

    fn hangup(&mut self, op: usize, call: usize) {
        let config = self.config;
        let c = &mut self.calls[call];
        c.contact = Contact::Done;
        let operator = OperatorId(op as u32);
        let mut sale = None;
        let mut callback_at = None;
        if !c.second {
            let u = c.draws.decision;
            if u < config.p_buy_immediate {
                let first = Suggestion { service: c.draws.first_service, operator };
                sale = Some((attribute_sale(first, None), first.service, c.draws.amount[0]));
            } else if u < config.p_buy_immediate + config.p_defer {
                c.outcome.deferred = true;
                let delay = c.callback_override.unwrap_or(c.draws.callback_delay);
                callback_at = Some(self.now + delay);
            }
        } else {
            let first_operator = c.outcome.answering_operator.expect("callbacks follow an answered call");
            let first = Suggestion { service: c.draws.first_service, operator: first_operator };
            let v = c.draws.callback_decision;
            let bought = if v < config.p_buy_on_callback {
                Some(c.draws.first_service)
            } else if v < config.p_buy_on_callback + config.p_new_service_on_callback {
                Some(c.draws.new_service)
            } else {
                None
            };
            if let Some(service) = bought {
                let credited = attribute_sale(first, Some(Suggestion { service, operator }));
                sale = Some((credited, service, c.draws.amount[1]));
            }
        }

        if let Some((credited, service, amount)) = sale {
            let o = &mut c.outcome;
            o.purchased = true;
            o.purchased_service = Some(service);
            o.attributed_operator = Some(credited);
            o.purchase_time = Some(self.now);
            o.amount = Some(amount);
            self.emit(EventKind::Purchase, Some(call), Some(credited.0 as usize), Some(amount));
        }
        self.emit(EventKind::Hangup, Some(call), Some(op), None);

        if let Some(t) = callback_at.and_then(|t| self.next_open_time(t)) {
            self.schedule(t, Action::Contact { call, second: true });
        }
        self.release(op);
    }

    fn release(&mut self, op: usize) {
        let o = &mut self.operators[op];
        if o.leaving {
            o.leaving = false;
            o.status = Status::Off;
            self.emit(EventKind::ShiftEnd, None, Some(op), None);
        } else if o.pending_break {
            o.pending_break = false;
            self.start_break(op);
        } else {
            o.status = Status::Idle;
            o.idle_since = self.now;
            self.dispatch();
        }
    }

    fn schedule_break(&mut self, op: usize) {
        let rate = self.config.dnd_break_rate;
        if rate <= 0.0 {
            return;
        }
        let o = &mut self.operators[op];
        let gap = exp_seconds(&mut o.rng, 3600.0 / rate).max(1);
        let token = o.token;
        self.schedule(self.now + gap, Action::BreakDue { op, token });
    }

    fn break_due(&mut self, op: usize, token: u64) {
        let o = &mut self.operators[op];
        if o.token != token {
            return;
        }
        match o.status {
            Status::Idle => self.start_break(op),
            Status::Busy if !o.leaving => o.pending_break = true,
            _ => {}
        }
    }

    fn start_break(&mut self, op: usize) {
        let mean_s = self.config.dnd_break_mean_minutes * 60.0;
        let o = &mut self.operators[op];
        o.status = Status::Dnd;
        let duration = exp_seconds(&mut o.rng, mean_s);
        let token = o.token;
        self.emit(EventKind::DndOn, None, Some(op), None);
        self.schedule(self.now + duration, Action::BreakEnd { op, token });
    }

    fn break_end(&mut self, op: usize, token: u64) {
        let o = &mut self.operators[op];
        if o.token != token || o.status != Status::Dnd {
            return;
        }
        o.status = Status::Idle;
        o.idle_since = self.now;
        self.emit(EventKind::DndOff, None, Some(op), None);
        self.schedule_break(op);
        self.dispatch();
    }

    /// Earliest time at or after `t` when the center takes calls, within the horizon.
    fn next_open_time(&self, t: u64) -> Option<u64> {
        let mut day = (t / 86_400) as u32;
        while day < self.config.days {
            let (open, close) = self.config.open_window(day);
            if self.config.operators_on(day) > 0 {
                if t < open {
                    return Some(open);
                }
                if t < close {
                    return Some(t);
                }
            }
            day += 1;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_config() -> SimConfig {
        SimConfig {
            days: 1,
            operators_working_day: 2,
            operators_holiday: 2,
            dnd_break_rate: 0.0,
            patience_mean_minutes: 10_000.0,
            service_mean_minutes: 2.0,
            p_buy_immediate: 0.0,
            p_defer: 1.0,
            p_buy_on_callback: 1.0,
            p_new_service_on_callback: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn deferred_purchase_after_shift_end_is_an_absent_sale() {
        let config = quiet_config();
        let arrival = u64::from(config.shift_end - 10) * 60;
        let out =
            run_scripted(&config, &[ScriptedCall { arrival_s: arrival, callback_delay_s: Some(30 * 60) }]).unwrap();

        let outcome = &out.outcomes[0];
        assert_eq!(outcome.answering_operator, Some(OperatorId(0)));
        assert_eq!(outcome.callback_operator, Some(OperatorId(1)));
        assert_eq!(outcome.attributed_operator, Some(OperatorId(0)));
        let purchases: Vec<&Event> = out.events.iter().filter(|e| e.kind == EventKind::Purchase).collect();
        assert_eq!(purchases.len(), 1);
        let amount = purchases[0].amount.unwrap();
        assert_eq!(out.aggregates.len(), 1);
        let day = &out.aggregates[0];
        assert_eq!((day.responded, day.abandoned), (2, 0));
        assert_eq!((day.absent_sales, day.present_sales), (amount, 0));
    }

    #[test]
    fn callback_buying_new_service_stays_present() {
        let config = SimConfig { p_buy_on_callback: 0.0, p_new_service_on_callback: 1.0, ..quiet_config() };
        let arrival = u64::from(config.shift_end - 10) * 60;
        let out =
            run_scripted(&config, &[ScriptedCall { arrival_s: arrival, callback_delay_s: Some(30 * 60) }]).unwrap();
        let o = &out.outcomes[0];
        assert_eq!(o.attributed_operator, Some(OperatorId(1)));
        assert_ne!(o.purchased_service, o.suggested_service);
        assert_eq!(out.aggregates[0].absent_sales, 0);
        assert!(out.aggregates[0].present_sales > 0);
    }

    #[test]
    fn callback_after_close_waits_for_next_opening() {
        let config = SimConfig { days: 2, ..quiet_config() };
        let arrival = u64::from(config.shift_start + 30) * 60;
        let delay = 20 * 3600;
        let out = run_scripted(&config, &[ScriptedCall { arrival_s: arrival, callback_delay_s: Some(delay) }]).unwrap();
        let callback = out.events.iter().find(|e| e.kind == EventKind::Callback).unwrap();
        assert_eq!(callback.timestamp_s, 86_400 + u64::from(config.shift_start) * 60);
    }

    #[test]
    fn callbacks_beyond_horizon_are_dropped() {
        let config = quiet_config();
        let arrival = u64::from(config.shift_start + 30) * 60;
        let out =
            run_scripted(&config, &[ScriptedCall { arrival_s: arrival, callback_delay_s: Some(30 * 3600) }]).unwrap();
        assert!(out.outcomes[0].deferred);
        assert!(!out.outcomes[0].purchased);
        assert!(out.events.iter().all(|e| e.kind != EventKind::Callback));
    }

    #[test]
    fn waiting_callers_are_dropped_at_close() {
        let config = SimConfig { operators_working_day: 0, operators_holiday: 0, ..quiet_config() };
        let out = run_scripted(&config, &[ScriptedCall { arrival_s: 9 * 3600, callback_delay_s: None }]).unwrap();
        assert!(out.outcomes[0].abandoned);
        let abandon = out.events.iter().find(|e| e.kind == EventKind::Abandon).unwrap();
        assert_eq!(abandon.timestamp_s, config.open_window(0).1);
    }

    #[test]
    fn identical_seeds_replay_identically() {
        let config = SimConfig { days: 3, seed: 9, ..Default::default() };
        assert_eq!(run_simulation(&config).unwrap(), run_simulation(&config).unwrap());
        let other = SimConfig { seed: 10, ..config.clone() };
        assert_ne!(run_simulation(&config).unwrap().events, run_simulation(&other).unwrap().events);
    }

    #[test]
    fn no_arrivals_means_empty_days() {
        let config = SimConfig {
            days: 8,
            arrival_rate_per_hour_working: 0.0,
            arrival_rate_per_hour_holiday: 0.0,
            ..Default::default()
        };
        let out = run_simulation(&config).unwrap();
        assert_eq!(out.aggregates.len(), 8);
        for (i, day) in out.aggregates.iter().enumerate() {
            assert_eq!(*day, DailyAggregate::empty(i as u32));
        }
    }

    #[test]
    fn sale_amounts_are_positive_whole_toman() {
        let mut rng = substream(1, 0);
        for _ in 0..1000 {
            assert!(sale_amount(&mut rng, 10.0, 50.0) >= 1);
        }
        assert_eq!(sale_amount(&mut rng, 0.0, 0.0), 1);
        assert_eq!(sale_amount(&mut rng, 11_000.4, 0.0), 11_000);
    }
}
