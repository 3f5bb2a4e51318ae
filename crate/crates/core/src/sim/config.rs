use serde::{Deserialize, Serialize};

use super::SimError;

/// Day index (mod 7) of the weekly holiday. Day 0 is a Monday, so this is Friday.
pub const HOLIDAY_WEEKDAY: u32 = 4;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

/// Parameters of the call-center simulation.
///
/// Read from flat `key = value` text; every key is a field name here and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub days: u32,
    pub arrival_rate_per_hour_working: f64,
    pub arrival_rate_per_hour_holiday: f64,
    pub operators_working_day: u32,
    pub operators_holiday: u32,
    /// Minutes from midnight.
    pub shift_start: u32,
    /// Minutes from midnight.
    pub shift_end: u32,
    /// Odd-numbered operators work the same shift shifted later by this much.
    pub shift_stagger_minutes: u32,
    pub service_mean_minutes: f64,
    /// Breaks per operator-hour.
    pub dnd_break_rate: f64,
    pub dnd_break_mean_minutes: f64,
    pub patience_mean_minutes: f64,
    pub p_buy_immediate: f64,
    pub p_defer: f64,
    pub callback_delay_mean_hours: f64,
    pub p_buy_on_callback: f64,
    pub p_new_service_on_callback: f64,
    /// Toman.
    pub sale_amount_mean: f64,
    /// Toman.
    pub sale_amount_spread: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            days: 61,
            arrival_rate_per_hour_working: 175.0,
            arrival_rate_per_hour_holiday: 105.0,
            operators_working_day: 19,
            operators_holiday: 13,
            shift_start: 8 * 60,
            shift_end: 16 * 60,
            shift_stagger_minutes: 4 * 60,
            service_mean_minutes: 2.5,
            dnd_break_rate: 0.5,
            dnd_break_mean_minutes: 5.0,
            patience_mean_minutes: 6.0,
            p_buy_immediate: 0.5,
            p_defer: 0.2,
            callback_delay_mean_hours: 10.0,
            p_buy_on_callback: 0.5,
            p_new_service_on_callback: 0.2,
            sale_amount_mean: 11_000.0,
            sale_amount_spread: 4_000.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = toml::from_str(text).map_err(|e| SimError::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidConfig(msg));
        let non_negative = [
            ("arrival_rate_per_hour_working", self.arrival_rate_per_hour_working),
            ("arrival_rate_per_hour_holiday", self.arrival_rate_per_hour_holiday),
            ("service_mean_minutes", self.service_mean_minutes),
            ("dnd_break_rate", self.dnd_break_rate),
            ("dnd_break_mean_minutes", self.dnd_break_mean_minutes),
            ("patience_mean_minutes", self.patience_mean_minutes),
            ("callback_delay_mean_hours", self.callback_delay_mean_hours),
            ("sale_amount_mean", self.sale_amount_mean),
            ("sale_amount_spread", self.sale_amount_spread),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return invalid(format!("{name} must be a finite non-negative number, got {value}"));
            }
        }
        let probabilities = [
            ("p_buy_immediate", self.p_buy_immediate),
            ("p_defer", self.p_defer),
            ("p_buy_on_callback", self.p_buy_on_callback),
            ("p_new_service_on_callback", self.p_new_service_on_callback),
        ];
        for (name, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return invalid(format!("{name} must lie in [0, 1], got {value}"));
            }
        }
        if self.p_buy_immediate + self.p_defer > 1.0 {
            return invalid("p_buy_immediate + p_defer must not exceed 1".into());
        }
        if self.p_buy_on_callback + self.p_new_service_on_callback > 1.0 {
            return invalid("p_buy_on_callback + p_new_service_on_callback must not exceed 1".into());
        }
        if self.days == 0 {
            return invalid("days must be positive".into());
        }
        if self.shift_end <= self.shift_start {
            return invalid("shift_end must be after shift_start".into());
        }
        if self.shift_stagger_minutes >= self.shift_end - self.shift_start {
            return invalid("shift_stagger_minutes must be shorter than the shift".into());
        }
        if self.shift_end + self.shift_stagger_minutes > MINUTES_PER_DAY {
            return invalid("the staggered shift must end by midnight".into());
        }
        Ok(())
    }

    pub fn is_holiday(&self, day: u32) -> bool {
        day % 7 == HOLIDAY_WEEKDAY
    }

    pub fn operators_on(&self, day: u32) -> u32 {
        if self.is_holiday(day) {
            self.operators_holiday
        } else {
            self.operators_working_day
        }
    }

    pub fn arrival_rate_on(&self, day: u32) -> f64 {
        if self.is_holiday(day) {
            self.arrival_rate_per_hour_holiday
        } else {
            self.arrival_rate_per_hour_working
        }
    }

    /// Size of the operator pool across all days.
    pub fn operator_pool(&self) -> u32 {
        self.operators_working_day.max(self.operators_holiday)
    }

    pub fn is_late_cohort(&self, operator: u32) -> bool {
        self.shift_stagger_minutes > 0 && operator % 2 == 1
    }

    /// Shift of `operator` on `day` in seconds since simulation start, if scheduled.
    pub fn shift_seconds(&self, operator: u32, day: u32) -> Option<(u64, u64)> {
        if operator >= self.operators_on(day) {
            return None;
        }
        let offset = if self.is_late_cohort(operator) { self.shift_stagger_minutes } else { 0 };
        let base = u64::from(day) * u64::from(MINUTES_PER_DAY) * 60;
        Some((base + u64::from(self.shift_start + offset) * 60, base + u64::from(self.shift_end + offset) * 60))
    }

    /// The span during which calls are accepted on `day`, in seconds.
    pub fn open_window(&self, day: u32) -> (u64, u64) {
        let base = u64::from(day) * u64::from(MINUTES_PER_DAY) * 60;
        let late_staffed = self.operators_on(day) >= 2 && self.shift_stagger_minutes > 0;
        let end = if late_staffed { self.shift_end + self.shift_stagger_minutes } else { self.shift_end };
        (base + u64::from(self.shift_start) * 60, base + u64::from(end) * 60)
    }
}
