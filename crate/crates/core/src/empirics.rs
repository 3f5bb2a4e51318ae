//! Daily sales table ingestion and the pooled absent-operator share q.
//!
//! The table has one row per day with answered and abandoned call counts and
//! the Toman value of sales credited to absent and present operators. q is
//! the absent share of total sales value, pooled over days.

use std::fmt::{self, Write as _};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::hna::{self, ByOutcome, HardyWitness, SettingPair};

/// Daily call and sales figures, 22 Aug to 21 Oct 2016, as published.
pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmpiricsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: day {day} does not come after the previous row")]
    NonMonotonicDates { line: u64, day: String },
    #[error("no sales in the selected rows")]
    NoSales,
    #[error("bootstrap needs at least 100 resamples and a level in (0, 1)")]
    InvalidBootstrap,
    #[error(
        "count weighting is unavailable: the table records sales only as Toman totals per day, \
         not as numbers of sales, so q can only be weighted by amount"
    )]
    CountWeightUnavailable,
}

/// The first column of a row: a calendar date or a simulated day index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayLabel {
    Date(NaiveDate),
    Index(u32),
}

impl fmt::Display for DayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DayLabel::Date(d) => write!(f, "{}", d.format(DATE_FORMAT)),
            DayLabel::Index(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for DayLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DayLabel::Date(_) => s.serialize_str(&self.to_string()),
            DayLabel::Index(i) => s.serialize_u32(*i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayColumn {
    /// ISO dates, as in the published table.
    Date,
    /// Integer day indices, as written by the simulator.
    Day,
}

impl DayColumn {
    fn name(self) -> &'static str {
        match self {
            DayColumn::Date => "date",
            DayColumn::Day => "day",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DailyRecord {
    pub day: DayLabel,
    pub responded: u64,
    pub abandoned: u64,
    pub absent_sales: u64,
    pub present_sales: u64,
    /// Communications were interrupted on this day.
    pub interrupted: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub responded: u64,
    pub abandoned: u64,
    pub absent_sales: u64,
    pub present_sales: u64,
}

impl Totals {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a DailyRecord>) -> Self {
        rows.into_iter().fold(Self::default(), |t, r| Totals {
            responded: t.responded + r.responded,
            abandoned: t.abandoned + r.abandoned,
            absent_sales: t.absent_sales + r.absent_sales,
            present_sales: t.present_sales + r.present_sales,
        })
    }

    fn columns(&self) -> [(&'static str, u64); 4] {
        [
            ("responded", self.responded),
            ("abandoned", self.abandoned),
            ("absent_sales", self.absent_sales),
            ("present_sales", self.present_sales),
        ]
    }

    /// Absent share of total sales value.
    pub fn q(&self) -> Result<f64, EmpiricsError> {
        let absent = u128::from(self.absent_sales);
        let total = absent + u128::from(self.present_sales);
        if total == 0 {
            return Err(EmpiricsError::NoSales);
        }
        Ok(absent as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub day_column: DayColumn,
    pub rows: Vec<DailyRecord>,
    /// The trailing SUM row, if the file has one.
    pub declared_totals: Option<Totals>,
}

impl Dataset {
    pub fn included_rows(&self, exclude_interrupted: bool) -> impl Iterator<Item = &DailyRecord> {
        self.rows.iter().filter(move |r| !(exclude_interrupted && r.interrupted))
    }

    pub fn without_interrupted(&self) -> Dataset {
        Dataset {
            day_column: self.day_column,
            rows: self.included_rows(true).cloned().collect(),
            declared_totals: None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            format!("{},responded,abandoned,absent_sales,present_sales,interrupted\n", self.day_column.name());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.day,
                r.responded,
                r.abandoned,
                r.absent_sales,
                r.present_sales,
                u8::from(r.interrupted)
            );
        }
        if let Some(t) = &self.declared_totals {
            let _ = writeln!(out, "SUM,{},{},{},{},", t.responded, t.abandoned, t.absent_sales, t.present_sales);
        }
        out
    }
}

/// The bundled published table.
pub fn bundled_table() -> Dataset {
    parse_table(TABLE1_CSV).expect("bundled table parses")
}

/// Parses `date|day,responded,abandoned,absent_sales,present_sales[,interrupted]`
/// with an optional final `SUM` row. Integers carry no thousands separators.
pub fn parse_table(text: &str) -> Result<Dataset, EmpiricsError> {
    if text.trim().is_empty() {
        return Err(EmpiricsError::EmptyInput);
    }
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| EmpiricsError::BadHeader(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let day_column = match names.first() {
        Some(&"date") => DayColumn::Date,
        Some(&"day") => DayColumn::Day,
        _ => return Err(EmpiricsError::BadHeader(format!("first column must be date or day, got {names:?}"))),
    };
    let expected = ["responded", "abandoned", "absent_sales", "present_sales"];
    let has_flag = match &names[1..] {
        rest if rest == expected => false,
        [a, b, c, d, "interrupted"] if [*a, *b, *c, *d] == expected => true,
        _ => return Err(EmpiricsError::BadHeader(format!("unexpected columns {names:?}"))),
    };
    let width = if has_flag { 6 } else { 5 };

    let mut rows: Vec<DailyRecord> = Vec::new();
    let mut declared_totals = None;
    for record in reader.records() {
        let record = record.map_err(|e| EmpiricsError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |reason: String| EmpiricsError::MalformedRow { line, reason };
        if declared_totals.is_some() {
            return Err(malformed("rows after the SUM row".into()));
        }
        if record.len() != width && !(record.len() == 5 && width == 6) {
            return Err(malformed(format!("expected {width} fields, got {}", record.len())));
        }
        let count = |i: usize| -> Result<u64, EmpiricsError> {
            let field = &record[i];
            field
                .parse::<u64>()
                .map_err(|_| malformed(format!("field {} is not a non-negative integer: {field:?}", i + 1)))
        };
        let values = [count(1)?, count(2)?, count(3)?, count(4)?];

        if &record[0] == "SUM" {
            declared_totals = Some(Totals {
                responded: values[0],
                abandoned: values[1],
                absent_sales: values[2],
                present_sales: values[3],
            });
            continue;
        }

        let day = match day_column {
            DayColumn::Date => NaiveDate::parse_from_str(&record[0], DATE_FORMAT)
                .map(DayLabel::Date)
                .map_err(|_| malformed(format!("bad date {:?}", &record[0])))?,
            DayColumn::Day => record[0]
                .parse()
                .map(DayLabel::Index)
                .map_err(|_| malformed(format!("bad day index {:?}", &record[0])))?,
        };
        let interrupted = match record.get(5).unwrap_or("") {
            "" | "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(malformed(format!("bad interrupted flag {other:?}"))),
        };
        if rows.last().is_some_and(|prev| prev.day >= day) {
            return Err(EmpiricsError::NonMonotonicDates { line, day: day.to_string() });
        }
        rows.push(DailyRecord {
            day,
            responded: values[0],
            abandoned: values[1],
            absent_sales: values[2],
            present_sales: values[3],
            interrupted,
        });
    }
    if rows.is_empty() {
        return Err(EmpiricsError::EmptyInput);
    }
    Ok(Dataset { day_column, rows, declared_totals })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    NoDeclaredTotals,
    TotalMismatch { column: &'static str, declared: u64, computed: u64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NoDeclaredTotals => f.write_str("no declared totals"),
            Finding::TotalMismatch { column, declared, computed } => {
                let delta = i128::from(*computed) - i128::from(*declared);
                write!(f, "{column}: declared {declared}, rows sum to {computed} (delta {delta:+})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub findings: Vec<Finding>,
    pub interrupted: Vec<DayLabel>,
}

/// Audits the declared SUM row against the rows. Never fails.
pub fn validate_dataset(ds: &Dataset) -> Validation {
    let computed = Totals::of(&ds.rows);
    let findings = match &ds.declared_totals {
        None => vec![Finding::NoDeclaredTotals],
        Some(declared) => declared
            .columns()
            .into_iter()
            .zip(computed.columns())
            .filter(|((_, d), (_, c))| d != c)
            .map(|((column, declared), (_, computed))| Finding::TotalMismatch { column, declared, computed })
            .collect(),
    };
    let interrupted = ds.rows.iter().filter(|r| r.interrupted).map(|r| r.day).collect();
    Validation { findings, interrupted }
}

/// Pooled q = sum(absent) / (sum(absent) + sum(present)) over the included rows.
pub fn compute_q(ds: &Dataset, exclude_interrupted: bool) -> Result<f64, EmpiricsError> {
    Totals::of(ds.included_rows(exclude_interrupted)).q()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayQ {
    pub day: DayLabel,
    /// `None` when the day had no sales.
    pub q: Option<f64>,
}

pub fn per_day_q(ds: &Dataset) -> Vec<(DayLabel, Result<f64, EmpiricsError>)> {
    ds.rows.iter().map(|r| (r.day, Totals::of([r]).q())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub resamples: usize,
}

/// Percentile bootstrap over days: each resample draws as many rows as the
/// dataset has, with replacement, and recomputes pooled q. Resamples with no
/// sales are redrawn, up to `10 * resamples` draws in total.
pub fn bootstrap_ci(
    ds: &Dataset,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval, EmpiricsError> {
    if resamples < 100 || !(level > 0.0 && level < 1.0) {
        return Err(EmpiricsError::InvalidBootstrap);
    }
    let n = ds.rows.len();
    if n == 0 {
        return Err(EmpiricsError::EmptyInput);
    }
    let mut budget = 10 * resamples;
    let mut estimates = Vec::with_capacity(resamples);
    for i in 0..resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        loop {
            if budget == 0 {
                return Err(EmpiricsError::NoSales);
            }
            budget -= 1;
            let totals = Totals::of((0..n).map(|_| &ds.rows[rng.random_range(0..n)]));
            if let Ok(q) = totals.q() {
                estimates.push(q);
                break;
            }
        }
    }
    estimates.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval { low: quantile(&estimates, tail), high: quantile(&estimates, 1.0 - tail), level, resamples })
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weight {
    #[default]
    Amount,
    Count,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub exclude_interrupted: bool,
    pub weight: Weight,
    /// Number of bootstrap resamples, if a CI is wanted.
    pub bootstrap: Option<usize>,
    pub level: f64,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { exclude_interrupted: false, weight: Weight::Amount, bootstrap: None, level: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub q: f64,
    pub per_day_q: Vec<DayQ>,
    pub totals: Totals,
    pub ci: Option<ConfidenceInterval>,
    pub findings: Vec<String>,
    pub interrupted_days: Vec<DayLabel>,
    pub excluded_interrupted: bool,
    /// The first three Hardy probabilities are structural zeros here.
    pub witness: HardyWitness,
    pub caveats: Vec<String>,
}

const SALES_CONDITIONED_CAVEAT: &str = "q is the absent-operator share of sales value: it is conditioned on a sale \
     having happened, not estimated over all calls";
const STRUCTURAL_ZEROS_CAVEAT: &str = "p1, p2 and p3 cannot be estimated from daily totals; they are zero by \
     construction (no answer after abandonment, no answer by an absent operator, no purchase without an answer)";

/// Validate, compute pooled and per-day q, and optionally bootstrap a CI.
pub fn analyze(ds: &Dataset, options: &AnalysisOptions) -> Result<AnalysisReport, EmpiricsError> {
    if options.weight == Weight::Count {
        return Err(EmpiricsError::CountWeightUnavailable);
    }
    let validation = validate_dataset(ds);
    let selected = if options.exclude_interrupted { ds.without_interrupted() } else { ds.clone() };
    let totals = Totals::of(&selected.rows);
    let q = totals.q()?;
    let per_day = per_day_q(&selected).into_iter().map(|(day, q)| DayQ { day, q: q.ok() }).collect();
    let ci = options
        .bootstrap
        .map(|resamples| bootstrap_ci(&selected, resamples, options.level, options.seed))
        .transpose()?;
    Ok(AnalysisReport {
        q,
        per_day_q: per_day,
        totals,
        ci,
        findings: validation.findings.iter().map(ToString::to_string).collect(),
        interrupted_days: validation.interrupted,
        excluded_interrupted: options.exclude_interrupted,
        witness: structural_witness(&totals),
        caveats: vec![SALES_CONDITIONED_CAVEAT.to_string(), STRUCTURAL_ZEROS_CAVEAT.to_string()],
    })
}

/// Hardy witness with the three constraint cells held at exactly zero and
/// q taken from the sales split.
pub fn structural_witness(totals: &Totals) -> HardyWitness {
    let minus_minus = ByOutcome([0, 0, 0, 1]);
    let counts = SettingPair::ALL
        .into_iter()
        .map(|s| {
            if s == SettingPair::from_numbers(2, 2).expect("valid pair") {
                (s, ByOutcome([totals.absent_sales, 0, 0, totals.present_sales]))
            } else {
                (s, minus_minus)
            }
        })
        .collect();
    match hna::build_distribution(&counts) {
        Ok(dist) => hna::hardy_q(&dist, 0.0).expect("zero tolerance is valid"),
        // No sales at all: nothing to witness.
        Err(_) => HardyWitness::new(0.0, 0.0, 0.0, 0.0, 0.0).expect("zero tolerance is valid"),
    }
}

impl AnalysisReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "q = {:.6}", self.q);
        let t = &self.totals;
        let _ = writeln!(
            out,
            "totals: responded {}, abandoned {}, absent sales {} Toman, present sales {} Toman",
            t.responded, t.abandoned, t.absent_sales, t.present_sales
        );
        let _ = writeln!(
            out,
            "witness: p1 = {}, p2 = {}, p3 = {}, q = {:.6} -> {}",
            self.witness.p1, self.witness.p2, self.witness.p3, self.witness.q, self.witness.verdict
        );
        if let Some(ci) = &self.ci {
            let _ = writeln!(
                out,
                "{:.0}% bootstrap CI ({} resamples): [{:.6}, {:.6}]",
                ci.level * 100.0,
                ci.resamples,
                ci.low,
                ci.high
            );
        }
        let days_with_q: Vec<f64> = self.per_day_q.iter().filter_map(|d| d.q).collect();
        if let (Some(lo), Some(hi)) =
            (days_with_q.iter().copied().reduce(f64::min), days_with_q.iter().copied().reduce(f64::max))
        {
            let _ = writeln!(out, "per-day q: {} days, min {:.6}, max {:.6}", self.per_day_q.len(), lo, hi);
        }
        if !self.interrupted_days.is_empty() {
            let days: Vec<String> = self.interrupted_days.iter().map(ToString::to_string).collect();
            let verb = if self.excluded_interrupted { "excluded" } else { "included" };
            let _ = writeln!(out, "interrupted days ({verb}): {}", days.join(", "));
        }
        if self.findings.is_empty() {
            let _ = writeln!(out, "declared totals match the rows");
        }
        for f in &self.findings {
            let _ = writeln!(out, "finding: {f}");
        }
        for c in &self.caveats {
            let _ = writeln!(out, "note: {c}");
        }
        out
    }
}
