//! Hardy's four-probability framework.
//!
//! Two parties each choose one of two binary measurements. The argument is
//! carried by four joint probabilities:
//!
//! ```text
//! p1 = Pr(a1 = +1, b1 = +1)    constrained to 0
//! p2 = Pr(a1 = -1, b2 = +1)    constrained to 0
//! p3 = Pr(a2 = +1, b1 = -1)    constrained to 0
//! q  = Pr(a2 = +1, b2 = +1)
//! ```
//!
//! Any local-realistic model with `p1 = p2 = p3 = 0` has `q = 0`;
//! [`lhv_max_q`] proves that by exhaustive enumeration in exact arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

/// Default tolerance for distributions computed from an exact model.
pub const DEFAULT_TOL: f64 = 1e-9;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HnaError {
    #[error("setting pair {0} has zero total count")]
    AllZeroCounts(SettingPair),
    #[error("expected counts for all 4 setting pairs, got {found}")]
    MissingSetting { found: usize },
    #[error("probabilities for setting pair {setting} sum to {sum}, not 1")]
    NotNormalized { setting: SettingPair, sum: f64 },
    #[error("probability {value} for setting pair {setting} is outside [0, 1]")]
    OutOfRange { setting: SettingPair, value: f64 },
    #[error("tolerance must be a non-negative finite number, got {0}")]
    InvalidTolerance(f64),
}

/// A ±1 measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(value: i8) -> Option<Self> {
        match value {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Which of the two measurements a party performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Setting {
    One,
    Two,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::One, Setting::Two];

    pub fn number(self) -> u8 {
        match self {
            Setting::One => 1,
            Setting::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Setting::One),
            2 => Some(Setting::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SettingPair {
    pub alice: Setting,
    pub bob: Setting,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::new(Setting::One, Setting::One),
        SettingPair::new(Setting::One, Setting::Two),
        SettingPair::new(Setting::Two, Setting::One),
        SettingPair::new(Setting::Two, Setting::Two),
    ];

    pub const fn new(alice: Setting, bob: Setting) -> Self {
        Self { alice, bob }
    }

    /// `SettingPair::from_numbers(2, 1)` is (a2, b1).
    pub fn from_numbers(alice: u8, bob: u8) -> Option<Self> {
        Some(Self::new(Setting::from_number(alice)?, Setting::from_number(bob)?))
    }

    pub fn index(self) -> usize {
        (self.alice as usize) * 2 + self.bob as usize
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a{}, b{})", self.alice.number(), self.bob.number())
    }
}

/// An (Alice, Bob) outcome pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OutcomePair {
    pub alice: Outcome,
    pub bob: Outcome,
}

impl OutcomePair {
    /// Canonical order: (+,+), (+,-), (-,+), (-,-).
    pub const ALL: [OutcomePair; 4] = [
        OutcomePair::new(Outcome::Plus, Outcome::Plus),
        OutcomePair::new(Outcome::Plus, Outcome::Minus),
        OutcomePair::new(Outcome::Minus, Outcome::Plus),
        OutcomePair::new(Outcome::Minus, Outcome::Minus),
    ];

    pub const fn new(alice: Outcome, bob: Outcome) -> Self {
        Self { alice, bob }
    }

    pub fn index(self) -> usize {
        (self.alice as usize) * 2 + self.bob as usize
    }
}

/// Four values keyed by [`OutcomePair`], stored in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ByOutcome<T>(pub [T; 4]);

impl<T: Copy> ByOutcome<T> {
    pub fn from_fn(mut f: impl FnMut(OutcomePair) -> T) -> Self {
        Self(OutcomePair::ALL.map(&mut f))
    }

    pub fn get(&self, pair: OutcomePair) -> T {
        self.0[pair.index()]
    }

    pub fn set(&mut self, pair: OutcomePair, value: T) {
        self.0[pair.index()] = value;
    }
}

/// Non-negative outcome counts for one setting pair.
pub type OutcomeCounts = ByOutcome<u64>;

/// Joint outcome probabilities for all four setting pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    table: [ByOutcome<f64>; 4],
}

impl JointDistribution {
    /// Validates that every row lies in [0, 1] and sums to 1 within 1e-12.
    pub fn from_table(table: [ByOutcome<f64>; 4]) -> Result<Self, HnaError> {
        for setting in SettingPair::ALL {
            let row = &table[setting.index()];
            for &value in &row.0 {
                if !(0.0..=1.0).contains(&value) {
                    return Err(HnaError::OutOfRange { setting, value });
                }
            }
            let sum: f64 = row.0.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(HnaError::NotNormalized { setting, sum });
            }
        }
        Ok(Self { table })
    }

    /// Builds a distribution from `(setting, outcome) -> probability` entries.
    /// Entries not listed are zero.
    pub fn from_entries(
        entries: impl IntoIterator<Item = ((SettingPair, OutcomePair), f64)>,
    ) -> Result<Self, HnaError> {
        let mut table = [ByOutcome::default(); 4];
        for ((setting, outcome), p) in entries {
            table[setting.index()].set(outcome, p);
        }
        Self::from_table(table)
    }

    pub fn prob(&self, setting: SettingPair, outcome: OutcomePair) -> f64 {
        self.table[setting.index()].get(outcome)
    }

    pub fn row(&self, setting: SettingPair) -> ByOutcome<f64> {
        self.table[setting.index()]
    }

    /// Pr(a_i = +1) measured alongside Bob's setting `bob`.
    pub fn alice_marginal(&self, alice: Setting, bob: Setting) -> f64 {
        let row = self.row(SettingPair::new(alice, bob));
        row.get(OutcomePair::new(Outcome::Plus, Outcome::Plus))
            + row.get(OutcomePair::new(Outcome::Plus, Outcome::Minus))
    }

    /// Pr(b_j = +1) measured alongside Alice's setting `alice`.
    pub fn bob_marginal(&self, alice: Setting, bob: Setting) -> f64 {
        let row = self.row(SettingPair::new(alice, bob));
        row.get(OutcomePair::new(Outcome::Plus, Outcome::Plus))
            + row.get(OutcomePair::new(Outcome::Minus, Outcome::Plus))
    }
}

/// Normalizes per-setting counts into a [`JointDistribution`].
pub fn build_distribution(counts: &BTreeMap<SettingPair, OutcomeCounts>) -> Result<JointDistribution, HnaError> {
    if counts.len() < SettingPair::ALL.len() {
        return Err(HnaError::MissingSetting { found: counts.len() });
    }
    let mut table = [ByOutcome::default(); 4];
    for setting in SettingPair::ALL {
        let row = &counts[&setting];
        let total: u128 = row.0.iter().map(|&c| u128::from(c)).sum();
        if total == 0 {
            return Err(HnaError::AllZeroCounts(setting));
        }
        table[setting.index()] = ByOutcome(row.0.map(|c| (c as f64) / (total as f64)));
    }
    JointDistribution::from_table(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LocalRealismConsistent,
    NonClassical,
    ConstraintsViolated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::LocalRealismConsistent => "local-realism consistent",
            Verdict::NonClassical => "non-classical",
            Verdict::ConstraintsViolated => "constraints violated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyWitness {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub q: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

impl HardyWitness {
    /// Assigns the verdict for already-evaluated probabilities.
    pub fn new(p1: f64, p2: f64, p3: f64, q: f64, tol: f64) -> Result<Self, HnaError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(HnaError::InvalidTolerance(tol));
        }
        let worst = p1.max(p2).max(p3);
        let verdict = if worst > tol {
            Verdict::ConstraintsViolated
        } else if q > tol {
            Verdict::NonClassical
        } else {
            Verdict::LocalRealismConsistent
        };
        Ok(Self { p1, p2, p3, q, tol, verdict })
    }

    pub fn max_constraint(&self) -> f64 {
        self.p1.max(self.p2).max(self.p3)
    }
}

/// Reads off the four Hardy probabilities and classifies them.
///
/// A tolerance of exactly 0 is accepted for structurally-zero data.
pub fn hardy_q(dist: &JointDistribution, tol: f64) -> Result<HardyWitness, HnaError> {
    use Outcome::{Minus, Plus};
    use Setting::{One, Two};
    let p1 = dist.prob(SettingPair::new(One, One), OutcomePair::new(Plus, Plus));
    let p2 = dist.prob(SettingPair::new(One, Two), OutcomePair::new(Minus, Plus));
    let p3 = dist.prob(SettingPair::new(Two, One), OutcomePair::new(Plus, Minus));
    let q = dist.prob(SettingPair::new(Two, Two), OutcomePair::new(Plus, Plus));
    HardyWitness::new(p1, p2, p3, q, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoSignaling {
    pub holds: bool,
    pub max_deviation: f64,
}

/// Checks that each party's marginals do not depend on the other party's setting.
pub fn is_no_signaling(dist: &JointDistribution, tol: f64) -> NoSignaling {
    let mut max_deviation: f64 = 0.0;
    for s in Setting::BOTH {
        let alice = (dist.alice_marginal(s, Setting::One) - dist.alice_marginal(s, Setting::Two)).abs();
        let bob = (dist.bob_marginal(Setting::One, s) - dist.bob_marginal(Setting::Two, s)).abs();
        max_deviation = max_deviation.max(alice).max(bob);
    }
    NoSignaling { holds: max_deviation <= tol, max_deviation }
}

/// One of the three zero-probability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Constraint {
    /// forbids a1 = +1 with b1 = +1
    C1,
    /// forbids a1 = -1 with b2 = +1
    C2,
    /// forbids a2 = +1 with b1 = -1
    C3,
}

impl Constraint {
    pub const ALL: [Constraint; 3] = [Constraint::C1, Constraint::C2, Constraint::C3];

    pub fn number(self) -> u8 {
        match self {
            Constraint::C1 => 1,
            Constraint::C2 => 2,
            Constraint::C3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Constraint::C1),
            2 => Some(Constraint::C2),
            3 => Some(Constraint::C3),
            _ => None,
        }
    }

    /// The setting pair and outcome pair this constraint sets to zero.
    pub fn forbidden_event(self) -> (SettingPair, OutcomePair) {
        use Outcome::{Minus, Plus};
        use Setting::{One, Two};
        match self {
            Constraint::C1 => (SettingPair::new(One, One), OutcomePair::new(Plus, Plus)),
            Constraint::C2 => (SettingPair::new(One, Two), OutcomePair::new(Minus, Plus)),
            Constraint::C3 => (SettingPair::new(Two, One), OutcomePair::new(Plus, Minus)),
        }
    }

    pub fn forbids(self, strategy: Strategy) -> bool {
        let (setting, outcome) = self.forbidden_event();
        strategy.outcome_pair(setting) == outcome
    }
}

/// A subset of {C1, C2, C3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintSet(u8);

impl ConstraintSet {
    pub const fn all() -> Self {
        Self(0b111)
    }

    pub const fn empty() -> Self {
        Self(0)
    }

    pub fn contains(self, c: Constraint) -> bool {
        self.0 & Self::bit(c) != 0
    }

    pub fn with(self, c: Constraint) -> Self {
        Self(self.0 | Self::bit(c))
    }

    pub fn without(self, c: Constraint) -> Self {
        Self(self.0 & !Self::bit(c))
    }

    pub fn iter(self) -> impl Iterator<Item = Constraint> {
        Constraint::ALL.into_iter().filter(move |&c| self.contains(c))
    }

    /// All eight subsets.
    pub fn subsets() -> impl Iterator<Item = ConstraintSet> {
        (0u8..8).map(ConstraintSet)
    }

    /// Bit i set means constraint C(i+1) is active.
    pub fn from_mask(mask: u8) -> Option<Self> {
        (mask < 8).then_some(Self(mask))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    fn bit(c: Constraint) -> u8 {
        1 << (c.number() - 1)
    }
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        iter.into_iter().fold(Self::empty(), Self::with)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|c| format!("C{}", c.number())).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// A deterministic local strategy: pre-assigned values for all four events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Strategy {
    pub a1: Outcome,
    pub a2: Outcome,
    pub b1: Outcome,
    pub b2: Outcome,
}

impl Strategy {
    /// All 16 strategies, in a fixed order.
    pub fn all() -> impl Iterator<Item = Strategy> {
        (0u8..16).map(|bits| {
            let pick = |b: u8| if bits & (1 << b) == 0 { Outcome::Plus } else { Outcome::Minus };
            Strategy { a1: pick(3), a2: pick(2), b1: pick(1), b2: pick(0) }
        })
    }

    pub fn alice(self, s: Setting) -> Outcome {
        match s {
            Setting::One => self.a1,
            Setting::Two => self.a2,
        }
    }

    pub fn bob(self, s: Setting) -> Outcome {
        match s {
            Setting::One => self.b1,
            Setting::Two => self.b2,
        }
    }

    pub fn outcome_pair(self, setting: SettingPair) -> OutcomePair {
        OutcomePair::new(self.alice(setting.alice), self.bob(setting.bob))
    }

    pub fn is_admissible(self, constraints: ConstraintSet) -> bool {
        constraints.iter().all(|c| !c.forbids(self))
    }

    /// Indicator of the target event a2 = +1, b2 = +1.
    pub fn hits_target(self) -> bool {
        self.a2 == Outcome::Plus && self.b2 == Outcome::Plus
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a1={} a2={} b1={} b2={}", self.a1, self.a2, self.b1, self.b2)
    }
}

/// The local-realistic maximum of q under a set of zero constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LhvBound {
    pub constraints: ConstraintSet,
    pub max_q: Ratio<i64>,
    /// Strategies that put no weight on any forbidden event.
    pub admissible: Vec<Strategy>,
    /// Admissible strategies that also hit the target event.
    pub achieving: Vec<Strategy>,
}

/// Maximum of q over local hidden-variable models obeying `constraints`.
///
/// Computed twice: over the admissible pure strategies, and over all
/// mixtures of the 16 strategies by enumerating the vertices of the
/// feasible weight polytope. Both are exact; a disagreement panics.
pub fn lhv_max_q(constraints: ConstraintSet) -> LhvBound {
    let admissible: Vec<Strategy> = Strategy::all().filter(|s| s.is_admissible(constraints)).collect();
    let achieving: Vec<Strategy> = admissible.iter().copied().filter(|s| s.hits_target()).collect();
    let pure = if achieving.is_empty() { Ratio::from_integer(0) } else { Ratio::from_integer(1) };

    let mixture = mixture_max_q(constraints).expect("the uniform-over-admissible point is always feasible");
    assert_eq!(pure, mixture, "pure-strategy and mixture optima differ for {constraints}");

    LhvBound { constraints, max_q: pure, admissible, achieving }
}

/// Solves `max sum_s w_s [s hits target]` subject to `w >= 0`, `sum w = 1`,
/// and `sum_s w_s [c forbids s] = 0` for each active `c`, by checking every
/// basic solution. Returns `None` when the polytope is empty.
pub fn mixture_max_q(constraints: ConstraintSet) -> Option<Ratio<i64>> {
    let strategies: Vec<Strategy> = Strategy::all().collect();
    let one = Ratio::from_integer(1);
    let zero = Ratio::from_integer(0);

    // Equality rows: normalization first, then one row per active constraint.
    let mut rows: Vec<Vec<Ratio<i64>>> = vec![vec![one; strategies.len()]];
    let mut rhs = vec![one];
    for c in constraints.iter() {
        rows.push(strategies.iter().map(|&s| if c.forbids(s) { one } else { zero }).collect());
        rhs.push(zero);
    }

    let mut best: Option<Ratio<i64>> = None;
    let n = strategies.len();
    for size in 1..=rows.len() {
        for basis in combinations(n, size) {
            let Some(weights) = solve_basis(&rows, &rhs, &basis) else { continue };
            if weights.iter().any(|w| *w < zero) {
                continue;
            }
            let value = basis
                .iter()
                .zip(&weights)
                .filter(|(&j, _)| strategies[j].hits_target())
                .fold(zero, |acc, (_, &w)| acc + w);
            best = Some(best.map_or(value, |b| b.max(value)));
        }
    }
    best
}

/// Unique solution of the equality system restricted to the `basis` columns,
/// or `None` if the columns are dependent or the system is inconsistent.
fn solve_basis(rows: &[Vec<Ratio<i64>>], rhs: &[Ratio<i64>], basis: &[usize]) -> Option<Vec<Ratio<i64>>> {
    let zero = Ratio::from_integer(0);
    let k = basis.len();
    let mut m: Vec<Vec<Ratio<i64>>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, &b)| basis.iter().map(|&j| row[j]).chain(std::iter::once(b)).collect())
        .collect();

    let mut pivot_row = 0;
    for col in 0..k {
        let found = (pivot_row..m.len()).find(|&r| m[r][col] != zero)?;
        m.swap(pivot_row, found);
        let p = m[pivot_row][col];
        for v in m[pivot_row].iter_mut() {
            *v /= p;
        }
        for r in 0..m.len() {
            if r != pivot_row && m[r][col] != zero {
                let factor = m[r][col];
                let pivot = m[pivot_row].clone();
                for (v, &pv) in m[r].iter_mut().zip(&pivot) {
                    *v -= factor * pv;
                }
            }
        }
        pivot_row += 1;
    }
    // Leftover rows must read 0 = 0.
    if m[pivot_row..].iter().any(|row| row[k] != zero) {
        return None;
    }
    Some((0..k).map(|i| m[i][k]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}
