//! Two-qubit pure states, projective spin measurements, and a penalty-method
//! search for the largest Hardy probability q.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hna::{ByOutcome, JointDistribution, Outcome, OutcomePair, Setting, SettingPair};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("state is not normalized: squared norm {0}")]
    UnnormalizedState(f64),
    #[error("measurement angles out of range: polar {polar}, azimuth {azimuth}")]
    InvalidSetting { polar: f64, azimuth: f64 },
    #[error("invalid optimizer configuration: {0}")]
    InvalidOptimizerConfig(String),
    #[error("no restart reached constraint residuals <= {tol:e} (best {best:e})")]
    NoFeasiblePoint { tol: f64, best: f64 },
}

/// A complex number as an explicit pair of reals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    /// `e^{i phase}`
    pub fn cis(phase: f64) -> Self {
        let (s, c) = phase.sin_cos();
        Self { re: c, im: s }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, k: f64) -> Self {
        Self { re: self.re * k, im: self.im * k }
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, rhs: Complex) -> Complex {
        Complex { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, rhs: Complex) -> Complex {
        Complex { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, rhs: Complex) -> Complex {
        Complex { re: self.re * rhs.re - self.im * rhs.im, im: self.re * rhs.im + self.im * rhs.re }
    }
}

/// Amplitudes in the basis |00>, |01>, |10>, |11> (Alice's qubit first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoQubitState {
    amplitudes: [Complex; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex; 4]) -> Result<Self, QuantumError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::UnnormalizedState(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm. Fails only on the zero vector.
    pub fn normalized(amplitudes: [Complex; 4]) -> Result<Self, QuantumError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QuantumError::UnnormalizedState(norm));
        }
        let k = norm.sqrt().recip();
        Self::new(amplitudes.map(|a| a.scale(k)))
    }

    /// `cos(theta)|00> + sin(theta)|11>`
    pub fn schmidt(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { amplitudes: [Complex::real(c), Complex::ZERO, Complex::ZERO, Complex::real(s)] }
    }

    pub fn amplitudes(&self) -> [Complex; 4] {
        self.amplitudes
    }

    fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// A ±1 spin measurement along the Bloch direction
/// `(sin polar cos azimuth, sin polar sin azimuth, cos polar)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementSetting {
    polar: f64,
    azimuth: f64,
}

impl MeasurementSetting {
    /// `polar` in [0, pi], `azimuth` in [0, 2pi).
    pub fn new(polar: f64, azimuth: f64) -> Result<Self, QuantumError> {
        if !(0.0..=PI).contains(&polar) || !(0.0..TAU).contains(&azimuth) {
            return Err(QuantumError::InvalidSetting { polar, azimuth });
        }
        Ok(Self { polar, azimuth })
    }

    /// The z axis.
    pub fn z() -> Self {
        Self { polar: 0.0, azimuth: 0.0 }
    }

    /// A direction in the x-z plane at signed angle `angle` from +z towards +x.
    /// Any real angle is accepted; negative x maps to azimuth pi.
    pub fn in_xz_plane(angle: f64) -> Self {
        let t = angle.rem_euclid(TAU);
        if t <= PI {
            Self { polar: t, azimuth: 0.0 }
        } else {
            Self { polar: TAU - t, azimuth: PI }
        }
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }

    /// Rotates the direction about z by `phi`, wrapping the azimuth.
    pub fn rotated_about_z(&self, phi: f64) -> Self {
        Self { polar: self.polar, azimuth: (self.azimuth + phi).rem_euclid(TAU) }
    }

    /// Unit eigenvector (components on |0>, |1>) for the given outcome.
    pub fn eigenvector(&self, outcome: Outcome) -> [Complex; 2] {
        let (s, c) = (self.polar / 2.0).sin_cos();
        let phase = Complex::cis(self.azimuth);
        match outcome {
            Outcome::Plus => [Complex::real(c), phase.scale(s)],
            Outcome::Minus => [Complex::real(s), phase.scale(-c)],
        }
    }
}

/// Born-rule joint outcome probabilities for Alice measuring `a` and Bob `b`.
pub fn born_joint(
    state: &TwoQubitState,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
) -> Result<ByOutcome<f64>, QuantumError> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(QuantumError::UnnormalizedState(norm));
    }
    let psi = state.amplitudes;
    Ok(ByOutcome::from_fn(|pair| {
        let u = a.eigenvector(pair.alice);
        let v = b.eigenvector(pair.bob);
        let mut amp = Complex::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                amp = amp + (u[i] * v[j]).conj() * psi[2 * i + j];
            }
        }
        amp.norm_sqr()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyConfiguration {
    pub state: TwoQubitState,
    /// Settings for a1 and a2.
    pub alice: [MeasurementSetting; 2],
    /// Settings for b1 and b2.
    pub bob: [MeasurementSetting; 2],
}

impl HardyConfiguration {
    pub fn setting_for(&self, pair: SettingPair) -> (&MeasurementSetting, &MeasurementSetting) {
        (&self.alice[pair.alice as usize], &self.bob[pair.bob as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyValues {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub q: f64,
}

impl HardyValues {
    pub fn residuals(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    pub fn max_residual(&self) -> f64 {
        self.p1.max(self.p2).max(self.p3)
    }
}

pub fn hardy_values(config: &HardyConfiguration) -> Result<HardyValues, QuantumError> {
    use Outcome::{Minus, Plus};
    use Setting::{One, Two};
    let cell = |s: SettingPair, o: OutcomePair| -> Result<f64, QuantumError> {
        let (a, b) = config.setting_for(s);
        Ok(born_joint(&config.state, a, b)?.get(o))
    };
    Ok(HardyValues {
        p1: cell(SettingPair::new(One, One), OutcomePair::new(Plus, Plus))?,
        p2: cell(SettingPair::new(One, Two), OutcomePair::new(Minus, Plus))?,
        p3: cell(SettingPair::new(Two, One), OutcomePair::new(Plus, Minus))?,
        q: cell(SettingPair::new(Two, Two), OutcomePair::new(Plus, Plus))?,
    })
}

pub fn config_to_distribution(config: &HardyConfiguration) -> Result<JointDistribution, QuantumError> {
    let mut table = [ByOutcome::default(); 4];
    for pair in SettingPair::ALL {
        let (a, b) = config.setting_for(pair);
        table[pair.index()] = born_joint(&config.state, a, b)?;
    }
    // Born probabilities from orthonormal eigenbases always pass validation.
    Ok(JointDistribution::from_table(table).expect("Born-rule rows are normalized"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Coordinate sweeps allowed per penalty stage.
    pub max_iterations: usize,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub constraint_tol: f64,
    pub step_tol: f64,
    pub seed: u64,
    /// Pin the Schmidt angle instead of optimizing it.
    pub fixed_theta: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iterations: 200_000,
            penalty_initial: 10.0,
            penalty_growth: 10.0,
            constraint_tol: 1e-10,
            step_tol: 1e-10,
            seed: 0,
            fixed_theta: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), QuantumError> {
        let bad = |msg: &str| Err(QuantumError::InvalidOptimizerConfig(msg.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.penalty_initial > 0.0 && self.penalty_initial.is_finite()) {
            return bad("penalty_initial must be positive");
        }
        if !(self.penalty_growth > 1.0 && self.penalty_growth.is_finite()) {
            return bad("penalty_growth must exceed 1");
        }
        if self.constraint_tol.is_nan() || self.constraint_tol <= 0.0 {
            return bad("constraint_tol must be positive");
        }
        if self.step_tol.is_nan() || self.step_tol <= 0.0 || self.step_tol >= INITIAL_STEP {
            return bad("step_tol must be positive and below the initial step");
        }
        if let Some(theta) = self.fixed_theta {
            if !(0.0..=FRAC_PI_2).contains(&theta) {
                return bad("fixed theta must lie in [0, pi/2]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumOptimum {
    pub configuration: HardyConfiguration,
    /// Schmidt angle of the optimal state.
    pub theta: f64,
    /// Signed x-z plane angles of a1, a2, b1, b2.
    pub angles: [f64; 4],
    pub q: f64,
    pub residuals: [f64; 3],
    pub restart: usize,
    pub penalty: f64,
}

const INITIAL_STEP: f64 = 0.1;
const MAX_PENALTY: f64 = 1e14;

/// Point in the search space: Schmidt angle and signed x-z angles of a1, a2, b1, b2.
type Params = [f64; 5];

/// Fast evaluation of `(p1, p2, p3, q)` for the real family. Each Hardy cell
/// is the square of a real amplitude, so the penalty on `p_i` is quadratic
/// in the constraint `amplitude_i = 0`.
fn real_family_values(x: &Params) -> [f64; 4] {
    let (st, ct) = x[0].sin_cos();
    let half = |t: f64| (t / 2.0).sin_cos();
    let (sa1, ca1) = half(x[1]);
    let (sa2, ca2) = half(x[2]);
    let (sb1, cb1) = half(x[3]);
    let (sb2, cb2) = half(x[4]);
    // Plus eigenvector (c, s); minus eigenvector (s, -c).
    let amp = |u: (f64, f64), v: (f64, f64)| ct * u.0 * v.0 + st * u.1 * v.1;
    let a1p = (ca1, sa1);
    let a1m = (sa1, -ca1);
    let a2p = (ca2, sa2);
    let b1p = (cb1, sb1);
    let b1m = (sb1, -cb1);
    let b2p = (cb2, sb2);
    let sq = |v: f64| v * v;
    [sq(amp(a1p, b1p)), sq(amp(a1m, b2p)), sq(amp(a2p, b1m)), sq(amp(a2p, b2p))]
}

fn penalized(x: &Params, penalty: f64) -> f64 {
    let v = real_family_values(x);
    -v[3] + penalty * (v[0] + v[1] + v[2])
}

/// Compass search along coordinates: try ±step on each free coordinate,
/// keep the first improvement, halve the step after a sweep with none.
fn coordinate_descent(mut x: Params, penalty: f64, free_theta: bool, opt: &OptimizerConfig) -> Params {
    let mut fx = penalized(&x, penalty);
    let mut step = INITIAL_STEP;
    let first = if free_theta { 0 } else { 1 };
    let mut sweeps = 0;
    while step >= opt.step_tol && sweeps < opt.max_iterations {
        sweeps += 1;
        let mut improved = false;
        for i in first..5 {
            for delta in [step, -step] {
                let mut y = x;
                y[i] += delta;
                if i == 0 {
                    y[0] = y[0].clamp(0.0, FRAC_PI_2);
                }
                let fy = penalized(&y, penalty);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    x
}

struct RestartResult {
    x: Params,
    values: [f64; 4],
    penalty: f64,
}

impl RestartResult {
    fn max_residual(&self) -> f64 {
        self.values[0].max(self.values[1]).max(self.values[2])
    }
}

fn run_restart(index: usize, opt: &OptimizerConfig) -> RestartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rng.set_stream(index as u64);
    let theta = match opt.fixed_theta {
        Some(t) => t,
        None => rng.random_range(0.05..FRAC_PI_2 - 0.05),
    };
    let mut x: Params = [theta, 0.0, 0.0, 0.0, 0.0];
    for angle in &mut x[1..] {
        *angle = rng.random_range(0.0..TAU);
    }

    let mut penalty = opt.penalty_initial;
    loop {
        x = coordinate_descent(x, penalty, opt.fixed_theta.is_none(), opt);
        let values = real_family_values(&x);
        let result = RestartResult { x, values, penalty };
        if result.max_residual() <= opt.constraint_tol || penalty * opt.penalty_growth > MAX_PENALTY {
            return result;
        }
        penalty *= opt.penalty_growth;
    }
}

/// Maximizes q subject to p1 = p2 = p3 = 0.
///
/// The search runs over the real family `cos(theta)|00> + sin(theta)|11>`
/// with all four measurement directions in the x-z plane (azimuth 0 or pi),
/// which contains a global optimum. Restarts are independent and run in
/// parallel; ties go to the lowest restart index.
pub fn maximize_q(opt: &OptimizerConfig) -> Result<QuantumOptimum, QuantumError> {
    opt.validate()?;
    let results: Vec<RestartResult> = (0..opt.restarts).into_par_iter().map(|i| run_restart(i, opt)).collect();

    let best = results.iter().enumerate().filter(|(_, r)| r.max_residual() <= opt.constraint_tol).fold(
        None::<(usize, &RestartResult)>,
        |best, (i, r)| match best {
            Some((_, b)) if b.values[3] >= r.values[3] => best,
            _ => Some((i, r)),
        },
    );

    let Some((restart, result)) = best else {
        let closest = results.iter().map(RestartResult::max_residual).fold(f64::INFINITY, f64::min);
        return Err(QuantumError::NoFeasiblePoint { tol: opt.constraint_tol, best: closest });
    };

    let x = result.x;
    let configuration = HardyConfiguration {
        state: TwoQubitState::schmidt(x[0]),
        alice: [MeasurementSetting::in_xz_plane(x[1]), MeasurementSetting::in_xz_plane(x[2])],
        bob: [MeasurementSetting::in_xz_plane(x[3]), MeasurementSetting::in_xz_plane(x[4])],
    };
    let values = hardy_values(&configuration)?;
    Ok(QuantumOptimum {
        configuration,
        theta: x[0],
        angles: [x[1], x[2], x[3], x[4]].map(|a| a.rem_euclid(TAU)),
        q: values.q,
        residuals: values.residuals(),
        restart,
        penalty: result.penalty,
    })
}

impl fmt::Display for QuantumOptimum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "q = {:.6} (restart {}, penalty {:e})", self.q, self.restart, self.penalty)?;
        writeln!(
            f,
            "residuals: p1 = {:.3e}, p2 = {:.3e}, p3 = {:.3e}",
            self.residuals[0], self.residuals[1], self.residuals[2]
        )?;
        writeln!(f, "state: cos({0:.9})|00> + sin({0:.9})|11>", self.theta)?;
        let names = ["a1", "a2", "b1", "b2"];
        let settings = [
            self.configuration.alice[0],
            self.configuration.alice[1],
            self.configuration.bob[0],
            self.configuration.bob[1],
        ];
        for (name, s) in names.iter().zip(settings) {
            writeln!(f, "{name}: polar = {:.9}, azimuth = {:.9}", s.polar(), s.azimuth())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hna::{hardy_q, is_no_signaling, Verdict};

    fn bell() -> TwoQubitState {
        TwoQubitState::schmidt(std::f64::consts::FRAC_PI_4)
    }

    #[test]
    fn eigenstate_gives_certain_outcome() {
        let state = TwoQubitState::schmidt(0.0);
        let p = born_joint(&state, &MeasurementSetting::z(), &MeasurementSetting::z()).unwrap();
        assert_eq!(p.0, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bell_state_along_z_is_correlated() {
        let p = born_joint(&bell(), &MeasurementSetting::z(), &MeasurementSetting::z()).unwrap();
        for (got, want) in p.0.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn x_measurement_on_zero_state_is_unbiased() {
        let state = TwoQubitState::schmidt(0.0);
        let x = MeasurementSetting::new(FRAC_PI_2, 0.0).unwrap();
        let p = born_joint(&state, &x, &MeasurementSetting::z()).unwrap();
        assert!((p.0[0] - 0.5).abs() < 1e-15);
        assert!((p.0[2] - 0.5).abs() < 1e-15);
        assert!(p.0[1].abs() < 1e-15 && p.0[3].abs() < 1e-15);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let amps = [Complex::real(1.0), Complex::real(1.0), Complex::ZERO, Complex::ZERO];
        assert!(matches!(TwoQubitState::new(amps), Err(QuantumError::UnnormalizedState(_))));
        let s = TwoQubitState::normalized(amps).unwrap();
        assert!((s.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn setting_ranges_are_enforced() {
        assert!(MeasurementSetting::new(-0.1, 0.0).is_err());
        assert!(MeasurementSetting::new(0.1, TAU).is_err());
        assert!(MeasurementSetting::new(PI, 0.0).is_ok());
    }

    #[test]
    fn xz_plane_angle_maps_to_valid_setting() {
        for k in -20..20 {
            let t = k as f64 * 0.37;
            let s = MeasurementSetting::in_xz_plane(t);
            let v = s.bloch_vector();
            assert!((v[0] - t.sin()).abs() < 1e-12 && (v[2] - t.cos()).abs() < 1e-12 && v[1].abs() < 1e-12);
            assert!(MeasurementSetting::new(s.polar(), s.azimuth()).is_ok());
        }
    }

    #[test]
    fn all_z_product_state_values() {
        let z = MeasurementSetting::z();
        let config = HardyConfiguration { state: TwoQubitState::schmidt(0.0), alice: [z, z], bob: [z, z] };
        let v = hardy_values(&config).unwrap();
        assert_eq!((v.p1, v.p2, v.p3, v.q), (1.0, 0.0, 0.0, 1.0));
        let dist = config_to_distribution(&config).unwrap();
        for s in SettingPair::ALL {
            assert_eq!(dist.row(s).0, [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn bell_state_all_z_has_half_p1() {
        let z = MeasurementSetting::z();
        let config = HardyConfiguration { state: bell(), alice: [z, z], bob: [z, z] };
        assert!((hardy_values(&config).unwrap().p1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fast_path_matches_born_rule() {
        let x: Params = [0.4, 1.1, 5.2, 2.9, 4.4];
        let config = HardyConfiguration {
            state: TwoQubitState::schmidt(x[0]),
            alice: [MeasurementSetting::in_xz_plane(x[1]), MeasurementSetting::in_xz_plane(x[2])],
            bob: [MeasurementSetting::in_xz_plane(x[3]), MeasurementSetting::in_xz_plane(x[4])],
        };
        let v = hardy_values(&config).unwrap();
        let fast = real_family_values(&x);
        for (a, b) in [v.p1, v.p2, v.p3, v.q].iter().zip(fast) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn optimizer_config_validation() {
        let ok = OptimizerConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            OptimizerConfig { restarts: 0, ..ok.clone() },
            OptimizerConfig { penalty_growth: 1.0, ..ok.clone() },
            OptimizerConfig { penalty_initial: 0.0, ..ok.clone() },
            OptimizerConfig { constraint_tol: 0.0, ..ok.clone() },
            OptimizerConfig { fixed_theta: Some(2.0), ..ok.clone() },
        ] {
            assert!(matches!(maximize_q(&bad), Err(QuantumError::InvalidOptimizerConfig(_))));
        }
    }

    #[test]
    fn product_state_gives_no_hardy_violation() {
        let opt = OptimizerConfig { fixed_theta: Some(0.0), restarts: 4, ..Default::default() };
        let best = maximize_q(&opt).unwrap();
        assert!(best.q <= 1e-8, "q = {}", best.q);
    }

    #[test]
    fn optimum_is_nonclassical_and_no_signaling() {
        let best = maximize_q(&OptimizerConfig { restarts: 4, ..Default::default() }).unwrap();
        let dist = config_to_distribution(&best.configuration).unwrap();
        let w = hardy_q(&dist, crate::hna::DEFAULT_TOL).unwrap();
        assert_eq!(w.verdict, Verdict::NonClassical);
        assert!(is_no_signaling(&dist, 1e-10).holds);
    }
}
