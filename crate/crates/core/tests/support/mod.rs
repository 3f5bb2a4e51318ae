//! Reference implementations used as oracles by the integration tests.
//! Nothing here calls into the library's probability code.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

type Mat2 = [[Complex64; 2]; 2];
type Mat4 = [[Complex64; 4]; 4];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// (I + s * n.sigma) / 2 for a unit Bloch vector n and sign s.
fn projector(n: [f64; 3], sign: f64) -> Mat2 {
    let [x, y, z] = n;
    let half = 0.5 * sign;
    [[c(0.5 + half * z), Complex64::new(half * x, -half * y)], [Complex64::new(half * x, half * y), c(0.5 - half * z)]]
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[c(0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn expectation(psi: &[Complex64; 4], m: &Mat4) -> f64 {
    let mut total = c(0.0);
    for i in 0..4 {
        for j in 0..4 {
            total += psi[i].conj() * m[i][j] * psi[j];
        }
    }
    total.re
}

/// Joint outcome probabilities over (+,+), (+,-), (-,+), (-,-) from dense
/// 4x4 projectors; the first qubit is Alice's, |0> is the z = +1 state.
pub fn dense_joint(psi: &[Complex64; 4], alice: [f64; 3], bob: [f64; 3]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, (sa, sb)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
        out[k] = expectation(psi, &kron(&projector(alice, sa), &projector(bob, sb)));
    }
    out
}

pub fn bloch(polar: f64, azimuth: f64) -> [f64; 3] {
    [polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos()]
}

pub fn random_state(rng: &mut ChaCha8Rng) -> [Complex64; 4] {
    let mut amps = [c(0.0); 4];
    for a in &mut amps {
        *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.map(|a| a / norm)
}

pub fn random_setting(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(0.0..=std::f64::consts::PI), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Best point found by the grid oracle. Angles are signed x-z plane angles
/// of the + outcome for a1, a2, b1, b2.
#[derive(Debug, Clone, Copy)]
pub struct GridOptimum {
    pub q: f64,
    pub theta: f64,
    pub angles: [f64; 4],
}

type V2 = [f64; 2];

fn perp(v: V2) -> V2 {
    [-v[1], v[0]]
}

fn normalize(v: V2) -> Option<V2> {
    let n = v[0].hypot(v[1]);
    (n > 1e-12).then(|| [v[0] / n, v[1] / n])
}

fn angle_of(v: V2) -> f64 {
    2.0 * v[1].atan2(v[0])
}

/// For real Schmidt states and x-z plane settings, the three zero conditions
/// fix b1, b2 and a2 once theta and a1 are chosen:
/// b1+ is orthogonal to Bob's state conditioned on a1+, b2+ to Bob's state
/// conditioned on a1-, and a2+ to Alice's state conditioned on b1-.
fn hardy_point(theta: f64, alpha: f64) -> Option<GridOptimum> {
    let (ct, st) = (theta.cos(), theta.sin());
    let a1p = [(alpha / 2.0).cos(), (alpha / 2.0).sin()];
    let a1m = perp(a1p);
    let b1p = normalize(perp([ct * a1p[0], st * a1p[1]]))?;
    let b2p = normalize(perp([ct * a1m[0], st * a1m[1]]))?;
    let b1m = perp(b1p);
    let a2p = normalize(perp([ct * b1m[0], st * b1m[1]]))?;
    let amp = ct * a2p[0] * b2p[0] + st * a2p[1] * b2p[1];
    Some(GridOptimum { q: amp * amp, theta, angles: [alpha, angle_of(a2p), angle_of(b1p), angle_of(b2p)] })
}

/// Grid search over (theta, a1) at `step` radians, then repeated local grids
/// shrinking by 10x around the incumbent. `fixed_theta` pins the state.
pub fn grid_oracle(step: f64, fixed_theta: Option<f64>) -> GridOptimum {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let thetas: Vec<f64> = match fixed_theta {
        Some(t) => vec![t],
        None => (0..=(FRAC_PI_2 / step) as usize).map(|i| i as f64 * step).collect(),
    };
    let alphas = (TAU / step) as usize;
    let mut best = GridOptimum { q: f64::NEG_INFINITY, theta: 0.0, angles: [0.0; 4] };
    for &theta in &thetas {
        for j in 0..alphas {
            if let Some(p) = hardy_point(theta, j as f64 * step) {
                if p.q > best.q {
                    best = p;
                }
            }
        }
    }
    let mut width = step;
    for _ in 0..8 {
        let center = best;
        for i in -20i32..=20 {
            let theta = match fixed_theta {
                Some(t) => t,
                None => (center.theta + f64::from(i) * width / 10.0).clamp(0.0, FRAC_PI_2),
            };
            for j in -20i32..=20 {
                if let Some(p) = hardy_point(theta, center.angles[0] + f64::from(j) * width / 10.0) {
                    if p.q > best.q {
                        best = p;
                    }
                }
            }
            if fixed_theta.is_some() {
                break;
            }
        }
        width /= 10.0;
    }
    best
}

/// Local hidden-variable oracle written from the definitions alone.
/// A strategy is (a1, a2, b1, b2) with +1/-1 entries.
pub fn all_strategies() -> Vec<[i8; 4]> {
    let mut out = Vec::new();
    for a1 in [1, -1] {
        for a2 in [1, -1] {
            for b1 in [1, -1] {
                for b2 in [1, -1] {
                    out.push([a1, a2, b1, b2]);
                }
            }
        }
    }
    out
}

/// Whether `s` puts weight on the event that constraint `k` (1..=3) forbids.
pub fn violates(s: [i8; 4], k: u8) -> bool {
    let [a1, a2, b1, b2] = s;
    match k {
        1 => a1 == 1 && b1 == 1,
        2 => a1 == -1 && b2 == 1,
        3 => a2 == 1 && b1 == -1,
        _ => unreachable!(),
    }
}

/// Max q under the constraints in `mask` (bit k-1 = constraint k). Every
/// feasible mixture puts zero weight on strategies that break an active
/// constraint, so the optimum is 1 if a surviving strategy hits the target,
/// else 0.
pub fn lhv_oracle(mask: u8) -> i64 {
    let hit = all_strategies()
        .into_iter()
        .filter(|&s| (1..=3).all(|k| mask & (1 << (k - 1)) == 0 || !violates(s, k)))
        .any(|s| s[1] == 1 && s[3] == 1);
    i64::from(hit)
}

/// Exact binomial upper tail P(X >= k) for X ~ Bin(n, 1/2).
pub fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    let mut total = 0.0;
    for i in k..=n {
        let mut term = 1.0;
        for j in 0..i {
            term *= (n - j) as f64 / (i - j) as f64;
        }
        total += term;
    }
    total / 2f64.powi(n as i32)
}
