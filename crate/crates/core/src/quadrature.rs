//! Adaptive tanh-sinh quadrature on `[0, 1]`.
//!
//! The substitution `θ = 1 / (1 + exp(−π sinh u))` pushes the endpoints to
//! `u = ±∞` and makes the transformed integrand decay double-exponentially,
//! so integrable endpoint singularities such as `θ^(α−1)` with `α < 1` are
//! handled without special casing. The step is halved until successive
//! estimates agree.
//!
//! Integrands receive both `θ` and `1 − θ`, each computed without
//! cancellation, so factors like `(1 − θ)^k` stay accurate near `θ = 1`.

use crate::error::{Error, Result};

/// Nodes beyond `|u| > U_MAX` carry weights below 1e-60 relative to the bulk.
const U_MAX: f64 = 4.5;
const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 14;

#[derive(Debug, Clone, Copy)]
struct Node {
    theta: f64,
    one_minus: f64,
    /// `dθ/du`.
    weight: f64,
}

fn node(u: f64) -> Node {
    let v = std::f64::consts::PI * u.sinh();
    // θ = 1/(1+e^{-v}), 1-θ = 1/(1+e^{v}), dθ/du = π cosh(u) θ (1-θ).
    let theta = 1.0 / (1.0 + (-v).exp());
    let one_minus = 1.0 / (1.0 + v.exp());
    let weight = std::f64::consts::PI * u.cosh() * theta * one_minus;
    Node {
        theta,
        one_minus,
        weight,
    }
}

/// Nodes added at `level`: `u = k h` with `h = 2^-level`, odd `k` only for
/// `level > 0`.
fn level_nodes(level: u32) -> impl Iterator<Item = f64> {
    let h = 0.5_f64.powi(level as i32);
    let kmax = (U_MAX / h).floor() as i64;
    let (start, step) = if level == 0 {
        (-kmax, 1)
    } else {
        (-kmax | 1, 2)
    };
    (0..)
        .map(move |j| start + j * step)
        .take_while(move |&k| k <= kmax)
        .map(move |k| k as f64 * h)
}

/// `∫₀¹ f(θ) dθ` to relative tolerance `rel_tol`.
pub fn integrate_unit<F>(f: F, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut sum = 0.0;
    let mut previous = f64::NAN;
    for level in 0..=MAX_LEVEL {
        for u in level_nodes(level) {
            let n = node(u);
            if n.weight > 0.0 && n.theta > 0.0 && n.one_minus > 0.0 {
                sum += n.weight * f(n.theta, n.one_minus);
            }
        }
        let estimate = sum * 0.5_f64.powi(level as i32);
        let change = (estimate - previous).abs();
        if level >= MIN_LEVEL && change <= rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(estimate);
        }
        previous = estimate;
    }
    Err(Error::QuadratureNoConvergence((sum - previous).abs()))
}

/// Running sums of `w·e^{ln f}`, `w·θ·e^{ln f}`, `w·θ²·e^{ln f}` kept relative to
/// the largest `ln f` seen so far.
#[derive(Debug, Clone, Copy)]
struct ShiftedSums {
    shift: f64,
    sums: [f64; 3],
}

impl ShiftedSums {
    fn add(&mut self, ln_value: f64, weight: f64, theta: f64) {
        if ln_value == f64::NEG_INFINITY || weight == 0.0 {
            return;
        }
        if ln_value > self.shift {
            let scale = (self.shift - ln_value).exp();
            for s in &mut self.sums {
                *s *= scale;
            }
            self.shift = ln_value;
        }
        let v = weight * (ln_value - self.shift).exp();
        self.sums[0] += v;
        self.sums[1] += v * theta;
        self.sums[2] += v * theta * theta;
    }

    fn moments(&self) -> Option<(f64, f64)> {
        (self.sums[0] > 0.0).then(|| (self.sums[1] / self.sums[0], self.sums[2] / self.sums[0]))
    }
}

/// Mean and raw second moment of the density proportional to
/// `exp(ln_density(θ, 1 − θ))` on `[0, 1]`.
///
/// Iterates until both moments move by at most `abs_tol` between levels.
/// Fails with [`Error::ImpossibleObservations`] when the density is zero at
/// every node.
pub fn log_density_moments<F>(ln_density: F, abs_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let mut acc = ShiftedSums {
        shift: f64::NEG_INFINITY,
        sums: [0.0; 3],
    };
    let mut previous: Option<(f64, f64)> = None;
    let mut last_change = f64::INFINITY;
    for level in 0..=MAX_LEVEL {
        for u in level_nodes(level) {
            let n = node(u);
            if n.weight > 0.0 && n.theta > 0.0 && n.one_minus > 0.0 {
                let ln_f = ln_density(n.theta, n.one_minus);
                if ln_f.is_nan() {
                    return Err(Error::ImpossibleObservations);
                }
                acc.add(ln_f, n.weight, n.theta);
            }
        }
        let Some(current) = acc.moments() else {
            if level >= MIN_LEVEL {
                return Err(Error::ImpossibleObservations);
            }
            continue;
        };
        if let Some(prev) = previous {
            last_change = (current.0 - prev.0).abs().max((current.1 - prev.1).abs());
            if level >= MIN_LEVEL && last_change <= abs_tol {
                return Ok(current);
            }
        }
        previous = Some(current);
    }
    Err(Error::QuadratureNoConvergence(last_change))
}
