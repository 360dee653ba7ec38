//! Right-hand sides of the regret bounds, and the aggregated statistics they
//! are evaluated on.
//!
//! The calculators are pure formula evaluators on already-aggregated
//! statistics, so each one can be checked in isolation.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{DiscreteGrid, ExpertGameState};
use crate::numerics::{
    integrate_adaptive, max_exponent_on_half_interval, QuadratureOptions, QuadratureSpec,
};

/// `ln(max(x, 1))`.
pub fn ln_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

fn check_pi_mass(pi_mass: f64) -> Result<()> {
    if pi_mass > 0.0 && pi_mass <= 1.0 + 1e-12 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "prior mass must lie in (0, 1], got {pi_mass}"
        )))
    }
}

fn check_variance(v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "variance must be finite and nonnegative, got {v}"
        )))
    }
}

/// Prior-conditional averages of regret and variance over a subset of experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAggregate {
    pub subset: Vec<usize>,
    pub pi_mass: f64,
    pub r_agg: f64,
    pub v_agg: f64,
}

pub fn aggregate_subset(state: &ExpertGameState, subset: &[usize]) -> Result<SubsetAggregate> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("subset is empty".into()));
    }
    let k = state.k();
    let mut seen = vec![false; k];
    for &i in subset {
        if i >= k {
            return Err(Error::InvalidArgument(format!(
                "expert index {i} out of range for K = {k}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!("expert {i} listed twice")));
        }
    }
    let prior = state.prior();
    let pi_mass: f64 = subset.iter().map(|&i| prior[i]).sum();
    if !(pi_mass > 0.0) {
        return Err(Error::InvalidArgument("subset has zero prior mass".into()));
    }
    let avg = |xs: &[f64]| subset.iter().map(|&i| prior[i] * xs[i]).sum::<f64>() / pi_mass;
    Ok(SubsetAggregate {
        subset: subset.to_vec(),
        pi_mass: pi_mass.min(1.0),
        r_agg: avg(state.regret()),
        v_agg: avg(state.variance()),
    })
}

/// Normalizer `Z(a, b) = ∫₀^{1/2} exp(aη − bη²) dη` of the conjugate prior.
pub fn normalizer_z(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("Z(a, b)"));
    }
    if a == 0.0 && b == 0.0 {
        return Ok(0.5);
    }
    let m = max_exponent_on_half_interval(a, b);
    let spec = QuadratureSpec::new(0.0, 0.5, QuadratureOptions::relative(1e-13))?;
    let scaled = integrate_adaptive(|eta| (eta * a - eta * eta * b - m).exp(), &spec)?;
    Ok(m.exp() * scaled)
}

/// Squint with the conjugate prior.
pub fn bound_theorem1(v: f64, pi_mass: f64, a: f64, b: f64) -> Result<f64> {
    check_variance(v)?;
    check_pi_mass(pi_mass)?;
    let vb = v + b;
    if !(vb >= 0.0) {
        return Err(Error::InvalidArgument(format!("V + b = {vb} is negative")));
    }
    let z = normalizer_z(a, b)?;
    let main = 2.0 * (vb * (0.5 + ln_plus(z * (2.0 * vb).sqrt() / pi_mass))).sqrt();
    Ok(main + 5.0 * ln_plus(2.0 * 5f64.sqrt() * z / pi_mass) - a)
}

/// Squint with the CV prior.
pub fn bound_theorem2(v: f64, pi_mass: f64) -> Result<f64> {
    check_variance(v)?;
    check_pi_mass(pi_mass)?;
    let inner = ln_plus(2.0 * v.sqrt() / (2.0 - SQRT_2)).powi(2) / (pi_mass * LN_2);
    Ok((2.0 * v).sqrt() * (1.0 + (2.0 * ln_plus(inner)).sqrt()) - 5.0 * pi_mass.ln() + 4.0)
}

/// Squint with the improper prior, after `t` rounds.
pub fn bound_theorem3(v: f64, pi_mass: f64, t: u64) -> Result<f64> {
    check_variance(v)?;
    check_pi_mass(pi_mass)?;
    let lt = (t as f64).ln_1p();
    let log_arg = (0.5 + lt) / pi_mass;
    // (1/2)/π(K) ≥ 1/2 keeps the logarithm finite; clamp its negative part
    // at zero since the square root needs a nonnegative argument.
    let main = (2.0 * v).sqrt() * (1.0 + (2.0 * log_arg.ln()).max(0.0).sqrt());
    Ok(main + 5.0 * (1.0 + (1.0 + 2.0 * lt) / pi_mass).ln())
}

/// Component iProd bound with a learning-rate grid missing the optimum by a
/// factor `alpha`, where the grid point has prior mass `gamma_mass`.
pub fn bound_eq20(v: f64, entropy: f64, k: usize, alpha: f64, gamma_mass: f64) -> Result<f64> {
    check_variance(v)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )));
    }
    if !(gamma_mass > 0.0 && gamma_mass <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid mass must lie in (0, 1], got {gamma_mass}"
        )));
    }
    let coeff = 2.0 / (alpha * (2.0 - alpha)).sqrt();
    Ok(coeff * (v * (entropy - k as f64 * gamma_mass.ln())).sqrt())
}

/// `⌈1 + log₂ T⌉`, by integer arithmetic.
pub fn grid_size(t: u64) -> Result<usize> {
    if t == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    // ⌈log₂ T⌉ is the bit length of T − 1.
    Ok(1 + (64 - (t - 1).leading_zeros()) as usize)
}

/// Component iProd with the uniform grid for horizon `t`.
pub fn bound_theorem4(v: f64, entropy: f64, k: usize, t: u64) -> Result<f64> {
    check_variance(v)?;
    let ln_g = (grid_size(t)? as f64).ln();
    let kf = k as f64;
    Ok(4.0 / 3f64.sqrt() * (v * (entropy + kf * ln_g)).sqrt()
        + 4.0 * entropy
        + kf * (4.0 * ln_g).max(1.0))
}

/// Regret bound for Squint or iProd with a discrete learning-rate prior:
/// `min_j η_j V + ln(1/(π(K) γ_j))/η_j`.
///
/// Follows from the potential staying non-positive: each grid point's term
/// alone is at most 1, and Jensen over `π(·|K)` moves it to the subset average.
pub fn bound_grid(v: f64, pi_mass: f64, grid: &DiscreteGrid) -> Result<f64> {
    check_variance(v)?;
    check_pi_mass(pi_mass)?;
    Ok(grid
        .etas()
        .iter()
        .zip(grid.masses())
        .filter(|(_, &m)| m > 0.0)
        .map(|(&eta, &m)| eta * v - (pi_mass * m).ln() / eta)
        .fold(f64::INFINITY, f64::min))
}

/// `Σ_k v ln(v/u) + (1 − v) ln((1 − v)/(1 − u))`, with `0 ln 0 = 0`.
///
/// Returns `+∞` when some `u^k` sits on the boundary of `[0, 1]` and `v^k`
/// differs from it.
pub fn binary_relative_entropy(v: &[f64], u: &[f64]) -> Result<f64> {
    if v.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let in_unit = |x: &f64| (0.0..=1.0).contains(x);
    if !v.iter().all(in_unit) || !u.iter().all(in_unit) {
        return Err(Error::InvalidArgument(
            "relative entropy arguments must lie in [0, 1]".into(),
        ));
    }
    fn term(p: f64, q: f64) -> f64 {
        if p == 0.0 {
            0.0
        } else if q == 0.0 {
            f64::INFINITY
        } else {
            p * (p / q).ln()
        }
    }
    Ok(v
        .iter()
        .zip(u)
        .map(|(&v, &u)| term(v, u) + term(1.0 - v, 1.0 - u))
        .sum())
}

/// Regret statistics of Component iProd against one comparator `v ∈ U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorAggregate {
    pub v: Vec<f64>,
    pub r_v: f64,
    pub v_v: f64,
    pub entropy: f64,
}
