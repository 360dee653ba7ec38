//! Prediction with expert advice: per-expert regret statistics and the
//! Squint, iProd and Hedge weight rules.
//!
//! Every weight rule returns a point on the simplex. Unnormalized weights are
//! formed in log space and normalized with a max shift, so long games cannot
//! overflow.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_adaptive, ln_exp_linear_integral, ln_exp_quadratic_integral, ln_moment_series, ln_xi, log_sum_exp,
    max_exponent_on_half_interval, normalize_log_weights, QuadratureOptions, QuadratureSpec,
    XiBranch, XiInput,
};

/// Tolerance on `Σ w = 1` accepted from callers.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;
/// Tolerance on `Σ π = 1` for priors.
pub const PRIOR_TOLERANCE: f64 = 1e-12;

pub(crate) fn validate_probability_vector(p: &[f64], tol: f64, what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} is empty")));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{what} has negative or non-finite entries"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Sufficient statistics of the expert game after `rounds` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertGameState {
    prior: Vec<f64>,
    regret: Vec<f64>,
    variance: Vec<f64>,
    cumulative_loss: Vec<f64>,
    learner_loss: f64,
    rounds: u64,
}

impl ExpertGameState {
    /// Fresh game with a uniform prior over `k` experts.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("need at least one expert".into()));
        }
        Self::with_prior(vec![1.0 / k as f64; k])
    }

    pub fn with_prior(prior: Vec<f64>) -> Result<Self> {
        validate_probability_vector(&prior, PRIOR_TOLERANCE, "prior")?;
        let k = prior.len();
        Ok(Self {
            prior,
            regret: vec![0.0; k],
            variance: vec![0.0; k],
            cumulative_loss: vec![0.0; k],
            learner_loss: 0.0,
            rounds: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.prior.len()
    }
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
    /// Cumulative regret `R^k` against each expert.
    pub fn regret(&self) -> &[f64] {
        &self.regret
    }
    /// Cumulative uncentered variance `V^k = Σ (r^k)²`.
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }
    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cumulative_loss
    }
    pub fn learner_loss(&self) -> f64 {
        self.learner_loss
    }
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Instantaneous regrets `r^k = wᵀℓ − ℓ^k` without touching the state.
    pub fn instantaneous_regret(&self, weights: &[f64], losses: &[f64]) -> Result<Vec<f64>> {
        let k = self.k();
        if weights.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: weights.len(),
            });
        }
        if losses.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: losses.len(),
            });
        }
        validate_probability_vector(weights, SIMPLEX_TOLERANCE, "weights")?;
        for (index, &value) in losses.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::LossOutOfRange {
                    index,
                    value,
                    low: 0.0,
                    high: 1.0,
                });
            }
        }
        let mixed: f64 = weights.iter().zip(losses).map(|(w, l)| w * l).sum();
        Ok(losses.iter().map(|l| mixed - l).collect())
    }

    /// Play `weights`, observe `losses ∈ [0,1]^K`, and fold the round into the
    /// statistics. Returns the instantaneous regret vector.
    pub fn update(&mut self, weights: &[f64], losses: &[f64]) -> Result<Vec<f64>> {
        let r = self.instantaneous_regret(weights, losses)?;
        for k in 0..self.k() {
            self.regret[k] += r[k];
            self.variance[k] += r[k] * r[k];
            self.cumulative_loss[k] += losses[k];
        }
        self.learner_loss += weights.iter().zip(losses).map(|(w, l)| w * l).sum::<f64>();
        self.rounds += 1;
        Ok(r)
    }
}

/// Prior on learning rates supported on a finite grid in `(0, 1/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGrid {
    etas: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteGrid {
    pub fn new(etas: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if etas.len() != masses.len() {
            return Err(Error::DimensionMismatch {
                expected: etas.len(),
                got: masses.len(),
            });
        }
        if etas.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
            return Err(Error::InvalidArgument(
                "grid learning rates must lie in (0, 1/2]".into(),
            ));
        }
        if etas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "grid learning rates must be strictly decreasing".into(),
            ));
        }
        validate_probability_vector(&masses, PRIOR_TOLERANCE, "grid masses")?;
        Ok(Self { etas, masses })
    }

    pub fn uniform(etas: Vec<f64>) -> Result<Self> {
        let n = etas.len();
        if n == 0 {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        Self::new(etas, vec![1.0 / n as f64; n])
    }

    /// `n` points `2^{-1-i/2}`, `i = 0..n`, with uniform mass.
    pub fn geometric(n: usize) -> Result<Self> {
        Self::uniform((0..n).map(|i| (-(1.0 + i as f64 / 2.0) * LN_2).exp()).collect())
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn len(&self) -> usize {
        self.etas.len()
    }
    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }
}

/// Prior on the learning rate `η ∈ [0, 1/2]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LearningRatePrior {
    /// Density `∝ exp(aη − bη²)`.
    Conjugate { a: f64, b: f64 },
    /// Density `ln 2 / (η ln²η)`.
    Cv,
    /// Improper density `1/η`.
    ImproperLogUniform,
    DiscreteGrid(DiscreteGrid),
}

fn ln_prior(pi: f64) -> f64 {
    if pi > 0.0 {
        pi.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `ln ∫₀^{1/2} η exp(ηx − η²y) dη`.
///
/// Uses the erf closed form inside the stability window, the exact integral
/// when `y = 0`, and scaled adaptive quadrature otherwise.
pub fn ln_conjugate_moment(x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite("conjugate weight"));
    }
    if y == 0.0 {
        return Ok(ln_linear_moment(x));
    }
    if y > 0.0 {
        let input = XiInput { r: x, v: y };
        if input.branch() == XiBranch::Series {
            return Ok(ln_moment_series(x, y, 1));
        }
        if input.in_stability_window() {
            // 2y·J₁ = x·xi − exp(x/2 − y/4) + 1
            let ln_xi = ln_xi(input);
            let edge = x / 2.0 - y / 4.0;
            let shift = ln_xi.max(edge).max(0.0);
            let scaled = x * (ln_xi - shift).exp() - (edge - shift).exp() + (-shift).exp();
            if scaled > 0.0 {
                return Ok(shift + scaled.ln() - (2.0 * y).ln());
            }
        }
    }
    let m = max_exponent_on_half_interval(x, y);
    let spec = QuadratureSpec::new(0.0, 0.5, QuadratureOptions::relative(1e-12))?;
    let scaled = integrate_adaptive(|eta| eta * (eta * x - eta * eta * y - m).exp(), &spec)?;
    Ok(m + scaled.ln())
}

/// `ln ∫₀^{1/2} η exp(ηx) dη`, limit `ln(1/8)` at `x = 0`.
fn ln_linear_moment(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        // Σ xⁿ / (n! (n+2) 2^{n+2})
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..40 {
            if n > 0 {
                term *= x / (2.0 * n as f64);
            }
            sum += term / ((n + 2) as f64 * 4.0);
        }
        sum.ln()
    } else if x > 40.0 {
        x / 2.0 + ((x / 2.0 - 1.0) + (-x / 2.0).exp()).ln() - 2.0 * x.ln()
    } else {
        (((x / 2.0 - 1.0) * (x / 2.0).exp() + 1.0) / (x * x)).ln()
    }
}

fn ln_cv_moment(r: f64, v: f64, opts: &QuadratureOptions) -> Result<f64> {
    // Substitute p = ln2 / ln(1/η), the CV prior's CDF: dγ = dp, η = 2^{-1/p}.
    let m = max_exponent_on_half_interval(r, v);
    let scaled_opts = QuadratureOptions {
        abs_tol: (opts.abs_tol * (-m).exp()).max(f64::MIN_POSITIVE),
        ..*opts
    };
    let spec = QuadratureSpec::new(0.0, 1.0, scaled_opts)?;
    let integral = integrate_adaptive(
        |p| {
            if p == 0.0 {
                return 0.0;
            }
            let eta = (-LN_2 / p).exp();
            eta * (eta * r - eta * eta * v - m).exp()
        },
        &spec,
    )?;
    Ok(m + integral.ln())
}

fn per_expert<F>(state: &ExpertGameState, mut ln_integral: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut logs = Vec::with_capacity(state.k());
    for k in 0..state.k() {
        let lp = ln_prior(state.prior[k]);
        if lp == f64::NEG_INFINITY {
            logs.push(lp);
        } else {
            logs.push(lp + ln_integral(state.regret[k], state.variance[k])?);
        }
    }
    normalize_log_weights(&logs)
}

/// Squint with the conjugate prior `∝ exp(aη − bη²)`.
pub fn squint_weights_conjugate(state: &ExpertGameState, a: f64, b: f64) -> Result<Vec<f64>> {
    per_expert(state, |r, v| ln_conjugate_moment(a + r, b + v))
}

/// Squint with the improper `1/η` prior: `w^k ∝ π(k) ∫₀^{1/2} exp(ηR − η²V) dη`.
pub fn squint_weights_improper(state: &ExpertGameState) -> Result<Vec<f64>> {
    per_expert(state, |r, v| {
        if v > 0.0 {
            Ok(ln_xi(XiInput::new(r, v)?))
        } else {
            Ok(ln_exp_linear_integral(r))
        }
    })
}

/// Squint with the CV prior, by adaptive quadrature.
pub fn squint_weights_cv(state: &ExpertGameState, opts: &QuadratureOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    if opts.abs_tol > 1e-10 {
        return Err(Error::InvalidArgument(
            "CV weights need abs_tol <= 1e-10".into(),
        ));
    }
    per_expert(state, |r, v| ln_cv_moment(r, v, opts))
}

/// Squint with a discrete learning-rate prior.
pub fn squint_weights_grid(state: &ExpertGameState, grid: &DiscreteGrid) -> Result<Vec<f64>> {
    let mut terms = vec![0.0; grid.len()];
    per_expert(state, |r, v| {
        for (j, (&eta, &mass)) in grid.etas.iter().zip(&grid.masses).enumerate() {
            terms[j] = ln_prior(mass) + eta * r - eta * eta * v + eta.ln();
        }
        Ok(log_sum_exp(&terms))
    })
}

/// Hedge: `w^k ∝ π(k) exp(−η L^k)` on cumulative losses.
pub fn hedge_weights(state: &ExpertGameState, eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Hedge learning rate must be positive, got {eta}"
        )));
    }
    let logs: Vec<f64> = state
        .prior
        .iter()
        .zip(&state.cumulative_loss)
        .map(|(&p, &l)| ln_prior(p) - eta * l)
        .collect();
    normalize_log_weights(&logs)
}

/// Squint weights for any learning-rate prior.
pub fn squint_weights(
    state: &ExpertGameState,
    prior: &LearningRatePrior,
    opts: &QuadratureOptions,
) -> Result<Vec<f64>> {
    match prior {
        LearningRatePrior::Conjugate { a, b } => squint_weights_conjugate(state, *a, *b),
        LearningRatePrior::Cv => squint_weights_cv(state, opts),
        LearningRatePrior::ImproperLogUniform => squint_weights_improper(state),
        LearningRatePrior::DiscreteGrid(g) => squint_weights_grid(state, g),
    }
}

/// The Squint potential `E_{π(k)γ(η)}[exp(ηR^k − η²V^k) − 1]`.
///
/// For the improper prior the integrand is `(exp(ηR − η²V) − 1)/η`, which
/// has the finite limit `R` at `η = 0`. Non-positive along any game in which
/// the matching Squint weights were played.
pub fn potential(
    state: &ExpertGameState,
    prior: &LearningRatePrior,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let mut total = 0.0;
    let ln_z = match prior {
        LearningRatePrior::Conjugate { a, b } => Some(ln_exp_quadratic_integral(*a, *b)?),
        _ => None,
    };
    for k in 0..state.k() {
        let (pi, r, v) = (state.prior[k], state.regret[k], state.variance[k]);
        if pi == 0.0 {
            continue;
        }
        let term = match prior {
            LearningRatePrior::Conjugate { a, b } => {
                (ln_exp_quadratic_integral(a + r, b + v)? - ln_z.unwrap_or(0.0)).exp_m1()
            }
            LearningRatePrior::DiscreteGrid(g) => g
                .etas
                .iter()
                .zip(&g.masses)
                .map(|(&eta, &mass)| mass * (eta * r - eta * eta * v).exp_m1())
                .sum(),
            _ if r == 0.0 && v == 0.0 => 0.0,
            LearningRatePrior::ImproperLogUniform => {
                let spec = QuadratureSpec::new(0.0, 0.5, *opts)?;
                integrate_adaptive(
                    |eta| {
                        if eta == 0.0 {
                            r
                        } else {
                            (eta * r - eta * eta * v).exp_m1() / eta
                        }
                    },
                    &spec,
                )?
            }
            LearningRatePrior::Cv => {
                let spec = QuadratureSpec::new(0.0, 1.0, *opts)?;
                integrate_adaptive(
                    |p| {
                        if p == 0.0 {
                            return 0.0;
                        }
                        let eta = (-LN_2 / p).exp();
                        (eta * r - eta * eta * v).exp_m1()
                    },
                    &spec,
                )?
            }
        };
        total += pi * term;
    }
    Ok(total)
}

/// Running log-products `Σ_t ln(1 + η_j r_t^k)` for iProd.
#[derive(Debug, Clone, PartialEq)]
pub struct IProdAccumulator {
    grid: DiscreteGrid,
    k: usize,
    /// Row-major `k × grid.len()`.
    log_products: Vec<f64>,
    rounds: u64,
}

impl IProdAccumulator {
    pub fn new(k: usize, grid: DiscreteGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            k,
            log_products: vec![0.0; k * n],
            rounds: 0,
        }
    }

    pub fn grid(&self) -> &DiscreteGrid {
        &self.grid
    }
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn push(&mut self, regrets: &[f64]) -> Result<()> {
        if regrets.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: regrets.len(),
            });
        }
        let n = self.grid.len();
        for (k, &r) in regrets.iter().enumerate() {
            for (j, &eta) in self.grid.etas.iter().enumerate() {
                let factor = 1.0 + eta * r;
                if !(factor > 0.0) {
                    return Err(Error::NonPositiveFactor(factor));
                }
                self.log_products[k * n + j] += (eta * r).ln_1p();
            }
        }
        self.rounds += 1;
        Ok(())
    }

    /// `w^k ∝ π(k) Σ_j γ_j η_j Π_t(1 + η_j r_t^k)`.
    pub fn weights(&self, prior: &[f64]) -> Result<Vec<f64>> {
        if prior.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: prior.len(),
            });
        }
        let n = self.grid.len();
        let mut terms = vec![0.0; n];
        let logs: Vec<f64> = (0..self.k)
            .map(|k| {
                for j in 0..n {
                    terms[j] = ln_prior(self.grid.masses[j])
                        + self.grid.etas[j].ln()
                        + self.log_products[k * n + j];
                }
                ln_prior(prior[k]) + log_sum_exp(&terms)
            })
            .collect();
        normalize_log_weights(&logs)
    }

    /// `Σ_k π(k) Σ_j γ_j (Π_t(1 + η_j r_t^k) − 1)`.
    pub fn potential(&self, prior: &[f64]) -> f64 {
        let n = self.grid.len();
        (0..self.k)
            .map(|k| {
                prior[k]
                    * (0..n)
                        .map(|j| self.grid.masses[j] * self.log_products[k * n + j].exp_m1())
                        .sum::<f64>()
            })
            .sum()
    }
}

/// iProd weights from a full history of instantaneous regret vectors.
pub fn iprod_weights_grid(
    history: &[Vec<f64>],
    prior: &[f64],
    grid: &DiscreteGrid,
) -> Result<Vec<f64>> {
    validate_probability_vector(prior, PRIOR_TOLERANCE, "prior")?;
    let mut acc = IProdAccumulator::new(prior.len(), grid.clone());
    for r in history {
        acc.push(r)?;
    }
    acc.weights(prior)
}
