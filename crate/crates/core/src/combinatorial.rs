//! Component Bayes and Component iProd on a concept class.
//!
//! Component iProd runs one Component Bayes instance per learning rate on a
//! finite grid and plays the `e^{−L}`-weighted average of their usages.

use crate::bounds::{binary_relative_entropy, bound_theorem4, grid_size, ComparatorAggregate};
use crate::error::{Error, Result};
use crate::experts::DiscreteGrid;
use crate::numerics::log_sum_exp;
use crate::polytopes::{clamp_interior, project, ConceptClass, HULL_TOLERANCE};

/// `Σ_k −ln(u e^{−x1} + (1 − u) e^{−x0})`.
pub fn mix_loss(u: &[f64], x1: &[f64], x0: &[f64]) -> Result<f64> {
    if x1.len() != u.len() || x0.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: if x1.len() != u.len() { x1.len() } else { x0.len() },
        });
    }
    let mut total = 0.0;
    for ((&u, &a), &b) in u.iter().zip(x1).zip(x0) {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!("usage {u} outside [0, 1]")));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("mix loss"));
        }
        let shift = a.min(b);
        let inner = u * (shift - a).exp() + (1.0 - u) * (shift - b).exp();
        if !(inner > 0.0) {
            return Err(Error::InvalidArgument("mix loss argument is not positive".into()));
        }
        total += shift - inner.ln();
    }
    Ok(total)
}

/// Projected componentwise Bayes on mix losses `(x1, x0)`.
#[derive(Debug, Clone)]
pub struct ComponentBayes {
    class: ConceptClass,
    u_tilde: Vec<f64>,
    usage: Vec<f64>,
    cumulative_mix_loss: f64,
    rounds: u64,
}

impl ComponentBayes {
    pub fn new(class: ConceptClass, prior: &[f64]) -> Result<Self> {
        let u_tilde = clamp_interior(prior);
        let usage = project(&class, &u_tilde)?;
        Ok(Self {
            class,
            u_tilde,
            usage,
            cumulative_mix_loss: 0.0,
            rounds: 0,
        })
    }

    /// Current projected usage `u_t ∈ U`.
    pub fn usage(&self) -> &[f64] {
        &self.usage
    }
    pub fn cumulative_mix_loss(&self) -> f64 {
        self.cumulative_mix_loss
    }
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Suffer the mix loss of the current usage, then update and re-project.
    pub fn observe(&mut self, x1: &[f64], x0: &[f64]) -> Result<f64> {
        let loss = mix_loss(&self.usage, x1, x0)?;
        // Posterior from the projected usage; projected coordinates fixed at 0/1 stay there.
        let base = clamp_interior(&self.usage);
        let posterior = crate::polytopes::unconstrained_update(&base, x1, x0)?;
        self.u_tilde = clamp_interior(&posterior);
        self.usage = project(&self.class, &self.u_tilde)?;
        self.cumulative_mix_loss += loss;
        self.rounds += 1;
        Ok(loss)
    }

    pub fn unprojected(&self) -> &[f64] {
        &self.u_tilde
    }
}

/// State of one learning rate in Component iProd.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSlice {
    pub eta: f64,
    pub gamma: f64,
    /// Unprojected vector `ũ^η`.
    pub u_tilde: Vec<f64>,
    /// Projected usage `u^η`.
    pub u_proj: Vec<f64>,
    /// Negative log aggregation weight `L^η`.
    pub l: f64,
    /// Cumulative mix loss `Σ_t Σ_k −ln(1 + η(u_t − u_t^η)ℓ_t)`.
    pub mix_loss: f64,
}

/// Component iProd state.
#[derive(Debug, Clone)]
pub struct CombGameState {
    class: ConceptClass,
    slices: Vec<EtaSlice>,
    prior: Vec<f64>,
    t: u64,
    t_max: u64,
    played: Option<Vec<f64>>,
    comparators: Vec<ComparatorAggregate>,
}

/// Learning-rate grid `{2^{−i} : i = 1..⌈1 + log₂ T⌉}` with uniform mass.
pub fn default_grid(t_max: u64) -> Result<DiscreteGrid> {
    let n = grid_size(t_max)?;
    DiscreteGrid::uniform((1..=n as i32).map(|i| 2f64.powi(-i)).collect())
}

/// Component iProd with the default grid for horizon `t_max`.
pub fn make_game(class: ConceptClass, prior_vec: &[f64], t_max: u64) -> Result<CombGameState> {
    CombGameState::with_grid(class, prior_vec, default_grid(t_max)?, t_max)
}

impl CombGameState {
    pub fn with_grid(class: ConceptClass, prior_vec: &[f64], grid: DiscreteGrid, t_max: u64) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if prior_vec.len() != class.dim() {
            return Err(Error::DimensionMismatch {
                expected: class.dim(),
                got: prior_vec.len(),
            });
        }
        if prior_vec.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prior vector"));
        }
        let prior = clamp_interior(prior_vec);
        let slices = grid
            .etas()
            .iter()
            .zip(grid.masses())
            .map(|(&eta, &gamma)| EtaSlice {
                eta,
                gamma,
                u_tilde: prior.clone(),
                u_proj: Vec::new(),
                l: -(gamma * eta).ln(),
                mix_loss: 0.0,
            })
            .collect();
        Ok(Self {
            class,
            slices,
            prior,
            t: 0,
            t_max,
            played: None,
            comparators: Vec::new(),
        })
    }

    pub fn class(&self) -> &ConceptClass {
        &self.class
    }
    pub fn slices(&self) -> &[EtaSlice] {
        &self.slices
    }
    /// Interior-clamped prior vector `π`.
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
    pub fn rounds(&self) -> u64 {
        self.t
    }
    pub fn horizon(&self) -> u64 {
        self.t_max
    }
    pub fn k(&self) -> usize {
        self.class.dim()
    }
    pub fn comparators(&self) -> &[ComparatorAggregate] {
        &self.comparators
    }

    /// Track regret against `v ∈ U`. Returns its index.
    pub fn register_comparator(&mut self, v: &[f64]) -> Result<usize> {
        let residual = self.class.hull_residual(v)?;
        if residual > HULL_TOLERANCE {
            return Err(Error::NotInHull { residual });
        }
        if self.t > 0 {
            return Err(Error::InvalidArgument(
                "comparators must be registered before the first round".into(),
            ));
        }
        let entropy = binary_relative_entropy(v, &self.prior)?;
        self.comparators.push(ComparatorAggregate {
            v: v.to_vec(),
            r_v: 0.0,
            v_v: 0.0,
            entropy,
        });
        Ok(self.comparators.len() - 1)
    }

    /// Project every slice and return the played usage
    /// `u_t = Σ e^{−L^η} u^η / Σ e^{−L^η}`.
    pub fn play(&mut self) -> Result<Vec<f64>> {
        if let Some(u) = &self.played {
            return Ok(u.clone());
        }
        for s in &mut self.slices {
            s.u_proj = project(&self.class, &s.u_tilde)?;
        }
        let logs: Vec<f64> = self.slices.iter().map(|s| -s.l).collect();
        let norm = log_sum_exp(&logs);
        let mut u = vec![0.0; self.k()];
        for (s, lw) in self.slices.iter().zip(&logs) {
            let w = (lw - norm).exp();
            for (ui, pi) in u.iter_mut().zip(&s.u_proj) {
                *ui += w * pi;
            }
        }
        for x in &mut u {
            *x = x.clamp(0.0, 1.0);
        }
        self.played = Some(u.clone());
        Ok(u)
    }

    /// Observe `ℓ_t ∈ [−1, 1]^K` for the usage returned by [`play`](Self::play).
    pub fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let k = self.k();
        if losses.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: losses.len() });
        }
        for (index, &value) in losses.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::LossOutOfRange { index, value, low: -1.0, high: 1.0 });
            }
        }
        let u = self.played.take().ok_or(Error::NotPlayed)?;
        let kf = k as f64;
        for s in &mut self.slices {
            let eta = s.eta;
            let mut round_mix = 0.0;
            for i in 0..k {
                let (ui, ue, l) = (u[i], s.u_proj[i], losses[i]);
                let denom = 1.0 + eta * (ui - ue) * l;
                let numer = 1.0 + eta * (ui - 1.0) * l;
                if !(denom > 0.0) || !(numer >= 0.0) {
                    return Err(Error::NonPositiveFactor(denom.min(numer)));
                }
                s.u_tilde[i] = (ue * numer / denom).clamp(
                    crate::polytopes::INTERIOR_CLAMP,
                    1.0 - crate::polytopes::INTERIOR_CLAMP,
                );
                round_mix -= (eta * (ui - ue) * l).ln_1p();
            }
            s.mix_loss += round_mix;
            s.l += round_mix / kf;
        }
        for c in &mut self.comparators {
            for i in 0..k {
                let r1 = u[i] * losses[i] - losses[i];
                let r0 = u[i] * losses[i];
                let v = c.v[i];
                c.r_v += v * r1 + (1.0 - v) * r0;
                c.v_v += v * r1 * r1 + (1.0 - v) * r0 * r0;
            }
        }
        self.t += 1;
        Ok(())
    }

    /// `Σ_η γ(η)(exp(−M^η / K) − 1)` with `M^η` the cumulative mix loss.
    pub fn potential(&self) -> f64 {
        let kf = self.k() as f64;
        self.slices
            .iter()
            .map(|s| s.gamma * (-s.mix_loss / kf).exp_m1())
            .sum()
    }

    /// `(ηR^v − η²V^v, Δ₂(v‖π) − K ln γ(η))` for a registered comparator.
    pub fn lemma4_check(&self, eta: f64, comparator: usize) -> Result<(f64, f64)> {
        let slice = self
            .slices
            .iter()
            .find(|s| s.eta == eta)
            .ok_or(Error::NotAGridPoint(eta))?;
        let c = self.comparators.get(comparator).ok_or_else(|| {
            Error::InvalidArgument(format!("no comparator with index {comparator}"))
        })?;
        Ok((
            eta * c.r_v - eta * eta * c.v_v,
            c.entropy - self.k() as f64 * slice.gamma.ln(),
        ))
    }

    /// Regret bound for a registered comparator, at the configured horizon.
    pub fn comparator_bound(&self, comparator: usize) -> Result<f64> {
        let c = self.comparators.get(comparator).ok_or_else(|| {
            Error::InvalidArgument(format!("no comparator with index {comparator}"))
        })?;
        bound_theorem4(c.v_v, c.entropy, self.k(), self.t_max)
    }
}
