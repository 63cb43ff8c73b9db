//! Model specification and parameter layout.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::digraph::{Digraph, TieMask};
use crate::effects::{ActorCovariate, EffectSet};
use crate::error::{Error, Result};

/// Which digraphs an actor may move to when given an opportunity for change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermittedSetPolicy {
    /// Whether keeping the current digraph is one of the options.
    pub allow_keep: bool,
    pub structural_zeros: Option<TieMask>,
}

impl Default for PermittedSetPolicy {
    fn default() -> Self {
        PermittedSetPolicy { allow_keep: true, structural_zeros: None }
    }
}

impl PermittedSetPolicy {
    /// Whether actor `i` may toggle its tie to `j`.
    #[inline]
    pub fn permits(&self, i: usize, j: usize) -> bool {
        i != j && !self.structural_zeros.as_ref().is_some_and(|m| m.is_forbidden(i, j))
    }
}

/// Everything about the model except the parameter values.
#[derive(Debug, Clone)]
pub struct Model {
    n: usize,
    pub effects: EffectSet,
    pub covariates: Vec<ActorCovariate>,
    pub policy: PermittedSetPolicy,
    /// One objective-function parameter vector per period instead of a shared one.
    pub beta_per_period: bool,
}

impl Model {
    pub fn new(
        n: usize,
        effects: EffectSet,
        covariates: Vec<ActorCovariate>,
        policy: PermittedSetPolicy,
        beta_per_period: bool,
    ) -> Result<Self> {
        for c in &covariates {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len(), what: "covariate" });
            }
        }
        if let Some(mask) = &policy.structural_zeros {
            if mask.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: mask.n(), what: "structural-zero mask" });
            }
        }
        effects.validate(&covariates)?;
        Ok(Model { n, effects, covariates, policy, beta_per_period })
    }

    /// Default policy, shared objective parameters.
    pub fn simple(n: usize, effects: EffectSet, covariates: Vec<ActorCovariate>) -> Result<Self> {
        Model::new(n, effects, covariates, PermittedSetPolicy::default(), false)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn permits(&self, i: usize, j: usize) -> bool {
        self.policy.permits(i, j)
    }

    /// Constant actor-level rates within a period.
    pub fn constant_rates(&self) -> bool {
        self.effects.rate.is_empty()
    }

    /// Off-diagonal tie variables that are not structural zeros.
    pub fn permitted_dyads(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).filter(|&(i, j)| i != j && self.permits(i, j)).collect()
    }

    pub fn layout(&self, periods: usize) -> ParamLayout {
        ParamLayout {
            periods,
            rate_effects: self.effects.rate.len(),
            objective_effects: self.effects.objective.len(),
            beta_per_period: self.beta_per_period,
        }
    }

    /// Labels of the flat parameter vector, in layout order.
    pub fn parameter_names(&self, periods: usize) -> Vec<String> {
        let mut out = Vec::new();
        for m in 0..periods {
            out.push(alloc::format!("rate period {}", m + 1));
        }
        for k in 0..self.effects.rate.len() {
            out.push(alloc::format!("rate {}", self.effects.rate_label(k, &self.covariates)));
        }
        let blocks = if self.beta_per_period { periods } else { 1 };
        for b in 0..blocks {
            for k in 0..self.effects.objective.len() {
                let label = self.effects.objective_label(k, &self.covariates);
                if self.beta_per_period {
                    out.push(alloc::format!("{label} period {}", b + 1));
                } else {
                    out.push(label);
                }
            }
        }
        out
    }

    /// Rejects waves that change a structurally forbidden tie.
    pub fn check_waves(&self, waves: &[Digraph]) -> Result<()> {
        for w in waves {
            if w.n() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: w.n(), what: "wave" });
            }
        }
        for pair in waves.windows(2) {
            for (i, j) in pair[0].differences(&pair[1]) {
                if !self.permits(i, j) {
                    return Err(Error::StructuralZeroConflict { from: i, to: j });
                }
            }
        }
        Ok(())
    }
}

/// Positions of the parameter blocks in the flat vector `theta`:
/// per-period rates, rate-effect coefficients, then objective coefficients
/// (one block, or one block per period).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub periods: usize,
    pub rate_effects: usize,
    pub objective_effects: usize,
    pub beta_per_period: bool,
}

impl ParamLayout {
    pub fn dim(&self) -> usize {
        self.periods + self.rate_effects + self.beta_blocks() * self.objective_effects
    }

    pub fn beta_blocks(&self) -> usize {
        if self.beta_per_period {
            self.periods
        } else {
            1
        }
    }

    #[inline]
    pub fn rate(&self, period: usize) -> usize {
        period
    }

    #[inline]
    pub fn rate_effect(&self, k: usize) -> usize {
        self.periods + k
    }

    /// Start of the objective block used in `period`.
    #[inline]
    pub fn beta_start(&self, period: usize) -> usize {
        let block = if self.beta_per_period { period } else { 0 };
        self.periods + self.rate_effects + block * self.objective_effects
    }

    pub fn is_rate(&self, idx: usize) -> bool {
        idx < self.periods
    }
}

/// Parameter values `theta = (alpha, beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// Per-period rate multipliers `alpha_m`, strictly positive.
    pub rates: Vec<f64>,
    /// Coefficients of the rate effects, shared over periods.
    pub rate_coefs: Vec<f64>,
    /// One objective vector, or one per period.
    pub beta: Vec<Vec<f64>>,
}

impl Parameters {
    pub fn new(rates: Vec<f64>, rate_coefs: Vec<f64>, beta: Vec<f64>) -> Self {
        Parameters { rates, rate_coefs, beta: vec![beta] }
    }

    pub fn per_period(rates: Vec<f64>, rate_coefs: Vec<f64>, beta: Vec<Vec<f64>>) -> Self {
        Parameters { rates, rate_coefs, beta }
    }

    pub fn periods(&self) -> usize {
        self.rates.len()
    }

    #[inline]
    pub fn beta_for(&self, period: usize) -> &[f64] {
        if self.beta.len() == 1 {
            &self.beta[0]
        } else {
            &self.beta[period]
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.rates.is_empty() {
            return Err(Error::InvalidParameter("at least one period rate is required".into()));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("rate {r} is not strictly positive")));
        }
        if self.rate_coefs.len() != model.effects.rate.len() {
            return Err(Error::LengthMismatch {
                expected: model.effects.rate.len(),
                found: self.rate_coefs.len(),
                what: "rate-effect coefficients",
            });
        }
        let blocks = if model.beta_per_period { self.periods() } else { 1 };
        if self.beta.len() != blocks {
            return Err(Error::LengthMismatch { expected: blocks, found: self.beta.len(), what: "objective blocks" });
        }
        for b in &self.beta {
            if b.len() != model.effects.objective.len() {
                return Err(Error::LengthMismatch {
                    expected: model.effects.objective.len(),
                    found: b.len(),
                    what: "objective coefficients",
                });
            }
        }
        if self.beta.iter().flatten().chain(&self.rate_coefs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout {
            periods: self.rates.len(),
            rate_effects: self.rate_coefs.len(),
            objective_effects: self.beta.first().map_or(0, Vec::len),
            beta_per_period: self.beta.len() > 1,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.rates.clone();
        v.extend_from_slice(&self.rate_coefs);
        for b in &self.beta {
            v.extend_from_slice(b);
        }
        v
    }

    pub fn from_vec(layout: &ParamLayout, v: &[f64]) -> Result<Self> {
        if v.len() != layout.dim() {
            return Err(Error::LengthMismatch { expected: layout.dim(), found: v.len(), what: "parameter vector" });
        }
        let p = layout.periods;
        let rc = layout.rate_effects;
        let l = layout.objective_effects;
        let beta = (0..layout.beta_blocks()).map(|b| v[p + rc + b * l..p + rc + (b + 1) * l].to_vec()).collect();
        Ok(Parameters { rates: v[..p].to_vec(), rate_coefs: v[p..p + rc].to_vec(), beta })
    }

    /// Same parameters with per-period objective blocks, repeating a shared block.
    pub fn expanded_per_period(&self) -> Self {
        if self.beta.len() == self.periods() {
            return self.clone();
        }
        Parameters {
            rates: self.rates.clone(),
            rate_coefs: self.rate_coefs.clone(),
            beta: vec![self.beta[0].clone(); self.periods()],
        }
    }
}
