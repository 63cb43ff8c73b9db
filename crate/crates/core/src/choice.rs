//! Rate functions, actor selection, and multinomial-logit choice probabilities.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::digraph::Digraph;
use crate::effects::{evaluate_objective_statistic, ChangeStatistics};
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};

/// `f_i(beta, previous, candidate) = sum_k beta_k s_ik(previous, candidate)`.
pub fn objective_function(
    actor: usize,
    previous: &Digraph,
    candidate: &Digraph,
    beta: &[f64],
    model: &Model,
) -> Result<f64> {
    let effects = &model.effects.objective;
    if beta.len() != effects.len() {
        return Err(Error::LengthMismatch { expected: effects.len(), found: beta.len(), what: "objective coefficients" });
    }
    let mut f = 0.0;
    for (e, b) in effects.iter().zip(beta) {
        f += b * evaluate_objective_statistic(e, actor, previous, candidate, &model.covariates)?;
    }
    Ok(f)
}

/// Reusable buffers for evaluating the choice distribution of one actor.
///
/// After [`ChoiceEngine::compute`], `probs[j]` is `p_ij` and `probs[i]` is the
/// probability of keeping the current digraph; excluded options have 0.
#[derive(Debug, Clone, Default)]
pub struct ChoiceEngine {
    pub stats: ChangeStatistics,
    pub probs: Vec<f64>,
    utilities: Vec<f64>,
}

impl ChoiceEngine {
    pub fn new(model: &Model) -> Self {
        ChoiceEngine {
            stats: ChangeStatistics::new(model.n(), model.effects.objective.len()),
            probs: vec![0.0; model.n()],
            utilities: vec![0.0; model.n()],
        }
    }

    pub fn compute(&mut self, model: &Model, beta: &[f64], i: usize, x: &Digraph) -> Result<()> {
        let n = x.n();
        self.stats.compute(&model.effects.objective, &model.covariates, i, x);
        self.probs.resize(n, 0.0);
        self.utilities.resize(n, 0.0);
        let mut max_u = f64::NEG_INFINITY;
        for j in 0..n {
            let allowed = if j == i { model.policy.allow_keep } else { model.permits(i, j) };
            let u = if !allowed {
                f64::NEG_INFINITY
            } else if j == i {
                0.0
            } else {
                self.stats.row(j).iter().zip(beta).map(|(s, b)| s * b).sum()
            };
            self.utilities[j] = u;
            if u > max_u {
                max_u = u;
            }
        }
        if max_u == f64::NEG_INFINITY {
            return Err(Error::EmptyPermittedSet { actor: i });
        }
        let mut total = 0.0;
        for j in 0..n {
            let w = if self.utilities[j] == f64::NEG_INFINITY { 0.0 } else { (self.utilities[j] - max_u).exp() };
            self.probs[j] = w;
            total += w;
        }
        for p in &mut self.probs {
            *p /= total;
        }
        Ok(())
    }
}

/// `p_ij(beta, current)` for every `j`; entry `i` is the no-change option.
pub fn choice_probabilities(actor: usize, current: &Digraph, beta: &[f64], model: &Model) -> Result<Vec<f64>> {
    if beta.len() != model.effects.objective.len() {
        return Err(Error::LengthMismatch {
            expected: model.effects.objective.len(),
            found: beta.len(),
            what: "objective coefficients",
        });
    }
    let mut engine = ChoiceEngine::new(model);
    engine.compute(model, beta, actor, current)?;
    Ok(engine.probs)
}

fn check_period(params: &Parameters, period: usize) -> Result<()> {
    if period >= params.rates.len() {
        return Err(Error::PeriodOutOfRange { period, periods: params.rates.len() });
    }
    Ok(())
}

/// Unchecked rate of one actor.
#[inline]
pub(crate) fn actor_rate(actor: usize, x: &Digraph, params: &Parameters, model: &Model, period: usize) -> f64 {
    let base = params.rates[period];
    if model.effects.rate.is_empty() {
        return base;
    }
    let eta: f64 = model
        .effects
        .rate
        .iter()
        .zip(&params.rate_coefs)
        .map(|(e, c)| c * e.evaluate(actor, x, &model.covariates))
        .sum();
    base * eta.exp()
}

/// Fills `out[i] = lambda_i` and returns the total rate.
pub(crate) fn actor_rates(x: &Digraph, params: &Parameters, model: &Model, period: usize, out: &mut Vec<f64>) -> f64 {
    out.clear();
    let mut total = 0.0;
    for i in 0..x.n() {
        let r = actor_rate(i, x, params, model, period);
        out.push(r);
        total += r;
    }
    total
}

/// Total rate `lambda(alpha, x)`; for constant rates this is `n alpha_m`.
#[inline]
pub fn total_rate(x: &Digraph, params: &Parameters, model: &Model, period: usize) -> f64 {
    if model.effects.rate.is_empty() {
        return x.n() as f64 * params.rates[period];
    }
    (0..x.n()).map(|i| actor_rate(i, x, params, model, period)).sum()
}

/// `lambda_i(alpha, x) = alpha_m exp(sum_k c_k r_ik(x))`.
pub fn rate(actor: usize, current: &Digraph, params: &Parameters, model: &Model, period: usize) -> Result<f64> {
    check_period(params, period)?;
    Ok(actor_rate(actor, current, params, model, period))
}

/// `pi_i = lambda_i / lambda` for every actor.
pub fn actor_selection_probabilities(
    current: &Digraph,
    params: &Parameters,
    model: &Model,
    period: usize,
) -> Result<Vec<f64>> {
    check_period(params, period)?;
    let mut rates = Vec::new();
    let total = actor_rates(current, params, model, period, &mut rates);
    if !(total > 0.0) {
        return Err(Error::ZeroTotalRate);
    }
    Ok(rates.into_iter().map(|r| r / total).collect())
}

/// Off-diagonal entry `q(from, to)` of the intensity matrix for `period`.
/// Zero unless the digraphs differ in exactly one permitted tie variable.
pub fn intensity_entry(from: &Digraph, to: &Digraph, params: &Parameters, model: &Model, period: usize) -> f64 {
    if from.hamming(to) != 1 || period >= params.rates.len() {
        return 0.0;
    }
    let (i, j) = from.differences(to)[0];
    if !model.permits(i, j) {
        return 0.0;
    }
    let mut engine = ChoiceEngine::new(model);
    match engine.compute(model, params.beta_for(period), i, from) {
        Ok(()) => actor_rate(i, from, params, model, period) * engine.probs[j],
        Err(_) => 0.0,
    }
}
