//! Sample paths between two observations and their complete-data likelihood.
//!
//! A sample path is the ordered list of micro-steps `(i_r, j_r)` that carries
//! the digraph from one wave to the next, with `i_r == j_r` marking an
//! opportunity at which nothing changed. Waiting times are integrated out;
//! the probability that exactly `R` opportunities fall in the period enters
//! through `kappa`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use core::fmt;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::choice::{actor_rates, ChoiceEngine};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// One opportunity for change: actor `ego` toggles its tie to `alter`, or
/// does nothing when `ego == alter`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MicroStep {
    ego: u32,
    alter: u32,
}

impl MicroStep {
    #[inline]
    pub fn new(ego: usize, alter: usize) -> Self {
        MicroStep { ego: ego as u32, alter: alter as u32 }
    }

    #[inline]
    pub fn ego(self) -> usize {
        self.ego as usize
    }

    #[inline]
    pub fn alter(self) -> usize {
        self.alter as usize
    }

    #[inline]
    pub fn is_no_change(self) -> bool {
        self.ego == self.alter
    }
}

impl fmt::Debug for MicroStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.ego, self.alter)
    }
}

/// The augmenting data for one period.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SamplePath {
    pub period: usize,
    pub steps: Vec<MicroStep>,
}

impl SamplePath {
    pub fn new(period: usize, steps: Vec<MicroStep>) -> Self {
        SamplePath { period, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn no_change_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_no_change()).count()
    }
}

/// Walks the states `x^(0), x^(1), ...` of a path, one step at a time.
pub struct PathReplay<'a> {
    steps: &'a [MicroStep],
    state: Digraph,
    pos: usize,
}

impl<'a> PathReplay<'a> {
    pub fn new(steps: &'a [MicroStep], start: &Digraph) -> Self {
        PathReplay { steps, state: start.clone(), pos: 0 }
    }

    /// The state `x^(pos)` before step `pos` is applied.
    #[inline]
    pub fn state(&self) -> &Digraph {
        &self.state
    }

    #[inline]
    pub fn position(&self) -> usize {
        self.pos
    }

    #[inline]
    pub fn peek(&self) -> Option<MicroStep> {
        self.steps.get(self.pos).copied()
    }

    /// Applies the next step. Returns false at the end of the path.
    #[inline]
    pub fn advance(&mut self) -> bool {
        match self.steps.get(self.pos) {
            Some(s) => {
                if !s.is_no_change() {
                    self.state.toggle(s.ego(), s.alter());
                }
                self.pos += 1;
                true
            }
            None => false,
        }
    }

    /// Advances until `pos == target` (or the end).
    pub fn seek(&mut self, target: usize) {
        while self.pos < target && self.advance() {}
    }

    pub fn into_state(self) -> Digraph {
        self.state
    }
}

/// Parity condition: every tie variable occurs an odd number of times in the
/// path exactly when it differs between `start` and `end`.
pub fn validate_parity(path: &SamplePath, start: &Digraph, end: &Digraph) -> bool {
    let n = start.n();
    if end.n() != n || path.steps.iter().any(|s| s.ego() >= n || s.alter() >= n) {
        return false;
    }
    let mut replay = PathReplay::new(&path.steps, start);
    replay.seek(path.len());
    replay.into_state() == *end
}

/// Index of the first step that toggles a tie the model forbids, if any.
pub fn first_forbidden_step(path: &SamplePath, model: &Model) -> Option<usize> {
    path.steps.iter().position(|s| {
        s.ego() >= model.n() || s.alter() >= model.n() || (!s.is_no_change() && !model.permits(s.ego(), s.alter()))
    })
}

/// The differing tie variables between two waves, each once, in random order.
pub fn initial_path<R: Rng + ?Sized>(period: usize, start: &Digraph, end: &Digraph, rng: &mut R) -> SamplePath {
    let mut steps: Vec<MicroStep> = start.differences(end).into_iter().map(|(i, j)| MicroStep::new(i, j)).collect();
    steps.shuffle(rng);
    SamplePath { period, steps }
}

fn ln_factorial(r: usize) -> f64 {
    libm::lgamma(r as f64 + 1.0)
}

/// Log of the Poisson probability of exactly `r` opportunities when every
/// actor has constant rate `alpha` over a period of length `duration`.
pub fn log_kappa_poisson(alpha: f64, n: usize, duration: f64, r: usize) -> f64 {
    let mean = n as f64 * alpha * duration;
    if mean == 0.0 {
        return if r == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    r as f64 * mean.ln() - mean - ln_factorial(r)
}

pub fn kappa_poisson(alpha: f64, n: usize, duration: f64, r: usize) -> Result<f64> {
    if !(alpha >= 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("kappa needs nonnegative rate and duration, got {alpha}, {duration}")));
    }
    Ok(log_kappa_poisson(alpha, n, duration, r).exp())
}

/// Normal approximation of `log kappa` from the total rates
/// `lambda(x^(0)), ..., lambda(x^(R))`, `R >= 1`.
pub fn log_kappa_normal(total_rates: &[f64], duration: f64) -> f64 {
    let r = total_rates.len() - 1;
    debug_assert!(r >= 1);
    let mut mu = 0.0;
    let mut var = 0.0;
    for &l in &total_rates[..r] {
        mu += 1.0 / l;
        var += 1.0 / (l * l);
    }
    let dev = duration - mu;
    -total_rates[r].ln() - 0.5 * (LN_2PI + var.ln()) - dev * dev / (2.0 * var)
}

/// Exact probability of no opportunity in the period when the first state has
/// total rate `lambda0`; used instead of the normal approximation when `R = 0`.
pub fn log_kappa_survival(lambda0: f64, duration: f64) -> f64 {
    -lambda0 * duration
}

/// Probability that exactly `R` opportunities occur, by the normal
/// approximation to the sum of the exponential waiting times.
pub fn kappa_normal_approx(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("normal approximation of kappa is undefined for R = 0".into()));
    }
    let period = path.period;
    let mut rates = Vec::new();
    let mut totals = Vec::with_capacity(path.len() + 1);
    let mut replay = PathReplay::new(&path.steps, start);
    loop {
        totals.push(actor_rates(replay.state(), params, model, period, &mut rates));
        if !replay.advance() {
            break;
        }
    }
    Ok(log_kappa_normal(&totals, duration).exp())
}

/// Per-period view of a model at fixed parameters, with scratch space for
/// evaluating single micro-steps.
pub(crate) struct StepEvaluator<'a> {
    pub model: &'a Model,
    pub params: &'a Parameters,
    pub period: usize,
    pub duration: f64,
    pub engine: ChoiceEngine,
    rates: Vec<f64>,
}

impl<'a> StepEvaluator<'a> {
    pub fn new(model: &'a Model, params: &'a Parameters, period: usize, duration: f64) -> Self {
        StepEvaluator { model, params, period, duration, engine: ChoiceEngine::new(model), rates: Vec::new() }
    }

    /// `log pi_i(x) + log p_ij(x)`; `-inf` for impossible steps.
    pub fn step_term(&mut self, x: &Digraph, step: MicroStep) -> f64 {
        let (i, j) = (step.ego(), step.alter());
        let n = self.model.n();
        if i >= n || j >= n || (i != j && !self.model.permits(i, j)) {
            return f64::NEG_INFINITY;
        }
        if self.engine.compute(self.model, self.params.beta_for(self.period), i, x).is_err() {
            return f64::NEG_INFINITY;
        }
        let p = self.engine.probs[j];
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let log_pi = if self.model.constant_rates() {
            -(n as f64).ln()
        } else {
            let total = actor_rates(x, self.params, self.model, self.period, &mut self.rates);
            (self.rates[i] / total).ln()
        };
        log_pi + p.ln()
    }

    /// Total rate of `x`, only needed for nonconstant rates.
    pub fn total_rate(&mut self, x: &Digraph) -> f64 {
        actor_rates(x, self.params, self.model, self.period, &mut self.rates)
    }

    /// `log kappa` for a path of length `r`; `totals` holds the total rates of
    /// the states `x^(0..=R)` and is ignored for constant rates.
    pub fn log_kappa(&self, r: usize, totals: &[f64]) -> f64 {
        if self.model.constant_rates() {
            log_kappa_poisson(self.params.rates[self.period], self.model.n(), self.duration, r)
        } else if r == 0 {
            log_kappa_survival(totals[0], self.duration)
        } else {
            log_kappa_normal(totals, self.duration)
        }
    }
}

/// `log p_sp(path)`: `log kappa + sum_r [log pi + log p]`. Returns negative
/// infinity for paths containing an impossible step; see
/// [`first_forbidden_step`] for a diagnostic.
pub fn path_log_probability(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
) -> f64 {
    let mut ev = StepEvaluator::new(model, params, path.period, duration);
    let constant = model.constant_rates();
    let mut totals = Vec::new();
    let mut replay = PathReplay::new(&path.steps, start);
    let mut sum = 0.0;
    while let Some(step) = replay.peek() {
        if !constant {
            let t = ev.total_rate(replay.state());
            totals.push(t);
        }
        sum += ev.step_term(replay.state(), step);
        if sum == f64::NEG_INFINITY {
            return sum;
        }
        replay.advance();
    }
    if !constant {
        let t = ev.total_rate(replay.state());
        totals.push(t);
    }
    sum + ev.log_kappa(path.len(), &totals)
}

/// Complete-data quantities of one period path.
#[derive(Debug, Clone)]
pub struct PathEvaluation {
    pub log_prob: f64,
    /// Gradient of `log_prob` over the full parameter layout.
    pub score: Vec<f64>,
    /// Minus the Hessian of `log_prob`, when requested.
    pub information: Option<DMatrix<f64>>,
    /// The normal approximation of kappa was used with fewer than 30 steps.
    pub small_r_warning: bool,
}

/// Rate-parameter derivatives of one state: `lambda` and its gradient over
/// `(alpha_m, c_1..c_K)`.
fn rate_gradient(
    x: &Digraph,
    params: &Parameters,
    model: &Model,
    period: usize,
    rates: &mut Vec<f64>,
    grad: &mut [f64],
) -> f64 {
    let total = actor_rates(x, params, model, period, rates);
    grad[0] = total / params.rates[period];
    for (k, e) in model.effects.rate.iter().enumerate() {
        grad[1 + k] = (0..x.n()).map(|i| rates[i] * e.evaluate(i, x, &model.covariates)).sum();
    }
    total
}

/// Score of the rate block `(alpha_m, c_1..c_K)` for a nonconstant-rate model.
fn rate_score(path: &SamplePath, start: &Digraph, params: &Parameters, model: &Model, duration: f64) -> Vec<f64> {
    let period = path.period;
    let k = model.effects.rate.len();
    let r_len = path.len();
    let mut score = vec![0.0; 1 + k];
    let mut rates = Vec::new();
    let mut g = vec![0.0; 1 + k];
    let mut mu = 0.0;
    let mut var = 0.0;
    let mut dmu = vec![0.0; 1 + k];
    let mut dvar = vec![0.0; 1 + k];
    let mut replay = PathReplay::new(&path.steps, start);
    let mut first_total = 0.0;
    let mut first_grad = vec![0.0; 1 + k];
    loop {
        let total = rate_gradient(replay.state(), params, model, period, &mut rates, &mut g);
        if replay.position() == 0 {
            first_total = total;
            first_grad.copy_from_slice(&g);
        }
        match replay.peek() {
            Some(step) => {
                let i = step.ego();
                // d log pi_i / d c_k = r_ik - sum_h pi_h r_hk; zero for alpha_m
                for (kk, e) in model.effects.rate.iter().enumerate() {
                    score[1 + kk] += e.evaluate(i, replay.state(), &model.covariates) - g[1 + kk] / total;
                }
                mu += 1.0 / total;
                var += 1.0 / (total * total);
                for q in 0..=k {
                    dmu[q] -= g[q] / (total * total);
                    dvar[q] -= 2.0 * g[q] / (total * total * total);
                }
                replay.advance();
            }
            None => {
                if r_len == 0 {
                    for q in 0..=k {
                        score[q] -= duration * first_grad[q];
                    }
                    let _ = first_total;
                } else {
                    let dev = duration - mu;
                    for q in 0..=k {
                        score[q] += -g[q] / total - dvar[q] / (2.0 * var)
                            + dev * dmu[q] / var
                            + dev * dev * dvar[q] / (2.0 * var * var);
                    }
                }
                break;
            }
        }
    }
    score
}

/// Evaluates log-probability, score and optionally the information matrix of
/// a path in one traversal.
pub fn evaluate_path(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
    with_information: bool,
) -> Result<PathEvaluation> {
    let period = path.period;
    if period >= params.periods() {
        return Err(Error::PeriodOutOfRange { period, periods: params.periods() });
    }
    let layout = model.layout(params.periods());
    let dim = layout.dim();
    let l = model.effects.objective.len();
    let b0 = layout.beta_start(period);
    let n = model.n();
    let beta = params.beta_for(period);
    let mut score = vec![0.0; dim];
    let mut info = if with_information { Some(DMatrix::<f64>::zeros(dim, dim)) } else { None };
    let mut engine = ChoiceEngine::new(model);
    let constant = model.constant_rates();
    let mut rates = Vec::new();
    let mut totals = Vec::new();
    let mut mean = vec![0.0; l];
    let mut log_prob = 0.0;
    let mut replay = PathReplay::new(&path.steps, start);

    while let Some(step) = replay.peek() {
        let (i, j) = (step.ego(), step.alter());
        let x = replay.state();
        if i >= n || j >= n || (i != j && !model.permits(i, j)) {
            return Err(Error::InvalidData(alloc::format!("step {} toggles a forbidden tie", replay.position() + 1)));
        }
        engine.compute(model, beta, i, x)?;
        let p = engine.probs[j];
        if p <= 0.0 {
            return Err(Error::InvalidData(alloc::format!("step {} has probability zero", replay.position() + 1)));
        }
        log_prob += p.ln();
        if constant {
            log_prob -= (n as f64).ln();
        } else {
            let total = actor_rates(x, params, model, period, &mut rates);
            totals.push(total);
            log_prob += (rates[i] / total).ln();
        }
        mean.iter_mut().for_each(|m| *m = 0.0);
        for h in 0..n {
            let ph = engine.probs[h];
            if ph > 0.0 {
                for (m, s) in mean.iter_mut().zip(engine.stats.row(h)) {
                    *m += ph * s;
                }
            }
        }
        let chosen = engine.stats.row(j);
        for k in 0..l {
            score[b0 + k] += chosen[k] - mean[k];
        }
        if let Some(info) = info.as_mut() {
            for h in 0..n {
                let ph = engine.probs[h];
                if ph > 0.0 {
                    let row = engine.stats.row(h);
                    for a in 0..l {
                        let da = row[a] - mean[a];
                        if da == 0.0 {
                            continue;
                        }
                        for b in 0..l {
                            info[(b0 + a, b0 + b)] += ph * da * (row[b] - mean[b]);
                        }
                    }
                }
            }
        }
        replay.advance();
    }
    let r = path.len();
    let alpha = params.rates[period];
    let mut small_r_warning = false;
    if constant {
        log_prob += log_kappa_poisson(alpha, n, duration, r);
        score[layout.rate(period)] += r as f64 / alpha - n as f64 * duration;
        if let Some(info) = info.as_mut() {
            info[(period, period)] += r as f64 / (alpha * alpha);
        }
    } else {
        totals.push(actor_rates(replay.state(), params, model, period, &mut rates));
        log_prob += if r == 0 { log_kappa_survival(totals[0], duration) } else { log_kappa_normal(&totals, duration) };
        small_r_warning = r < 30;
        let rs = rate_score(path, start, params, model, duration);
        let idx = rate_indices(&layout, period, model.effects.rate.len());
        for (q, &ix) in idx.iter().enumerate() {
            score[ix] += rs[q];
        }
        if let Some(info) = info.as_mut() {
            let block = rate_information_fd(path, start, params, model, duration);
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    info[(ia, ib)] += block[(a, b)];
                }
            }
        }
    }
    Ok(PathEvaluation { log_prob, score, information: info, small_r_warning })
}

fn rate_indices(layout: &crate::model::ParamLayout, period: usize, k: usize) -> Vec<usize> {
    let mut idx = vec![layout.rate(period)];
    idx.extend((0..k).map(|q| layout.rate_effect(q)));
    idx
}

/// Minus the derivative of the rate score by central differences, symmetrized.
fn rate_information_fd(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
) -> DMatrix<f64> {
    let k = model.effects.rate.len();
    let period = path.period;
    let mut block = DMatrix::zeros(1 + k, 1 + k);
    for q in 0..=k {
        let value = if q == 0 { params.rates[period] } else { params.rate_coefs[q - 1] };
        let h = 1e-5 * value.abs().max(1.0);
        let shifted = |delta: f64| {
            let mut p = params.clone();
            if q == 0 {
                p.rates[period] += delta;
            } else {
                p.rate_coefs[q - 1] += delta;
            }
            rate_score(path, start, &p, model, duration)
        };
        let plus = shifted(h);
        let minus = shifted(-h);
        for a in 0..=k {
            block[(a, q)] = -(plus[a] - minus[a]) / (2.0 * h);
        }
    }
    (&block + block.transpose()) * 0.5
}

/// `d log p_m / d theta` over the full parameter layout (zero outside the
/// blocks belonging to the path's period).
pub fn complete_data_score(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
) -> Result<Vec<f64>> {
    Ok(evaluate_path(path, start, params, model, duration, false)?.score)
}

/// `-d^2 log p_m / d theta^2`.
pub fn complete_data_information(
    path: &SamplePath,
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    duration: f64,
) -> Result<DMatrix<f64>> {
    Ok(evaluate_path(path, start, params, model, duration, true)?.information.expect("requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::{EffectKind, EffectSet, ObjectiveEffect};
    use crate::rng::{stream, Purpose};

    fn steps(v: &[(usize, usize)]) -> Vec<MicroStep> {
        v.iter().map(|&(i, j)| MicroStep::new(i, j)).collect()
    }

    fn outdegree_model(n: usize) -> Model {
        Model::simple(n, EffectSet::new(vec![ObjectiveEffect::structural(EffectKind::Outdegree)], vec![]), vec![])
            .unwrap()
    }

    #[test]
    fn parity_examples() {
        let a = Digraph::empty(2);
        let b = Digraph::from_arcs(2, [(0, 1)]).unwrap();
        assert!(validate_parity(&SamplePath::new(0, vec![]), &a, &a));
        assert!(validate_parity(&SamplePath::new(0, steps(&[(0, 1)])), &a, &b));
        assert!(!validate_parity(&SamplePath::new(0, steps(&[(0, 1), (0, 1)])), &a, &b));
        assert!(validate_parity(&SamplePath::new(0, steps(&[(0, 1), (1, 1), (0, 1), (0, 1)])), &a, &b));
        assert!(!validate_parity(&SamplePath::new(0, steps(&[(0, 5)])), &a, &b));
    }

    #[test]
    fn initial_path_is_a_permutation_of_differences() {
        let a = Digraph::from_arcs(5, [(0, 1), (2, 3)]).unwrap();
        let b = Digraph::from_arcs(5, [(0, 1), (3, 2), (4, 0), (1, 2)]).unwrap();
        let mut rng = stream(3, Purpose::InitialPath, &[]);
        let p = initial_path(0, &a, &b, &mut rng);
        assert_eq!(p.len(), 4);
        let mut sorted = p.steps.clone();
        sorted.sort();
        let mut expect = steps(&[(1, 2), (2, 3), (3, 2), (4, 0)]);
        expect.sort();
        assert_eq!(sorted, expect);
        assert!(validate_parity(&p, &a, &b));
        assert!(initial_path(0, &a, &a, &mut rng).is_empty());
    }

    #[test]
    fn poisson_kappa_values() {
        assert!((kappa_poisson(1.0, 2, 1.0, 0).unwrap() - 0.135335).abs() < 1e-6);
        assert!((kappa_poisson(1.0, 2, 1.0, 2).unwrap() - 0.270671).abs() < 1e-6);
        assert!((kappa_poisson(1.0, 2, 1.0, 2).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(kappa_poisson(-1.0, 2, 1.0, 0).is_err());
    }

    #[test]
    fn normal_kappa_peak_and_monotonicity() {
        // constant totals 4 over R = 10 steps: mu = 2.5, var = 10/16
        let totals = vec![4.0; 11];
        let peak = log_kappa_normal(&totals, 2.5).exp();
        let expect = 1.0 / (4.0 * (2.0 * core::f64::consts::PI * 10.0 / 16.0).sqrt());
        assert!((peak - expect).abs() < 1e-14);
        let mut prev = peak;
        for k in 1..10 {
            let v = log_kappa_normal(&totals, 2.5 + 0.2 * k as f64).exp();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn two_actor_path_probability() {
        let m = outdegree_model(2);
        let params = Parameters::new(vec![1.0], vec![], vec![0.0]);
        let start = Digraph::empty(2);
        let path = SamplePath::new(0, steps(&[(0, 1)]));
        let lp = path_log_probability(&path, &start, &params, &m, 1.0);
        assert!((lp.exp() - (-2.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((lp + 2.693147).abs() < 1e-6);
        let ev = evaluate_path(&path, &start, &params, &m, 1.0, true).unwrap();
        assert!((ev.log_prob - lp).abs() < 1e-12);
    }

    #[test]
    fn no_change_step_composes() {
        let m = outdegree_model(3);
        let params = Parameters::new(vec![1.3], vec![], vec![-0.7]);
        let start = Digraph::from_arcs(3, [(1, 2)]).unwrap();
        let base = SamplePath::new(0, steps(&[(0, 1), (2, 0)]));
        let mut ext = base.clone();
        ext.steps.push(MicroStep::new(1, 1));
        let lp0 = path_log_probability(&base, &start, &params, &m, 1.0);
        let lp1 = path_log_probability(&ext, &start, &params, &m, 1.0);
        let mut end = start.clone();
        end.toggle(0, 1);
        end.toggle(2, 0);
        let p_keep = crate::choice::choice_probabilities(1, &end, &[-0.7], &m).unwrap()[1];
        let mean = 3.0 * 1.3;
        let kappa_ratio = mean / 3.0; // R! and mean^R bookkeeping from R = 2 to R = 3
        let expect = (1.0f64 / 3.0).ln() + p_keep.ln() + kappa_ratio.ln();
        assert!((lp1 - lp0 - expect).abs() < 1e-12);
    }

    #[test]
    fn constant_rate_score_and_information() {
        let m = outdegree_model(2);
        let params = Parameters::new(vec![1.0], vec![], vec![0.0]);
        let start = Digraph::empty(2);
        let path = SamplePath::new(0, steps(&[(0, 1), (1, 1)]));
        let ev = evaluate_path(&path, &start, &params, &m, 1.0, true).unwrap();
        assert!(ev.score[0].abs() < 1e-15);
        assert!((ev.information.unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn forbidden_step_gives_sentinel() {
        let mut m = outdegree_model(3);
        m.policy.structural_zeros = Some(crate::digraph::TieMask::from_pairs(3, [(0, 2)]));
        let params = Parameters::new(vec![1.0], vec![], vec![0.0]);
        let path = SamplePath::new(0, steps(&[(0, 2), (0, 2)]));
        let lp = path_log_probability(&path, &Digraph::empty(3), &params, &m, 1.0);
        assert_eq!(lp, f64::NEG_INFINITY);
        assert_eq!(first_forbidden_step(&path, &m), Some(0));
        assert!(evaluate_path(&path, &Digraph::empty(3), &params, &m, 1.0, false).is_err());
    }
}
