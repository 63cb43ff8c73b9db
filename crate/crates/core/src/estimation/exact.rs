use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::choice::{actor_rates, ChoiceEngine};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};
use crate::panel::PanelData;

/// Largest network for which the full state space is enumerated.
pub const MAX_EXACT_ACTORS: usize = 4;

const TAIL_TOLERANCE: f64 = 1e-12;
const MAX_UNIFORMIZED_MEAN: f64 = 50.0;

/// Sparse intensity matrix over the digraphs that agree with a reference on
/// every non-permitted tie variable.
struct StateSpace {
    free: Vec<(usize, usize)>,
    base: Digraph,
    /// Outgoing transitions `(target, rate)` per state.
    transitions: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl StateSpace {
    fn state(&self, code: usize) -> Digraph {
        let mut x = self.base.clone();
        for (b, &(i, j)) in self.free.iter().enumerate() {
            if code >> b & 1 == 1 {
                x.set(i, j, true);
            }
        }
        x
    }

    /// Code of `x`, or `None` when `x` differs from the reference on a fixed tie.
    fn code(&self, x: &Digraph) -> Option<usize> {
        let mut cleared = x.clone();
        let mut code = 0;
        for (b, &(i, j)) in self.free.iter().enumerate() {
            if x.has_tie(i, j) {
                code |= 1 << b;
                cleared.set(i, j, false);
            }
        }
        (cleared == self.base).then_some(code)
    }

    fn build(reference: &Digraph, params: &Parameters, model: &Model, period: usize) -> Result<Self> {
        let n = reference.n();
        let free = model.permitted_dyads();
        let mut base = reference.clone();
        for &(i, j) in &free {
            base.set(i, j, false);
        }
        let size = 1usize << free.len();
        let mut space = StateSpace { free, base, transitions: Vec::with_capacity(size), exit: Vec::with_capacity(size) };
        let index: Vec<Option<usize>> = {
            let mut idx = vec![None; n * n];
            for (b, &(i, j)) in space.free.iter().enumerate() {
                idx[i * n + j] = Some(b);
            }
            idx
        };
        let mut engine = ChoiceEngine::new(model);
        let mut rates = Vec::new();
        let beta = params.beta_for(period);
        for code in 0..size {
            let x = space.state(code);
            actor_rates(&x, params, model, period, &mut rates);
            let mut out = Vec::new();
            let mut exit = 0.0;
            for i in 0..n {
                engine.compute(model, beta, i, &x)?;
                for j in 0..n {
                    if let Some(b) = index[i * n + j] {
                        let q = rates[i] * engine.probs[j];
                        if q > 0.0 {
                            out.push((code ^ (1 << b), q));
                            exit += q;
                        }
                    }
                }
            }
            space.transitions.push(out);
            space.exit.push(exit);
        }
        Ok(space)
    }

    /// `v exp(Q t)` by uniformization.
    fn propagate(&self, v: &mut Vec<f64>, duration: f64) {
        let lambda = self.exit.iter().fold(0.0f64, |m, e| m.max(*e));
        if lambda == 0.0 || duration == 0.0 {
            return;
        }
        let pieces = (lambda * duration / MAX_UNIFORMIZED_MEAN).ceil().max(1.0) as usize;
        let dt = duration / pieces as f64;
        let mean = lambda * dt;
        let mut term = vec![0.0; v.len()];
        let mut next = vec![0.0; v.len()];
        for _ in 0..pieces {
            term.copy_from_slice(v);
            let mut weight = (-mean).exp();
            let mut acc = vec![0.0; v.len()];
            let mut mass = weight;
            for (a, t) in acc.iter_mut().zip(&term) {
                *a = weight * t;
            }
            let mut k = 0usize;
            while 1.0 - mass > TAIL_TOLERANCE && k < 100_000 {
                k += 1;
                for (s, t) in term.iter().enumerate() {
                    next[s] = t * (1.0 - self.exit[s] / lambda);
                }
                for (s, t) in term.iter().enumerate() {
                    if *t != 0.0 {
                        for &(to, q) in &self.transitions[s] {
                            next[to] += t * q / lambda;
                        }
                    }
                }
                core::mem::swap(&mut term, &mut next);
                weight *= mean / k as f64;
                mass += weight;
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += weight * t;
                }
            }
            *v = acc;
        }
    }
}

/// `P(X(t + duration) = end | X(t) = start)` under the period's intensity
/// matrix, by uniformization over the full state space.
pub fn exact_transition_probability(
    start: &Digraph,
    end: &Digraph,
    params: &Parameters,
    model: &Model,
    period: usize,
    duration: f64,
) -> Result<f64> {
    let n = start.n();
    if n > MAX_EXACT_ACTORS {
        return Err(Error::TooLarge { n, max: MAX_EXACT_ACTORS });
    }
    if end.n() != n || model.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: end.n(), what: "digraph" });
    }
    if period >= params.periods() {
        return Err(Error::PeriodOutOfRange { period, periods: params.periods() });
    }
    let space = StateSpace::build(start, params, model, period)?;
    let (Some(from), Some(to)) = (space.code(start), space.code(end)) else {
        return Ok(0.0);
    };
    let mut v = vec![0.0; space.exit.len()];
    v[from] = 1.0;
    space.propagate(&mut v, duration);
    Ok(v[to].max(0.0))
}

/// `sum_m log P(x(t_m) | x(t_{m-1}))`, negative infinity when a transition is
/// impossible.
pub fn exact_log_likelihood(panel: &PanelData, model: &Model, params: &Parameters) -> Result<f64> {
    if panel.n() > MAX_EXACT_ACTORS {
        return Err(Error::TooLarge { n: panel.n(), max: MAX_EXACT_ACTORS });
    }
    params.validate(model)?;
    if params.periods() != panel.periods() {
        return Err(Error::LengthMismatch { expected: panel.periods(), found: params.periods(), what: "period rates" });
    }
    let mut total = 0.0;
    for m in 0..panel.periods() {
        let p = exact_transition_probability(panel.start(m), panel.end(m), params, model, m, panel.durations()[m])?;
        total += p.ln();
    }
    Ok(total)
}
