//! Forward simulation of the continuous-time chain between observations.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::augmentation::MicroStep;
use crate::choice::{actor_rates, ChoiceEngine};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};
use crate::panel::PanelData;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub end_state: Digraph,
    /// Number of opportunities for change `R`, including no-change steps.
    pub opportunity_count: usize,
    pub micro_steps: Option<Vec<MicroStep>>,
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Simulates one period of length `duration` starting from `start`.
///
/// Constant-rate models draw the number of opportunities from its Poisson
/// law up front; otherwise exponential waiting times with the current total
/// rate are accumulated until the period ends.
pub fn simulate_period<R: Rng + ?Sized>(
    start: &Digraph,
    params: &Parameters,
    model: &Model,
    period: usize,
    duration: f64,
    record: bool,
    rng: &mut R,
) -> Result<SimulationResult> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("period duration {duration} must be positive")));
    }
    if period >= params.periods() {
        return Err(Error::PeriodOutOfRange { period, periods: params.periods() });
    }
    let n = start.n();
    let beta = params.beta_for(period);
    let mut x = start.clone();
    let mut engine = ChoiceEngine::new(model);
    let mut steps = if record { Some(Vec::new()) } else { None };
    let mut count = 0usize;

    let mut apply = |x: &mut Digraph, i: usize, engine: &mut ChoiceEngine, rng: &mut R| -> Result<()> {
        engine.compute(model, beta, i, x)?;
        let j = sample_index(&engine.probs, 1.0, rng);
        if j != i {
            x.toggle(i, j);
        }
        if let Some(s) = steps.as_mut() {
            s.push(MicroStep::new(i, j));
        }
        Ok(())
    };

    if model.constant_rates() {
        let mean = n as f64 * params.rates[period] * duration;
        let r = if mean > 0.0 {
            let d = Poisson::new(mean).map_err(|_| Error::InvalidParameter("Poisson mean".into()))?;
            d.sample(rng) as usize
        } else {
            0
        };
        for _ in 0..r {
            let i = rng.random_range(0..n);
            apply(&mut x, i, &mut engine, rng)?;
        }
        count = r;
    } else {
        let mut rates = Vec::with_capacity(n);
        let mut t = 0.0;
        loop {
            let total = actor_rates(&x, params, model, period, &mut rates);
            if !(total > 0.0) {
                break;
            }
            let wait: f64 = Exp1.sample(rng);
            t += wait / total;
            if t > duration {
                break;
            }
            let i = sample_index(&rates, total, rng);
            apply(&mut x, i, &mut engine, rng)?;
            count += 1;
        }
    }
    Ok(SimulationResult { end_state: x, opportunity_count: count, micro_steps: steps })
}

/// Simulates a panel: wave `m + 1` is the end state of period `m` started
/// from wave `m`. Period `m` uses the stream keyed by `(seed, replication, m)`.
pub fn simulate_panel(
    first_wave: &Digraph,
    params: &Parameters,
    model: &Model,
    durations: &[f64],
    seed: u64,
    replication: u64,
) -> Result<PanelData> {
    params.validate(model)?;
    if durations.len() != params.periods() {
        return Err(Error::LengthMismatch { expected: params.periods(), found: durations.len(), what: "durations" });
    }
    let mut waves = Vec::with_capacity(durations.len() + 1);
    waves.push(first_wave.clone());
    for (m, &d) in durations.iter().enumerate() {
        let mut rng = stream(seed, Purpose::Simulation, &[replication, m as u64]);
        let next = simulate_period(&waves[m], params, model, m, d, false, &mut rng)?.end_state;
        waves.push(next);
    }
    let panel = PanelData::with_durations(waves, durations.to_vec(), model.covariates.clone())?;
    match &model.policy.structural_zeros {
        Some(mask) => panel.with_mask(mask.clone()),
        None => Ok(panel),
    }
}
