//! Parameter estimation: method of moments and maximum likelihood by
//! stochastic approximation, standard errors, convergence checks,
//! likelihood-ratio estimation by path sampling, and an exact likelihood for
//! very small networks.

mod exact;
mod linalg;
mod lr;
mod ml;
mod mom;

pub use exact::{exact_log_likelihood, exact_transition_probability, MAX_EXACT_ACTORS};
pub use linalg::{regularize_positive_definite, robbins_monro_update};
pub use lr::{likelihood_ratio, LikelihoodRatio};
pub use ml::{convergence_check_ml, estimate_ml, standard_errors, ConditionalSampler, CovarianceEstimate};
pub use mom::{convergence_check_mom, estimate_mom, initial_parameters, mom_statistics};

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mh::{MoveCounts, ProposalMix};
use crate::model::{Model, Parameters};
use crate::panel::PanelData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    MethodOfMoments,
    MaximumLikelihood,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::MethodOfMoments => "mom",
            Estimator::MaximumLikelihood => "ml",
        }
    }
}

/// How many MH steps separate consecutive draws of a period's path.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsPolicy {
    pub min_steps: u64,
    /// Steps per observed tie change in the period.
    pub steps_per_change: u64,
    /// Steps are doubled while any score autocorrelation exceeds this.
    pub autocorrelation_limit: f64,
    pub max_doublings: u32,
}

impl Default for StepsPolicy {
    fn default() -> Self {
        StepsPolicy { min_steps: 1000, steps_per_change: 10, autocorrelation_limit: 0.3, max_doublings: 4 }
    }
}

impl StepsPolicy {
    pub fn steps_for(&self, changes: usize) -> u64 {
        self.min_steps.max(self.steps_per_change * changes as u64).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationControls {
    /// `a_1` in the gain sequence `a_N = a_1 N^{-c}` of the ML iterations.
    pub gain_initial: f64,
    /// `c` in `a_N = a_1 N^{-c}`.
    pub gain_exponent: f64,
    pub iterations: usize,
    pub tail_fraction: f64,
    pub mix: ProposalMix,
    pub steps: StepsPolicy,
    pub seed: u64,
    /// Fixed `D` for the ML updates; estimated at the starting value if absent.
    pub derivative: Option<DMatrix<f64>>,
    /// Starting value; the MoM estimate (ML) or a simple default (MoM) if absent.
    pub initial: Option<Parameters>,
    /// Draws used to estimate `D` and the score autocorrelation before the
    /// ML iterations.
    pub pilot_draws: usize,
    /// Chain sweeps (multiples of the per-draw steps) discarded at start.
    pub burn_in_sweeps: u64,
    /// Conditional draws for standard errors and the ML convergence check.
    pub posthoc_draws: usize,
    /// Forward simulations for the MoM convergence check and covariance.
    pub check_runs: usize,
    /// Runs of the estimation phase; later runs restart from the previous
    /// estimate when the convergence check fails.
    pub max_runs: usize,
    /// Aborts when the Euclidean norm of `theta` exceeds this.
    pub divergence_bound: f64,
    /// Largest change of any coordinate in one update; longer steps are
    /// shortened along their direction.
    pub max_step: f64,
    /// Threshold of the `|mean| / sd` convergence criterion.
    pub convergence_threshold: f64,
    pub mom_gain_initial: f64,
    pub mom_iterations: usize,
    /// Simulations per finite-difference derivative estimate.
    pub derivative_runs: usize,
    pub derivative_epsilon: f64,
    /// Stride of full log-probability revalidation in the chains (0 = off).
    pub revalidate_every: u64,
}

impl Default for EstimationControls {
    fn default() -> Self {
        EstimationControls {
            gain_initial: 0.1,
            gain_exponent: 0.75,
            iterations: 500,
            tail_fraction: 0.5,
            mix: ProposalMix::default(),
            steps: StepsPolicy::default(),
            seed: 1,
            derivative: None,
            initial: None,
            pilot_draws: 50,
            burn_in_sweeps: 10,
            posthoc_draws: 2000,
            check_runs: 2000,
            max_runs: 3,
            divergence_bound: 1e3,
            max_step: 1.0,
            convergence_threshold: 0.1,
            mom_gain_initial: 0.2,
            mom_iterations: 1000,
            derivative_runs: 100,
            derivative_epsilon: 0.1,
            revalidate_every: 10_000,
        }
    }
}

impl EstimationControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gain_initial > 0.0) || !(self.mom_gain_initial > 0.0) {
            return bad(alloc::format!("gain_initial must be positive, got {}", self.gain_initial));
        }
        if !(self.gain_exponent > 0.5 && self.gain_exponent <= 1.0) {
            return bad(alloc::format!("gain_exponent must be in (0.5, 1], got {}", self.gain_exponent));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return bad(alloc::format!("tail_fraction must be in (0, 1), got {}", self.tail_fraction));
        }
        if !(self.max_step > 0.0) {
            return bad(alloc::format!("max_step must be positive, got {}", self.max_step));
        }
        if self.iterations == 0 || self.mom_iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if self.pilot_draws < 10 || self.posthoc_draws < 10 || self.check_runs < 10 {
            return bad("pilot_draws, posthoc_draws and check_runs must be at least 10".into());
        }
        if self.max_runs == 0 || self.derivative_runs == 0 || !(self.derivative_epsilon > 0.0) {
            return bad("max_runs, derivative_runs and derivative_epsilon must be positive".into());
        }
        Ok(())
    }

    /// `a_N = a_1 N^{-c}` for `N >= 1`.
    pub fn gain(&self, n: usize) -> f64 {
        self.gain_initial * (n as f64).powf(-self.gain_exponent)
    }

    fn mom_gain(&self, n: usize) -> f64 {
        self.mom_gain_initial * (n as f64).powf(-self.gain_exponent)
    }
}

/// `|mean| / sd` per coordinate of the estimator's defining statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ratios: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Coordinates whose statistic had zero variance.
    pub degenerate: Vec<bool>,
    pub threshold: f64,
}

impl ConvergenceReport {
    pub(crate) fn from_draws(draws: &[Vec<f64>], threshold: f64) -> Self {
        let (means, cov) = linalg::mean_and_covariance(draws);
        let mut ratios = Vec::with_capacity(means.len());
        let mut sds = Vec::with_capacity(means.len());
        let mut degenerate = Vec::with_capacity(means.len());
        for (k, m) in means.iter().enumerate() {
            let sd = cov[(k, k)].max(0.0).sqrt();
            sds.push(sd);
            if sd > 1e-12 * (1.0 + m.abs()) {
                ratios.push(m / sd);
                degenerate.push(false);
            } else {
                ratios.push(0.0);
                degenerate.push(true);
            }
        }
        ConvergenceReport { ratios, means, sds, degenerate, threshold }
    }

    pub fn max_abs_ratio(&self) -> f64 {
        self.ratios.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn passed(&self) -> bool {
        self.max_abs_ratio() < self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Estimation iterations performed, over all runs.
    pub iterations: usize,
    pub runs: usize,
    /// MH steps per draw, per period (ML only).
    pub steps_per_draw: Vec<u64>,
    /// Lag-1 score autocorrelations from the last pilot (ML only).
    pub autocorrelations: Vec<f64>,
    /// Acceptance counts per period (ML only).
    pub acceptance: Vec<MoveCounts>,
    /// Thinning factor applied to the post-hoc draws (ML only).
    pub thinning: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub estimator: Estimator,
    pub theta: Parameters,
    pub names: Vec<String>,
    pub standard_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub convergence: ConvergenceReport,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl EstimationResult {
    pub fn convergence_ratios(&self) -> &[f64] {
        &self.convergence.ratios
    }
}

/// Checks that a panel can be fitted with `model`.
pub(crate) fn validate_panel(panel: &PanelData, model: &Model) -> Result<()> {
    if panel.n() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), found: panel.n(), what: "panel" });
    }
    model.check_waves(panel.waves())?;
    for m in 0..panel.periods() {
        if panel.changes(m) == 0 {
            return Err(Error::DegeneratePeriod { period: m });
        }
    }
    Ok(())
}

pub(crate) fn tail_average(history: &[Vec<f64>], tail_fraction: f64) -> Vec<f64> {
    let take = ((history.len() as f64 * tail_fraction).ceil() as usize).clamp(1, history.len());
    let tail = &history[history.len() - take..];
    let dim = tail[0].len();
    let mut avg = alloc::vec![0.0; dim];
    for h in tail {
        for (a, v) in avg.iter_mut().zip(h) {
            *a += v;
        }
    }
    avg.iter_mut().for_each(|a| *a /= take as f64);
    avg
}

/// Shortens the step to at most `max_step` per coordinate, keeps rates
/// positive by halving the previous value when a step would cross zero, and
/// guards against divergence. Returns whether the step was shortened.
pub(crate) fn guard_update(
    old: &[f64],
    new: &mut [f64],
    periods: usize,
    controls: &EstimationControls,
    iteration: usize,
) -> Result<bool> {
    let longest = old.iter().zip(new.iter()).fold(0.0f64, |m, (a, b)| m.max((b - a).abs()));
    let truncated = longest > controls.max_step;
    if truncated {
        let f = controls.max_step / longest;
        for (b, a) in new.iter_mut().zip(old) {
            *b = a + f * (*b - a);
        }
    }
    for m in 0..periods {
        if !(new[m] > 0.0) {
            new[m] = old[m] / 2.0;
        }
    }
    let norm = new.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm <= controls.divergence_bound) {
        return Err(Error::Diverged { iteration, norm });
    }
    Ok(truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn controls_validation() {
        assert!(EstimationControls::default().validate().is_ok());
        let mut c = EstimationControls { gain_exponent: 0.5, ..EstimationControls::default() };
        assert!(c.validate().is_err());
        c.gain_exponent = 1.0;
        assert!(c.validate().is_ok());
        c.tail_fraction = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gain_schedule() {
        let c = EstimationControls::default();
        assert!((c.gain(1) - 0.1).abs() < 1e-15);
        assert!((c.gain(16) - 0.1 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn tail_average_takes_last_fraction() {
        let h: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64]).collect();
        assert_eq!(tail_average(&h, 0.5), vec![7.0]);
        assert_eq!(tail_average(&h, 0.01), vec![9.0]);
    }

    #[test]
    fn convergence_report_ratios() {
        let draws: Vec<Vec<f64>> = (0..100).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }, 3.0]).collect();
        let r = ConvergenceReport::from_draws(&draws, 0.1);
        assert!(r.ratios[0].abs() < 1e-12);
        assert!(r.degenerate[1]);
        assert!(r.passed());
    }
}
