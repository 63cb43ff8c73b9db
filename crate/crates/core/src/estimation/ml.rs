use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::linalg::{inverse, mean_and_covariance, min_eigenvalue, regularize_positive_definite, robbins_monro_update, symmetrize};
use super::mom::estimate_mom;
use super::{guard_update, tail_average, validate_panel, ConvergenceReport, Diagnostics, EstimationControls, EstimationResult, Estimator};
use crate::augmentation::{evaluate_path, initial_path, SamplePath};
use crate::error::{Error, Result};
use crate::mh::{run_chain, score_autocorrelation, ChainContext, ChainState, MoveCounts, ProposalMix};
use crate::model::{Model, Parameters};
use crate::panel::PanelData;
use crate::rng::{stream, Purpose};

/// One MH chain per period over the sample paths between consecutive waves.
#[derive(Debug, Clone)]
pub struct ConditionalSampler {
    chains: Vec<ChainState>,
    steps: Vec<u64>,
    mix: ProposalMix,
    revalidate_every: u64,
    small_r_warning: bool,
}

/// Complete-data score and, optionally, information of one draw.
#[derive(Debug, Clone)]
pub struct Draw {
    pub score: Vec<f64>,
    pub information: Option<DMatrix<f64>>,
}

impl ConditionalSampler {
    /// Chains started at random orderings of the observed changes. `tag`
    /// separates the random streams of independent samplers.
    pub fn new(
        panel: &PanelData,
        model: &Model,
        params: &Parameters,
        controls: &EstimationControls,
        tag: u64,
    ) -> Result<Self> {
        params.validate(model)?;
        if params.periods() != panel.periods() {
            return Err(Error::LengthMismatch { expected: panel.periods(), found: params.periods(), what: "period rates" });
        }
        let mut chains = Vec::with_capacity(panel.periods());
        let mut steps = Vec::with_capacity(panel.periods());
        for m in 0..panel.periods() {
            let mut rng = stream(controls.seed, Purpose::InitialPath, &[tag, m as u64]);
            let path = initial_path(m, panel.start(m), panel.end(m), &mut rng);
            let ctx = context(panel, model, params, &controls.mix, controls.revalidate_every, m);
            chains.push(ChainState::new(path, &ctx, stream(controls.seed, Purpose::Chain, &[tag, m as u64]))?);
            steps.push(controls.steps.steps_for(panel.changes(m)));
        }
        Ok(ConditionalSampler {
            chains,
            steps,
            mix: controls.mix.clone(),
            revalidate_every: controls.revalidate_every,
            small_r_warning: false,
        })
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn double_steps(&mut self) {
        self.steps.iter_mut().for_each(|s| *s *= 2);
    }

    pub fn paths(&self) -> impl Iterator<Item = &SamplePath> {
        self.chains.iter().map(|c| &c.path)
    }

    pub fn acceptance(&self) -> Vec<MoveCounts> {
        self.chains.iter().map(|c| c.counts).collect()
    }

    /// Largest cache drift seen at revalidation points over all chains.
    pub fn max_drift(&self) -> f64 {
        self.chains.iter().fold(0.0, |m, c| m.max(c.max_drift()))
    }

    /// Whether the normal approximation of kappa was used with fewer than
    /// 30 steps in any evaluated path.
    pub fn small_r_warning(&self) -> bool {
        self.small_r_warning
    }

    /// Runs every period's chain for `sweeps` times its per-draw steps.
    pub fn advance(&mut self, panel: &PanelData, model: &Model, params: &Parameters, sweeps: u64) -> Result<()> {
        for (m, chain) in self.chains.iter_mut().enumerate() {
            let ctx = context(panel, model, params, &self.mix, self.revalidate_every, m);
            run_chain(chain, &ctx, self.steps[m] * sweeps.max(1))?;
        }
        Ok(())
    }

    /// `S_XV` (and `D_XV`) of the current paths, summed over periods.
    pub fn evaluate(&mut self, panel: &PanelData, model: &Model, params: &Parameters, information: bool) -> Result<Draw> {
        let dim = model.layout(panel.periods()).dim();
        let mut score = alloc::vec![0.0; dim];
        let mut info = if information { Some(DMatrix::zeros(dim, dim)) } else { None };
        for (m, chain) in self.chains.iter().enumerate() {
            let ev = evaluate_path(&chain.path, panel.start(m), params, model, panel.durations()[m], information)?;
            self.small_r_warning |= ev.small_r_warning;
            for (a, b) in score.iter_mut().zip(&ev.score) {
                *a += b;
            }
            if let (Some(total), Some(part)) = (info.as_mut(), ev.information) {
                *total += part;
            }
        }
        Ok(Draw { score, information: info })
    }

    /// `count` draws, each after one round of per-draw steps.
    pub fn collect(
        &mut self,
        panel: &PanelData,
        model: &Model,
        params: &Parameters,
        count: usize,
        information: bool,
    ) -> Result<Vec<Draw>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            self.advance(panel, model, params, 1)?;
            out.push(self.evaluate(panel, model, params, information)?);
        }
        Ok(out)
    }
}

fn context<'a>(
    panel: &'a PanelData,
    model: &'a Model,
    params: &'a Parameters,
    mix: &'a ProposalMix,
    revalidate_every: u64,
    m: usize,
) -> ChainContext<'a> {
    ChainContext {
        model,
        params,
        start: panel.start(m),
        end: panel.end(m),
        duration: panel.durations()[m],
        mix,
        revalidate_every,
    }
}

/// Observed-information estimate `D_X = mean(D_XV) - Cov(S_XV)` and its inverse.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub covariance: DMatrix<f64>,
    pub standard_errors: Vec<f64>,
    pub information: DMatrix<f64>,
    pub mean_complete_information: DMatrix<f64>,
    pub min_eigenvalue: f64,
    /// Amount added to the diagonal of `D_X` to make it positive definite.
    pub regularization: f64,
    pub thinning: usize,
    pub warnings: Vec<String>,
}

/// Every `k`-th draw, with `k` the smallest power of two giving lag-1 score
/// autocorrelations below `limit` (kept at 20 draws or more).
fn thin(draws: &[Draw], limit: f64) -> (usize, Vec<&Draw>) {
    let mut k = 1;
    loop {
        let kept: Vec<&Draw> = draws.iter().step_by(k).collect();
        let scores: Vec<Vec<f64>> = kept.iter().map(|d| d.score.clone()).collect();
        let ac = score_autocorrelation(&scores).map(|a| a.max_abs()).unwrap_or(0.0);
        if ac < limit || draws.len() / (2 * k) < 20 {
            return (k, kept);
        }
        k *= 2;
    }
}

fn covariance_from_draws(draws: &[Draw], limit: f64) -> Result<CovarianceEstimate> {
    let (thinning, kept) = thin(draws, limit);
    let dim = kept[0].score.len();
    let mut mean_info = DMatrix::zeros(dim, dim);
    for d in &kept {
        mean_info += d.information.as_ref().expect("draws with information");
    }
    mean_info /= kept.len() as f64;
    let scores: Vec<Vec<f64>> = kept.iter().map(|d| d.score.clone()).collect();
    let (_, cov_s) = mean_and_covariance(&scores);
    let information = symmetrize(&(&mean_info - cov_s));
    let min_eig = min_eigenvalue(&information);
    let mut warnings = Vec::new();
    let (regularized, added) = if min_eig > 1e-10 {
        (information.clone(), 0.0)
    } else {
        warnings.push(alloc::format!("observed information has smallest eigenvalue {min_eig:.3e}; regularized"));
        regularize_positive_definite(&information)?
    };
    let covariance = symmetrize(&inverse(&regularized, "observed information")?);
    let standard_errors = (0..dim).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();
    Ok(CovarianceEstimate {
        covariance,
        standard_errors,
        information,
        mean_complete_information: mean_info,
        min_eigenvalue: min_eig,
        regularization: added,
        thinning,
        warnings,
    })
}

/// Standard errors of `theta_hat` from `controls.posthoc_draws` conditional
/// draws of the sample paths.
pub fn standard_errors(
    panel: &PanelData,
    model: &Model,
    theta_hat: &Parameters,
    controls: &EstimationControls,
) -> Result<CovarianceEstimate> {
    controls.validate()?;
    validate_panel(panel, model)?;
    let mut sampler = ConditionalSampler::new(panel, model, theta_hat, controls, 1 << 32)?;
    sampler.advance(panel, model, theta_hat, controls.burn_in_sweeps)?;
    let draws = sampler.collect(panel, model, theta_hat, controls.posthoc_draws, true)?;
    covariance_from_draws(&draws, controls.steps.autocorrelation_limit)
}

/// `mean(S_XV) / sd(S_XV)` over `controls.check_runs` conditional draws at `theta`.
pub fn convergence_check_ml(
    panel: &PanelData,
    model: &Model,
    theta: &Parameters,
    controls: &EstimationControls,
) -> Result<ConvergenceReport> {
    controls.validate()?;
    validate_panel(panel, model)?;
    let mut sampler = ConditionalSampler::new(panel, model, theta, controls, 2 << 32)?;
    sampler.advance(panel, model, theta, controls.burn_in_sweeps)?;
    let draws = sampler.collect(panel, model, theta, controls.check_runs, false)?;
    let scores: Vec<Vec<f64>> = draws.into_iter().map(|d| d.score).collect();
    Ok(ConvergenceReport::from_draws(&scores, controls.convergence_threshold))
}

/// Maximum-likelihood estimate by Markov chain stochastic approximation.
///
/// Each iteration advances every period's chain from its previous path, sums
/// the complete-data scores, and applies `theta += a_N D^{-1} S_XV` with `D`
/// the mean complete-data information at the starting value. The estimate is
/// the average of the last `tail_fraction` of the iterates. When the score
/// check fails, the phase is repeated from the estimate (at most
/// `max_runs` times).
pub fn estimate_ml(panel: &PanelData, model: &Model, controls: &EstimationControls) -> Result<EstimationResult> {
    controls.validate()?;
    validate_panel(panel, model)?;
    let periods = panel.periods();
    let layout = model.layout(periods);
    let mut diagnostics = Diagnostics::default();
    let start = match &controls.initial {
        Some(p) => {
            p.validate(model)?;
            p.clone()
        }
        None => {
            let mom = estimate_mom(panel, model, controls)?;
            if !mom.converged {
                diagnostics.warnings.push("method-of-moments starting value did not pass its convergence check".into());
            }
            mom.theta
        }
    };
    let mut theta = start.to_vec();
    let mut params = start;
    let mut sampler = ConditionalSampler::new(panel, model, &params, controls, 0)?;
    sampler.advance(panel, model, &params, controls.burn_in_sweeps)?;
    let limit = controls.steps.autocorrelation_limit;
    let mut doublings = 0;

    for run in 0..controls.max_runs {
        let pilot = loop {
            let draws = sampler.collect(panel, model, &params, controls.pilot_draws, controls.derivative.is_none())?;
            let scores: Vec<Vec<f64>> = draws.iter().map(|d| d.score.clone()).collect();
            let ac = score_autocorrelation(&scores)?;
            if ac.max_abs() > limit && doublings < controls.steps.max_doublings {
                sampler.double_steps();
                doublings += 1;
                continue;
            }
            if ac.max_abs() > limit {
                diagnostics.warnings.push(alloc::format!(
                    "score autocorrelation {:.2} above {limit} at the step cap",
                    ac.max_abs()
                ));
            }
            diagnostics.autocorrelations = ac.values;
            break draws;
        };
        let d = match &controls.derivative {
            Some(d) => d.clone(),
            None => {
                let dim = layout.dim();
                let mut mean = DMatrix::zeros(dim, dim);
                for draw in &pilot {
                    mean += draw.information.as_ref().expect("requested");
                }
                mean /= pilot.len() as f64;
                let (d, added) = regularize_positive_definite(&mean)?;
                if added > 0.0 {
                    diagnostics.warnings.push(alloc::format!("complete-data information regularized by {added:.3e}"));
                }
                d
            }
        };

        let mut truncated = 0usize;
        let mut history = Vec::with_capacity(controls.iterations);
        for it in 1..=controls.iterations {
            sampler.advance(panel, model, &params, 1)?;
            let score = sampler.evaluate(panel, model, &params, false)?.score;
            let mut next = robbins_monro_update(&theta, &score, controls.gain(it), &d)?;
            if guard_update(&theta, &mut next, periods, controls, diagnostics.iterations + it)? {
                truncated += 1;
            }
            theta = next;
            params = Parameters::from_vec(&layout, &theta)?;
            history.push(theta.clone());
        }
        if truncated > 0 {
            diagnostics.warnings.push(alloc::format!("run {}: {truncated} steps shortened to max_step", run + 1));
        }
        diagnostics.iterations += controls.iterations;
        diagnostics.runs = run + 1;
        theta = tail_average(&history, controls.tail_fraction);
        params = Parameters::from_vec(&layout, &theta)?;

        sampler.advance(panel, model, &params, controls.burn_in_sweeps)?;
        let draws = sampler.collect(panel, model, &params, controls.posthoc_draws, true)?;
        let scores: Vec<Vec<f64>> = draws.iter().map(|d| d.score.clone()).collect();
        let report = ConvergenceReport::from_draws(&scores, controls.convergence_threshold);
        if report.passed() || run + 1 == controls.max_runs {
            let cov = covariance_from_draws(&draws, limit)?;
            diagnostics.warnings.extend(cov.warnings.iter().cloned());
            diagnostics.thinning = cov.thinning;
            diagnostics.steps_per_draw = sampler.steps().to_vec();
            diagnostics.acceptance = sampler.acceptance();
            if sampler.small_r_warning() {
                diagnostics
                    .warnings
                    .push("normal approximation of kappa used for a path with fewer than 30 steps".into());
            }
            let converged = report.passed();
            if !converged {
                diagnostics.warnings.push(alloc::format!(
                    "largest convergence ratio {:.3} is not below {}",
                    report.max_abs_ratio(),
                    controls.convergence_threshold
                ));
            }
            return Ok(EstimationResult {
                estimator: Estimator::MaximumLikelihood,
                theta: params,
                names: model.parameter_names(periods),
                standard_errors: cov.standard_errors,
                covariance: cov.covariance,
                convergence: report,
                converged,
                diagnostics,
            });
        }
    }
    unreachable!("the last run always returns")
}
