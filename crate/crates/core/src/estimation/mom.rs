use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::linalg::{inverse, mean_and_covariance, symmetrize};
use super::{guard_update, tail_average, validate_panel, ConvergenceReport, Diagnostics, EstimationControls, EstimationResult, Estimator};
use crate::digraph::Digraph;
use crate::effects::{evaluate_objective_statistic, EffectKind};
use crate::error::Result;
use crate::model::{Model, ParamLayout, Parameters};
use crate::panel::PanelData;
use crate::rng::{stream, Purpose};
use crate::simulator::simulate_period;

/// Adds the statistics of one period with observed or simulated end state.
fn add_period_statistics(
    out: &mut [f64],
    layout: &ParamLayout,
    model: &Model,
    period: usize,
    start: &Digraph,
    end: &Digraph,
) -> Result<()> {
    let n = start.n();
    out[layout.rate(period)] += start.hamming(end) as f64;
    if !model.effects.rate.is_empty() {
        for i in 0..n {
            let changed = (0..n).filter(|&j| start.has_tie(i, j) != end.has_tie(i, j)).count() as f64;
            if changed == 0.0 {
                continue;
            }
            for (k, e) in model.effects.rate.iter().enumerate() {
                out[layout.rate_effect(k)] += changed * e.evaluate(i, start, &model.covariates);
            }
        }
    }
    let b0 = layout.beta_start(period);
    for (k, e) in model.effects.objective.iter().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            s += evaluate_objective_statistic(e, i, start, end, &model.covariates)?;
        }
        out[b0 + k] += s;
    }
    Ok(())
}

/// Observed moment statistics in parameter-layout order: tie changes per
/// period, rate-effect statistics `sum_i r_ik(x(t_{m-1})) * (changes of i)`,
/// and `sum_m sum_i s_ik(x(t_m))` for each objective effect (per period when
/// the objective parameters are period specific).
pub fn mom_statistics(panel: &PanelData, model: &Model) -> Result<Vec<f64>> {
    let layout = model.layout(panel.periods());
    let mut out = vec![0.0; layout.dim()];
    for m in 0..panel.periods() {
        add_period_statistics(&mut out, &layout, model, m, panel.start(m), panel.end(m))?;
    }
    Ok(out)
}

/// Statistics of one simulated panel, each period started at its observed wave.
fn simulated_statistics(
    panel: &PanelData,
    model: &Model,
    params: &Parameters,
    seed: u64,
    purpose: Purpose,
    key: &[u64],
) -> Result<Vec<f64>> {
    let layout = model.layout(panel.periods());
    let mut out = vec![0.0; layout.dim()];
    let mut idx: Vec<u64> = key.to_vec();
    idx.push(0);
    for m in 0..panel.periods() {
        *idx.last_mut().expect("nonempty") = m as u64;
        let mut rng = stream(seed, purpose, &idx);
        let sim = simulate_period(panel.start(m), params, model, m, panel.durations()[m], false, &mut rng)?;
        add_period_statistics(&mut out, &layout, model, m, panel.start(m), &sim.end_state)?;
    }
    Ok(out)
}

/// Simple starting values: outdegree at the logit of the mean density, rates
/// from the observed number of changes, everything else zero.
pub fn initial_parameters(panel: &PanelData, model: &Model) -> Parameters {
    let n = panel.n() as f64;
    let density = panel.waves().iter().map(|w| w.density()).sum::<f64>() / panel.wave_count() as f64;
    let density = density.clamp(0.01, 0.99);
    let rates = (0..panel.periods())
        .map(|m| (1.5 * panel.changes(m) as f64 / (n * panel.durations()[m])).max(0.1))
        .collect();
    let mut beta = vec![0.0; model.effects.objective.len()];
    if let Some(k) = model.effects.objective.iter().position(|e| e.kind == EffectKind::Outdegree) {
        beta[k] = (density / (1.0 - density)).ln();
    }
    let rate_coefs = vec![0.0; model.effects.rate.len()];
    if model.beta_per_period {
        Parameters::per_period(rates, rate_coefs, vec![beta; panel.periods()])
    } else {
        Parameters::new(rates, rate_coefs, beta)
    }
}

fn fd_step(value: f64, epsilon: f64) -> f64 {
    epsilon * value.abs().max(1.0)
}

/// Finite-difference derivative of the expected statistics with common random
/// numbers: column `k` is the mean over runs of
/// `(S(theta + h_k e_k) - S(theta)) / h_k`. Also returns the base draws.
fn derivative_matrix(
    panel: &PanelData,
    model: &Model,
    theta: &[f64],
    controls: &EstimationControls,
    tag: u64,
) -> Result<(DMatrix<f64>, Vec<Vec<f64>>)> {
    let layout = model.layout(panel.periods());
    let dim = layout.dim();
    let base_params = Parameters::from_vec(&layout, theta)?;
    let mut d = DMatrix::zeros(dim, dim);
    let mut base_draws = Vec::with_capacity(controls.derivative_runs);
    for r in 0..controls.derivative_runs {
        let key = [tag, r as u64];
        let base = simulated_statistics(panel, model, &base_params, controls.seed, Purpose::Derivatives, &key)?;
        for k in 0..dim {
            let h = fd_step(theta[k], controls.derivative_epsilon);
            let mut shifted = theta.to_vec();
            shifted[k] += h;
            let p = Parameters::from_vec(&layout, &shifted)?;
            let s = simulated_statistics(panel, model, &p, controls.seed, Purpose::Derivatives, &key)?;
            for a in 0..dim {
                d[(a, k)] += (s[a] - base[a]) / h;
            }
        }
        base_draws.push(base);
    }
    d /= controls.derivative_runs as f64;
    Ok((d, base_draws))
}

/// Simulates `controls.check_runs` panels at `theta` and reports
/// `mean(S_sim - s_obs) / sd(S_sim)` per statistic.
pub fn convergence_check_mom(
    panel: &PanelData,
    model: &Model,
    theta: &Parameters,
    controls: &EstimationControls,
) -> Result<ConvergenceReport> {
    Ok(check_draws(panel, model, theta, controls, 0)?.0)
}

fn check_draws(
    panel: &PanelData,
    model: &Model,
    theta: &Parameters,
    controls: &EstimationControls,
    tag: u64,
) -> Result<(ConvergenceReport, Vec<Vec<f64>>)> {
    theta.validate(model)?;
    let observed = mom_statistics(panel, model)?;
    let mut draws = Vec::with_capacity(controls.check_runs);
    for r in 0..controls.check_runs {
        let mut s = simulated_statistics(panel, model, theta, controls.seed, Purpose::Check, &[tag, r as u64])?;
        for (a, o) in s.iter_mut().zip(&observed) {
            *a -= o;
        }
        draws.push(s);
    }
    Ok((ConvergenceReport::from_draws(&draws, controls.convergence_threshold), draws))
}

/// Method-of-moments estimate by Robbins-Monro iteration on
/// `E_theta S = s_obs`, with per-coordinate steps scaled by the diagonal of a
/// finite-difference derivative estimate.
pub fn estimate_mom(panel: &PanelData, model: &Model, controls: &EstimationControls) -> Result<EstimationResult> {
    controls.validate()?;
    validate_panel(panel, model)?;
    let periods = panel.periods();
    let layout = model.layout(periods);
    let dim = layout.dim();
    let observed = mom_statistics(panel, model)?;
    let start = match &controls.initial {
        Some(p) => {
            p.validate(model)?;
            p.clone()
        }
        None => initial_parameters(panel, model),
    };
    let mut theta = start.to_vec();
    let mut diagnostics = Diagnostics::default();
    let mut result = None;

    for run in 0..controls.max_runs {
        let (d, base) = derivative_matrix(panel, model, &theta, controls, 2 * run as u64)?;
        let (_, spread) = mean_and_covariance(&base);
        let scale: Vec<f64> = (0..dim)
            .map(|k| {
                let v = d[(k, k)];
                if v > 1e-8 {
                    v
                } else {
                    // fall back on the variance of the statistic, which is the
                    // derivative in the exponential-family case
                    let var = spread[(k, k)];
                    diagnostics.warnings.push(alloc::format!(
                        "derivative of statistic {} is not positive; scaling by its variance",
                        k + 1
                    ));
                    if var > 1e-8 { var } else { 1.0 }
                }
            })
            .collect();
        let mut truncated = 0usize;
        let mut history = Vec::with_capacity(controls.mom_iterations);
        for it in 1..=controls.mom_iterations {
            let params = Parameters::from_vec(&layout, &theta)?;
            let sim = simulated_statistics(panel, model, &params, controls.seed, Purpose::Moments, &[run as u64, it as u64])?;
            let gain = controls.mom_gain(it);
            let mut next: Vec<f64> =
                (0..dim).map(|k| theta[k] - gain * (sim[k] - observed[k]) / scale[k]).collect();
            if guard_update(&theta, &mut next, periods, controls, diagnostics.iterations + it)? {
                truncated += 1;
            }
            theta = next;
            history.push(theta.clone());
        }
        if truncated > 0 {
            diagnostics.warnings.push(alloc::format!("run {}: {truncated} steps shortened to max_step", run + 1));
        }
        diagnostics.iterations += controls.mom_iterations;
        diagnostics.runs = run + 1;
        theta = tail_average(&history, controls.tail_fraction);
        let estimate = Parameters::from_vec(&layout, &theta)?;
        let (report, draws) = check_draws(panel, model, &estimate, controls, run as u64)?;
        let passed = report.passed();
        result = Some((estimate, report, draws));
        if passed {
            break;
        }
    }
    let (estimate, report, draws) = result.expect("at least one run");

    // delta method: D^{-1} Cov(S) D^{-T}
    let (d, _) = derivative_matrix(panel, model, &theta, controls, 2 * diagnostics.runs as u64 + 1)?;
    let (_, cov_s) = mean_and_covariance(&draws);
    let covariance = match inverse(&d, "moment derivative matrix") {
        Ok(dinv) => symmetrize(&(&dinv * cov_s * dinv.transpose())),
        Err(e) => {
            diagnostics.warnings.push(alloc::format!("standard errors unavailable: {e}"));
            DMatrix::from_element(dim, dim, f64::NAN)
        }
    };
    let standard_errors = (0..dim).map(|k| covariance[(k, k)].sqrt()).collect();
    let converged = report.passed();
    if !converged {
        diagnostics.warnings.push(alloc::format!(
            "largest convergence ratio {:.3} is not below {}",
            report.max_abs_ratio(),
            controls.convergence_threshold
        ));
    }
    Ok(EstimationResult {
        estimator: Estimator::MethodOfMoments,
        theta: estimate,
        names: model.parameter_names(periods),
        standard_errors,
        covariance,
        convergence: report,
        converged,
        diagnostics,
    })
}
