//! Human-readable reports and JSON result documents.

use std::fmt::Write as _;

use saom_core::estimation::ConvergenceReport;
use saom_core::{EstimationControls, EstimationResult, Estimator, MoveKind};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub fn estimator_key(e: Estimator) -> &'static str {
    match e {
        Estimator::MaximumLikelihood => "ml",
        Estimator::MethodOfMoments => "mom",
    }
}

/// JSON numbers cannot hold NaN or infinities; those become null.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn controls_json(c: &EstimationControls) -> Value {
    json!({
        "gain_initial": c.gain_initial,
        "gain_exponent": c.gain_exponent,
        "iterations": c.iterations,
        "tail_fraction": c.tail_fraction,
        "move_weights": c.mix.weights(),
        "max_permutation_span": c.mix.max_permutation_span(),
        "min_steps": c.steps.min_steps,
        "steps_per_change": c.steps.steps_per_change,
        "autocorrelation_limit": c.steps.autocorrelation_limit,
        "max_doublings": c.steps.max_doublings,
        "pilot_draws": c.pilot_draws,
        "burn_in_sweeps": c.burn_in_sweeps,
        "posthoc_draws": c.posthoc_draws,
        "check_runs": c.check_runs,
        "max_runs": c.max_runs,
        "divergence_bound": c.divergence_bound,
        "max_step": c.max_step,
        "convergence_threshold": c.convergence_threshold,
        "mom_gain_initial": c.mom_gain_initial,
        "mom_iterations": c.mom_iterations,
        "derivative_runs": c.derivative_runs,
        "derivative_epsilon": c.derivative_epsilon,
        "revalidate_every": c.revalidate_every,
    })
}

pub fn result_json(r: &EstimationResult, controls: &EstimationControls, threads: usize) -> Value {
    let d = &r.diagnostics;
    let dim = r.covariance.nrows();
    let covariance: Vec<Value> = (0..dim).map(|i| nums(&r.covariance.row(i).iter().copied().collect::<Vec<_>>())).collect();
    let acceptance: Vec<Value> = d
        .acceptance
        .iter()
        .map(|c| {
            let mut m = serde_json::Map::new();
            for k in MoveKind::ALL {
                m.insert(
                    k.name().to_string(),
                    json!({ "proposed": c.proposed[k as usize], "accepted": c.accepted[k as usize] }),
                );
            }
            Value::Object(m)
        })
        .collect();
    json!({
        "estimator": estimator_key(r.estimator),
        "names": r.names,
        "theta": nums(&r.theta.to_vec()),
        "se": nums(&r.standard_errors),
        "covariance": covariance,
        "convergence_ratios": nums(&r.convergence.ratios),
        "converged": r.converged,
        "diagnostics": {
            "iterations": d.iterations,
            "runs": d.runs,
            "steps_per_draw": d.steps_per_draw,
            "autocorrelations": nums(&d.autocorrelations),
            "acceptance": acceptance,
            "thinning": d.thinning,
            "warnings": d.warnings,
        },
        "seed": controls.seed,
        "threads": threads,
        "controls": controls_json(controls),
    })
}

/// Estimator and parameter vector of a saved result document.
pub fn read_result(doc: &Value) -> CliResult<(Estimator, Vec<f64>)> {
    let bad = |what: &str| CliError::Config(format!("saved result: {what}"));
    let estimator = match doc.get("estimator").and_then(Value::as_str) {
        Some("ml") => Estimator::MaximumLikelihood,
        Some("mom") => Estimator::MethodOfMoments,
        _ => return Err(bad("missing or unknown \"estimator\"")),
    };
    let theta = doc
        .get("theta")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing \"theta\""))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| bad("\"theta\" must hold numbers")))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((estimator, theta))
}

pub fn convergence_table(names: &[String], report: &ConvergenceReport) -> String {
    let mut out = String::new();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>8}", "statistic", "mean dev", "sd", "t-ratio");
    for (k, name) in names.iter().enumerate() {
        let flag = if report.degenerate[k] { "  (constant)" } else { "" };
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>8.4}{flag}",
            name, report.means[k], report.sds[k], report.ratios[k]
        );
    }
    let _ = writeln!(
        out,
        "largest |t-ratio| {:.4}; criterion |t| < {}: {}",
        report.max_abs_ratio(),
        report.threshold,
        if report.passed() { "passed" } else { "FAILED" }
    );
    out
}

pub fn result_table(r: &EstimationResult, controls: &EstimationControls) -> String {
    let mut out = String::new();
    let d = &r.diagnostics;
    let _ = writeln!(out, "estimator: {}", r.estimator.name());
    let _ = writeln!(out, "seed: {}", controls.seed);
    let _ = writeln!(out, "iterations: {} over {} run(s)", d.iterations, d.runs);
    let _ = writeln!(out, "converged: {}", if r.converged { "yes" } else { "no" });
    let _ = writeln!(out);
    let width = r.names.iter().map(|n| n.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>8}", "parameter", "estimate", "s.e.", "t-ratio");
    for (k, name) in r.names.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>8.4}",
            name,
            r.theta.to_vec()[k],
            r.standard_errors[k],
            r.convergence.ratios[k]
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "largest |t-ratio| {:.4} (criterion < {})",
        r.convergence.max_abs_ratio(),
        r.convergence.threshold
    );
    if !d.steps_per_draw.is_empty() {
        let _ = writeln!(out, "MH steps per draw: {:?}", d.steps_per_draw);
        let _ = writeln!(out, "thinning: {}", d.thinning);
        for (m, c) in d.acceptance.iter().enumerate() {
            let rates: Vec<String> =
                MoveKind::ALL.iter().map(|k| format!("{} {:.3}", k.name(), c.acceptance_rate(*k))).collect();
            let _ = writeln!(out, "acceptance period {}: {}", m + 1, rates.join(", "));
        }
    }
    for w in &d.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// CSV of MH acceptance counts per period and move kind.
pub fn acceptance_csv(r: &EstimationResult) -> String {
    let mut out = String::from("period,kind,proposed,accepted\n");
    for (m, c) in r.diagnostics.acceptance.iter().enumerate() {
        for k in MoveKind::ALL {
            let _ = writeln!(out, "{},{},{},{}", m + 1, k.name(), c.proposed[k as usize], c.accepted[k as usize]);
        }
    }
    out
}
