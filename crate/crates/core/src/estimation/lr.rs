use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::ml::ConditionalSampler;
use super::{validate_panel, EstimationControls};
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};
use crate::panel::PanelData;

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRatio {
    /// Estimate of `log p(x; theta1) - log p(x; theta0)`.
    pub log_ratio: f64,
    /// Monte Carlo standard error from the within-grid-point spread, inflated
    /// by `(1 + rho) / (1 - rho)` for the lag-1 autocorrelation `rho` of the
    /// chain draws.
    pub standard_error: f64,
    /// Mean of `(theta1 - theta0)' S_XV` at each grid point.
    pub grid_means: Vec<f64>,
}

/// Path-sampling estimate of the log-likelihood ratio between `theta1` and
/// `theta0`: the average of `(theta1 - theta0)' S_XV(theta(h/H))` over grid
/// points `h = 0..=H` and `draws_per_point` conditional draws at each, where
/// `theta(t) = t theta1 + (1 - t) theta0`. The chains move along the grid
/// without restarting.
pub fn likelihood_ratio(
    panel: &PanelData,
    model: &Model,
    theta0: &Parameters,
    theta1: &Parameters,
    grid_points: usize,
    draws_per_point: usize,
    controls: &EstimationControls,
) -> Result<LikelihoodRatio> {
    validate_panel(panel, model)?;
    theta0.validate(model)?;
    theta1.validate(model)?;
    if grid_points == 0 || draws_per_point == 0 {
        return Err(Error::InvalidParameter("grid_points and draws_per_point must be positive".into()));
    }
    let layout = model.layout(panel.periods());
    let v0 = theta0.to_vec();
    let v1 = theta1.to_vec();
    if v0.len() != layout.dim() || v1.len() != layout.dim() {
        return Err(Error::LengthMismatch { expected: layout.dim(), found: v1.len(), what: "parameter vector" });
    }
    let direction: Vec<f64> = v1.iter().zip(&v0).map(|(a, b)| a - b).collect();
    let mut sampler = ConditionalSampler::new(panel, model, theta0, controls, 3 << 32)?;
    sampler.advance(panel, model, theta0, controls.burn_in_sweeps)?;

    let mut grid_means = Vec::with_capacity(grid_points + 1);
    let mut within = 0.0;
    // deviations from the grid-point means, in sampling order
    let mut residuals = Vec::with_capacity((grid_points + 1) * draws_per_point);
    for h in 0..=grid_points {
        let t = h as f64 / grid_points as f64;
        let v: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| t * b + (1.0 - t) * a).collect();
        let params = Parameters::from_vec(&layout, &v)?;
        let mut values = Vec::with_capacity(draws_per_point);
        for _ in 0..draws_per_point {
            sampler.advance(panel, model, &params, 1)?;
            let s = sampler.evaluate(panel, model, &params, false)?.score;
            values.push(direction.iter().zip(&s).map(|(d, s)| d * s).sum::<f64>());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        residuals.extend(values.iter().map(|v| v - mean));
        if values.len() > 1 {
            let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (values.len() - 1) as f64;
            within += var / values.len() as f64;
        }
        grid_means.push(mean);
    }
    let k = grid_means.len() as f64;
    let log_ratio = grid_means.iter().sum::<f64>() / k;
    let standard_error = (within * ar1_inflation(&residuals)).sqrt() / k;
    Ok(LikelihoodRatio { log_ratio, standard_error, grid_means })
}

/// `(1 + rho) / (1 - rho)` for the lag-1 autocorrelation of a centred series,
/// with `rho` clamped to `[0, 0.95]`.
fn ar1_inflation(residuals: &[f64]) -> f64 {
    let var: f64 = residuals.iter().map(|r| r * r).sum();
    if residuals.len() < 3 || var <= 0.0 {
        return 1.0;
    }
    let cov: f64 = residuals.windows(2).map(|w| w[0] * w[1]).sum();
    let rho = (cov / var).clamp(0.0, 0.95);
    (1.0 + rho) / (1.0 - rho)
}
