use alloc::vec::Vec;

use crate::digraph::{Digraph, TieMask};
use crate::effects::ActorCovariate;
use crate::error::{Error, Result};

/// Observed waves `x(t_1), ..., x(t_M)` with period durations and actor data.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    waves: Vec<Digraph>,
    durations: Vec<f64>,
    pub covariates: Vec<ActorCovariate>,
    pub structural_zeros: Option<TieMask>,
}

impl PanelData {
    /// Panel with unit durations between consecutive waves.
    pub fn new(waves: Vec<Digraph>, covariates: Vec<ActorCovariate>) -> Result<Self> {
        let periods = waves.len().saturating_sub(1);
        PanelData::with_durations(waves, alloc::vec![1.0; periods], covariates)
    }

    pub fn with_durations(waves: Vec<Digraph>, durations: Vec<f64>, covariates: Vec<ActorCovariate>) -> Result<Self> {
        if waves.len() < 2 {
            return Err(Error::InvalidData(alloc::format!("need at least 2 waves, got {}", waves.len())));
        }
        if durations.len() != waves.len() - 1 {
            return Err(Error::LengthMismatch { expected: waves.len() - 1, found: durations.len(), what: "durations" });
        }
        if let Some(d) = durations.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidData(alloc::format!("period duration {d} must be positive")));
        }
        let n = waves[0].n();
        for w in &waves {
            if w.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: w.n(), what: "wave" });
            }
        }
        for c in &covariates {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len(), what: "covariate" });
            }
        }
        Ok(PanelData { waves, durations, covariates, structural_zeros: None })
    }

    /// Durations from increasing observation times.
    pub fn with_times(waves: Vec<Digraph>, times: &[f64], covariates: Vec<ActorCovariate>) -> Result<Self> {
        if times.len() != waves.len() {
            return Err(Error::LengthMismatch { expected: waves.len(), found: times.len(), what: "wave times" });
        }
        let durations = times.windows(2).map(|w| w[1] - w[0]).collect();
        PanelData::with_durations(waves, durations, covariates)
    }

    pub fn with_mask(mut self, mask: TieMask) -> Result<Self> {
        if mask.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: mask.n(), what: "structural-zero mask" });
        }
        self.structural_zeros = Some(mask);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.waves[0].n()
    }

    pub fn waves(&self) -> &[Digraph] {
        &self.waves
    }

    pub fn wave_count(&self) -> usize {
        self.waves.len()
    }

    pub fn periods(&self) -> usize {
        self.waves.len() - 1
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn start(&self, period: usize) -> &Digraph {
        &self.waves[period]
    }

    pub fn end(&self, period: usize) -> &Digraph {
        &self.waves[period + 1]
    }

    /// Number of tie variables that differ between the waves bounding `period`.
    pub fn changes(&self, period: usize) -> usize {
        self.waves[period].hamming(&self.waves[period + 1])
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c.name() == name)
    }
}
