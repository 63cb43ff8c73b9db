//! Stochastic actor-oriented models for longitudinal network panels:
//! simulation, sample-path augmentation, Metropolis-Hastings sampling of
//! paths between waves, and method-of-moments and maximum-likelihood
//! estimation.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod augmentation;
pub mod choice;
pub mod digraph;
pub mod effects;
pub mod error;
pub mod estimation;
pub mod mh;
pub mod model;
pub mod panel;
pub mod rng;
pub mod simulator;

pub use augmentation::{MicroStep, SamplePath};
pub use digraph::{Digraph, TieMask};
pub use effects::{ActorCovariate, EffectKind, EffectSet, ObjectiveEffect, RateEffect, RateEffectKind};
pub use error::{Error, ErrorCategory, Result};
pub use estimation::{EstimationControls, EstimationResult, Estimator};
pub use mh::{MoveKind, ProposalMix};
pub use model::{Model, ParamLayout, Parameters, PermittedSetPolicy};
pub use panel::PanelData;
