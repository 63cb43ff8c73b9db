//! Objective-function and rate-function statistics.
//!
//! Each objective effect has two evaluation routes: [`evaluate_objective_statistic`]
//! recomputes `s_ik(x0, x)` from scratch, and [`ChangeStatistics`] computes the
//! difference caused by toggling a single outgoing tie of one actor. The
//! sampler and the likelihood only use the second route; the first is kept for
//! moment statistics and as a check.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::digraph::Digraph;
use crate::error::{Error, Result};

/// A numeric actor attribute. Ego and alter effects use the values centred at
/// their mean; similarity uses the raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCovariate {
    name: String,
    values: Vec<f64>,
    mean: f64,
}

impl ActorCovariate {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("covariate with no values".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("covariate values must be finite".to_string()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(ActorCovariate { name: name.into(), values, mean })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn centered(&self, i: usize) -> f64 {
        self.values[i] - self.mean
    }

    /// `1 - |z_i - z_j|`.
    #[inline]
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        1.0 - libm::fabs(self.values[i] - self.values[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectKind {
    Outdegree,
    Reciprocity,
    TransitiveTriplets,
    ThreeCycles,
    IndirectTies,
    PersistentReciprocity,
    CovariateAlter,
    CovariateEgo,
    CovariateSimilarity,
    CovariateSimilarityReciprocity,
}

impl EffectKind {
    pub const ALL: [EffectKind; 10] = [
        EffectKind::Outdegree,
        EffectKind::Reciprocity,
        EffectKind::TransitiveTriplets,
        EffectKind::ThreeCycles,
        EffectKind::IndirectTies,
        EffectKind::PersistentReciprocity,
        EffectKind::CovariateAlter,
        EffectKind::CovariateEgo,
        EffectKind::CovariateSimilarity,
        EffectKind::CovariateSimilarityReciprocity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffectKind::Outdegree => "outdegree",
            EffectKind::Reciprocity => "reciprocity",
            EffectKind::TransitiveTriplets => "transitive_triplets",
            EffectKind::ThreeCycles => "three_cycles",
            EffectKind::IndirectTies => "indirect_ties",
            EffectKind::PersistentReciprocity => "persistent_reciprocity",
            EffectKind::CovariateAlter => "covariate_alter",
            EffectKind::CovariateEgo => "covariate_ego",
            EffectKind::CovariateSimilarity => "covariate_similarity",
            EffectKind::CovariateSimilarityReciprocity => "covariate_similarity_reciprocity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        EffectKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownEffect(name.to_string()))
    }

    pub fn needs_covariate(self) -> bool {
        matches!(
            self,
            EffectKind::CovariateAlter
                | EffectKind::CovariateEgo
                | EffectKind::CovariateSimilarity
                | EffectKind::CovariateSimilarityReciprocity
        )
    }

    /// Whether the statistic depends on the state before the change.
    pub fn uses_previous(self) -> bool {
        matches!(self, EffectKind::PersistentReciprocity)
    }
}

/// One term `beta_k s_ik` of the objective function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectiveEffect {
    pub kind: EffectKind,
    /// Index into the model's covariate list.
    pub covariate: Option<usize>,
}

impl ObjectiveEffect {
    pub fn structural(kind: EffectKind) -> Self {
        ObjectiveEffect { kind, covariate: None }
    }

    pub fn with_covariate(kind: EffectKind, covariate: usize) -> Self {
        ObjectiveEffect { kind, covariate: Some(covariate) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateEffectKind {
    Outdegree,
    Indegree,
    Reciprocity,
    Covariate,
}

impl RateEffectKind {
    pub const ALL: [RateEffectKind; 4] =
        [RateEffectKind::Outdegree, RateEffectKind::Indegree, RateEffectKind::Reciprocity, RateEffectKind::Covariate];

    pub fn name(self) -> &'static str {
        match self {
            RateEffectKind::Outdegree => "outdegree",
            RateEffectKind::Indegree => "indegree",
            RateEffectKind::Reciprocity => "reciprocity",
            RateEffectKind::Covariate => "covariate",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        RateEffectKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownEffect(alloc::format!("rate:{name}")))
    }
}

/// A statistic `r_ik(x)` in the exponent of the rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateEffect {
    pub kind: RateEffectKind,
    pub covariate: Option<usize>,
}

impl RateEffect {
    pub fn evaluate(&self, actor: usize, x: &Digraph, covariates: &[ActorCovariate]) -> f64 {
        match self.kind {
            RateEffectKind::Outdegree => x.out_degree(actor) as f64,
            RateEffectKind::Indegree => x.in_degree(actor) as f64,
            RateEffectKind::Reciprocity => x.reciprocated_degree(actor) as f64,
            RateEffectKind::Covariate => covariates[self.covariate.expect("validated")].centered(actor),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EffectSet {
    pub objective: Vec<ObjectiveEffect>,
    pub rate: Vec<RateEffect>,
}

impl EffectSet {
    pub fn new(objective: Vec<ObjectiveEffect>, rate: Vec<RateEffect>) -> Self {
        EffectSet { objective, rate }
    }

    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    pub fn has_rate_effects(&self) -> bool {
        !self.rate.is_empty()
    }

    pub fn validate(&self, covariates: &[ActorCovariate]) -> Result<()> {
        for e in &self.objective {
            check_covariate(e.kind.needs_covariate(), e.covariate, e.kind.name(), covariates)?;
        }
        for e in &self.rate {
            check_covariate(e.kind == RateEffectKind::Covariate, e.covariate, e.kind.name(), covariates)?;
        }
        Ok(())
    }

    /// Human-readable label of objective effect `k`, e.g. `covariate_alter(gender)`.
    pub fn objective_label(&self, k: usize, covariates: &[ActorCovariate]) -> String {
        label(self.objective[k].kind.name(), self.objective[k].covariate, covariates)
    }

    pub fn rate_label(&self, k: usize, covariates: &[ActorCovariate]) -> String {
        label(self.rate[k].kind.name(), self.rate[k].covariate, covariates)
    }
}

fn label(name: &str, cov: Option<usize>, covariates: &[ActorCovariate]) -> String {
    match cov.and_then(|c| covariates.get(c)) {
        Some(c) => alloc::format!("{name}({})", c.name()),
        None => name.to_string(),
    }
}

fn check_covariate(needed: bool, cov: Option<usize>, name: &str, covariates: &[ActorCovariate]) -> Result<()> {
    match (needed, cov) {
        (true, None) => Err(Error::MissingCovariate(alloc::format!("<none given for {name}>"))),
        (true, Some(c)) if c >= covariates.len() => Err(Error::MissingCovariate(alloc::format!("#{c}"))),
        _ => Ok(()),
    }
}

fn covariate<'a>(effect: &ObjectiveEffect, covariates: &'a [ActorCovariate]) -> Result<&'a ActorCovariate> {
    let idx = effect
        .covariate
        .ok_or_else(|| Error::MissingCovariate(alloc::format!("<none given for {}>", effect.kind.name())))?;
    covariates.get(idx).ok_or_else(|| Error::MissingCovariate(alloc::format!("#{idx}")))
}

/// `s_ik(previous, candidate)` recomputed from its defining sum.
///
/// Effects that depend only on the new state ignore `previous`.
pub fn evaluate_objective_statistic(
    effect: &ObjectiveEffect,
    actor: usize,
    previous: &Digraph,
    candidate: &Digraph,
    covariates: &[ActorCovariate],
) -> Result<f64> {
    let x = candidate;
    let n = x.n();
    let i = actor;
    if previous.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: previous.n(), what: "previous digraph" });
    }
    let t = |a: usize, b: usize| x.tie(a, b) as f64;
    let value = match effect.kind {
        EffectKind::Outdegree => (0..n).map(|j| t(i, j)).sum(),
        EffectKind::Reciprocity => (0..n).map(|j| t(i, j) * t(j, i)).sum(),
        EffectKind::TransitiveTriplets => {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += t(i, j) * t(j, k) * t(i, k);
                }
            }
            s
        }
        EffectKind::ThreeCycles => {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += t(i, j) * t(j, k) * t(k, i);
                }
            }
            s
        }
        EffectKind::IndirectTies => {
            let mut s = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let reach = (0..n).any(|k| x.has_tie(i, k) && x.has_tie(k, j));
                if reach {
                    s += 1.0 - t(i, j);
                }
            }
            s
        }
        EffectKind::PersistentReciprocity => (0..n)
            .map(|j| (previous.tie(i, j) * previous.tie(j, i) * x.tie(i, j) * x.tie(j, i)) as f64)
            .sum(),
        EffectKind::CovariateAlter => {
            let z = covariate(effect, covariates)?;
            (0..n).map(|j| t(i, j) * z.centered(j)).sum()
        }
        EffectKind::CovariateEgo => {
            let z = covariate(effect, covariates)?;
            (0..n).map(|j| t(i, j) * z.centered(i)).sum()
        }
        EffectKind::CovariateSimilarity => {
            let z = covariate(effect, covariates)?;
            (0..n).map(|j| t(i, j) * z.similarity(i, j)).sum()
        }
        EffectKind::CovariateSimilarityReciprocity => {
            let z = covariate(effect, covariates)?;
            (0..n).map(|j| t(i, j) * t(j, i) * z.similarity(i, j)).sum()
        }
    };
    Ok(value)
}

/// Change statistics for one actor: row `h` holds
/// `s_ik(x, x with (i,h) toggled) - s_ik(x, x)` for every effect `k`.
/// Row `i` (the no-change option) is zero.
#[derive(Debug, Clone, Default)]
pub struct ChangeStatistics {
    n: usize,
    effects: usize,
    values: Vec<f64>,
    two_path_counts: Vec<u32>,
}

impl ChangeStatistics {
    pub fn new(n: usize, effects: usize) -> Self {
        ChangeStatistics { n, effects, values: vec![0.0; n * effects], two_path_counts: vec![0; n] }
    }

    #[inline]
    pub fn row(&self, h: usize) -> &[f64] {
        &self.values[h * self.effects..(h + 1) * self.effects]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn effects(&self) -> usize {
        self.effects
    }

    /// Fills the table for actor `i` in state `x`. Covariate indices are
    /// assumed to have been validated.
    pub fn compute(&mut self, effects: &[ObjectiveEffect], covariates: &[ActorCovariate], i: usize, x: &Digraph) {
        let n = x.n();
        let l = effects.len();
        if self.n != n || self.effects != l {
            *self = ChangeStatistics::new(n, l);
        }
        let needs_indirect = effects.iter().any(|e| e.kind == EffectKind::IndirectTies);
        let mut indirect_base = 0.0;
        if needs_indirect {
            self.two_path_counts.iter_mut().for_each(|c| *c = 0);
            for k in (0..n).filter(|&k| x.has_tie(i, k)) {
                for j in (0..n).filter(|&j| x.has_tie(k, j)) {
                    self.two_path_counts[j] += 1;
                }
            }
            indirect_base = (0..n)
                .filter(|&j| j != i && self.two_path_counts[j] > 0 && !x.has_tie(i, j))
                .count() as f64;
        }
        // effect-major so the kind dispatch happens once per effect
        let counts = &self.two_path_counts;
        let sign = |h: usize| if x.has_tie(i, h) { -1.0 } else { 1.0 };
        for (k, e) in effects.iter().enumerate() {
            let cov = e.covariate.map(|c| &covariates[c]);
            let values = &mut self.values;
            match e.kind {
                EffectKind::Outdegree => fill_column(values, l, k, i, n, sign),
                EffectKind::Reciprocity => fill_column(values, l, k, i, n, |h| sign(h) * x.tie(h, i) as f64),
                EffectKind::TransitiveTriplets => fill_column(values, l, k, i, n, |h| sign(h) * (x.shared_out(i, h) + x.two_paths(i, h)) as f64),
                EffectKind::ThreeCycles => fill_column(values, l, k, i, n, |h| sign(h) * x.two_paths(h, i) as f64),
                EffectKind::IndirectTies => fill_column(values, l, k, i, n, |h| indirect_after_toggle(x, i, h, counts) - indirect_base),
                // only dropping a mutual tie changes x0_ij x0_ji x_ij x_ji
                EffectKind::PersistentReciprocity => {
                    fill_column(values, l, k, i, n, |h| if x.has_tie(i, h) && x.has_tie(h, i) { -1.0 } else { 0.0 })
                }
                EffectKind::CovariateAlter => {
                    let c = cov.expect("validated");
                    fill_column(values, l, k, i, n, |h| sign(h) * c.centered(h))
                }
                EffectKind::CovariateEgo => {
                    let c = cov.expect("validated").centered(i);
                    fill_column(values, l, k, i, n, |h| sign(h) * c)
                }
                EffectKind::CovariateSimilarity => {
                    let c = cov.expect("validated");
                    fill_column(values, l, k, i, n, |h| sign(h) * c.similarity(i, h))
                }
                EffectKind::CovariateSimilarityReciprocity => {
                    let c = cov.expect("validated");
                    fill_column(values, l, k, i, n, |h| sign(h) * x.tie(h, i) as f64 * c.similarity(i, h))
                }
            }
        }
    }
}

#[inline(always)]
fn fill_column(values: &mut [f64], l: usize, k: usize, i: usize, n: usize, f: impl Fn(usize) -> f64) {
    for h in 0..n {
        values[h * l + k] = if h == i { 0.0 } else { f(h) };
    }
}

/// Indirect-ties statistic of `i` after toggling `(i, h)`, given the two-path
/// counts `c_j = sum_k x_ik x_kj` of the current state.
fn indirect_after_toggle(x: &Digraph, i: usize, h: usize, counts: &[u32]) -> f64 {
    let n = x.n();
    let adding = !x.has_tie(i, h);
    let mut s = 0usize;
    for j in (0..n).filter(|&j| j != i) {
        let tied = if j == h { adding } else { x.has_tie(i, j) };
        if tied {
            continue;
        }
        let c = counts[j] as i64 + if x.has_tie(h, j) { if adding { 1 } else { -1 } } else { 0 };
        if c > 0 {
            s += 1;
        }
    }
    s as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn g(n: usize, arcs: &[(usize, usize)]) -> Digraph {
        Digraph::from_arcs(n, arcs.iter().copied()).unwrap()
    }

    fn eval(kind: EffectKind, i: usize, x: &Digraph) -> f64 {
        evaluate_objective_statistic(&ObjectiveEffect::structural(kind), i, x, x, &[]).unwrap()
    }

    #[test]
    fn transitive_triangle_counts() {
        // arcs (1,2),(2,3),(1,3) in 1-based labels
        let x = g(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(eval(EffectKind::TransitiveTriplets, 0, &x), 1.0);
        assert_eq!(eval(EffectKind::Reciprocity, 0, &x), 0.0);
        assert_eq!(eval(EffectKind::Outdegree, 0, &x), 2.0);
    }

    #[test]
    fn three_cycle_counts() {
        let x = g(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(eval(EffectKind::ThreeCycles, 0, &x), 1.0);
        assert_eq!(eval(EffectKind::TransitiveTriplets, 0, &x), 0.0);
    }

    #[test]
    fn indirect_ties_exclude_self_and_direct() {
        // 0 -> 1 -> 0 (mutual) and 1 -> 2: actor 0 reaches 2 indirectly, itself is not counted
        let x = g(3, &[(0, 1), (1, 0), (1, 2)]);
        assert_eq!(eval(EffectKind::IndirectTies, 0, &x), 1.0);
        let y = g(3, &[(0, 1), (1, 0), (1, 2), (0, 2)]);
        assert_eq!(eval(EffectKind::IndirectTies, 0, &y), 0.0);
    }

    #[test]
    fn persistent_reciprocity_uses_previous() {
        let prev = g(3, &[(0, 1), (1, 0)]);
        let cand = g(3, &[(0, 1), (1, 0), (0, 2)]);
        let e = ObjectiveEffect::structural(EffectKind::PersistentReciprocity);
        assert_eq!(evaluate_objective_statistic(&e, 0, &prev, &cand, &[]).unwrap(), 1.0);
        let dropped = g(3, &[(1, 0)]);
        assert_eq!(evaluate_objective_statistic(&e, 0, &prev, &dropped, &[]).unwrap(), 0.0);
        let fresh = g(3, &[(0, 2), (2, 0)]);
        assert_eq!(evaluate_objective_statistic(&e, 0, &fresh, &fresh, &[]).unwrap(), 1.0);
        assert_eq!(evaluate_objective_statistic(&e, 0, &prev, &fresh, &[]).unwrap(), 0.0);
    }

    #[test]
    fn covariate_effects() {
        let z = vec![ActorCovariate::new("g", vec![0.0, 1.0, 1.0, 0.0]).unwrap()];
        let x = g(4, &[(0, 1), (0, 3), (3, 0)]);
        let ev = |kind| evaluate_objective_statistic(&ObjectiveEffect::with_covariate(kind, 0), 0, &x, &x, &z).unwrap();
        assert_eq!(ev(EffectKind::CovariateAlter), 0.5 - 0.5);
        assert_eq!(ev(EffectKind::CovariateEgo), 2.0 * -0.5);
        assert_eq!(ev(EffectKind::CovariateSimilarity), 0.0 + 1.0);
        assert_eq!(ev(EffectKind::CovariateSimilarityReciprocity), 1.0);
    }

    #[test]
    fn missing_covariate_is_an_error() {
        let x = Digraph::empty(3);
        let e = ObjectiveEffect { kind: EffectKind::CovariateAlter, covariate: Some(2) };
        assert!(matches!(evaluate_objective_statistic(&e, 0, &x, &x, &[]), Err(Error::MissingCovariate(_))));
        let e = ObjectiveEffect::structural(EffectKind::CovariateEgo);
        assert!(evaluate_objective_statistic(&e, 0, &x, &x, &[]).is_err());
        assert!(EffectSet::new(vec![e], vec![]).validate(&[]).is_err());
    }

    #[test]
    fn unknown_effect_name() {
        assert!(matches!(EffectKind::from_name("popularity"), Err(Error::UnknownEffect(_))));
        for k in EffectKind::ALL {
            assert_eq!(EffectKind::from_name(k.name()).unwrap(), k);
        }
    }
}
