use std::collections::HashMap;

use saom_core::augmentation::{initial_path, path_log_probability, MicroStep, SamplePath};
use saom_core::mh::{run_chain, ChainContext, ChainState};
use saom_core::rng::{stream, Purpose};
use saom_core::*;

const ALPHABET: [(usize, usize); 4] = [(0, 1), (1, 0), (0, 0), (1, 1)];

fn key(steps: &[MicroStep]) -> u64 {
    steps.iter().fold(1u64, |k, s| k * 4 + ALPHABET.iter().position(|&(i, j)| s.ego() == i && s.alter() == j).unwrap() as u64)
}

/// Unnormalised target probabilities of every parity-feasible path of length
/// <= max_len, and their total.
fn enumerate_target(
    model: &Model,
    params: &Parameters,
    start: &Digraph,
    end: &Digraph,
    max_len: usize,
) -> (HashMap<u64, f64>, f64) {
    let mut weights = HashMap::new();
    let mut stack = vec![Vec::<MicroStep>::new()];
    while let Some(steps) = stack.pop() {
        let path = SamplePath::new(0, steps.clone());
        if augmentation::validate_parity(&path, start, end) {
            let lp = path_log_probability(&path, start, params, model, 1.0);
            if lp > f64::NEG_INFINITY {
                weights.insert(key(&steps), lp.exp());
            }
        }
        if steps.len() < max_len {
            for &(i, j) in &ALPHABET {
                let mut next = steps.clone();
                next.push(MicroStep::new(i, j));
                stack.push(next);
            }
        }
    }
    let total: f64 = weights.values().sum();
    (weights, total)
}

fn stationarity_gap(model: &Model, params: &Parameters, end: &Digraph, seed: u64) -> f64 {
    let start = Digraph::empty(2);
    let (target, enumerated) = enumerate_target(model, params, &start, end, 10);
    let mix = ProposalMix::default();
    let ctx = ChainContext { model, params, start: &start, end, duration: 1.0, mix: &mix, revalidate_every: 1000 };
    let path = initial_path(0, &start, end, &mut stream(seed, Purpose::InitialPath, &[]));
    let mut state = ChainState::new(path, &ctx, stream(seed, Purpose::Chain, &[])).unwrap();
    run_chain(&mut state, &ctx, 10_000).unwrap();
    let samples = 400_000;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut outside = 0u64;
    for _ in 0..samples {
        run_chain(&mut state, &ctx, 3).unwrap();
        if state.path.len() > 10 {
            outside += 1;
        } else {
            *counts.entry(key(&state.path.steps)).or_default() += 1;
        }
    }
    // compare distributions conditional on R <= 10, which the stationary
    // law restricts to exactly; paths below 1e-3 are pooled by length so the
    // sampling noise of many tiny cells does not dominate
    let inside = (samples - outside) as f64;
    let length = |k: u64| (63 - k.leading_zeros() as usize) / 2;
    let bin = |k: u64| -> u64 {
        if target.get(&k).is_some_and(|p| p / enumerated >= 1e-3) {
            k
        } else {
            length(k) as u64
        }
    };
    let mut expected: HashMap<u64, f64> = HashMap::new();
    for (k, p) in &target {
        *expected.entry(bin(*k)).or_default() += p / enumerated;
    }
    let mut observed: HashMap<u64, f64> = HashMap::new();
    for (k, c) in &counts {
        *observed.entry(bin(*k)).or_default() += *c as f64 / inside;
    }
    let mut tv = 0.0;
    for (b, p) in &expected {
        tv += (p - observed.get(b).copied().unwrap_or(0.0)).abs();
    }
    for (b, q) in &observed {
        if !expected.contains_key(b) {
            tv += q;
        }
    }
    tv / 2.0
}

fn two_actor_model(allow_keep: bool, rate_effect: bool) -> Model {
    let rate = if rate_effect { vec![RateEffect { kind: RateEffectKind::Outdegree, covariate: None }] } else { vec![] };
    let effects = EffectSet::new(
        vec![ObjectiveEffect::structural(EffectKind::Outdegree), ObjectiveEffect::structural(EffectKind::Reciprocity)],
        rate,
    );
    Model::new(2, effects, vec![], PermittedSetPolicy { allow_keep, structural_zeros: None }, false).unwrap()
}

#[test]
fn chain_is_stationary_for_the_path_distribution() {
    let params = Parameters::new(vec![0.6], vec![], vec![-0.4, 1.0]);
    let model = two_actor_model(true, false);
    let same = Digraph::empty(2);
    let one = Digraph::from_arcs(2, [(0, 1)]).unwrap();
    for (end, seed) in [(&same, 1u64), (&one, 2)] {
        let tv = stationarity_gap(&model, &params, end, seed);
        assert!(tv < 0.02, "total variation {tv}");
    }
}

#[test]
fn chain_is_stationary_without_no_change_steps() {
    let params = Parameters::new(vec![0.6], vec![], vec![-0.4, 1.0]);
    let model = two_actor_model(false, false);
    let both = Digraph::from_arcs(2, [(0, 1), (1, 0)]).unwrap();
    let tv = stationarity_gap(&model, &params, &both, 3);
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn chain_is_stationary_with_state_dependent_rates() {
    let params = Parameters::new(vec![0.6], vec![0.5], vec![-0.4, 1.0]);
    let model = two_actor_model(true, true);
    let one = Digraph::from_arcs(2, [(1, 0)]).unwrap();
    let tv = stationarity_gap(&model, &params, &one, 4);
    assert!(tv < 0.02, "total variation {tv}");
}
