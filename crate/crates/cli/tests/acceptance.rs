//! Acceptance criteria, one PASS/FAIL line each. The simulation-study
//! replication (criterion 5) takes hours and only runs with `--include-ignored`,
//! `--ignored`, or `SAOM_SLOW=1`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use saom_cli::{run, Command, Context, Overrides, RunConfig};
use saom_core::augmentation::{
    complete_data_score, initial_path, kappa_poisson, path_log_probability, validate_parity, MicroStep, SamplePath,
};
use saom_core::choice::choice_probabilities;
use saom_core::estimation::{
    estimate_ml, exact_log_likelihood, exact_transition_probability, likelihood_ratio, standard_errors,
};
use saom_core::mh::{run_chain, ChainContext, ChainState};
use saom_core::rng::{stream, Purpose, Stream};
use saom_core::simulator::{simulate_panel, simulate_period};
use saom_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(number: u32, name: &str, outcome: &Outcome, started: Instant) -> bool {
    println!(
        "criterion {number} {name}: {} ({}; {:.1}s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        started.elapsed().as_secs_f64()
    );
    outcome.pass
}

fn random_digraph(n: usize, density: f64, rng: &mut Stream) -> Digraph {
    let mut x = Digraph::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                x.set(i, j, true);
            }
        }
    }
    x
}

fn covariates(n: usize, rng: &mut Stream) -> Vec<ActorCovariate> {
    vec![
        ActorCovariate::new("binary", (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8 as f64).collect()).unwrap(),
        ActorCovariate::new("score", (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap(),
    ]
}

fn two_effect_model(n: usize) -> Model {
    let effects = EffectSet::new(
        vec![ObjectiveEffect::structural(EffectKind::Outdegree), ObjectiveEffect::structural(EffectKind::Reciprocity)],
        vec![],
    );
    Model::simple(n, effects, vec![]).unwrap()
}

// criterion 1

fn random_instance(rng: &mut Stream) -> (Model, Parameters, SamplePath, Digraph, f64) {
    let n = rng.random_range(3..=6);
    let covs = covariates(n, rng);
    let mut kinds = EffectKind::ALL.to_vec();
    let l = rng.random_range(3..=8);
    let mut objective = Vec::new();
    for _ in 0..l {
        let k = kinds.remove(rng.random_range(0..kinds.len()));
        objective.push(if k.needs_covariate() {
            ObjectiveEffect::with_covariate(k, rng.random_range(0..2))
        } else {
            ObjectiveEffect::structural(k)
        });
    }
    let mut rate = Vec::new();
    if rng.random::<bool>() {
        for _ in 0..rng.random_range(1..=2) {
            let kind = RateEffectKind::ALL[rng.random_range(0..4)];
            let covariate = (kind == RateEffectKind::Covariate).then(|| rng.random_range(0..2));
            rate.push(RateEffect { kind, covariate });
        }
    }
    let rate_len = rate.len();
    let model = Model::simple(n, EffectSet::new(objective, rate), covs).unwrap();
    let params = Parameters::new(
        vec![rng.random_range(0.5..3.0)],
        (0..rate_len).map(|_| rng.random_range(-0.3..0.3)).collect(),
        (0..l).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    let start = random_digraph(n, 0.3, rng);
    let r = rng.random_range(0..=20);
    let steps: Vec<MicroStep> = (0..r).map(|_| MicroStep::new(rng.random_range(0..n), rng.random_range(0..n))).collect();
    (model, params, SamplePath::new(0, steps), start, rng.random_range(0.5..2.0))
}

fn criterion_1() -> Outcome {
    let mut rng = stream(101, Purpose::Check, &[1]);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (model, params, path, start, duration) = random_instance(&mut rng);
        let score = complete_data_score(&path, &start, &params, &model, duration).unwrap();
        let layout = params.layout();
        let theta = params.to_vec();
        for k in 0..theta.len() {
            let h = 1e-5 * theta[k].abs().max(1.0);
            let at = |d: f64| {
                let mut v = theta.clone();
                v[k] += d;
                path_log_probability(&path, &start, &Parameters::from_vec(&layout, &v).unwrap(), &model, duration)
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((score[k] - fd).abs() / fd.abs().max(1.0));
        }
    }
    Outcome { pass: worst < 1e-6, detail: format!("max relative error {worst:.2e} over 200 instances, bound 1e-6") }
}

// criterion 2

/// Sum of path probabilities over every path of length <= max_len from
/// `start` to `end`, by depth-first enumeration.
fn enumerated_probability(model: &Model, params: &Parameters, start: &Digraph, end: &Digraph, max_len: usize) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn visit(
        model: &Model,
        params: &Parameters,
        start: &Digraph,
        end: &Digraph,
        max_len: usize,
        x: &mut Digraph,
        steps: &mut Vec<MicroStep>,
        total: &mut f64,
    ) {
        if x == end {
            let path = SamplePath::new(0, steps.clone());
            *total += path_log_probability(&path, start, params, model, 1.0).exp();
        }
        if steps.len() == max_len || x.hamming(end) > max_len - steps.len() {
            return;
        }
        let n = x.n();
        for i in 0..n {
            for j in 0..n {
                steps.push(MicroStep::new(i, j));
                if i != j {
                    x.toggle(i, j);
                }
                visit(model, params, start, end, max_len, x, steps, total);
                if i != j {
                    x.toggle(i, j);
                }
                steps.pop();
            }
        }
    }
    let mut total = 0.0;
    visit(model, params, start, end, max_len, &mut start.clone(), &mut Vec::new(), &mut total);
    total
}

fn criterion_2() -> Outcome {
    let max_len = 8;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut details = Vec::new();
    let cases: Vec<(Model, Parameters, Digraph, Digraph)> = vec![
        (
            two_effect_model(2),
            Parameters::new(vec![0.6], vec![], vec![-0.5, 1.0]),
            Digraph::empty(2),
            Digraph::from_arcs(2, [(0, 1)]).unwrap(),
        ),
        (
            two_effect_model(2),
            Parameters::new(vec![0.6], vec![], vec![0.3, -0.7]),
            Digraph::from_arcs(2, [(0, 1), (1, 0)]).unwrap(),
            Digraph::from_arcs(2, [(0, 1), (1, 0)]).unwrap(),
        ),
        (
            Model::simple(
                3,
                EffectSet::new(
                    vec![
                        ObjectiveEffect::structural(EffectKind::Outdegree),
                        ObjectiveEffect::structural(EffectKind::Reciprocity),
                        ObjectiveEffect::structural(EffectKind::TransitiveTriplets),
                    ],
                    vec![],
                ),
                vec![],
            )
            .unwrap(),
            Parameters::new(vec![0.3], vec![], vec![-0.8, 1.2, 0.4]),
            Digraph::from_arcs(3, [(0, 1), (1, 2)]).unwrap(),
            Digraph::from_arcs(3, [(0, 1), (1, 0), (1, 2)]).unwrap(),
        ),
        (
            two_effect_model(3),
            Parameters::new(vec![0.3], vec![], vec![-0.2, 0.5]),
            Digraph::empty(3),
            Digraph::from_arcs(3, [(0, 1), (2, 1)]).unwrap(),
        ),
    ];
    let mut all_ok = true;
    for (model, params, start, end) in &cases {
        let n = model.n();
        let exact = exact_transition_probability(start, end, params, model, 0, 1.0).unwrap();
        let summed = enumerated_probability(model, params, start, end, max_len);
        // every omitted path has R > max_len, whose total probability is a Poisson tail
        let tail = 1.0 - (0..=max_len).map(|r| kappa_poisson(params.rates[0], n, 1.0, r).unwrap()).sum::<f64>();
        let gap = exact - summed;
        let ok = gap >= -1e-10 && gap <= tail + 1e-10;
        all_ok &= ok;
        worst_excess = worst_excess.max(gap - tail);
        details.push(format!("n={n}: exact {exact:.6e}, paths {summed:.6e}, gap {gap:.1e} <= tail {tail:.1e}"));
    }
    Outcome { pass: all_ok, detail: details.join("; ") }
}

// criterion 3

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    (0..len).map(|k| (get(a, k) - get(b, k)).abs()).sum::<f64>() / 2.0
}

fn histogram(values: &[usize]) -> Vec<f64> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut h = vec![0.0; max + 1];
    for &v in values {
        h[v] += 1.0 / values.len() as f64;
    }
    h
}

fn criterion_3() -> Outcome {
    let model = two_effect_model(3);
    let params = Parameters::new(vec![1.0], vec![], vec![-0.6, 1.1]);
    let start = Digraph::from_arcs(3, [(0, 1), (1, 2)]).unwrap();
    let end = Digraph::from_arcs(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
    let target = 100_000;

    let mut rng = stream(303, Purpose::Simulation, &[]);
    let mut oracle = Vec::with_capacity(target);
    let mut tries = 0u64;
    while oracle.len() < target {
        tries += 1;
        let sim = simulate_period(&start, &params, &model, 0, 1.0, false, &mut rng).unwrap();
        if sim.end_state == end {
            oracle.push(sim.opportunity_count);
        }
    }

    let mix = ProposalMix::default();
    let ctx = ChainContext { model: &model, params: &params, start: &start, end: &end, duration: 1.0, mix: &mix, revalidate_every: 10_000 };
    let path = initial_path(0, &start, &end, &mut stream(303, Purpose::InitialPath, &[]));
    let mut chain = ChainState::new(path, &ctx, stream(303, Purpose::Chain, &[])).unwrap();
    run_chain(&mut chain, &ctx, 10_000).unwrap();
    // thin until the lag-1 autocorrelation of R is negligible
    let thin = 25;
    let mut draws = Vec::new();
    let mut ess = 0.0;
    while ess < target as f64 {
        for _ in 0..20_000 {
            run_chain(&mut chain, &ctx, thin).unwrap();
            draws.push(chain.path.len());
        }
        let mean = draws.iter().sum::<usize>() as f64 / draws.len() as f64;
        let var: f64 = draws.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
        let cov: f64 = draws.windows(2).map(|w| (w[0] as f64 - mean) * (w[1] as f64 - mean)).sum();
        let rho = (cov / var).max(0.0);
        ess = draws.len() as f64 * (1.0 - rho) / (1.0 + rho);
    }
    let tv = total_variation(&histogram(&oracle), &histogram(&draws));
    Outcome {
        pass: tv <= 0.05,
        detail: format!(
            "TV {tv:.4} between MH ({:.0} effective draws) and rejection sampling ({target} of {tries} runs), bound 0.05",
            ess
        ),
    }
}

// criterion 4

/// Argmax of `f` over a grid refined around the best point until the spacing
/// is below `resolution`.
fn grid_argmax(f: &dyn Fn(&[f64]) -> f64, lower: &[f64], upper: &[f64], coarse: usize, resolution: f64) -> (Vec<f64>, bool) {
    let d = lower.len();
    let mut best = vec![0.0; d];
    let mut best_value = f64::NEG_INFINITY;
    let mut index = vec![0usize; d];
    loop {
        let point: Vec<f64> =
            (0..d).map(|k| lower[k] + (upper[k] - lower[k]) * index[k] as f64 / (coarse - 1) as f64).collect();
        let v = f(&point);
        if v > best_value {
            best_value = v;
            best = point;
        }
        let mut k = 0;
        while k < d {
            index[k] += 1;
            if index[k] < coarse {
                break;
            }
            index[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let on_edge = (0..d).any(|k| {
        let step = (upper[k] - lower[k]) / (coarse - 1) as f64;
        best[k] - lower[k] < 0.5 * step || upper[k] - best[k] < 0.5 * step
    });
    let mut step: Vec<f64> = (0..d).map(|k| (upper[k] - lower[k]) / (coarse - 1) as f64).collect();
    while step.iter().any(|s| *s > resolution) {
        step.iter_mut().for_each(|s| *s /= 2.0);
        let centre = best.clone();
        let mut offsets = vec![-1i32; d];
        loop {
            let point: Vec<f64> = (0..d).map(|k| centre[k] + offsets[k] as f64 * step[k]).collect();
            let v = f(&point);
            if v > best_value {
                best_value = v;
                best = point;
            }
            let mut k = 0;
            while k < d {
                offsets[k] += 1;
                if offsets[k] <= 1 {
                    break;
                }
                offsets[k] = -1;
                k += 1;
            }
            if k == d {
                break;
            }
        }
    }
    (best, on_edge)
}

struct OracleFit {
    converged: bool,
    max_ratio: f64,
}

/// Standard errors from the finite-difference Hessian of `f` at `at`, or
/// `None` when the Hessian is not negative definite.
fn hessian_standard_errors(f: &dyn Fn(&[f64]) -> f64, at: &[f64]) -> Option<Vec<f64>> {
    let d = at.len();
    let h = 1e-3;
    let mut info = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let e = |da: f64, db: f64| {
                let mut w = at.to_vec();
                w[a] += da;
                w[b] += db;
                f(&w)
            };
            info[(a, b)] = -(e(h, h) - e(h, -h) - e(-h, h) + e(-h, -h)) / (4.0 * h * h);
        }
    }
    let cov = info.cholesky()?.inverse();
    Some((0..d).map(|k| cov[(k, k)].sqrt()).collect())
}

fn criterion_4(fits: &mut Vec<OracleFit>) -> Outcome {
    let model = two_effect_model(3);
    let truth = Parameters::new(vec![0.6; 4], vec![], vec![-0.5, 1.0]);
    let layout = model.layout(4);
    let lower = [0.05, 0.05, 0.05, 0.05, -4.0, -4.0];
    let upper = [5.0, 5.0, 5.0, 5.0, 4.0, 4.0];
    let mut details = Vec::new();
    let mut all_ok = true;
    let mut used = 0;
    let mut seed = 0u64;
    while used < 3 && seed < 40 {
        seed += 1;
        let first = Digraph::from_arcs(3, [(0, 1), (2, 0)]).unwrap();
        let panel = simulate_panel(&first, &truth, &model, &[1.0; 4], 400 + seed, 0).unwrap();
        if (0..panel.periods()).any(|m| panel.changes(m) == 0) {
            continue;
        }
        let f = |v: &[f64]| {
            if v[..4].iter().any(|&a| a <= 0.0) {
                return f64::NEG_INFINITY;
            }
            exact_log_likelihood(&panel, &model, &Parameters::from_vec(&layout, v).unwrap()).unwrap()
        };
        let (mle, on_edge) = grid_argmax(&f, &lower, &upper, 5, 0.01);
        let interior = !on_edge && (0..6).all(|k| mle[k] - lower[k] > 0.05 && upper[k] - mle[k] > 0.05);
        // the comparison is only meaningful where the likelihood is curved
        // enough for the maximum to be located to within the tolerance
        let curved = interior && hessian_standard_errors(&f, &mle).is_some_and(|se| se.iter().all(|&s| s <= 2.0));
        if !curved {
            continue;
        }
        used += 1;
        // with D the complete-data information, the default gain moves too
        // slowly along directions the observed data barely identify
        let controls = EstimationControls { seed, iterations: 10_000, gain_initial: 1.0, ..EstimationControls::default() };
        let fit = estimate_ml(&panel, &model, &controls).unwrap();
        fits.push(OracleFit { converged: fit.converged, max_ratio: fit.convergence.max_abs_ratio() });
        let diff = fit.theta.to_vec().iter().zip(&mle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        all_ok &= diff <= 0.15;
        details.push(format!("panel {seed}: max |ML - grid argmax| {diff:.3}"));
    }
    if used == 0 {
        return Outcome { pass: false, detail: "no panel with a well-defined interior maximum found".into() };
    }
    Outcome { pass: all_ok, detail: format!("{}; bound 0.15", details.join(", ")) }
}

// criterion 5

const TABLE_AVE: [f64; 9] = [2.37, 3.39, -1.96, 0.97, 0.180, 0.03, 0.51, -0.28, 0.52];

fn design_model(n: usize) -> Model {
    let gender = ActorCovariate::new("gender", (0..n).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
    let effects = EffectSet::new(
        vec![
            ObjectiveEffect::structural(EffectKind::Outdegree),
            ObjectiveEffect::structural(EffectKind::Reciprocity),
            ObjectiveEffect::structural(EffectKind::TransitiveTriplets),
            ObjectiveEffect::structural(EffectKind::ThreeCycles),
            ObjectiveEffect::with_covariate(EffectKind::CovariateAlter, 0),
            ObjectiveEffect::with_covariate(EffectKind::CovariateEgo, 0),
            ObjectiveEffect::with_covariate(EffectKind::CovariateSimilarity, 0),
        ],
        vec![],
    );
    Model::simple(n, effects, vec![gender]).unwrap()
}

fn design_beta() -> Vec<f64> {
    vec![-2.0, 1.0, 0.2, 0.0, 0.5, -0.25, 0.5]
}

/// Synthetic first wave: one unit of time from the empty graph under the
/// design objective function.
fn design_first_wave(model: &Model) -> Digraph {
    let warm = Parameters::new(vec![3.0], vec![], design_beta());
    let mut rng = stream(2024, Purpose::Simulation, &[999]);
    simulate_period(&Digraph::empty(model.n()), &warm, model, 0, 1.0, false, &mut rng).unwrap().end_state
}

fn criterion_5(replications: usize, fits: &mut Vec<OracleFit>) -> Outcome {
    let model = design_model(32);
    let first = design_first_wave(&model);
    let truth = Parameters::new(vec![2.5, 3.5], vec![], design_beta());
    let mut estimates: Vec<Vec<f64>> = Vec::new();
    let mut failures = 0;
    for rep in 0..replications {
        let panel = simulate_panel(&first, &truth, &model, &[1.0, 1.0], 5000, rep as u64).unwrap();
        let controls = EstimationControls { seed: 7000 + rep as u64, posthoc_draws: 1000, ..EstimationControls::default() };
        let t = Instant::now();
        match estimate_ml(&panel, &model, &controls) {
            Ok(fit) => {
                eprintln!(
                    "  replication {}: converged {} max|t| {:.3} in {:.0}s: {:?}",
                    rep + 1,
                    fit.converged,
                    fit.convergence.max_abs_ratio(),
                    t.elapsed().as_secs_f64(),
                    fit.theta.to_vec().iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
                );
                fits.push(OracleFit { converged: fit.converged, max_ratio: fit.convergence.max_abs_ratio() });
                estimates.push(fit.theta.to_vec());
            }
            Err(e) => {
                eprintln!("  replication {}: {e}", rep + 1);
                failures += 1;
            }
        }
    }
    if estimates.len() < 2 {
        return Outcome { pass: false, detail: format!("{failures} of {replications} fits failed") };
    }
    let t = estimates.len() as f64;
    let mut worst = 0.0f64;
    let mut cells = Vec::new();
    for k in 0..9 {
        let mean = estimates.iter().map(|e| e[k]).sum::<f64>() / t;
        let sd = (estimates.iter().map(|e| (e[k] - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
        let mcse = sd / t.sqrt();
        let z = (mean - TABLE_AVE[k]).abs() / mcse;
        worst = worst.max(z);
        cells.push(format!("{mean:.3}(ave {}, mcse {mcse:.3})", TABLE_AVE[k]));
    }
    Outcome {
        pass: worst <= 3.0,
        detail: format!(
            "{} fits, {failures} errors; means {}; worst |mean - ave| / mcse {worst:.2}, bound 3",
            estimates.len(),
            cells.join(" ")
        ),
    }
}

// criterion 6

fn criterion_6(fits: &[OracleFit]) -> Outcome {
    let converged: Vec<&OracleFit> = fits.iter().filter(|f| f.converged).collect();
    let worst = converged.iter().fold(0.0f64, |m, f| m.max(f.max_ratio));
    Outcome {
        pass: !converged.is_empty() && worst < 0.1,
        detail: format!("{} of {} fits converged; largest |t-ratio| among them {worst:.3}", converged.len(), fits.len()),
    }
}

// criterion 7

fn criterion_7() -> Outcome {
    let model = two_effect_model(3);
    let first = Digraph::from_arcs(3, [(0, 1), (2, 0)]).unwrap();
    let truth = Parameters::new(vec![1.5, 1.5], vec![], vec![-0.5, 1.0]);
    let panel = simulate_panel(&first, &truth, &model, &[1.0, 1.0], 707, 0).unwrap();
    let theta0 = truth.clone();
    let theta1 = Parameters::new(vec![1.2, 1.8], vec![], vec![-0.9, 1.4]);
    let controls = EstimationControls { seed: 77, ..EstimationControls::default() };
    let same = likelihood_ratio(&panel, &model, &theta0, &theta0, 10, 50, &controls).unwrap();
    let forward = likelihood_ratio(&panel, &model, &theta0, &theta1, 20, 400, &controls).unwrap();
    let backward = likelihood_ratio(&panel, &model, &theta1, &theta0, 20, 400, &controls).unwrap();
    let exact = exact_log_likelihood(&panel, &model, &theta1).unwrap() - exact_log_likelihood(&panel, &model, &theta0).unwrap();
    let combined = (forward.standard_error.powi(2) + backward.standard_error.powi(2)).sqrt();
    let anti = (forward.log_ratio + backward.log_ratio).abs();
    let ok_same = same.log_ratio.abs() <= 0.05;
    let ok_exact = (forward.log_ratio - exact).abs() <= 0.1;
    let ok_anti = anti <= 3.0 * combined;
    Outcome {
        pass: ok_same && ok_exact && ok_anti,
        detail: format!(
            "LR(t0,t0) {:.4}; LR(t0,t1) {:.4} vs exact {exact:.4}; LR(t0,t1) + LR(t1,t0) = {anti:.4} vs 3 x combined s.e. {:.4}; \
             van de Bunt homogeneity test not run (data not bundled)",
            same.log_ratio,
            forward.log_ratio,
            3.0 * combined
        ),
    }
}

// criterion 8

fn criterion_8() -> Outcome {
    let mut rng = stream(808, Purpose::Check, &[]);
    let mut failures = Vec::new();

    // parity of every chain state
    let mut states = 0;
    for case in 0..20u64 {
        let n = rng.random_range(2..=5);
        let model = two_effect_model(n);
        let params = Parameters::new(vec![1.5], vec![], vec![-0.7, 0.9]);
        let start = random_digraph(n, 0.3, &mut rng);
        let end = random_digraph(n, 0.3, &mut rng);
        let mix = ProposalMix::default();
        let ctx = ChainContext { model: &model, params: &params, start: &start, end: &end, duration: 1.0, mix: &mix, revalidate_every: 100 };
        let path = initial_path(0, &start, &end, &mut stream(808, Purpose::InitialPath, &[case]));
        let mut chain = ChainState::new(path, &ctx, stream(808, Purpose::Chain, &[case])).unwrap();
        for _ in 0..2000 {
            run_chain(&mut chain, &ctx, 1).unwrap();
            states += 1;
            if !validate_parity(&chain.path, &start, &end) {
                failures.push(format!("parity broken in case {case}"));
                break;
            }
        }
    }

    // choice normalisation and shift invariance
    let model = Model::simple(
        5,
        EffectSet::new(
            vec![
                ObjectiveEffect::structural(EffectKind::Outdegree),
                ObjectiveEffect::structural(EffectKind::Reciprocity),
                ObjectiveEffect::with_covariate(EffectKind::CovariateEgo, 0),
            ],
            vec![],
        ),
        vec![ActorCovariate::new("z", vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap()],
    )
    .unwrap();
    for _ in 0..200 {
        let x = random_digraph(5, 0.4, &mut rng);
        let i = rng.random_range(0..5);
        let beta = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0];
        let p = choice_probabilities(i, &x, &beta, &model).unwrap();
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            failures.push("choice probabilities do not sum to 1".into());
        }
        // an ego effect adds the same amount to every change; with no-change
        // excluded it is a pure shift of the utilities
        let no_keep = Model::new(5, model.effects.clone(), model.covariates.clone(), PermittedSetPolicy { allow_keep: false, structural_zeros: None }, false).unwrap();
        let a = choice_probabilities(i, &x, &beta, &no_keep).unwrap();
        let shifted = [beta[0], beta[1], rng.random_range(-3.0..3.0)];
        // toggling adds sign * z_i; shifts only when all options share the sign,
        // so compare on actors with no ties (all options are additions)
        if x.out_degree(i) == 0 {
            let b = choice_probabilities(i, &x, &shifted, &no_keep).unwrap();
            if a.iter().zip(&b).any(|(u, v)| (u - v).abs() > 1e-12) {
                failures.push("choice probabilities changed under a utility shift".into());
            }
        }
    }

    // Poisson normalisation of kappa
    for &(alpha, n) in &[(0.5, 3usize), (2.5, 32), (6.0, 10)] {
        let total: f64 = (0..2000).map(|r| kappa_poisson(alpha, n, 1.0, r).unwrap()).sum();
        if (total - 1.0).abs() > 1e-10 {
            failures.push(format!("kappa sums to {total}"));
        }
    }

    // E[D_XV] minus D_X is the score covariance, so the difference is PSD
    let model = two_effect_model(4);
    let truth = Parameters::new(vec![2.0, 2.0], vec![], vec![-0.8, 1.0]);
    let panel = simulate_panel(&Digraph::from_arcs(4, [(0, 1), (1, 2), (3, 0)]).unwrap(), &truth, &model, &[1.0, 1.0], 88, 0).unwrap();
    let controls = EstimationControls { seed: 8, posthoc_draws: 400, ..EstimationControls::default() };
    let cov = standard_errors(&panel, &model, &truth, &controls).unwrap();
    let diff: DMatrix<f64> = &cov.mean_complete_information - &cov.information;
    let min_eig = diff.symmetric_eigenvalues().min();
    if min_eig < -1e-9 * diff.norm().max(1.0) {
        failures.push(format!("E[D_XV] - D_X has eigenvalue {min_eig:.3e}"));
    }

    // seed determinism of every command
    match command_determinism() {
        Ok(n) => {
            if n != 6 {
                failures.push(format!("only {n} commands compared"));
            }
        }
        Err(e) => failures.push(e),
    }

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{states} chain states kept parity; choice, kappa, PSD ordering and 6 commands checked")
        } else {
            failures.join("; ")
        },
    }
}

fn write_toy_project(dir: &std::path::Path) {
    let waves = [
        "0 1 0 0\n0 0 1 0\n0 0 0 0\n1 0 0 0\n",
        "0 1 0 0\n1 0 1 0\n0 0 0 1\n1 0 0 0\n",
        "0 1 1 0\n1 0 0 0\n0 0 0 1\n1 0 0 0\n",
    ];
    for (k, w) in waves.iter().enumerate() {
        std::fs::write(dir.join(format!("w{}.txt", k + 1)), w).unwrap();
    }
    std::fs::write(dir.join("z.txt"), "0\n1\n1\n0\n").unwrap();
    let config = "\
[data]
waves = w1.txt, w2.txt, w3.txt
covariates = z=z.txt

[model]
effects = outdegree, reciprocity

[estimation]
seed = 5
iterations = 60
pilot_draws = 20
posthoc_draws = 60
check_runs = 60
mom_iterations = 60
derivative_runs = 10
max_runs = 1
min_steps = 200

[parameters]
rates = 1.5, 1.5
beta = -0.8, 1.0

[simulate]
replications = 2

[lrtest]
rates = 1.5, 1.5
beta = -0.5, 0.8
grid_points = 3
draws_per_point = 20

[output]
dir = out
";
    std::fs::write(dir.join("run.ini"), config).unwrap();
}

/// Runs every command twice with the same seed and compares all output files.
fn command_determinism() -> std::result::Result<usize, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_toy_project(dir.path());
    let config = RunConfig::load(&dir.path().join("run.ini")).map_err(|e| e.to_string())?;
    let commands = [
        Command::Simulate,
        Command::EstimateMom,
        Command::EstimateMl,
        Command::LrTest,
        Command::ExactLoglik,
        Command::Diagnose,
    ];
    let mut compared = 0;
    for command in commands {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{}_{attempt}", command.name()));
            let result = Some(dir.path().join("estimate-ml_0").join("result_ml.json"));
            let ctx = Context::new(config.clone(), &Overrides { out: Some(out.clone()), result, ..Overrides::default() })
                .map_err(|e| e.to_string())?;
            // non-convergence is an acceptable outcome for the tiny budgets here
            match run(command, &ctx) {
                Ok(_) | Err(saom_cli::CliError::NotConverged { .. }) => {}
                Err(e) => return Err(format!("{}: {e}", command.name())),
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                .map_err(|e| e.to_string())?
                .map(|f| {
                    let f = f.unwrap();
                    (f.file_name().to_string_lossy().into_owned(), std::fs::read(f.path()).unwrap())
                })
                .collect();
            files.sort();
            outputs.push(files);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Err(format!("{} outputs differ between identical runs", command.name()));
        }
        compared += 1;
    }
    Ok(compared)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let slow = args.iter().any(|a| a == "--ignored" || a == "--include-ignored") || std::env::var_os("SAOM_SLOW").is_some();
    // SAOM_CRITERIA=4,6 runs a subset
    let selected: Option<Vec<u32>> =
        std::env::var("SAOM_CRITERIA").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: u32| selected.as_ref().is_none_or(|v| v.contains(&k));
    let mut ok = true;
    let mut fits = Vec::new();
    let mut check = |k: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if wanted(k) {
            let t = Instant::now();
            ok &= report(k, name, &f(), t);
        }
    };

    check(1, "score oracle", &mut criterion_1);
    check(2, "exact likelihood vs path enumeration", &mut criterion_2);
    check(3, "MH vs rejection sampling", &mut criterion_3);
    check(4, "ML vs exact grid argmax", &mut || criterion_4(&mut fits));
    if slow {
        let reps = std::env::var("SAOM_REPLICATIONS").ok().and_then(|s| s.parse().ok()).unwrap_or(50);
        check(5, "simulation-study replication", &mut || criterion_5(reps, &mut fits));
    } else if wanted(5) {
        println!("criterion 5 simulation-study replication: SKIPPED (slow suite; run with -- --include-ignored)");
    }
    check(6, "convergence diagnostic", &mut || criterion_6(&fits));
    check(7, "likelihood-ratio test", &mut criterion_7);
    check(8, "property suites", &mut criterion_8);
    if !ok {
        std::process::exit(1);
    }
}
