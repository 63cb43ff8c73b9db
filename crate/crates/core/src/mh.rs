//! Metropolis-Hastings sampling of a period's sample path given both waves.
//!
//! Five move kinds: paired insertion and deletion of an off-diagonal step,
//! single insertion and deletion of a no-change step, and permutation of a
//! short segment. A paired move only uses two occurrences of `(i,j)` with no
//! other `(i,j)` in between and at least one step in between; the segment
//! between them is randomly permuted as part of the move. The gap length of
//! paired moves and the permuted segment length are bounded by
//! `max_permutation_span`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::augmentation::{path_log_probability, validate_parity, MicroStep, PathReplay, SamplePath, StepEvaluator};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::model::{Model, Parameters};
use crate::rng::Stream;
use crate::simulator::sample_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    PairedInsertion = 0,
    PairedDeletion = 1,
    SingleInsertion = 2,
    SingleDeletion = 3,
    Permutation = 4,
}

impl MoveKind {
    pub const ALL: [MoveKind; 5] = [
        MoveKind::PairedInsertion,
        MoveKind::PairedDeletion,
        MoveKind::SingleInsertion,
        MoveKind::SingleDeletion,
        MoveKind::Permutation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::PairedInsertion => "paired_insertion",
            MoveKind::PairedDeletion => "paired_deletion",
            MoveKind::SingleInsertion => "single_insertion",
            MoveKind::SingleDeletion => "single_deletion",
            MoveKind::Permutation => "permutation",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mixture weights over move kinds, indexed by `MoveKind as usize`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalMix {
    weights: [f64; 5],
    max_permutation_span: usize,
}

impl Default for ProposalMix {
    fn default() -> Self {
        ProposalMix { weights: [0.3, 0.3, 0.1, 0.1, 0.2], max_permutation_span: 10 }
    }
}

impl ProposalMix {
    pub fn new(weights: [f64; 5], max_permutation_span: usize) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("move weights must be nonnegative, got {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(alloc::format!("move weights must sum to 1, got {sum}")));
        }
        if max_permutation_span < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "max_permutation_span must be at least 2, got {max_permutation_span}"
            )));
        }
        Ok(ProposalMix { weights, max_permutation_span })
    }

    pub fn weight(&self, kind: MoveKind) -> f64 {
        self.weights[kind as usize]
    }

    pub fn weights(&self) -> [f64; 5] {
        self.weights
    }

    pub fn max_permutation_span(&self) -> usize {
        self.max_permutation_span
    }
}

/// Proposed and accepted counts per move kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub proposed: [u64; 5],
    pub accepted: [u64; 5],
}

impl MoveCounts {
    pub fn total_proposed(&self) -> u64 {
        self.proposed.iter().sum()
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted.iter().sum()
    }

    pub fn acceptance_rate(&self, kind: MoveKind) -> f64 {
        let p = self.proposed[kind as usize];
        if p == 0 {
            0.0
        } else {
            self.accepted[kind as usize] as f64 / p as f64
        }
    }
}

/// Number of (start, gap) placements with `1 <= gap <= k` inside a run of
/// `len` consecutive positions.
pub(crate) fn placements(len: usize, k: usize) -> u64 {
    (1..=k.min(len)).map(|g| (len - g + 1) as u64).sum()
}

/// Move-set sizes of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveSetSizes {
    pub len: usize,
    /// Number of no-change steps.
    pub no_change: usize,
    /// Paired insertions: (permitted dyad, segment start, gap) with the
    /// segment free of the dyad.
    pub paired_insertions: u64,
    /// Paired deletions: consecutive occurrences of one dyad with gap in
    /// `1..=span`.
    pub paired_deletions: u64,
}

impl MoveSetSizes {
    fn eligible(&self, kind: MoveKind, allow_keep: bool) -> bool {
        match kind {
            MoveKind::PairedInsertion => self.paired_insertions > 0,
            MoveKind::PairedDeletion => self.paired_deletions > 0,
            MoveKind::SingleInsertion => allow_keep,
            MoveKind::SingleDeletion => allow_keep && self.no_change > 0,
            MoveKind::Permutation => self.len >= 2,
        }
    }

    /// Renormalized weight of `kind`; zero when not eligible.
    fn weight(&self, mix: &ProposalMix, kind: MoveKind, allow_keep: bool) -> f64 {
        if !self.eligible(kind, allow_keep) || mix.weight(kind) == 0.0 {
            return 0.0;
        }
        let total: f64 =
            MoveKind::ALL.iter().filter(|k| self.eligible(**k, allow_keep)).map(|k| mix.weight(*k)).sum();
        mix.weight(kind) / total
    }
}

/// Scans a path once, counting move sets with a dense last-position table.
struct Scanner {
    n: usize,
    dyads: Vec<(usize, usize)>,
    last: Vec<usize>,
    touched: Vec<usize>,
    permitted_count: u64,
}

const NONE: usize = usize::MAX;

impl Scanner {
    fn new(model: &Model) -> Self {
        let n = model.n();
        let dyads = model.permitted_dyads();
        let permitted_count = dyads.len() as u64;
        Scanner { n, dyads, last: vec![NONE; n * n], touched: Vec::new(), permitted_count }
    }

    /// Counts move sets; when `pairs` is given, also collects the eligible
    /// paired-deletion positions.
    fn scan(&mut self, steps: &[MicroStep], model: &Model, span: usize, mut pairs: Option<&mut Vec<(usize, usize)>>) -> MoveSetSizes {
        let r = steps.len();
        let mut sizes = MoveSetSizes { len: r, no_change: 0, paired_insertions: 0, paired_deletions: 0 };
        let mut occurring = 0u64;
        for (pos, s) in steps.iter().enumerate() {
            if s.is_no_change() {
                sizes.no_change += 1;
                continue;
            }
            let d = s.ego() * self.n + s.alter();
            let permitted = model.permits(s.ego(), s.alter());
            let prev = self.last[d];
            if prev == NONE {
                self.touched.push(d);
                if permitted {
                    occurring += 1;
                    sizes.paired_insertions += placements(pos, span);
                }
            } else {
                let gap = pos - prev - 1;
                if permitted {
                    sizes.paired_insertions += placements(gap, span);
                }
                if gap >= 1 && gap <= span {
                    sizes.paired_deletions += 1;
                    if let Some(p) = pairs.as_deref_mut() {
                        p.push((prev, pos));
                    }
                }
            }
            self.last[d] = pos;
        }
        for &d in &self.touched {
            let (i, j) = (d / self.n, d % self.n);
            if model.permits(i, j) {
                sizes.paired_insertions += placements(r - self.last[d] - 1, span);
            }
            self.last[d] = NONE;
        }
        self.touched.clear();
        sizes.paired_insertions += (self.permitted_count - occurring) * placements(r, span);
        sizes
    }
}

/// A proposed change `steps[at..at + remove] -> insert`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub kind: MoveKind,
    pub at: usize,
    pub remove: usize,
    pub insert: Vec<MicroStep>,
    /// `log[u(v | candidate) / u(candidate | v)]`.
    pub log_ratio: f64,
}

impl Proposal {
    pub fn apply_to(&self, steps: &[MicroStep]) -> Vec<MicroStep> {
        let mut out = Vec::with_capacity(steps.len() + self.insert.len() - self.remove.min(steps.len()));
        out.extend_from_slice(&steps[..self.at]);
        out.extend_from_slice(&self.insert);
        out.extend_from_slice(&steps[self.at + self.remove..]);
        out
    }
}

/// Uniform draw of `(start, length)` over `count` placements where length
/// runs over `lengths` and start over `0..=r - length`.
fn draw_placement<R: Rng + ?Sized>(r: usize, lengths: core::ops::RangeInclusive<usize>, rng: &mut R) -> (usize, usize) {
    let total: u64 = lengths.clone().map(|l| (r - l + 1) as u64).sum();
    let mut u = rng.random_range(0..total);
    for l in lengths {
        let c = (r - l + 1) as u64;
        if u < c {
            return (u as usize, l);
        }
        u -= c;
    }
    unreachable!("placement index out of range")
}

/// Draws a move for `steps` and computes its exact proposal ratio.
pub fn propose<R: Rng + ?Sized>(
    steps: &[MicroStep],
    model: &Model,
    mix: &ProposalMix,
    rng: &mut R,
) -> Result<Proposal> {
    let mut scanner = Scanner::new(model);
    propose_with(&mut scanner, steps, model, mix, rng)
}

fn propose_with<R: Rng + ?Sized>(
    scanner: &mut Scanner,
    steps: &[MicroStep],
    model: &Model,
    mix: &ProposalMix,
    rng: &mut R,
) -> Result<Proposal> {
    let n = model.n();
    let span = mix.max_permutation_span;
    let keep = model.policy.allow_keep;
    let mut pairs = Vec::new();
    let here = scanner.scan(steps, model, span, Some(&mut pairs));
    let w: Vec<f64> = MoveKind::ALL.iter().map(|k| here.weight(mix, *k, keep)).collect();
    if w.iter().all(|x| *x == 0.0) {
        return Err(Error::NoEligibleMove);
    }
    let kind = MoveKind::ALL[sample_index(&w, 1.0, rng)];
    let r = steps.len();

    let (at, remove, insert) = match kind {
        MoveKind::PairedInsertion => {
            let dyads = &scanner.dyads;
            loop {
                let (i, j) = dyads[rng.random_range(0..dyads.len())];
                let (s1, g) = draw_placement(r, 1..=span.min(r), rng);
                let seg = &steps[s1..s1 + g];
                if seg.iter().any(|s| s.ego() == i && s.alter() == j) {
                    continue;
                }
                let d = MicroStep::new(i, j);
                let mut ins = Vec::with_capacity(g + 2);
                ins.push(d);
                ins.extend_from_slice(seg);
                ins[1..].shuffle(rng);
                ins.push(d);
                break (s1, g, ins);
            }
        }
        MoveKind::PairedDeletion => {
            let (p, q) = pairs[rng.random_range(0..pairs.len())];
            let mut ins = steps[p + 1..q].to_vec();
            ins.shuffle(rng);
            (p, q - p + 1, ins)
        }
        MoveKind::SingleInsertion => {
            let s = rng.random_range(0..=r);
            let i = rng.random_range(0..n);
            (s, 0, vec![MicroStep::new(i, i)])
        }
        MoveKind::SingleDeletion => {
            let k = rng.random_range(0..here.no_change);
            let pos = steps.iter().enumerate().filter(|(_, s)| s.is_no_change()).nth(k).map(|(p, _)| p).expect("count");
            (pos, 1, Vec::new())
        }
        MoveKind::Permutation => {
            let (s, l) = draw_placement(r, 2..=span.min(r), rng);
            let mut ins = steps[s..s + l].to_vec();
            ins.shuffle(rng);
            (s, l, ins)
        }
    };
    let mut proposal = Proposal { kind, at, remove, insert, log_ratio: 0.0 };
    let candidate = proposal.apply_to(steps);
    let there = scanner.scan(&candidate, model, span, None);
    proposal.log_ratio = log_proposal_ratio(kind, &here, &there, mix, keep, n);
    Ok(proposal)
}

/// `log[u(v | v~) / u(v~ | v)]` for a move of `kind` from a path with move
/// sets `here` to one with `there`.
pub fn log_proposal_ratio(kind: MoveKind, here: &MoveSetSizes, there: &MoveSetSizes, mix: &ProposalMix, allow_keep: bool, n: usize) -> f64 {
    let wf = here.weight(mix, kind, allow_keep).ln();
    let ln = |x: u64| (x as f64).ln();
    match kind {
        MoveKind::PairedInsertion => {
            there.weight(mix, MoveKind::PairedDeletion, allow_keep).ln() - ln(there.paired_deletions) - wf
                + ln(here.paired_insertions)
        }
        MoveKind::PairedDeletion => {
            there.weight(mix, MoveKind::PairedInsertion, allow_keep).ln() - ln(there.paired_insertions) - wf
                + ln(here.paired_deletions)
        }
        MoveKind::SingleInsertion => {
            there.weight(mix, MoveKind::SingleDeletion, allow_keep).ln() - ln(there.no_change as u64) - wf
                + ln(((here.len + 1) * n) as u64)
        }
        MoveKind::SingleDeletion => {
            there.weight(mix, MoveKind::SingleInsertion, allow_keep).ln() - ln(((there.len + 1) * n) as u64) - wf
                + ln(here.no_change as u64)
        }
        MoveKind::Permutation => there.weight(mix, MoveKind::Permutation, allow_keep).ln() - wf,
    }
}

/// Move-set sizes of a path under `mix`, for diagnostics and audits.
pub fn move_set_sizes(steps: &[MicroStep], model: &Model, mix: &ProposalMix) -> MoveSetSizes {
    Scanner::new(model).scan(steps, model, mix.max_permutation_span, None)
}

/// Fixed inputs of one period's chain.
#[derive(Clone, Copy)]
pub struct ChainContext<'a> {
    pub model: &'a Model,
    pub params: &'a Parameters,
    pub start: &'a Digraph,
    pub end: &'a Digraph,
    pub duration: f64,
    pub mix: &'a ProposalMix,
    /// Full recomputation of the cached log-probability every this many steps
    /// (0 disables).
    pub revalidate_every: u64,
}

/// Tolerance for revalidating the cached log-probability.
pub const REVALIDATION_TOLERANCE: f64 = 1e-8;

/// Current path of a chain with cached per-step log-probability terms.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub path: SamplePath,
    pub counts: MoveCounts,
    pub rng: Stream,
    log_prob: f64,
    terms: Vec<f64>,
    /// Total rates of the states `x^(0..=R)`; empty for constant rates.
    totals: Vec<f64>,
    steps_taken: u64,
    max_drift: f64,
}

impl ChainState {
    /// Starts a chain at `path`. Paths violating the parity condition are
    /// rejected; paths with probability zero are accepted (they will be left
    /// at the first accepted move).
    pub fn new(path: SamplePath, ctx: &ChainContext<'_>, rng: Stream) -> Result<Self> {
        if !validate_parity(&path, ctx.start, ctx.end) {
            return Err(Error::InvalidData(alloc::format!("initial path for period {} violates parity", path.period + 1)));
        }
        let mut state = ChainState {
            path,
            counts: MoveCounts::default(),
            rng,
            log_prob: f64::NEG_INFINITY,
            terms: Vec::new(),
            totals: Vec::new(),
            steps_taken: 0,
            max_drift: 0.0,
        };
        state.refresh(ctx);
        Ok(state)
    }

    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// Largest difference seen between the cached and the recomputed
    /// log-probability at revalidation points.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Recomputes all cached terms, e.g. after the parameters changed.
    pub fn refresh(&mut self, ctx: &ChainContext<'_>) {
        let mut ev = StepEvaluator::new(ctx.model, ctx.params, self.path.period, ctx.duration);
        let constant = ctx.model.constant_rates();
        self.terms.clear();
        self.totals.clear();
        let mut replay = PathReplay::new(&self.path.steps, ctx.start);
        while let Some(step) = replay.peek() {
            if !constant {
                let t = ev.total_rate(replay.state());
                self.totals.push(t);
            }
            self.terms.push(ev.step_term(replay.state(), step));
            replay.advance();
        }
        if !constant {
            let t = ev.total_rate(replay.state());
            self.totals.push(t);
        }
        self.log_prob = self.sum(&ev, &self.terms, &self.totals);
    }

    fn sum(&self, ev: &StepEvaluator<'_>, terms: &[f64], totals: &[f64]) -> f64 {
        let s: f64 = terms.iter().sum();
        if s == f64::NEG_INFINITY {
            return s;
        }
        s + ev.log_kappa(terms.len(), totals)
    }
}

/// Region recomputation for a candidate; returns the candidate's terms,
/// totals and log-probability.
fn evaluate_candidate(
    state: &ChainState,
    prop: &Proposal,
    ev: &mut StepEvaluator<'_>,
    start: &Digraph,
) -> (Vec<f64>, Vec<f64>, f64) {
    let constant = ev.model.constant_rates();
    let mut replay = PathReplay::new(&state.path.steps, start);
    replay.seek(prop.at);
    let mut x = replay.into_state();
    let mut terms = Vec::with_capacity(state.terms.len() + prop.insert.len());
    terms.extend_from_slice(&state.terms[..prop.at]);
    let mut totals = Vec::new();
    if !constant {
        totals.extend_from_slice(&state.totals[..prop.at]);
    }
    for (k, &s) in prop.insert.iter().enumerate() {
        if !constant {
            let t = if k == 0 { state.totals[prop.at] } else { ev.total_rate(&x) };
            totals.push(t);
        }
        terms.push(ev.step_term(&x, s));
        if !s.is_no_change() {
            x.toggle(s.ego(), s.alter());
        }
    }
    terms.extend_from_slice(&state.terms[prop.at + prop.remove..]);
    if !constant {
        totals.extend_from_slice(&state.totals[prop.at + prop.remove..]);
    }
    let lp = state.sum(ev, &terms, &totals);
    (terms, totals, lp)
}

fn mh_step_with(state: &mut ChainState, ctx: &ChainContext<'_>, ev: &mut StepEvaluator<'_>, scanner: &mut Scanner) -> Result<bool> {
    let prop = propose_with(scanner, &state.path.steps, ctx.model, ctx.mix, &mut state.rng)?;
    state.counts.proposed[prop.kind as usize] += 1;
    state.steps_taken += 1;
    let (terms, totals, lp) = evaluate_candidate(state, &prop, ev, ctx.start);
    let accept = if lp == f64::NEG_INFINITY {
        false
    } else if state.log_prob == f64::NEG_INFINITY {
        true
    } else {
        let log_a = lp - state.log_prob + prop.log_ratio;
        log_a >= 0.0 || state.rng.random::<f64>() < log_a.exp()
    };
    if accept {
        state.path.steps = prop.apply_to(&state.path.steps);
        state.terms = terms;
        state.totals = totals;
        state.log_prob = lp;
        state.counts.accepted[prop.kind as usize] += 1;
    }
    if ctx.revalidate_every > 0 && state.steps_taken.is_multiple_of(ctx.revalidate_every) {
        revalidate(state, ctx);
    }
    Ok(accept)
}

fn revalidate(state: &mut ChainState, ctx: &ChainContext<'_>) {
    debug_assert!(validate_parity(&state.path, ctx.start, ctx.end), "chain left the parity-feasible set");
    let full = path_log_probability(&state.path, ctx.start, ctx.params, ctx.model, ctx.duration);
    let drift = if full == state.log_prob { 0.0 } else { (full - state.log_prob).abs() };
    if drift > state.max_drift {
        state.max_drift = drift;
    }
    debug_assert!(
        !(drift > REVALIDATION_TOLERANCE) || full == f64::NEG_INFINITY,
        "cached log-probability drifted by {drift}"
    );
    if drift > 0.0 {
        state.refresh(ctx);
    }
}

/// One Metropolis-Hastings step. Returns whether the candidate was accepted.
/// The cache must be current for `ctx.params` (see [`ChainState::refresh`]).
pub fn mh_step(state: &mut ChainState, ctx: &ChainContext<'_>) -> Result<bool> {
    let mut ev = StepEvaluator::new(ctx.model, ctx.params, state.path.period, ctx.duration);
    let mut scanner = Scanner::new(ctx.model);
    mh_step_with(state, ctx, &mut ev, &mut scanner)
}

/// Refreshes the cache for `ctx.params` and applies `steps` MH steps.
pub fn run_chain(state: &mut ChainState, ctx: &ChainContext<'_>, steps: u64) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidParameter("run_chain needs at least one step".into()));
    }
    state.refresh(ctx);
    let mut ev = StepEvaluator::new(ctx.model, ctx.params, state.path.period, ctx.duration);
    let mut scanner = Scanner::new(ctx.model);
    for _ in 0..steps {
        mh_step_with(state, ctx, &mut ev, &mut scanner)?;
    }
    Ok(())
}

/// Lag-1 autocorrelations per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    pub values: Vec<f64>,
    /// Coordinates whose series was constant (value reported as 0).
    pub degenerate: Vec<bool>,
}

impl Autocorrelation {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Standard lag-1 sample autocorrelation of each coordinate of `draws`.
pub fn score_autocorrelation(draws: &[Vec<f64>]) -> Result<Autocorrelation> {
    if draws.len() < 10 {
        return Err(Error::InvalidParameter(alloc::format!("need at least 10 draws, got {}", draws.len())));
    }
    let dim = draws[0].len();
    if let Some(d) = draws.iter().find(|d| d.len() != dim) {
        return Err(Error::LengthMismatch { expected: dim, found: d.len(), what: "score draw" });
    }
    let t = draws.len() as f64;
    let mut values = vec![0.0; dim];
    let mut degenerate = vec![false; dim];
    for k in 0..dim {
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / t;
        let var: f64 = draws.iter().map(|d| (d[k] - mean) * (d[k] - mean)).sum();
        if !(var > 1e-12 * (1.0 + mean * mean) * t) {
            degenerate[k] = true;
            continue;
        }
        let cov: f64 = draws.windows(2).map(|w| (w[0][k] - mean) * (w[1][k] - mean)).sum();
        values[k] = cov / var;
    }
    Ok(Autocorrelation { values, degenerate })
}
