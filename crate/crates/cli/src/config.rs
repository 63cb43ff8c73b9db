//! INI run configuration. Paths are resolved relative to the config file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use saom_core::estimation::StepsPolicy;
use saom_core::{
    EffectKind, EffectSet, EstimationControls, Estimator, Model, ObjectiveEffect, PanelData, Parameters,
    PermittedSetPolicy, ProposalMix, RateEffect, RateEffectKind,
};

use crate::error::{CliError, CliResult};
use crate::io::load_panel;

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub waves: Vec<PathBuf>,
    pub covariates: Vec<(String, PathBuf)>,
    pub structural_zeros: Option<PathBuf>,
    pub times: Option<Vec<f64>>,
}

/// Effect name with an optional covariate binding, e.g. `covariate_ego(gender)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectSpec {
    pub name: String,
    pub covariate: Option<String>,
}

impl EffectSpec {
    fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        match s.split_once('(') {
            Some((name, rest)) => {
                let cov = rest
                    .strip_suffix(')')
                    .ok_or_else(|| CliError::Config(format!("unbalanced parenthesis in effect {s:?}")))?;
                Ok(EffectSpec { name: name.trim().to_string(), covariate: Some(cov.trim().to_string()) })
            }
            None => Ok(EffectSpec { name: s.to_string(), covariate: None }),
        }
    }
}

impl std::fmt::Display for EffectSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.covariate {
            Some(c) => write!(f, "{}({c})", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub effects: Vec<EffectSpec>,
    pub rate_effects: Vec<EffectSpec>,
    pub beta_per_period: bool,
    pub allow_keep: bool,
}

/// Parameter values: rates per period, rate-effect coefficients, and one
/// objective vector (or one per period).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSection {
    pub rates: Vec<f64>,
    pub rate_coefs: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
}

impl ParameterSection {
    pub fn to_parameters(&self) -> Parameters {
        if self.beta.len() == 1 {
            Parameters::new(self.rates.clone(), self.rate_coefs.clone(), self.beta[0].clone())
        } else {
            Parameters::per_period(self.rates.clone(), self.rate_coefs.clone(), self.beta.clone())
        }
    }

    pub fn from_parameters(p: &Parameters, model: &Model) -> Self {
        let layout = p.layout();
        let v = p.to_vec();
        let periods = p.periods();
        let rates = (0..periods).map(|m| v[layout.rate(m)]).collect();
        let rate_coefs = (0..model.effects.rate.len()).map(|k| v[layout.rate_effect(k)]).collect();
        let beta = (0..layout.beta_blocks()).map(|b| p.beta_for(b).to_vec()).collect();
        ParameterSection { rates, rate_coefs, beta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSection {
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSection {
    pub alternative: ParameterSection,
    pub grid_points: usize,
    pub draws_per_point: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub verbose: bool,
    /// Saved result read by `diagnose`.
    pub result: Option<PathBuf>,
    /// Writes a per-period CSV of MH acceptance counts after ML estimation.
    pub acceptance_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelSection,
    pub estimator: Estimator,
    /// Start estimation from `[parameters]` instead of the default start.
    pub start_from_parameters: bool,
    pub controls: EstimationControls,
    pub parameters: Option<ParameterSection>,
    pub simulate: SimulateSection,
    pub lrtest: Option<LrSection>,
    pub output: OutputSection,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn list(s: &str, sep: char) -> impl Iterator<Item = &str> {
    s.split(sep).map(str::trim).filter(|t| !t.is_empty())
}

fn parse_value<T: FromStr>(section: &str, key: &str, s: &str) -> CliResult<T> {
    s.trim().parse().map_err(|_| config_error(format!("[{section}] {key}: cannot parse {s:?}")))
}

fn parse_floats(section: &str, key: &str, s: &str) -> CliResult<Vec<f64>> {
    list(s, ',').map(|t| parse_value(section, key, t)).collect()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Effects split on commas outside parentheses.
fn parse_effects(s: &str) -> CliResult<Vec<EffectSpec>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                if !s[start..i].trim().is_empty() {
                    out.push(EffectSpec::parse(&s[start..i])?);
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(EffectSpec::parse(&s[start..])?);
    }
    Ok(out)
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.props.and_then(|p| p.get(key))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            Some(s) => parse_value(self.name, key, s),
            None => Ok(default),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        if let Some(p) = self.props {
            if let Some((k, _)) = p.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(config_error(format!("[{}] unknown key {k:?}", self.name)));
            }
        }
        Ok(())
    }
}

const DATA_KEYS: &[&str] = &["waves", "covariates", "structural_zeros", "times"];
const MODEL_KEYS: &[&str] = &["effects", "rate_effects", "beta_per_period", "allow_keep"];
const ESTIMATION_KEYS: &[&str] = &[
    "estimator",
    "start",
    "seed",
    "gain_initial",
    "gain_exponent",
    "iterations",
    "tail_fraction",
    "pilot_draws",
    "burn_in_sweeps",
    "posthoc_draws",
    "check_runs",
    "max_runs",
    "divergence_bound",
    "max_step",
    "convergence_threshold",
    "mom_gain_initial",
    "mom_iterations",
    "derivative_runs",
    "derivative_epsilon",
    "revalidate_every",
    "min_steps",
    "steps_per_change",
    "autocorrelation_limit",
    "max_doublings",
    "move_weights",
    "max_permutation_span",
];
const PARAMETER_KEYS: &[&str] = &["rates", "rate_coefs", "beta"];
const LR_KEYS: &[&str] = &["rates", "rate_coefs", "beta", "grid_points", "draws_per_point"];

fn parse_parameters(sec: &Section) -> CliResult<ParameterSection> {
    let rates = parse_floats(sec.name, "rates", sec.get("rates").unwrap_or(""))?;
    if rates.is_empty() {
        return Err(config_error(format!("[{}] rates is required", sec.name)));
    }
    let rate_coefs = parse_floats(sec.name, "rate_coefs", sec.get("rate_coefs").unwrap_or(""))?;
    let beta = list(sec.get("beta").unwrap_or(""), ';')
        .map(|b| parse_floats(sec.name, "beta", b))
        .collect::<CliResult<Vec<_>>>()?;
    let beta = if beta.is_empty() { vec![Vec::new()] } else { beta };
    Ok(ParameterSection { rates, rate_coefs, beta })
}

fn parameter_lines(p: &ParameterSection) -> Vec<(&'static str, String)> {
    vec![
        ("rates", join_floats(&p.rates)),
        ("rate_coefs", join_floats(&p.rate_coefs)),
        ("beta", p.beta.iter().map(|b| join_floats(b)).collect::<Vec<_>>().join("; ")),
    ]
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| config_error(e.to_string()))?;
        for (name, _) in ini.iter() {
            match name {
                None | Some("data" | "model" | "estimation" | "parameters" | "simulate" | "lrtest" | "output") => {}
                Some(other) => return Err(config_error(format!("unknown section [{other}]"))),
            }
        }
        let sec = |name: &'static str| Section { name, props: ini.section(Some(name)) };
        let resolve = |p: &str| base.join(p.trim());

        let data = sec("data");
        data.check_keys(DATA_KEYS)?;
        let waves: Vec<PathBuf> = list(data.get("waves").unwrap_or(""), ',').map(resolve).collect();
        if waves.len() < 2 {
            return Err(config_error("[data] waves needs at least two files"));
        }
        let covariates = list(data.get("covariates").unwrap_or(""), ',')
            .map(|item| {
                let (name, p) = item
                    .split_once('=')
                    .ok_or_else(|| config_error(format!("[data] covariates: expected name=path, got {item:?}")))?;
                Ok((name.trim().to_string(), resolve(p)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let structural_zeros = data.get("structural_zeros").filter(|s| !s.trim().is_empty()).map(resolve);
        let times = data.get("times").map(|t| parse_floats("data", "times", t)).transpose()?;

        let model = sec("model");
        model.check_keys(MODEL_KEYS)?;
        let effects = parse_effects(model.get("effects").unwrap_or(""))?;
        if effects.is_empty() {
            return Err(config_error("[model] effects must list at least one effect"));
        }
        let model = ModelSection {
            effects,
            rate_effects: parse_effects(model.get("rate_effects").unwrap_or(""))?,
            beta_per_period: model.or("beta_per_period", false)?,
            allow_keep: model.or("allow_keep", true)?,
        };

        let est = sec("estimation");
        est.check_keys(ESTIMATION_KEYS)?;
        let estimator = match est.get("estimator").map(str::trim).unwrap_or("ml") {
            "ml" => Estimator::MaximumLikelihood,
            "mom" => Estimator::MethodOfMoments,
            other => return Err(config_error(format!("[estimation] estimator must be ml or mom, got {other:?}"))),
        };
        let start_from_parameters = match est.get("start").map(str::trim).unwrap_or("default") {
            "default" => false,
            "parameters" => true,
            other => {
                return Err(config_error(format!("[estimation] start must be default or parameters, got {other:?}")))
            }
        };
        let d = EstimationControls::default();
        let mix = match est.get("move_weights") {
            Some(w) => {
                let w = parse_floats("estimation", "move_weights", w)?;
                let w: [f64; 5] = w
                    .try_into()
                    .map_err(|_| config_error("[estimation] move_weights needs five values (PI, PD, SI, SD, PERM)"))?;
                ProposalMix::new(w, est.or("max_permutation_span", d.mix.max_permutation_span())?)?
            }
            None => ProposalMix::new(d.mix.weights(), est.or("max_permutation_span", d.mix.max_permutation_span())?)?,
        };
        let steps = StepsPolicy {
            min_steps: est.or("min_steps", d.steps.min_steps)?,
            steps_per_change: est.or("steps_per_change", d.steps.steps_per_change)?,
            autocorrelation_limit: est.or("autocorrelation_limit", d.steps.autocorrelation_limit)?,
            max_doublings: est.or("max_doublings", d.steps.max_doublings)?,
        };
        let controls = EstimationControls {
            gain_initial: est.or("gain_initial", d.gain_initial)?,
            gain_exponent: est.or("gain_exponent", d.gain_exponent)?,
            iterations: est.or("iterations", d.iterations)?,
            tail_fraction: est.or("tail_fraction", d.tail_fraction)?,
            mix,
            steps,
            seed: est.or("seed", d.seed)?,
            derivative: None,
            initial: None,
            pilot_draws: est.or("pilot_draws", d.pilot_draws)?,
            burn_in_sweeps: est.or("burn_in_sweeps", d.burn_in_sweeps)?,
            posthoc_draws: est.or("posthoc_draws", d.posthoc_draws)?,
            check_runs: est.or("check_runs", d.check_runs)?,
            max_runs: est.or("max_runs", d.max_runs)?,
            divergence_bound: est.or("divergence_bound", d.divergence_bound)?,
            max_step: est.or("max_step", d.max_step)?,
            convergence_threshold: est.or("convergence_threshold", d.convergence_threshold)?,
            mom_gain_initial: est.or("mom_gain_initial", d.mom_gain_initial)?,
            mom_iterations: est.or("mom_iterations", d.mom_iterations)?,
            derivative_runs: est.or("derivative_runs", d.derivative_runs)?,
            derivative_epsilon: est.or("derivative_epsilon", d.derivative_epsilon)?,
            revalidate_every: est.or("revalidate_every", d.revalidate_every)?,
        };
        controls.validate()?;

        let params = sec("parameters");
        params.check_keys(PARAMETER_KEYS)?;
        let parameters = params.props.map(|_| parse_parameters(&params)).transpose()?;

        let sim = sec("simulate");
        sim.check_keys(&["replications"])?;
        let simulate = SimulateSection { replications: sim.or("replications", 1)? };
        if simulate.replications == 0 {
            return Err(config_error("[simulate] replications must be positive"));
        }

        let lr = sec("lrtest");
        lr.check_keys(LR_KEYS)?;
        let lrtest = match lr.props {
            Some(_) => Some(LrSection {
                alternative: parse_parameters(&lr)?,
                grid_points: lr.or("grid_points", 10)?,
                draws_per_point: lr.or("draws_per_point", 200)?,
            }),
            None => None,
        };

        let out = sec("output");
        out.check_keys(&["dir", "verbose", "result", "acceptance_log"])?;
        let output = OutputSection {
            dir: resolve(out.get("dir").unwrap_or(".")),
            verbose: out.or("verbose", false)?,
            result: out.get("result").filter(|s| !s.trim().is_empty()).map(resolve),
            acceptance_log: out.or("acceptance_log", false)?,
        };

        Ok(RunConfig {
            data: DataSection { waves, covariates, structural_zeros, times },
            model,
            estimator,
            start_from_parameters,
            controls,
            parameters,
            simulate,
            lrtest,
            output,
        })
    }

    /// Serializes to INI text. Paths are written as stored, so reparsing with
    /// an empty base directory reproduces the configuration.
    pub fn to_ini_string(&self) -> String {
        let mut ini = Ini::new();
        let path = |p: &Path| p.display().to_string();
        ini.with_section(Some("data"))
            .set("waves", self.data.waves.iter().map(|p| path(p)).collect::<Vec<_>>().join(", "))
            .set(
                "covariates",
                self.data.covariates.iter().map(|(n, p)| format!("{n}={}", path(p))).collect::<Vec<_>>().join(", "),
            );
        if let Some(m) = &self.data.structural_zeros {
            ini.with_section(Some("data")).set("structural_zeros", path(m));
        }
        if let Some(t) = &self.data.times {
            ini.with_section(Some("data")).set("times", join_floats(t));
        }
        let effects = |v: &[EffectSpec]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        ini.with_section(Some("model"))
            .set("effects", effects(&self.model.effects))
            .set("rate_effects", effects(&self.model.rate_effects))
            .set("beta_per_period", self.model.beta_per_period.to_string())
            .set("allow_keep", self.model.allow_keep.to_string());
        let c = &self.controls;
        let estimator = match self.estimator {
            Estimator::MaximumLikelihood => "ml",
            Estimator::MethodOfMoments => "mom",
        };
        ini.with_section(Some("estimation"))
            .set("estimator", estimator)
            .set("start", if self.start_from_parameters { "parameters" } else { "default" })
            .set("seed", c.seed.to_string())
            .set("gain_initial", format!("{:?}", c.gain_initial))
            .set("gain_exponent", format!("{:?}", c.gain_exponent))
            .set("iterations", c.iterations.to_string())
            .set("tail_fraction", format!("{:?}", c.tail_fraction))
            .set("pilot_draws", c.pilot_draws.to_string())
            .set("burn_in_sweeps", c.burn_in_sweeps.to_string())
            .set("posthoc_draws", c.posthoc_draws.to_string())
            .set("check_runs", c.check_runs.to_string())
            .set("max_runs", c.max_runs.to_string())
            .set("divergence_bound", format!("{:?}", c.divergence_bound))
            .set("max_step", format!("{:?}", c.max_step))
            .set("convergence_threshold", format!("{:?}", c.convergence_threshold))
            .set("mom_gain_initial", format!("{:?}", c.mom_gain_initial))
            .set("mom_iterations", c.mom_iterations.to_string())
            .set("derivative_runs", c.derivative_runs.to_string())
            .set("derivative_epsilon", format!("{:?}", c.derivative_epsilon))
            .set("revalidate_every", c.revalidate_every.to_string())
            .set("min_steps", c.steps.min_steps.to_string())
            .set("steps_per_change", c.steps.steps_per_change.to_string())
            .set("autocorrelation_limit", format!("{:?}", c.steps.autocorrelation_limit))
            .set("max_doublings", c.steps.max_doublings.to_string())
            .set("move_weights", join_floats(&c.mix.weights()))
            .set("max_permutation_span", c.mix.max_permutation_span().to_string());
        if let Some(p) = &self.parameters {
            for (k, v) in parameter_lines(p) {
                ini.with_section(Some("parameters")).set(k, v);
            }
        }
        ini.with_section(Some("simulate")).set("replications", self.simulate.replications.to_string());
        if let Some(lr) = &self.lrtest {
            for (k, v) in parameter_lines(&lr.alternative) {
                ini.with_section(Some("lrtest")).set(k, v);
            }
            ini.with_section(Some("lrtest"))
                .set("grid_points", lr.grid_points.to_string())
                .set("draws_per_point", lr.draws_per_point.to_string());
        }
        ini.with_section(Some("output"))
            .set("dir", path(&self.output.dir))
            .set("verbose", self.output.verbose.to_string())
            .set("acceptance_log", self.output.acceptance_log.to_string());
        if let Some(r) = &self.output.result {
            ini.with_section(Some("output")).set("result", path(r));
        }
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }

    pub fn load_panel(&self) -> CliResult<PanelData> {
        load_panel(&self.data.waves, &self.data.covariates, self.data.structural_zeros.as_deref(), self.data.times.as_deref())
    }

    /// Builds the model for `panel`, resolving covariate names.
    pub fn build_model(&self, panel: &PanelData) -> CliResult<Model> {
        let cov_index = |spec: &EffectSpec| -> CliResult<Option<usize>> {
            match &spec.covariate {
                Some(name) => panel
                    .covariate_index(name)
                    .map(Some)
                    .ok_or_else(|| saom_core::Error::MissingCovariate(name.clone()).into()),
                None => Ok(None),
            }
        };
        let mut objective = Vec::new();
        for spec in &self.model.effects {
            let kind = EffectKind::from_name(&spec.name)?;
            objective.push(ObjectiveEffect { kind, covariate: cov_index(spec)? });
        }
        let mut rate = Vec::new();
        for spec in &self.model.rate_effects {
            let kind = RateEffectKind::from_name(&spec.name)?;
            rate.push(RateEffect { kind, covariate: cov_index(spec)? });
        }
        let policy = PermittedSetPolicy { allow_keep: self.model.allow_keep, structural_zeros: panel.structural_zeros.clone() };
        Ok(Model::new(panel.n(), EffectSet::new(objective, rate), panel.covariates.clone(), policy, self.model.beta_per_period)?)
    }

    pub fn parameters(&self) -> CliResult<Parameters> {
        self.parameters
            .as_ref()
            .map(ParameterSection::to_parameters)
            .ok_or_else(|| config_error("this command needs a [parameters] section"))
    }

    /// Controls for estimation, with the `[parameters]` start applied when
    /// requested.
    pub fn estimation_controls(&self) -> CliResult<EstimationControls> {
        let mut c = self.controls.clone();
        if self.start_from_parameters {
            c.initial = Some(self.parameters()?);
        }
        Ok(c)
    }
}
