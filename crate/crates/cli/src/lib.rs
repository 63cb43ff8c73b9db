//! File formats, configuration and command dispatch for the `saom` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod report;

use std::path::{Path, PathBuf};

use saom_core::estimation::{
    convergence_check_ml, convergence_check_mom, estimate_ml, estimate_mom, exact_log_likelihood, likelihood_ratio,
};
use saom_core::simulator::simulate_panel;
use saom_core::{Estimator, Parameters};
use serde_json::json;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    EstimateMom,
    EstimateMl,
    LrTest,
    ExactLoglik,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::EstimateMom => "estimate-mom",
            Command::EstimateMl => "estimate-ml",
            Command::LrTest => "lrtest",
            Command::ExactLoglik => "exact-loglik",
            Command::Diagnose => "diagnose",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub verbose: bool,
    /// Saved result for `diagnose`.
    pub result: Option<PathBuf>,
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub threads: usize,
    pub verbose: bool,
}

impl Context {
    pub fn new(mut config: RunConfig, o: &Overrides) -> CliResult<Self> {
        if let Some(seed) = o.seed {
            config.controls.seed = seed;
        }
        if let Some(r) = &o.result {
            config.output.result = Some(r.clone());
        }
        let out = o.out.clone().unwrap_or_else(|| config.output.dir.clone());
        std::fs::create_dir_all(&out).map_err(|source| CliError::Write { path: out.clone(), source })?;
        let verbose = o.verbose || config.output.verbose;
        Ok(Context { config, out, threads: o.threads.unwrap_or(1).max(1), verbose })
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("saom: {msg}");
        }
    }

    fn write(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        io::write_text(&path, text)?;
        self.log(&format!("wrote {}", path.display()));
        Ok(path)
    }

    fn write_json(&self, name: &str, doc: &serde_json::Value) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(doc).expect("serializable") + "\n";
        self.write(name, &text)
    }
}

/// Runs one command; the returned text is the human-readable report, which
/// is also written to `<command>.txt` in the output directory.
pub fn run(command: Command, ctx: &Context) -> CliResult<String> {
    if ctx.threads > 1 {
        ctx.log("--threads is accepted but computation is single-threaded");
    }
    let report = match command {
        Command::Simulate => simulate(ctx)?,
        Command::EstimateMom => estimate(ctx, Estimator::MethodOfMoments)?,
        Command::EstimateMl => estimate(ctx, Estimator::MaximumLikelihood)?,
        Command::LrTest => lrtest(ctx)?,
        Command::ExactLoglik => exact(ctx)?,
        Command::Diagnose => diagnose(ctx)?,
    };
    ctx.write(&format!("{}.txt", command.name()), &report.text)?;
    match report.failure {
        Some(CliError::NotConverged { max_ratio, threshold, .. }) => {
            Err(CliError::NotConverged { max_ratio, threshold, report: report.text })
        }
        Some(e) => Err(e),
        None => Ok(report.text),
    }
}

struct Report {
    text: String,
    /// Error to return after the report has been written.
    failure: Option<CliError>,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, failure: None }
    }
}

fn simulate(ctx: &Context) -> CliResult<Report> {
    let cfg = &ctx.config;
    let panel = cfg.load_panel()?;
    let model = cfg.build_model(&panel)?;
    let params = cfg.parameters()?;
    let seed = cfg.controls.seed;
    let mut text = format!("command: simulate\nseed: {seed}\nreplications: {}\n", cfg.simulate.replications);
    let mut files = Vec::new();
    for rep in 0..cfg.simulate.replications {
        ctx.log(&format!("replication {}", rep + 1));
        let sim = simulate_panel(&panel.waves()[0], &params, &model, panel.durations(), seed, rep as u64)?;
        for (m, w) in sim.waves().iter().enumerate() {
            let name = format!("sim_r{}_wave{}.txt", rep + 1, m + 1);
            ctx.write(&name, &io::format_wave(w))?;
            files.push(name);
        }
        let changes: Vec<usize> = (0..sim.periods()).map(|m| sim.changes(m)).collect();
        text += &format!("replication {}: tie changes per period {:?}\n", rep + 1, changes);
    }
    ctx.write_json(
        "simulate.json",
        &json!({ "command": "simulate", "seed": seed, "replications": cfg.simulate.replications, "files": files }),
    )?;
    Ok(Report::ok(text))
}

fn estimate(ctx: &Context, estimator: Estimator) -> CliResult<Report> {
    let cfg = &ctx.config;
    let panel = cfg.load_panel()?;
    let model = cfg.build_model(&panel)?;
    let controls = cfg.estimation_controls()?;
    ctx.log(&format!("{} on n = {}, {} waves, seed {}", estimator.name(), panel.n(), panel.wave_count(), controls.seed));
    let result = match estimator {
        Estimator::MethodOfMoments => estimate_mom(&panel, &model, &controls)?,
        Estimator::MaximumLikelihood => estimate_ml(&panel, &model, &controls)?,
    };
    let key = report::estimator_key(estimator);
    ctx.write_json(&format!("result_{key}.json"), &report::result_json(&result, &controls, ctx.threads))?;
    if cfg.output.acceptance_log && estimator == Estimator::MaximumLikelihood {
        ctx.write("acceptance_ml.csv", &report::acceptance_csv(&result))?;
    }
    let text = report::result_table(&result, &controls);
    let failure = (!result.converged).then(|| CliError::NotConverged {
        max_ratio: result.convergence.max_abs_ratio(),
        threshold: result.convergence.threshold,
        report: String::new(),
    });
    Ok(Report { text, failure })
}

fn lrtest(ctx: &Context) -> CliResult<Report> {
    let cfg = &ctx.config;
    let panel = cfg.load_panel()?;
    let model = cfg.build_model(&panel)?;
    let theta0 = cfg.parameters()?;
    let lr = cfg.lrtest.as_ref().ok_or_else(|| CliError::Config("lrtest needs an [lrtest] section".into()))?;
    let theta1 = lr.alternative.to_parameters();
    let res = likelihood_ratio(&panel, &model, &theta0, &theta1, lr.grid_points, lr.draws_per_point, &cfg.controls)?;
    let seed = cfg.controls.seed;
    ctx.write_json(
        "lrtest.json",
        &json!({
            "command": "lrtest",
            "seed": seed,
            "theta0": theta0.to_vec(),
            "theta1": theta1.to_vec(),
            "log_ratio": res.log_ratio,
            "statistic": 2.0 * res.log_ratio,
            "standard_error": res.standard_error,
            "grid_means": res.grid_means,
            "grid_points": lr.grid_points,
            "draws_per_point": lr.draws_per_point,
        }),
    )?;
    Ok(Report::ok(format!(
        "command: lrtest\nseed: {seed}\ngrid points: {}, draws per point: {}\n\
         log p(x; theta1) - log p(x; theta0) = {:.4} (Monte Carlo s.e. {:.4})\n2 log LR = {:.4}\n",
        lr.grid_points,
        lr.draws_per_point,
        res.log_ratio,
        res.standard_error,
        2.0 * res.log_ratio
    )))
}

fn exact(ctx: &Context) -> CliResult<Report> {
    let cfg = &ctx.config;
    let panel = cfg.load_panel()?;
    let model = cfg.build_model(&panel)?;
    let params = cfg.parameters()?;
    let ll = exact_log_likelihood(&panel, &model, &params)?;
    ctx.write_json("exact-loglik.json", &json!({ "command": "exact-loglik", "theta": params.to_vec(), "log_likelihood": ll }))?;
    Ok(Report::ok(format!("command: exact-loglik\nlog-likelihood: {ll:.10}\n")))
}

fn diagnose(ctx: &Context) -> CliResult<Report> {
    let cfg = &ctx.config;
    let path = cfg
        .output
        .result
        .as_deref()
        .ok_or_else(|| CliError::Config("diagnose needs a saved result ([output] result or --result)".into()))?;
    let doc = read_json(path)?;
    let (estimator, theta) = report::read_result(&doc)?;
    let panel = cfg.load_panel()?;
    let model = cfg.build_model(&panel)?;
    let params = Parameters::from_vec(&model.layout(panel.periods()), &theta)?;
    let check = match estimator {
        Estimator::MethodOfMoments => convergence_check_mom(&panel, &model, &params, &cfg.controls)?,
        Estimator::MaximumLikelihood => convergence_check_ml(&panel, &model, &params, &cfg.controls)?,
    };
    let names = model.parameter_names(panel.periods());
    ctx.write_json(
        "diagnose.json",
        &json!({
            "command": "diagnose",
            "estimator": report::estimator_key(estimator),
            "seed": cfg.controls.seed,
            "convergence_ratios": check.ratios,
            "passed": check.passed(),
        }),
    )?;
    let text = format!(
        "command: diagnose\nestimator: {}\nseed: {}\n\n{}",
        estimator.name(),
        cfg.controls.seed,
        report::convergence_table(&names, &check)
    );
    let failure =
        (!check.passed()).then(|| CliError::NotConverged {
            max_ratio: check.max_abs_ratio(),
            threshold: check.threshold,
            report: String::new(),
        });
    Ok(Report { text, failure })
}

fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
