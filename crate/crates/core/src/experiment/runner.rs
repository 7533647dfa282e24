//! Resolving configs into runs, writing traces and summaries, probes and
//! batches.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ProbeSpec, ProblemSource};
use crate::diagnostics::bounds::{
    erosion_inequality_probe, subgradient_bound_probe, ErosionTarget,
};
use crate::diagnostics::{
    basic_inequality_check, operator_regularity_estimate, oracle_estimate, qf2_epsilons, qf_verdict,
    regularity_probe, summability_monitor, BasicInequalityReport, OracleConfig, QfKind, QfVerdict,
    RegularityProbe, SummabilityReport,
};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::operators::Cutter;
use crate::sampling::RNG_ALGORITHM;
use crate::schedules::{Classification, OverrelaxSchedule};
use crate::solver::{self, Finding, Problem, SolverConfig, Status, Trace};

/// Slack of the projected-step decrease check.
pub const BASIC_INEQUALITY_SLACK: f64 = 1e-9;

/// A config resolved into a concrete problem and solver configuration.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub name: String,
    pub problem: Problem,
    pub solver: SolverConfig,
    /// Reference point for Fejér-type verdicts.
    pub reference: Option<Point>,
    pub config: ExperimentConfig,
}

/// Builds the problem (running the generator if needed) and checks the
/// preconditions of the chosen mode.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let s = &config.solver;
    let (problem, generated_ref, generated_x0) = match &config.problem {
        ProblemSource::Inline(p) => (p.clone(), None, None),
        ProblemSource::Generator(g) => {
            let seed = config.seed.ok_or_else(|| Error::Validation(vec!["seed is required".into()]))?;
            let out = g.generate(seed)?;
            (out.problem, Some(out.reference), Some(out.x0))
        }
    };
    let x0 = s
        .x0
        .clone()
        .or(generated_x0)
        .ok_or_else(|| Error::Validation(vec!["solver.x0 is required".into()]))?;
    let mut solver = SolverConfig::new(
        s.schedule.clone(),
        s.control.build(problem.m())?,
        s.plan()?,
        x0,
        s.max_iterations,
        s.mode,
    );
    solver.convergence_tol = s.convergence_tol;
    solver.fix_tol = s.fix_tol();
    solver.feasibility_oracle = s.oracle;
    solver.oracle_stride = s.oracle_stride;
    solver.record_iterates = config.output.record_iterates;
    solver::validate(&problem, &solver)?;
    let reference = config
        .diagnostics
        .reference
        .clone()
        .or(generated_ref)
        .or_else(|| problem.interior_ball().map(|b| b.center.clone()));
    Ok(Prepared {
        name: config.name.clone().unwrap_or_else(|| "experiment".into()),
        problem,
        solver,
        reference,
        config: config.clone(),
    })
}

const CSV_HEADER: &str = "k,r_k,alpha_k,active_indices,max_beta,max_displacement,step_norm,\
max_constraint_distance,in_C,in_Q,oracle_distance";

/// Doubles with 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one header line and one line per trace row. Step columns are empty
/// on the final row; indices are one-based.
pub fn write_trace_csv<W: Write>(trace: &Trace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in &trace.rows {
        let step = match &row.step {
            Some(s) => {
                let active: Vec<String> = s.active.iter().map(|i| (i + 1).to_string()).collect();
                format!(
                    "{},{},{},{},{},{}",
                    num(s.r),
                    num(s.alpha),
                    active.join(";"),
                    num(s.max_beta()),
                    num(s.max_displacement()),
                    num(s.step_norm)
                )
            }
            None => ",,,,,".to_string(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.k,
            step,
            num(row.max_constraint_distance),
            row.in_c,
            row.in_q,
            row.oracle_distance.map(num).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct QfEntry {
    pub kind: QfKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<QfVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub status: &'static str,
    pub k_star: Option<usize>,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_oracle_distance: Option<f64>,
    pub in_c: bool,
    pub in_q: bool,
    pub mode: &'static str,
    pub seed: Option<u64>,
    pub rng: &'static str,
    pub schedule: OverrelaxSchedule,
    pub classification: Option<Classification>,
    pub intermittency: Option<usize>,
    pub delta_hat: Option<f64>,
    pub findings: Vec<Finding>,
    pub qf: Vec<QfEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability: Option<SummabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basic_inequality: Option<BasicInequalityReport>,
    pub x_final: Option<Point>,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::FiniteConvergence(_) | Status::TolReached(_) => 0,
        Status::BudgetExhausted => 2,
    }
}

fn run_diagnostics(p: &Prepared, trace: &Trace) -> (Vec<QfEntry>, Option<SummabilityReport>, Option<BasicInequalityReport>) {
    let d = &p.config.diagnostics;
    let delta = trace.delta_hat.unwrap_or(1.0);
    let qf1_eps = trace.qf1_epsilons();
    let mut qf = Vec::new();
    for &kind in &d.qf {
        let res = p
            .reference
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("no reference point".into()))
            .and_then(|z| {
                let eps = match kind {
                    QfKind::Fm => Vec::new(),
                    QfKind::Qf1 => qf1_eps.clone(),
                    QfKind::Qf2 => qf2_epsilons(&trace.iterates()?, z, &qf1_eps),
                };
                qf_verdict(&p.problem, trace, z, kind, &eps)
            });
        qf.push(match res {
            Ok(v) => QfEntry { kind, verdict: Some(v), error: None },
            Err(e) => QfEntry { kind, verdict: None, error: Some(e.to_string()) },
        });
    }
    let summability = if d.summability {
        p.reference.as_ref().and_then(|z| {
            let bounds: Vec<f64> =
                trace.rows.iter().filter_map(|r| r.step.as_ref()).map(|s| s.r / delta).collect();
            summability_monitor(trace, z, &bounds).ok()
        })
    } else {
        None
    };
    let basic = if d.basic_inequality {
        p.problem.interior_ball().and_then(|b| {
            basic_inequality_check(trace, &b.center, b.radius, delta, BASIC_INEQUALITY_SLACK).ok()
        })
    } else {
        None
    };
    (qf, summability, basic)
}

pub fn summarize(p: &Prepared, trace: &Trace) -> Summary {
    let last = trace.last();
    let (qf, summability, basic_inequality) = run_diagnostics(p, trace);
    Summary {
        name: p.name.clone(),
        status: trace.status.name(),
        k_star: trace.status.k(),
        iterations: trace.iterations(),
        final_residual: last.max_constraint_distance,
        final_oracle_distance: last.oracle_distance,
        in_c: last.in_c,
        in_q: last.in_q,
        mode: p.solver.mode.name(),
        seed: p.config.seed,
        rng: RNG_ALGORITHM,
        schedule: p.solver.schedule.clone(),
        classification: p.solver.schedule.classify().ok(),
        intermittency: p.solver.control.minimal_intermittency(p.solver.control.period()),
        delta_hat: trace.delta_hat,
        findings: trace.findings.clone(),
        qf,
        summability,
        basic_inequality,
        x_final: last.x.clone(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Outcome of one experiment.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub trace: Trace,
    pub summary: Summary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.trace.status)
    }
}

/// Prepares, runs and writes one experiment into `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let p = prepare(config)?;
    let trace = solver::run(&p.problem, &p.solver)?;
    let summary = summarize(&p, &trace);
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let trace_path = dir.join(&config.output.trace);
    let file = fs::File::create(&trace_path).map_err(|e| io_err(&trace_path, e))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(&trace, &mut w).map_err(|e| io_err(&trace_path, e))?;
    w.flush().map_err(|e| io_err(&trace_path, e))?;
    let summary_path = dir.join(&config.output.summary);
    write_json(&summary_path, &summary)?;
    Ok(Outcome { trace, summary, trace_path, summary_path })
}

/// Runs a batch with at most `jobs` experiments at a time. Results come back
/// in input order.
pub fn run_batch(configs: &[ExperimentConfig], jobs: usize) -> Vec<Result<Outcome>> {
    let jobs = jobs.max(1).min(configs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Outcome>>>> =
        Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let r = run_experiment(&configs[i]);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every experiment ran"))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeEntry {
    pub name: String,
    /// `None` for reports that carry no verdict.
    pub pass: Option<bool>,
    pub report: Value,
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

/// Runs the diagnostics of a config without solving.
///
/// Problem-level probes (operator constants, and the regularity and Slater
/// bounds when an interior ball is known) come first, followed by the
/// standalone probes listed in the config.
pub fn run_probes(config: &ExperimentConfig) -> Result<Vec<ProbeEntry>> {
    let p = prepare_for_probe(config)?;
    let seed = config.seed.unwrap_or(0);
    let oracle = OracleConfig::default();
    let mut out = Vec::new();

    let (center, radius) = match (&p.1, p.0.interior_ball()) {
        (Some(x0), Some(b)) => (b.center.clone(), x0.distance(&b.center).max(1.0)),
        (Some(x0), None) => (x0.clone(), 1.0),
        (None, Some(b)) => (b.center.clone(), 1.0),
        (None, None) => (Point::zeros(p.0.dim()), 1.0),
    };
    for (i, c) in p.0.constraints().iter().enumerate() {
        let est = operator_regularity_estimate(&c.cutter, &center, radius, 200, seed, &oracle)?;
        out.push(ProbeEntry {
            name: format!("operator_regularity[{}]", i + 1),
            pass: None,
            report: json!({ "delta_hat": est, "sample_center": center, "sample_radius": radius }),
        });
    }
    if let Some(ball) = p.0.interior_ball() {
        let rep = regularity_probe(&RegularityProbe {
            family: p.0.fixed_point_sets(),
            j0: None,
            interior_center: &ball.center,
            interior_radius: ball.radius,
            sample_center: &center,
            sample_radius: radius,
            samples: 100,
            subfamilies: 4,
            seed,
            oracle,
        })?;
        out.push(ProbeEntry { name: "regularity".into(), pass: Some(rep.pass), report: to_value(&rep) });
        let fs: Vec<_> = p
            .0
            .constraints()
            .iter()
            .filter_map(|c| match &c.cutter {
                Cutter::SubgradientProjection { f } => Some(f.clone()),
                Cutter::MetricProjection { .. } => None,
            })
            .collect();
        if !fs.is_empty() {
            let rep = subgradient_bound_probe(&fs, &ball.center, radius, 1000, seed, &[])?;
            out.push(ProbeEntry {
                name: "subgradient_bound".into(),
                pass: Some(rep.verdict.pass),
                report: to_value(&rep),
            });
        }
    }
    for (i, spec) in config.diagnostics.probes.iter().enumerate() {
        out.push(run_probe_spec(i, spec, seed)?);
    }
    Ok(out)
}

/// Like `prepare` but without the mode gate: probes make sense for any
/// problem.
fn prepare_for_probe(config: &ExperimentConfig) -> Result<(Problem, Option<Point>)> {
    config.validate()?;
    match &config.problem {
        ProblemSource::Inline(p) => Ok((p.clone(), config.solver.x0.clone())),
        ProblemSource::Generator(g) => {
            let out = g.generate(config.seed.unwrap_or(0))?;
            Ok((out.problem, Some(config.solver.x0.clone().unwrap_or(out.x0))))
        }
    }
}

fn run_probe_spec(i: usize, spec: &ProbeSpec, seed: u64) -> Result<ProbeEntry> {
    let name = |k: &str| format!("probes[{i}].{k}");
    Ok(match spec {
        ProbeSpec::Erosion { target, f, witness, sampling, center, radius, samples } => {
            let t = match (target, f, witness) {
                (Some(s), None, None) => ErosionTarget::Set(s.clone()),
                (None, Some(f), Some(w)) => ErosionTarget::Function { f: f.clone(), witness: w.clone() },
                _ => return Err(Error::Validation(vec![name("erosion: bad target")])),
            };
            let oracle = OracleConfig::default().with_tolerance(1e-13);
            let v = erosion_inequality_probe(&t, *sampling, center, *radius, *samples, seed, &oracle)?;
            ProbeEntry { name: name("erosion"), pass: Some(v.pass), report: to_value(&v) }
        }
        ProbeSpec::SubgradientBound { functions, z, r, samples, extra_points } => {
            let rep = subgradient_bound_probe(functions, z, *r, *samples, seed, extra_points)?;
            ProbeEntry { name: name("subgradient_bound"), pass: Some(rep.verdict.pass), report: to_value(&rep) }
        }
        ProbeSpec::Regularity { family, j0, interior, sample_center, sample_radius, samples, subfamilies } => {
            let rep = regularity_probe(&RegularityProbe {
                family,
                j0: j0.map(|j| j.saturating_sub(1)),
                interior_center: &interior.center,
                interior_radius: interior.radius,
                sample_center,
                sample_radius: *sample_radius,
                samples: *samples,
                subfamilies: *subfamilies,
                seed,
                oracle: OracleConfig::default(),
            })?;
            ProbeEntry { name: name("regularity"), pass: Some(rep.pass), report: to_value(&rep) }
        }
        ProbeSpec::OracleDistance { sets, x, oracle } => {
            let est = oracle_estimate(sets, x, &oracle.unwrap_or_default())?;
            ProbeEntry {
                name: name("oracle_distance"),
                pass: Some(est.converged),
                report: json!({ "distance": est.distance, "sweeps": est.sweeps, "converged": est.converged }),
            }
        }
    })
}

/// Writes `entries` to `dir/probe.json`.
pub fn write_probe_report(dir: &Path, entries: &[ProbeEntry]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join("probe.json");
    write_json(&path, &json!({ "rng": RNG_ALGORITHM, "probes": entries }))?;
    Ok(path)
}

/// The inline form of a generated problem, suitable for re-parsing.
pub fn inline_config(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    let p = prepare_for_probe(config)?;
    let mut out = config.clone();
    let reference = match &config.problem {
        ProblemSource::Generator(g) => Some(g.generate(config.seed.unwrap_or(0))?.reference),
        ProblemSource::Inline(_) => None,
    };
    out.problem = ProblemSource::Inline(p.0);
    out.solver.x0 = p.1;
    if out.diagnostics.reference.is_none() {
        out.diagnostics.reference = reference;
    }
    Ok(out)
}
