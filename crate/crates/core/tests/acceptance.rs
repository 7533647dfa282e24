//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use feasikit::diagnostics::{
    basic_inequality_check, erosion_inequality_probe, qf_verdict, random_affine_family, regularity_probe,
    subgradient_bound_probe, summability_monitor, EpsilonSampling, ErosionTarget, OracleConfig, QfKind,
    RegularityProbe,
};
use feasikit::experiment::{parse_config_str, run_experiment, ConfigFile, GeneratorSpec, QSpec};
use feasikit::geometry::{AffinePiece, ConvexFunction, ConvexSet, Point};
use feasikit::pt;
use feasikit::schedules::{ControlSequence, OverrelaxSchedule};
use feasikit::solver::{self, Mode, Status};
use feasikit::Error;

const FINITE_BUDGET: usize = 100_000;
const FINITE_WALL: Duration = Duration::from_secs(2);
const AFFINE_TOL: f64 = 1e-8;
const AFFINE_BUDGET: usize = 10_000;
const ORACLE_TOL: f64 = 1e-6;
const FEJER_SLACK: f64 = 1e-10;
const BASIC_SLACK: f64 = 1e-9;
const EROSION_SAMPLES: usize = 1000;
const EROSION_WALL: Duration = Duration::from_secs(5);
const REGULARITY_FAMILIES: u64 = 50;
const SUBGRADIENT_FAMILIES: u64 = 20;
const TIGHT_REL: f64 = 0.05;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn failure(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

fn finite_convergence() -> Res<Outcome> {
    let mut worst_k = 0;
    let mut worst_wall = Duration::ZERO;
    let mut bad = Vec::new();
    for seed in HALFSPACE_SEEDS {
        let g = halfspace_instance(seed);
        let cfg = cyclic_config(&g, inverse_square(), Mode::CertifiedFinite, FINITE_BUDGET);
        let start = Instant::now();
        let trace = solver::run(&g.problem, &cfg)?;
        let wall = start.elapsed();
        worst_wall = worst_wall.max(wall);
        match trace.status {
            Status::FiniteConvergence(k) if k <= FINITE_BUDGET && wall < FINITE_WALL => worst_k = worst_k.max(k),
            s => bad.push(format!("seed {seed}: {} in {wall:?}", s.name())),
        }
    }
    Ok(outcome(
        bad.is_empty(),
        format!("20 seeds, max k* = {worst_k}, max wall {worst_wall:.2?}; failures {bad:?}"),
    ))
}

fn affine_convergence_and_qf1() -> Res<(Outcome, Outcome)> {
    let mut conv_bad = Vec::new();
    let mut qf_bad = Vec::new();
    let mut worst_oracle: f64 = 0.0;
    let mut worst_k = 0;
    let mut worst_ratio: f64 = 0.0;
    for seed in HALFSPACE_SEEDS {
        let g = affine_instance(seed);
        let mut cfg = affine_config(&g);
        cfg.max_iterations = AFFINE_BUDGET;
        let trace = solver::run(&g.problem, &cfg)?;
        let last = trace.last();
        let oracle = last.oracle_distance.unwrap_or(f64::INFINITY);
        worst_oracle = worst_oracle.max(oracle);
        match trace.status {
            Status::TolReached(k) if last.max_constraint_distance <= AFFINE_TOL && oracle <= ORACLE_TOL => {
                worst_k = worst_k.max(k)
            }
            s => conv_bad.push(format!("seed {seed}: {} oracle {oracle:.2e}", s.name())),
        }

        // QF1 on the converged run, then on the full horizon without a tolerance
        let mut horizon_cfg = cfg.clone();
        horizon_cfg.convergence_tol = None;
        horizon_cfg.feasibility_oracle = None;
        let horizon = solver::run(&g.problem, &horizon_cfg)?;
        for (label, t) in [("converged", &trace), ("horizon", &horizon)] {
            let eps = t.qf1_epsilons();
            let v = qf_verdict(&g.problem, t, &g.reference, QfKind::Qf1, &eps)?;
            let delta = t.delta_hat.unwrap_or(1.0);
            let bounds: Vec<f64> = t.rows.iter().filter_map(|r| r.step.as_ref()).map(|s| s.r / delta).collect();
            let s = summability_monitor(t, &g.reference, &bounds)?;
            worst_ratio = worst_ratio.max(s.step_sum / s.step_bound);
            if !(v.pass && s.nondecreasing && s.bounded) {
                qf_bad.push(format!("seed {seed} {label}: qf1 {} summability {}/{}", v.pass, s.nondecreasing, s.bounded));
            }
        }
    }
    Ok((
        outcome(
            conv_bad.is_empty(),
            format!("20 seeds, max k = {worst_k}, max oracle distance {worst_oracle:.2e}; failures {conv_bad:?}"),
        ),
        outcome(
            qf_bad.is_empty(),
            format!("40 traces, max step-sum / bound {worst_ratio:.3e}; failures {qf_bad:?}"),
        ),
    ))
}

fn zero_schedule_fejer() -> Res<Outcome> {
    let mut bad = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for seed in HALFSPACE_SEEDS {
        let g = halfspace_instance(seed);
        let cfg = cyclic_config(&g, OverrelaxSchedule::Zero, Mode::Exploratory, 5_000);
        let trace = solver::run(&g.problem, &cfg)?;
        let v = qf_verdict(&g.problem, &trace, &g.reference, QfKind::Fm, &[])?;
        steps += v.steps;
        worst = worst.max(v.worst_excess);
        // the verdict's own slack is the criterion's slack
        if !v.pass || v.worst_excess > FEJER_SLACK {
            bad.push(format!("seed {seed}: first violation {:?}", v.first_violation));
        }
    }
    Ok(outcome(
        bad.is_empty(),
        format!("{steps} steps over 20 seeds, worst excess {worst:.2e}; failures {bad:?}"),
    ))
}

fn basic_inequality() -> Res<Outcome> {
    let (mut checked, mut skipped, mut violations) = (0, 0, 0);
    let mut worst = f64::NEG_INFINITY;
    for seed in HALFSPACE_SEEDS {
        let g = halfspace_instance(seed);
        let cfg = cyclic_config(&g, inverse_square(), Mode::CertifiedFinite, FINITE_BUDGET);
        let trace = solver::run(&g.problem, &cfg)?;
        let ball = g.problem.interior_ball().expect("interior ball");
        let delta = trace.delta_hat.unwrap_or(1.0);
        let rep = basic_inequality_check(&trace, &g.reference, ball.radius, delta, BASIC_SLACK)?;
        checked += rep.checked;
        skipped += rep.skipped;
        violations += rep.violations;
        worst = worst.max(rep.worst_excess);
    }
    Ok(outcome(
        violations == 0 && checked > 0,
        format!("{checked} steps checked, {skipped} outside the radius, {violations} violations, worst excess {worst:.2e}"),
    ))
}

fn erosion() -> Res<Outcome> {
    let oracle = OracleConfig::default().with_tolerance(1e-13);
    let triangle = ConvexFunction::MaxOfAffine {
        pieces: vec![
            AffinePiece { a: pt![-1, 0], b: -1.0 },
            AffinePiece { a: pt![0, -1], b: -1.0 },
            AffinePiece { a: pt![1, 1], b: -1.0 },
        ],
    };
    // each sampling ball lies outside its set and comes within 0.15 of the boundary
    let cases = [
        (
            "halfspace",
            ErosionTarget::Set(ConvexSet::halfspace(pt![1, 2], 1.0)?),
            EpsilonSampling::Uniform { r_max: 2.0 },
            pt![1.1, 2.2],
            2.0,
        ),
        (
            "ball",
            ErosionTarget::Set(ConvexSet::ball(pt![0.5, -0.5], 2.0)?),
            EpsilonSampling::Uniform { r_max: 1.9 },
            pt![4.6, -0.5],
            2.0,
        ),
        (
            "triangle",
            ErosionTarget::Function { f: triangle, witness: pt![-0.3, -0.3] },
            EpsilonSampling::Uniform { r_max: 0.6 },
            pt![3, -2],
            1.3,
        ),
    ];
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (name, target, sampling, center, radius)) in cases.iter().enumerate() {
        let v = erosion_inequality_probe(target, *sampling, center, *radius, EROSION_SAMPLES, 100 + i as u64, &oracle)?;
        pass &= v.pass && v.checked == EROSION_SAMPLES;
        parts.push(format!("{name} {}/{} checked, {} violations", v.checked, EROSION_SAMPLES, v.violations));
    }
    let wall = start.elapsed();
    pass &= wall < EROSION_WALL;
    Ok(outcome(pass, format!("{}; total {wall:.2?}", parts.join(", "))))
}

fn linear_regularity() -> Res<Outcome> {
    let mut violations = 0;
    let mut probes = 0;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..REGULARITY_FAMILIES {
        let n = 2 + (seed % 9) as usize;
        let m = 2 + (seed % 5) as usize;
        let g = GeneratorSpec::RandomHalfspaces { m, n, interior_radius: 0.2, q: QSpec::Whole }.generate(1000 + seed)?;
        let ball = g.problem.interior_ball().expect("interior ball").clone();
        let mut family: Vec<ConvexSet> = g.problem.fixed_point_sets().to_vec();
        // every third family carries a hyperplane through the centre as the exceptional set
        let j0 = if seed % 3 == 0 {
            let a = Point::unit(n, 0).add(&Point::unit(n, n - 1));
            family.push(ConvexSet::hyperplane(a.clone(), a.dot(&ball.center))?);
            Some(family.len() - 1)
        } else {
            None
        };
        let rep = regularity_probe(&RegularityProbe {
            family: &family,
            j0,
            interior_center: &ball.center,
            interior_radius: ball.radius,
            sample_center: &ball.center,
            sample_radius: 3.0,
            samples: 40,
            subfamilies: 6,
            seed,
            oracle: OracleConfig::default(),
        })?;
        probes += rep.samples * rep.subfamilies;
        violations += rep.violations;
        worst_ratio = worst_ratio.max(rep.kappa_empirical / rep.kappa_theory);
    }
    Ok(outcome(
        violations == 0,
        format!("50 families, {probes} (sample, subfamily) pairs, {violations} violations, max kappa_emp / kappa_S {worst_ratio:.3}"),
    ))
}

fn subgradient_bound() -> Res<Outcome> {
    let mut bad = Vec::new();
    for seed in 0..SUBGRADIENT_FAMILIES {
        let m = 1 + (seed % 6) as usize;
        let n = 2 + (seed % 5) as usize;
        let (fs, z, r) = random_affine_family(m, n, seed)?;
        let rep = subgradient_bound_probe(&fs, &z, r, 1000, seed, &[])?;
        if !rep.verdict.pass || rep.verdict.checked == 0 {
            bad.push(format!("seed {seed}: {} violations, {} checked", rep.verdict.violations, rep.verdict.checked));
        }
    }
    let tight = [ConvexFunction::Affine { a: pt![0.5, 0], b: -1.0 }];
    let rep = subgradient_bound_probe(&tight, &pt![0, 0], 2.0, 1000, 0, &[pt![2, 0]])?;
    let min = rep.min_norm.unwrap_or(f64::INFINITY);
    let rel = (min - rep.lambda).abs() / rep.lambda;
    Ok(outcome(
        bad.is_empty() && rep.verdict.pass && rel <= TIGHT_REL,
        format!(
            "20 families; tight instance min |g| = {min:.6} vs lambda = {:.6} (rel {rel:.1e}); failures {bad:?}",
            rep.lambda
        ),
    ))
}

fn precondition(r: Result<Vec<solver::Finding>, Error>) -> bool {
    matches!(r, Err(Error::PreconditionViolation(_)))
}

fn cli_rejects(schedule: &str, control: &str, dir: &std::path::Path) -> Res<bool> {
    let config = format!(
        r#"{{"seed": 1,
            "problem": {{"generator": {{"kind": "random_halfspaces", "m": 4, "n": 2, "interior_radius": 0.1}}}},
            "solver": {{"schedule": {schedule}, "control": {control}, "mode": "CERTIFIED_FINITE"}},
            "output": {{"dir": "{}"}}}}"#,
        dir.join("out").display()
    );
    let path = dir.join("gate.json");
    std::fs::write(&path, config)?;
    let out = Command::new(env!("CARGO_BIN_EXE_feasikit")).arg("solve").arg(&path).output()?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    Ok(out.status.code() == Some(1) && stderr.contains("PreconditionViolation"))
}

fn schedule_gate() -> Res<Outcome> {
    let g = halfspace_instance(0);
    let gate = |schedule, control| {
        let mut cfg = cyclic_config(&g, schedule, Mode::CertifiedFinite, FINITE_BUDGET);
        cfg.control = control;
        solver::validate(&g.problem, &cfg)
    };
    let cyclic = ControlSequence::CyclicSingleton { m: 50 };
    let geometric = OverrelaxSchedule::Geometric { r0: 1.0, q: 0.5 };
    let partial = ControlSequence::cyclic_blocks(50, &[(1..=49).collect()])?;

    let rejects_geometric = precondition(gate(geometric, cyclic.clone()));
    let rejects_partial = precondition(gate(inverse_square(), partial));
    let mut accepted = Vec::new();
    for a in [0.05, 0.3, 1.0, 2.0, 5.0, 12.0] {
        if gate(OverrelaxSchedule::Power { r0: 1.0, alpha_exp: a }, cyclic.clone()).is_ok() {
            accepted.push(a);
        }
    }
    let dir = tempfile::tempdir()?;
    let cli_geometric = cli_rejects(r#"{"kind": "geometric", "r0": 1.0, "q": 0.5}"#, r#"{"kind": "cyclic_singleton"}"#, dir.path())?;
    let cli_partial = cli_rejects(
        r#"{"kind": "power", "r0": 1.0, "alpha_exp": 2.0}"#,
        r#"{"kind": "cyclic_blocks", "blocks": [[1, 2], [3]]}"#,
        dir.path(),
    )?;
    Ok(outcome(
        rejects_geometric && rejects_partial && accepted.len() == 6 && cli_geometric && cli_partial,
        format!(
            "geometric rejected {rejects_geometric}, non-intermittent rejected {rejects_partial}, \
             power accepted for alpha_exp {accepted:?}, cli exit 1 with PreconditionViolation {}",
            cli_geometric && cli_partial
        ),
    ))
}

fn determinism() -> Res<Outcome> {
    let dir = tempfile::tempdir()?;
    let mut identical = 0;
    let mut rows = 0;
    for seed in [0u64, 7, 19] {
        let mut traces = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("s{seed}-r{run}"));
            let text = format!(
                r#"{{"seed": {seed},
                    "problem": {{"generator": {{"kind": "random_halfspaces", "m": 50, "n": 10, "interior_radius": 0.1,
                                               "q": {{"kind": "box", "lo": -10, "hi": 10}}}}}},
                    "solver": {{"control": {{"kind": "cyclic_singleton"}}, "mode": "CERTIFIED_FINITE"}},
                    "output": {{"dir": "{}"}}}}"#,
                out.display()
            );
            let ConfigFile::Single(cfg) = parse_config_str(&text)? else { unreachable!() };
            let o = run_experiment(&cfg)?;
            traces.push(std::fs::read(o.trace_path)?);
        }
        rows = rows.max(traces[0].iter().filter(|&&b| b == b'\n').count());
        if traces[0] == traces[1] && !traces[0].is_empty() {
            identical += 1;
        }
    }
    Ok(outcome(identical == 3, format!("{identical}/3 seeds byte-identical, largest trace {rows} lines")))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    results.push((1, finite_convergence().unwrap_or_else(failure)));
    match affine_convergence_and_qf1() {
        Ok((c2, c3)) => {
            results.push((2, c2));
            results.push((3, c3));
        }
        Err(e) => {
            results.push((2, failure(&e)));
            results.push((3, failure(&e)));
        }
    }
    results.push((4, zero_schedule_fejer().unwrap_or_else(failure)));
    results.push((5, basic_inequality().unwrap_or_else(failure)));
    results.push((6, erosion().unwrap_or_else(failure)));
    results.push((7, linear_regularity().unwrap_or_else(failure)));
    results.push((8, subgradient_bound().unwrap_or_else(failure)));
    results.push((9, schedule_gate().unwrap_or_else(failure)));
    results.push((10, determinism().unwrap_or_else(failure)));

    let mut all = true;
    for (n, o) in &results {
        all &= o.pass;
        println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
