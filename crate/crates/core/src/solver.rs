//! Problem definition, precondition checks and the main iteration.

use serde::{Deserialize, Serialize};

use crate::diagnostics::oracle::{oracle_estimate, OracleConfig};
use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point};
use crate::operators::{projected_step, Constraint, Cutter, FixTolerance};
use crate::schedules::{ControlSequence, OverrelaxSchedule, Regime, RelaxationPlan, WeightRule};

/// Iterates whose norm exceeds this multiple of `1 + |x0|` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// A ball `B(center, radius)` known to lie inside `C` with `center` in `Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorBall {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRepr {
    constraints: Vec<Constraint>,
    q: ConvexSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interior_ball: Option<InteriorBall>,
}

/// Find `x` in `C ∩ Q` where `C` is the intersection of the fixed-point sets
/// of the constraint cutters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct Problem {
    constraints: Vec<Constraint>,
    q: ConvexSet,
    interior_ball: Option<InteriorBall>,
    fix_sets: Vec<ConvexSet>,
}

impl TryFrom<ProblemRepr> for Problem {
    type Error = Error;
    fn try_from(r: ProblemRepr) -> Result<Self> {
        Problem::new(r.constraints, r.q, r.interior_ball)
    }
}

impl From<Problem> for ProblemRepr {
    fn from(p: Problem) -> Self {
        ProblemRepr { constraints: p.constraints, q: p.q, interior_ball: p.interior_ball }
    }
}

impl Problem {
    pub fn new(
        constraints: Vec<Constraint>,
        q: ConvexSet,
        interior_ball: Option<InteriorBall>,
    ) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidParameter("problem needs at least one constraint".into()));
        }
        q.validate()?;
        if q.closed_form().is_none() {
            return Err(Error::UnsupportedProjection("outer set Q has no closed-form projection".into()));
        }
        let dim = q.dim();
        let mut fix_sets = Vec::with_capacity(constraints.len());
        for c in &constraints {
            c.cutter.validate()?;
            if c.cutter.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.cutter.dim() });
            }
            if let crate::operators::OverrelaxFunctional::SubgradientNorm { f } = &c.phi {
                f.validate()?;
                if f.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
                }
            }
            fix_sets.push(c.cutter.fixed_point_set()?);
        }
        let p = Problem { constraints, q, interior_ball, fix_sets };
        if let Some(ball) = &p.interior_ball {
            p.check_interior_ball(ball)?;
        }
        Ok(p)
    }

    fn check_interior_ball(&self, ball: &InteriorBall) -> Result<()> {
        ball.center.check_dim(self.dim())?;
        if !(ball.radius > 0.0 && ball.radius.is_finite()) {
            return Err(Error::HypothesisViolation(format!(
                "interior radius {} must be > 0",
                ball.radius
            )));
        }
        if !self.q.contains(&ball.center)? {
            return Err(Error::HypothesisViolation("interior centre is not in Q".into()));
        }
        let n = self.dim();
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let p = ball.center.axpy(sign * ball.radius, &Point::unit(n, j));
                let slack = 1e-12 * (1.0 + p.norm());
                for (i, c) in self.constraints.iter().enumerate() {
                    let excess = match &c.cutter {
                        Cutter::MetricProjection { target } => target.distance(&p)?,
                        Cutter::SubgradientProjection { f } => f.value(&p)?,
                    };
                    if excess > slack {
                        return Err(Error::HypothesisViolation(format!(
                            "interior ball leaves constraint {} along axis {}",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn q(&self) -> &ConvexSet {
        &self.q
    }

    pub fn interior_ball(&self) -> Option<&InteriorBall> {
        self.interior_ball.as_ref()
    }

    /// `Fix T_i` for every constraint.
    pub fn fixed_point_sets(&self) -> &[ConvexSet] {
        &self.fix_sets
    }

    /// Zero-tolerance membership in `C`.
    pub fn in_c(&self, x: &Point) -> Result<bool> {
        x.check_dim(self.dim())?;
        for c in &self.constraints {
            if !c.cutter.fixes(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Zero-tolerance membership in `C ∩ Q`.
    pub fn is_feasible(&self, x: &Point) -> Result<bool> {
        Ok(self.in_c(x)? && self.q.contains(x)?)
    }

    /// `d(x, C_i)`; sets without a closed form go through the oracle.
    pub fn constraint_distance(&self, i: usize, x: &Point, oracle: &OracleConfig) -> Result<f64> {
        let set = &self.fix_sets[i];
        if set.contains(x)? {
            return Ok(0.0);
        }
        match set.closed_form() {
            Some(s) => s.distance(x),
            None => Ok(oracle_estimate(std::slice::from_ref(set), x, oracle)?.distance),
        }
    }

    /// `max_i d(x, C_i)` over all constraints.
    pub fn max_constraint_distance(&self, x: &Point, oracle: &OracleConfig) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.m() {
            worst = worst.max(self.constraint_distance(i, x, oracle)?);
        }
        Ok(worst)
    }

    /// Oracle estimate of `d(x, C ∩ Q)`.
    pub fn feasible_distance(&self, x: &Point, oracle: &OracleConfig) -> Result<f64> {
        let mut sets = self.fix_sets.clone();
        sets.push(self.q.clone());
        Ok(oracle_estimate(&sets, x, oracle)?.distance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Enforce the hypotheses of the finite-convergence theorem.
    CertifiedFinite,
    /// Enforce summability, margins and intermittency.
    CertifiedAsymptotic,
    /// Check everything but only warn.
    Exploratory,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::CertifiedFinite => "CERTIFIED_FINITE",
            Mode::CertifiedAsymptotic => "CERTIFIED_ASYMPTOTIC",
            Mode::Exploratory => "EXPLORATORY",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "CERTIFIED_FINITE" => Ok(Mode::CertifiedFinite),
            "CERTIFIED_ASYMPTOTIC" => Ok(Mode::CertifiedAsymptotic),
            "EXPLORATORY" => Ok(Mode::Exploratory),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub schedule: OverrelaxSchedule,
    pub control: ControlSequence,
    pub plan: RelaxationPlan,
    pub x0: Point,
    pub max_iterations: usize,
    pub mode: Mode,
    /// Stop once `max_i d(x_k, C_i)` falls to this level (ignored in
    /// certified-finite mode).
    pub convergence_tol: Option<f64>,
    pub fix_tol: FixTolerance,
    /// Oracle used for distances to sets without a closed form.
    pub distance_oracle: OracleConfig,
    /// When set, rows carry an estimate of `d(x_k, C ∩ Q)`.
    pub feasibility_oracle: Option<OracleConfig>,
    /// Compute the feasibility oracle every `oracle_stride` rows (and always on
    /// the final row).
    pub oracle_stride: usize,
    /// Keep `x_k` in every row.
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(
        schedule: OverrelaxSchedule,
        control: ControlSequence,
        plan: RelaxationPlan,
        x0: Point,
        max_iterations: usize,
        mode: Mode,
    ) -> Self {
        SolverConfig {
            schedule,
            control,
            plan,
            x0,
            max_iterations,
            mode,
            convergence_tol: None,
            fix_tol: FixTolerance::default(),
            distance_oracle: OracleConfig::default().with_tolerance(1e-12),
            feasibility_oracle: None,
            oracle_stride: 1,
            record_iterates: true,
        }
    }
}

/// Data of the step taken from row `k` to row `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub r: f64,
    pub alpha: f64,
    /// Zero-based active indices `I_k`.
    pub active: Vec<usize>,
    pub weights: Vec<f64>,
    pub betas: Vec<f64>,
    pub displacement_norms: Vec<f64>,
    pub phis: Vec<f64>,
    /// `|x_{k+1} - x_k|`
    pub step_norm: f64,
    /// `|W_k(x_k) - x_k|` for the averaged cutter `W_k = sum lambda_i T_i`.
    pub cutter_average_step: f64,
    /// `|e_k|` for the overrelaxation perturbation of the step.
    pub perturbation_norm: f64,
}

impl StepRecord {
    pub fn max_beta(&self) -> f64 {
        self.betas.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacement_norms.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub max_constraint_distance: f64,
    pub in_c: bool,
    pub in_q: bool,
    pub oracle_distance: Option<f64>,
    pub x: Option<Point>,
    /// `None` on the final row.
    pub step: Option<StepRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "k", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    FiniteConvergence(usize),
    TolReached(usize),
    BudgetExhausted,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::FiniteConvergence(_) => "FINITE_CONVERGENCE",
            Status::TolReached(_) => "TOL_REACHED",
            Status::BudgetExhausted => "BUDGET_EXHAUSTED",
        }
    }

    pub fn k(self) -> Option<usize> {
        match self {
            Status::FiniteConvergence(k) | Status::TolReached(k) => Some(k),
            Status::BudgetExhausted => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub status: Status,
    /// Smallest overrelaxation functional value seen over all steps.
    pub delta_hat: Option<f64>,
    pub findings: Vec<Finding>,
}

impl Trace {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least one row")
    }

    /// The recorded iterates `x_0, x_1, ...`.
    pub fn iterates(&self) -> Result<Vec<&Point>> {
        self.rows
            .iter()
            .map(|r| r.x.as_ref())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidParameter("trace was recorded without iterates".into()))
    }

    /// `alpha_k * r_k / delta_hat` for every step: a bound on the norm of the
    /// overrelaxation perturbation.
    pub fn qf1_epsilons(&self) -> Vec<f64> {
        let delta = self.delta_hat.unwrap_or(1.0);
        self.rows
            .iter()
            .filter_map(|r| r.step.as_ref())
            .map(|s| s.alpha * s.r / delta)
            .collect()
    }
}

/// Checks the preconditions of `mode`.
///
/// Structural problems (dimension mismatches, `x0` outside `Q`, a control over
/// the wrong number of sets) are errors in every mode. Theorem hypotheses are
/// errors in the certified modes and warnings in exploratory mode.
pub fn validate(problem: &Problem, config: &SolverConfig) -> Result<Vec<Finding>> {
    let mut hard = Vec::new();
    if config.x0.dim() != problem.dim() {
        hard.push(format!("x0 has dimension {}, problem has {}", config.x0.dim(), problem.dim()));
    } else if !problem.q().contains(&config.x0)? {
        hard.push("x0 is not in Q".to_string());
    }
    if config.max_iterations == 0 {
        hard.push("max_iterations must be >= 1".to_string());
    }
    if config.control.m() != problem.m() {
        hard.push(format!(
            "control is over {} sets, problem has {}",
            config.control.m(),
            problem.m()
        ));
    }
    if let Some(tol) = config.convergence_tol {
        if !(tol > 0.0 && tol.is_finite()) {
            hard.push(format!("convergence_tol = {tol} must be > 0"));
        }
    }
    if config.oracle_stride == 0 {
        hard.push("oracle_stride must be >= 1".to_string());
    }
    if let Err(e) = config.schedule.validate() {
        hard.push(e.to_string());
    }
    if let WeightRule::Fixed { values } = config.plan.weight_rule() {
        if values.len() != problem.m() {
            hard.push(format!("{} fixed weights for {} constraints", values.len(), problem.m()));
        }
    }
    if !hard.is_empty() {
        return Err(Error::PreconditionViolation(hard));
    }

    let mut issues = Vec::new();
    let mut warnings = Vec::new();

    // margins over one period of the control
    for k in 0..config.control.period() {
        if let Err(e) = config.plan.weights_at(k, &config.control.at(k)) {
            issues.push(e.to_string());
            break;
        }
    }
    if config.control.minimal_intermittency(config.control.period()).is_none() {
        issues.push("control not intermittent".to_string());
    }

    let classification = config.schedule.classify();
    if let Ok(c) = &classification {
        if let Some(w) = &c.warning {
            warnings.push(w.clone());
        }
    }
    let finite_issues = |warnings: &mut Vec<String>| -> Result<Vec<String>> {
        let mut out = Vec::new();
        match &classification {
            Ok(c) => match c.regime {
                Regime::StagDivergent | Regime::StagSummable if c.vanishing => {}
                Regime::StagDivergent | Regime::StagSummable => {
                    out.push("schedule does not decrease to zero".to_string())
                }
                Regime::Zero | Regime::GeometricOrFaster => out.push("schedule fails STAG".to_string()),
            },
            Err(_) => out.push("schedule fails STAG: explicit schedules cannot be certified".into()),
        }
        match problem.interior_ball() {
            None => out.push("no certified interior ball supplied".to_string()),
            Some(ball) => {
                for (i, c) in problem.constraints().iter().enumerate() {
                    if let Cutter::SubgradientProjection { f } = &c.cutter {
                        let v = f.value(&ball.center)?;
                        if v.is_nan() || v >= 0.0 {
                            out.push(format!(
                                "constraint {} fails the Slater condition at the interior centre (f = {v})",
                                i + 1
                            ));
                        }
                    }
                }
            }
        }
        if config.convergence_tol.is_some() && config.mode == Mode::CertifiedFinite {
            warnings.push("convergence_tol is ignored in CERTIFIED_FINITE mode".to_string());
        }
        Ok(out)
    };
    let asymptotic_issues = || -> Vec<String> {
        match &classification {
            Ok(c) if c.summable => vec![],
            Ok(_) => vec!["schedule is not summable".to_string()],
            Err(_) => match &config.schedule {
                OverrelaxSchedule::Explicit { values } if values.len() < config.max_iterations => vec![format!(
                    "explicit schedule has {} values for {} iterations",
                    values.len(),
                    config.max_iterations
                )],
                _ => vec![],
            },
        }
    };
    match config.mode {
        Mode::CertifiedFinite => issues.extend(finite_issues(&mut warnings)?),
        Mode::CertifiedAsymptotic => issues.extend(asymptotic_issues()),
        Mode::Exploratory => {
            // report which convergence guarantee each violation forfeits
            let finite = finite_issues(&mut warnings)?;
            let asymptotic = asymptotic_issues();
            issues.extend(finite.into_iter().map(|m| format!("finite convergence not certified: {m}")));
            issues.extend(asymptotic.into_iter().map(|m| format!("asymptotic convergence not certified: {m}")));
        }
    }

    if config.mode != Mode::Exploratory && !issues.is_empty() {
        return Err(Error::PreconditionViolation(issues));
    }
    let mut findings: Vec<Finding> = issues
        .into_iter()
        .map(|message| Finding { severity: Severity::Warning, message })
        .collect();
    findings.extend(warnings.into_iter().map(|message| Finding { severity: Severity::Warning, message }));
    Ok(findings)
}

/// Runs the iteration from `config.x0` until `C ∩ Q` is reached, the tolerance
/// is met, or the budget is spent.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let findings = validate(problem, config)?;
    for f in &findings {
        log::warn!("{}", f.message);
    }
    let tol = match config.mode {
        Mode::CertifiedFinite => None,
        _ => config.convergence_tol,
    };
    let guard = DIVERGENCE_FACTOR * (1.0 + config.x0.norm());
    let mut rows = Vec::new();
    let mut x = config.x0.clone();
    let mut delta_hat: Option<f64> = None;
    let mut k = 0;
    let status = loop {
        let in_c = problem.in_c(&x)?;
        let in_q = problem.q().contains(&x)?;
        let max_constraint_distance = problem.max_constraint_distance(&x, &config.distance_oracle)?;
        let done = if in_c && in_q {
            Some(Status::FiniteConvergence(k))
        } else if tol.is_some_and(|t| max_constraint_distance <= t) {
            Some(Status::TolReached(k))
        } else if k == config.max_iterations {
            Some(Status::BudgetExhausted)
        } else {
            None
        };
        let oracle_distance = match &config.feasibility_oracle {
            Some(o) if done.is_some() || k % config.oracle_stride == 0 => {
                Some(problem.feasible_distance(&x, o)?)
            }
            _ => None,
        };
        let mut row = TraceRow {
            k,
            max_constraint_distance,
            in_c,
            in_q,
            oracle_distance,
            x: config.record_iterates.then(|| x.clone()),
            step: None,
        };
        if let Some(status) = done {
            rows.push(row);
            break status;
        }

        let r = config.schedule.at(k)?;
        let alpha = config.plan.relaxation_at(k);
        let active = config.control.at(k);
        let weights = config.plan.weights_at(k, &active)?;
        let report = projected_step(
            problem.q(),
            problem.constraints(),
            &active,
            &weights,
            &x,
            r,
            alpha,
            config.fix_tol,
        )?;
        let next = report.next().clone();
        if !next.is_finite() {
            return Err(Error::NonFiniteIterate(k + 1));
        }
        let norm = next.norm();
        if norm > guard {
            return Err(Error::DivergenceSuspected { k: k + 1, norm });
        }
        let mut perturbation = Point::zeros(x.dim());
        for (rec, &lambda) in report.records.iter().zip(&weights) {
            if rec.beta > 0.0 {
                perturbation.axpy_mut(lambda * (rec.beta - 1.0), &rec.displacement);
            }
        }
        let min_phi = report.min_phi();
        delta_hat = Some(delta_hat.map_or(min_phi, |d| d.min(min_phi)));
        row.step = Some(StepRecord {
            r,
            alpha,
            weights,
            betas: report.records.iter().map(|r| r.beta).collect(),
            displacement_norms: report.records.iter().map(|r| r.displacement_norm).collect(),
            phis: report.records.iter().map(|r| r.phi).collect(),
            step_norm: next.distance(&x),
            cutter_average_step: report.cutter_average_step,
            perturbation_norm: perturbation.norm(),
            active,
        });
        log::trace!("k = {k}: r = {r:e}, residual = {max_constraint_distance:e}");
        rows.push(row);
        x = next;
        k += 1;
    };
    log::info!("{} after {} steps", status.name(), rows.len() - 1);
    Ok(Trace { rows, status, delta_hat, findings })
}

/// `|x_{k+1} - z| <= |x_k - z| + eps[k] + 1e-10` along the whole trace.
pub fn fejer_reference_check(problem: &Problem, trace: &Trace, z: &Point, eps: &[f64]) -> Result<bool> {
    if !problem.is_feasible(z)? {
        return Err(Error::ReferenceNotFeasible);
    }
    let xs = trace.iterates()?;
    if eps.len() + 1 < xs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} epsilons for {} steps",
            eps.len(),
            xs.len().saturating_sub(1)
        )));
    }
    Ok(xs
        .windows(2)
        .zip(eps)
        .all(|(w, e)| w[1].distance(z) <= w[0].distance(z) + e + 1e-10))
}
