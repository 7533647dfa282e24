//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generator::GeneratorSpec;
use crate::diagnostics::bounds::EpsilonSampling;
use crate::diagnostics::{OracleConfig, QfKind};
use crate::error::{Error, Result};
use crate::geometry::{ConvexFunction, ConvexSet, Point};
use crate::operators::{FixTolerance, DEFAULT_FIX_TOLERANCE};
use crate::schedules::{ControlSpec, OverrelaxSchedule, RelaxationPlan, WeightRule};
use crate::solver::{InteriorBall, Mode, Problem};

/// Where the problem comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Inline(Problem),
    Generator(GeneratorSpec),
}

fn default_schedule() -> OverrelaxSchedule {
    OverrelaxSchedule::Power { r0: 1.0, alpha_exp: 2.0 }
}
fn default_control() -> ControlSpec {
    ControlSpec::Full
}
fn default_alpha() -> f64 {
    1.0
}
fn default_weights() -> WeightRule {
    WeightRule::Uniform
}
fn default_margin() -> f64 {
    1e-3
}
fn default_max_iterations() -> usize {
    100_000
}
fn default_mode() -> Mode {
    Mode::Exploratory
}
fn default_fix_tolerance() -> f64 {
    DEFAULT_FIX_TOLERANCE
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}

/// Solver settings. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_schedule")]
    pub schedule: OverrelaxSchedule,
    #[serde(default = "default_control")]
    pub control: ControlSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_weights")]
    pub weights: WeightRule,
    #[serde(default = "default_margin")]
    pub epsilon_margin: f64,
    /// Starting point; drawn by the generator when omitted.
    #[serde(default)]
    pub x0: Option<Point>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub convergence_tol: Option<f64>,
    #[serde(default = "default_fix_tolerance")]
    pub fix_tolerance: f64,
    /// Record `d(x_k, C ∩ Q)` with this oracle.
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default = "default_stride")]
    pub oracle_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Post-run checks on the trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Fejér-type verdicts; `QF1` uses `alpha_k r_k / delta_hat`.
    #[serde(default)]
    pub qf: Vec<QfKind>,
    /// Reference point for the verdicts; defaults to the generator's common
    /// point or the interior ball centre.
    #[serde(default)]
    pub reference: Option<Point>,
    #[serde(default)]
    pub summability: bool,
    /// Projected-step decrease inequality on steps within the interior radius.
    #[serde(default)]
    pub basic_inequality: bool,
    /// Standalone probes run by the `probe` command.
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
}

fn default_samples() -> usize {
    1000
}
fn default_subfamilies() -> usize {
    8
}

/// A standalone diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// Erosion ratio inequality for a set (`target`) or a function (`f` with
    /// `witness`).
    Erosion {
        #[serde(default)]
        target: Option<ConvexSet>,
        #[serde(default)]
        f: Option<ConvexFunction>,
        #[serde(default)]
        witness: Option<Point>,
        sampling: EpsilonSampling,
        center: Point,
        radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    SubgradientBound {
        functions: Vec<ConvexFunction>,
        z: Point,
        r: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        extra_points: Vec<Point>,
    },
    Regularity {
        family: Vec<ConvexSet>,
        #[serde(default)]
        j0: Option<usize>,
        interior: InteriorBall,
        sample_center: Point,
        sample_radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_subfamilies")]
        subfamilies: usize,
    },
    OracleDistance {
        sets: Vec<ConvexSet>,
        x: Point,
        #[serde(default)]
        oracle: Option<OracleConfig>,
    },
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_trace() -> String {
    "trace.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Keep `x_k` in memory for the diagnostics.
    #[serde(default = "default_true")]
    pub record_iterates: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            trace: default_trace(),
            summary: default_summary(),
            record_iterates: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: ProblemSource,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A config file holds either one experiment or a batch.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigFile {
    Single(Box<ExperimentConfig>),
    Batch(Vec<ExperimentConfig>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchRepr {
    experiments: Vec<ExperimentConfig>,
}

impl SolverSection {
    pub fn plan(&self) -> Result<RelaxationPlan> {
        RelaxationPlan::new(self.alpha, self.weights.clone(), self.epsilon_margin)
    }

    pub fn fix_tol(&self) -> FixTolerance {
        FixTolerance { relative: self.fix_tolerance }
    }
}

impl ExperimentConfig {
    /// Number of constraints, known before generation.
    pub fn m(&self) -> usize {
        match &self.problem {
            ProblemSource::Inline(p) => p.m(),
            ProblemSource::Generator(g) => g.m(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.problem {
            ProblemSource::Inline(p) => p.dim(),
            ProblemSource::Generator(g) => g.n(),
        }
    }

    /// Structural checks. Every problem found is reported.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let s = &self.solver;
        if let ProblemSource::Generator(g) = &self.problem {
            if self.seed.is_none() {
                errs.push("seed is required when a generator is used".to_string());
            }
            if let Err(e) = g.validate(s.mode) {
                errs.push(e.to_string());
            }
        } else if s.x0.is_none() {
            errs.push("solver.x0 is required for inline problems".to_string());
        }
        if let Some(x0) = &s.x0 {
            if x0.dim() != self.dim() {
                errs.push(format!("solver.x0 has dimension {}, problem has {}", x0.dim(), self.dim()));
            }
        }
        if let Err(e) = s.schedule.validate() {
            errs.push(format!("solver.schedule: {e}"));
        }
        if let Err(e) = s.control.build(self.m()) {
            errs.push(format!("solver.control: {e}"));
        }
        if let Err(e) = s.plan() {
            errs.push(format!("solver: {e}"));
        }
        if s.max_iterations == 0 {
            errs.push("solver.max_iterations must be >= 1".to_string());
        }
        if let Some(t) = s.convergence_tol {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(format!("solver.convergence_tol = {t} must be > 0"));
            }
        }
        if !(s.fix_tolerance >= 0.0 && s.fix_tolerance.is_finite()) {
            errs.push(format!("solver.fix_tolerance = {} must be >= 0", s.fix_tolerance));
        }
        if let Some(o) = &s.oracle {
            if let Err(e) = o.validate() {
                errs.push(format!("solver.oracle: {e}"));
            }
        }
        if s.oracle_stride == 0 {
            errs.push("solver.oracle_stride must be >= 1".to_string());
        }
        if let Some(z) = &self.diagnostics.reference {
            if z.dim() != self.dim() {
                errs.push("diagnostics.reference has the wrong dimension".to_string());
            }
        }
        for (i, p) in self.diagnostics.probes.iter().enumerate() {
            if let ProbeSpec::Erosion { target, f, witness, .. } = p {
                let ok = match (target, f) {
                    (Some(_), None) => witness.is_none(),
                    (None, Some(_)) => witness.is_some(),
                    _ => false,
                };
                if !ok {
                    errs.push(format!(
                        "diagnostics.probes[{i}]: erosion needs either `target` or `f` with `witness`"
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Parses a JSON document, reporting the line and column of syntax errors and
/// the full list of validation failures.
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let file = if value.get("experiments").is_some() {
        let b: BatchRepr = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        ConfigFile::Batch(b.experiments)
    } else {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        ConfigFile::Single(Box::new(c))
    };
    match &file {
        ConfigFile::Single(c) => c.validate()?,
        ConfigFile::Batch(cs) => {
            let mut errs = Vec::new();
            for (i, c) in cs.iter().enumerate() {
                if let Err(Error::Validation(v)) = c.validate() {
                    errs.extend(v.into_iter().map(|m| format!("experiments[{i}]: {m}")));
                }
            }
            if !errs.is_empty() {
                return Err(Error::Validation(errs));
            }
        }
    }
    Ok(file)
}

pub fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}
