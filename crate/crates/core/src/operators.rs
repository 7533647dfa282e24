//! Cutter operators and the extrapolated, averaged, projected step.
//!
//! One step of the method maps an iterate `x` to
//!
//! ```text
//! U_i(x) = x + alpha * beta_i(x) * (T_i(x) - x)
//! V(x)   = sum_{i in I_k} lambda_i U_i(x)
//! x+     = P_Q(V(x))
//! ```
//!
//! where `beta_i(x) = (r_k / phi_i(x) + |T_i(x) - x|) / |T_i(x) - x|` extends every
//! nonzero displacement by exactly `r_k / phi_i(x)`, and `beta_i(x) = 0` on the
//! fixed-point set of `T_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexFunction, ConvexSet, Point};

/// Relative threshold below which a displacement `T(x) - x` counts as zero.
pub const DEFAULT_FIX_TOLERANCE: f64 = 1e-14;

/// Fixed-point threshold `tau_fix(x) = relative * (1 + |x|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixTolerance {
    pub relative: f64,
}

impl Default for FixTolerance {
    fn default() -> Self {
        FixTolerance { relative: DEFAULT_FIX_TOLERANCE }
    }
}

impl FixTolerance {
    #[inline]
    pub fn at(&self, x: &Point) -> f64 {
        self.relative * (1.0 + x.norm())
    }
}

/// An operator `T` whose fixed-point set is the constraint set `C_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cutter {
    /// `T = P_C`, `Fix T = C`.
    MetricProjection { target: ConvexSet },
    /// `T(x) = x - f(x)/|g(x)|^2 g(x)` when `f(x) > 0`, else `x`;
    /// `Fix T = {f <= 0}`.
    SubgradientProjection { f: ConvexFunction },
}

impl Cutter {
    pub fn validate(&self) -> Result<()> {
        match self {
            Cutter::MetricProjection { target } => {
                target.validate()?;
                if target.closed_form().is_none() {
                    return Err(Error::UnsupportedProjection(format!(
                        "metric projection target {} has no closed form",
                        target.kind_name()
                    )));
                }
            }
            Cutter::SubgradientProjection { f } => f.validate()?,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Cutter::MetricProjection { target } => target.dim(),
            Cutter::SubgradientProjection { f } => f.dim(),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            Cutter::MetricProjection { target } => target.project(x),
            Cutter::SubgradientProjection { f } => {
                let (v, g) = f.value_and_subgradient(x)?;
                if v > 0.0 {
                    let g2 = g.norm_squared();
                    if g2 == 0.0 {
                        return Err(Error::ZeroSubgradientOutsideLevelSet);
                    }
                    Ok(x.axpy(-v / g2, &g))
                } else {
                    Ok(x.clone())
                }
            }
        }
    }

    /// Zero-tolerance membership in `Fix T`.
    pub fn fixes(&self, x: &Point) -> Result<bool> {
        match self {
            Cutter::MetricProjection { target } => target.contains(x),
            Cutter::SubgradientProjection { f } => Ok(f.value(x)? <= 0.0),
        }
    }

    /// `Fix T` as a convex set.
    pub fn fixed_point_set(&self) -> Result<ConvexSet> {
        match self {
            Cutter::MetricProjection { target } => Ok(target.clone()),
            Cutter::SubgradientProjection { f } => f.sublevel_set(0.0)?.ok_or_else(|| {
                Error::InvalidFunction("sublevel set {f <= 0} is empty".into())
            }),
        }
    }
}

/// Positive functional `phi_i` scaling the overrelaxation `r_k / phi_i(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OverrelaxFunctional {
    ConstantOne,
    /// `|g(x)|` where `f(x) > 0`, and 1 elsewhere.
    SubgradientNorm { f: ConvexFunction },
}

impl OverrelaxFunctional {
    pub fn value(&self, x: &Point) -> Result<f64> {
        match self {
            OverrelaxFunctional::ConstantOne => Ok(1.0),
            OverrelaxFunctional::SubgradientNorm { f } => {
                let (v, g) = f.value_and_subgradient(x)?;
                if v > 0.0 {
                    let n = g.norm();
                    if n > 0.0 {
                        Ok(n)
                    } else {
                        Err(Error::NonpositivePhi(n))
                    }
                } else {
                    Ok(1.0)
                }
            }
        }
    }
}

/// One constraint of the feasibility problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub cutter: Cutter,
    pub phi: OverrelaxFunctional,
}

impl Constraint {
    pub fn new(cutter: Cutter, phi: OverrelaxFunctional) -> Self {
        Constraint { cutter, phi }
    }

    pub fn projection(target: ConvexSet) -> Self {
        Constraint::new(Cutter::MetricProjection { target }, OverrelaxFunctional::ConstantOne)
    }
}

/// Extrapolation factor: 0 on (numerically) fixed points, otherwise
/// `(r_k / phi + |d|) / |d|`, which exceeds 1 whenever `r_k > 0`.
pub fn beta(r_k: f64, phi_value: f64, displacement_norm: f64, tau_fix: f64) -> Result<f64> {
    if phi_value.is_nan() || phi_value <= 0.0 {
        return Err(Error::NonpositivePhi(phi_value));
    }
    if displacement_norm <= tau_fix {
        return Ok(0.0);
    }
    Ok((r_k / phi_value + displacement_norm) / displacement_norm)
}

fn check_step_params(r_k: f64, alpha_k: f64) -> Result<()> {
    if !(r_k.is_finite() && r_k >= 0.0) {
        return Err(Error::InvalidParameter(format!("r_k = {r_k} must be finite and >= 0")));
    }
    if !(alpha_k > 0.0 && alpha_k < 2.0) {
        return Err(Error::InvalidParameter(format!("alpha_k = {alpha_k} must lie in (0, 2)")));
    }
    Ok(())
}

/// `U(x) = x + alpha * beta(x) * (T(x) - x)`.
pub fn extrapolated_step(
    cutter: &Cutter,
    phi: &OverrelaxFunctional,
    x: &Point,
    r_k: f64,
    alpha_k: f64,
    fix_tol: FixTolerance,
) -> Result<Point> {
    check_step_params(r_k, alpha_k)?;
    let rec = index_record(0, cutter, phi, x, r_k, fix_tol)?;
    Ok(x.axpy(alpha_k * rec.beta, &rec.displacement))
}

/// Per-index data of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexRecord {
    /// Zero-based constraint index.
    pub index: usize,
    pub displacement: Point,
    pub displacement_norm: f64,
    pub beta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub records: Vec<IndexRecord>,
    /// `V_k(x)`
    pub averaged: Point,
    /// `|W_k(x) - x|` with `W_k = sum lambda_i T_i`
    pub cutter_average_step: f64,
    /// `P_Q(V_k(x))`, present for projected steps.
    pub projected: Option<Point>,
}

impl StepReport {
    pub fn max_beta(&self) -> f64 {
        self.records.iter().map(|r| r.beta).fold(0.0, f64::max)
    }

    pub fn max_displacement(&self) -> f64 {
        self.records.iter().map(|r| r.displacement_norm).fold(0.0, f64::max)
    }

    pub fn min_phi(&self) -> f64 {
        self.records.iter().map(|r| r.phi).fold(f64::INFINITY, f64::min)
    }

    /// The next iterate: the projected point if present, else `V_k(x)`.
    pub fn next(&self) -> &Point {
        self.projected.as_ref().unwrap_or(&self.averaged)
    }
}

fn index_record(
    index: usize,
    cutter: &Cutter,
    phi: &OverrelaxFunctional,
    x: &Point,
    r_k: f64,
    fix_tol: FixTolerance,
) -> Result<IndexRecord> {
    let t = cutter.apply(x)?;
    let displacement = t.sub(x);
    let displacement_norm = displacement.norm();
    let phi_value = phi.value(x)?;
    let beta = beta(r_k, phi_value, displacement_norm, fix_tol.at(x))?;
    Ok(IndexRecord { index, displacement, displacement_norm, beta, phi: phi_value })
}

fn check_active(m: usize, active: &[usize], weights: &[f64]) -> Result<()> {
    if active.is_empty() {
        return Err(Error::EmptyControlSet);
    }
    if let Some(&i) = active.iter().find(|&&i| i >= m) {
        return Err(Error::IndexOutOfRange { index: i + 1, m });
    }
    if weights.len() != active.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} active indices",
            weights.len(),
            active.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
        return Err(Error::InvalidParameter(format!("weight {w} outside (0, 1]")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSumViolation(sum));
    }
    Ok(())
}

/// `V_k(x) = sum_{i in active} lambda_i U_{i,k}(x)`.
///
/// `active` holds zero-based indices into `constraints`, `weights` the matching
/// `lambda_i`.
pub fn averaged_step(
    constraints: &[Constraint],
    active: &[usize],
    weights: &[f64],
    x: &Point,
    r_k: f64,
    alpha_k: f64,
    fix_tol: FixTolerance,
) -> Result<StepReport> {
    check_step_params(r_k, alpha_k)?;
    check_active(constraints.len(), active, weights)?;
    let mut records = Vec::with_capacity(active.len());
    let mut averaged = x.clone();
    let mut w_step = Point::zeros(x.dim());
    for (&i, &lambda) in active.iter().zip(weights) {
        let c = &constraints[i];
        let rec = index_record(i, &c.cutter, &c.phi, x, r_k, fix_tol)?;
        // sum lambda_i (x + alpha beta_i d_i) = x + sum lambda_i alpha beta_i d_i
        averaged.axpy_mut(lambda * alpha_k * rec.beta, &rec.displacement);
        w_step.axpy_mut(lambda, &rec.displacement);
        records.push(rec);
    }
    Ok(StepReport { records, averaged, cutter_average_step: w_step.norm(), projected: None })
}

/// `x_{k+1} = P_Q(V_k(x_k))`.
#[allow(clippy::too_many_arguments)]
pub fn projected_step(
    q: &ConvexSet,
    constraints: &[Constraint],
    active: &[usize],
    weights: &[f64],
    x: &Point,
    r_k: f64,
    alpha_k: f64,
    fix_tol: FixTolerance,
) -> Result<StepReport> {
    let mut report = averaged_step(constraints, active, weights, x, r_k, alpha_k, fix_tol)?;
    report.projected = Some(q.project(&report.averaged)?);
    Ok(report)
}

/// Splits the step into the averaged cutter `W_k(x) = sum lambda_i T_i(x)` and
/// the perturbation `e_k = sum lambda_i (r_k / phi_i(x)) (T_i(x) - x)/|T_i(x) - x|`,
/// so that `V_k(x) = x + alpha_k (W_k(x) - x + e_k)`.
pub fn qf1_decomposition(
    constraints: &[Constraint],
    active: &[usize],
    weights: &[f64],
    x: &Point,
    r_k: f64,
    fix_tol: FixTolerance,
) -> Result<(Point, Point)> {
    check_active(constraints.len(), active, weights)?;
    let tau = fix_tol.at(x);
    let mut w = Point::zeros(x.dim());
    let mut e = Point::zeros(x.dim());
    for (&i, &lambda) in active.iter().zip(weights) {
        let c = &constraints[i];
        let t = c.cutter.apply(x)?;
        w.axpy_mut(lambda, &t);
        let d = t.sub(x);
        let dn = d.norm();
        if dn > tau {
            let phi = c.phi.value(x)?;
            if phi.is_nan() || phi <= 0.0 {
                return Err(Error::NonpositivePhi(phi));
            }
            e.axpy_mut(lambda * r_k / phi / dn, &d);
        }
    }
    Ok((w, e))
}
