//! Fejér-type verdicts on iterate sequences and the summability monitor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::solver::{Problem, Trace};

/// Slack used by the Fejér-type checks.
pub const QF_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QfKind {
    /// `|x_{k+1} - z| <= |x_k - z|`
    Fm,
    /// `|x_{k+1} - z| <= |x_k - z| + eps_k`
    Qf1,
    /// `|x_{k+1} - z|^2 <= |x_k - z|^2 + eps_k`
    Qf2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfVerdict {
    pub kind: QfKind,
    pub pass: bool,
    /// First `k` with the inequality failing between `x_k` and `x_{k+1}`.
    pub first_violation: Option<usize>,
    pub violations: usize,
    /// Largest excess of the left side over the right side (negative when all
    /// steps pass with room to spare).
    pub worst_excess: f64,
    /// `sum_k eps_k` over the checked steps.
    pub eps_partial_sum: f64,
    pub steps: usize,
}

/// Checks a raw sequence against `z`. For `Fm` the epsilons are ignored and
/// may be empty.
pub fn qf_check_sequence(xs: &[&Point], z: &Point, kind: QfKind, eps: &[f64]) -> Result<QfVerdict> {
    let steps = xs.len().saturating_sub(1);
    if kind != QfKind::Fm && eps.len() < steps {
        return Err(Error::InvalidParameter(format!("{} epsilons for {steps} steps", eps.len())));
    }
    if let Some(e) = eps.iter().take(steps).find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::InvalidParameter(format!("epsilon {e} must be finite and >= 0")));
    }
    let mut first_violation = None;
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut eps_sum = 0.0;
    for k in 0..steps {
        let before = xs[k].distance(z);
        let after = xs[k + 1].distance(z);
        let e = if kind == QfKind::Fm { 0.0 } else { eps[k] };
        eps_sum += e;
        let excess = match kind {
            QfKind::Fm | QfKind::Qf1 => after - before - e,
            QfKind::Qf2 => after * after - before * before - e,
        };
        worst_excess = worst_excess.max(excess);
        if excess > QF_SLACK {
            violations += 1;
            first_violation.get_or_insert(k);
        }
    }
    Ok(QfVerdict {
        kind,
        pass: violations == 0,
        first_violation,
        violations,
        worst_excess: if steps == 0 { 0.0 } else { worst_excess },
        eps_partial_sum: eps_sum,
        steps,
    })
}

/// `qf_check_sequence` on the iterates of a trace, after checking that `z`
/// lies in `C ∩ Q`.
pub fn qf_verdict(problem: &Problem, trace: &Trace, z: &Point, kind: QfKind, eps: &[f64]) -> Result<QfVerdict> {
    if !problem.is_feasible(z)? {
        return Err(Error::ReferenceNotFeasible);
    }
    qf_check_sequence(&trace.iterates()?, z, kind, eps)
}

/// Type-II epsilons implied by type-I ones:
/// `eps'_k = eps_k (2 |x_k - z| + eps_k)`.
pub fn qf2_epsilons(xs: &[&Point], z: &Point, eps: &[f64]) -> Vec<f64> {
    xs.iter().zip(eps).map(|(x, e)| e * (2.0 * x.distance(z) + e)).collect()
}

/// Result of checking `|P_Q V(x_k) - z|^2 <= |x_k - z|^2 - (2 - alpha)/2 |P_Q V(x_k) - x_k|^2`
/// on the steps where the overrelaxation is within the interior radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicInequalityReport {
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub worst_excess: f64,
}

/// Checks the projected-step decrease inequality along a trace for every step
/// with `r_k / delta <= radius` (or with `x_k` already in `C`).
pub fn basic_inequality_check(
    trace: &Trace,
    z: &Point,
    radius: f64,
    delta: f64,
    slack: f64,
) -> Result<BasicInequalityReport> {
    let xs = trace.iterates()?;
    let mut rep = BasicInequalityReport {
        checked: 0,
        skipped: 0,
        violations: 0,
        first_violation: None,
        worst_excess: f64::NEG_INFINITY,
    };
    for (k, row) in trace.rows.iter().enumerate() {
        let Some(step) = &row.step else { continue };
        if step.r / delta > radius && !row.in_c {
            rep.skipped += 1;
            continue;
        }
        rep.checked += 1;
        let (x, next) = (xs[k], xs[k + 1]);
        let lhs = next.distance(z).powi(2);
        let rhs = x.distance(z).powi(2) - (2.0 - step.alpha) / 2.0 * next.distance(x).powi(2);
        let excess = lhs - rhs;
        rep.worst_excess = rep.worst_excess.max(excess);
        if excess > slack {
            rep.violations += 1;
            rep.first_violation.get_or_insert(k);
        }
    }
    if rep.checked == 0 {
        rep.worst_excess = 0.0;
    }
    Ok(rep)
}

/// Partial sums of `|W_k(x_k) - x_k|^2` and `|x_{k+1} - x_k|^2` with the a
/// priori bounds they must stay under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub horizon: usize,
    /// Final partial sum of `|W_k(x_k) - x_k|^2`.
    pub cutter_sum: f64,
    /// Final partial sum of `|x_{k+1} - x_k|^2`.
    pub step_sum: f64,
    pub cutter_bound: f64,
    pub step_bound: f64,
    /// `R = |x_0 - z| + sum_k eps_k`.
    pub radius: f64,
    /// Largest observed `|W_k(x_k) - x_k|`; never exceeds `R`.
    pub cutter_step_max: f64,
    pub margin: f64,
    pub nondecreasing: bool,
    pub bounded: bool,
}

/// Summability monitor for a trace with perturbation bounds `e_bounds[k] >=
/// |e_k|`.
///
/// With `eps_k = alpha_k e_bounds[k]`, `R = |x_0 - z| + sum eps_k` and the
/// relaxation margin `m` (so `alpha_k in [m, 2 - m]`):
///
/// ```text
/// sum |W_k x_k - x_k|^2  <= (|x_0 - z|^2 + 2 R sum eps_k + sum eps_k^2) / m^2
/// sum |x_{k+1} - x_k|^2  <= (2 - m)^2 (B_W + sum e_k^2 + 2 R sum e_k)
/// ```
///
/// The second line uses `|W_k x - x| <= |x - z| <= R`, valid for cutters.
pub fn summability_monitor(trace: &Trace, z: &Point, e_bounds: &[f64]) -> Result<SummabilityReport> {
    let xs = trace.iterates()?;
    let steps: Vec<_> = trace.rows.iter().filter_map(|r| r.step.as_ref()).collect();
    if e_bounds.len() < steps.len() {
        return Err(Error::InvalidParameter(format!(
            "{} perturbation bounds for {} steps",
            e_bounds.len(),
            steps.len()
        )));
    }
    let margin = steps
        .iter()
        .map(|s| s.alpha.min(2.0 - s.alpha))
        .fold(1.0, f64::min);
    let mut eps_sum = 0.0;
    let mut eps_sq = 0.0;
    let mut e_sum = 0.0;
    let mut e_sq = 0.0;
    for (s, e) in steps.iter().zip(e_bounds) {
        let eps = s.alpha * e;
        eps_sum += eps;
        eps_sq += eps * eps;
        e_sum += e;
        e_sq += e * e;
    }
    let d0 = xs[0].distance(z);
    let radius = d0 + eps_sum;
    let cutter_bound = (d0 * d0 + 2.0 * radius * eps_sum + eps_sq) / (margin * margin);
    let step_bound = (2.0 - margin).powi(2) * (cutter_bound + e_sq + 2.0 * radius * e_sum);

    let mut cutter_sum = 0.0;
    let mut step_sum = 0.0;
    let mut nondecreasing = true;
    let mut cutter_step_max: f64 = 0.0;
    for s in &steps {
        let prev = step_sum;
        cutter_sum += s.cutter_average_step * s.cutter_average_step;
        step_sum += s.step_norm * s.step_norm;
        nondecreasing &= step_sum >= prev;
        cutter_step_max = cutter_step_max.max(s.cutter_average_step);
    }
    let bounded = cutter_sum <= cutter_bound * (1.0 + 1e-12) + 1e-12
        && step_sum <= step_bound * (1.0 + 1e-12) + 1e-12;
    Ok(SummabilityReport {
        horizon: steps.len(),
        cutter_sum,
        step_sum,
        cutter_bound,
        step_bound,
        radius,
        cutter_step_max,
        margin,
        nondecreasing,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pt;

    #[test]
    fn constant_sequence_is_fejer() {
        let x = pt![1, 2];
        let xs = vec![&x, &x, &x];
        let v = qf_check_sequence(&xs, &pt![0, 0], QfKind::Fm, &[]).unwrap();
        assert!(v.pass);
        assert_eq!(v.steps, 2);
    }

    #[test]
    fn adversarial_sequence_fails() {
        let (a, b, c) = (pt![0], pt![2], pt![0]);
        let xs = vec![&a, &b, &c];
        let v = qf_check_sequence(&xs, &pt![0], QfKind::Fm, &[]).unwrap();
        assert!(!v.pass);
        assert_eq!(v.first_violation, Some(0));
        let v = qf_check_sequence(&xs, &pt![0], QfKind::Qf1, &[2.0, 0.0]).unwrap();
        assert!(v.pass);
        assert_eq!(v.eps_partial_sum, 2.0);
        let v = qf_check_sequence(&xs, &pt![0], QfKind::Qf2, &[3.9, 0.0]).unwrap();
        assert_eq!(v.first_violation, Some(0));
    }

    #[test]
    fn qf1_pass_implies_qf2_with_derived_epsilons() {
        let pts = [pt![3, 0], pt![2.5, 1], pt![2, 0.5], pt![2.2, 0.1]];
        let xs: Vec<&Point> = pts.iter().collect();
        let z = pt![0, 0];
        let eps: Vec<f64> = xs.windows(2).map(|w| (w[1].norm() - w[0].norm()).max(0.0)).collect();
        assert!(qf_check_sequence(&xs, &z, QfKind::Qf1, &eps).unwrap().pass);
        let eps2 = qf2_epsilons(&xs, &z, &eps);
        assert!(qf_check_sequence(&xs, &z, QfKind::Qf2, &eps2).unwrap().pass);
    }
}
