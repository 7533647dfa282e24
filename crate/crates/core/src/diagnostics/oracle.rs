//! Distance to an intersection of convex sets by Dykstra's algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleMethod {
    /// Converges to the projection onto the intersection.
    Dykstra,
    /// Plain cyclic projections; converges to some point of the
    /// intersection, so the distance is only an upper bound.
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_method")]
    pub method: OracleMethod,
    /// Maximum number of full sweeps over the sets.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_method() -> OracleMethod {
    OracleMethod::Dykstra
}
fn default_budget() -> usize {
    100_000
}
fn default_tolerance() -> f64 {
    1e-10
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            method: default_method(),
            budget: default_budget(),
            tolerance: default_tolerance(),
        }
    }
}

impl OracleConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidParameter("oracle budget must be >= 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter("oracle tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of an oracle call, returned even when the budget runs out.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleEstimate {
    pub distance: f64,
    pub point: Point,
    pub sweeps: usize,
    pub converged: bool,
}

/// Runs the oracle and reports the estimate together with a convergence flag.
pub fn oracle_estimate(sets: &[ConvexSet], x: &Point, cfg: &OracleConfig) -> Result<OracleEstimate> {
    cfg.validate()?;
    let mut basic: Vec<ConvexSet> = Vec::new();
    for s in sets {
        s.validate()?;
        x.check_dim(s.dim())?;
        for m in s.members() {
            if !matches!(m, ConvexSet::WholeSpace { .. }) {
                basic.push(m.clone());
            }
        }
    }
    match basic.as_slice() {
        [] => {
            return Ok(OracleEstimate { distance: 0.0, point: x.clone(), sweeps: 0, converged: true })
        }
        [one] => {
            let p = one.project(x)?;
            return Ok(OracleEstimate { distance: one.distance(x)?, point: p, sweeps: 1, converged: true });
        }
        _ => {}
    }
    if basic.iter().all(|s| s.contains_unchecked(x)) {
        return Ok(OracleEstimate { distance: 0.0, point: x.clone(), sweeps: 0, converged: true });
    }
    match cfg.method {
        OracleMethod::Dykstra => dykstra(&basic, x, cfg),
        OracleMethod::Alternating => alternating(&basic, x, cfg),
    }
}

/// `d(x, ∩ sets)` to within the configured tolerance.
pub fn oracle_distance(sets: &[ConvexSet], x: &Point, cfg: &OracleConfig) -> Result<f64> {
    let est = oracle_estimate(sets, x, cfg)?;
    if est.converged {
        Ok(est.distance)
    } else {
        Err(Error::OracleBudgetExhausted { sweeps: est.sweeps, estimate: est.distance })
    }
}

fn max_set_distance(sets: &[ConvexSet], y: &Point) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in sets {
        worst = worst.max(s.distance(y)?);
    }
    Ok(worst)
}

fn dykstra(sets: &[ConvexSet], x: &Point, cfg: &OracleConfig) -> Result<OracleEstimate> {
    let mut y = x.clone();
    let mut incr = vec![Point::zeros(x.dim()); sets.len()];
    let tol2 = cfg.tolerance * cfg.tolerance;
    for sweep in 1..=cfg.budget {
        let mut change = 0.0;
        for (s, p) in sets.iter().zip(incr.iter_mut()) {
            let shifted = y.add(p);
            let next = s.project(&shifted)?;
            let new_p = shifted.sub(&next);
            change += new_p.sub(p).norm_squared();
            *p = new_p;
            y = next;
        }
        if change <= tol2 && max_set_distance(sets, &y)? <= cfg.tolerance {
            return Ok(OracleEstimate { distance: x.distance(&y), point: y, sweeps: sweep, converged: true });
        }
    }
    Ok(OracleEstimate { distance: x.distance(&y), point: y, sweeps: cfg.budget, converged: false })
}

fn alternating(sets: &[ConvexSet], x: &Point, cfg: &OracleConfig) -> Result<OracleEstimate> {
    let mut y = x.clone();
    for sweep in 1..=cfg.budget {
        let start = y.clone();
        for s in sets {
            y = s.project(&y)?;
        }
        if start.distance(&y) <= cfg.tolerance && max_set_distance(sets, &y)? <= cfg.tolerance {
            return Ok(OracleEstimate { distance: x.distance(&y), point: y, sweeps: sweep, converged: true });
        }
    }
    Ok(OracleEstimate { distance: x.distance(&y), point: y, sweeps: cfg.budget, converged: false })
}
