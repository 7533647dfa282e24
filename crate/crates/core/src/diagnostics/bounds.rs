//! Sampling checks of the erosion ratio inequality and the subgradient lower
//! bound near a Slater point.

use serde::{Deserialize, Serialize};

use super::oracle::{oracle_estimate, OracleConfig};
use crate::error::{Error, Result};
use crate::geometry::{ConvexFunction, ConvexSet, Erosion, Point};
use crate::sampling::SeededRng;

/// Slack for both probes.
pub const BOUND_SLACK: f64 = 1e-10;

/// What the erosion probe runs on.
#[derive(Clone, Debug, PartialEq)]
pub enum ErosionTarget {
    /// A set `C` with `f` its signed distance; sublevel sets are erosions.
    Set(ConvexSet),
    /// A convex function; `witness` must satisfy `f(witness) + r <= 0` for the
    /// largest `r` used.
    Function { f: ConvexFunction, witness: Point },
}

/// How `(eps, r)` is chosen per sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonSampling {
    Fixed { eps: f64, r: f64 },
    /// `r ~ U(0, r_max]`, then `eps ~ U[0, r]`.
    Uniform { r_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub pass: bool,
    /// Samples where the inequality applies.
    pub checked: usize,
    pub violations: usize,
    pub worst_excess: f64,
}

impl BoundVerdict {
    fn new() -> Self {
        BoundVerdict { pass: true, checked: 0, violations: 0, worst_excess: f64::NEG_INFINITY }
    }

    fn record(&mut self, excess: f64) {
        self.checked += 1;
        self.worst_excess = self.worst_excess.max(excess);
        if excess > BOUND_SLACK {
            self.violations += 1;
            self.pass = false;
        }
    }

    fn finish(mut self) -> Self {
        if self.checked == 0 {
            self.worst_excess = 0.0;
        }
        self
    }
}

fn distance_to(set: &ConvexSet, x: &Point, oracle: &OracleConfig) -> Result<f64> {
    match set.closed_form() {
        Some(s) => s.distance(x),
        None => Ok(oracle_estimate(std::slice::from_ref(set), x, oracle)?.distance),
    }
}

impl ErosionTarget {
    fn dim(&self) -> usize {
        match self {
            ErosionTarget::Set(s) => s.dim(),
            ErosionTarget::Function { f, .. } => f.dim(),
        }
    }

    fn value(&self, x: &Point) -> Result<f64> {
        match self {
            ErosionTarget::Set(s) => s.signed_distance(x),
            ErosionTarget::Function { f, .. } => f.value(x),
        }
    }

    /// `S_{f + shift}`.
    fn sublevel(&self, shift: f64) -> Result<ConvexSet> {
        match self {
            ErosionTarget::Set(s) => match s.erode(shift)? {
                Erosion::Set(e) => Ok(e),
                Erosion::Empty { .. } => Err(Error::EmptyErodedSet),
            },
            ErosionTarget::Function { f, .. } => f.sublevel_set(shift)?.ok_or(Error::EmptyErodedSet),
        }
    }

    fn check_nonempty(&self, r: f64) -> Result<()> {
        match self {
            ErosionTarget::Set(_) => self.sublevel(r).map(|_| ()),
            ErosionTarget::Function { f, witness } => {
                if f.value(witness)? + r <= 0.0 {
                    Ok(())
                } else {
                    Err(Error::EmptyErodedSet)
                }
            }
        }
    }
}

/// Samples `x` uniformly in `B(center, radius)` and checks
/// `d(x, S_{f+eps}) / (f(x) + eps) <= d(x, S_{f+r}) / (f(x) + r)` whenever
/// `f(x) > 0`.
pub fn erosion_inequality_probe(
    target: &ErosionTarget,
    sampling: EpsilonSampling,
    center: &Point,
    radius: f64,
    samples: usize,
    seed: u64,
    oracle: &OracleConfig,
) -> Result<BoundVerdict> {
    center.check_dim(target.dim())?;
    let r_max = match sampling {
        EpsilonSampling::Fixed { eps, r } => {
            if !(eps >= 0.0 && eps <= r && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("need 0 <= eps <= r, got {eps}, {r}")));
            }
            r
        }
        EpsilonSampling::Uniform { r_max } => {
            if !(r_max > 0.0 && r_max.is_finite()) {
                return Err(Error::InvalidParameter(format!("r_max = {r_max} must be > 0")));
            }
            r_max
        }
    };
    target.check_nonempty(r_max)?;
    let mut rng = SeededRng::new(seed);
    let mut verdict = BoundVerdict::new();
    for _ in 0..samples {
        let x = rng.in_ball(center, radius);
        let (eps, r) = match sampling {
            EpsilonSampling::Fixed { eps, r } => (eps, r),
            EpsilonSampling::Uniform { r_max } => {
                let r = r_max * (1.0 - rng.uniform());
                (r * rng.uniform(), r)
            }
        };
        let fx = target.value(&x)?;
        if fx.is_nan() || fx <= 0.0 {
            continue;
        }
        let lhs = distance_to(&target.sublevel(eps)?, &x, oracle)? / (fx + eps);
        let rhs = distance_to(&target.sublevel(r)?, &x, oracle)? / (fx + r);
        verdict.record(lhs - rhs);
    }
    Ok(verdict.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgradientBoundReport {
    /// `-f(z) / r`
    pub lambda: f64,
    /// Smallest `|g_k(x)|` among checked pairs.
    pub min_norm: Option<f64>,
    pub verdict: BoundVerdict,
}

/// Checks `|g_k(x)| >= -f(z)/r` for sampled `x` in `B(z, r)` with `f_k(x) >= 0`,
/// where `f = max_k f_k`. Half the samples are drawn on the sphere, where the
/// constraint is most likely active; `extra` points are checked as well.
pub fn subgradient_bound_probe(
    functions: &[ConvexFunction],
    z: &Point,
    r: f64,
    samples: usize,
    seed: u64,
    extra: &[Point],
) -> Result<SubgradientBoundReport> {
    if functions.is_empty() {
        return Err(Error::InvalidParameter("empty function family".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {r} must be > 0")));
    }
    let mut fz = f64::NEG_INFINITY;
    for f in functions {
        f.validate()?;
        fz = fz.max(f.value(z)?);
    }
    if fz >= 0.0 {
        return Err(Error::SlaterViolation(fz));
    }
    let lambda = -fz / r;
    let mut rng = SeededRng::new(seed);
    let mut points: Vec<Point> = (0..samples)
        .map(|i| if i % 2 == 0 { rng.in_ball(z, r) } else { rng.on_sphere(z, r) })
        .collect();
    for p in extra {
        p.check_dim(z.dim())?;
        if p.distance(z) > r * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter("extra point outside B(z, r)".into()));
        }
        points.push(p.clone());
    }
    let mut verdict = BoundVerdict::new();
    let mut min_norm: Option<f64> = None;
    for x in &points {
        for f in functions {
            let (v, g) = f.value_and_subgradient(x)?;
            if v >= 0.0 {
                let n = g.norm();
                min_norm = Some(min_norm.map_or(n, |m: f64| m.min(n)));
                verdict.record(lambda - n);
            }
        }
    }
    Ok(SubgradientBoundReport { lambda, min_norm, verdict: verdict.finish() })
}

/// A seeded affine family `f_k(x) = <a_k, x> + b_k` with `z = 0` a Slater point,
/// and a radius `r` large enough for some `f_k` to reach zero inside `B(0, r)`.
pub fn random_affine_family(m: usize, n: usize, seed: u64) -> Result<(Vec<ConvexFunction>, Point, f64)> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("affine family needs m, n >= 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut fs = Vec::with_capacity(m);
    let mut reach: f64 = 0.0;
    for _ in 0..m {
        let a = rng.unit_vector(n).scale(rng.uniform_in(0.5, 2.0));
        let b = -rng.uniform_in(0.5, 2.0);
        reach = reach.max(-b / a.norm());
        fs.push(ConvexFunction::Affine { a, b });
    }
    Ok((fs, Point::zeros(n), 1.5 * reach))
}
