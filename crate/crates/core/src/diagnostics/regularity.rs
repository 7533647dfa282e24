//! Empirical linear-regularity constants for set families and operators.

use serde::{Deserialize, Serialize};

use super::oracle::{oracle_estimate, OracleConfig};
use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point};
use crate::operators::Cutter;
use crate::sampling::SeededRng;

/// Allowed excess of an empirical ratio over the theoretical constant.
pub const KAPPA_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub family: String,
    pub sample_center: Point,
    pub sample_radius: f64,
    pub interior_center: Point,
    pub interior_radius: f64,
    /// `1 + 2 sup_{x in S} |x - z0| / r`
    pub kappa_theory: f64,
    /// Largest observed `d(x, ∩ C_i) / max_i d(x, C_i)`.
    pub kappa_empirical: f64,
    pub samples: usize,
    /// Number of index sets probed (the full family included).
    pub subfamilies: usize,
    pub violations: usize,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RegularityProbe<'a> {
    pub family: &'a [ConvexSet],
    /// Index of the set allowed to contain only the centre of the ball.
    pub j0: Option<usize>,
    pub interior_center: &'a Point,
    pub interior_radius: f64,
    pub sample_center: &'a Point,
    pub sample_radius: f64,
    pub samples: usize,
    /// Random subfamilies probed besides the full family.
    pub subfamilies: usize,
    pub seed: u64,
    pub oracle: OracleConfig,
}

fn describe(family: &[ConvexSet]) -> String {
    let mut kinds: Vec<&str> = family.iter().map(|s| s.kind_name()).collect();
    kinds.dedup();
    format!("{} sets ({})", family.len(), kinds.join(", "))
}

/// Sampling check of `B(z0, r) ⊂ C_j` for `j != j0` and `z0 ∈ C_{j0}`.
fn check_hypothesis(p: &RegularityProbe, rng: &mut SeededRng) -> Result<()> {
    let z0 = p.interior_center;
    let n = z0.dim();
    let tol = 1e-12 * (1.0 + z0.norm() + p.interior_radius);
    let mut probes: Vec<Point> = Vec::with_capacity(2 * n + 64);
    for j in 0..n {
        probes.push(z0.axpy(p.interior_radius, &Point::unit(n, j)));
        probes.push(z0.axpy(-p.interior_radius, &Point::unit(n, j)));
    }
    for _ in 0..64 {
        probes.push(rng.on_sphere(z0, p.interior_radius));
    }
    for (j, set) in p.family.iter().enumerate() {
        if Some(j) == p.j0 {
            if set.distance(z0)? > tol {
                return Err(Error::HypothesisViolation(format!("z0 is not in set {}", j + 1)));
            }
            continue;
        }
        for q in &probes {
            if set.distance(q)? > tol {
                return Err(Error::HypothesisViolation(format!(
                    "interior ball is not inside set {}",
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn regularity_probe(p: &RegularityProbe) -> Result<RegularityReport> {
    if p.family.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    if !(p.interior_radius > 0.0 && p.sample_radius >= 0.0) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let n = p.interior_center.dim();
    p.sample_center.check_dim(n)?;
    for s in p.family {
        s.validate()?;
        if s.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
        }
    }
    let mut rng = SeededRng::new(p.seed);
    check_hypothesis(p, &mut rng)?;

    let sup = p.sample_center.distance(p.interior_center) + p.sample_radius;
    let kappa_theory = 1.0 + 2.0 * sup / p.interior_radius;

    let m = p.family.len();
    let mut index_sets: Vec<Vec<usize>> = vec![(0..m).collect()];
    for _ in 0..p.subfamilies {
        let mut pick: Vec<usize> = (0..m).filter(|_| rng.uniform() < 0.5).collect();
        if pick.is_empty() {
            pick.push(rng.below(m));
        }
        index_sets.push(pick);
    }

    let mut kappa_empirical: f64 = 1.0;
    let mut violations = 0;
    for _ in 0..p.samples {
        let x = rng.in_ball(p.sample_center, p.sample_radius);
        let mut dists = Vec::with_capacity(m);
        for s in p.family {
            dists.push(s.distance(&x)?);
        }
        for idx in &index_sets {
            let worst = idx.iter().map(|&i| dists[i]).fold(0.0, f64::max);
            let sets: Vec<ConvexSet> = idx.iter().map(|&i| p.family[i].clone()).collect();
            let est = oracle_estimate(&sets, &x, &p.oracle)?;
            let ratio = if worst == 0.0 { 1.0 } else { est.distance / worst };
            kappa_empirical = kappa_empirical.max(ratio);
            // the oracle distance carries an absolute error of about its tolerance
            if est.distance - p.oracle.tolerance > (kappa_theory + KAPPA_SLACK) * worst {
                violations += 1;
            }
        }
    }
    Ok(RegularityReport {
        family: describe(p.family),
        sample_center: p.sample_center.clone(),
        sample_radius: p.sample_radius,
        interior_center: p.interior_center.clone(),
        interior_radius: p.interior_radius,
        kappa_theory,
        kappa_empirical,
        samples: p.samples,
        subfamilies: index_sets.len(),
        violations,
        pass: violations == 0,
    })
}

/// Empirical `min |T x - x| / d(x, Fix T)` over samples in `B(center, radius)`
/// outside `Fix T`. `None` when every sample is a fixed point.
pub fn operator_regularity_estimate(
    cutter: &Cutter,
    center: &Point,
    radius: f64,
    samples: usize,
    seed: u64,
    oracle: &OracleConfig,
) -> Result<Option<f64>> {
    let fix = cutter.fixed_point_set()?;
    let mut rng = SeededRng::new(seed);
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let x = rng.in_ball(center, radius);
        if cutter.fixes(&x)? {
            continue;
        }
        let d = match fix.closed_form() {
            Some(s) => s.distance(&x)?,
            None => oracle_estimate(std::slice::from_ref(&fix), &x, oracle)?.distance,
        };
        if d == 0.0 {
            continue;
        }
        let ratio = cutter.apply(&x)?.distance(&x) / d;
        best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
    }
    Ok(best)
}
