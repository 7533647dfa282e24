//! Seeded random instances that are consistent by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point};
use crate::operators::Constraint;
use crate::sampling::SeededRng;
use crate::solver::{InteriorBall, Mode, Problem};

/// Half-width of the cube `x0` is drawn from.
pub const START_HALF_WIDTH: f64 = 10.0;

/// The outer set `Q`, centred at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QSpec {
    Whole,
    /// `[lo, hi]^n`
    Box { lo: f64, hi: f64 },
    Ball { radius: f64 },
}

impl QSpec {
    fn build(&self, n: usize) -> Result<ConvexSet> {
        match *self {
            QSpec::Whole => ConvexSet::whole_space(n),
            QSpec::Box { lo, hi } => ConvexSet::boxed(Point::new(vec![lo; n])?, Point::new(vec![hi; n])?),
            QSpec::Ball { radius } => ConvexSet::ball(Point::zeros(n), radius),
        }
    }
}

fn default_q() -> QSpec {
    QSpec::Whole
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Halfspaces with unit normals whose intersection contains
    /// `B(z*, interior_radius)`.
    RandomHalfspaces {
        m: usize,
        n: usize,
        interior_radius: f64,
        #[serde(default = "default_q")]
        q: QSpec,
    },
    /// Balls that each contain `B(z*, interior_radius)`.
    RandomBalls {
        m: usize,
        n: usize,
        interior_radius: f64,
        #[serde(default = "default_q")]
        q: QSpec,
    },
    /// Hyperplanes through a common point; `C` has empty interior.
    AffineOnly {
        m: usize,
        n: usize,
        #[serde(default = "default_q")]
        q: QSpec,
    },
}

/// A generated problem with its common point and starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub problem: Problem,
    /// The drawn point `z*` in `C ∩ Q`.
    pub reference: Point,
    pub x0: Point,
}

impl GeneratorSpec {
    pub fn m(&self) -> usize {
        match *self {
            GeneratorSpec::RandomHalfspaces { m, .. }
            | GeneratorSpec::RandomBalls { m, .. }
            | GeneratorSpec::AffineOnly { m, .. } => m,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GeneratorSpec::RandomHalfspaces { n, .. }
            | GeneratorSpec::RandomBalls { n, .. }
            | GeneratorSpec::AffineOnly { n, .. } => n,
        }
    }

    fn q(&self) -> &QSpec {
        match self {
            GeneratorSpec::RandomHalfspaces { q, .. }
            | GeneratorSpec::RandomBalls { q, .. }
            | GeneratorSpec::AffineOnly { q, .. } => q,
        }
    }

    fn interior_radius(&self) -> f64 {
        match *self {
            GeneratorSpec::RandomHalfspaces { interior_radius, .. }
            | GeneratorSpec::RandomBalls { interior_radius, .. } => interior_radius,
            GeneratorSpec::AffineOnly { .. } => 0.0,
        }
    }

    pub fn validate(&self, mode: Mode) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentSpec(m));
        if self.m() == 0 || self.n() == 0 {
            return bad("generator needs m, n >= 1".into());
        }
        let r = self.interior_radius();
        if !(r.is_finite() && r >= 0.0) {
            return bad(format!("interior_radius = {r} must be >= 0"));
        }
        if r == 0.0 && mode == Mode::CertifiedFinite {
            return bad("CERTIFIED_FINITE needs an interior ball (interior_radius > 0)".into());
        }
        match *self.q() {
            QSpec::Box { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                bad(format!("Q box needs lo <= hi, got [{lo}, {hi}]"))
            }
            QSpec::Ball { radius } if !(radius.is_finite() && radius >= 0.0) => {
                bad(format!("Q ball radius {radius} must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// Draws `z*` uniformly in `[-1, 1]^n` (projected onto `Q`), then the
    /// constraints, then `x0` uniformly in `[-10, 10]^n` (projected onto `Q`).
    pub fn generate(&self, seed: u64) -> Result<Generated> {
        self.validate(Mode::Exploratory)?;
        let n = self.n();
        let q = self.q().build(n)?;
        let mut rng = SeededRng::new(seed);
        let z = q.project(&rng.in_cube(&Point::zeros(n), 1.0))?;
        let radius = self.interior_radius();
        let mut constraints = Vec::with_capacity(self.m());
        for _ in 0..self.m() {
            let set = match self {
                GeneratorSpec::RandomHalfspaces { .. } => {
                    let a = rng.unit_vector(n);
                    let b = a.dot(&z) + radius * a.norm();
                    ConvexSet::halfspace(a, b)?
                }
                GeneratorSpec::RandomBalls { .. } => {
                    let offset = rng.uniform_in(1.0, 5.0);
                    let center = z.axpy(offset, &rng.unit_vector(n));
                    let r = center.distance(&z) + radius + rng.uniform_in(0.0, 0.5);
                    ConvexSet::ball(center, r)?
                }
                GeneratorSpec::AffineOnly { .. } => {
                    let a = rng.unit_vector(n);
                    let b = a.dot(&z);
                    ConvexSet::hyperplane(a, b)?
                }
            };
            constraints.push(Constraint::projection(set));
        }
        let x0 = q.project(&rng.in_cube(&Point::zeros(n), START_HALF_WIDTH))?;
        let interior = (radius > 0.0).then(|| InteriorBall { center: z.clone(), radius });
        let problem = Problem::new(constraints, q, interior)?;
        Ok(Generated { problem, reference: z, x0 })
    }
}
