use serde::{Deserialize, Serialize};

use super::point::Point;
use super::set::ConvexSet;
use crate::error::{Error, Result};

/// One affine piece `x -> <a, x> + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece {
    pub a: Point,
    pub b: f64,
}

impl AffinePiece {
    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        self.a.dot(x) + self.b
    }
}

/// A finite convex function on `R^n` with a deterministic subgradient selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexFunction {
    /// `<a, x> + b`
    Affine { a: Point, b: f64 },
    /// `max_j <a_j, x> + b_j`; ties go to the first maximising piece.
    MaxOfAffine { pieces: Vec<AffinePiece> },
    /// `|x - center| - radius`
    NormResidual { center: Point, radius: f64 },
    /// `|x - center|_inf - radius`
    SupNormResidual { center: Point, radius: f64 },
}

impl ConvexFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexFunction::Affine { b, .. } => {
                if !b.is_finite() {
                    return Err(Error::InvalidFunction("affine offset must be finite".into()));
                }
            }
            ConvexFunction::MaxOfAffine { pieces } => {
                let first = pieces
                    .first()
                    .ok_or_else(|| Error::InvalidFunction("max of affine needs pieces".into()))?;
                for p in pieces {
                    p.a.check_dim(first.a.dim())?;
                    if !p.b.is_finite() {
                        return Err(Error::InvalidFunction("piece offset must be finite".into()));
                    }
                }
            }
            ConvexFunction::NormResidual { radius, .. }
            | ConvexFunction::SupNormResidual { radius, .. } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidFunction(format!("radius {radius} must be >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Affine { a, .. } => a.dim(),
            ConvexFunction::MaxOfAffine { pieces } => pieces[0].a.dim(),
            ConvexFunction::NormResidual { center, .. }
            | ConvexFunction::SupNormResidual { center, .. } => center.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexFunction::Affine { .. } => "affine",
            ConvexFunction::MaxOfAffine { .. } => "max_of_affine",
            ConvexFunction::NormResidual { .. } => "norm_residual",
            ConvexFunction::SupNormResidual { .. } => "sup_norm_residual",
        }
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &Point) -> f64 {
        match self {
            ConvexFunction::Affine { a, b } => a.dot(x) + b,
            ConvexFunction::MaxOfAffine { pieces } => {
                pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            ConvexFunction::NormResidual { center, radius } => x.distance(center) - radius,
            ConvexFunction::SupNormResidual { center, radius } => {
                x.sub(center).norm_inf() - radius
            }
        }
    }

    /// The selected subgradient at `x`.
    pub fn subgradient(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        Ok(self.value_and_subgradient_unchecked(x).1)
    }

    /// Value and selected subgradient in one pass.
    pub fn value_and_subgradient(&self, x: &Point) -> Result<(f64, Point)> {
        x.check_dim(self.dim())?;
        Ok(self.value_and_subgradient_unchecked(x))
    }

    pub(crate) fn value_and_subgradient_unchecked(&self, x: &Point) -> (f64, Point) {
        match self {
            ConvexFunction::Affine { a, b } => (a.dot(x) + b, a.clone()),
            ConvexFunction::MaxOfAffine { pieces } => {
                let mut best = 0;
                let mut best_val = pieces[0].eval(x);
                for (j, p) in pieces.iter().enumerate().skip(1) {
                    let v = p.eval(x);
                    // strict: ties keep the earlier index
                    if v > best_val {
                        best = j;
                        best_val = v;
                    }
                }
                (best_val, pieces[best].a.clone())
            }
            ConvexFunction::NormResidual { center, radius } => {
                let d = x.sub(center);
                let n = d.norm();
                let g = if n > 0.0 { d.scale(1.0 / n) } else { Point::zeros(x.dim()) };
                (n - radius, g)
            }
            ConvexFunction::SupNormResidual { center, radius } => {
                let d = x.sub(center);
                let mut best = 0;
                let mut best_abs = d[0].abs();
                for j in 1..d.dim() {
                    if d[j].abs() > best_abs {
                        best = j;
                        best_abs = d[j].abs();
                    }
                }
                let mut g = Point::zeros(x.dim());
                if best_abs > 0.0 {
                    g.coords_mut()[best] = d[best].signum();
                }
                (best_abs - radius, g)
            }
        }
    }

    /// The sublevel set `{x : f(x) + shift <= 0}` as a convex set, if it is
    /// nonempty. Shifting by `eps` gives the set `S_{f + eps}`.
    pub fn sublevel_set(&self, shift: f64) -> Result<Option<ConvexSet>> {
        Ok(match self {
            ConvexFunction::Affine { a, b } => {
                if a.norm_squared() == 0.0 {
                    return Ok(if b + shift <= 0.0 {
                        Some(ConvexSet::whole_space(a.dim())?)
                    } else {
                        None
                    });
                }
                Some(ConvexSet::halfspace(a.clone(), -b - shift)?)
            }
            ConvexFunction::MaxOfAffine { pieces } => {
                let mut sets = Vec::with_capacity(pieces.len());
                for p in pieces {
                    if p.a.norm_squared() == 0.0 {
                        if p.b + shift > 0.0 {
                            return Ok(None);
                        }
                        continue;
                    }
                    sets.push(ConvexSet::halfspace(p.a.clone(), -p.b - shift)?);
                }
                if sets.is_empty() {
                    Some(ConvexSet::whole_space(self.dim())?)
                } else {
                    Some(ConvexSet::intersection(sets)?)
                }
            }
            ConvexFunction::NormResidual { center, radius } => {
                let r = radius - shift;
                if r < 0.0 {
                    None
                } else {
                    Some(ConvexSet::ball(center.clone(), r)?)
                }
            }
            ConvexFunction::SupNormResidual { center, radius } => {
                let r = radius - shift;
                if r < 0.0 {
                    None
                } else {
                    let lo = center.coords().iter().map(|c| c - r).collect();
                    let hi = center.coords().iter().map(|c| c + r).collect();
                    Some(ConvexSet::boxed(Point::new(lo)?, Point::new(hi)?)?)
                }
            }
        })
    }
}
