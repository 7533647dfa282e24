//! Closed convex sets with exact projections.
//!
//! Every variant answers membership with zero tolerance: a point belongs to the
//! set iff each defining residual evaluates to `<= 0` in floating point. The
//! projections onto halfspaces and balls are snapped onto the feasible side by a
//! few ulps when rounding would otherwise leave them a hair outside, so that
//! `contains(project(x))` holds exactly for those variants.

use serde::{Deserialize, Serialize};

use super::point::Point;
use crate::error::{Error, Result};

/// Affine subspace `{x : <a_j, x> = b_j for all rows j}`.
///
/// An orthonormal basis of the row space (with the matching right-hand side) is
/// computed once at construction and used for projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineSubspace {
    rows: Vec<Point>,
    rhs: Vec<f64>,
    basis: Vec<Point>,
    basis_rhs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineRepr {
    rows: Vec<Point>,
    rhs: Vec<f64>,
}

impl AffineSubspace {
    pub fn new(rows: Vec<Point>, rhs: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSet("affine subspace needs at least one row".into()));
        }
        if rows.len() != rhs.len() {
            return Err(Error::InvalidSet(format!(
                "affine subspace has {} rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        if rhs.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSet("non-finite right-hand side".into()));
        }
        let dim = rows[0].dim();
        for r in &rows {
            r.check_dim(dim)?;
        }
        // Modified Gram-Schmidt with one re-orthogonalisation pass.
        let mut basis: Vec<Point> = Vec::new();
        let mut basis_rhs = Vec::new();
        for (row, &b) in rows.iter().zip(&rhs) {
            let scale = row.norm();
            if scale == 0.0 {
                if b != 0.0 {
                    return Err(Error::InvalidSet("zero row with nonzero rhs".into()));
                }
                continue;
            }
            let mut v = row.clone();
            let mut c = b;
            for _ in 0..2 {
                for (q, qc) in basis.iter().zip(&basis_rhs) {
                    let t = q.dot(&v);
                    v.axpy_mut(-t, q);
                    c -= t * qc;
                }
            }
            let nv = v.norm();
            if nv <= 1e-12 * scale {
                // Linearly dependent row: consistent only if the rhs agrees.
                if c.abs() > 1e-9 * (1.0 + b.abs()) {
                    return Err(Error::InvalidSet("inconsistent affine constraints".into()));
                }
                continue;
            }
            basis.push(v.scale(1.0 / nv));
            basis_rhs.push(c / nv);
        }
        if basis.is_empty() {
            return Err(Error::InvalidSet("affine subspace rows are all zero".into()));
        }
        Ok(AffineSubspace { rows, rhs, basis, basis_rhs })
    }

    pub fn rows(&self) -> &[Point] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.rows[0].dim()
    }

    /// Codimension of the subspace (rank of the row system).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn project(&self, x: &Point) -> Point {
        let mut p = x.clone();
        for (q, c) in self.basis.iter().zip(&self.basis_rhs) {
            let t = q.dot(&p) - c;
            p.axpy_mut(-t, q);
        }
        p
    }

    fn contains(&self, x: &Point) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(a, b)| {
            let r = a.dot(x) - b;
            r <= 0.0 && -r <= 0.0
        })
    }
}

impl TryFrom<AffineRepr> for AffineSubspace {
    type Error = Error;

    fn try_from(r: AffineRepr) -> Result<Self> {
        AffineSubspace::new(r.rows, r.rhs)
    }
}

impl From<AffineSubspace> for AffineRepr {
    fn from(a: AffineSubspace) -> Self {
        AffineRepr { rows: a.rows, rhs: a.rhs }
    }
}

/// A closed convex subset of `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "SetRepr")]
pub enum ConvexSet {
    /// `{x : <a, x> <= b}`
    Halfspace { a: Point, b: f64 },
    /// `{x : <a, x> = b}`
    Hyperplane { a: Point, b: f64 },
    /// `{x : |x - center| <= radius}`
    Ball { center: Point, radius: f64 },
    /// `{x : lo <= x <= hi}` componentwise
    Box { lo: Point, hi: Point },
    AffineSubspace(AffineSubspace),
    WholeSpace { dim: usize },
    Intersection { sets: Vec<ConvexSet> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SetRepr {
    Halfspace { a: Point, b: f64 },
    Hyperplane { a: Point, b: f64 },
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
    AffineSubspace { rows: Vec<Point>, rhs: Vec<f64> },
    WholeSpace { dim: usize },
    Intersection { sets: Vec<ConvexSet> },
}

impl TryFrom<SetRepr> for ConvexSet {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<Self> {
        let set = match r {
            SetRepr::Halfspace { a, b } => ConvexSet::Halfspace { a, b },
            SetRepr::Hyperplane { a, b } => ConvexSet::Hyperplane { a, b },
            SetRepr::Ball { center, radius } => ConvexSet::Ball { center, radius },
            SetRepr::Box { lo, hi } => ConvexSet::Box { lo, hi },
            SetRepr::AffineSubspace { rows, rhs } => {
                ConvexSet::AffineSubspace(AffineSubspace::new(rows, rhs)?)
            }
            SetRepr::WholeSpace { dim } => ConvexSet::WholeSpace { dim },
            SetRepr::Intersection { sets } => ConvexSet::Intersection { sets },
        };
        set.validate()?;
        Ok(set)
    }
}

/// Result of eroding a set: either another convex set or the empty set.
#[derive(Clone, Debug, PartialEq)]
pub enum Erosion {
    Set(ConvexSet),
    /// `dimension_deficient` marks sets with empty interior (hyperplanes,
    /// proper affine subspaces), whose erosion is empty for every `eps > 0`.
    Empty { dimension_deficient: bool },
}

impl Erosion {
    pub fn is_empty(&self) -> bool {
        matches!(self, Erosion::Empty { .. })
    }

    pub fn set(&self) -> Option<&ConvexSet> {
        match self {
            Erosion::Set(s) => Some(s),
            Erosion::Empty { .. } => None,
        }
    }
}

fn snap_halfspace(a: &Point, b: f64, a_norm2: f64, mut p: Point) -> Point {
    // The nominal projection can land a few ulps outside; walk back along -a.
    let mut factor = 1.0;
    for _ in 0..64 {
        let r = a.dot(&p) - b;
        if r <= 0.0 {
            return p;
        }
        let floor = f64::EPSILON * (b.abs() + 1.0);
        p.axpy_mut(-factor * r.max(floor) / a_norm2, a);
        factor *= 2.0;
    }
    p
}

fn snap_ball(center: &Point, radius: f64, x: &Point) -> Point {
    let dir = x.sub(center);
    let dn = dir.norm();
    let mut s = radius / dn;
    for _ in 0..64 {
        let p = center.axpy(s, &dir);
        if p.distance(center) <= radius {
            return p;
        }
        s *= 1.0 - 4.0 * f64::EPSILON;
    }
    center.clone()
}

impl ConvexSet {
    pub fn halfspace(a: Point, b: f64) -> Result<Self> {
        let s = ConvexSet::Halfspace { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn hyperplane(a: Point, b: f64) -> Result<Self> {
        let s = ConvexSet::Hyperplane { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let s = ConvexSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        let s = ConvexSet::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn whole_space(dim: usize) -> Result<Self> {
        let s = ConvexSet::WholeSpace { dim };
        s.validate()?;
        Ok(s)
    }

    pub fn intersection(sets: Vec<ConvexSet>) -> Result<Self> {
        let s = ConvexSet::Intersection { sets };
        s.validate()?;
        Ok(s)
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Halfspace { a, b } | ConvexSet::Hyperplane { a, b } => {
                if a.norm_squared() == 0.0 {
                    return Err(Error::InvalidSet("normal vector must be nonzero".into()));
                }
                if !b.is_finite() {
                    return Err(Error::InvalidSet("offset must be finite".into()));
                }
            }
            ConvexSet::Ball { radius, .. } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidSet(format!("ball radius {radius} must be >= 0")));
                }
            }
            ConvexSet::Box { lo, hi } => {
                hi.check_dim(lo.dim())?;
                if lo.coords().iter().zip(hi.coords()).any(|(l, h)| l > h) {
                    return Err(Error::InvalidSet("box requires lo <= hi componentwise".into()));
                }
            }
            ConvexSet::AffineSubspace(_) => {}
            ConvexSet::WholeSpace { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidSet("whole space needs dim >= 1".into()));
                }
            }
            ConvexSet::Intersection { sets } => {
                let first = sets
                    .first()
                    .ok_or_else(|| Error::InvalidSet("intersection list is empty".into()))?;
                let dim = first.dim();
                for s in sets {
                    s.validate()?;
                    if s.dim() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace { a, .. } | ConvexSet::Hyperplane { a, .. } => a.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Box { lo, .. } => lo.dim(),
            ConvexSet::AffineSubspace(s) => s.dim(),
            ConvexSet::WholeSpace { dim } => *dim,
            ConvexSet::Intersection { sets } => sets[0].dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexSet::Halfspace { .. } => "halfspace",
            ConvexSet::Hyperplane { .. } => "hyperplane",
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::Box { .. } => "box",
            ConvexSet::AffineSubspace(_) => "affine_subspace",
            ConvexSet::WholeSpace { .. } => "whole_space",
            ConvexSet::Intersection { .. } => "intersection",
        }
    }

    /// Equivalent single set with a closed-form projection, if one exists.
    ///
    /// Intersections collapse when they reduce to one member, to boxes only,
    /// or to hyperplanes/affine subspaces only. Whole-space members are dropped.
    pub fn closed_form(&self) -> Option<ConvexSet> {
        let ConvexSet::Intersection { sets } = self else {
            return Some(self.clone());
        };
        let mut flat = Vec::new();
        flatten(sets, &mut flat);
        let dim = self.dim();
        let members: Vec<&ConvexSet> =
            flat.into_iter().filter(|s| !matches!(s, ConvexSet::WholeSpace { .. })).collect();
        match members.as_slice() {
            [] => Some(ConvexSet::WholeSpace { dim }),
            [one] => Some((*one).clone()),
            _ if members.iter().all(|s| matches!(s, ConvexSet::Box { .. })) => {
                let mut lo = vec![f64::NEG_INFINITY; dim];
                let mut hi = vec![f64::INFINITY; dim];
                for s in &members {
                    if let ConvexSet::Box { lo: l, hi: h } = s {
                        for j in 0..dim {
                            lo[j] = lo[j].max(l[j]);
                            hi[j] = hi[j].min(h[j]);
                        }
                    }
                }
                let lo = Point::new(lo).ok()?;
                let hi = Point::new(hi).ok()?;
                ConvexSet::boxed(lo, hi).ok()
            }
            _ if members.iter().all(|s| {
                matches!(s, ConvexSet::Hyperplane { .. } | ConvexSet::AffineSubspace(_))
            }) =>
            {
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for s in &members {
                    match s {
                        ConvexSet::Hyperplane { a, b } => {
                            rows.push(a.clone());
                            rhs.push(*b);
                        }
                        ConvexSet::AffineSubspace(af) => {
                            rows.extend(af.rows().iter().cloned());
                            rhs.extend_from_slice(af.rhs());
                        }
                        _ => unreachable!(),
                    }
                }
                AffineSubspace::new(rows, rhs).ok().map(ConvexSet::AffineSubspace)
            }
            _ => None,
        }
    }

    /// Metric projection onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::Halfspace { a, b } => {
                let r = a.dot(x) - b;
                if r <= 0.0 {
                    x.clone()
                } else {
                    let n2 = a.norm_squared();
                    snap_halfspace(a, *b, n2, x.axpy(-r / n2, a))
                }
            }
            ConvexSet::Hyperplane { a, b } => {
                let r = a.dot(x) - b;
                if r == 0.0 {
                    x.clone()
                } else {
                    x.axpy(-r / a.norm_squared(), a)
                }
            }
            ConvexSet::Ball { center, radius } => {
                if x.distance(center) <= *radius {
                    x.clone()
                } else {
                    snap_ball(center, *radius, x)
                }
            }
            ConvexSet::Box { lo, hi } => {
                let mut p = x.clone();
                for (j, c) in p.coords_mut().iter_mut().enumerate() {
                    *c = c.clamp(lo[j], hi[j]);
                }
                p
            }
            ConvexSet::AffineSubspace(s) => {
                if s.contains(x) {
                    x.clone()
                } else {
                    s.project(x)
                }
            }
            ConvexSet::WholeSpace { .. } => x.clone(),
            ConvexSet::Intersection { .. } => match self.closed_form() {
                Some(s) => s.project(x)?,
                None => {
                    return Err(Error::UnsupportedProjection(
                        "intersection without a closed-form projection".into(),
                    ))
                }
            },
        })
    }

    /// Euclidean distance `d(x, C)`.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::Halfspace { a, b } => (a.dot(x) - b).max(0.0) / a.norm(),
            ConvexSet::Hyperplane { a, b } => (a.dot(x) - b).abs() / a.norm(),
            ConvexSet::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
            ConvexSet::Box { lo, hi } => x
                .coords()
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let e = (lo[j] - c).max(c - hi[j]).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            ConvexSet::AffineSubspace(s) => {
                if s.contains(x) {
                    0.0
                } else {
                    x.distance(&s.project(x))
                }
            }
            ConvexSet::WholeSpace { .. } => 0.0,
            ConvexSet::Intersection { .. } => match self.closed_form() {
                Some(s) => s.distance(x)?,
                None => {
                    return Err(Error::UnsupportedProjection(
                        "intersection without a closed-form distance".into(),
                    ))
                }
            },
        })
    }

    /// Signed distance `d(x, C) - d(x, R^n \ C)`.
    pub fn signed_distance(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        match self {
            ConvexSet::Halfspace { a, b } => Ok((a.dot(x) - b) / a.norm()),
            ConvexSet::Ball { center, radius } => Ok(x.distance(center) - radius),
            ConvexSet::Box { lo, hi } => {
                if self.contains(x)? {
                    let depth = x
                        .coords()
                        .iter()
                        .enumerate()
                        .map(|(j, &c)| (c - lo[j]).min(hi[j] - c))
                        .fold(f64::INFINITY, f64::min);
                    Ok(-depth)
                } else {
                    self.distance(x)
                }
            }
            // Empty interior: the complement is dense, so inside points sit at 0.
            ConvexSet::Hyperplane { .. } | ConvexSet::AffineSubspace(_) => self.distance(x),
            ConvexSet::WholeSpace { .. } => {
                Err(Error::UnsupportedSignedDistance("the whole space".into()))
            }
            ConvexSet::Intersection { .. } => {
                Err(Error::UnsupportedSignedDistance("intersections".into()))
            }
        }
    }

    /// Zero-tolerance membership.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &Point) -> bool {
        match self {
            ConvexSet::Halfspace { a, b } => a.dot(x) - b <= 0.0,
            ConvexSet::Hyperplane { a, b } => {
                let r = a.dot(x) - b;
                r <= 0.0 && -r <= 0.0
            }
            ConvexSet::Ball { center, radius } => x.distance(center) - radius <= 0.0,
            ConvexSet::Box { lo, hi } => x
                .coords()
                .iter()
                .enumerate()
                .all(|(j, &c)| lo[j] - c <= 0.0 && c - hi[j] <= 0.0),
            ConvexSet::AffineSubspace(s) => s.contains(x),
            ConvexSet::WholeSpace { .. } => true,
            ConvexSet::Intersection { sets } => sets.iter().all(|s| s.contains_unchecked(x)),
        }
    }

    /// The `eps`-erosion `{x in C : B(x, eps) ⊂ C}`.
    pub fn erode(&self, eps: f64) -> Result<Erosion> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("erosion radius {eps} must be >= 0")));
        }
        if eps == 0.0 {
            return Ok(Erosion::Set(self.clone()));
        }
        Ok(match self {
            ConvexSet::Halfspace { a, b } => {
                Erosion::Set(ConvexSet::Halfspace { a: a.clone(), b: b - eps * a.norm() })
            }
            ConvexSet::Ball { center, radius } => {
                if eps > *radius {
                    Erosion::Empty { dimension_deficient: false }
                } else {
                    Erosion::Set(ConvexSet::Ball { center: center.clone(), radius: radius - eps })
                }
            }
            ConvexSet::Box { lo, hi } => {
                let lo2: Vec<f64> = lo.coords().iter().map(|l| l + eps).collect();
                let hi2: Vec<f64> = hi.coords().iter().map(|h| h - eps).collect();
                if lo2.iter().zip(&hi2).any(|(l, h)| l > h) {
                    Erosion::Empty { dimension_deficient: false }
                } else {
                    Erosion::Set(ConvexSet::Box {
                        lo: Point::from_vec_unchecked(lo2),
                        hi: Point::from_vec_unchecked(hi2),
                    })
                }
            }
            ConvexSet::Hyperplane { .. } | ConvexSet::AffineSubspace(_) => {
                Erosion::Empty { dimension_deficient: true }
            }
            ConvexSet::WholeSpace { .. } => Erosion::Set(self.clone()),
            ConvexSet::Intersection { sets } => {
                let mut eroded = Vec::with_capacity(sets.len());
                for s in sets {
                    match s.erode(eps)? {
                        Erosion::Set(e) => eroded.push(e),
                        empty => return Ok(empty),
                    }
                }
                Erosion::Set(ConvexSet::Intersection { sets: eroded })
            }
        })
    }

    /// Flattened list of the basic (non-intersection) sets making up `self`.
    pub fn members(&self) -> Vec<&ConvexSet> {
        let mut out = Vec::new();
        match self {
            ConvexSet::Intersection { sets } => flatten(sets, &mut out),
            s => out.push(s),
        }
        out
    }
}

fn flatten<'a>(sets: &'a [ConvexSet], out: &mut Vec<&'a ConvexSet>) {
    for s in sets {
        match s {
            ConvexSet::Intersection { sets } => flatten(sets, out),
            other => out.push(other),
        }
    }
}
