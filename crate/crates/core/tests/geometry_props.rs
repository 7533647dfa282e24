use feasikit::geometry::{ConvexFunction, ConvexSet, Erosion, Point};
use feasikit::pt;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-10.0..10.0f64, n).prop_map(|v| Point::new(v).unwrap())
}

fn direction(n: usize) -> impl Strategy<Value = Point> {
    point(n).prop_filter("nonzero normal", |p| p.norm() > 1e-3)
}

fn set(n: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (direction(n), -5.0..5.0f64).prop_map(|(a, b)| ConvexSet::halfspace(a, b).unwrap()),
        (direction(n), -5.0..5.0f64).prop_map(|(a, b)| ConvexSet::hyperplane(a, b).unwrap()),
        (point(n), 0.0..6.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (point(n), prop::collection::vec(0.0..5.0f64, n)).prop_map(|(lo, w)| {
            let hi = Point::new(lo.coords().iter().zip(&w).map(|(l, w)| l + w).collect()).unwrap();
            ConvexSet::boxed(lo, hi).unwrap()
        }),
    ]
}

fn set_and_points(k: usize) -> impl Strategy<Value = (ConvexSet, Vec<Point>)> {
    (1usize..6).prop_flat_map(move |n| (set(n), prop::collection::vec(point(n), k)))
}

proptest! {
    #[test]
    fn projection_lands_in_the_set((c, xs) in set_and_points(1)) {
        let p = c.project(&xs[0]).unwrap();
        prop_assert!(c.distance(&p).unwrap() <= TOL * (1.0 + p.norm()));
    }

    #[test]
    fn projection_is_idempotent((c, xs) in set_and_points(1)) {
        let p = c.project(&xs[0]).unwrap();
        let pp = c.project(&p).unwrap();
        prop_assert!(p.distance(&pp) <= TOL * (1.0 + p.norm()));
    }

    #[test]
    fn projection_is_firmly_nonexpansive((c, xs) in set_and_points(2)) {
        let (px, py) = (c.project(&xs[0]).unwrap(), c.project(&xs[1]).unwrap());
        let lhs = px.distance(&py).powi(2);
        let rhs = px.sub(&py).dot(&xs[0].sub(&xs[1]));
        prop_assert!(lhs <= rhs + TOL * (1.0 + rhs.abs()));
    }

    #[test]
    fn projection_satisfies_the_obtuse_angle_condition((c, xs) in set_and_points(2)) {
        let p = c.project(&xs[0]).unwrap();
        let y = c.project(&xs[1]).unwrap();
        let ip = xs[0].sub(&p).dot(&y.sub(&p));
        prop_assert!(ip <= TOL * (1.0 + xs[0].norm() + y.norm()).powi(2));
    }

    #[test]
    fn distance_is_the_projection_gap((c, xs) in set_and_points(1)) {
        let d = c.distance(&xs[0]).unwrap();
        let gap = xs[0].distance(&c.project(&xs[0]).unwrap());
        prop_assert!((d - gap).abs() <= TOL * (1.0 + d));
    }

    #[test]
    fn signed_distance_agrees_outside((c, xs) in set_and_points(1)) {
        let d = c.distance(&xs[0]).unwrap();
        if d > 0.0 {
            let sd = c.signed_distance(&xs[0]).unwrap();
            prop_assert!((sd - d).abs() <= TOL * (1.0 + d));
        }
    }

    #[test]
    fn eroded_points_keep_their_ball((c, xs) in set_and_points(2), eps in 0.0..2.0f64) {
        if let Erosion::Set(e) = c.erode(eps).unwrap() {
            let p = e.project(&xs[0]).unwrap();
            let dir = xs[1].sub(&p);
            if dir.norm() > 1e-6 {
                // p + eps * u stays in C for any unit u
                let q = p.axpy(eps / dir.norm(), &dir);
                prop_assert!(c.distance(&q).unwrap() <= TOL * (1.0 + q.norm()));
            }
            prop_assert!(c.signed_distance(&p).unwrap() <= -eps + TOL * (1.0 + p.norm()));
        }
    }

    #[test]
    fn box_intersection_projects_like_the_overlap(
        (lo1, lo2, x) in (1usize..5).prop_flat_map(|n| (point(n), point(n), point(n)))
    ) {
        let n = x.dim();
        let hi1 = lo1.add(&Point::new(vec![8.0; n]).unwrap());
        let hi2 = lo2.add(&Point::new(vec![8.0; n]).unwrap());
        let lo = Point::new(lo1.coords().iter().zip(lo2.coords()).map(|(a, b)| a.max(*b)).collect()).unwrap();
        let hi = Point::new(hi1.coords().iter().zip(hi2.coords()).map(|(a, b)| a.min(*b)).collect()).unwrap();
        prop_assume!(lo.coords().iter().zip(hi.coords()).all(|(l, h)| l <= h));
        let both = ConvexSet::intersection(vec![
            ConvexSet::boxed(lo1, hi1).unwrap(),
            ConvexSet::boxed(lo2, hi2).unwrap(),
        ]).unwrap();
        let overlap = ConvexSet::boxed(lo, hi).unwrap();
        prop_assert_eq!(both.project(&x).unwrap(), overlap.project(&x).unwrap());
    }

    #[test]
    fn subgradient_inequality_holds(
        (c, x, y) in (1usize..5).prop_flat_map(|n| (point(n), point(n), point(n))),
        r in 0.0..4.0f64,
    ) {
        for f in [
            ConvexFunction::NormResidual { center: c.clone(), radius: r },
            ConvexFunction::SupNormResidual { center: c.clone(), radius: r },
        ] {
            let (fx, g) = f.value_and_subgradient(&x).unwrap();
            let fy = f.value(&y).unwrap();
            prop_assert!(fy >= fx + g.dot(&y.sub(&x)) - TOL * (1.0 + fx.abs() + fy.abs()));
        }
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(ConvexSet::halfspace(pt![0, 0], 1.0).is_err());
    assert!(ConvexSet::ball(pt![0, 0], -1.0).is_err());
    assert!(ConvexSet::boxed(pt![1, 0], pt![0, 1]).is_err());
    assert!(Point::new(vec![]).is_err());
}
