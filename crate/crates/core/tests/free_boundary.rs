mod common;

use common::{defaults, reference, solve_uniform};
use convbond_core::fb::*;
use convbond_core::transforms::{to_transformed, TransformedSurface};
use convbond_core::Error;

#[test]
fn empty_exercise_region_propagates() {
    let s = solve_uniform(&defaults(), 100);
    assert_eq!(extract_free_boundary(&s), Err(Error::EmptyExerciseRegion));
    assert_eq!(t_star_gap_report(&s), Err(Error::EmptyExerciseRegion));
}

#[test]
fn touching_time_measurements() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let r = t_star_gap_report(&s).unwrap();
    assert!(r.gap > 0.0 && r.gap_in_steps > 2.0);
    assert_eq!(r.vx_at_maturity, 0.0);
    let h = s.grid().max_dx();
    assert!(r.vx_deviation_before_t_star <= 5.0 * h / p.x_max() * p.gamma(), "{r:?}");
    assert!(r.holder_quotient.is_finite());
}

#[test]
fn lower_bound_holds_for_a_small_coupon_sweep() {
    let base = reference();
    for c in [0.0, 1.0, 4.0] {
        let p = base.with_coupon(c).unwrap();
        let s = solve_uniform(&p, 120);
        let curve = extract_free_boundary(&s).unwrap();
        assert!(curve.lower_bound_margin(&p) >= -curve.h, "c = {c}");
    }
}

#[test]
fn non_degeneracy_is_positive_and_guarded() {
    let ts = to_transformed(&solve_uniform(&reference(), 200));
    let r = non_degeneracy_check(&ts, 8).unwrap();
    assert!(r.c0 > 0.0 && r.evaluations > 0, "{r:?}");
    assert!(matches!(
        non_degeneracy_check(&ts, 100_000),
        Err(Error::InsufficientSamples { .. })
    ));
}

#[test]
fn growth_separates_quadratic_from_linear() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let curve = extract_free_boundary(&s).unwrap();
    let ts = to_transformed(&s);
    let real = quadratic_growth_check(&ts, p.maturity() - curve.t_star);
    assert!(real.quadratic() && real.c0 > 0.0, "{real:?}");

    let g = ts.grid().clone();
    let linear: Vec<Vec<f64>> = g
        .t()
        .iter()
        .map(|_| g.x().iter().map(|&y| p.gamma() * y).collect())
        .collect();
    let fake = TransformedSurface::from_u(p, g.clone(), linear, s.tol());
    let r = quadratic_growth_check(&fake, 2.5);
    assert!(!r.quadratic(), "{r:?}");
    let table = doubling_table(&fake, (0.0, 2.5));
    assert!(!doubling_check(&table).unwrap().holds());

    let zero = TransformedSurface::from_u(p, g.clone(), vec![vec![0.0; g.nx()]; g.nt()], s.tol());
    assert_eq!(quadratic_growth_check(&zero, 2.5).c0, 0.0);
}

#[test]
fn doubling_table_is_nested_at_the_touching_point() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let curve = extract_free_boundary(&s).unwrap();
    let ts = to_transformed(&s);
    let report = doubling_check(&doubling_table(&ts, (0.0, p.maturity() - curve.t_star))).unwrap();
    assert!(report.nested);
    assert!(report.holds(), "{report:?}");
}

#[test]
fn tangency_needs_points_near_the_touching_point() {
    let s = solve_uniform(&reference(), 32);
    let curve = extract_free_boundary(&s).unwrap();
    assert!(matches!(tangency_check(&curve), Err(Error::InsufficientResolution(_))));
}
