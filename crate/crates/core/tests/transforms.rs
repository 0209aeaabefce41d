mod common;

use common::{reference, solve_uniform};
use convbond_core::discretization::{Grid, SpacingKind};
use convbond_core::fb::extract_free_boundary;
use convbond_core::model::{ModelParams, RawParams};
use convbond_core::transforms::*;
use convbond_core::Error;
use proptest::prelude::*;

const K: f64 = 100.0;

#[test]
fn round_trip_recovers_the_surface_exactly() {
    let s = solve_uniform(&reference(), 100);
    let back = from_transformed(&to_transformed(&s));
    assert_eq!(back.values(), s.values());
    assert_eq!(back.grid(), s.grid());
}

#[test]
fn boundary_and_initial_slices() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let ts = to_transformed(&s);
    let g = ts.grid();
    let u = ts.u();
    for (m, &tau) in g.t().iter().enumerate() {
        assert!(u[m][0].abs() <= 1e-8 * K);
        // The far edge y = K/gamma is the zero-stock bond.
        let edge = ts.reflected()[m][g.nx() - 1];
        let exact = p.boundary_value_x0(p.maturity() - tau).unwrap();
        assert!((edge - exact).abs() <= s.tol());
    }
    for (j, &y) in g.x().iter().enumerate() {
        assert!((u[0][j] - p.gamma() * y).abs() <= 1e-8 * K);
    }
    assert!(u.iter().flatten().all(|&v| v >= -1e-8 * K));
}

#[test]
fn transformed_slopes_stay_in_unit_band() {
    let p = reference();
    let ts = to_transformed(&solve_uniform(&p, 150));
    let g = ts.grid();
    for row in ts.u() {
        for j in 0..g.nx() - 1 {
            let slope = (row[j + 1] - row[j]) / g.dx(j);
            assert!(slope >= -1e-8 && slope <= p.gamma() + 1e-8, "{slope}");
        }
    }
}

#[test]
fn positivity_sets_map_index_for_index() {
    let s = solve_uniform(&reference(), 150);
    let ts = to_transformed(&s);
    let (nx, nt) = (s.grid().nx(), s.grid().nt());
    for m in 0..nt {
        for j in 0..nx {
            let original = s.obstacle_gap(nt - 1 - m, nx - 1 - j) > ts.delta_fb();
            assert_eq!(ts.positive(m, j), original, "node ({m}, {j})");
        }
    }
}

#[test]
fn touching_point_maps_to_the_time_axis() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let curve = extract_free_boundary(&s).unwrap();
    let ts = to_transformed(&s);
    let g = ts.grid();
    // First tau slice whose node next to y = 0 is in the contact set.
    let m = (0..g.nt()).find(|&m| !ts.positive(m, 1)).unwrap();
    let dt = g.max_dt();
    assert!((g.t()[m] - (p.maturity() - curve.t_star)).abs() <= dt);
}

#[test]
fn transformed_equation_residual_is_small_and_one_sided() {
    let p = reference();
    let s = solve_uniform(&p, 200);
    let ts = to_transformed(&s);
    let d = transformed_residual(&ts, 0.05 * p.maturity());
    let h = s.grid().max_dx() / p.x_max();
    let dt = s.grid().max_dt() / p.maturity();
    assert!(d.max_abs <= 5.0 * (h + dt) * p.q() * K, "{d:?}");
    assert!(d.exercise_min.unwrap() >= -s.tol());
    assert!(d.interface_nodes > 0);
}

#[test]
fn residual_flags_the_constant_face_surface() {
    let p = reference();
    let s = solve_uniform(&p, 64);
    let g = s.grid().reflected();
    let u: Vec<Vec<f64>> = g
        .t()
        .iter()
        .map(|_| g.x().iter().map(|&y| p.gamma() * y).collect())
        .collect();
    let ts = TransformedSurface::from_u(p, g, u, s.tol());
    let d = transformed_residual(&ts, 0.0);
    assert!(d.max_abs >= 0.5 * (p.r() * K - p.c()), "{d:?}");
}

/// Mesh with steps of 1/16 on [0, 4] x [0, 4] and an arbitrary smooth `u`.
fn lattice_surface() -> TransformedSurface<f64> {
    let p = ModelParams::validate(&RawParams {
        sigma: 0.3,
        r: 0.05,
        q: 0.03,
        c: 0.05,
        gamma: 1.0,
        face_value: 4.0,
        maturity: 4.0,
    })
    .unwrap();
    let nodes: Vec<f64> = (0..=64).map(|k| k as f64 / 16.0).collect();
    let g = Grid::from_nodes(nodes.clone(), nodes, SpacingKind::Uniform).unwrap();
    let u = g
        .t()
        .iter()
        .map(|&t| g.x().iter().map(|&y| 1.0 + (y * 1.3).sin() * (t * 0.7).cos()).collect())
        .collect();
    TransformedSurface::from_u(p, g, u, 1e-10)
}

#[test]
fn identity_scaling_reproduces_mesh_values() {
    let ts = lattice_surface();
    let patch = rescale(&ts, (2.0, 2.0), 1.0, NormalizerKind::SSquared, ParabolicFrame::unit()).unwrap();
    assert_eq!(patch.normalizer, 1.0);
    for k in 0..PATCH_NODES {
        for j in 0..PATCH_NODES {
            // Lattice node (j, k) is mesh node (16 + j, 16 + k).
            assert_eq!(patch.values[k][j], ts.u()[16 + k][16 + j]);
        }
    }
    assert_eq!(patch.center_value(), ts.u()[32][32]);
}

#[test]
fn sup_normalizer_scales_the_maximum_to_one() {
    let ts = lattice_surface();
    let patch = rescale(&ts, (2.0, 2.0), 0.5, NormalizerKind::Sup, ParabolicFrame::unit()).unwrap();
    assert_eq!(patch.max_value(), 1.0);
    assert_eq!(patch.center_value(), ts.u()[32][32] / patch.normalizer);
}

#[test]
fn patches_must_fit_and_carry_mass() {
    let ts = lattice_surface();
    let frame = ParabolicFrame::unit();
    assert_eq!(
        rescale(&ts, (0.5, 2.0), 1.0, NormalizerKind::Sup, frame),
        Err(Error::PatchOutOfDomain)
    );
    assert_eq!(
        rescale(&ts, (2.0, 3.5), 1.0, NormalizerKind::Sup, frame),
        Err(Error::PatchOutOfDomain)
    );
    let zero = TransformedSurface::from_u(
        *ts.params(),
        ts.grid().clone(),
        vec![vec![0.0; ts.grid().nx()]; ts.grid().nt()],
        1e-10,
    );
    assert_eq!(
        rescale(&zero, (2.0, 2.0), 1.0, NormalizerKind::Sup, frame),
        Err(Error::DegeneratePatch)
    );
}

#[test]
fn scaling_identity_holds_in_the_continuation_region() {
    let p = reference();
    let frame = ParabolicFrame::natural(&p);
    let s = 0.1;
    for n in [200, 400] {
        let ts = to_transformed(&solve_uniform(&p, n));
        for kind in [NormalizerKind::Sup, NormalizerKind::SSquared] {
            let patch = rescale(&ts, (50.0, 2.5), s, kind, frame).unwrap();
            let gap = scaling_identity_gap(&ts, &patch);
            let h = ts.grid().max_dx() / frame.length;
            assert!(gap.relative() <= 10.0 * (h / s).powi(2), "n={n} {kind:?} {gap:?}");
        }
    }
}

proptest! {
    #[test]
    fn reflection_is_an_involution(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 5), 1..8)) {
        prop_assert_eq!(reflect_values(&reflect_values(&rows)), rows);
    }
}
