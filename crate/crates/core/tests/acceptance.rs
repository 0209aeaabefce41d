//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::{defaults, reference};
use convbond_core::discretization::{Grid, SpacingKind};
use convbond_core::fb::*;
use convbond_core::model::{ModelParams, RawParams};
use convbond_core::oracle::{tree_price, TreeSpec};
use convbond_core::solver::*;
use convbond_core::transforms::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: f64 = 100.0;
const RANDOM_SETS: usize = 20;
const SEED: u64 = 0x5eed_c0b0;
/// Random sets that must have a nonempty exercise region.
const MIN_CONVERTING: usize = 5;
/// Refinement ladder for the reference configuration: h and dt halve exactly.
const LEVELS: [usize; 3] = [201, 401, 801];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn solve_n(p: &ModelParams<f64>, n: usize) -> PriceSurface<f64> {
    let g = Grid::build(p, n, n, SpacingKind::Uniform).unwrap();
    solve(p, &g, &SolverConfig::default()).unwrap()
}

/// Alternates broad draws with draws from a low-volatility, high-rate region
/// where conversion before maturity is common, so the lower-bound check sees
/// real free boundaries.
fn random_sets() -> Vec<ModelParams<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..RANDOM_SETS)
        .map(|k| {
            let raw = if k % 2 == 0 {
                let r = rng.gen_range(0.02..0.10);
                let q = rng.gen_range(0.02..0.12);
                RawParams {
                    sigma: rng.gen_range(0.15..0.40),
                    r,
                    q,
                    c: rng.gen_range(0.0..0.9) * K * r.min(q),
                    gamma: rng.gen_range(0.5..2.0),
                    face_value: K,
                    maturity: rng.gen_range(1.0..6.0),
                }
            } else {
                let r = rng.gen_range(0.06..0.12);
                let q = rng.gen_range(0.03..0.12);
                RawParams {
                    sigma: rng.gen_range(0.10..0.25),
                    r,
                    q,
                    c: rng.gen_range(0.0..0.3) * K * q,
                    gamma: rng.gen_range(0.5..2.0),
                    face_value: K,
                    maturity: rng.gen_range(2.0..6.0),
                }
            };
            ModelParams::validate(&raw).unwrap()
        })
        .collect()
}

fn origin_closed_form() -> Outcome {
    let p = defaults();
    let start = Instant::now();
    let s = solve_n(&p, 200);
    let elapsed = start.elapsed().as_secs_f64();
    let err = s
        .grid()
        .t()
        .iter()
        .enumerate()
        .map(|(n, &t)| (s.value(n, 0) - p.boundary_value_x0(t).unwrap()).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        err <= 1e-8 * K && elapsed < 5.0,
        format!("max |V(0,t) - closed form| = {err:.2e} (limit {:.0e}), solve {elapsed:.2}s", 1e-8 * K),
    )
}

fn obstacle_bounds(ref_surface: &PriceSurface<f64>) -> Outcome {
    let d = solve_n(&defaults(), 200);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in [("defaults", &d), ("reference", ref_surface)] {
        let b = bounds_report(s);
        pass &= b.lower_excess <= 1e-10 * K && b.upper_excess <= 1e-10 * K && b.interior_upper_gap < 0.0;
        parts.push(format!(
            "{name}: lower excess {:.1e}, upper excess {:.1e}, max interior V-K {:.3e}",
            b.lower_excess, b.upper_excess, b.interior_upper_gap
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn monotonicity_and_lower_bound(sets: &[PriceSurface<f64>]) -> (Outcome, Outcome) {
    let mut mono_pass = true;
    let mut worst_inc = f64::INFINITY;
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::NEG_INFINITY;
    let mut lb_pass = true;
    let mut with_region = 0;
    let mut worst_margin = f64::INFINITY;
    for s in sets {
        let p = s.params();
        let m = monotonicity_report(s);
        mono_pass &= m.holds(p.gamma(), 1e-8 * K, 1e-8);
        worst_inc = worst_inc.min(m.min_time_increment);
        worst_lo = worst_lo.min(m.min_slope);
        worst_hi = worst_hi.max(m.max_slope - p.gamma());
        if let Ok(curve) = extract_free_boundary(s) {
            with_region += 1;
            let margin = curve.lower_bound_margin(p) / curve.h;
            worst_margin = worst_margin.min(margin);
            lb_pass &= margin >= -1.0;
        }
    }
    lb_pass &= with_region >= MIN_CONVERTING;
    (
        Outcome::new(
            mono_pass,
            format!(
                "{} sets: min dt*V_t {worst_inc:.1e}, min V_x {worst_lo:.1e}, max V_x - gamma {worst_hi:.1e}",
                sets.len()
            ),
        ),
        Outcome::new(
            lb_pass,
            format!(
                "{with_region}/{} sets convert somewhere; min (b - c/(q gamma))/h = {worst_margin:.2}",
                sets.len()
            ),
        ),
    )
}

fn touching_time(curves: &[FreeBoundaryCurve<f64>]) -> Outcome {
    let p = reference();
    let finest = curves.last().unwrap();
    let gap_steps = (p.maturity() - finest.t_star) / finest.dt;
    let drifts: Vec<f64> = curves
        .windows(2)
        .map(|w| (w[1].t_star - w[0].t_star).abs() / w[1].dt)
        .collect();
    let t_stars: Vec<String> = curves.iter().map(|c| format!("{:.4}", c.t_star)).collect();
    Outcome::new(
        gap_steps > 2.0 && drifts.iter().all(|&d| d <= 4.0),
        format!(
            "t* = [{}], T - t* = {gap_steps:.1} dt, drift/dt_fine = {drifts:.2?}",
            t_stars.join(", ")
        ),
    )
}

fn parabola_curve(nt: usize, h: f64) -> FreeBoundaryCurve<f64> {
    // American-put-like detachment: t* - t = d^2 / 50.
    let (x_max, t_star) = (100.0, 2.5);
    let pts: Vec<(f64, f64)> = (0..nt)
        .map(|n| t_star * n as f64 / nt as f64)
        .map(|t| (t, x_max - (50.0 * (t_star - t)).sqrt()))
        .collect();
    FreeBoundaryCurve::from_points(&pts, t_star, x_max, 5.0, h)
}

fn tangency(curves: &[FreeBoundaryCurve<f64>]) -> Outcome {
    let n = curves.len();
    let coarse = tangency_check(&curves[n - 2]);
    let fine = tangency_check(&curves[n - 1]);
    let (coarse, fine) = match (coarse, fine) {
        (Ok(c), Ok(f)) => (c, f),
        (c, f) => {
            return Outcome::new(false, format!("tangency unavailable: {:?} / {:?}", c.err(), f.err()));
        }
    };
    let cmp = compare_tangency(&coarse, &fine);
    let ms: Vec<String> = fine.samples.iter().map(|s| format!("{:.2}", s.m)).collect();

    let ctrl_coarse = tangency_check(&parabola_curve(400, 0.25)).unwrap();
    let ctrl_fine = tangency_check(&parabola_curve(800, 0.125)).unwrap();
    let ctrl = compare_tangency(&ctrl_coarse, &ctrl_fine);
    Outcome::new(
        cmp.pass() && !ctrl.pass(),
        format!(
            "m_k = [{}], decreasing {}, min m ratio {:.3} (limit {TANGENCY_SHRINK_RATIO}); parabola control decreasing {} ratio {:.3} -> {}",
            ms.join(", "),
            fine.eventually_decreasing,
            cmp.ratio,
            ctrl.fine_decreasing,
            ctrl.ratio,
            if ctrl.pass() { "pass (unexpected)" } else { "fail (expected)" }
        ),
    )
}

fn growth(surfaces: &[PriceSurface<f64>], curves: &[FreeBoundaryCurve<f64>]) -> Outcome {
    let p = reference();
    let mut c0s = Vec::new();
    let mut big_c0s = Vec::new();
    let mut doubling_ok = true;
    let mut quadratic = true;
    let mut rows = 0;
    for (s, c) in surfaces.iter().zip(curves) {
        let ts = to_transformed(s);
        match non_degeneracy_check(&ts, 8) {
            Ok(r) => c0s.push(r.c0),
            Err(e) => return Outcome::new(false, format!("non-degeneracy: {e}")),
        }
        let touching = (0.0, p.maturity() - c.t_star);
        let g = quadratic_growth_check(&ts, touching.1);
        quadratic &= g.quadratic();
        big_c0s.push(g.c0);
        match doubling_check(&doubling_table(&ts, touching)) {
            Ok(d) => {
                doubling_ok &= d.holds() && d.nested;
                rows = d.rows.len();
            }
            Err(e) => return Outcome::new(false, format!("doubling: {e}")),
        }
    }
    let c0_stable = c0s.iter().all(|&c| c > 0.0) && c0s.windows(2).all(|w| stable(w[0], w[1]));
    let big_stable = big_c0s.windows(2).all(|w| stable(w[0], w[1]));
    Outcome::new(
        c0_stable && big_stable && quadratic && doubling_ok,
        format!(
            "c0 = {c0s:.1?}, C0 = {big_c0s:.1?}, quadratic slopes {quadratic}, doubling holds {doubling_ok} ({rows} checked rows at finest level)"
        ),
    )
}

fn oracle_agreement() -> Outcome {
    let p = defaults();
    let start = Instant::now();
    let s = solve_n(&p, 400);
    let mut worst = 0.0f64;
    for spot in [70.0, 75.0, 80.0, 85.0, 90.0] {
        let tree = tree_price(&TreeSpec::new(p, 2000, spot).unwrap());
        worst = worst.max((s.interpolate_x(0, spot) - tree).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 0.0025 * K && elapsed < 60.0,
        format!("max |PDE - tree| over 5 spots = {worst:.4} (limit {:.2}), {elapsed:.2}s", 0.0025 * K),
    )
}

fn transform_identities(surfaces: &[PriceSurface<f64>]) -> Outcome {
    let p = reference();
    let mut pass = true;
    let ts = to_transformed(&surfaces[0]);
    let g = ts.grid();
    let edge = ts.u().iter().map(|row| row[0].abs()).fold(0.0, f64::max);
    let initial = g
        .x()
        .iter()
        .zip(&ts.u()[0])
        .map(|(&y, &u)| (u - p.gamma() * y).abs())
        .fold(0.0, f64::max);
    pass &= edge <= 1e-8 * K && initial <= 1e-8 * K;
    let back = from_transformed(&ts);
    let exact = back.values() == surfaces[0].values();
    pass &= exact;

    let cut = 0.05 * p.maturity();
    let defects: Vec<(f64, f64)> = surfaces
        .iter()
        .map(|s| (s.grid().max_dx(), transformed_residual(&to_transformed(s), cut).max_abs))
        .collect();
    let orders: Vec<f64> = defects
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    pass &= orders.iter().all(|&o| o >= 1.0);
    let ds: Vec<String> = defects.iter().map(|d| format!("{:.3e}", d.1)).collect();
    Outcome::new(
        pass,
        format!(
            "|u(0,tau)| {edge:.1e}, |u(y,0) - gamma y| {initial:.1e}, round trip exact {exact}; defect (tau >= {cut}) = [{}], orders {orders:.3?}",
            ds.join(", ")
        ),
    )
}

fn epsilon_family() -> Outcome {
    let p = defaults();
    let g = Grid::build(&p, 200, 200, SpacingKind::Uniform).unwrap();
    let fam = solve_regularized_family(&p, &g, &[1e-1, 1e-2, 1e-3], &SolverConfig::default()).unwrap();
    let h = g.dx(0);
    let slopes_ok = fam.origin_slopes.iter().all(|&s| s <= 10.0 * h);
    let sci = |v: &[f64]| v.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ");
    Outcome::new(
        fam.differences_decrease() && slopes_ok,
        format!(
            "consecutive differences [{}], max |dW/dx(0,t)| [{}] (limit {:.2e})",
            sci(&fam.consecutive_differences),
            sci(&fam.origin_slopes),
            10.0 * h
        ),
    )
}

fn main() {
    let start = Instant::now();
    let p = reference();
    let surfaces: Vec<PriceSurface<f64>> = LEVELS.iter().map(|&n| solve_n(&p, n)).collect();
    let curves: Vec<FreeBoundaryCurve<f64>> = surfaces
        .iter()
        .map(|s| extract_free_boundary(s).expect("reference configuration converts"))
        .collect();
    let random: Vec<PriceSurface<f64>> = random_sets().iter().map(|p| solve_n(p, 200)).collect();
    let (mono, lower) = monotonicity_and_lower_bound(&random);

    let results = [
        ("x=0 closed form", origin_closed_form()),
        ("obstacle bounds and strictness", obstacle_bounds(&surfaces[1])),
        ("monotonicity suite", mono),
        ("free-boundary lower bound", lower),
        ("touching time", touching_time(&curves)),
        ("parabolic tangency", tangency(&curves)),
        ("non-degeneracy and growth", growth(&surfaces, &curves)),
        ("binomial oracle agreement", oracle_agreement()),
        ("transform identities", transform_identities(&surfaces)),
        ("epsilon family", epsilon_family()),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", k + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
