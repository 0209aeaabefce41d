//! Check registry and the diagnostics report.
//!
//! Every check returns a verdict plus the constants it measured. Checks that
//! compare two resolutions use the configured grid and one refinement of it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use convbond_core::error::Error as CoreError;
use convbond_core::fb::{
    compare_tangency, doubling_check, doubling_table, extract_free_boundary, non_degeneracy_check,
    quadratic_growth_check, stable, t_star_gap_report, tangency_check, FreeBoundaryCurve,
};
use convbond_core::model::ModelParams;
use convbond_core::oracle::{tree_price, TreeSpec};
use convbond_core::solver::{
    bounds_report, boundary_regularity_check, compare_regularity, monotonicity_report,
};
use convbond_core::transforms::to_transformed;
use convbond_core::PriceSurface;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples next to the free boundary used by the non-degeneracy check.
const NON_DEGENERACY_SAMPLES: usize = 8;
/// Allowed PDE/lattice gap as a fraction of `K`.
const ORACLE_TOLERANCE: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Monotonicity,
    Bounds,
    BoundaryRegularity,
    LowerBound,
    TStar,
    NonDegeneracy,
    QuadraticGrowth,
    Doubling,
    Tangency,
    OracleAgreement,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::Monotonicity,
        CheckName::Bounds,
        CheckName::BoundaryRegularity,
        CheckName::LowerBound,
        CheckName::TStar,
        CheckName::NonDegeneracy,
        CheckName::QuadraticGrowth,
        CheckName::Doubling,
        CheckName::Tangency,
        CheckName::OracleAgreement,
    ];

    pub fn all() -> Vec<CheckName> {
        Self::ALL.to_vec()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Monotonicity => "monotonicity",
            CheckName::Bounds => "bounds",
            CheckName::BoundaryRegularity => "boundary_regularity",
            CheckName::LowerBound => "lower_bound",
            CheckName::TStar => "t_star",
            CheckName::NonDegeneracy => "non_degeneracy",
            CheckName::QuadraticGrowth => "quadratic_growth",
            CheckName::Doubling => "doubling",
            CheckName::Tangency => "tangency",
            CheckName::OracleAgreement => "oracle_agreement",
        }
    }

    /// What the check asserts, in words.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckName::Monotonicity => "value nondecreasing in t, 0 <= V_x <= gamma",
            CheckName::Bounds => "gamma x <= V <= K, V < K away from x = K/gamma before maturity",
            CheckName::BoundaryRegularity => "x^2 V_xx and x V_x vanish at the degenerate edge x = 0",
            CheckName::LowerBound => "conversion boundary stays above c/(q gamma)",
            CheckName::TStar => "free boundary reaches x = K/gamma strictly before maturity",
            CheckName::NonDegeneracy => "u grows at least quadratically away from the free boundary",
            CheckName::QuadraticGrowth => "u grows at most quadratically near the free boundary",
            CheckName::Doubling => "dyadic suprema of u decay by a factor 4 per halving",
            CheckName::Tangency => "free boundary meets x = K/gamma tangentially in parabolic scaling",
            CheckName::OracleAgreement => "finite-difference values match the binomial game-option lattice",
        }
    }

    pub fn needs_refinement(self) -> bool {
        matches!(
            self,
            CheckName::BoundaryRegularity
                | CheckName::TStar
                | CheckName::NonDegeneracy
                | CheckName::QuadraticGrowth
                | CheckName::Tangency
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown check `{s}` (known: {})", known.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The property concerns the free boundary and the run has none.
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not_applicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub nx: usize,
    pub nt: usize,
    pub h_max: f64,
    pub dt: f64,
}

impl GridMeta {
    pub fn of(surface: &PriceSurface) -> Self {
        let g = surface.grid();
        Self {
            nx: g.nx(),
            nt: g.nt(),
            h_max: g.max_dx(),
            dt: g.dt(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: CheckName,
    pub anchor: &'static str,
    pub verdict: Verdict,
    pub measured: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Grids the measurement used, coarse first.
    pub grids: Vec<GridMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub version: &'static str,
    pub checks: Vec<CheckEntry>,
}

impl DiagnosticsReport {
    pub fn failed(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| c.verdict == Verdict::Fail)
            .map(|c| c.name.to_string())
            .collect()
    }
}

/// Inputs shared by all checks.
pub struct CheckContext<'a> {
    pub params: &'a ModelParams<f64>,
    pub base: &'a PriceSurface,
    /// One refinement of `base`; required by [`CheckName::needs_refinement`].
    pub fine: Option<&'a PriceSurface>,
    pub oracle_steps: usize,
    pub oracle_spots: &'a [f64],
}

struct Outcome {
    verdict: Verdict,
    measured: BTreeMap<&'static str, f64>,
    detail: Option<String>,
    refined: bool,
}

impl Outcome {
    fn new(pass: bool) -> Self {
        Self {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            measured: BTreeMap::new(),
            detail: None,
            refined: false,
        }
    }

    fn not_applicable(reason: &str) -> Self {
        Self {
            verdict: Verdict::NotApplicable,
            detail: Some(reason.into()),
            ..Self::new(true)
        }
    }

    fn error(e: &CoreError) -> Self {
        Self {
            detail: Some(format!("{}: {e}", e.code())),
            ..Self::new(false)
        }
    }

    fn with(mut self, key: &'static str, v: f64) -> Self {
        self.measured.insert(key, v);
        self
    }

    fn refined(mut self) -> Self {
        self.refined = true;
        self
    }
}

/// Runs the selected checks concurrently; entries come back in the order
/// given.
pub fn run_checks(ctx: &CheckContext<'_>, names: &[CheckName]) -> DiagnosticsReport {
    let checks = names
        .par_iter()
        .map(|&name| {
            let out = run_one(ctx, name);
            let mut grids = vec![GridMeta::of(ctx.base)];
            if out.refined {
                grids.extend(ctx.fine.map(GridMeta::of));
            }
            CheckEntry {
                name,
                anchor: name.anchor(),
                verdict: out.verdict,
                measured: out.measured,
                detail: out.detail,
                grids,
            }
        })
        .collect();
    DiagnosticsReport {
        version: env!("CARGO_PKG_VERSION"),
        checks,
    }
}

fn run_one(ctx: &CheckContext<'_>, name: CheckName) -> Outcome {
    let fine = || ctx.fine.expect("refined surface prepared for this check");
    match name {
        CheckName::Monotonicity => monotonicity(ctx),
        CheckName::Bounds => bounds(ctx),
        CheckName::BoundaryRegularity => regularity(ctx.base, fine()),
        CheckName::LowerBound => lower_bound(ctx),
        CheckName::TStar => with_curves(ctx.base, fine(), t_star),
        CheckName::NonDegeneracy => with_curves(ctx.base, fine(), non_degeneracy),
        CheckName::QuadraticGrowth => with_curves(ctx.base, fine(), growth),
        CheckName::Doubling => match extract_free_boundary(ctx.base) {
            Ok(curve) => doubling(ctx.base, &curve),
            Err(e) => curve_error(&e),
        },
        CheckName::Tangency => with_curves(ctx.base, fine(), tangency),
        CheckName::OracleAgreement => oracle(ctx),
    }
}

fn curve_error(e: &CoreError) -> Outcome {
    match e {
        CoreError::EmptyExerciseRegion => Outcome::not_applicable("no exercise region on this configuration"),
        e => Outcome::error(e),
    }
}

type Level<'a> = (&'a PriceSurface, FreeBoundaryCurve<f64>);

fn with_curves(
    base: &PriceSurface,
    fine: &PriceSurface,
    f: impl Fn(&Level<'_>, &Level<'_>) -> Outcome,
) -> Outcome {
    let coarse = match extract_free_boundary(base) {
        Ok(c) => c,
        Err(e) => return curve_error(&e),
    };
    match extract_free_boundary(fine) {
        Ok(c) => f(&(base, coarse), &(fine, c)).refined(),
        Err(e) => Outcome::error(&e).refined(),
    }
}

fn monotonicity(ctx: &CheckContext<'_>) -> Outcome {
    let p = ctx.params;
    let m = monotonicity_report(ctx.base);
    Outcome::new(m.holds(p.gamma(), 1e-8 * p.face(), 1e-8))
        .with("min_time_increment", m.min_time_increment)
        .with("min_slope", m.min_slope)
        .with("max_slope", m.max_slope)
}

fn bounds(ctx: &CheckContext<'_>) -> Outcome {
    let b = bounds_report(ctx.base);
    Outcome::new(b.holds(1e-10 * ctx.params.face()))
        .with("lower_excess", b.lower_excess)
        .with("upper_excess", b.upper_excess)
        .with("interior_upper_gap", b.interior_upper_gap)
        .with("origin_gap_last_step", b.origin_gap_last_step)
        .with("origin_gap_floor", b.origin_gap_floor)
}

fn regularity(base: &PriceSurface, fine: &PriceSurface) -> Outcome {
    let (coarse, refined) = match (boundary_regularity_check(base), boundary_regularity_check(fine)) {
        (Ok(c), Ok(f)) => (c, f),
        (Err(e), _) | (_, Err(e)) => return Outcome::error(&e).refined(),
    };
    let cmp = compare_regularity(&coarse, &refined);
    Outcome::new(cmp.pass)
        .with("max_x2_vxx", coarse.max_x2_vxx)
        .with("max_x2_vxx_fine", refined.max_x2_vxx)
        .with("max_x_vx", coarse.max_x_vx)
        .with("max_x_vx_fine", refined.max_x_vx)
        .with("ratio_x2_vxx", cmp.ratio_x2_vxx)
        .with("ratio_x_vx", cmp.ratio_x_vx)
        .refined()
}

fn lower_bound(ctx: &CheckContext<'_>) -> Outcome {
    let bound = ctx.params.exercise_lower_bound();
    match extract_free_boundary(ctx.base) {
        Ok(curve) => {
            let margin = curve.lower_bound_margin(ctx.params);
            Outcome::new(margin >= -curve.h)
                .with("bound", bound)
                .with("min_margin", margin)
                .with("h", curve.h)
                .with("detected_points", curve.detected_count() as f64)
                .with("largest_jump", curve.largest_jump())
        }
        // The bound holds vacuously over an empty exercise set.
        Err(CoreError::EmptyExerciseRegion) => Outcome::new(true)
            .with("bound", bound)
            .with("detected_points", 0.0),
        Err(e) => Outcome::error(&e),
    }
}

fn t_star(coarse: &Level<'_>, fine: &Level<'_>) -> Outcome {
    let maturity = coarse.1.maturity;
    let gap_steps = (maturity - fine.1.t_star) / fine.1.dt;
    let drift = (fine.1.t_star - coarse.1.t_star).abs() / fine.1.dt;
    let mut out = Outcome::new(gap_steps > 2.0 && drift <= 4.0)
        .with("t_star", coarse.1.t_star)
        .with("t_star_fine", fine.1.t_star)
        .with("gap_in_fine_steps", gap_steps)
        .with("drift_in_fine_steps", drift);
    if let Ok(gap) = t_star_gap_report(fine.0) {
        out = out
            .with("holder_quotient_fine", gap.holder_quotient)
            .with("vx_at_maturity_fine", gap.vx_at_maturity)
            .with("vx_deviation_before_t_star_fine", gap.vx_deviation_before_t_star);
    }
    out
}

fn non_degeneracy(coarse: &Level<'_>, fine: &Level<'_>) -> Outcome {
    let run = |s: &PriceSurface| non_degeneracy_check(&to_transformed(s), NON_DEGENERACY_SAMPLES);
    match (run(coarse.0), run(fine.0)) {
        (Ok(a), Ok(b)) => Outcome::new(a.c0 > 0.0 && stable(a.c0, b.c0))
            .with("c0", a.c0)
            .with("c0_fine", b.c0)
            .with("samples", a.samples as f64)
            .with("guarded", a.guarded as f64),
        (Err(e), _) | (_, Err(e)) => Outcome::error(&e),
    }
}

fn growth(coarse: &Level<'_>, fine: &Level<'_>) -> Outcome {
    let run = |(s, c): &Level<'_>| quadratic_growth_check(&to_transformed(s), c.maturity - c.t_star);
    let (a, b) = (run(coarse), run(fine));
    let mut out = Outcome::new(a.quadratic() && b.quadratic() && stable(a.c0, b.c0))
        .with("c0_upper", a.c0)
        .with("c0_upper_fine", b.c0)
        .with("samples", a.samples as f64);
    if let Some(s) = a.min_slope {
        out = out.with("min_log_slope", s);
    }
    if let Some(s) = b.min_slope {
        out = out.with("min_log_slope_fine", s);
    }
    out
}

fn doubling(surface: &PriceSurface, curve: &FreeBoundaryCurve<f64>) -> Outcome {
    let ts = to_transformed(surface);
    let table = doubling_table(&ts, (0.0, curve.maturity - curve.t_star));
    match doubling_check(&table) {
        Ok(d) => Outcome::new(d.holds() && d.nested)
            .with("c1", d.c1)
            .with("rows", d.rows.len() as f64)
            .with("s1", d.table[0]),
        Err(e) => Outcome::error(&e),
    }
}

fn tangency(coarse: &Level<'_>, fine: &Level<'_>) -> Outcome {
    match (tangency_check(&coarse.1), tangency_check(&fine.1)) {
        (Ok(a), Ok(b)) => {
            let cmp = compare_tangency(&a, &b);
            let mut out = Outcome::new(cmp.pass())
                .with("smallest_m_ratio", cmp.ratio)
                .with("samples_fine", b.samples.len() as f64);
            if let Some(m) = b.smallest_m() {
                out = out.with("smallest_m_fine", m);
            }
            out
        }
        (Err(e), _) | (_, Err(e)) => Outcome::error(&e),
    }
}

fn oracle(ctx: &CheckContext<'_>) -> Outcome {
    if ctx.oracle_spots.is_empty() {
        return Outcome::not_applicable("no comparison spots above the conversion bound");
    }
    let gaps: Result<Vec<f64>, CoreError> = ctx
        .oracle_spots
        .par_iter()
        .map(|&spot| {
            let tree = tree_price(&TreeSpec::new(*ctx.params, ctx.oracle_steps, spot)?);
            Ok((ctx.base.interpolate_x(0, spot) - tree).abs())
        })
        .collect();
    match gaps {
        Ok(gaps) => {
            let worst = gaps.iter().copied().fold(0.0, f64::max);
            Outcome::new(worst <= ORACLE_TOLERANCE * ctx.params.face())
                .with("max_abs_gap", worst)
                .with("tolerance", ORACLE_TOLERANCE * ctx.params.face())
                .with("spots", gaps.len() as f64)
                .with("tree_steps", ctx.oracle_steps as f64)
        }
        Err(e) => Outcome::error(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
        assert!("tangent".parse::<CheckName>().unwrap_err().contains("unknown check"));
    }
}
