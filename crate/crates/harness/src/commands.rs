use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use convbond_core::export::{write_free_boundary_csv, write_surface_csv};
use convbond_core::fb::{detection_threshold, extract_free_boundary, non_degeneracy_check, quadratic_growth_check};
use convbond_core::model::{ModelParams, RawParams};
use convbond_core::oracle::{tree_convergence, tree_price, TreeSpec};
use convbond_core::solver::{solve, residual_report};
use convbond_core::transforms::to_transformed;
use convbond_core::{Grid, PriceSurface};
use rayon::prelude::*;
use serde::Serialize;

use crate::checks::{run_checks, CheckContext, CheckName, DiagnosticsReport, GridMeta};
use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

/// Everything needed to reproduce the numbers in a run directory. Wall time
/// lives in `timing.json` so the manifest itself is reproducible.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    resolved: Resolved,
    grids: Vec<GridMeta>,
    outputs: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    tol: f64,
    max_iter: usize,
    relaxation: String,
    detection_threshold: f64,
    dividend_exceeds_rate: bool,
}

impl Resolved {
    fn new(cfg: &RunConfig, params: &ModelParams<f64>, grid: &Grid) -> Self {
        let solver = cfg.solver();
        let tol = solver.resolved_tol(params);
        Self {
            tol,
            max_iter: solver.resolved_max_iter(grid.nx()),
            relaxation: match cfg.omega {
                Some(w) => format!("fixed {w}"),
                None => "tuned".into(),
            },
            detection_threshold: detection_threshold(params, grid, tol),
            dividend_exceeds_rate: params.flags().dividend_exceeds_rate,
        }
    }
}

#[derive(Debug, Serialize)]
struct Timing {
    command: &'static str,
    wall_time_s: f64,
}

struct RunDir {
    path: PathBuf,
    started: Instant,
}

impl RunDir {
    fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(HarnessError::io(format!("creating {}", path.display())))?;
        Ok(Self {
            path: path.to_owned(),
            started: Instant::now(),
        })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(HarnessError::io(format!("writing {}", p.display())))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        let p = self.path.join(name);
        fs::write(&p, text).map_err(HarnessError::io(format!("writing {}", p.display())))
    }

    fn finish(&self, command: &'static str, manifest: &Manifest<'_>) -> Result<()> {
        self.json("manifest.json", manifest)?;
        self.json(
            "timing.json",
            &Timing {
                command,
                wall_time_s: self.started.elapsed().as_secs_f64(),
            },
        )
    }
}

fn export_err(e: convbond_core::error::Error) -> HarnessError {
    HarnessError::Io {
        context: "csv export".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn solve_level(cfg: &RunConfig, params: &ModelParams<f64>, level: u32) -> Result<PriceSurface> {
    let grid = cfg.grid(params, level)?;
    solve(params, &grid, &cfg.solver()).map_err(|e| {
        HarnessError::from_core(e, (level > 0).then_some(level as usize))
    })
}

fn write_curve(dir: &RunDir, surface: &PriceSurface) -> Result<Option<f64>> {
    let out = dir.file("free_boundary.csv")?;
    match extract_free_boundary(surface) {
        Ok(curve) => {
            write_free_boundary_csv(&curve, out).map_err(export_err)?;
            Ok(Some(curve.t_star))
        }
        Err(convbond_core::error::Error::EmptyExerciseRegion) => {
            use std::io::Write;
            let mut out = out;
            writeln!(out, "t,b,delta_fb").map_err(HarnessError::io("writing free_boundary.csv"))?;
            Ok(None)
        }
        Err(e) => Err(HarnessError::from_core(e, None)),
    }
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<()> {
    let params = cfg.params()?;
    let dir = RunDir::create(out)?;
    let surface = solve_level(cfg, &params, 0)?;
    write_surface_csv(&surface, dir.file("surface.csv")?).map_err(export_err)?;
    let t_star = write_curve(&dir, &surface)?;

    let residuals = residual_report(&surface);
    let worst = residuals.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    let sweeps: usize = surface.iterations().iter().sum();
    println!(
        "solved {}x{}: max complementarity residual {worst:.3e} (tol {:.1e}), {sweeps} PSOR sweeps",
        surface.grid().nx(),
        surface.grid().nt(),
        surface.tol()
    );
    match t_star {
        Some(t) => println!("free boundary detected, touches x = K/gamma at t* = {t:.6}"),
        None => println!("no exercise region: holding dominates converting everywhere"),
    }

    dir.finish(
        "solve",
        &Manifest {
            tool: "convbond",
            version: env!("CARGO_PKG_VERSION"),
            command: "solve",
            config: cfg,
            resolved: Resolved::new(cfg, &params, surface.grid()),
            grids: vec![GridMeta::of(&surface)],
            outputs: vec!["surface.csv", "free_boundary.csv", "manifest.json", "timing.json"],
        },
    )
}

pub fn cmd_verify(cfg: &RunConfig, checks: &[CheckName], out: &Path) -> Result<DiagnosticsReport> {
    let params = cfg.params()?;
    let spots = cfg.oracle_spots(&params)?;
    let dir = RunDir::create(out)?;
    let refine = checks.iter().any(|c| c.needs_refinement());
    let levels: Vec<u32> = if refine { vec![0, 1] } else { vec![0] };
    let surfaces = levels
        .par_iter()
        .map(|&l| solve_level(cfg, &params, l))
        .collect::<Result<Vec<_>>>()?;

    let report = run_checks(
        &CheckContext {
            params: &params,
            base: &surfaces[0],
            fine: surfaces.get(1),
            oracle_steps: cfg.oracle_steps,
            oracle_spots: &spots,
        },
        checks,
    );
    dir.json("diagnostics.json", &report)?;
    write_curve(&dir, &surfaces[0])?;
    for entry in &report.checks {
        println!("{:<20} {}", entry.name.as_str(), entry.verdict);
    }
    dir.finish(
        "verify",
        &Manifest {
            tool: "convbond",
            version: env!("CARGO_PKG_VERSION"),
            command: "verify",
            config: cfg,
            resolved: Resolved::new(cfg, &params, surfaces[0].grid()),
            grids: surfaces.iter().map(GridMeta::of).collect(),
            outputs: vec!["diagnostics.json", "free_boundary.csv", "manifest.json", "timing.json"],
        },
    )?;
    let failed = report.failed();
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(HarnessError::ChecksFailed(failed))
    }
}

pub const MIN_LEVELS: usize = 2;
pub const MAX_LEVELS: usize = 4;

/// One row of the refinement table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineRow {
    pub level: usize,
    pub nx: usize,
    pub nt: usize,
    pub h_max: f64,
    pub dt: f64,
    /// `V(x_probe, 0)`.
    pub probe_value: f64,
    /// `max |V_level - V_{level-1}|` on the previous level's nodes.
    pub diff_to_previous: Option<f64>,
    /// `log2` of consecutive `diff_to_previous` ratios.
    pub surface_order: Option<f64>,
    pub probe_order: Option<f64>,
    pub t_star: Option<f64>,
    /// `|t*_level - t*_{level-1}| / dt_level`.
    pub t_star_drift_in_steps: Option<f64>,
    pub c0_lower: Option<f64>,
    pub c0_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineTable {
    pub probe_x: f64,
    pub rows: Vec<RefineRow>,
}

/// Largest difference between `fine` and `coarse` at the coarse nodes; the
/// time grids nest, space is interpolated on non-uniform meshes.
fn nested_difference(coarse: &PriceSurface, fine: &PriceSurface) -> f64 {
    let stride = (fine.grid().nt() - 1) / (coarse.grid().nt() - 1);
    let xs = coarse.grid().x();
    (0..coarse.grid().nt())
        .flat_map(|n| xs.iter().enumerate().map(move |(i, &x)| (n, i, x)))
        .map(|(n, i, x)| (coarse.value(n, i) - fine.interpolate_x(n * stride, x)).abs())
        .fold(0.0, f64::max)
}

fn order(prev: Option<f64>, cur: Option<f64>) -> Option<f64> {
    match (prev, cur) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

pub fn cmd_refine(cfg: &RunConfig, levels: usize, out: &Path) -> Result<RefineTable> {
    if !(MIN_LEVELS..=MAX_LEVELS).contains(&levels) {
        return Err(HarnessError::Validation(convbond_core::error::Error::InvalidArgument(
            format!("levels must lie in [{MIN_LEVELS}, {MAX_LEVELS}], got {levels}"),
        )));
    }
    let params = cfg.params()?;
    let dir = RunDir::create(out)?;
    let surfaces = (0..levels as u32)
        .into_par_iter()
        .map(|l| solve_level(cfg, &params, l))
        .collect::<Result<Vec<_>>>()?;

    let base_x = surfaces[0].grid().x();
    let target = 0.8 * params.x_max();
    let probe_x = base_x[base_x.partition_point(|&x| x < target).min(base_x.len() - 1)];

    let measured: Vec<_> = surfaces
        .par_iter()
        .map(|s| {
            let curve = extract_free_boundary(s).ok();
            let ts = to_transformed(s);
            let c0_lower = curve
                .as_ref()
                .and_then(|_| non_degeneracy_check(&ts, 8).ok())
                .map(|r| r.c0);
            let c0_upper = curve
                .as_ref()
                .map(|c| quadratic_growth_check(&ts, c.maturity - c.t_star).c0);
            (curve.map(|c| c.t_star), c0_lower, c0_upper)
        })
        .collect();

    let mut rows: Vec<RefineRow> = Vec::with_capacity(levels);
    for (k, s) in surfaces.iter().enumerate() {
        let g = s.grid();
        let (t_star, c0_lower, c0_upper) = measured[k];
        let probe_value = s.interpolate_x(0, probe_x);
        let prev = k.checked_sub(1).map(|j| &rows[j]);
        let diff = (k > 0).then(|| nested_difference(&surfaces[k - 1], s));
        let probe_diff = prev.map(|p| (probe_value - p.probe_value).abs());
        let prev_probe_diff = (k > 1).then(|| (rows[k - 1].probe_value - rows[k - 2].probe_value).abs());
        let drift = match (prev.and_then(|p| p.t_star), t_star) {
            (Some(a), Some(b)) => Some((b - a).abs() / g.dt(0)),
            _ => None,
        };
        rows.push(RefineRow {
            level: k,
            nx: g.nx(),
            nt: g.nt(),
            h_max: g.max_dx(),
            dt: g.dt(0),
            probe_value,
            diff_to_previous: diff,
            surface_order: order(prev.and_then(|p| p.diff_to_previous), diff),
            probe_order: order(prev_probe_diff, probe_diff),
            t_star,
            t_star_drift_in_steps: drift,
            c0_lower,
            c0_upper,
        });
    }
    let table = RefineTable { probe_x, rows };

    dir.json("refine.json", &table)?;
    let mut csv = String::from("level,nx,nt,h_max,dt,probe_value,diff_to_previous,surface_order,probe_order,t_star,t_star_drift_in_steps,c0_lower,c0_upper\n");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.level,
            r.nx,
            r.nt,
            r.h_max,
            r.dt,
            r.probe_value,
            opt(r.diff_to_previous),
            opt(r.surface_order),
            opt(r.probe_order),
            opt(r.t_star),
            opt(r.t_star_drift_in_steps),
            opt(r.c0_lower),
            opt(r.c0_upper)
        ));
    }
    fs::write(dir.path.join("refine.csv"), csv).map_err(HarnessError::io("writing refine.csv"))?;
    for r in &table.rows {
        println!(
            "level {} ({}x{}): V(probe) = {:.8}, max diff {}, surface order {}, probe order {}, t* {}",
            r.level,
            r.nx,
            r.nt,
            r.probe_value,
            opt(r.diff_to_previous),
            opt(r.surface_order),
            opt(r.probe_order),
            opt(r.t_star)
        );
    }
    dir.finish(
        "refine",
        &Manifest {
            tool: "convbond",
            version: env!("CARGO_PKG_VERSION"),
            command: "refine",
            config: cfg,
            resolved: Resolved::new(cfg, &params, surfaces[0].grid()),
            grids: surfaces.iter().map(GridMeta::of).collect(),
            outputs: vec!["refine.json", "refine.csv", "manifest.json", "timing.json"],
        },
    )?;
    Ok(table)
}

/// Golden-file layout shared with the test fixtures.
#[derive(Debug, Serialize)]
struct Golden {
    version: u32,
    params: RawParams,
    steps: usize,
    values: Vec<GoldenValue>,
    /// Lattice values at `steps / 8, steps / 4, steps / 2, steps` for the
    /// middle spot.
    convergence: Convergence,
}

#[derive(Debug, Serialize)]
struct GoldenValue {
    spot: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct Convergence {
    spot: f64,
    steps: Vec<usize>,
    values: Vec<f64>,
    increments: Vec<f64>,
}

pub fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<()> {
    let params = cfg.params()?;
    let spots = cfg.oracle_spots(&params)?;
    if spots.is_empty() {
        return Err(HarnessError::Validation(convbond_core::error::Error::InvalidArgument(
            "no oracle spots above the conversion bound; set oracle_spots".into(),
        )));
    }
    let dir = RunDir::create(out)?;
    let steps = cfg.oracle_steps;
    let values = spots
        .par_iter()
        .map(|&spot| {
            let spec = TreeSpec::new(params, steps, spot).map_err(|e| HarnessError::from_core(e, None))?;
            Ok(GoldenValue {
                spot,
                value: tree_price(&spec),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mid = spots[spots.len() / 2];
    let ladder: Vec<usize> = [8, 4, 2, 1].iter().map(|d| steps / d).collect();
    let conv = tree_convergence(&params, mid, &ladder).map_err(|e| HarnessError::from_core(e, None))?;
    for v in &values {
        println!("spot {:>10.4}: {:.10}", v.spot, v.value);
    }
    println!("increments at spot {mid}: {:?}", conv.increments());

    dir.json(
        "oracle.json",
        &Golden {
            version: 1,
            params: cfg.raw_params(),
            steps,
            values,
            convergence: Convergence {
                spot: mid,
                increments: conv.increments(),
                steps: conv.steps,
                values: conv.values,
            },
        },
    )?;
    let grid = cfg.grid(&params, 0)?;
    dir.finish(
        "oracle",
        &Manifest {
            tool: "convbond",
            version: env!("CARGO_PKG_VERSION"),
            command: "oracle",
            config: cfg,
            resolved: Resolved::new(cfg, &params, &grid),
            grids: Vec::new(),
            outputs: vec!["oracle.json", "manifest.json", "timing.json"],
        },
    )
}
