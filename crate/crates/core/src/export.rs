//! CSV writers for surfaces and free-boundary curves. Row order is fixed
//! (time outer, space inner) so repeated runs produce identical files.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fb::FreeBoundaryCurve;
use crate::scalar::Scalar;
use crate::solver::{nodewise_residuals, PriceSurface};

fn export_err(e: impl std::fmt::Display) -> Error {
    Error::Export(e.to_string())
}

/// `t,x,V,obstacle_gap,residual`, one row per node.
pub fn write_surface_csv<T: Scalar, W: Write>(surface: &PriceSurface<T>, out: W) -> Result<()> {
    let residuals = nodewise_residuals(surface);
    let grid = surface.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "V", "obstacle_gap", "residual"])
        .map_err(export_err)?;
    for (n, &t) in grid.t().iter().enumerate() {
        for (i, &x) in grid.x().iter().enumerate() {
            w.serialize((
                t.as_f64(),
                x.as_f64(),
                surface.value(n, i).as_f64(),
                surface.obstacle_gap(n, i).as_f64(),
                residuals[n][i].as_f64(),
            ))
            .map_err(export_err)?;
        }
    }
    w.flush().map_err(export_err)
}

/// `t,b,delta_fb`, one row per slice with a detected boundary point.
pub fn write_free_boundary_csv<T: Scalar, W: Write>(curve: &FreeBoundaryCurve<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "b", "delta_fb"]).map_err(export_err)?;
    for (t, b) in curve.detected() {
        w.serialize((t.as_f64(), b.as_f64(), curve.delta_fb.as_f64()))
            .map_err(export_err)?;
    }
    w.flush().map_err(export_err)
}
