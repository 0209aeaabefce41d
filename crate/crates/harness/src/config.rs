//! Run configuration: a flat TOML table. Financial inputs are required,
//! numerical knobs have defaults, and unknown keys are fatal.

use std::path::{Path, PathBuf};

use convbond_core::discretization::{Grid, SpacingKind};
use convbond_core::model::{ModelParams, RawParams};
use convbond_core::solver::{Relaxation, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::checks::CheckName;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sigma: f64,
    pub r: f64,
    pub q: f64,
    pub c: f64,
    pub gamma: f64,
    pub face_value: f64,
    pub maturity: f64,
    /// Accepted only when equal to `face_value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_value: Option<f64>,

    #[serde(default = "default_nodes")]
    pub nx: usize,
    #[serde(default = "default_nodes")]
    pub nt: usize,
    #[serde(default)]
    pub spacing_kind: SpacingKind,

    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub rannacher: bool,
    /// PSOR stopping tolerance in cash; `1e-10 K` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub epsilon: f64,
    /// Fixed SOR relaxation factor; tuned per step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,

    #[serde(default = "CheckName::all")]
    pub checks: Vec<CheckName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,

    #[serde(default = "default_tree_steps")]
    pub oracle_steps: usize,
    /// Spots for the lattice comparison; `0.70 .. 0.90 K/gamma` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_spots: Option<Vec<f64>>,
}

fn default_nodes() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_tree_steps() -> usize {
    2000
}

/// Highest spot, as a fraction of `K/gamma`, at which the untruncated lattice
/// is compared with the truncated PDE.
pub const ORACLE_SPOT_CAP: f64 = 0.95;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| HarnessError::Config {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })?;
        cfg.check_knobs().map_err(|message| HarnessError::Config {
            path: path.to_owned(),
            message,
        })?;
        Ok(cfg)
    }

    /// Checks that serde cannot express.
    fn check_knobs(&self) -> std::result::Result<(), String> {
        if let Some(call) = self.call_value {
            if call != self.face_value {
                return Err(format!(
                    "call_value = {call} differs from face_value = {}; only equal call and face values are supported",
                    self.face_value
                ));
            }
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(format!("omega = {w} must lie in (0, 2)"));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(format!("tol = {tol} must be positive"));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(format!("epsilon = {} must be finite and >= 0", self.epsilon));
        }
        if self.checks.is_empty() {
            return Err("checks must name at least one diagnostic".into());
        }
        Ok(())
    }

    pub fn raw_params(&self) -> RawParams {
        RawParams {
            sigma: self.sigma,
            r: self.r,
            q: self.q,
            c: self.c,
            gamma: self.gamma,
            face_value: self.face_value,
            maturity: self.maturity,
        }
    }

    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::validate(&self.raw_params()).map_err(HarnessError::Validation)
    }

    /// Grid with the configured node counts, or `2^level` times as many cells.
    pub fn grid(&self, params: &ModelParams<f64>, level: u32) -> Result<Grid<f64>> {
        let scale = 1usize << level;
        Grid::build(
            params,
            (self.nx - 1) * scale + 1,
            (self.nt - 1) * scale + 1,
            self.spacing_kind,
        )
        .map_err(HarnessError::Validation)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            scheme: self.scheme,
            rannacher: self.rannacher,
            tol: self.tol,
            max_iter: self.max_iter,
            relaxation: self.omega.map_or(Relaxation::Tuned, Relaxation::Fixed),
        }
    }

    pub fn oracle_spots(&self, params: &ModelParams<f64>) -> Result<Vec<f64>> {
        let x_max = params.x_max();
        let spots = match &self.oracle_spots {
            Some(s) => s.clone(),
            None => [0.70, 0.75, 0.80, 0.85, 0.90]
                .iter()
                .map(|f| f * x_max)
                .filter(|&s| s > params.exercise_lower_bound())
                .collect(),
        };
        if let Some(bad) = spots
            .iter()
            .find(|&&s| !(s >= 0.0) || s > ORACLE_SPOT_CAP * x_max)
        {
            return Err(HarnessError::Validation(
                convbond_core::error::Error::InvalidArgument(format!(
                    "oracle spot {bad} outside [0, {ORACLE_SPOT_CAP} K/gamma]"
                )),
            ));
        }
        Ok(spots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "sigma = 0.3\nr = 0.05\nq = 0.03\nc = 2.0\ngamma = 1.0\nface_value = 100.0\nmaturity = 1.0\n";

    fn parse(extra: &str) -> std::result::Result<RunConfig, String> {
        let cfg: RunConfig = toml::from_str(&format!("{BASE}{extra}")).map_err(|e| e.to_string())?;
        cfg.check_knobs()?;
        Ok(cfg)
    }

    #[test]
    fn defaults_fill_numerical_knobs() {
        let cfg = parse("").unwrap();
        assert_eq!((cfg.nx, cfg.nt), (200, 200));
        assert_eq!(cfg.scheme, Scheme::CrankNicolson);
        assert_eq!(cfg.checks, CheckName::all());
        assert_eq!(cfg.solver().relaxation, Relaxation::Tuned);
    }

    #[test]
    fn missing_financial_key_is_fatal() {
        let err = toml::from_str::<RunConfig>("sigma = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("missing field"));
    }

    #[test]
    fn unknown_keys_and_checks_are_fatal() {
        assert!(parse("vol = 0.3\n").unwrap_err().contains("unknown field"));
        assert!(parse("checks = [\"smoothness\"]\n").unwrap_err().contains("unknown variant"));
    }

    #[test]
    fn call_value_must_match_face() {
        assert!(parse("call_value = 100.0\n").is_ok());
        assert!(parse("call_value = 105.0\n").unwrap_err().contains("call_value"));
    }

    #[test]
    fn refined_grids_double_the_cells() {
        let cfg = parse("nx = 51\nnt = 21\n").unwrap();
        let p = cfg.params().unwrap();
        let g = cfg.grid(&p, 2).unwrap();
        assert_eq!((g.nx(), g.nt()), (201, 81));
    }
}
