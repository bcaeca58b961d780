//! Run configuration shared by command-line flags and config files.

use std::path::{Path, PathBuf};

use frontspeed_core::medium::MediumError;
use frontspeed_core::{Medium, ReactionMode};
use serde::{Deserialize, Serialize};

/// Rejected configuration; always a usage error.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    /// Field path, e.g. `medium.periods[0]`.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Speed,
    Sweep,
    Homogenize,
    Simulate,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Small diffusion `εA`, with or without a shear flow.
    Epsilon,
    /// Large diffusion `MA` with advection `M^γ q`.
    Diffusion,
    /// Reaction factor `Bζ`.
    Reaction,
    /// Period `L` of the dilated medium.
    Period,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Human-readable summary.
    #[default]
    Text,
    Csv,
    Json,
}

/// A medium given inline or as a path to a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MediumSource {
    Path(PathBuf),
    Inline(serde_json::Value),
}

/// Everything a run needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub medium: MediumSource,
    /// Grid points per direction; defaults to 128 on a line or cross-section
    /// and 64 × 64 on a cell.
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub lambda_max: Option<f64>,
    #[serde(default)]
    pub regime: Option<Regime>,
    /// Sweep parameter values; each regime has its own default list.
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub mode: Option<ReactionMode>,
    /// Simulated time.
    #[serde(default = "default_total_time", rename = "T")]
    pub total_time: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Times at which the simulator records the whole window.
    #[serde(default)]
    pub frames: Vec<f64>,
    /// Output stem; `STEM.csv` and `STEM.json` are written.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub waive_zero_average: bool,
    #[serde(default)]
    pub waive_divergence_free_diffusion_flux: bool,
    #[serde(default)]
    pub waive_structure: bool,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_total_time() -> f64 {
    80.0
}

fn default_burn_in() -> f64 {
    0.5
}

/// Default grid size of one-dimensional problems.
pub const DEFAULT_N: usize = 128;
/// Default grid size per direction of cell problems.
pub const DEFAULT_CELL_N: usize = 64;

impl RunConfig {
    /// A configuration with documented defaults for `command` on `medium`.
    pub fn new(command: Command, medium: MediumSource) -> Self {
        RunConfig {
            command,
            medium,
            grid: None,
            tol: default_tol(),
            lambda_min: None,
            lambda_max: None,
            regime: None,
            points: None,
            gamma: None,
            mode: None,
            total_time: default_total_time(),
            burn_in: default_burn_in(),
            frames: Vec::new(),
            out: None,
            format: Format::Text,
            waive_zero_average: false,
            waive_divergence_free_diffusion_flux: false,
            waive_structure: false,
        }
    }

    /// Check numeric ranges and that a referenced medium file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.len() > 2 {
                return Err(ConfigError::new("grid", "expected one or two sizes"));
            }
            if let Some((i, n)) = grid.iter().enumerate().find(|(_, n)| **n < 4) {
                return Err(ConfigError::new(
                    format!("grid[{i}]"),
                    format!("at least 4 points are needed, got {n}"),
                ));
            }
        }
        if !(self.tol > 0.0 && self.tol < 0.1) {
            return Err(ConfigError::new(
                "tol",
                format!("must lie in (0, 0.1), got {}", self.tol),
            ));
        }
        for (name, v) in [
            ("lambda_min", self.lambda_min),
            ("lambda_max", self.lambda_max),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError::new(name, format!("must be positive, got {v}")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.lambda_min, self.lambda_max) {
            if lo >= hi {
                return Err(ConfigError::new(
                    "lambda_max",
                    format!("must exceed lambda_min ({lo}), got {hi}"),
                ));
            }
        }
        if let Some(points) = &self.points {
            if points.is_empty() {
                return Err(ConfigError::new("points", "at least one value is needed"));
            }
            if let Some((i, v)) = points
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(ConfigError::new(
                    format!("points[{i}]"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if let Some(g) = self.gamma {
            if !g.is_finite() {
                return Err(ConfigError::new("gamma", "must be finite"));
            }
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return Err(ConfigError::new(
                "T",
                format!("must be positive, got {}", self.total_time),
            ));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(ConfigError::new(
                "burn_in",
                format!("must lie in [0, 1), got {}", self.burn_in),
            ));
        }
        if self.command == Command::Sweep && self.regime.is_none() {
            return Err(ConfigError::new("regime", "a sweep needs a regime"));
        }
        if let MediumSource::Path(p) = &self.medium {
            if !p.is_file() {
                return Err(ConfigError::new(
                    "medium",
                    format!("no such file: {}", p.display()),
                ));
            }
        }
        Ok(())
    }

    /// Parse the medium document.
    pub fn load_medium(&self) -> Result<Medium, ConfigError> {
        let text = match &self.medium {
            MediumSource::Path(p) => std::fs::read_to_string(p).map_err(|e| {
                ConfigError::new("medium", format!("cannot read {}: {e}", p.display()))
            })?,
            MediumSource::Inline(v) => v.to_string(),
        };
        Medium::from_json(&text).map_err(|e| {
            let path = match &e {
                MediumError::BadPeriod { path, .. } | MediumError::Schema { path, .. } => {
                    format!("medium.{path}")
                }
                _ => "medium".to_string(),
            };
            ConfigError::new(path, e.to_string())
        })
    }

    /// The grid for `medium`, with a single size repeated on a cell.
    pub fn grid_for(&self, medium: &Medium) -> Result<Vec<usize>, ConfigError> {
        let dim = medium.dimension();
        match self.grid.as_deref() {
            None if dim == 1 => Ok(vec![DEFAULT_N]),
            None => Ok(vec![DEFAULT_CELL_N; 2]),
            Some(&[n]) => Ok(vec![n; dim]),
            Some(g) if g.len() == dim => Ok(g.to_vec()),
            Some(g) => Err(ConfigError::new(
                "grid",
                format!("{} sizes given for a {dim}-dimensional medium", g.len()),
            )),
        }
    }
}

/// Parse and validate a config document.
///
/// A relative medium path is resolved against `base`, the directory of the
/// config file.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::new(e.path().to_string(), e.inner().to_string()))?;
    if let (MediumSource::Path(p), Some(base)) = (&mut config.medium, base) {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    config.validate()?;
    config.load_medium()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MEDIUM: &str = r#"{"dimension":1,"geometry":"line","periods":[1.0],
        "fields":{"a11":{"kind":"constant","params":[1.0]}},
        "zeta":{"kind":"constant","params":[1.0]}}"#;

    #[test]
    fn minimal_documents_get_the_documented_defaults() {
        let c = parse_config(&format!(r#"{{"command":"speed","medium":{MEDIUM}}}"#), None).unwrap();
        assert_eq!(c.tol, 1e-6);
        assert_eq!(c.grid, None);
        assert_eq!((c.lambda_min, c.lambda_max), (None, None));
        let m = c.load_medium().unwrap();
        assert_eq!(c.grid_for(&m).unwrap(), vec![128]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_config(
            &format!(r#"{{"command":"speed","medium":{MEDIUM},"tolerance":1e-3}}"#),
            None,
        )
        .unwrap_err();
        assert!(e.message.contains("tolerance"), "{e}");
    }

    #[test]
    fn negative_periods_are_named() {
        let bad = MEDIUM.replace("[1.0],", "[-1.0],");
        let e =
            parse_config(&format!(r#"{{"command":"speed","medium":{bad}}}"#), None).unwrap_err();
        assert!(e.to_string().contains("periods[0]"), "{e}");
    }

    #[test]
    fn ranges_are_checked_before_any_compute() {
        let e = parse_config(
            &format!(
                r#"{{"command":"sweep","regime":"epsilon","medium":{MEDIUM},"points":[0.1,-1]}}"#
            ),
            None,
        )
        .unwrap_err();
        assert_eq!(e.path, "points[1]");
        let e =
            parse_config(r#"{"command":"speed","medium":"/nonexistent.json"}"#, None).unwrap_err();
        assert_eq!(e.path, "medium");
    }
}
