//! Strict JSON run configuration: unknown keys are rejected, numeric fields
//! pass the module-level admissibility checks before any work starts.

use crate::error::{Error, Result};
use crate::grid::StripGrid;
use crate::minimize::MinimizeConfig;
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_extent: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<StripGrid> {
        StripGrid::new(self.x_extent, self.nx, self.ny)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub out_dir: Option<String>,
    /// Snapshot stem (header `<stem>.json` + payload `<stem>.bin`).
    pub snapshot: Option<String>,
    /// Iteration log CSV.
    pub log: Option<String>,
    /// Summary JSON.
    pub summary: Option<String>,
    /// Field CSV export.
    pub field_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    /// Closed-form 1D soliton table over a frequency range.
    Soliton1d { omega_min: f64, omega_max: f64, n_omega: usize },
    MinimizeAction,
    MinimizeEnergy,
    /// Green's function slice g(x, y; xi, eta) over the grid.
    GreensProbe {
        xi: f64,
        eta: f64,
        #[serde(default)]
        k_max: Option<usize>,
        #[serde(default)]
        even_modes_only: bool,
    },
    ShrinkSweep {
        l_list: Vec<f64>,
        #[serde(default)]
        verify_sentinels: bool,
    },
    ShrinkLstar { l_list: Vec<f64> },
    ShrinkLstarstar {
        mass: f64,
        #[serde(default)]
        optimize: bool,
    },
    ShrinkGammastar,
    /// Re-evaluate a snapshot: functionals, Pohozaev residuals, Green
    /// discrepancy, decay fit.
    Verify { snapshot: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemParams,
    pub grid: GridSpec,
    #[serde(default)]
    pub minimize: MinimizeConfig,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_seed() -> u64 {
    1
}

fn default_jobs() -> usize {
    1
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("parse error at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    cfg.grid.build()?;
    match &cfg.command {
        Command::MinimizeEnergy => cfg.problem.validate_energy_mode()?,
        Command::ShrinkSweep { l_list, .. } | Command::ShrinkLstar { l_list } => {
            cfg.problem.validate_energy_mode()?;
            if l_list.is_empty() {
                return Err(Error::Config("l_list must not be empty".into()));
            }
            if l_list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("l_list must be strictly ascending".into()));
            }
        }
        Command::Soliton1d { omega_min, omega_max, n_omega } => {
            cfg.problem.validate()?;
            if !(*omega_min > cfg.problem.gamma * cfg.problem.gamma / 4.0) {
                return Err(Error::Config(format!(
                    "omega_min {} is inadmissible: omega <= gamma^2/4 with gamma = {}",
                    omega_min, cfg.problem.gamma
                )));
            }
            if omega_max < omega_min || *n_omega == 0 {
                return Err(Error::Config("need omega_max >= omega_min and n_omega >= 1".into()));
            }
        }
        Command::ShrinkLstarstar { mass, .. } => {
            cfg.problem.validate()?;
            if !(*mass > 0.0) {
                return Err(Error::Config(format!("mass must be positive, got {mass}")));
            }
        }
        _ => cfg.problem.validate()?,
    }
    if cfg.minimize.tol_grad <= 0.0 {
        return Err(Error::Config(format!(
            "tol_grad must be positive, got {}",
            cfg.minimize.tol_grad
        )));
    }
    if cfg.minimize.step < 0.0 {
        return Err(Error::Config(format!("step must be nonnegative, got {}", cfg.minimize.step)));
    }
    if cfg.jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(command: &str, problem: &str) -> String {
        format!(
            r#"{{
  "command": {{ "name": "{command}" }},
  "problem": {problem},
  "grid": {{ "x_extent": 16.0, "nx": 129, "ny": 9 }}
}}"#
        )
    }

    #[test]
    fn minimal_valid_document_accepted() {
        let text = minimal(
            "minimize-action",
            r#"{ "p": 3.0, "gamma": -1.0, "omega": 1.0, "l_width": 1.0 }"#,
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.command, Command::MinimizeAction);
        assert_eq!(cfg.problem.mass, 1.0);
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn inadmissible_frequency_rejected() {
        let text = minimal(
            "minimize-action",
            r#"{ "p": 3.0, "gamma": -2.0, "omega": 0.9, "l_width": 1.0 }"#,
        );
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("omega <= gamma^2/4"), "message was: {msg}");
    }

    #[test]
    fn supercritical_p_rejected_for_energy_mode() {
        let text = minimal(
            "minimize-energy",
            r#"{ "p": 4.0, "gamma": -1.0, "omega": 1.5, "l_width": 1.0 }"#,
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("1 < p < 3"), "message was: {err}");
        // the same parameters pass in action mode
        let ok = minimal(
            "minimize-action",
            r#"{ "p": 4.0, "gamma": -1.0, "omega": 1.5, "l_width": 1.0 }"#,
        );
        assert!(parse_config(&ok).is_ok());
    }

    #[test]
    fn unknown_keys_fail_fast() {
        let text = r#"{
  "command": { "name": "minimize-action" },
  "problem": { "p": 3.0, "gamma": -1.0, "omega": 1.0, "l_width": 1.0, "omeega": 2.0 },
  "grid": { "x_extent": 16.0, "nx": 129, "ny": 9 }
}"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "message was: {err}");
        let text2 = r#"{
  "command": { "name": "minimize-action" },
  "problem": { "p": 3.0, "gamma": -1.0, "omega": 1.0, "l_width": 1.0 },
  "grid": { "x_extent": 16.0, "nx": 129, "ny": 9 },
  "extra": true
}"#;
        assert!(parse_config(text2).is_err());
    }

    #[test]
    fn parse_error_carries_location() {
        let err = parse_config("{ not json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "message was: {msg}");
    }

    #[test]
    fn sweep_list_must_ascend() {
        let text = format!(
            r#"{{
  "command": {{ "name": "shrink-sweep", "l_list": [2.0, 1.0] }},
  "problem": {{ "p": 2.5, "gamma": -1.0, "omega": 0.66, "l_width": 1.0 }},
  "grid": {{ "x_extent": 16.0, "nx": 129, "ny": 9 }}
}}"#
        );
        assert!(parse_config(&text).is_err());
    }
}
