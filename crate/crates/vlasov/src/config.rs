//! Run configuration: a JSON file with every field optional, validated into
//! a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vlasov_core::ansatz::NEWTONIAN_EXPONENT_LIMIT;
use vlasov_core::relativistic::RelativisticOptions;
use vlasov_core::steady_state::{Closure, SolverOptions};
use vlasov_core::transport::InnerProductSpec;
use vlasov_core::{Ansatz, Regime};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Newtonian,
    Relativistic,
    PointMassTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKindConfig {
    Polytrope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzConfig {
    pub kind: AnsatzKindConfig,
    pub k: f64,
    pub c: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            kind: AnsatzKindConfig::Polytrope,
            k: 1.0,
            c: 1.0,
            e0: -0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureConfig {
    Report,
    Match,
}

impl From<ClosureConfig> for Closure {
    fn from(c: ClosureConfig) -> Self {
        match c {
            ClosureConfig::Report => Closure::Report,
            ClosureConfig::Match => Closure::Match,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Central relative potential `E0 - U0(0)` of the Newtonian shooting.
    pub y_center: f64,
    /// First trial for `mu(0) - ln E0` of the relativistic closure.
    pub nu_center: f64,
    pub grid_steps: usize,
    pub rtol: f64,
    /// Newtonian default is `report`; the relativistic solver always
    /// iterates unless `report` is requested explicitly.
    pub closure: Option<ClosureConfig>,
    pub closure_tol: f64,
    pub max_iterations: usize,
    /// Mass of the point-mass test potential.
    pub point_mass: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            y_center: 1.0,
            nu_center: -0.1,
            grid_steps: 2000,
            rtol: 1e-12,
            closure: None,
            closure_tol: 1e-10,
            max_iterations: 100,
            point_mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Cells per axis of the admissible `(E, L)` check grid.
    #[serde(rename = "nE")]
    pub n_e: usize,
    #[serde(rename = "nL")]
    pub n_l: usize,
    /// Gauss-Legendre orders of the `(r, w, L)` quadrature.
    pub n_r: usize,
    pub n_w: usize,
    pub n_lq: usize,
    /// Nodes of the orbit quadrature.
    pub n_orbit: usize,
    /// Integration steps per radial period.
    pub steps_per_period: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_e: 20,
            n_l: 20,
            n_r: 48,
            n_w: 48,
            n_lq: 48,
            n_orbit: 64,
            steps_per_period: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub ansatz: AnsatzConfig,
    pub mode: Mode,
    pub solver: SolverConfig,
    pub grid: GridConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ansatz: AnsatzConfig::default(),
            mode: Mode::Newtonian,
            solver: SolverConfig::default(),
            grid: GridConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 20_240_601,
        }
    }
}

impl RunConfig {
    /// Defaults for `mode`, including a cutoff of the right sign.
    pub fn for_mode(mode: Mode) -> Self {
        let mut cfg = Self {
            mode,
            ..Self::default()
        };
        if mode == Mode::Relativistic {
            cfg.ansatz.e0 = 0.95;
        }
        cfg
    }

    /// Parses JSON text; `origin` only labels error messages.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.ansatz;
        if !(a.k.is_finite() && a.k > 0.0) {
            return Err(invalid("ansatz.k", "polytropic exponent must be positive"));
        }
        if !(a.c.is_finite() && a.c > 0.0) {
            return Err(invalid("ansatz.c", "amplitude must be positive"));
        }
        match self.mode {
            Mode::Newtonian | Mode::PointMassTest => {
                if !(a.e0 < 0.0) {
                    return Err(invalid(
                        "ansatz.E0",
                        format!("{} mode needs E0 < 0, got {}", self.mode_name(), a.e0),
                    ));
                }
                if self.mode == Mode::Newtonian && a.k >= NEWTONIAN_EXPONENT_LIMIT {
                    return Err(invalid(
                        "ansatz.k",
                        format!("Newtonian polytropes need k < 7/2, got {}", a.k),
                    ));
                }
            }
            Mode::Relativistic => {
                if !(a.e0 > 0.0 && a.e0 < 1.0) {
                    return Err(invalid(
                        "ansatz.E0",
                        format!("relativistic mode needs 0 < E0 < 1, got {}", a.e0),
                    ));
                }
            }
        }
        let s = &self.solver;
        for (field, v) in [
            ("solver.rtol", s.rtol),
            ("solver.closure_tol", s.closure_tol),
            ("solver.y_center", s.y_center),
            ("solver.point_mass", s.point_mass),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(s.nu_center.is_finite() && s.nu_center < 0.0) {
            return Err(invalid("solver.nu_center", "must be negative"));
        }
        if s.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be at least 1"));
        }
        let g = &self.grid;
        for (field, n) in [
            ("solver.grid_steps", s.grid_steps),
            ("grid.nE", g.n_e),
            ("grid.nL", g.n_l),
            ("grid.n_r", g.n_r),
            ("grid.n_w", g.n_w),
            ("grid.n_lq", g.n_lq),
            ("grid.n_orbit", g.n_orbit),
            ("grid.steps_per_period", g.steps_per_period),
        ] {
            if n < 4 {
                return Err(invalid(field, format!("grid sizes must be at least 4, got {n}")));
            }
        }
        Ok(())
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Newtonian => "newtonian",
            Mode::Relativistic => "relativistic",
            Mode::PointMassTest => "point-mass-test",
        }
    }

    pub fn regime(&self) -> Regime {
        match self.mode {
            Mode::Relativistic => Regime::Relativistic,
            _ => Regime::Newtonian,
        }
    }

    pub fn ansatz(&self) -> Result<Ansatz, vlasov_core::Error> {
        Ansatz::polytrope(self.ansatz.k, self.ansatz.c, self.ansatz.e0, self.regime())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            grid_steps: self.solver.grid_steps,
            rtol: self.solver.rtol,
            closure: self.solver.closure.map_or(Closure::Report, Into::into),
            ..SolverOptions::default()
        }
    }

    pub fn relativistic_options(&self) -> RelativisticOptions {
        RelativisticOptions {
            grid_steps: self.solver.grid_steps,
            rtol: self.solver.rtol,
            closure: self.solver.closure.map_or(Closure::Match, Into::into),
            closure_tol: self.solver.closure_tol,
            max_iterations: self.solver.max_iterations,
            ..RelativisticOptions::default()
        }
    }

    pub fn inner_product_spec(&self) -> InnerProductSpec {
        InnerProductSpec {
            n_r: self.grid.n_r,
            n_l: self.grid.n_lq,
            n_w: self.grid.n_w,
            panels: 1,
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_json(text, Path::new("test.json"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(
            r#"{"ansatz": {"kind": "polytrope", "k": 1.0, "c": 1.0, "E0": -0.1}, "mode": "newtonian"}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.ansatz.e0, -0.1);
        assert_eq!(parse("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn sign_rule_for_cutoff() {
        let err = parse(r#"{"ansatz": {"E0": 0.5}, "mode": "newtonian"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "ansatz.E0", .. }), "{err}");
        let err = parse(r#"{"ansatz": {"E0": -0.5}, "mode": "relativistic"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "ansatz.E0", .. }));
        assert!(parse(r#"{"ansatz": {"E0": 0.9}, "mode": "relativistic"}"#).is_ok());
    }

    #[test]
    fn exponent_limit() {
        let err = parse(r#"{"ansatz": {"k": 4.0}, "mode": "newtonian"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "ansatz.k", .. }));
        assert!(err.to_string().contains("ansatz.k"));
    }

    #[test]
    fn grid_and_tolerance_rules() {
        let err = parse(r#"{"grid": {"n_w": 3}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "grid.n_w", .. }));
        let err = parse(r#"{"solver": {"rtol": 0.0}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "solver.rtol", .. }));
        assert!(parse(r#"{"grid": {"n_w": 4}}"#).is_ok());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("{\n  \"mode\": \"newtonian\",\n  \"seed\": x\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let err = parse(r#"{"colour": 1}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::for_mode(Mode::Relativistic);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }
}
