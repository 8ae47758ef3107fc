//! The subcommands, each writing its results into an output directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use vlasov_core::effective::{find_r_l, find_turning_points, psi};
use vlasov_core::orbit::{orbit_step, radial_period_by_integration, sample, OrbitState};
use vlasov_core::period::{period_bound, period_quadrature, project_spatial, ElGrid};
use vlasov_core::phase::{AngularMomentum, Constant, Energy, RadialVelocity, Radius};
use vlasov_core::relativistic::RelativisticSteadyState;
use vlasov_core::{Background, PhaseFunction, PhaseSpace, PointMass, SteadyState};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, write_csv, write_json, write_provenance};
use crate::report::VerifyReport;
use crate::verify::{energy_bump, random_box, run_verify, Scales};

/// A Newtonian background usable by every orbit-level command.
pub trait NewtonianBackground: Background + PhaseSpace + Sync {}

impl<T: Background + PhaseSpace + Sync> NewtonianBackground for T {}

/// The steady state for Newtonian and point-mass modes.
pub fn background(cfg: &RunConfig) -> Result<Box<dyn NewtonianBackground>, CliError> {
    let ansatz = cfg.ansatz()?;
    match cfg.mode {
        Mode::Newtonian => Ok(Box::new(SteadyState::solve(
            ansatz,
            cfg.solver.y_center,
            &cfg.solver_options(),
        )?)),
        Mode::PointMassTest => Ok(Box::new(PointMass::new(cfg.solver.point_mass, ansatz)?)),
        Mode::Relativistic => Err(CliError::Usage(
            "this command needs a Newtonian or point-mass configuration".into(),
        )),
    }
}

#[derive(Serialize)]
struct NewtonianSummary {
    #[serde(rename = "M0")]
    m0: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "E0")]
    e0: f64,
}

#[derive(Serialize)]
struct RelativisticSummary {
    #[serde(rename = "M")]
    m: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "E0")]
    e0: f64,
}

/// `steady-state`: the radial profiles as CSV plus a JSON summary. Returns
/// the paths written.
pub fn steady_state(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    write_provenance(out, cfg)?;
    let ansatz = cfg.ansatz()?;
    let csv = out.join("steady_state.csv");
    let json = out.join("steady_state.json");
    match cfg.mode {
        Mode::Newtonian => {
            let s = SteadyState::solve(ansatz, cfg.solver.y_center, &cfg.solver_options())?;
            let rows = s
                .grid()
                .iter()
                .zip(s.potential_samples())
                .zip(s.mass_samples())
                .zip(s.density_samples())
                .map(|(((r, u), m), rho)| [*r, *u, *m, *rho].map(fmt_f64).to_vec());
            write_csv(&csv, &["r", "U0", "m0", "rho"], rows)?;
            let summary = NewtonianSummary {
                m0: s.total_mass(),
                r: s.radius(),
                e0: s.cutoff_energy(),
            };
            write_json(&json, &summary, "steady-state summary")?;
        }
        Mode::Relativistic => {
            let s = RelativisticSteadyState::solve(ansatz, cfg.solver.nu_center, &cfg.relativistic_options())?;
            let lambda = s.lambda_samples();
            let rows = (0..s.grid().len()).map(|i| {
                [
                    s.grid()[i],
                    s.mu_samples()[i],
                    lambda[i],
                    s.mass_samples()[i],
                    s.rho_samples()[i],
                    s.pressure_samples()[i],
                ]
                .map(fmt_f64)
                .to_vec()
            });
            write_csv(&csv, &["r", "mu0", "lambda0", "m", "rho", "p"], rows)?;
            let summary = RelativisticSummary {
                m: s.total_mass(),
                r: s.radius(),
                e0: s.cutoff(),
            };
            write_json(&json, &summary, "steady-state summary")?;
        }
        Mode::PointMassTest => {
            return Err(CliError::Usage("steady-state has no profile in point-mass-test mode".into()));
        }
    }
    Ok(vec![csv, json])
}

#[derive(Debug, Serialize, PartialEq)]
pub struct PotentialReport {
    #[serde(rename = "L")]
    pub l: f64,
    pub r_l: f64,
    pub psi_min: f64,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_plus: Option<f64>,
    /// `-M0/E`, an upper bound of `r_+`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_plus_bound: Option<f64>,
}

/// `potential`: the minimum of the effective potential and, for an energy,
/// the turning points.
pub fn potential<B: Background + ?Sized>(bg: &B, l: f64, e: Option<f64>) -> Result<PotentialReport, CliError> {
    let r_l = find_r_l(bg, l)?;
    let mut report = PotentialReport {
        l,
        r_l,
        psi_min: psi(bg, l, r_l)?,
        e,
        r_minus: None,
        r_plus: None,
        r_plus_bound: None,
    };
    if let Some(e) = e {
        let tp = find_turning_points(bg, e, l)?;
        report.r_minus = Some(tp.r_minus);
        report.r_plus = Some(tp.r_plus);
        report.r_plus_bound = Some(-bg.total_mass() / e);
    }
    Ok(report)
}

/// `orbit`: `periods` radial periods from the inner turning point, sampled
/// 200 times per period.
pub fn orbit<B: Background + ?Sized>(
    cfg: &RunConfig,
    bg: &B,
    e: f64,
    l: f64,
    periods: f64,
    out: &Path,
) -> Result<PathBuf, CliError> {
    if !(periods > 0.0 && periods.is_finite()) {
        return Err(CliError::Usage(format!("--periods must be positive, got {periods}")));
    }
    write_provenance(out, cfg)?;
    let tp = find_turning_points(bg, e, l)?;
    let period = period_quadrature(bg, e, l, cfg.grid.n_orbit)?;
    let h = orbit_step(&tp, period, cfg.grid.steps_per_period);
    let n = (200.0 * periods).ceil() as usize;
    let t_end = periods * period;
    let z0 = OrbitState::at_pericentre(&tp);
    let states = sample(bg, &z0, t_end, n, h, vlasov_core::orbit::Integrator::Yoshida6)?;
    let e_start = z0.energy(bg);
    let rows = std::iter::once((0.0, z0))
        .chain(states.into_iter().enumerate().map(|(i, z)| ((i + 1) as f64 * t_end / n as f64, z)))
        .map(|(t, z)| [t, z.r, z.w, (z.energy(bg) - e_start) / e_start.abs()].map(fmt_f64).to_vec());
    let path = out.join("orbit.csv");
    write_csv(&path, &["t", "r", "w", "energy_drift"], rows)?;
    Ok(path)
}

/// Parses `<nE>x<nL>`.
pub fn parse_grid(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("grid must look like 20x20, got `{text}`"));
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let n_e: usize = a.trim().parse().map_err(|_| bad())?;
    let n_l: usize = b.trim().parse().map_err(|_| bad())?;
    if n_e < 4 || n_l < 4 {
        return Err(CliError::Usage(format!("grid sizes must be at least 4, got {text}")));
    }
    Ok((n_e, n_l))
}

/// `period-table`: quadrature and integrated periods with the upper bound on
/// the admissible grid.
pub fn period_table<B: Background + Sync + ?Sized>(
    cfg: &RunConfig,
    bg: &B,
    n_e: usize,
    n_l: usize,
    out: &Path,
) -> Result<PathBuf, CliError> {
    write_provenance(out, cfg)?;
    let grid = ElGrid::new(bg, n_e, n_l, bg.cutoff_energy())?;
    let nodes: Vec<(f64, f64)> = grid.cells().filter_map(|(i, j)| grid.node(i, j)).collect();
    let options = vlasov_core::orbit::PeriodOptions {
        steps_per_period: cfg.grid.steps_per_period,
        ..Default::default()
    };
    let rows: Result<Vec<Vec<String>>, vlasov_core::Error> = nodes
        .par_iter()
        .map(|&(e, l)| {
            let t_quad = period_quadrature(bg, e, l, cfg.grid.n_orbit)?;
            let t_orbit = radial_period_by_integration(bg, e, l, &options)?.period;
            let t_bound = period_bound(bg, e, l)?;
            let ok = if t_quad <= t_bound { "true" } else { "false" };
            let mut row = [e, l, t_quad, t_orbit, t_bound].map(fmt_f64).to_vec();
            row.push(ok.to_string());
            Ok(row)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let path = out.join("period_table.csv");
    write_csv(&path, &["E", "L", "T_quad", "T_orbit", "T_bound", "ok_bound"], rows?)?;
    Ok(path)
}

/// Names accepted by `project --fn`.
pub const BUILTIN_FUNCTIONS: [&str; 7] =
    ["one", "radius", "radial-velocity", "w-squared", "angular-momentum", "energy", "energy-bump"];

/// Adds the seeded random test box to the builtin list.
pub const RANDOM_BOX: &str = "random-box";

struct WSquared;

impl PhaseFunction for WSquared {
    fn value(&self, _r: f64, w: f64, _l: f64) -> f64 {
        w * w
    }
}

fn project_with<B, F>(cfg: &RunConfig, bg: &B, f: &F, n_e: usize, n_l: usize) -> Result<Vec<Vec<String>>, CliError>
where
    B: Background + Sync + ?Sized,
    F: PhaseFunction + Sync,
{
    let grid = ElGrid::new(bg, n_e, n_l, bg.cutoff_energy())?;
    let nodes: Vec<(f64, f64)> = grid.cells().filter_map(|(i, j)| grid.node(i, j)).collect();
    let rows: Result<Vec<Vec<String>>, vlasov_core::Error> = nodes
        .par_iter()
        .map(|&(e, l)| {
            let pf = project_spatial(bg, f, e, l, cfg.grid.n_orbit)?;
            Ok([e, l, pf].map(fmt_f64).to_vec())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(rows?)
}

/// `project`: the orbit average of a builtin function on the admissible grid.
pub fn project(
    cfg: &RunConfig,
    bg: &dyn NewtonianBackground,
    name: &str,
    n_e: usize,
    n_l: usize,
    out: &Path,
) -> Result<PathBuf, CliError> {
    let rows = match name {
        "one" => project_with(cfg, bg, &Constant(1.0), n_e, n_l)?,
        "radius" => project_with(cfg, bg, &Radius, n_e, n_l)?,
        "radial-velocity" => project_with(cfg, bg, &RadialVelocity, n_e, n_l)?,
        "w-squared" => project_with(cfg, bg, &WSquared, n_e, n_l)?,
        "angular-momentum" => project_with(cfg, bg, &AngularMomentum, n_e, n_l)?,
        "energy" => project_with(cfg, bg, &Energy(bg), n_e, n_l)?,
        "energy-bump" => {
            let sc = Scales::of(bg, bg.support_radius());
            project_with(cfg, bg, &energy_bump(bg, &sc), n_e, n_l)?
        }
        RANDOM_BOX => {
            let sc = Scales::of(bg, bg.support_radius());
            let mut rng = crate::verify::seeded_rng(cfg.seed, 0);
            project_with(cfg, bg, &random_box(bg, &sc, &mut rng)?, n_e, n_l)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown function `{other}`; expected one of {}, {RANDOM_BOX}",
                BUILTIN_FUNCTIONS.join(", ")
            )))
        }
    };
    write_provenance(out, cfg)?;
    let path = out.join("projection.csv");
    write_csv(&path, &["E", "L", "Pf"], rows)?;
    Ok(path)
}

/// `verify`: runs the suite, writes `report.json` and returns the report;
/// failed claims turn into [`CliError::Verification`] at the caller.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<(VerifyReport, PathBuf), CliError> {
    write_provenance(out, cfg)?;
    let report = run_verify(cfg)?;
    let path = out.join("report.json");
    write_json(&path, &report, "verification report")?;
    Ok((report, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_argument() {
        assert_eq!(parse_grid("20x30").unwrap(), (20, 30));
        assert_eq!(parse_grid("8X8").unwrap(), (8, 8));
        assert!(parse_grid("20").is_err());
        assert!(parse_grid("2x20").is_err());
        assert!(parse_grid("axb").is_err());
    }

    #[test]
    fn potential_point_mass_closed_form() {
        let pm = PointMass::unit(-0.1).unwrap();
        let rep = potential(&pm, 1.0, Some(-0.375)).unwrap();
        // r_L = L / M, psi_min = -M^2 / (2L); r_+- = (1 +- e) a with
        // a = -M/(2E) and e^2 = 1 - 2|E| L / M^2 = 1/4.
        assert!((rep.r_l - 1.0).abs() < 1e-12);
        assert!((rep.psi_min + 0.5).abs() < 1e-12);
        let a = 1.0 / 0.75;
        assert!((rep.r_minus.unwrap() - 0.5 * a).abs() < 1e-12);
        assert!((rep.r_plus.unwrap() - 1.5 * a).abs() < 1e-12);
        assert!(rep.r_plus.unwrap() < rep.r_plus_bound.unwrap());
        assert!(potential(&pm, 1.0, Some(-0.6)).is_err());
    }
}
