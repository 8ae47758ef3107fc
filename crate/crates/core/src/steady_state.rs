//! Newtonian steady states.
//!
//! For the polytropic ansatz the density depends only on the relative
//! potential `y = E0 - U0`, so the radial Poisson equation is integrated for
//! `y(r)` and the enclosed mass `m(r)`:
//!
//! ```text
//! y' = -m / r^2,    m' = 4 pi r^2 rho(y),    y(0) = y_c,  m(0) = 0,
//! ```
//!
//! outward until the first zero `R` of `y`. Outside `R` the potential is
//! Keplerian, `U0 = -M0 / r`, and continuity at `R` fixes `E0 = -M0 / R`.

use alloc::vec::Vec;

use crate::ansatz::{Ansatz, Regime};
use crate::error::{Error, Result};
use crate::interp::{stencil_slope, Hermite};
use crate::math::{sqrt, PI};
use crate::ode::{adaptive_step, dp_step, Tolerances};
use crate::roots::bisect;

/// A spherically symmetric Newtonian potential together with the ansatz
/// that generates it.
pub trait Background {
    fn ansatz(&self) -> &Ansatz;

    /// `U0(r)`.
    fn potential(&self, r: f64) -> f64;

    /// `m0(r)`, the mass inside radius `r`.
    fn mass_within(&self, r: f64) -> f64;

    fn total_mass(&self) -> f64;

    /// Radius beyond which the steady state has no matter.
    fn support_radius(&self) -> f64;

    fn density(&self, r: f64) -> f64;

    fn cutoff_energy(&self) -> f64 {
        self.ansatz().cutoff()
    }

    /// `U0'(r) = m0(r) / r^2`.
    fn potential_slope(&self, r: f64) -> f64 {
        self.mass_within(r) / (r * r)
    }
}

impl<B: Background + ?Sized> Background for &B {
    fn ansatz(&self) -> &Ansatz {
        (**self).ansatz()
    }
    fn potential(&self, r: f64) -> f64 {
        (**self).potential(r)
    }
    fn mass_within(&self, r: f64) -> f64 {
        (**self).mass_within(r)
    }
    fn total_mass(&self) -> f64 {
        (**self).total_mass()
    }
    fn support_radius(&self) -> f64 {
        (**self).support_radius()
    }
    fn density(&self, r: f64) -> f64 {
        (**self).density(r)
    }
    fn cutoff_energy(&self) -> f64 {
        (**self).cutoff_energy()
    }
    fn potential_slope(&self, r: f64) -> f64 {
        (**self).potential_slope(r)
    }
}

/// Point-mass stand-in `U = -M/r`, `m0 = M`, `rho0 = 0`.
///
/// Not a steady state of the self-consistent system, but the turning
/// points, periods and the concavity estimate are all available in closed
/// form, which makes it the reference configuration for unit tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    mass: f64,
    ansatz: Ansatz,
}

impl PointMass {
    pub fn new(mass: f64, ansatz: Ansatz) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain("M", mass, "point mass must be positive"));
        }
        if ansatz.regime() != Regime::Newtonian {
            return Err(Error::InvalidAnsatz("point-mass mode needs a Newtonian cutoff"));
        }
        Ok(Self { mass, ansatz })
    }

    /// Unit mass with a linear ansatz and the given cutoff.
    pub fn unit(cutoff: f64) -> Result<Self> {
        Self::new(1.0, Ansatz::polytrope(1.0, 1.0, cutoff, Regime::Newtonian)?)
    }
}

impl Background for PointMass {
    fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }
    fn potential(&self, r: f64) -> f64 {
        -self.mass / r
    }
    fn mass_within(&self, _r: f64) -> f64 {
        self.mass
    }
    fn total_mass(&self) -> f64 {
        self.mass
    }
    fn support_radius(&self) -> f64 {
        self.mass / self.ansatz.cutoff().abs()
    }
    fn density(&self, _r: f64) -> f64 {
        0.0
    }
}

/// How the cutoff energy of the solved state is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closure {
    /// Keep the central relative potential and report `E0 = -M0/R`.
    #[default]
    Report,
    /// Rescale the central relative potential (polytropic scaling symmetry)
    /// so that `-M0/R` reproduces the ansatz cutoff.
    Match,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Number of radial steps across the support (caps the ODE step at
    /// `R / grid_steps`).
    pub grid_steps: usize,
    /// Relative tolerance of the embedded error estimate.
    pub rtol: f64,
    /// Give up if the density has not vanished by this radius, in units of
    /// the central length scale.
    pub r_max_scale: f64,
    pub closure: Closure,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_steps: 2000,
            rtol: 1e-12,
            r_max_scale: 1e5,
            closure: Closure::Report,
        }
    }
}

/// Tabulated Newtonian steady state.
#[derive(Debug, Clone)]
pub struct SteadyState {
    ansatz: Ansatz,
    nominal_cutoff: f64,
    central_relative_potential: f64,
    radius: f64,
    total_mass: f64,
    potential: Hermite,
    mass: Hermite,
    density: Vec<f64>,
}

struct RawSolution {
    r: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl SteadyState {
    /// Shooting solution for `y(0) = y_center`.
    pub fn solve(ansatz: Ansatz, y_center: f64, options: &SolverOptions) -> Result<Self> {
        if ansatz.regime() != Regime::Newtonian {
            return Err(Error::InvalidAnsatz("Newtonian solver needs a negative cutoff"));
        }
        if !(y_center.is_finite() && y_center > 0.0) {
            return Err(Error::domain(
                "y_center",
                y_center,
                "central relative potential must be positive",
            ));
        }
        let mut y_c = y_center;
        let mut raw = integrate(&ansatz, y_c, options)?;
        if options.closure == Closure::Match {
            let (r_end, m_end) = (*raw.r.last().unwrap(), *raw.m.last().unwrap());
            // y -> a y(b r) with b^2 = a^(n-1) maps solutions to solutions and
            // scales -M/R by a.
            let scale = ansatz.cutoff() / (-m_end / r_end);
            y_c *= scale;
            raw = integrate(&ansatz, y_c, options)?;
        }
        Ok(Self::from_raw(ansatz, y_c, raw))
    }

    fn from_raw(ansatz: Ansatz, y_center: f64, raw: RawSolution) -> Self {
        let RawSolution { r, y, m } = raw;
        let radius = *r.last().unwrap();
        let total_mass = *m.last().unwrap();
        let cutoff = -total_mass / radius;
        let closed = ansatz.with_cutoff(cutoff);
        let u: Vec<f64> = y.iter().map(|&yi| cutoff - yi).collect();
        let du: Vec<f64> = r
            .iter()
            .zip(&m)
            .map(|(&ri, &mi)| if ri > 0.0 { mi / (ri * ri) } else { 0.0 })
            .collect();
        let density: Vec<f64> = y.iter().map(|&yi| ansatz.density_unchecked(yi)).collect();
        let dm: Vec<f64> = r
            .iter()
            .zip(&density)
            .map(|(&ri, &rho)| 4.0 * PI * ri * ri * rho)
            .collect();
        let mut u = u;
        // The last node is the matching point; pin it to the exterior value.
        *u.last_mut().unwrap() = cutoff;
        Self {
            ansatz: closed,
            nominal_cutoff: ansatz.cutoff(),
            central_relative_potential: y_center,
            radius,
            total_mass,
            potential: Hermite::monotone(r.clone(), u, du),
            mass: Hermite::monotone(r, m, dm),
            density,
        }
    }

    /// Cutoff requested by the caller before closure.
    pub fn nominal_cutoff(&self) -> f64 {
        self.nominal_cutoff
    }

    pub fn central_relative_potential(&self) -> f64 {
        self.central_relative_potential
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Radial grid `0 = r_0 < ... < r_N = R`.
    pub fn grid(&self) -> &[f64] {
        self.potential.nodes()
    }

    pub fn potential_samples(&self) -> &[f64] {
        self.potential.values()
    }

    pub fn mass_samples(&self) -> &[f64] {
        self.mass.values()
    }

    pub fn density_samples(&self) -> &[f64] {
        &self.density
    }

    /// Largest `|(r^2 U0')' - 4 pi r^2 rho|` over interior grid nodes,
    /// relative to the largest `4 pi r^2 rho`. Both derivatives are
    /// five-point differences of the tabulated potential.
    pub fn poisson_residual(&self) -> f64 {
        let r = self.grid();
        let u = self.potential_samples();
        let n = r.len();
        if n < 9 {
            return f64::NAN;
        }
        let flux: Vec<f64> = (0..n).map(|i| r[i] * r[i] * stencil_slope(r, u, i, 2)).collect();
        let source: Vec<f64> = (0..n).map(|i| 4.0 * PI * r[i] * r[i] * self.density[i]).collect();
        let scale = source.iter().cloned().fold(0.0, f64::max);
        (4..n - 4)
            .map(|i| (stencil_slope(r, &flux, i, 2) - source[i]).abs() / scale)
            .fold(0.0, f64::max)
    }
}

impl Background for SteadyState {
    fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    fn potential(&self, r: f64) -> f64 {
        if r >= self.radius {
            -self.total_mass / r
        } else {
            self.potential.eval(r.max(0.0))
        }
    }

    fn mass_within(&self, r: f64) -> f64 {
        if r >= self.radius {
            self.total_mass
        } else if r <= 0.0 {
            0.0
        } else {
            self.mass.eval(r).clamp(0.0, self.total_mass)
        }
    }

    fn total_mass(&self) -> f64 {
        self.total_mass
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }

    fn density(&self, r: f64) -> f64 {
        if r >= self.radius {
            0.0
        } else {
            self.ansatz
                .density_unchecked(self.ansatz.cutoff() - self.potential(r))
        }
    }
}

/// Lane-Emden series about the centre, through `xi^6`.
fn central_series(ansatz: &Ansatz, y_c: f64, r: f64) -> [f64; 2] {
    let n = ansatz.exponent() + 1.5;
    let a = length_scale(ansatz, y_c);
    let xi = r / a;
    let x2 = xi * xi;
    let theta = 1.0 - x2 / 6.0 + n * x2 * x2 / 120.0 - n * (8.0 * n - 5.0) * x2 * x2 * x2 / 15120.0;
    let dtheta = -xi / 3.0 + n * xi * x2 / 30.0 - n * (8.0 * n - 5.0) * xi * x2 * x2 / 2520.0;
    [y_c * theta, -a * y_c * x2 * dtheta]
}

/// Central length scale `a = (4 pi c_k y_c^(n-1))^(-1/2)`.
fn length_scale(ansatz: &Ansatz, y_c: f64) -> f64 {
    let n = ansatz.exponent() + 1.5;
    1.0 / sqrt(4.0 * PI * ansatz.density_constant() * crate::math::powf(y_c, n - 1.0))
}

fn integrate(ansatz: &Ansatz, y_c: f64, options: &SolverOptions) -> Result<RawSolution> {
    let a = length_scale(ansatz, y_c);
    // A coarse pass fixes the support radius, which sets the grid spacing.
    let coarse = shoot(ansatz, y_c, a / 20.0, 1e-10, options.r_max_scale * a)?;
    let r_est = *coarse.r.last().unwrap();
    let h = r_est / options.grid_steps.max(16) as f64;
    shoot(ansatz, y_c, h, options.rtol, options.r_max_scale * a)
}

fn shoot(ansatz: &Ansatz, y_c: f64, h_max: f64, rtol: f64, r_max: f64) -> Result<RawSolution> {
    let rhs = |r: f64, s: &[f64; 2]| -> [f64; 2] {
        let rho = ansatz.density_unchecked(s[0]);
        [-s[1] / (r * r), 4.0 * PI * r * r * rho]
    };
    let tol = Tolerances {
        rtol,
        atol: rtol * y_c,
        h_max,
        h_min: h_max * 1e-12,
    };
    let mut r_nodes = alloc::vec![0.0];
    let mut y_nodes = alloc::vec![y_c];
    let mut m_nodes = alloc::vec![0.0];

    let mut r = h_max;
    let mut state = central_series(ansatz, y_c, r);
    r_nodes.push(r);
    y_nodes.push(state[0]);
    m_nodes.push(state[1]);
    let mut h = h_max;
    loop {
        if r > r_max {
            return Err(Error::NonCompactSupport { r_max });
        }
        let (used, next, h_next) = adaptive_step(&rhs, r, &state, h, &tol)?;
        if next[0] <= 0.0 {
            // Root inside this step: bisect on the step length.
            let start = state;
            let r0 = r;
            let frac = bisect(
                |theta| {
                    if theta == 0.0 {
                        start[0]
                    } else {
                        dp_step(&rhs, r0, &start, theta * used).0[0]
                    }
                },
                0.0,
                1.0,
                1e-15,
            )?;
            let step = frac * used;
            let root_state = dp_step(&rhs, r0, &start, step).0;
            let radius = r0 + step;
            // A root just past the last node would leave a sliver cell;
            // move that node onto the root instead.
            if step > 1e-2 * h_max {
                r_nodes.push(radius);
                y_nodes.push(0.0);
                m_nodes.push(root_state[1]);
            } else {
                *r_nodes.last_mut().unwrap() = radius;
                *y_nodes.last_mut().unwrap() = 0.0;
                *m_nodes.last_mut().unwrap() = root_state[1];
            }
            return Ok(RawSolution {
                r: r_nodes,
                y: y_nodes,
                m: m_nodes,
            });
        }
        r += used;
        state = next;
        h = h_next;
        r_nodes.push(r);
        y_nodes.push(state[0]);
        m_nodes.push(state[1]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k1() -> SteadyState {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        SteadyState::solve(a, 1.0, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn matching_condition_and_exterior() {
        let s = k1();
        let (m, r) = (s.total_mass(), s.radius());
        assert!(m > 0.0 && r > 0.0 && r.is_finite());
        let e0 = s.cutoff_energy();
        assert_relative_eq!(e0, -m / r, max_relative = 1e-15);
        let inside = s.potential.eval(r);
        assert!((inside - (-m / r)).abs() <= 1e-10 * e0.abs());
        assert_relative_eq!(s.potential(2.0 * r), -m / (2.0 * r), max_relative = 1e-15);
        assert!(s.potential(1e12).abs() < 1e-10);
        assert_eq!(s.mass_within(0.0), 0.0);
        assert_eq!(s.mass_within(r), m);
        assert_eq!(s.mass_within(3.0 * r), m);
    }

    #[test]
    fn potential_is_increasing_and_above_point_mass_bound() {
        let s = k1();
        let m = s.total_mass();
        let u = s.potential_samples();
        assert!(u.windows(2).all(|w| w[1] > w[0]));
        for (&ri, &ui) in s.grid().iter().zip(u).skip(1) {
            assert!(ui >= -m / ri);
        }
        let ms = s.mass_samples();
        assert!(ms.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn lane_emden_radius_for_n_two_and_a_half() {
        // k = 1 gives the n = 5/2 Lane-Emden problem with xi_1 = 5.35527546.
        let s = k1();
        let a = length_scale(s.ansatz(), s.central_relative_potential());
        assert_relative_eq!(s.radius() / a, 5.355_275_46, max_relative = 1e-8);
    }

    #[test]
    fn match_closure_hits_requested_cutoff() {
        let a = Ansatz::polytrope(1.5, 2.0, -0.3, Regime::Newtonian).unwrap();
        let opts = SolverOptions {
            closure: Closure::Match,
            ..SolverOptions::default()
        };
        let s = SteadyState::solve(a, 1.0, &opts).unwrap();
        assert_relative_eq!(s.cutoff_energy(), -0.3, max_relative = 1e-9);
        assert_eq!(s.nominal_cutoff(), -0.3);
    }

    #[test]
    fn rejects_relativistic_ansatz_and_bad_centre() {
        let rel = Ansatz::polytrope(1.0, 1.0, 0.9, Regime::Relativistic).unwrap();
        assert!(SteadyState::solve(rel, 1.0, &SolverOptions::default()).is_err());
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        assert!(SteadyState::solve(a, 0.0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn poisson_equation_holds_on_grid() {
        let r = k1().poisson_residual();
        assert!(r <= 1e-6, "{r}");
    }

    #[test]
    fn mass_is_integral_of_density() {
        let s = k1();
        let gl = crate::quadrature::GaussLegendre::new(32);
        let m = gl.integrate_panels(0.0, s.radius(), 64, |r| 4.0 * PI * r * r * s.density(r));
        assert_relative_eq!(m, s.total_mass(), max_relative = 1e-8);
    }

    #[test]
    fn enclosed_mass_is_flux_of_potential() {
        let s = k1();
        let (r, u, m) = (s.grid(), s.potential_samples(), s.mass_samples());
        for i in (5..r.len() - 5).step_by(37) {
            let flux = r[i] * r[i] * stencil_slope(r, u, i, 2);
            assert!((flux - m[i]).abs() <= 1e-8 * s.total_mass(), "{i}: {flux} {}", m[i]);
        }
    }

    #[test]
    fn halving_the_step_leaves_mass_and_radius() {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        let coarse = k1();
        let fine = SteadyState::solve(
            a,
            1.0,
            &SolverOptions {
                grid_steps: 4000,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert_relative_eq!(coarse.total_mass(), fine.total_mass(), max_relative = 1e-6);
        assert_relative_eq!(coarse.radius(), fine.radius(), max_relative = 1e-6);
    }

    #[test]
    fn density_matches_velocity_integral() {
        // rho(y) = int phi(E0 - y + |v|^2/2) d^3v = 4 pi int_0^sqrt(2y) phi v^2 dv,
        // with v = sqrt(2y) sin(t) to smooth the upper endpoint.
        let a = Ansatz::polytrope(1.5, 0.7, -0.2, Regime::Newtonian).unwrap();
        let gl = crate::quadrature::GaussLegendre::new(64);
        for y in [0.01, 0.1, 0.3, 1.0] {
            let e0 = a.cutoff();
            let vm = sqrt(2.0 * y);
            let direct = 4.0
                * PI
                * gl.integrate(0.0, crate::math::FRAC_PI_2, |t| {
                    let v = vm * crate::math::sin(t);
                    a.phi(e0 - y + 0.5 * v * v) * v * v * vm * crate::math::cos(t)
                });
            assert_relative_eq!(a.density(y).unwrap(), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn potential_bounded_below_by_point_mass() {
        let s = k1();
        let m = s.total_mass();
        for i in 1..=100 {
            let r = 1.5 * s.radius() * i as f64 / 100.0;
            assert!(s.potential(r) >= -m / r - 1e-15);
        }
    }

    #[test]
    fn point_mass_closed_forms() {
        let p = PointMass::unit(-0.5).unwrap();
        assert_eq!(p.potential(2.0), -0.5);
        assert_eq!(p.mass_within(0.1), 1.0);
        assert_eq!(p.support_radius(), 2.0);
    }
}
