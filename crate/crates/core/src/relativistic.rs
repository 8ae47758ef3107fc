//! Static, spherically symmetric Einstein-Vlasov states generated by the
//! polytropic ansatz, and the phase-space description used by the weighted
//! transport checks.
//!
//! The metric is `-e^(2 mu) dt^2 + e^(2 lambda) dr^2 + r^2 dOmega^2` with
//! `e^(-2 lambda) = 1 - 2m/r`. The particle energy is
//! `E = e^mu sqrt(1 + w^2 + L/r^2)`.
//!
//! Internally the solver works with `nu = mu - ln E0` and the amplitude
//! `A = c E0^k`, in which the source terms read `phi = A (1 - e^nu eps)_+^k`
//! with `eps = sqrt(1 + |v|^2)`. Matching to the Schwarzschild exterior
//! fixes the additive constant of `mu`, and with it the cutoff actually
//! realised by the solution.

use alloc::vec::Vec;

use crate::ansatz::{Ansatz, Regime};
use crate::error::{Error, Result};
use crate::interp::{stencil_slope, Hermite};
use crate::math::{ceil, cos, exp, ln, powf, sin, sqrt, FRAC_PI_2, PI};
use crate::ode::{adaptive_step, dp_step, Tolerances};
use crate::phase::{Interval, PhaseSpace};
use crate::quadrature::GaussLegendre;
use crate::roots::bisect;
use crate::steady_state::Closure;

/// Gauss-Legendre nodes of the momentum-space integrals.
const MOMENTUM_NODES: usize = 32;

/// Energy density and pressure for the reduced source `A (1 - e^nu eps)^k`.
///
/// With `eps = 1 + D sin^2(theta)`, `D = e^(-nu) - 1`, both endpoint
/// singularities of the momentum integrals are absorbed into powers of
/// `sin` and `cos`.
fn source_terms(rule: &GaussLegendre, exponent: f64, amplitude: f64, nu: f64) -> (f64, f64) {
    if nu >= 0.0 {
        return (0.0, 0.0);
    }
    let d = exp(-nu) - 1.0;
    let scale = amplitude * powf(exp(nu) * d, exponent);
    let mut rho = 0.0;
    let mut p = 0.0;
    for (theta, wt) in rule.mapped(0.0, FRAC_PI_2) {
        let (s, c) = (sin(theta), cos(theta));
        let eps = 1.0 + d * s * s;
        let u2 = d * s * s * (eps + 1.0);
        let u = sqrt(u2);
        let phi = scale * powf(c, 2.0 * exponent);
        let jac = 2.0 * d * s * c;
        rho += wt * eps * eps * u * phi * jac;
        p += wt * u2 * u * phi * jac;
    }
    (4.0 * PI * rho, 4.0 * PI / 3.0 * p)
}

/// `(rho, p)` at metric potential `mu` for a relativistic ansatz:
/// `rho = int sqrt(1 + |v|^2) phi(E) dv`, `p = int (x.v/r)^2 phi(E) dv / sqrt(1 + |v|^2)`.
pub fn rho_p(ansatz: &Ansatz, mu: f64) -> (f64, f64) {
    let e0 = ansatz.cutoff();
    let k = ansatz.exponent();
    let rule = GaussLegendre::new(MOMENTUM_NODES);
    source_terms(&rule, k, ansatz.amplitude() * powf(e0, k), mu - ln(e0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativisticOptions {
    /// Caps the ODE step at `R / grid_steps`.
    pub grid_steps: usize,
    pub rtol: f64,
    /// Give up if the density has not vanished by this many central length
    /// scales.
    pub r_max_scale: f64,
    /// `Match` iterates the central value until the exterior matching
    /// reproduces the ansatz cutoff; `Report` solves once and reports the
    /// realised cutoff.
    pub closure: Closure,
    /// Tolerance on `|ln E0_realised - ln E0|`.
    pub closure_tol: f64,
    pub max_iterations: usize,
}

impl Default for RelativisticOptions {
    fn default() -> Self {
        Self {
            grid_steps: 2000,
            rtol: 1e-12,
            r_max_scale: 1e5,
            closure: Closure::Match,
            closure_tol: 1e-10,
            max_iterations: 100,
        }
    }
}

struct RawSolution {
    r: Vec<f64>,
    nu: Vec<f64>,
    m: Vec<f64>,
}

impl RawSolution {
    fn radius(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn mass(&self) -> f64 {
        *self.m.last().unwrap()
    }

    /// `ln sqrt(1 - 2M/R)`, the value `mu(R)` must take.
    fn exterior_mu(&self) -> f64 {
        0.5 * ln(1.0 - 2.0 * self.mass() / self.radius())
    }
}

/// Tabulated static Einstein-Vlasov state.
#[derive(Debug, Clone)]
pub struct RelativisticSteadyState {
    ansatz: Ansatz,
    nominal: Ansatz,
    nu_center: f64,
    radius: f64,
    total_mass: f64,
    mu: Hermite,
    mass: Hermite,
    pressure: Hermite,
    rho: Vec<f64>,
    history: Vec<(f64, f64)>,
}

impl RelativisticSteadyState {
    /// Solves from a regular centre with `mu(0) - ln E0 = nu_center < 0`.
    ///
    /// With [`Closure::Match`], `nu_center` is only the first trial value.
    pub fn solve(ansatz: Ansatz, nu_center: f64, options: &RelativisticOptions) -> Result<Self> {
        if ansatz.regime() != Regime::Relativistic {
            return Err(Error::InvalidAnsatz("relativistic solver needs 0 < E0 < 1"));
        }
        if !(nu_center.is_finite() && nu_center < 0.0) {
            return Err(Error::domain(
                "nu_center",
                nu_center,
                "central value of mu - ln E0 must be negative",
            ));
        }
        let rule = GaussLegendre::new(MOMENTUM_NODES);
        let k = ansatz.exponent();
        let amplitude = ansatz.amplitude() * powf(ansatz.cutoff(), k);
        let target = ln(ansatz.cutoff());
        let mut history = Vec::new();
        let mut run = |nu_c: f64| -> Result<(RawSolution, f64)> {
            let raw = integrate(&rule, k, amplitude, nu_c, options)?;
            let residual = raw.exterior_mu() - target;
            history.push((nu_c, residual));
            Ok((raw, residual))
        };
        let (nu_c, raw) = match options.closure {
            Closure::Report => (nu_center, run(nu_center)?.0),
            Closure::Match => close(&mut run, nu_center, options)?,
        };
        Ok(Self::from_raw(ansatz, amplitude, nu_c, raw, &rule, history))
    }

    /// The flat, empty solution (`c -> 0`): `mu = lambda = 0`, `M = 0`.
    pub fn vacuum(ansatz: Ansatz) -> Self {
        let x = alloc::vec![0.0, 1.0];
        let zeros = alloc::vec![0.0, 0.0];
        Self {
            ansatz,
            nominal: ansatz,
            nu_center: -ln(ansatz.cutoff()),
            radius: 0.0,
            total_mass: 0.0,
            mu: Hermite::new(x.clone(), zeros.clone(), zeros.clone()),
            mass: Hermite::new(x.clone(), zeros.clone(), zeros.clone()),
            pressure: Hermite::new(x, zeros.clone(), zeros.clone()),
            rho: zeros,
            history: Vec::new(),
        }
    }

    fn from_raw(
        nominal: Ansatz,
        amplitude: f64,
        nu_center: f64,
        raw: RawSolution,
        rule: &GaussLegendre,
        history: Vec<(f64, f64)>,
    ) -> Self {
        let k = nominal.exponent();
        let radius = raw.radius();
        let total_mass = raw.mass();
        let shift = raw.exterior_mu();
        let cutoff = exp(shift);
        let ansatz = nominal
            .with_cutoff(cutoff)
            .with_amplitude(amplitude / powf(cutoff, k));
        let RawSolution { r, nu, m } = raw;
        let n = r.len();
        let mut mu = Vec::with_capacity(n);
        let mut dmu = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        let mut dm = Vec::with_capacity(n);
        for i in 0..n {
            let (rh, pr) = source_terms(rule, k, amplitude, nu[i]);
            mu.push(nu[i] + shift);
            dmu.push(mu_slope(r[i], m[i], pr));
            dm.push(4.0 * PI * r[i] * r[i] * rh);
            rho.push(rh);
            p.push(pr);
        }
        *mu.last_mut().unwrap() = shift;
        let dp: Vec<f64> = (0..n).map(|i| -(rho[i] + p[i]) * dmu[i]).collect();
        Self {
            ansatz,
            nominal,
            nu_center,
            radius,
            total_mass,
            mu: Hermite::monotone(r.clone(), mu, dmu),
            mass: Hermite::monotone(r.clone(), m, dm),
            pressure: Hermite::new(r, p, dp),
            rho,
            history,
        }
    }

    /// Ansatz with the cutoff realised by the exterior matching.
    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    /// Ansatz as requested.
    pub fn nominal_ansatz(&self) -> &Ansatz {
        &self.nominal
    }

    pub fn cutoff(&self) -> f64 {
        self.ansatz.cutoff()
    }

    pub fn nu_center(&self) -> f64 {
        self.nu_center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `(nu_center, ln E0_realised - ln E0)` for every trial solve.
    pub fn closure_history(&self) -> &[(f64, f64)] {
        &self.history
    }

    pub fn grid(&self) -> &[f64] {
        if self.radius > 0.0 {
            self.mu.nodes()
        } else {
            &[]
        }
    }

    pub fn mu_samples(&self) -> &[f64] {
        &self.mu.values()[..self.grid().len()]
    }

    pub fn mass_samples(&self) -> &[f64] {
        &self.mass.values()[..self.grid().len()]
    }

    pub fn rho_samples(&self) -> &[f64] {
        &self.rho[..self.grid().len()]
    }

    pub fn pressure_samples(&self) -> &[f64] {
        &self.pressure.values()[..self.grid().len()]
    }

    pub fn lambda_samples(&self) -> Vec<f64> {
        self.grid()
            .iter()
            .zip(self.mass_samples())
            .map(|(&r, &m)| lambda_of(r, m))
            .collect()
    }

    pub fn mu(&self, r: f64) -> f64 {
        if r >= self.radius {
            0.5 * ln(1.0 - 2.0 * self.total_mass / r)
        } else {
            self.mu.eval(r.max(0.0))
        }
    }

    pub fn mass_within(&self, r: f64) -> f64 {
        if r >= self.radius {
            self.total_mass
        } else if r <= 0.0 {
            0.0
        } else {
            self.mass.eval(r).clamp(0.0, self.total_mass)
        }
    }

    pub fn lambda(&self, r: f64) -> f64 {
        lambda_of(r, self.mass_within(r))
    }

    pub fn pressure(&self, r: f64) -> f64 {
        if r >= self.radius {
            0.0
        } else {
            self.pressure.eval(r.max(0.0)).max(0.0)
        }
    }

    pub fn energy_density(&self, r: f64) -> f64 {
        if r >= self.radius {
            0.0
        } else {
            rho_p(&self.ansatz, self.mu(r)).0
        }
    }

    /// `mu'(r) = e^(2 lambda) (m/r^2 + 4 pi r p)`, from the field equation.
    pub fn mu_prime(&self, r: f64) -> f64 {
        mu_slope(r, self.mass_within(r), self.pressure(r))
    }

    /// Largest `2m/r` on the grid.
    pub fn max_compactness(&self) -> f64 {
        self.grid()
            .iter()
            .zip(self.mass_samples())
            .filter(|(&r, _)| r > 0.0)
            .map(|(&r, &m)| 2.0 * m / r)
            .fold(0.0, f64::max)
    }

    /// Relative residuals of `e^(-2 lambda)(2 r lambda' - 1) + 1 = 8 pi r^2 rho`
    /// and `e^(-2 lambda)(2 r mu' + 1) - 1 = 8 pi r^2 p`, with derivatives
    /// taken by five-point differences of the tabulated `lambda` and `mu`.
    /// Both are scaled by the largest `8 pi r^2 rho` on the grid.
    pub fn field_equation_residuals(&self) -> [f64; 2] {
        let r = self.grid();
        if r.len() < 3 {
            return [0.0, 0.0];
        }
        let lambda = self.lambda_samples();
        let mu = self.mu_samples();
        let p = self.pressure_samples();
        let scale = r
            .iter()
            .zip(&self.rho)
            .map(|(&ri, &rho)| 8.0 * PI * ri * ri * rho)
            .fold(0.0, f64::max);
        let mut worst = [0.0f64; 2];
        for i in 1..r.len() - 1 {
            let dl = stencil_slope(r, &lambda, i, 2);
            let dmu = stencil_slope(r, mu, i, 2);
            let g = exp(-2.0 * lambda[i]);
            let ri = r[i];
            let first = g * (2.0 * ri * dl - 1.0) + 1.0 - 8.0 * PI * ri * ri * self.rho[i];
            let second = g * (2.0 * ri * dmu + 1.0) - 1.0 - 8.0 * PI * ri * ri * p[i];
            worst[0] = worst[0].max(first.abs() / scale);
            worst[1] = worst[1].max(second.abs() / scale);
        }
        worst
    }
}

fn lambda_of(r: f64, m: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        -0.5 * ln(1.0 - 2.0 * m / r)
    }
}

fn mu_slope(r: f64, m: f64, p: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    (m / (r * r) + 4.0 * PI * r * p) / (1.0 - 2.0 * m / r)
}

/// Brackets the root of the closure residual in `nu_center` and refines it
/// with the Illinois variant of regula falsi.
fn close<F>(run: &mut F, trial: f64, options: &RelativisticOptions) -> Result<(f64, RawSolution)>
where
    F: FnMut(f64) -> Result<(RawSolution, f64)>,
{
    let budget = options.max_iterations.max(2);
    let mut used = 0;
    let mut eval = |nu: f64, used: &mut usize| -> Result<(RawSolution, f64)> {
        *used += 1;
        if *used > budget {
            return Err(Error::Closure {
                iterations: budget,
                residual: f64::NAN,
            });
        }
        run(nu)
    };
    // The residual decreases as the centre gets deeper (more compact star).
    let (first, g_first) = eval(trial, &mut used)?;
    if g_first.abs() <= options.closure_tol {
        return Ok((trial, first));
    }
    // `a` has a negative residual, `b` a positive one.
    let (mut a, mut ga, mut b, mut gb);
    if g_first > 0.0 {
        (b, gb) = (trial, g_first);
        loop {
            let x = 2.0 * b;
            let g = eval(x, &mut used)?.1;
            if g < 0.0 {
                (a, ga) = (x, g);
                break;
            }
            if g >= gb {
                // Past the most compact configuration of the first branch:
                // no static solution reaches this cutoff.
                return Err(Error::Closure {
                    iterations: used,
                    residual: gb,
                });
            }
            (b, gb) = (x, g);
        }
    } else {
        (a, ga) = (trial, g_first);
        loop {
            let x = 0.5 * a;
            let g = eval(x, &mut used)?.1;
            if g > 0.0 {
                (b, gb) = (x, g);
                break;
            }
            (a, ga) = (x, g);
        }
    }
    let mut side = 0i8;
    let mut last = 0.0;
    loop {
        let c = (a * gb - b * ga) / (gb - ga);
        let (raw, gc) = eval(c, &mut used).map_err(|e| match e {
            Error::Closure { iterations, .. } => Error::Closure {
                iterations,
                residual: last,
            },
            other => other,
        })?;
        last = gc;
        if gc.abs() <= options.closure_tol {
            return Ok((c, raw));
        }
        if gc < 0.0 {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
}

fn central_length(rule: &GaussLegendre, k: f64, amplitude: f64, nu_c: f64) -> f64 {
    let (rho, p) = source_terms(rule, k, amplitude, nu_c);
    sqrt(-nu_c / (2.0 * PI / 3.0 * (rho + 3.0 * p)))
}

fn integrate(
    rule: &GaussLegendre,
    k: f64,
    amplitude: f64,
    nu_c: f64,
    options: &RelativisticOptions,
) -> Result<RawSolution> {
    let a = central_length(rule, k, amplitude, nu_c);
    let coarse = shoot(rule, k, amplitude, nu_c, a / 20.0, 1e-10, options.r_max_scale * a)?;
    let h = coarse.radius() / options.grid_steps.max(16) as f64;
    shoot(rule, k, amplitude, nu_c, h, options.rtol, options.r_max_scale * a)
}

fn shoot(
    rule: &GaussLegendre,
    k: f64,
    amplitude: f64,
    nu_c: f64,
    h_max: f64,
    rtol: f64,
    r_max: f64,
) -> Result<RawSolution> {
    let rhs = |r: f64, s: &[f64; 2]| -> [f64; 2] {
        let (rho, p) = source_terms(rule, k, amplitude, s[1]);
        [4.0 * PI * r * r * rho, mu_slope(r, s[0], p)]
    };
    let tol = Tolerances {
        rtol,
        atol: rtol * nu_c.abs(),
        h_max,
        h_min: h_max * 1e-12,
    };
    let (rho_c, p_c) = source_terms(rule, k, amplitude, nu_c);
    let mut r_nodes = alloc::vec![0.0];
    let mut nu_nodes = alloc::vec![nu_c];
    let mut m_nodes = alloc::vec![0.0];
    let mut r = h_max;
    let mut state = [
        4.0 * PI / 3.0 * rho_c * r * r * r,
        nu_c + 2.0 * PI / 3.0 * (rho_c + 3.0 * p_c) * r * r,
    ];
    r_nodes.push(r);
    m_nodes.push(state[0]);
    nu_nodes.push(state[1]);
    let mut h = h_max;
    loop {
        if r > r_max {
            return Err(Error::NonCompactSupport { r_max });
        }
        let (used, next, h_next) = adaptive_step(&rhs, r, &state, h, &tol)?;
        let ratio = 2.0 * next[0] / (r + used);
        if !(ratio < 1.0) {
            return Err(Error::Horizon { r: r + used, ratio });
        }
        if next[1] >= 0.0 {
            let start = state;
            let r0 = r;
            let frac = bisect(
                |theta| {
                    if theta == 0.0 {
                        start[1]
                    } else {
                        dp_step(&rhs, r0, &start, theta * used).0[1]
                    }
                },
                0.0,
                1.0,
                1e-15,
            )?;
            let step = frac * used;
            let end = dp_step(&rhs, r0, &start, step).0;
            let radius = r0 + step;
            // A root just past the last node would leave a sliver cell;
            // move that node onto the root instead.
            if step > 1e-2 * h_max {
                r_nodes.push(radius);
                nu_nodes.push(0.0);
                m_nodes.push(end[0]);
            } else {
                *r_nodes.last_mut().unwrap() = radius;
                *nu_nodes.last_mut().unwrap() = 0.0;
                *m_nodes.last_mut().unwrap() = end[0];
            }
            return Ok(RawSolution {
                r: r_nodes,
                nu: nu_nodes,
                m: m_nodes,
            });
        }
        r += used;
        state = next;
        h = h_next;
        r_nodes.push(r);
        m_nodes.push(state[0]);
        nu_nodes.push(state[1]);
    }
}

impl RelativisticSteadyState {
    /// `e^(mu(r)) sqrt(1 + w^2 + L/r^2)`.
    pub fn particle_energy(&self, r: f64, w: f64, l: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain("r", r, "radius must be positive"));
        }
        Ok(PhaseSpace::energy(self, r, w, l))
    }
}

impl PhaseSpace for RelativisticSteadyState {
    fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    fn energy(&self, r: f64, w: f64, l: f64) -> f64 {
        exp(self.mu(r)) * sqrt(1.0 + w * w + l / (r * r))
    }

    fn energy_gradient(&self, r: f64, w: f64, l: f64) -> [f64; 2] {
        let em = exp(self.mu(r));
        let s = sqrt(1.0 + w * w + l / (r * r));
        [
            self.mu_prime(r) * em * s - em * l / (r * r * r * s),
            em * w / s,
        ]
    }

    fn transport_factor(&self, r: f64) -> f64 {
        exp(-self.lambda(r))
    }

    fn measure_factor(&self, r: f64) -> f64 {
        exp(self.lambda(r))
    }

    fn radial_reach(&self, e: f64) -> f64 {
        if e >= 1.0 {
            return f64::INFINITY;
        }
        if e <= exp(self.mu(0.0)) {
            return 0.0;
        }
        let outside = 2.0 * self.total_mass / (1.0 - e * e);
        if outside >= self.radius {
            return outside;
        }
        bisect(|r| exp(self.mu(r)) - e, 0.0, self.radius, 1e-15).unwrap_or(self.radius)
    }

    fn l_reach(&self, r: f64, e: f64) -> f64 {
        let q = e * exp(-self.mu(r));
        (r * r * (q * q - 1.0)).max(0.0)
    }

    fn w_reach(&self, r: f64, l: f64, e: f64) -> f64 {
        let q = e * exp(-self.mu(r));
        sqrt((q * q - 1.0 - l / (r * r)).max(0.0))
    }

    fn box_energy_bound(&self, r: Interval, w_abs: f64, l_hi: f64) -> f64 {
        // mu increases with r and L/r^2 decreases, so bound each factor at
        // its own worst end.
        let r_lo = r.lo.max(0.0);
        if r_lo == 0.0 && l_hi > 0.0 {
            return f64::INFINITY;
        }
        let l_term = if l_hi > 0.0 { l_hi / (r_lo * r_lo) } else { 0.0 };
        exp(self.mu(r.hi)) * sqrt(1.0 + w_abs * w_abs + l_term)
    }

    fn characteristic_flow(&self, r: f64, w: f64, l: f64, t: f64, h: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::domain("r", r, "radius must be positive"));
        }
        if t == 0.0 {
            return Ok((r, w));
        }
        let rhs = |_t: f64, z: &[f64; 2]| -> [f64; 2] {
            let [er, ew] = self.energy_gradient(z[0], z[1], l);
            let f = self.transport_factor(z[0]);
            [f * ew, -f * er]
        };
        let n = ceil(t.abs() / h.abs()).max(1.0) as usize;
        let step = t / n as f64;
        let mut z = [r, w];
        for i in 0..n {
            z = dp_step(&rhs, i as f64 * step, &z, step).0;
            if !(z[0] > 0.0) || !z[0].is_finite() {
                return Err(Error::StepTooCoarse { r: z[0] });
            }
        }
        Ok((z[0], z[1]))
    }
}
