//! Symplectic integration of the radial characteristic system
//!
//! ```text
//! r' = w,    w' = -psi_L'(r) = (L/r - m0(r)) / r^2,    L' = 0.
//! ```
//!
//! The force uses the interpolated enclosed mass, never a numerical
//! derivative of the potential table.

use alloc::vec::Vec;

use crate::effective::{find_turning_points, psi_prime_unchecked, psi_unchecked, TurningPoints};
use crate::error::{Error, Result};
use crate::math::{ceil, sqrt, PI};
use crate::steady_state::Background;

/// Splitting scheme used by [`flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Second order Stormer-Verlet (kick-drift-kick).
    Leapfrog,
    /// Sixth order symmetric composition of seven Stormer-Verlet stages.
    #[default]
    Yoshida6,
}

// Yoshida's sixth order "solution A".
const Y6_W1: f64 = -1.177_679_984_178_871;
const Y6_W2: f64 = 0.235_573_213_359_358_13;
const Y6_W3: f64 = 0.784_513_610_477_557_3;
const Y6_W0: f64 = 1.0 - 2.0 * (Y6_W1 + Y6_W2 + Y6_W3);
const Y6: [f64; 7] = [Y6_W3, Y6_W2, Y6_W1, Y6_W0, Y6_W1, Y6_W2, Y6_W3];
const LEAPFROG: [f64; 1] = [1.0];

impl Integrator {
    fn stages(self) -> &'static [f64] {
        match self {
            Integrator::Leapfrog => &LEAPFROG,
            Integrator::Yoshida6 => &Y6,
        }
    }

    /// Global order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Integrator::Leapfrog => 2,
            Integrator::Yoshida6 => 6,
        }
    }
}

/// A point `(r, w)` of the reduced phase space at fixed `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitState {
    pub r: f64,
    pub w: f64,
    pub l: f64,
    energy: f64,
}

impl OrbitState {
    pub fn new<B: Background + ?Sized>(bg: &B, r: f64, w: f64, l: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain("r", r, "orbit radius must be positive"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::domain("L", l, "angular momentum must be positive"));
        }
        Ok(Self {
            r,
            w,
            l,
            energy: 0.5 * w * w + psi_unchecked(bg, l, r),
        })
    }

    /// The state at rest at the inner turning point.
    pub fn at_pericentre(tp: &TurningPoints) -> Self {
        Self {
            r: tp.r_minus,
            w: 0.0,
            l: tp.l,
            energy: tp.energy,
        }
    }

    /// Energy at construction; the flow carries it along unchanged.
    pub fn cached_energy(&self) -> f64 {
        self.energy
    }

    /// Energy recomputed at the current position.
    pub fn energy<B: Background + ?Sized>(&self, bg: &B) -> f64 {
        0.5 * self.w * self.w + psi_unchecked(bg, self.l, self.r)
    }

    fn with(&self, r: f64, w: f64) -> Self {
        Self { r, w, ..*self }
    }
}

#[derive(Clone, Copy)]
struct Phase {
    r: f64,
    w: f64,
    acc: f64,
}

#[inline]
fn acceleration<B: Background + ?Sized>(bg: &B, l: f64, r: f64) -> f64 {
    -psi_prime_unchecked(bg, l, r)
}

#[inline]
fn step<B: Background + ?Sized>(
    bg: &B,
    l: f64,
    mut z: Phase,
    dt: f64,
    stages: &[f64],
) -> Result<Phase> {
    for &c in stages {
        let h = c * dt;
        z.w += 0.5 * h * z.acc;
        z.r += h * z.w;
        if !(z.r > 0.0) {
            return Err(Error::StepTooCoarse { r: z.r });
        }
        z.acc = acceleration(bg, l, z.r);
        z.w += 0.5 * h * z.acc;
    }
    Ok(z)
}

/// The flow map `(R, W)(t, z0)`, using `ceil(|t| / h)` equal steps of size
/// at most `h`. Negative `t` integrates backwards.
pub fn flow<B: Background + ?Sized>(
    bg: &B,
    z0: &OrbitState,
    t: f64,
    h: f64,
    integrator: Integrator,
) -> Result<OrbitState> {
    if !(h > 0.0) {
        return Err(Error::domain("h", h, "time step must be positive"));
    }
    if t == 0.0 {
        return Ok(*z0);
    }
    let n = ceil(t.abs() / h).max(1.0) as usize;
    let dt = t / n as f64;
    let stages = integrator.stages();
    let mut z = Phase {
        r: z0.r,
        w: z0.w,
        acc: acceleration(bg, z0.l, z0.r),
    };
    for _ in 0..n {
        z = step(bg, z0.l, z, dt, stages)?;
    }
    Ok(z0.with(z.r, z.w))
}

/// States at `t_j = j * t_end / n` for `j = 0..n`, each reached with steps
/// of size at most `h`.
pub fn sample<B: Background + ?Sized>(
    bg: &B,
    z0: &OrbitState,
    t_end: f64,
    n: usize,
    h: f64,
    integrator: Integrator,
) -> Result<Vec<OrbitState>> {
    if !(h > 0.0) {
        return Err(Error::domain("h", h, "time step must be positive"));
    }
    let n = n.max(1);
    let interval = t_end / n as f64;
    let sub = ceil(interval.abs() / h).max(1.0) as usize;
    let dt = interval / sub as f64;
    let stages = integrator.stages();
    let mut z = Phase {
        r: z0.r,
        w: z0.w,
        acc: acceleration(bg, z0.l, z0.r),
    };
    let mut out = Vec::with_capacity(n);
    out.push(*z0);
    for _ in 1..n {
        for _ in 0..sub {
            z = step(bg, z0.l, z, dt, stages)?;
        }
        out.push(z0.with(z.r, z.w));
    }
    Ok(out)
}

/// Step control for [`radial_period_by_integration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    /// Steps per estimated period (and per pericentre passage).
    pub steps_per_period: usize,
    pub integrator: Integrator,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 2000,
            integrator: Integrator::Yoshida6,
        }
    }
}

/// Result of integrating one radial oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOscillation {
    pub period: f64,
    /// Radius at the first return `w = 0` (the outer turning point).
    pub r_outer: f64,
    /// Radius at the second return (back at the inner turning point).
    pub r_inner: f64,
    pub steps: usize,
}

/// Step size for integrating the orbit class `tp`: the smaller of
/// `T_est / n` and `2 pi r_-^2 / sqrt(L) / n`, the latter resolving the
/// pericentre passage of eccentric orbits.
pub fn orbit_step(tp: &TurningPoints, period_estimate: f64, n: usize) -> f64 {
    let n = n.max(8) as f64;
    let pericentre = 2.0 * PI * tp.r_minus * tp.r_minus / sqrt(tp.l);
    period_estimate.min(pericentre) / n
}

/// Radial period from `(r_-, 0)` to the second sign change of `w`.
///
/// Crossing times are refined with a cubic Hermite model of `w(t)` (slope
/// `w' = -psi_L'`) on the bracketing step, and the turning radii with a cubic
/// Hermite model of `r(t)` (slope `w`).
pub fn radial_period_by_integration<B: Background + ?Sized>(
    bg: &B,
    energy: f64,
    l: f64,
    options: &PeriodOptions,
) -> Result<RadialOscillation> {
    let tp = find_turning_points(bg, energy, l)?;
    // A coarse quadrature fixes the step size only.
    let estimate = crate::period::period_quadrature_at(bg, &tp, 16);
    let h = orbit_step(&tp, estimate, options.steps_per_period);
    oscillation_from(bg, &tp, h, options.integrator, 4.0 * estimate)
}

pub(crate) fn oscillation_from<B: Background + ?Sized>(
    bg: &B,
    tp: &TurningPoints,
    h: f64,
    integrator: Integrator,
    t_limit: f64,
) -> Result<RadialOscillation> {
    let l = tp.l;
    let stages = integrator.stages();
    let mut z = Phase {
        r: tp.r_minus,
        w: 0.0,
        acc: acceleration(bg, l, tp.r_minus),
    };
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut outer = None;
    // The first step leaves the turning point with w > 0.
    loop {
        let next = step(bg, l, z, h, stages)?;
        steps += 1;
        let crossed = match outer {
            None => z.w > 0.0 && next.w <= 0.0,
            Some(_) => z.w < 0.0 && next.w >= 0.0,
        };
        if crossed && steps > 1 {
            let (tau, r_turn) = refine_crossing(&z, &next, h);
            match outer {
                None => outer = Some(r_turn),
                Some(r_outer) => {
                    return Ok(RadialOscillation {
                        period: t + tau,
                        r_outer,
                        r_inner: r_turn,
                        steps,
                    });
                }
            }
        }
        t += h;
        z = next;
        if t > t_limit {
            return Err(Error::StepTooCoarse { r: z.r });
        }
    }
}

/// Time offset of the `w = 0` crossing inside a step, and `r` there.
fn refine_crossing(a: &Phase, b: &Phase, h: f64) -> (f64, f64) {
    let w_at = |s: f64| cubic_hermite(a.w, b.w, a.acc * h, b.acc * h, s);
    let (mut lo, mut hi) = (0.0, 1.0);
    let negative_first = a.w < 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let wm = w_at(mid);
        if (wm < 0.0) == negative_first {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    (s * h, cubic_hermite(a.r, b.r, a.w * h, b.w * h, s))
}

#[inline]
fn cubic_hermite(y0: f64, y1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * d1
}

/// `|det D(R, W)/D(r, w) - 1|` from central differences with relative
/// perturbation `fd_eps`.
pub fn flow_map_area_defect<B: Background + ?Sized>(
    bg: &B,
    z0: &OrbitState,
    t: f64,
    h: f64,
    fd_eps: f64,
    integrator: Integrator,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let dr = fd_eps * z0.r;
    let dw = fd_eps * sqrt(2.0 * z0.energy.abs()).max(z0.w.abs());
    let image = |r: f64, w: f64| -> Result<(f64, f64)> {
        let z = flow(bg, &z0.with(r, w), t, h, integrator)?;
        Ok((z.r, z.w))
    };
    let (rp, wp) = image(z0.r + dr, z0.w)?;
    let (rm, wm) = image(z0.r - dr, z0.w)?;
    let (rq, wq) = image(z0.r, z0.w + dw)?;
    let (rn, wn) = image(z0.r, z0.w - dw)?;
    let a = (rp - rm) / (2.0 * dr);
    let b = (rq - rn) / (2.0 * dw);
    let c = (wp - wm) / (2.0 * dr);
    let d = (wq - wn) / (2.0 * dw);
    Ok((a * d - b * c - 1.0).abs())
}
