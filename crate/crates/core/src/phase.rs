//! Functions on the reduced phase space `(r, w, L)`.
//!
//! Spherically symmetric functions of `(x, v)` are written as functions of
//! the radius `r = |x|`, the radial velocity `w = x.v / r` and the squared
//! angular momentum `L = |x x v|^2`. The volume element transforms as
//! `dx dv = 4 pi^2 dr dw dL`.

use crate::ansatz::Ansatz;
use crate::effective::{psi_prime_unchecked, psi_unchecked};
use crate::error::Result;
use crate::math::{exp, sqrt};
use crate::orbit::{self, Integrator, OrbitState};
use crate::roots::bisect;
use crate::steady_state::{Background, PointMass, SteadyState};

/// Closed interval, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn everything() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn intersect(self, other: Self) -> Self {
        Self::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(self, other: Self) -> Self {
        Self::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn is_empty(self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn is_bounded(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Where a phase function may be non-zero: a box in `(r, w, L)` intersected
/// with the energy sublevel set `E <= energy_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub r: Interval,
    pub w: Interval,
    pub l: Interval,
    pub energy_max: f64,
}

impl Default for Support {
    fn default() -> Self {
        Self::everywhere()
    }
}

impl Support {
    pub const fn everywhere() -> Self {
        Self {
            r: Interval::everything(),
            w: Interval::everything(),
            l: Interval::everything(),
            energy_max: f64::INFINITY,
        }
    }

    /// Support of a product.
    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            r: self.r.intersect(other.r),
            w: self.w.intersect(other.w),
            l: self.l.intersect(other.l),
            energy_max: self.energy_max.min(other.energy_max),
        }
    }

    /// Support of a sum.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            r: self.r.hull(other.r),
            w: self.w.hull(other.w),
            l: self.l.hull(other.l),
            energy_max: self.energy_max.max(other.energy_max),
        }
    }

    /// What survives transport along characteristics, which conserve `E`
    /// and `L` but move `r` and `w`.
    pub fn invariant_part(&self) -> Self {
        Self {
            r: Interval::everything(),
            w: Interval::everything(),
            ..*self
        }
    }

    /// Distance of the energy bound below the cutoff, if the bound is finite.
    pub fn energy_margin(&self, cutoff: f64) -> Option<f64> {
        if self.energy_max.is_finite() {
            Some(cutoff - self.energy_max)
        } else {
            None
        }
    }

    pub fn contains(&self, r: f64, w: f64, l: f64) -> bool {
        self.r.contains(r) && self.w.contains(w) && self.l.contains(l)
    }
}

/// A function `f(r, w, L)`, optionally with analytic partials.
pub trait PhaseFunction {
    fn value(&self, r: f64, w: f64, l: f64) -> f64;

    /// `[df/dr, df/dw]`, if available.
    fn partials(&self, _r: f64, _w: f64, _l: f64) -> Option<[f64; 2]> {
        None
    }

    fn has_partials(&self) -> bool {
        false
    }

    fn support(&self) -> Support {
        Support::everywhere()
    }
}

impl<F: PhaseFunction + ?Sized> PhaseFunction for &F {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        (**self).value(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        (**self).partials(r, w, l)
    }
    fn has_partials(&self) -> bool {
        (**self).has_partials()
    }
    fn support(&self) -> Support {
        (**self).support()
    }
}

/// The particle energy and the geometry of `S0^r` for a steady state.
pub trait PhaseSpace {
    fn ansatz(&self) -> &Ansatz;

    fn cutoff(&self) -> f64 {
        self.ansatz().cutoff()
    }

    /// Particle energy `E^r(r, w, L)`.
    fn energy(&self, r: f64, w: f64, l: f64) -> f64;

    /// `[dE/dr, dE/dw]`.
    fn energy_gradient(&self, r: f64, w: f64, l: f64) -> [f64; 2];

    /// Factor in front of the Poisson bracket in the transport operator
    /// (`e^(-lambda)` relativistically).
    fn transport_factor(&self, _r: f64) -> f64 {
        1.0
    }

    /// Extra density of the invariant measure (`e^(lambda)` relativistically).
    fn measure_factor(&self, _r: f64) -> f64 {
        1.0
    }

    /// Smallest radius beyond which `E > e` for every `(w, L)`.
    fn radial_reach(&self, e: f64) -> f64;

    /// Largest `L` with `E(r, 0, L) <= e`, or zero.
    fn l_reach(&self, r: f64, e: f64) -> f64;

    /// Largest `|w|` with `E(r, w, L) <= e`, or zero.
    fn w_reach(&self, r: f64, l: f64, e: f64) -> f64;

    /// Upper bound of `E` over the box `r in [r_lo, r_hi]`, `|w| <= w_abs`,
    /// `0 < L <= l_hi`.
    fn box_energy_bound(&self, r: Interval, w_abs: f64, l_hi: f64) -> f64;

    /// Integrates the characteristic flow of the transport operator for a
    /// time `t` with steps of size at most `h`.
    fn characteristic_flow(&self, r: f64, w: f64, l: f64, t: f64, h: f64) -> Result<(f64, f64)>;
}

macro_rules! newtonian_phase_space {
    ($($ty:ty),*) => {$(
        impl PhaseSpace for $ty {
            fn ansatz(&self) -> &Ansatz {
                Background::ansatz(self)
            }

            fn energy(&self, r: f64, w: f64, l: f64) -> f64 {
                0.5 * w * w + psi_unchecked(self, l, r)
            }

            fn energy_gradient(&self, r: f64, w: f64, l: f64) -> [f64; 2] {
                [psi_prime_unchecked(self, l, r), w]
            }

            fn radial_reach(&self, e: f64) -> f64 {
                newtonian_radial_reach(self, e)
            }

            fn l_reach(&self, r: f64, e: f64) -> f64 {
                (2.0 * r * r * (e - self.potential(r))).max(0.0)
            }

            fn w_reach(&self, r: f64, l: f64, e: f64) -> f64 {
                sqrt((2.0 * (e - psi_unchecked(self, l, r))).max(0.0))
            }

            fn box_energy_bound(&self, r: Interval, w_abs: f64, l_hi: f64) -> f64 {
                // psi_L has a single minimum in r and grows with L, so the
                // maximum over the box sits at a corner.
                let at = |x: f64| psi_unchecked(self, l_hi.max(0.0), x);
                0.5 * w_abs * w_abs + at(r.lo).max(at(r.hi))
            }

            fn characteristic_flow(
                &self,
                r: f64,
                w: f64,
                l: f64,
                t: f64,
                h: f64,
            ) -> Result<(f64, f64)> {
                let z = OrbitState::new(self, r, w, l)?;
                let z = orbit::flow(self, &z, t, h, Integrator::Yoshida6)?;
                Ok((z.r, z.w))
            }
        }
    )*};
}

newtonian_phase_space!(SteadyState, PointMass);

fn newtonian_radial_reach<B: Background + ?Sized>(bg: &B, e: f64) -> f64 {
    if e >= 0.0 {
        return f64::INFINITY;
    }
    let m = bg.total_mass();
    let outside = -m / e;
    let radius = bg.support_radius();
    if outside >= radius {
        return outside;
    }
    if bg.potential(0.0) >= e {
        return 0.0;
    }
    bisect(|r| bg.potential(r) - e, 0.0, radius, 1e-15).unwrap_or(radius)
}

/// `exp(1 - 1/(1 - s^2))` on `|s| < 1`, with its derivative; the peak
/// value is one.
#[inline]
pub fn unit_bump(s: f64) -> (f64, f64) {
    if !(s.abs() < 1.0) {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = exp(1.0 - 1.0 / q);
    (v, -2.0 * s * v / (q * q))
}

/// [`unit_bump`] rescaled to `[lo, hi]`, with its derivative in `x`.
#[inline]
pub fn interval_bump(x: f64, iv: Interval) -> (f64, f64) {
    let half = 0.5 * (iv.hi - iv.lo);
    let (v, d) = unit_bump((x - 0.5 * (iv.lo + iv.hi)) / half);
    (v, d / half)
}

/// `A b_r(r) b_w(w) b_L(L)` for smooth bumps on the given intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBump {
    pub r: Interval,
    pub w: Interval,
    pub l: Interval,
    pub amplitude: f64,
    energy_max: f64,
}

impl BoxBump {
    pub fn new(r: Interval, w: Interval, l: Interval, amplitude: f64) -> Self {
        Self {
            r,
            w,
            l,
            amplitude,
            energy_max: f64::INFINITY,
        }
    }

    /// Records an upper bound of the particle energy on the box, so that
    /// integrals can stop short of the cutoff.
    pub fn certified<S: PhaseSpace + ?Sized>(mut self, space: &S) -> Self {
        let w_abs = self.w.lo.abs().max(self.w.hi.abs());
        self.energy_max = space.box_energy_bound(self.r, w_abs, self.l.hi);
        self
    }
}

impl PhaseFunction for BoxBump {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.amplitude
            * interval_bump(r, self.r).0
            * interval_bump(w, self.w).0
            * interval_bump(l, self.l).0
    }

    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let (br, dbr) = interval_bump(r, self.r);
        let (bw, dbw) = interval_bump(w, self.w);
        let bl = self.amplitude * interval_bump(l, self.l).0;
        Some([dbr * bw * bl, br * dbw * bl])
    }

    fn has_partials(&self) -> bool {
        true
    }

    fn support(&self) -> Support {
        Support {
            r: self.r,
            w: self.w,
            l: self.l,
            energy_max: self.energy_max,
        }
    }
}

/// `h(E, L) = A b_E(E) b_L(L)`, a member of the kernel of the transport
/// operator.
#[derive(Debug)]
pub struct EnergyBump<'a, S: ?Sized> {
    space: &'a S,
    pub e: Interval,
    pub l: Interval,
    pub amplitude: f64,
}

impl<S: ?Sized> Clone for EnergyBump<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: ?Sized> Copy for EnergyBump<'_, S> {}

impl<'a, S: PhaseSpace + ?Sized> EnergyBump<'a, S> {
    pub fn new(space: &'a S, e: Interval, l: Interval, amplitude: f64) -> Self {
        Self {
            space,
            e,
            l,
            amplitude,
        }
    }

    /// `h` and `dh/dE` at `(E, L)`.
    pub fn profile(&self, e: f64, l: f64) -> (f64, f64) {
        let (be, dbe) = interval_bump(e, self.e);
        let bl = self.amplitude * interval_bump(l, self.l).0;
        (be * bl, dbe * bl)
    }
}

impl<S: PhaseSpace + ?Sized> PhaseFunction for EnergyBump<'_, S> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.profile(self.space.energy(r, w, l), l).0
    }

    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let (_, dh) = self.profile(self.space.energy(r, w, l), l);
        let [er, ew] = self.space.energy_gradient(r, w, l);
        Some([dh * er, dh * ew])
    }

    fn has_partials(&self) -> bool {
        true
    }

    fn support(&self) -> Support {
        Support {
            l: self.l,
            energy_max: self.e.hi,
            ..Support::everywhere()
        }
    }
}

/// The coordinate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Radius;

impl PhaseFunction for Radius {
    fn value(&self, r: f64, _w: f64, _l: f64) -> f64 {
        r
    }
    fn partials(&self, _r: f64, _w: f64, _l: f64) -> Option<[f64; 2]> {
        Some([1.0, 0.0])
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// The coordinate `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RadialVelocity;

impl PhaseFunction for RadialVelocity {
    fn value(&self, _r: f64, w: f64, _l: f64) -> f64 {
        w
    }
    fn partials(&self, _r: f64, _w: f64, _l: f64) -> Option<[f64; 2]> {
        Some([0.0, 1.0])
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// The coordinate `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AngularMomentum;

impl PhaseFunction for AngularMomentum {
    fn value(&self, _r: f64, _w: f64, l: f64) -> f64 {
        l
    }
    fn partials(&self, _r: f64, _w: f64, _l: f64) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// A constant function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl PhaseFunction for Constant {
    fn value(&self, _r: f64, _w: f64, _l: f64) -> f64 {
        self.0
    }
    fn partials(&self, _r: f64, _w: f64, _l: f64) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
    fn has_partials(&self) -> bool {
        true
    }
    fn support(&self) -> Support {
        if self.0 == 0.0 {
            Support {
                r: Interval::new(0.0, 0.0),
                ..Support::everywhere()
            }
        } else {
            Support::everywhere()
        }
    }
}

/// The particle energy `E^r` as a phase function.
#[derive(Debug, Clone, Copy)]
pub struct Energy<'a, S: ?Sized>(pub &'a S);

impl<S: PhaseSpace + ?Sized> PhaseFunction for Energy<'_, S> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.0.energy(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        Some(self.0.energy_gradient(r, w, l))
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// Pointwise product `f g`.
#[derive(Debug, Clone, Copy)]
pub struct Product<F, G>(pub F, pub G);

impl<F: PhaseFunction, G: PhaseFunction> PhaseFunction for Product<F, G> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.0.value(r, w, l) * self.1.value(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let [fr, fw] = self.0.partials(r, w, l)?;
        let [gr, gw] = self.1.partials(r, w, l)?;
        let f = self.0.value(r, w, l);
        let g = self.1.value(r, w, l);
        Some([fr * g + f * gr, fw * g + f * gw])
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials() && self.1.has_partials()
    }
    fn support(&self) -> Support {
        self.0.support().intersect(&self.1.support())
    }
}

/// `a f + b g`.
#[derive(Debug, Clone, Copy)]
pub struct Combination<F, G> {
    pub a: f64,
    pub f: F,
    pub b: f64,
    pub g: G,
}

impl<F: PhaseFunction, G: PhaseFunction> PhaseFunction for Combination<F, G> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.a * self.f.value(r, w, l) + self.b * self.g.value(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let [fr, fw] = self.f.partials(r, w, l)?;
        let [gr, gw] = self.g.partials(r, w, l)?;
        Some([self.a * fr + self.b * gr, self.a * fw + self.b * gw])
    }
    fn has_partials(&self) -> bool {
        self.f.has_partials() && self.g.has_partials()
    }
    fn support(&self) -> Support {
        self.f.support().hull(&self.g.support())
    }
}

/// `chi(L) f` for a function `chi` of the angular momentum alone.
#[derive(Debug, Clone, Copy)]
pub struct LMultiplier<F, C> {
    pub chi: C,
    pub f: F,
}

impl<F: PhaseFunction, C: Fn(f64) -> f64> PhaseFunction for LMultiplier<F, C> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        (self.chi)(l) * self.f.value(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let [fr, fw] = self.f.partials(r, w, l)?;
        let c = (self.chi)(l);
        Some([c * fr, c * fw])
    }
    fn has_partials(&self) -> bool {
        self.f.has_partials()
    }
    fn support(&self) -> Support {
        self.f.support()
    }
}

/// `chi(E^r) f`; `chi` returns the value and derivative.
#[derive(Debug, Clone, Copy)]
pub struct EMultiplier<'a, S: ?Sized, F, C> {
    pub space: &'a S,
    pub chi: C,
    pub f: F,
}

impl<S, F, C> PhaseFunction for EMultiplier<'_, S, F, C>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
    C: Fn(f64) -> (f64, f64),
{
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        (self.chi)(self.space.energy(r, w, l)).0 * self.f.value(r, w, l)
    }
    fn partials(&self, r: f64, w: f64, l: f64) -> Option<[f64; 2]> {
        let [fr, fw] = self.f.partials(r, w, l)?;
        let (c, dc) = (self.chi)(self.space.energy(r, w, l));
        let [er, ew] = self.space.energy_gradient(r, w, l);
        let f = self.f.value(r, w, l);
        Some([dc * er * f + c * fr, dc * ew * f + c * fw])
    }
    fn has_partials(&self) -> bool {
        self.f.has_partials()
    }
    fn support(&self) -> Support {
        self.f.support()
    }
}
