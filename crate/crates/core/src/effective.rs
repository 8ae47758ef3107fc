//! Effective potential `psi_L(r) = U0(r) + L / (2 r^2)` of the radial motion
//! at fixed squared angular momentum `L`.
//!
//! `psi_L` decreases on `(0, r_L)` and increases on `(r_L, oo)`, where `r_L`
//! is the unique solution of `m0(r) = L / r`. For `psi_L(r_L) < E < 0` the
//! equation `psi_L(r) = E` has exactly two roots `r_- < r_L < r_+`.

use crate::error::{Error, Result};
use crate::math::{sqrt, PI};
use crate::roots::{bisect, newton_bracketed};
use crate::steady_state::Background;

/// Turning-point data of one class of bound radial orbits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub energy: f64,
    pub l: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub r_l: f64,
    pub psi_min: f64,
}

impl TurningPoints {
    /// Width of the radial oscillation.
    pub fn width(&self) -> f64 {
        self.r_plus - self.r_minus
    }
}

#[inline]
pub(crate) fn psi_unchecked<B: Background + ?Sized>(bg: &B, l: f64, r: f64) -> f64 {
    bg.potential(r) + l / (2.0 * r * r)
}

#[inline]
pub(crate) fn psi_prime_unchecked<B: Background + ?Sized>(bg: &B, l: f64, r: f64) -> f64 {
    (bg.mass_within(r) - l / r) / (r * r)
}

/// `psi_L(r)`.
pub fn psi<B: Background + ?Sized>(bg: &B, l: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("r", r, "effective potential needs r > 0"));
    }
    Ok(psi_unchecked(bg, l, r))
}

/// `psi_L'(r) = (m0(r) - L/r) / r^2`.
pub fn psi_prime<B: Background + ?Sized>(bg: &B, l: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("r", r, "effective potential needs r > 0"));
    }
    Ok(psi_prime_unchecked(bg, l, r))
}

/// The minimiser `r_L` of `psi_L`, i.e. the root of `m0(r) r = L`.
pub fn find_r_l<B: Background + ?Sized>(bg: &B, l: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain("L", l, "angular momentum must be positive"));
    }
    let m_total = bg.total_mass();
    let keplerian = l / m_total;
    let radius = bg.support_radius();
    // Outside the support m0 = M0, so the root is explicit there.
    if keplerian >= radius {
        return Ok(keplerian);
    }
    newton_bracketed(
        |r| {
            let m = bg.mass_within(r);
            (m * r - l, m + 4.0 * PI * r * r * r * bg.density(r))
        },
        keplerian,
        radius,
        1e-15,
    )
}

/// Largest `L` with `psi_L(r_L) <= energy`, i.e. the angular momentum of
/// the circular orbit of energy `energy`.
///
/// `psi_L(r_L)` increases with `L` (its derivative is `1 / (2 r_L^2)`), from
/// `U0(0)` at `L = 0` towards zero, and is bounded below by `-M0^2 / (2L)`.
pub fn circular_angular_momentum<B: Background + ?Sized>(bg: &B, energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::UnboundOrbit { energy });
    }
    let m_total = bg.total_mass();
    let hi = -m_total * m_total / (2.0 * energy);
    let floor = |l: f64| -> f64 {
        match find_r_l(bg, l) {
            Ok(r_l) => psi_unchecked(bg, l, r_l) - energy,
            Err(_) => f64::NAN,
        }
    };
    let mut lo = hi * 1e-3;
    while floor(lo) >= 0.0 {
        lo *= 1e-3;
        if lo < hi * 1e-300 {
            return Err(Error::DegenerateOrbit {
                energy,
                psi_min: bg.potential(0.0),
            });
        }
    }
    if floor(hi) <= 0.0 {
        return Ok(hi);
    }
    bisect(floor, lo, hi, 1e-15)
}

/// Turning points `r_-(E, L) < r_L < r_+(E, L)`.
pub fn find_turning_points<B: Background + ?Sized>(
    bg: &B,
    energy: f64,
    l: f64,
) -> Result<TurningPoints> {
    if !(energy < 0.0) {
        return Err(Error::UnboundOrbit { energy });
    }
    let r_l = find_r_l(bg, l)?;
    let psi_min = psi_unchecked(bg, l, r_l);
    if !(energy > psi_min) {
        return Err(Error::DegenerateOrbit { energy, psi_min });
    }
    let m_total = bg.total_mass();
    let g = |r: f64| psi_unchecked(bg, l, r) - energy;
    let g_newton = |r: f64| (g(r), psi_prime_unchecked(bg, l, r));

    // psi_L >= -M0/r + L/(2r^2); the smaller root of the right-hand side
    // equal to E lies below r_-.
    let disc = sqrt((m_total * m_total + 2.0 * energy * l).max(0.0));
    let mut lo = (l / (m_total + disc)).min(r_l) * (1.0 - 1e-9);
    while g(lo) <= 0.0 {
        lo *= 0.5;
    }
    let r_minus = newton_bracketed(g_newton, lo, r_l, 1e-15)?;

    let mut hi = -m_total / energy;
    if hi <= r_l {
        hi = 2.0 * r_l;
    }
    while g(hi) <= 0.0 {
        hi *= 1.0 + 1e-9;
        if hi.is_infinite() {
            return Err(Error::UnboundOrbit { energy });
        }
    }
    let r_plus = newton_bracketed(g_newton, r_l, hi, 1e-15)?;
    Ok(TurningPoints {
        energy,
        l,
        r_minus,
        r_plus,
        r_l,
        psi_min,
    })
}

/// Both sides of the concavity estimate
/// `E - psi_L(r) >= L (r_+ - r)(r - r_-) / (2 r^2 r_- r_+)` on `[r_-, r_+]`.
pub fn concavity_bound<B: Background + ?Sized>(
    bg: &B,
    tp: &TurningPoints,
    r: f64,
) -> Result<(f64, f64)> {
    if !(r >= tp.r_minus && r <= tp.r_plus) {
        return Err(Error::domain("r", r, "must lie between the turning points"));
    }
    let lhs = tp.energy - psi_unchecked(bg, tp.l, r);
    let rhs = tp.l * (tp.r_plus - r) * (r - tp.r_minus) / (2.0 * r * r * tp.r_minus * tp.r_plus);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::{PointMass, SolverOptions, SteadyState};
    use crate::{Ansatz, Regime};
    use approx::assert_relative_eq;

    fn kepler() -> PointMass {
        PointMass::unit(-0.1).unwrap()
    }

    fn polytrope() -> SteadyState {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        SteadyState::solve(a, 1.0, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn psi_closed_forms() {
        let p = kepler();
        assert_eq!(psi(&p, 1.0, 1.0).unwrap(), -0.5);
        assert_eq!(psi(&p, 0.0, 2.0).unwrap(), -0.5);
        assert!(psi(&p, 1.0, 1e-8).unwrap() > 1e15);
        assert!(psi(&p, 1.0, 0.0).is_err());
        assert_eq!(psi_prime(&p, 1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(psi_prime(&p, 1.0, 2.0).unwrap(), 0.25 - 0.125);
        assert!(psi_prime(&p, 1.0, -1.0).is_err());
    }

    #[test]
    fn r_l_point_mass_and_fixed_point() {
        let p = kepler();
        for l in [0.01, 0.3, 1.0, 7.0] {
            assert_relative_eq!(find_r_l(&p, l).unwrap(), l, max_relative = 1e-15);
        }
        assert!(find_r_l(&p, 0.0).is_err());
        let s = polytrope();
        let m = s.total_mass();
        let radius = s.radius();
        for frac in [1e-3, 0.05, 0.3, 0.9, 2.0] {
            let l = frac * m * radius;
            let r_l = find_r_l(&s, l).unwrap();
            assert_relative_eq!(r_l, l / s.mass_within(r_l), max_relative = 1e-10);
            assert!(psi_prime(&s, l, r_l).unwrap().abs() < 1e-10 * m / (r_l * r_l));
        }
    }

    #[test]
    fn r_l_is_monotone_and_matches_scan() {
        let s = polytrope();
        let scale = s.total_mass() * s.radius();
        let mut prev = 0.0;
        for i in 1..=20 {
            let l = scale * i as f64 / 25.0;
            let r_l = find_r_l(&s, l).unwrap();
            assert!(r_l > prev);
            prev = r_l;
            // Dense scan for the sign change of m0(r) r - L.
            let n = 20_000;
            let top = 2.0 * s.radius();
            let idx = (1..=n)
                .find(|&j| s.mass_within(top * j as f64 / n as f64) * top * j as f64 / n as f64 > l)
                .unwrap();
            let hi = top * idx as f64 / n as f64;
            assert!(r_l <= hi && r_l >= hi - top / n as f64);
        }
    }

    #[test]
    fn kepler_turning_points() {
        let p = kepler();
        let tp = find_turning_points(&p, -0.5, 0.5).unwrap();
        let s = sqrt(0.5);
        assert_relative_eq!(tp.r_minus, 0.5 / (1.0 + s), max_relative = 1e-14);
        assert_relative_eq!(tp.r_plus, 0.5 / (1.0 - s), max_relative = 1e-14);
        assert_relative_eq!(tp.r_minus, 0.292_893_218_813_452_4, max_relative = 1e-12);
        assert_relative_eq!(tp.r_plus, 1.707_106_781_186_547_5, max_relative = 1e-12);
        assert!(tp.r_plus < 2.0);
    }

    #[test]
    fn orbit_errors() {
        let p = kepler();
        assert!(matches!(
            find_turning_points(&p, 0.0, 0.5),
            Err(Error::UnboundOrbit { .. })
        ));
        // psi_min = -M^2 / (2L) = -1 for L = 1/2.
        assert!(matches!(
            find_turning_points(&p, -1.0, 0.5),
            Err(Error::DegenerateOrbit { .. })
        ));
    }

    #[test]
    fn near_circular_orbits_shrink_to_r_l() {
        let p = kepler();
        let l = 0.5;
        let psi_min = -1.0;
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let tp = find_turning_points(&p, psi_min + eps, l).unwrap();
            assert!(tp.width() < prev);
            prev = tp.width();
            assert!(tp.r_minus < tp.r_l && tp.r_l < tp.r_plus);
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn circular_angular_momentum_inverts_psi_min() {
        let p = kepler();
        // Kepler: psi_min(L) = -M^2 / (2L).
        assert_relative_eq!(circular_angular_momentum(&p, -0.25).unwrap(), 2.0, max_relative = 1e-14);
        let s = polytrope();
        let e0 = s.cutoff_energy();
        let l_top = circular_angular_momentum(&s, e0).unwrap();
        let r_l = find_r_l(&s, l_top).unwrap();
        assert_relative_eq!(psi(&s, l_top, r_l).unwrap(), e0, max_relative = 1e-12);
        assert!(circular_angular_momentum(&s, 0.1).is_err());
    }

    #[test]
    fn turning_points_on_polytrope_grid() {
        let s = polytrope();
        let m = s.total_mass();
        let e0 = s.cutoff_energy();
        let l_top = circular_angular_momentum(&s, e0).unwrap();
        for i in 0..20 {
            let l = l_top * (i as f64 + 0.5) / 20.0;
            let r_l = find_r_l(&s, l).unwrap();
            let psi_min = psi(&s, l, r_l).unwrap();
            for j in 0..20 {
                let e = psi_min + (e0 - psi_min) * (j as f64 + 0.5) / 20.0;
                let tp = find_turning_points(&s, e, l).unwrap();
                assert!(tp.r_minus < tp.r_l && tp.r_l < tp.r_plus);
                assert!(tp.r_plus < -m / e);
                for r in [tp.r_minus, tp.r_plus] {
                    assert!((psi(&s, l, r).unwrap() - e).abs() <= 1e-10 * e.abs());
                }
                for q in 1..10 {
                    let r = tp.r_minus + tp.width() * q as f64 / 10.0;
                    assert!(psi(&s, l, r).unwrap() < e);
                }
                assert!(psi(&s, l, 0.99 * tp.r_minus).unwrap() > e);
                assert!(psi(&s, l, 1.01 * tp.r_plus).unwrap() > e);
            }
        }
    }

    #[test]
    fn r_l_is_the_argmin() {
        let s = polytrope();
        let l = 0.3 * s.total_mass() * s.radius();
        let r_l = find_r_l(&s, l).unwrap();
        let floor = psi(&s, l, r_l).unwrap();
        for i in 0..100 {
            let r = r_l * crate::math::powf(10.0, -2.0 + 4.0 * i as f64 / 99.0);
            assert!(psi(&s, l, r).unwrap() >= floor);
        }
    }

    #[test]
    fn concavity_is_equality_for_point_mass() {
        let p = kepler();
        let tp = find_turning_points(&p, -0.4, 0.7).unwrap();
        for (lhs, rhs) in [tp.r_minus, tp.r_plus].map(|r| concavity_bound(&p, &tp, r).unwrap()) {
            assert!(lhs.abs() < 1e-14 && rhs.abs() < 1e-14);
        }
        for i in 1..50 {
            let r = tp.r_minus + tp.width() * i as f64 / 50.0;
            let (lhs, rhs) = concavity_bound(&p, &tp, r).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
        assert!(concavity_bound(&p, &tp, 0.5 * tp.r_minus).is_err());
    }

    #[test]
    fn concavity_holds_on_polytrope() {
        let s = polytrope();
        let e0 = s.cutoff_energy();
        let l_top = circular_angular_momentum(&s, e0).unwrap();
        for l in [0.01, 0.3, 0.9].map(|f| f * l_top) {
            let r_l = find_r_l(&s, l).unwrap();
            let psi_min = psi(&s, l, r_l).unwrap();
            for frac in [0.1, 0.5, 0.95] {
                let tp = find_turning_points(&s, psi_min + frac * (e0 - psi_min), l).unwrap();
                for i in 0..50 {
                    let x = crate::math::cos(crate::math::PI * (i as f64 + 0.5) / 50.0);
                    let r = tp.r_minus + 0.5 * (1.0 - x) * tp.width();
                    let (lhs, rhs) = concavity_bound(&s, &tp, r).unwrap();
                    assert!(lhs - rhs >= -1e-10, "{lhs} < {rhs}");
                }
            }
        }
    }
}
